#pragma once

#include "semsig/error.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace semsig {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// n x d real features, one sample per row.
using FeatureMatrix = Eigen::MatrixXd;

/// n x B entries in {-1, +1}, one signature per row.
using SignatureMatrix = Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Signature = Eigen::Matrix<std::int8_t, 1, Eigen::Dynamic>;

using ClassId = std::int32_t;
using ItemId = std::uint64_t;
using Rng = std::mt19937_64;

/// sgn with sgn(0) := +1.
constexpr std::int8_t sign_bit(double v) noexcept { return v >= 0.0 ? std::int8_t{1} : std::int8_t{-1}; }

template <typename Derived>
SignatureMatrix sign_matrix(const Eigen::MatrixBase<Derived>& values)
{
    SignatureMatrix out(values.rows(), values.cols());
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        for (Eigen::Index j = 0; j < values.cols(); ++j) {
            out(i, j) = sign_bit(values(i, j));
        }
    }
    return out;
}

inline Matrix to_real(const SignatureMatrix& codes) { return codes.cast<double>(); }

/// Supervised labels kept both as class ids and as the n x c one-hot matrix Y.
class LabelMatrix {
public:
    LabelMatrix() = default;

    LabelMatrix(std::vector<ClassId> labels, ClassId num_classes)
        : labels_(std::move(labels))
        , num_classes_(num_classes)
    {
        detail::require(num_classes_ >= 1, ErrorKind::invalid_argument, "label matrix needs at least one class");
        for (ClassId l : labels_) {
            detail::require(l >= 0 && l < num_classes_, ErrorKind::validation_error,
                            "label " + std::to_string(l) + " outside [0, " + std::to_string(num_classes_) + ")");
        }
    }

    /// Accepts a dense one-hot matrix; every row must have exactly one 1.
    static LabelMatrix from_one_hot(const Matrix& y)
    {
        std::vector<ClassId> labels(static_cast<std::size_t>(y.rows()));
        for (Eigen::Index i = 0; i < y.rows(); ++i) {
            int hits = 0;
            for (Eigen::Index k = 0; k < y.cols(); ++k) {
                if (y(i, k) == 1.0) {
                    labels[static_cast<std::size_t>(i)] = static_cast<ClassId>(k);
                    ++hits;
                } else {
                    detail::require(y(i, k) == 0.0, ErrorKind::invalid_argument, "label matrix is not one-hot");
                }
            }
            detail::require(hits == 1, ErrorKind::invalid_argument,
                            "label row " + std::to_string(i) + " does not have exactly one class");
        }
        return LabelMatrix(std::move(labels), static_cast<ClassId>(y.cols()));
    }

    [[nodiscard]] Eigen::Index rows() const noexcept { return static_cast<Eigen::Index>(labels_.size()); }
    [[nodiscard]] ClassId num_classes() const noexcept { return num_classes_; }
    [[nodiscard]] ClassId operator[](Eigen::Index i) const { return labels_[static_cast<std::size_t>(i)]; }
    [[nodiscard]] const std::vector<ClassId>& labels() const noexcept { return labels_; }

    [[nodiscard]] Matrix one_hot() const
    {
        Matrix y = Matrix::Zero(rows(), num_classes_);
        for (Eigen::Index i = 0; i < rows(); ++i) {
            y(i, (*this)[i]) = 1.0;
        }
        return y;
    }

    [[nodiscard]] std::vector<Eigen::Index> class_counts() const
    {
        std::vector<Eigen::Index> counts(static_cast<std::size_t>(num_classes_), 0);
        for (ClassId l : labels_) {
            ++counts[static_cast<std::size_t>(l)];
        }
        return counts;
    }

    friend bool operator==(const LabelMatrix&, const LabelMatrix&) = default;

private:
    std::vector<ClassId> labels_;
    ClassId num_classes_ = 0;
};

/// Derives an independent sub-seed; used for per-row and per-cell streams.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept
{
    // splitmix64 finalizer over the combined key
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace semsig

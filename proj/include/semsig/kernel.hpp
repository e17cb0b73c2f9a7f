#pragma once

#include "semsig/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace semsig {

/// Anchor points and the RBF width used to build the nonlinear feature map.
struct AnchorSet {
    Matrix anchors; // m x d
    double width = 1.0;

    [[nodiscard]] Eigen::Index size() const noexcept { return anchors.rows(); }
    [[nodiscard]] Eigen::Index dim() const noexcept { return anchors.cols(); }
};

/// Median of ||x_i - a_j||^2 over all pairs with nonzero distance; 1.0 when every distance is zero.
inline double median_heuristic_width(const FeatureMatrix& x, const Matrix& anchors)
{
    detail::require(x.rows() >= 1 && anchors.rows() >= 1, ErrorKind::empty_input, "median width needs data and anchors");
    detail::require(x.cols() == anchors.cols(), ErrorKind::invalid_argument, "anchor dimension mismatch");

    std::vector<double> dists;
    dists.reserve(static_cast<std::size_t>(x.rows() * anchors.rows()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < anchors.rows(); ++j) {
            const double d2 = (x.row(i) - anchors.row(j)).squaredNorm();
            if (d2 > 0.0) {
                dists.push_back(d2);
            }
        }
    }
    if (dists.empty()) {
        return 1.0;
    }
    const auto mid = dists.size() / 2;
    std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid), dists.end());
    const double upper = dists[mid];
    if (dists.size() % 2 == 1) {
        return upper;
    }
    const double lower = *std::max_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

inline double median_heuristic_width(const FeatureMatrix& x, const AnchorSet& anchors)
{
    return median_heuristic_width(x, anchors.anchors);
}

/// Draws m distinct rows of x uniformly without replacement. The width is set by the median heuristic
/// unless `width_override` is positive.
inline AnchorSet select_anchors(const FeatureMatrix& x, Eigen::Index m, std::uint64_t seed, double width_override = 0.0)
{
    detail::require(x.rows() > 0, ErrorKind::empty_input, "cannot select anchors from an empty feature matrix");
    detail::require(m >= 1 && m <= x.rows(), ErrorKind::invalid_argument,
                    "anchor count " + std::to_string(m) + " must be in [1, " + std::to_string(x.rows()) + "]");

    std::vector<Eigen::Index> rows(static_cast<std::size_t>(x.rows()));
    std::iota(rows.begin(), rows.end(), Eigen::Index{0});
    Rng rng(seed);
    // partial Fisher-Yates
    for (Eigen::Index i = 0; i < m; ++i) {
        std::uniform_int_distribution<Eigen::Index> pick(i, x.rows() - 1);
        std::swap(rows[static_cast<std::size_t>(i)], rows[static_cast<std::size_t>(pick(rng))]);
    }

    AnchorSet out;
    out.anchors.resize(m, x.cols());
    for (Eigen::Index i = 0; i < m; ++i) {
        out.anchors.row(i) = x.row(rows[static_cast<std::size_t>(i)]);
    }
    out.width = width_override > 0.0 ? width_override : median_heuristic_width(x, out.anchors);
    return out;
}

/// phi_j(x) = exp(-||x - a_j||^2 / width)
template <typename Derived>
Vector rbf_map(const Eigen::MatrixBase<Derived>& x, const AnchorSet& anchors)
{
    detail::require(x.size() == anchors.dim(), ErrorKind::invalid_argument,
                    "feature dimension " + std::to_string(x.size()) + " does not match anchors ("
                        + std::to_string(anchors.dim()) + ")");
    Vector phi(anchors.size());
    for (Eigen::Index j = 0; j < anchors.size(); ++j) {
        double d2 = 0.0;
        for (Eigen::Index t = 0; t < anchors.dim(); ++t) {
            const double diff = x(t) - anchors.anchors(j, t);
            d2 += diff * diff;
        }
        phi(j) = std::exp(-d2 / anchors.width);
    }
    return phi;
}

/// Row-wise rbf_map; returns n x m.
inline Matrix rbf_map_rows(const FeatureMatrix& x, const AnchorSet& anchors)
{
    detail::require(x.cols() == anchors.dim(), ErrorKind::invalid_argument, "feature dimension does not match anchors");
    Matrix phi(x.rows(), anchors.size());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        phi.row(i) = rbf_map(x.row(i), anchors).transpose();
    }
    return phi;
}

/// argmin_S ||A S - T||^2 + lambda ||S||^2 via Cholesky of (A^T A + lambda I).
/// Optional row weights scale each squared residual row.
inline Matrix ridge_solve(const Matrix& a, const Matrix& t, double lambda, const Vector* row_weights = nullptr)
{
    detail::require(a.rows() == t.rows(), ErrorKind::invalid_argument, "ridge_solve: A and T row counts differ");
    detail::require(lambda >= 0.0 && std::isfinite(lambda), ErrorKind::invalid_argument, "ridge_solve: lambda must be >= 0");

    Matrix gram;
    Matrix rhs;
    if (row_weights != nullptr) {
        detail::require(row_weights->size() == a.rows(), ErrorKind::invalid_argument, "ridge_solve: weight count mismatch");
        const Matrix wa = row_weights->asDiagonal() * a;
        gram = a.transpose() * wa;
        rhs = wa.transpose() * t;
    } else {
        gram = a.transpose() * a;
        rhs = a.transpose() * t;
    }
    gram.diagonal().array() += lambda;

    Eigen::LLT<Matrix> llt(gram);
    const bool singular = llt.info() != Eigen::Success || (lambda == 0.0 && llt.rcond() < 1e-13);
    if (singular) {
        throw Error(ErrorKind::numerical_singularity, "ridge_solve: normal equations are singular");
    }
    return llt.solve(rhs);
}

} // namespace semsig

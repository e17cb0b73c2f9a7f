#pragma once

// Supervised discrete hashing: alternating W-step (classifier), Q-step
// (projection from RBF features to code space) and B-step (binary codes)
// under the penalized objective
//
//   (P'/nB) ||B - F(X)||^2 + (1/nB) ||B - YW||^2 + (alpha'/kB) ||W||^2,
//   alpha' = alpha k / n,  F(X) = phi(X) Q.
//
// Orientation is rows-are-samples: B is n x bits, Y is n x c, W is c x bits
// (row k holds the class weight vector w_k), phi is n x m, Q is m x bits.

#include "semsig/kernel.hpp"
#include "semsig/types.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

namespace semsig {

enum class LossKind { squared, hinge };

constexpr std::string_view to_string(LossKind k) noexcept { return k == LossKind::squared ? "squared" : "hinge"; }

inline LossKind parse_loss_kind(std::string_view s)
{
    if (s == "squared") {
        return LossKind::squared;
    }
    if (s == "hinge") {
        return LossKind::hinge;
    }
    throw Error(ErrorKind::invalid_argument, "unknown loss kind '" + std::string(s) + "'");
}

struct TrainConfig {
    int code_bits = 64;
    Eigen::Index anchor_count = 0; // 0 selects min(n, 1000)
    double alpha = 1.0;
    double penalty = 1e-4;
    int max_iters = 100;
    LossKind loss = LossKind::squared;
    double proj_lambda = 1e-6;
    double tol = 1e-8;
    std::uint64_t seed = 0;
    double kernel_width = 0.0; // 0 selects the median heuristic
    int max_bit_passes = 6;    // tau: outer passes are capped at tau (each pass updates all bits); 0 disables
    int hinge_passes = 5000; // cap on dual sweeps; the duality gap usually stops it far earlier

    void validate() const
    {
        detail::require(code_bits >= 1, ErrorKind::invalid_argument, "code_bits must be >= 1");
        detail::require(anchor_count >= 0, ErrorKind::invalid_argument, "anchor_count must be >= 0");
        detail::require(alpha > 0.0, ErrorKind::invalid_argument, "alpha must be > 0");
        detail::require(penalty > 0.0, ErrorKind::invalid_argument, "penalty must be > 0");
        detail::require(max_iters >= 1, ErrorKind::invalid_argument, "max_iters must be >= 1");
        detail::require(proj_lambda >= 0.0, ErrorKind::invalid_argument, "proj_lambda must be >= 0");
        detail::require(tol > 0.0, ErrorKind::invalid_argument, "tol must be > 0");
        detail::require(kernel_width >= 0.0, ErrorKind::invalid_argument, "kernel_width must be >= 0");
        detail::require(max_bit_passes >= 0, ErrorKind::invalid_argument, "max_bit_passes must be >= 0");
        detail::require(hinge_passes >= 1, ErrorKind::invalid_argument, "hinge_passes must be >= 1");
    }

    [[nodiscard]] Eigen::Index effective_anchor_count(Eigen::Index n) const
    {
        return anchor_count > 0 ? anchor_count : std::min<Eigen::Index>(n, 1000);
    }

    [[nodiscard]] int iteration_cap() const
    {
        return max_bit_passes > 0 ? std::min(max_iters, max_bit_passes) : max_iters;
    }
};

/// Everything needed to encode unseen inputs.
struct HashModel {
    AnchorSet anchors;
    Matrix projection; // Q, m x bits
    Matrix classifier; // W, c x bits
    TrainConfig config;

    [[nodiscard]] int code_bits() const noexcept { return static_cast<int>(projection.cols()); }
    [[nodiscard]] Eigen::Index num_classes() const noexcept { return classifier.rows(); }
    [[nodiscard]] Eigen::Index feature_dim() const noexcept { return anchors.dim(); }

    /// F(X) = phi(X) Q, one row per sample.
    [[nodiscard]] Matrix hash_values(const FeatureMatrix& x) const { return rbf_map_rows(x, anchors) * projection; }

    [[nodiscard]] SignatureMatrix encode_rows(const FeatureMatrix& x) const { return sign_matrix(hash_values(x)); }
};

/// sgn(Q^T phi(x)) with sgn(0) = +1.
template <typename Derived>
Signature encode(const HashModel& model, const Eigen::MatrixBase<Derived>& x)
{
    const Vector phi = rbf_map(x, model.anchors);
    const Eigen::RowVectorXd f = phi.transpose() * model.projection;
    return sign_matrix(f);
}

enum class TrainStatus { converged, max_iters };

constexpr std::string_view to_string(TrainStatus s) noexcept
{
    return s == TrainStatus::converged ? "converged" : "max-iters";
}

struct IterationRecord {
    int iteration = 0;
    double objective_after_w = 0.0;
    double objective_after_q = 0.0;
    double objective = 0.0; // after the B-step
    Eigen::Index bits_flipped = 0;
    double seconds = 0.0;
};

struct TrainTrace {
    double initial_objective = 0.0;
    std::vector<IterationRecord> iterations;
    TrainStatus status = TrainStatus::max_iters;

    [[nodiscard]] int bit_passes() const noexcept { return static_cast<int>(iterations.size()); }
};

struct TrainResult {
    HashModel model;
    SignatureMatrix codes;
    TrainTrace trace;
};

/// Independent fair +-1 entries.
inline SignatureMatrix init_codes(Eigen::Index n, int bits, std::uint64_t seed)
{
    detail::require(n >= 1 && bits >= 1, ErrorKind::invalid_argument, "init_codes needs n >= 1 and bits >= 1");
    Rng rng(seed);
    std::bernoulli_distribution coin(0.5);
    SignatureMatrix codes(n, bits);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < bits; ++j) {
            codes(i, j) = coin(rng) ? std::int8_t{1} : std::int8_t{-1};
        }
    }
    return codes;
}

/// W = (Y^T Y + alpha I)^{-1} Y^T B.
inline Matrix w_step_squared(const SignatureMatrix& codes, const LabelMatrix& y, double alpha)
{
    detail::require(codes.rows() == y.rows(), ErrorKind::invalid_argument, "w_step: codes and labels row counts differ");
    return ridge_solve(y.one_hot(), to_real(codes), alpha);
}

/// (alpha/2) ||W||^2 + sum_i max_k (1[k != y_i] + (w_k - w_{y_i}) . b_i)
inline double hinge_objective(const SignatureMatrix& codes, const LabelMatrix& y, const Matrix& w, double alpha)
{
    const Matrix scores = to_real(codes) * w.transpose(); // n x c
    double loss = 0.0;
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        const ClassId yi = y[i];
        double worst = 0.0;
        for (Eigen::Index k = 0; k < scores.cols(); ++k) {
            if (k != yi) {
                worst = std::max(worst, 1.0 + scores(i, k) - scores(i, yi));
            }
        }
        loss += worst;
    }
    return 0.5 * alpha * w.squaredNorm() + loss;
}

namespace detail {

// Exact minimizer of the per-sample Crammer-Singer dual subproblem
//   min 0.5 a sum_m x_m^2 + sum_m g_m x_m   s.t. sum_m x_m = 0, x_m <= bound_m,
// where bound is C for the true class and 0 otherwise.
inline void solve_cs_subproblem(double a, ClassId yi, double c_bound, const std::vector<double>& g,
                                std::vector<double>& out)
{
    const std::size_t k = g.size();
    std::vector<double> d = g;
    d[static_cast<std::size_t>(yi)] += a * c_bound;
    std::sort(d.begin(), d.end(), std::greater<>());
    double beta = d[0] - a * c_bound;
    std::size_t r = 1;
    for (; r < k && beta < static_cast<double>(r) * d[r]; ++r) {
        beta += d[r];
    }
    beta /= static_cast<double>(r);
    out.resize(k);
    for (std::size_t m = 0; m < k; ++m) {
        const double bound = m == static_cast<std::size_t>(yi) ? c_bound : 0.0;
        out[m] = std::min(bound, (beta - g[m]) / a);
    }
}

} // namespace detail

/// Multiclass (Crammer-Singer) linear SVM on the codes by dual coordinate descent.
/// Minimizes hinge_objective; C = 1 / alpha in the usual parameterization. Stops once the duality gap
/// falls below gap_tol times the primal value, or after max_passes sweeps.
inline Matrix w_step_hinge(const SignatureMatrix& codes, const LabelMatrix& y, double alpha, int max_passes,
                           std::uint64_t seed = 0, double gap_tol = 1e-3)
{
    detail::require(codes.rows() == y.rows(), ErrorKind::invalid_argument, "w_step: codes and labels row counts differ");
    detail::require(alpha > 0.0, ErrorKind::invalid_argument, "hinge w_step needs alpha > 0");
    const Eigen::Index n = codes.rows();
    const Eigen::Index bits = codes.cols();
    const Eigen::Index c = y.num_classes();
    const double c_bound = 1.0 / alpha;
    const Matrix x = to_real(codes);

    Matrix w = Matrix::Zero(c, bits);
    Matrix dual = Matrix::Zero(n, c);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    Rng rng(seed);

    std::vector<double> g(static_cast<std::size_t>(c));
    std::vector<double> b(static_cast<std::size_t>(c));
    std::vector<double> next;
    for (int pass = 0; pass < max_passes; ++pass) {
        std::shuffle(order.begin(), order.end(), rng);
        double max_violation = 0.0;
        for (Eigen::Index i : order) {
            const double a = x.row(i).squaredNorm();
            if (a <= 0.0) {
                continue;
            }
            const ClassId yi = y[i];
            double min_g = std::numeric_limits<double>::infinity();
            double max_g = -std::numeric_limits<double>::infinity();
            for (Eigen::Index m = 0; m < c; ++m) {
                const auto mi = static_cast<std::size_t>(m);
                g[mi] = w.row(m).dot(x.row(i)) + (m == yi ? 0.0 : 1.0);
                const double bound = m == yi ? c_bound : 0.0;
                if (dual(i, m) < bound) {
                    min_g = std::min(min_g, g[mi]);
                }
                max_g = std::max(max_g, g[mi]);
            }
            if (max_g - min_g <= 1e-12) {
                continue;
            }
            max_violation = std::max(max_violation, max_g - min_g);
            for (Eigen::Index m = 0; m < c; ++m) {
                b[static_cast<std::size_t>(m)] = g[static_cast<std::size_t>(m)] - a * dual(i, m);
            }
            detail::solve_cs_subproblem(a, yi, c_bound, b, next);
            for (Eigen::Index m = 0; m < c; ++m) {
                const double delta = next[static_cast<std::size_t>(m)] - dual(i, m);
                if (std::abs(delta) > 1e-14) {
                    w.row(m) += delta * x.row(i);
                    dual(i, m) = next[static_cast<std::size_t>(m)];
                }
            }
        }
        if (max_violation <= 1e-12) {
            break;
        }
        // primal 0.5|W|^2 + C sum xi against dual -(0.5|W|^2 + sum_{m != y_i} dual_im)
        const Matrix scores = x * w.transpose();
        double slack = 0.0;
        double linear = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            double worst = 0.0;
            for (Eigen::Index m = 0; m < c; ++m) {
                if (m != y[i]) {
                    worst = std::max(worst, 1.0 + scores(i, m) - scores(i, y[i]));
                    linear += dual(i, m);
                }
            }
            slack += worst;
        }
        const double half_norm = 0.5 * w.squaredNorm();
        const double primal = half_norm + c_bound * slack;
        if (primal - (-half_norm - linear) <= gap_tol * primal) {
            break;
        }
    }
    // The dual solves the C-scaled problem; W itself is the same minimizer.
    return w;
}

/// Q = (phi^T phi + lambda I)^{-1} phi^T B
inline Matrix q_step(const Matrix& phi, const SignatureMatrix& codes, double proj_lambda, const Vector* row_weights = nullptr)
{
    detail::require(phi.rows() == codes.rows(), ErrorKind::invalid_argument, "q_step: phi and codes row counts differ");
    return ridge_solve(phi, to_real(codes), proj_lambda, row_weights);
}

/// Elementwise argmin over {-1,+1} of (b - (YW)_ij)^2 + P (b - F_ij)^2, i.e. sgn(YW + P F).
inline SignatureMatrix b_step_squared(const Matrix& f, const LabelMatrix& y, const Matrix& w, double penalty)
{
    detail::require(f.rows() == y.rows() && w.rows() == y.num_classes() && w.cols() == f.cols(),
                    ErrorKind::invalid_argument, "b_step: inconsistent shapes");
    const Matrix target = y.one_hot() * w + penalty * f;
    return sign_matrix(target);
}

/// b_i = sgn(F_i + (1/2P) sum_k (w_{c(i)} - w_k)), with w^(ki) read as true class minus class k.
inline SignatureMatrix b_step_hinge(const Matrix& f, const LabelMatrix& y, const Matrix& w, double penalty)
{
    detail::require(f.rows() == y.rows() && w.rows() == y.num_classes() && w.cols() == f.cols(),
                    ErrorKind::invalid_argument, "b_step: inconsistent shapes");
    detail::require(penalty > 0.0, ErrorKind::invalid_argument, "b_step: penalty must be > 0");
    const Eigen::RowVectorXd w_sum = w.colwise().sum();
    const double c = static_cast<double>(w.rows());
    const double scale = 1.0 / (2.0 * penalty);
    Matrix target(f.rows(), f.cols());
    for (Eigen::Index i = 0; i < f.rows(); ++i) {
        target.row(i) = f.row(i) + scale * (c * w.row(y[i]) - w_sum);
    }
    return sign_matrix(target);
}

/// The length-normalized objective with P' = P and alpha' = alpha k / n.
inline double objective(const SignatureMatrix& codes, const LabelMatrix& y, const Matrix& w, const Matrix& f,
                        double alpha, double penalty)
{
    const auto n = static_cast<double>(codes.rows());
    const auto bits = static_cast<double>(codes.cols());
    const auto k = static_cast<double>(y.num_classes());
    const double alpha_norm = alpha * k / n;
    const Matrix b = to_real(codes);
    return penalty / (n * bits) * (b - f).squaredNorm() + 1.0 / (n * bits) * (b - y.one_hot() * w).squaredNorm()
           + alpha_norm / (k * bits) * w.squaredNorm();
}

inline double objective(const SignatureMatrix& codes, const LabelMatrix& y, const Matrix& w, const Matrix& f,
                        const TrainConfig& config)
{
    return objective(codes, y, w, f, config.alpha, config.penalty);
}

namespace detail {

inline Eigen::Index count_flips(const SignatureMatrix& a, const SignatureMatrix& b)
{
    return (a.array() != b.array()).count();
}

inline Matrix w_step(const SignatureMatrix& codes, const LabelMatrix& y, const TrainConfig& config, int iteration)
{
    if (config.loss == LossKind::squared) {
        return w_step_squared(codes, y, config.alpha);
    }
    return w_step_hinge(codes, y, config.alpha, config.hinge_passes, derive_seed(config.seed, 100 + iteration));
}

inline SignatureMatrix b_step(const Matrix& f, const LabelMatrix& y, const Matrix& w, const TrainConfig& config)
{
    return config.loss == LossKind::squared ? b_step_squared(f, y, w, config.penalty)
                                            : b_step_hinge(f, y, w, config.penalty);
}

} // namespace detail

/// Alternating optimization: W-step, Q-step, B-step per outer pass until the objective change is below
/// tol with no bit flipped, or the iteration cap is hit.
inline TrainResult train(const FeatureMatrix& x, const LabelMatrix& y, const TrainConfig& config)
{
    config.validate();
    const Eigen::Index n = x.rows();
    detail::require(n > 0, ErrorKind::empty_input, "training set is empty");
    detail::require(y.rows() == n, ErrorKind::invalid_argument, "features and labels row counts differ");
    detail::require(n >= y.num_classes(), ErrorKind::invalid_argument, "need at least as many samples as classes");
    for (auto count : y.class_counts()) {
        detail::require(count > 0, ErrorKind::invalid_argument, "every class needs at least one sample");
    }

    using Clock = std::chrono::steady_clock;

    TrainResult result;
    HashModel& model = result.model;
    model.config = config;
    model.anchors = select_anchors(x, config.effective_anchor_count(n), derive_seed(config.seed, 0), config.kernel_width);
    const Matrix phi = rbf_map_rows(x, model.anchors);

    SignatureMatrix codes = init_codes(n, config.code_bits, derive_seed(config.seed, 1));
    Matrix w = Matrix::Zero(y.num_classes(), config.code_bits);
    Matrix q = Matrix::Zero(phi.cols(), config.code_bits);
    Matrix f = Matrix::Zero(n, config.code_bits);

    TrainTrace& trace = result.trace;
    trace.initial_objective = objective(codes, y, w, f, config);
    double previous = trace.initial_objective;
    Eigen::Index last_flips = 0;

    const int cap = config.iteration_cap();
    for (int it = 1; it <= cap; ++it) {
        const auto start = Clock::now();
        IterationRecord rec;
        rec.iteration = it;

        w = detail::w_step(codes, y, config, it);
        rec.objective_after_w = objective(codes, y, w, f, config);

        q = q_step(phi, codes, config.proj_lambda);
        f = phi * q;
        rec.objective_after_q = objective(codes, y, w, f, config);

        SignatureMatrix next = detail::b_step(f, y, w, config);
        rec.bits_flipped = detail::count_flips(codes, next);
        codes = std::move(next);
        rec.objective = objective(codes, y, w, f, config);
        rec.seconds = std::chrono::duration<double>(Clock::now() - start).count();
        trace.iterations.push_back(rec);

        last_flips = rec.bits_flipped;
        if (std::abs(rec.objective - previous) < config.tol && rec.bits_flipped == 0) {
            trace.status = TrainStatus::converged;
            break;
        }
        previous = rec.objective;
    }

    // Keep Q and W consistent with the final codes when the loop stopped mid-flight.
    if (last_flips > 0) {
        w = detail::w_step(codes, y, config, cap + 1);
        q = q_step(phi, codes, config.proj_lambda);
    }
    model.projection = std::move(q);
    model.classifier = std::move(w);
    result.codes = std::move(codes);
    return result;
}

} // namespace semsig

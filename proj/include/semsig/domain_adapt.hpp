#pragma once

// Domain-adaptive hashing between a sender feature set Xs and a receiver
// feature set Xr:
//
//   J = F(Xs) + eta * H(Xs, Xr) + gamma * DA(Xs, Xr)
//
// F(Xs) is the sender's normalized training objective, H the mean softmax
// entropy of receiver class scores, and DA the multi-kernel MMD between the
// mean RBF embeddings of both sets.

#include "semsig/hashing.hpp"
#include "semsig/retrieval.hpp"

#include <cmath>
#include <vector>

namespace semsig {

struct DahConfig {
    double eta = 1.0;
    double gamma = 1.0;
    std::vector<double> bandwidth_multipliers{0.25, 0.5, 1.0, 2.0, 4.0};
    int max_adapt_iters = 5;
    double confidence = 0.8;  // pseudo-label gate on the max softmax probability
    int vote_radius = 2;      // Hamming radius of the pseudo-label vote
    std::uint64_t seed = 0;

    void validate() const
    {
        detail::require(eta >= 0.0 && gamma >= 0.0, ErrorKind::invalid_argument, "eta and gamma must be >= 0");
        detail::require(!bandwidth_multipliers.empty(), ErrorKind::invalid_argument, "bandwidth list is empty");
        for (double mu : bandwidth_multipliers) {
            detail::require(mu > 0.0, ErrorKind::invalid_argument, "bandwidth multipliers must be > 0");
        }
        detail::require(max_adapt_iters >= 0, ErrorKind::invalid_argument, "max_adapt_iters must be >= 0");
        detail::require(confidence >= 0.0 && confidence <= 1.0, ErrorKind::invalid_argument, "confidence must be in [0, 1]");
        detail::require(vote_radius >= 0, ErrorKind::invalid_argument, "vote_radius must be >= 0");
    }
};

struct DahIteration {
    int iteration = 0;
    double j_value = 0.0;
    std::size_t pseudo_labeled = 0;
    bool accepted = false;
};

struct DahReport {
    double j_value = 0.0;
    double fit_term = 0.0;
    double entropy_term = 0.0;
    double mmd_term = 0.0;
    std::vector<DahIteration> trace;
    bool no_op = false;
};

/// Sum over multipliers of ||mean phi_mu(Xs) - mean phi_mu(Xr)||^2, phi_mu using width mu * base width.
inline double mkmmd(const FeatureMatrix& xs, const FeatureMatrix& xr, const AnchorSet& anchors,
                    const std::vector<double>& multipliers)
{
    detail::require(xs.cols() == xr.cols() && xs.cols() == anchors.dim(), ErrorKind::invalid_argument,
                    "mkmmd: feature dimension mismatch");
    detail::require(xs.rows() >= 1 && xr.rows() >= 1, ErrorKind::empty_input, "mkmmd needs nonempty sets");
    double total = 0.0;
    for (double mu : multipliers) {
        AnchorSet scaled{anchors.anchors, anchors.width * mu};
        const Vector ms = rbf_map_rows(xs, scaled).colwise().mean().transpose();
        const Vector mr = rbf_map_rows(xr, scaled).colwise().mean().transpose();
        double d = 0.0;
        for (Eigen::Index j = 0; j < ms.size(); ++j) {
            const double diff = ms(j) - mr(j);
            d += diff * diff;
        }
        total += d;
    }
    return total;
}

/// Row-wise softmax of the class scores <F(x_i), w_j>.
inline Matrix class_probabilities(const HashModel& model, const FeatureMatrix& x)
{
    const Matrix scores = model.hash_values(x) * model.classifier.transpose(); // n x c
    Matrix p(scores.rows(), scores.cols());
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        const double top = scores.row(i).maxCoeff();
        double z = 0.0;
        for (Eigen::Index j = 0; j < scores.cols(); ++j) {
            p(i, j) = std::exp(scores(i, j) - top);
            z += p(i, j);
        }
        p.row(i) /= z;
    }
    return p;
}

/// Mean base-2 entropy of the receiver's class-probability rows.
inline double entropy_loss(const HashModel& model, const FeatureMatrix& xr)
{
    detail::require(model.num_classes() >= 2, ErrorKind::invalid_argument, "entropy loss needs at least two classes");
    detail::require(xr.rows() >= 1, ErrorKind::empty_input, "entropy loss needs receiver samples");
    const Matrix p = class_probabilities(model, xr);
    double total = 0.0;
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        for (Eigen::Index j = 0; j < p.cols(); ++j) {
            if (p(i, j) > 0.0) {
                total -= p(i, j) * std::log2(p(i, j));
            }
        }
    }
    return std::max(0.0, total / static_cast<double>(p.rows()));
}

/// The sender fit term: the training objective with the model's own codes sgn(F(Xs)).
inline double sender_fit(const HashModel& model, const FeatureMatrix& xs, const LabelMatrix& ys)
{
    const Matrix f = model.hash_values(xs);
    return objective(sign_matrix(f), ys, model.classifier, f, model.config);
}

inline DahReport dah_objective(const HashModel& model, const FeatureMatrix& xs, const LabelMatrix& ys,
                               const FeatureMatrix& xr, const DahConfig& config)
{
    config.validate();
    detail::require(ys.rows() == xs.rows(), ErrorKind::invalid_argument, "sender features and labels differ in rows");
    DahReport rep;
    rep.fit_term = sender_fit(model, xs, ys);
    rep.entropy_term = entropy_loss(model, xr);
    rep.mmd_term = mkmmd(xs, xr, model.anchors, config.bandwidth_multipliers);
    rep.j_value = rep.fit_term + config.eta * rep.entropy_term + config.gamma * rep.mmd_term;
    return rep;
}

inline constexpr double kAlignedMmd = 1e-15;

struct AdaptResult {
    HashModel model;
    DahReport report;
};

/// Pseudo-labels confident receiver samples by a Hamming vote against the sender knowledge base,
/// refits Q and W on the sender set plus those samples (weighted by gamma), and keeps a refit only
/// if J decreases.
inline AdaptResult adapt(const HashModel& model, const FeatureMatrix& xs, const LabelMatrix& ys, const FeatureMatrix& xr,
                         const DahConfig& config)
{
    config.validate();
    detail::require(xr.rows() >= 1, ErrorKind::empty_input, "adapt needs receiver samples");

    AdaptResult out{model, dah_objective(model, xs, ys, xr, config)};
    // Nothing to weigh, or the two sets already coincide in every kernel embedding.
    if ((config.eta == 0.0 && config.gamma == 0.0) || out.report.mmd_term <= kAlignedMmd) {
        out.report.no_op = true;
        return out;
    }

    const Matrix phi_s = rbf_map_rows(xs, model.anchors);
    const Matrix phi_r = rbf_map_rows(xr, model.anchors);
    const Eigen::Index ns = xs.rows();
    bool any_labeled = false;

    for (int it = 1; it <= config.max_adapt_iters; ++it) {
        const HashModel& current = out.model;
        const SignatureMatrix sender_codes = current.encode_rows(xs);
        const KnowledgeBase kb(sender_codes, ys.labels());
        const SignatureMatrix receiver_codes = current.encode_rows(xr);
        const Matrix probs = class_probabilities(current, xr);

        // (a) pseudo-labels that both the vote and the classifier agree on
        std::vector<Eigen::Index> picked;
        std::vector<ClassId> picked_labels;
        for (Eigen::Index i = 0; i < xr.rows(); ++i) {
            const auto rec = reconstruct(kb, receiver_codes.row(i), config.vote_radius);
            if (!rec.reconstructed()) {
                continue;
            }
            Eigen::Index best = 0;
            const double top = probs.row(i).maxCoeff(&best);
            if (top >= config.confidence && static_cast<ClassId>(best) == *rec.label) {
                picked.push_back(i);
                picked_labels.push_back(*rec.label);
            }
        }

        DahIteration step;
        step.iteration = it;
        step.pseudo_labeled = picked.size();
        if (picked.empty()) {
            step.j_value = out.report.j_value;
            out.report.trace.push_back(step);
            break;
        }
        any_labeled = true;

        // (b) weighted refit on the union; receiver targets are the sign of the class weight vector
        const auto total = ns + static_cast<Eigen::Index>(picked.size());
        Matrix phi(total, phi_s.cols());
        SignatureMatrix codes(total, sender_codes.cols());
        std::vector<ClassId> labels = ys.labels();
        Vector weights = Vector::Ones(total);
        phi.topRows(ns) = phi_s;
        codes.topRows(ns) = sender_codes;
        for (std::size_t t = 0; t < picked.size(); ++t) {
            const auto row = ns + static_cast<Eigen::Index>(t);
            phi.row(row) = phi_r.row(picked[t]);
            codes.row(row) = sign_matrix(current.classifier.row(picked_labels[t]));
            labels.push_back(picked_labels[t]);
            weights(row) = config.gamma;
        }
        const LabelMatrix union_labels(std::move(labels), ys.num_classes());

        HashModel candidate = current;
        candidate.projection = q_step(phi, codes, current.config.proj_lambda, &weights);
        if (current.config.loss == LossKind::squared) {
            candidate.classifier = ridge_solve(union_labels.one_hot(), to_real(codes), current.config.alpha, &weights);
        } else {
            candidate.classifier = w_step_hinge(codes, union_labels, current.config.alpha, current.config.hinge_passes,
                                                derive_seed(config.seed, static_cast<std::uint64_t>(it)));
        }

        // (c) accept only if J decreases
        const DahReport next = dah_objective(candidate, xs, ys, xr, config);
        step.j_value = next.j_value;
        step.accepted = next.j_value < out.report.j_value;
        if (step.accepted) {
            auto trace = std::move(out.report.trace);
            out.model = std::move(candidate);
            out.report = next;
            out.report.trace = std::move(trace);
        }
        out.report.trace.push_back(step);
        if (!step.accepted) {
            break;
        }
    }
    out.report.no_op = !any_labeled;
    return out;
}

} // namespace semsig

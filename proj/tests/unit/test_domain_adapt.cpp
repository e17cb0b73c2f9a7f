#include <semsig/semsig.hpp>

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace semsig;

namespace {

struct Scenario {
    Dataset sender;
    Dataset receiver;
    HashModel model;
};

// Sender and receiver drawn from the same clusters; the receiver is then shifted by `shift` along a
// fixed random direction.
Scenario make_scenario(double shift, std::uint64_t seed, int bits = 32)
{
    const auto all = generate_synthetic(900, 16, 4, 0.15, seed);
    const auto split = stratified_split(all, 1.0 / 3.0, seed + 1);
    Scenario s{split.train, split.test, {}};
    const Matrix dir = oracle::random_matrix(1, 16, seed + 2);
    const Eigen::RowVectorXd u = dir.row(0) / dir.norm();
    for (Eigen::Index i = 0; i < s.receiver.features.rows(); ++i) {
        s.receiver.features.row(i) += shift * u;
    }
    TrainConfig tc;
    tc.code_bits = bits;
    tc.seed = seed;
    s.model = train(s.sender.features, s.sender.labels, tc).model;
    return s;
}

double entropy_oracle(const HashModel& model, const Matrix& xr)
{
    const Matrix f = model.hash_values(xr);
    double total = 0.0;
    for (Eigen::Index i = 0; i < xr.rows(); ++i) {
        std::vector<double> e;
        double z = 0.0;
        for (Eigen::Index j = 0; j < model.classifier.rows(); ++j) {
            e.push_back(std::exp(f.row(i).dot(model.classifier.row(j))));
            z += e.back();
        }
        for (double v : e) {
            const double p = v / z;
            if (p > 0.0) {
                total -= p * std::log2(p);
            }
        }
    }
    return total / static_cast<double>(xr.rows());
}

} // namespace

TEST(Mkmmd, IdentityAndSymmetry)
{
    const auto s = make_scenario(0.5, 3);
    const std::vector<double> mult{0.25, 0.5, 1.0, 2.0, 4.0};
    EXPECT_EQ(mkmmd(s.sender.features, s.sender.features, s.model.anchors, mult), 0.0);
    EXPECT_EQ(mkmmd(s.sender.features, s.receiver.features, s.model.anchors, mult),
              mkmmd(s.receiver.features, s.sender.features, s.model.anchors, mult));
    EXPECT_GE(mkmmd(s.sender.features, s.receiver.features, s.model.anchors, mult), 0.0);
    const Matrix wrong = Matrix::Zero(3, 5);
    EXPECT_THROW((void)mkmmd(s.sender.features, wrong, s.model.anchors, mult), Error);
}

TEST(Mkmmd, SameDistributionWithinPermutationNull)
{
    const auto all = generate_synthetic(1000, 8, 4, 0.3, 21);
    const auto anchors = select_anchors(all.features, 100, 1);
    const std::vector<double> mult{0.25, 0.5, 1.0, 2.0, 4.0};
    const Matrix a = all.features.topRows(500);
    const Matrix b = all.features.bottomRows(500);
    const double observed = mkmmd(a, b, anchors, mult);

    std::vector<Eigen::Index> order(1000);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    Rng rng(99);
    std::vector<double> null;
    for (int rep = 0; rep < 200; ++rep) {
        std::shuffle(order.begin(), order.end(), rng);
        Matrix pa(500, 8);
        Matrix pb(500, 8);
        for (Eigen::Index i = 0; i < 500; ++i) {
            pa.row(i) = all.features.row(order[static_cast<std::size_t>(i)]);
            pb.row(i) = all.features.row(order[static_cast<std::size_t>(i + 500)]);
        }
        null.push_back(mkmmd(pa, pb, anchors, mult));
    }
    std::sort(null.begin(), null.end());
    EXPECT_LT(observed, null[189]);
}

TEST(Mkmmd, LargeShiftDominates)
{
    const auto all = generate_synthetic(1000, 8, 4, 0.3, 22);
    const auto anchors = select_anchors(all.features, 100, 2);
    const std::vector<double> mult{0.25, 0.5, 1.0, 2.0, 4.0};
    const Matrix a = all.features.topRows(500);
    const Matrix b = all.features.bottomRows(500);
    const Matrix shifted = (b.array() + 3.0).matrix();
    EXPECT_GE(mkmmd(a, shifted, anchors, mult), 10.0 * mkmmd(a, b, anchors, mult));
}

TEST(EntropyLoss, LimitsAndOracle)
{
    auto s = make_scenario(0.3, 4);
    EXPECT_NEAR(entropy_loss(s.model, s.receiver.features), entropy_oracle(s.model, s.receiver.features), 1e-12);

    HashModel zero = s.model;
    zero.classifier.setZero();
    EXPECT_EQ(entropy_loss(zero, s.receiver.features), 2.0);

    HashModel sharp = s.model;
    sharp.classifier *= 1e6;
    EXPECT_LT(entropy_loss(sharp, s.receiver.features), 1e-6);

    for (double scale : {1e-3, 0.1, 1.0, 10.0}) {
        HashModel m = s.model;
        m.classifier *= scale;
        const double h = entropy_loss(m, s.receiver.features);
        EXPECT_GE(h, 0.0);
        EXPECT_LE(h, 2.0 + 1e-12);
    }

    HashModel one = s.model;
    one.classifier = one.classifier.topRows(1).eval();
    EXPECT_THROW((void)entropy_loss(one, s.receiver.features), Error);
}

TEST(DahObjective, Additivity)
{
    const auto s = make_scenario(0.4, 5);
    DahConfig cfg;
    cfg.eta = 0.7;
    cfg.gamma = 2.5;
    const auto rep = dah_objective(s.model, s.sender.features, s.sender.labels, s.receiver.features, cfg);
    EXPECT_DOUBLE_EQ(rep.j_value, rep.fit_term + 0.7 * rep.entropy_term + 2.5 * rep.mmd_term);
    EXPECT_DOUBLE_EQ(rep.fit_term, sender_fit(s.model, s.sender.features, s.sender.labels));
    EXPECT_GE(rep.mmd_term, -1e-9);
    EXPECT_GE(rep.entropy_term, 0.0);

    cfg.eta = cfg.gamma = 0.0;
    const auto fit_only = dah_objective(s.model, s.sender.features, s.sender.labels, s.receiver.features, cfg);
    EXPECT_EQ(fit_only.j_value, fit_only.fit_term);

    cfg.eta = 1.5;
    cfg.gamma = 1.0;
    const auto aligned = dah_objective(s.model, s.sender.features, s.sender.labels, s.sender.features, cfg);
    EXPECT_EQ(aligned.mmd_term, 0.0);
    EXPECT_DOUBLE_EQ(aligned.j_value, aligned.fit_term + 1.5 * aligned.entropy_term);
}

TEST(Adapt, DecoupledWeightsAreNoOp)
{
    const auto s = make_scenario(0.4, 6);
    DahConfig cfg;
    cfg.eta = cfg.gamma = 0.0;
    const auto res = adapt(s.model, s.sender.features, s.sender.labels, s.receiver.features, cfg);
    EXPECT_TRUE(res.report.no_op);
    EXPECT_EQ(res.model.projection, s.model.projection);
    EXPECT_EQ(res.model.classifier, s.model.classifier);
}

TEST(Adapt, AlignedSetsLeaveJUnchanged)
{
    const auto s = make_scenario(0.0, 7);
    const DahConfig cfg;
    const auto before = dah_objective(s.model, s.sender.features, s.sender.labels, s.sender.features, cfg);
    const auto res = adapt(s.model, s.sender.features, s.sender.labels, s.sender.features, cfg);
    EXPECT_NEAR(res.report.j_value, before.j_value, 1e-6);
}

TEST(Adapt, NeverIncreasesJ)
{
    for (std::uint64_t seed = 10; seed < 14; ++seed) {
        const auto s = make_scenario(0.4, seed);
        const DahConfig cfg;
        const auto before = dah_objective(s.model, s.sender.features, s.sender.labels, s.receiver.features, cfg);
        const auto res = adapt(s.model, s.sender.features, s.sender.labels, s.receiver.features, cfg);
        EXPECT_LE(res.report.j_value, before.j_value);
        double prev = before.j_value;
        for (const auto& it : res.report.trace) {
            if (it.accepted) {
                EXPECT_LT(it.j_value, prev);
                prev = it.j_value;
            }
        }
    }
}

TEST(Adapt, ShiftRecoveryDoesNotHurtReceiverPrecision)
{
    const auto s = make_scenario(0.4, 30);
    auto receiver_precision = [&](const HashModel& m) {
        const KnowledgeBase kb(m.encode_rows(s.sender.features), s.sender.labels.labels());
        return precision_at_radius(m.encode_rows(s.receiver.features), s.receiver.labels.labels(), kb, 2);
    };
    const auto res = adapt(s.model, s.sender.features, s.sender.labels, s.receiver.features, DahConfig{});
    EXPECT_GE(receiver_precision(res.model), receiver_precision(s.model));
}

TEST(Adapt, ConfigValidation)
{
    DahConfig cfg;
    cfg.eta = -1.0;
    EXPECT_THROW(cfg.validate(), Error);
    cfg = DahConfig{};
    cfg.bandwidth_multipliers.clear();
    EXPECT_THROW(cfg.validate(), Error);
    cfg = DahConfig{};
    cfg.confidence = 1.5;
    EXPECT_THROW(cfg.validate(), Error);
}

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Sizes, seeds and tolerances below are fixed; do not tune them to make a line pass.

#include <semsig/semsig.hpp>

#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace semsig;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    std::string name;
    double time_limit_s; // <= 0: no wall-time bound
    std::function<Outcome()> run;
};

std::string fmt(double v)
{
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
}

// ---- 1: B-step exactness ------------------------------------------------------------------------

Outcome b_step_exactness()
{
    Rng rng(101);
    std::uniform_int_distribution<int> pick_bits(1, 12);
    std::uniform_int_distribution<int> pick_classes(2, 6);
    std::uniform_int_distribution<int> pick_rows(1, 6);
    std::uniform_real_distribution<double> pick_log_p(-4.0, 1.0);
    int mismatches = 0;
    for (int inst = 0; inst < 200; ++inst) {
        const int bits = pick_bits(rng);
        const int c = pick_classes(rng);
        const int n = pick_rows(rng);
        const double p = std::pow(10.0, pick_log_p(rng));
        const auto seed = static_cast<std::uint64_t>(1000 + inst);
        const Matrix f = oracle::random_matrix(n, bits, seed);
        const Matrix w = oracle::random_matrix(c, bits, seed + 1);
        const LabelMatrix y(oracle::random_labels(static_cast<std::size_t>(n), c, seed + 2), c);
        const auto sq = b_step_squared(f, y, w, p);
        const auto hi = b_step_hinge(f, y, w, p);
        const auto candidates = oracle::all_sign_vectors(bits);
        for (int i = 0; i < n; ++i) {
            // Squared surrogate: min ||b - y_i W||^2 + P ||b - F_i||^2.
            // Hinge form: min P ||b - F_i||^2 - b . sum_k (w_{y_i} - w_k).
            double best_sq = std::numeric_limits<double>::infinity();
            double best_hi = std::numeric_limits<double>::infinity();
            const std::vector<int>* arg_sq = nullptr;
            const std::vector<int>* arg_hi = nullptr;
            for (const auto& b : candidates) {
                double vs = 0.0;
                double vh = 0.0;
                for (int j = 0; j < bits; ++j) {
                    const double bj = b[static_cast<std::size_t>(j)];
                    const double df = bj - f(i, j);
                    const double dw = bj - w(y[i], j);
                    vs += dw * dw + p * df * df;
                    double pull = 0.0;
                    for (int k = 0; k < c; ++k) {
                        pull += w(y[i], j) - w(k, j);
                    }
                    vh += p * df * df - bj * pull;
                }
                if (vs < best_sq) {
                    best_sq = vs;
                    arg_sq = &b;
                }
                if (vh < best_hi) {
                    best_hi = vh;
                    arg_hi = &b;
                }
            }
            for (int j = 0; j < bits; ++j) {
                mismatches += sq(i, j) != (*arg_sq)[static_cast<std::size_t>(j)] ? 1 : 0;
                mismatches += hi(i, j) != (*arg_hi)[static_cast<std::size_t>(j)] ? 1 : 0;
            }
        }
    }
    return {mismatches == 0, "200 instances, " + std::to_string(mismatches) + " mismatching bits"};
}

// ---- 2: monotone objective ----------------------------------------------------------------------

TrainConfig standard_config(int bits)
{
    TrainConfig tc;
    tc.code_bits = bits;
    tc.alpha = 1.0;
    tc.penalty = 1e-4;
    tc.max_iters = 100;
    tc.seed = 17;
    return tc;
}

Outcome monotone_objective()
{
    const auto ds = generate_synthetic(2000, 32, 4, 0.1, 2);
    const auto res = train(ds.features, ds.labels, standard_config(32));
    const auto& tr = res.trace;
    constexpr double tol = 1e-9;
    double worst = -std::numeric_limits<double>::infinity();
    double prev = tr.initial_objective;
    for (const auto& it : tr.iterations) {
        worst = std::max({worst, it.objective_after_w - prev, it.objective_after_q - it.objective_after_w,
                          it.objective - it.objective_after_q});
        prev = it.objective;
    }
    const bool converged = tr.status == TrainStatus::converged && tr.bit_passes() <= 6;
    return {worst <= tol && converged, "max sub-step increase " + fmt(worst) + ", " + std::to_string(tr.bit_passes())
                                           + " passes, status " + std::string(to_string(tr.status))};
}

// ---- 3: desk-scale retrieval quality ------------------------------------------------------------

double linear_probe_accuracy(const Split& s)
{
    const Eigen::Index d = s.train.features.cols();
    Matrix a(s.train.features.rows(), d + 1);
    a << s.train.features, Matrix::Ones(s.train.features.rows(), 1);
    const Matrix w = a.colPivHouseholderQr().solve(s.train.labels.one_hot());
    Matrix t(s.test.features.rows(), d + 1);
    t << s.test.features, Matrix::Ones(s.test.features.rows(), 1);
    const Matrix scores = t * w;
    int correct = 0;
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        Eigen::Index arg = 0;
        scores.row(i).maxCoeff(&arg);
        correct += static_cast<ClassId>(arg) == s.test.labels[i] ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(scores.rows());
}

Outcome retrieval_quality()
{
    const auto ds = generate_synthetic(2000, 32, 4, 0.1, 3);
    const auto split = stratified_split(ds, 1.0 / 6.0, 3);
    const double probe = linear_probe_accuracy(split);
    const auto res = train(split.train.features, split.train.labels, standard_config(64));
    const KnowledgeBase kb(res.model.encode_rows(split.train.features), split.train.labels.labels(), split.train_ids);
    const auto q = res.model.encode_rows(split.test.features);
    const double p2 = precision_at_radius(q, split.test.labels.labels(), kb, 2);
    const double map = mean_average_precision(q, split.test.labels.labels(), kb, split.test_ids).map;
    return {probe >= 0.99 && p2 >= 0.90 && map >= 0.90,
            "probe " + fmt(probe) + ", precision@2 " + fmt(p2) + ", MAP " + fmt(map)};
}

// ---- 4: SNR monotonicity ------------------------------------------------------------------------

std::vector<double> per_query_ap(const SignatureMatrix& q, const Split& s, const KnowledgeBase& kb)
{
    std::vector<double> ap;
    for (Eigen::Index j = 0; j < q.rows(); ++j) {
        const SignatureMatrix one = q.row(j);
        const ClassId label = s.test.labels[j];
        const ItemId id = s.test_ids[static_cast<std::size_t>(j)];
        ap.push_back(mean_average_precision(one, std::span<const ClassId>(&label, 1), kb, std::span<const ItemId>(&id, 1)).map);
    }
    return ap;
}

double mean(const std::vector<double>& v)
{
    double s = 0.0;
    for (double x : v) {
        s += x;
    }
    return s / static_cast<double>(v.size());
}

Outcome snr_monotonicity()
{
    const auto ds = generate_synthetic(2000, 32, 4, 0.1, 4);
    const auto split = stratified_split(ds, 1.0 / 6.0, 4);
    const auto res = train(split.train.features, split.train.labels, standard_config(96));
    const KnowledgeBase kb(res.model.encode_rows(split.train.features), split.train.labels.labels(), split.train_ids);
    const auto q = res.model.encode_rows(split.test.features);
    const double sender = mean(per_query_ap(q, split, kb));

    bool ok = true;
    std::string detail = "sender MAP " + fmt(sender) + "; receiver";
    std::vector<double> prev;
    std::size_t ci = 0;
    for (double snr : {6.0, 10.0, 14.0, 18.0}) {
        ChannelConfig ch{ChannelKind::awgn, snr, 6.0, 44, false};
        ch.seed = detail::cell_seed(ch, 96, ci++);
        const auto ap = per_query_ap(transmit_batch(q, ch).received, split, kb);
        const double m = mean(ap);
        detail += " " + fmt(snr) + "dB=" + fmt(m);
        ok = ok && m <= sender + 1e-12;
        if (!prev.empty()) {
            // Paired Monte-Carlo standard error of the MAP difference over the shared queries.
            std::vector<double> diff(ap.size());
            for (std::size_t i = 0; i < ap.size(); ++i) {
                diff[i] = ap[i] - prev[i];
            }
            const double md = mean(diff);
            double var = 0.0;
            for (double x : diff) {
                var += (x - md) * (x - md);
            }
            var /= static_cast<double>(diff.size() - 1);
            const double se = std::sqrt(var / static_cast<double>(diff.size()));
            ok = ok && md >= -2.0 * se;
        }
        prev = ap;
    }
    return {ok, detail};
}

// ---- 5: channel physics -------------------------------------------------------------------------

Outcome channel_physics()
{
    const auto codes = oracle::random_codes(10000, 100, 2026);
    auto ber = [&](ChannelKind kind, double k_db, std::uint64_t seed) {
        return transmit_batch(codes, {kind, 10.0, k_db, seed, false}).ber;
    };
    const double awgn_cf = bpsk_ber_awgn(10.0);
    const double ray_cf = bpsk_ber_rayleigh(10.0);
    const double awgn = ber(ChannelKind::awgn, 0.0, 2027);
    const double ray = ber(ChannelKind::rayleigh, 0.0, 2028);
    const double ric_lo = ber(ChannelKind::rician, -40.0, 2029);
    const double ric_hi = ber(ChannelKind::rician, 40.0, 2030);
    const double rel_awgn = std::abs(awgn / awgn_cf - 1.0);
    const double rel_ray = std::abs(ray / ray_cf - 1.0);
    const double rel_ric_lo = std::abs(ric_lo / ray_cf - 1.0);
    // At K = +40 dB the Rician channel is held to the AWGN closed form with the same +-10% as AWGN itself.
    const double rel_ric_hi = std::abs(ric_hi / awgn_cf - 1.0);
    const bool ok = rel_awgn <= 0.10 && rel_ray <= 0.10 && rel_ric_lo <= 0.10 && rel_ric_hi <= 0.10;
    return {ok, "1e6 bits at 10 dB: AWGN " + fmt(awgn) + " vs " + fmt(awgn_cf) + " (rel " + fmt(rel_awgn) + "), Rayleigh "
                    + fmt(ray) + " vs " + fmt(ray_cf) + " (rel " + fmt(rel_ray) + "), Rician K=-40 rel " + fmt(rel_ric_lo)
                    + ", K=+40 " + fmt(ric_hi) + " (rel " + fmt(rel_ric_hi) + ")"};
}

// ---- 6: metric oracles --------------------------------------------------------------------------

Outcome metric_oracles()
{
    Rng rng(606);
    std::uniform_int_distribution<int> pick_n(1, 200);
    std::uniform_int_distribution<int> pick_q(1, 20);
    std::uniform_int_distribution<int> pick_bits(1, 150);
    std::uniform_int_distribution<int> pick_c(1, 5);
    int bad = 0;
    for (int inst = 0; inst < 100; ++inst) {
        const int n = pick_n(rng);
        const int nq = pick_q(rng);
        const int bits = pick_bits(rng);
        const ClassId c = pick_c(rng);
        const auto seed = static_cast<std::uint64_t>(5000 + 10 * inst);
        const auto base = oracle::random_codes(n, bits, seed);
        const auto queries = oracle::random_codes(nq, bits, seed + 1);
        const auto bl = oracle::random_labels(static_cast<std::size_t>(n), c, seed + 2);
        const auto ql = oracle::random_labels(static_cast<std::size_t>(nq), c, seed + 3);
        std::vector<ItemId> ids(static_cast<std::size_t>(n));
        for (std::size_t i = 0; i < ids.size(); ++i) {
            ids[i] = static_cast<ItemId>((i * 7919) % 100003);
        }
        const KnowledgeBase kb(base, bl, ids);
        for (int j = 0; j < nq; ++j) {
            const auto d = kb.distances(PackedSignature(queries.row(j)));
            for (int i = 0; i < n; ++i) {
                bad += d[static_cast<std::size_t>(i)] != oracle::naive_hamming(queries.row(j), base.row(i)) ? 1 : 0;
            }
        }
        for (int r : {0, 1, 2, bits / 2, bits}) {
            bad += precision_at_radius(queries, ql, kb, r) != oracle::naive_precision(queries, ql, base, bl, r) ? 1 : 0;
        }
        const double naive = oracle::naive_map(queries, ql, base, bl, ids);
        if (std::isnan(naive)) {
            try {
                (void)mean_average_precision(queries, ql, kb);
                ++bad;
            } catch (const Error& e) {
                bad += e.kind() == ErrorKind::undefined_metric ? 0 : 1;
            }
        } else {
            bad += mean_average_precision(queries, ql, kb).map != naive ? 1 : 0;
        }
    }
    return {bad == 0, "100 bases, " + std::to_string(bad) + " disagreements"};
}

// ---- 7: entropy identities ----------------------------------------------------------------------

Outcome entropy_identities()
{
    Rng rng(707);
    std::uniform_int_distribution<int> pick_m(1, 30);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst = 0.0;
    for (int inst = 0; inst < 200; ++inst) {
        const int m = pick_m(rng);
        std::uniform_int_distribution<int> pick_sym(0, std::max(0, m / 2));
        std::vector<double> w(static_cast<std::size_t>(m));
        double total = 0.0;
        for (auto& x : w) {
            x = unit(rng) < 0.1 ? 0.0 : unit(rng);
            total += x;
        }
        if (total == 0.0) {
            w[0] = total = 1.0;
        }
        std::vector<Message> msgs;
        for (int i = 0; i < m; ++i) {
            msgs.push_back({"m" + std::to_string(i), w[static_cast<std::size_t>(i)] / total, "x" + std::to_string(pick_sym(rng))});
        }
        const auto rep = semantic_mutual_information(MessageModel(msgs));
        worst = std::max(worst, std::abs(rep.mi_via_message - rep.mi_via_symbol));
    }
    const double uniform = semantic_entropy(std::vector<double>{0.25, 0.25, 0.25, 0.25});
    return {worst <= 1e-9 && uniform == 2.0, "max |difference| " + fmt(worst) + ", uniform-4 " + fmt(uniform)};
}

// ---- 8: stability trend -------------------------------------------------------------------------

// Trains on X1, then forms X2 by replacing sample 0 with a fresh sample of another class. The code
// schedule is held at the X1 codes; the new row gets the code a B-step with the trained W and Q would
// assign it. The W-step is re-solved for both sets and the Frobenius distance between them returned.
double perturbation_distance(Eigen::Index n, std::uint64_t rep)
{
    const auto ds = generate_synthetic(n + 4, 32, 4, 0.1, 800 + rep);
    const Dataset x1 = take_rows(ds, [&] {
        std::vector<ItemId> r(static_cast<std::size_t>(n));
        std::iota(r.begin(), r.end(), ItemId{0});
        return r;
    }());
    TrainConfig tc = standard_config(32);
    tc.seed = 900 + rep;
    const auto res = train(x1.features, x1.labels, tc);

    // Row n + 1 has class (n + 1) % 4, which differs from row 0's class 0.
    const Eigen::Index fresh = n + 1;
    auto y2 = x1.labels.labels();
    y2[0] = ds.labels[fresh];
    SignatureMatrix b2 = res.codes;
    const LabelMatrix fresh_label({ds.labels[fresh]}, 4);
    b2.row(0) = b_step_squared(res.model.hash_values(ds.features.row(fresh)), fresh_label, res.model.classifier, tc.penalty).row(0);
    const Matrix w1 = w_step_squared(res.codes, x1.labels, tc.alpha);
    const Matrix w2 = w_step_squared(b2, LabelMatrix(y2, 4), tc.alpha);
    return (w1 - w2).norm();
}

Outcome stability_trend()
{
    int decreasing = 0;
    std::string detail;
    for (std::uint64_t rep = 0; rep < 5; ++rep) {
        const double d500 = perturbation_distance(500, rep);
        const double d1000 = perturbation_distance(1000, rep);
        const double d2000 = perturbation_distance(2000, rep);
        const bool dec = d500 > d1000 && d1000 > d2000;
        decreasing += dec ? 1 : 0;
        detail += (rep == 0 ? "" : "; ") + fmt(d500) + " > " + fmt(d1000) + " > " + fmt(d2000) + (dec ? "" : " (no)");
    }
    return {decreasing >= 4, std::to_string(decreasing) + "/5 decreasing: " + detail};
}

// ---- 9: DAH direction ---------------------------------------------------------------------------

Outcome dah_direction()
{
    int improved = 0;
    bool j_ok = true;
    std::string detail;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        // Spread 0.2 with a shift of 1.0 (comparable to the center spacing) costs the unadapted model precision.
        const auto all = generate_synthetic(1200, 32, 4, 0.2, 950 + seed);
        const auto split = stratified_split(all, 1.0 / 3.0, 960 + seed);
        Dataset receiver = split.test;
        const Matrix dir = oracle::random_matrix(1, 32, 970 + seed);
        const Eigen::RowVectorXd shift = 1.0 * dir.row(0) / dir.norm();
        receiver.features.rowwise() += shift;

        TrainConfig tc = standard_config(32);
        tc.seed = 980 + seed;
        const auto model = train(split.train.features, split.train.labels, tc).model;
        DahConfig cfg;
        cfg.seed = 990 + seed;
        const double j0 = dah_objective(model, split.train.features, split.train.labels, receiver.features, cfg).j_value;
        const auto res = adapt(model, split.train.features, split.train.labels, receiver.features, cfg);

        double prev = j0;
        for (const auto& it : res.report.trace) {
            if (it.accepted) {
                j_ok = j_ok && it.j_value <= prev;
                prev = it.j_value;
            }
        }
        j_ok = j_ok && res.report.j_value <= j0;

        auto p2 = [&](const HashModel& m) {
            const KnowledgeBase kb(m.encode_rows(split.train.features), split.train.labels.labels());
            return precision_at_radius(m.encode_rows(receiver.features), receiver.labels.labels(), kb, 2);
        };
        const double before = p2(model);
        const double after = p2(res.model);
        improved += after > before ? 1 : 0;
        detail += (seed == 0 ? "" : "; ") + fmt(before) + " -> " + fmt(after);
    }
    return {j_ok && improved >= 4,
            std::to_string(improved) + "/5 improved, J " + (j_ok ? "never increased" : "INCREASED") + ": " + detail};
}

// ---- 10: determinism ----------------------------------------------------------------------------

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome sweep_determinism()
{
    ExperimentSpec spec;
    spec.dataset.synthetic = {600, 16, 4, 0.2, 10};
    spec.code_bits = {16, 48};
    for (auto kind : {ChannelKind::awgn, ChannelKind::rayleigh, ChannelKind::rician}) {
        for (double snr : {4.0, 12.0}) {
            spec.channels.push_back({kind, snr, 3.0, 11, false});
        }
    }
    spec.radii = {0, 2};
    spec.train.seed = 12;
    const auto root = fs::temp_directory_path() / "semsig_acceptance_determinism";
    fs::remove_all(root);
    emit_report(run_experiment(spec), ReportFormat::csv, root / "a");
    emit_report(run_experiment(spec), ReportFormat::csv, root / "b");
    int differing = 0;
    int compared = 0;
    for (const auto& entry : fs::directory_iterator(root / "a")) {
        if (entry.path().stem() == "timing") {
            continue; // wall-clock table
        }
        ++compared;
        differing += slurp(entry.path()) != slurp(root / "b" / entry.path().filename()) ? 1 : 0;
    }
    fs::remove_all(root);
    return {differing == 0 && compared == 6, std::to_string(compared) + " tables compared, " + std::to_string(differing) + " differ"};
}

} // namespace

int main()
{
    const std::vector<Criterion> criteria{
        {1, "B-step exactness", 30.0, b_step_exactness},
        {2, "monotone objective", 60.0, monotone_objective},
        {3, "retrieval quality", 120.0, retrieval_quality},
        {4, "SNR monotonicity", 180.0, snr_monotonicity},
        {5, "channel physics", 30.0, channel_physics},
        {6, "metric oracles", 0.0, metric_oracles},
        {7, "entropy identities", 0.0, entropy_identities},
        {8, "stability trend", 300.0, stability_trend},
        {9, "DAH direction", 180.0, dah_direction},
        {10, "determinism", 0.0, sweep_determinism},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = c.run();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = c.time_limit_s <= 0.0 || secs < c.time_limit_s;
        const bool pass = out.pass && in_time;
        failures += pass ? 0 : 1;
        std::cout << (pass ? "PASS" : "FAIL") << " [criterion " << c.id << "] " << c.name << ": " << out.detail << " ("
                  << fmt(secs) << " s" << (in_time ? "" : ", over time limit") << ")\n"
                  << std::flush;
    }
    return failures == 0 ? 0 : 1;
}

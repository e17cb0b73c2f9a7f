#pragma once

// Sweep runner: train once per code length, encode the train split as the
// knowledge base and the test split as queries, then score sender-side
// (noiseless) and receiver-side (through each channel) retrieval.

#include "semsig/channel.hpp"
#include "semsig/hashing.hpp"
#include "semsig/io.hpp"
#include "semsig/retrieval.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace semsig {

/// k Gaussian clusters around unit-norm random centers; labels cycle 0..k-1 so classes are balanced.
inline Dataset generate_synthetic(Eigen::Index n, Eigen::Index d, ClassId k, double spread, std::uint64_t seed)
{
    detail::require(k >= 2, ErrorKind::invalid_argument, "synthetic data needs k >= 2");
    detail::require(n >= k, ErrorKind::invalid_argument, "synthetic data needs n >= k");
    detail::require(d >= 1, ErrorKind::invalid_argument, "synthetic data needs d >= 1");
    detail::require(spread >= 0.0 && std::isfinite(spread), ErrorKind::invalid_argument, "spread must be >= 0");

    Rng rng(seed);
    std::normal_distribution<double> unit(0.0, 1.0);
    Matrix centers(k, d);
    for (ClassId c = 0; c < k; ++c) {
        double norm = 0.0;
        while (norm == 0.0) {
            for (Eigen::Index j = 0; j < d; ++j) {
                centers(c, j) = unit(rng);
            }
            norm = centers.row(c).norm();
        }
        centers.row(c) /= norm;
    }

    Dataset ds;
    ds.features.resize(n, d);
    std::vector<ClassId> labels(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto c = static_cast<ClassId>(i % k);
        labels[static_cast<std::size_t>(i)] = c;
        for (Eigen::Index j = 0; j < d; ++j) {
            ds.features(i, j) = centers(c, j) + spread * unit(rng);
        }
    }
    ds.labels = LabelMatrix(std::move(labels), k);
    return ds;
}

struct Split {
    Dataset train;
    Dataset test;
    std::vector<ItemId> train_ids; // original row indices
    std::vector<ItemId> test_ids;
};

inline Dataset take_rows(const Dataset& ds, const std::vector<ItemId>& rows)
{
    Dataset out;
    out.features.resize(static_cast<Eigen::Index>(rows.size()), ds.features.cols());
    std::vector<ClassId> labels;
    labels.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(rows[i]);
        out.features.row(static_cast<Eigen::Index>(i)) = ds.features.row(r);
        labels.push_back(ds.labels[r]);
    }
    out.labels = LabelMatrix(std::move(labels), ds.labels.num_classes());
    return out;
}

/// Per class, a seeded shuffle puts round(n_c * test_fraction) rows in the test split. Both splits keep
/// the original row order.
inline Split stratified_split(const Dataset& ds, double test_fraction, std::uint64_t seed)
{
    detail::require(test_fraction > 0.0 && test_fraction < 1.0, ErrorKind::invalid_argument,
                    "test fraction must be in (0, 1)");
    std::vector<std::vector<ItemId>> by_class(static_cast<std::size_t>(ds.labels.num_classes()));
    for (Eigen::Index i = 0; i < ds.labels.rows(); ++i) {
        by_class[static_cast<std::size_t>(ds.labels[i])].push_back(static_cast<ItemId>(i));
    }
    Rng rng(seed);
    Split s;
    for (auto& rows : by_class) {
        std::shuffle(rows.begin(), rows.end(), rng);
        const auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(rows.size()) * test_fraction));
        s.test_ids.insert(s.test_ids.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_test));
        s.train_ids.insert(s.train_ids.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_test), rows.end());
    }
    std::sort(s.train_ids.begin(), s.train_ids.end());
    std::sort(s.test_ids.begin(), s.test_ids.end());
    s.train = take_rows(ds, s.train_ids);
    s.test = take_rows(ds, s.test_ids);
    return s;
}

struct SyntheticParams {
    Eigen::Index n = 1200;
    Eigen::Index d = 32;
    ClassId k = 4;
    double spread = 0.1;
    std::uint64_t seed = 7;
};

struct DatasetSource {
    std::optional<std::string> path; // empty selects the synthetic generator
    FeatureFormat format = FeatureFormat::csv;
    SyntheticParams synthetic;

    [[nodiscard]] Dataset load() const
    {
        if (path) {
            return load_features(*path, format);
        }
        return generate_synthetic(synthetic.n, synthetic.d, synthetic.k, synthetic.spread, synthetic.seed);
    }
};

enum class ReportFormat { csv, tsv };

inline ReportFormat parse_report_format(std::string_view s)
{
    if (s == "csv") {
        return ReportFormat::csv;
    }
    if (s == "tsv") {
        return ReportFormat::tsv;
    }
    throw Error(ErrorKind::invalid_argument, "unknown report format '" + std::string(s) + "'");
}

struct ExperimentSpec {
    DatasetSource dataset;
    double test_fraction = 1.0 / 6.0;
    std::uint64_t split_seed = 0;
    TrainConfig train;
    std::vector<int> code_bits{64};
    std::vector<ChannelConfig> channels;
    std::vector<int> radii{2};
    bool compute_map = true;
    std::string output_dir;
    ReportFormat format = ReportFormat::tsv;

    void validate() const
    {
        detail::require(!code_bits.empty(), ErrorKind::invalid_argument, "spec needs at least one code length");
        detail::require(!channels.empty(), ErrorKind::invalid_argument, "spec needs at least one channel config");
        detail::require(!radii.empty(), ErrorKind::invalid_argument, "spec needs at least one radius");
        for (int b : code_bits) {
            detail::require(b >= 1, ErrorKind::invalid_argument, "code lengths must be >= 1");
        }
        for (int r : radii) {
            detail::require(r >= 0, ErrorKind::invalid_argument, "radii must be >= 0");
        }
        for (const auto& c : channels) {
            c.validate();
        }
        if (dataset.path) {
            detail::require(std::filesystem::exists(*dataset.path), ErrorKind::invalid_argument,
                            "dataset file " + *dataset.path + " does not exist");
        }
        TrainConfig probe = train;
        probe.validate();
    }
};

struct SideMetrics {
    std::vector<double> precision; // aligned with radii
    std::vector<std::size_t> empty_returns;
    double map = std::numeric_limits<double>::quiet_NaN();
    std::size_t map_excluded = 0;
};

struct SummaryRow {
    int code_bits = 0;
    ChannelKind channel = ChannelKind::awgn;
    double snr_db = 0.0;
    double rician_k_db = 0.0;
    bool ok = true;
    double ber = std::numeric_limits<double>::quiet_NaN();
    std::size_t n_queries = 0;
    SideMetrics sender;
    SideMetrics receiver;
};

struct TrainRun {
    int code_bits = 0;
    bool ok = true;
    TrainTrace trace;
    double train_seconds = 0.0;
    double encode_seconds = 0.0;
    std::size_t encoded_bits = 0;
    std::optional<HashModel> model;
    std::optional<KnowledgeBase> knowledge_base;
};

struct RunArtifacts {
    std::vector<int> radii;
    bool has_map = true;
    std::vector<TrainRun> runs;
    std::vector<SummaryRow> rows;

    [[nodiscard]] bool all_ok() const
    {
        return std::all_of(rows.begin(), rows.end(), [](const SummaryRow& r) { return r.ok; })
               && std::all_of(runs.begin(), runs.end(), [](const TrainRun& r) { return r.ok; });
    }
};

namespace detail {

inline SideMetrics score(const SignatureMatrix& queries, const Split& split, const KnowledgeBase& kb,
                         const std::vector<int>& radii, bool with_map)
{
    SideMetrics m;
    for (int r : radii) {
        std::size_t empty = 0;
        m.precision.push_back(precision_at_radius(queries, split.test.labels.labels(), kb, r, &empty));
        m.empty_returns.push_back(empty);
    }
    if (with_map) {
        const auto res = mean_average_precision(queries, split.test.labels.labels(), kb, split.test_ids);
        m.map = res.map;
        m.map_excluded = res.excluded;
    }
    return m;
}

inline std::uint64_t cell_seed(const ChannelConfig& c, int bits, std::size_t channel_index)
{
    return derive_seed(derive_seed(c.seed, static_cast<std::uint64_t>(bits)), channel_index);
}

} // namespace detail

/// Runs every (code length, channel) cell. A failing cell is recorded and the rest continue;
/// `log` receives human-readable progress and errors.
inline RunArtifacts run_experiment(const ExperimentSpec& spec, std::ostream* log = nullptr)
{
    spec.validate();
    using Clock = std::chrono::steady_clock;
    const Dataset data = spec.dataset.load();
    const Split split = stratified_split(data, spec.test_fraction, spec.split_seed);

    RunArtifacts art;
    art.radii = spec.radii;
    art.has_map = spec.compute_map;

    for (int bits : spec.code_bits) {
        TrainRun run;
        run.code_bits = bits;
        std::optional<SideMetrics> sender;
        SignatureMatrix queries;
        try {
            TrainConfig cfg = spec.train;
            cfg.code_bits = bits;
            const auto t0 = Clock::now();
            TrainResult trained = train(split.train.features, split.train.labels, cfg);
            run.train_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
            run.trace = trained.trace;

            const auto t1 = Clock::now();
            const KnowledgeBase kb(trained.model.encode_rows(split.train.features), split.train.labels.labels(),
                                   split.train_ids);
            queries = trained.model.encode_rows(split.test.features);
            run.encode_seconds = std::chrono::duration<double>(Clock::now() - t1).count();
            run.encoded_bits = static_cast<std::size_t>(bits) * (kb.size() + static_cast<std::size_t>(queries.rows()));

            sender = detail::score(queries, split, kb, spec.radii, spec.compute_map);
            run.model = std::move(trained.model);
            run.knowledge_base = kb;
        } catch (const std::exception& e) {
            run.ok = false;
            if (log != nullptr) {
                *log << "B=" << bits << ": training failed: " << e.what() << '\n';
            }
        }

        for (std::size_t ci = 0; ci < spec.channels.size(); ++ci) {
            const ChannelConfig& ch = spec.channels[ci];
            SummaryRow row;
            row.code_bits = bits;
            row.channel = ch.kind;
            row.snr_db = ch.snr_db;
            row.rician_k_db = ch.kind == ChannelKind::rician ? ch.rician_k_db : 0.0;
            row.n_queries = static_cast<std::size_t>(split.test.features.rows());
            if (!run.ok || !sender) {
                row.ok = false;
                art.rows.push_back(row);
                continue;
            }
            try {
                row.sender = *sender;
                ChannelConfig cell = ch;
                cell.seed = detail::cell_seed(ch, bits, ci);
                const auto sent = transmit_batch(queries, cell);
                row.ber = sent.ber;
                row.receiver = detail::score(sent.received, split, *run.knowledge_base, spec.radii, spec.compute_map);
            } catch (const std::exception& e) {
                row.ok = false;
                if (log != nullptr) {
                    *log << "B=" << bits << " " << to_string(ch.kind) << " " << ch.snr_db << " dB: " << e.what() << '\n';
                }
            }
            art.rows.push_back(row);
        }
        if (log != nullptr && run.ok) {
            *log << "B=" << bits << ": " << run.trace.bit_passes() << " passes, " << to_string(run.trace.status) << '\n';
        }
        art.runs.push_back(std::move(run));
    }
    return art;
}

// ---------------------------------------------------------------------------
// Tables

namespace detail {

class TableWriter {
public:
    TableWriter(std::ostream& out, char sep)
        : out_(out)
        , sep_(sep)
    {
    }

    void header(const std::vector<std::string>& cols, const std::string& description)
    {
        out_ << "# " << description << '\n';
        out_ << "# columns:";
        for (const auto& c : cols) {
            out_ << ' ' << c;
        }
        out_ << '\n';
        row(cols);
    }

    void row(const std::vector<std::string>& cells)
    {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            out_ << (i == 0 ? "" : std::string(1, sep_)) << cells[i];
        }
        out_ << '\n';
    }

private:
    std::ostream& out_;
    char sep_;
};

inline std::string num(double v) { return format_fixed17(v); }
inline std::string num(std::size_t v) { return std::to_string(v); }
inline std::string num(int v) { return std::to_string(v); }

inline std::vector<std::string> summary_columns(const RunArtifacts& art)
{
    std::vector<std::string> cols{"code_bits", "channel",  "snr_db",      "rician_k_db",          "status",
                                  "ber",       "n_queries", "sender_map", "receiver_map", "sender_map_excluded",
                                  "receiver_map_excluded"};
    for (int r : art.radii) {
        const auto s = std::to_string(r);
        cols.push_back("sender_precision_r" + s);
        cols.push_back("receiver_precision_r" + s);
        cols.push_back("sender_empty_r" + s);
        cols.push_back("receiver_empty_r" + s);
    }
    return cols;
}

inline double at_or_nan(const std::vector<double>& v, std::size_t i)
{
    return i < v.size() ? v[i] : std::numeric_limits<double>::quiet_NaN();
}

inline std::size_t at_or_zero(const std::vector<std::size_t>& v, std::size_t i) { return i < v.size() ? v[i] : 0; }

inline std::vector<std::string> row_key(const SummaryRow& r)
{
    return {num(r.code_bits), std::string(to_string(r.channel)), num(r.snr_db), num(r.rician_k_db)};
}

template <typename Less>
std::vector<const SummaryRow*> sorted_rows(const RunArtifacts& art, Less less)
{
    std::vector<const SummaryRow*> rows;
    for (const auto& r : art.rows) {
        rows.push_back(&r);
    }
    std::stable_sort(rows.begin(), rows.end(), [&](const SummaryRow* a, const SummaryRow* b) { return less(*a, *b); });
    return rows;
}

inline void write_summary(std::ostream& out, const RunArtifacts& art, char sep)
{
    TableWriter t(out, sep);
    t.header(summary_columns(art), "semsig sweep summary: one row per (code_bits, channel, snr_db) cell");
    for (const auto& r : art.rows) {
        std::vector<std::string> cells = row_key(r);
        cells.push_back(r.ok ? "ok" : "failed");
        cells.push_back(num(r.ber));
        cells.push_back(num(r.n_queries));
        cells.push_back(num(r.sender.map));
        cells.push_back(num(r.receiver.map));
        cells.push_back(num(r.sender.map_excluded));
        cells.push_back(num(r.receiver.map_excluded));
        for (std::size_t i = 0; i < art.radii.size(); ++i) {
            cells.push_back(num(at_or_nan(r.sender.precision, i)));
            cells.push_back(num(at_or_nan(r.receiver.precision, i)));
            cells.push_back(num(at_or_zero(r.sender.empty_returns, i)));
            cells.push_back(num(at_or_zero(r.receiver.empty_returns, i)));
        }
        t.row(cells);
    }
}

inline void write_trace(std::ostream& out, const RunArtifacts& art, char sep)
{
    TableWriter t(out, sep);
    t.header({"code_bits", "iteration", "objective", "objective_after_w", "objective_after_q", "bits_flipped", "status"},
             "loss vs iteration: one row per executed outer pass");
    for (const auto& run : art.runs) {
        for (const auto& it : run.trace.iterations) {
            t.row({num(run.code_bits), num(it.iteration), num(it.objective), num(it.objective_after_w),
                   num(it.objective_after_q), num(static_cast<std::size_t>(it.bits_flipped)),
                   std::string(to_string(run.trace.status))});
        }
    }
}

inline void write_timing(std::ostream& out, const RunArtifacts& art, char sep)
{
    TableWriter t(out, sep);
    t.header({"code_bits", "train_seconds", "encode_seconds", "encoded_bits", "bits_per_second"},
             "wall time and encode throughput (machine dependent, excluded from determinism checks)");
    for (const auto& run : art.runs) {
        const double rate = run.encode_seconds > 0.0 ? static_cast<double>(run.encoded_bits) / run.encode_seconds : 0.0;
        t.row({num(run.code_bits), num(run.train_seconds), num(run.encode_seconds), num(run.encoded_bits), num(rate)});
    }
}

inline std::ofstream open_table(const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorKind::io_error, "cannot write " + path.string());
    return out;
}

} // namespace detail

/// Writes one table per figure family plus the summary, trace and timing tables. Returns the written paths.
inline std::vector<std::filesystem::path> emit_report(const RunArtifacts& art, ReportFormat format,
                                                      const std::filesystem::path& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    detail::require(!ec && std::filesystem::is_directory(dir), ErrorKind::io_error, "cannot create " + dir.string());
    const char sep = format == ReportFormat::csv ? ',' : '\t';
    const std::string ext = format == ReportFormat::csv ? ".csv" : ".tsv";
    std::vector<std::filesystem::path> written;
    auto open = [&](const std::string& stem) {
        written.push_back(dir / (stem + ext));
        return detail::open_table(written.back());
    };
    using detail::num;

    {
        auto out = open("summary");
        detail::write_summary(out, art, sep);
    }
    {
        auto out = open("loss_vs_iteration");
        detail::write_trace(out, art, sep);
    }
    {
        auto out = open("timing");
        detail::write_timing(out, art, sep);
    }

    const auto by_channel_then_bits = [](const SummaryRow& a, const SummaryRow& b) {
        return std::tie(a.channel, a.snr_db, a.rician_k_db, a.code_bits) < std::tie(b.channel, b.snr_db, b.rician_k_db, b.code_bits);
    };
    const auto by_bits_then_snr = [](const SummaryRow& a, const SummaryRow& b) {
        return std::tie(a.code_bits, a.channel, a.rician_k_db, a.snr_db) < std::tie(b.code_bits, b.channel, b.rician_k_db, b.snr_db);
    };

    auto precision_table = [&](const std::string& stem, const auto& less, const std::string& what) {
        auto out = open(stem);
        detail::TableWriter t(out, sep);
        t.header({"code_bits", "channel", "snr_db", "rician_k_db", "radius", "sender_precision", "receiver_precision"}, what);
        for (std::size_t ri = 0; ri < art.radii.size(); ++ri) {
            for (const auto* r : detail::sorted_rows(art, less)) {
                auto cells = detail::row_key(*r);
                cells.push_back(num(art.radii[ri]));
                cells.push_back(num(detail::at_or_nan(r->sender.precision, ri)));
                cells.push_back(num(detail::at_or_nan(r->receiver.precision, ri)));
                t.row(cells);
            }
        }
    };
    auto map_table = [&](const std::string& stem, const auto& less, const std::string& what) {
        auto out = open(stem);
        detail::TableWriter t(out, sep);
        t.header({"code_bits", "channel", "snr_db", "rician_k_db", "sender_map", "receiver_map"}, what);
        if (!art.has_map) {
            return;
        }
        for (const auto* r : detail::sorted_rows(art, less)) {
            auto cells = detail::row_key(*r);
            cells.push_back(num(r->sender.map));
            cells.push_back(num(r->receiver.map));
            t.row(cells);
        }
    };

    precision_table("precision_vs_bits", by_channel_then_bits, "precision within Hamming radius vs code length");
    map_table("map_vs_bits", by_channel_then_bits, "MAP over the Hamming ranking vs code length");
    precision_table("precision_vs_snr", by_bits_then_snr, "precision within Hamming radius vs SNR");
    map_table("map_vs_snr", by_bits_then_snr, "MAP over the Hamming ranking vs SNR");
    return written;
}

// ---------------------------------------------------------------------------
// Reading stored artifacts back (the `report` subcommand)

namespace detail {

inline std::vector<std::vector<std::string>> read_table(const std::filesystem::path& path, char sep)
{
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorKind::io_error, "cannot open " + path.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line.front() == '#') {
            continue;
        }
        std::vector<std::string> cells;
        for (auto f : split(line, sep)) {
            cells.emplace_back(f);
        }
        rows.push_back(std::move(cells));
    }
    return rows;
}

} // namespace detail

/// Rebuilds artifacts from the summary and trace tables written by emit_report.
inline RunArtifacts read_artifacts(const std::filesystem::path& dir, ReportFormat format = ReportFormat::tsv)
{
    const char sep = format == ReportFormat::csv ? ',' : '\t';
    const std::string ext = format == ReportFormat::csv ? ".csv" : ".tsv";
    RunArtifacts art;

    const auto summary = detail::read_table(dir / ("summary" + ext), sep);
    detail::require(!summary.empty(), ErrorKind::parse_error, "summary table has no header");
    const auto& header = summary.front();
    constexpr std::size_t fixed = 11;
    detail::require(header.size() >= fixed && (header.size() - fixed) % 4 == 0, ErrorKind::parse_error,
                    "unexpected summary columns");
    for (std::size_t c = fixed; c < header.size(); c += 4) {
        const std::string prefix = "sender_precision_r";
        detail::require(header[c].rfind(prefix, 0) == 0, ErrorKind::parse_error, "unexpected column " + header[c]);
        art.radii.push_back(detail::parse_int<int>(header[c].substr(prefix.size()), "radius column"));
    }

    std::map<int, TrainRun> runs;
    bool any_map = false;
    bool any_ok = false;
    for (std::size_t i = 1; i < summary.size(); ++i) {
        const auto& cells = summary[i];
        const auto ctx = "summary row " + std::to_string(i);
        detail::require(cells.size() == header.size(), ErrorKind::parse_error, ctx + ": wrong cell count");
        SummaryRow r;
        r.code_bits = detail::parse_int<int>(cells[0], ctx);
        r.channel = parse_channel_kind(cells[1]);
        r.snr_db = detail::parse_double(cells[2], ctx);
        r.rician_k_db = detail::parse_double(cells[3], ctx);
        r.ok = cells[4] == "ok";
        r.ber = detail::parse_double(cells[5], ctx);
        r.n_queries = detail::parse_int<std::size_t>(cells[6], ctx);
        r.sender.map = detail::parse_double(cells[7], ctx);
        r.receiver.map = detail::parse_double(cells[8], ctx);
        r.sender.map_excluded = detail::parse_int<std::size_t>(cells[9], ctx);
        r.receiver.map_excluded = detail::parse_int<std::size_t>(cells[10], ctx);
        for (std::size_t c = fixed; c < cells.size(); c += 4) {
            r.sender.precision.push_back(detail::parse_double(cells[c], ctx));
            r.receiver.precision.push_back(detail::parse_double(cells[c + 1], ctx));
            r.sender.empty_returns.push_back(detail::parse_int<std::size_t>(cells[c + 2], ctx));
            r.receiver.empty_returns.push_back(detail::parse_int<std::size_t>(cells[c + 3], ctx));
        }
        any_ok = any_ok || r.ok;
        any_map = any_map || (r.ok && !std::isnan(r.sender.map));
        runs[r.code_bits].code_bits = r.code_bits;
        art.rows.push_back(std::move(r));
    }

    art.has_map = !any_ok || any_map;

    const auto trace = detail::read_table(dir / ("loss_vs_iteration" + ext), sep);
    for (std::size_t i = 1; i < trace.size(); ++i) {
        const auto& cells = trace[i];
        const auto ctx = "trace row " + std::to_string(i);
        detail::require(cells.size() == 7, ErrorKind::parse_error, ctx + ": wrong cell count");
        const int bits = detail::parse_int<int>(cells[0], ctx);
        auto& run = runs[bits];
        run.code_bits = bits;
        IterationRecord rec;
        rec.iteration = detail::parse_int<int>(cells[1], ctx);
        rec.objective = detail::parse_double(cells[2], ctx);
        rec.objective_after_w = detail::parse_double(cells[3], ctx);
        rec.objective_after_q = detail::parse_double(cells[4], ctx);
        rec.bits_flipped = detail::parse_int<Eigen::Index>(cells[5], ctx);
        run.trace.status = cells[6] == "converged" ? TrainStatus::converged : TrainStatus::max_iters;
        run.trace.iterations.push_back(rec);
    }

    const auto timing_path = dir / ("timing" + ext);
    if (std::filesystem::exists(timing_path)) {
        const auto timing = detail::read_table(timing_path, sep);
        for (std::size_t i = 1; i < timing.size(); ++i) {
            const auto& cells = timing[i];
            const auto ctx = "timing row " + std::to_string(i);
            detail::require(cells.size() == 5, ErrorKind::parse_error, ctx + ": wrong cell count");
            auto& run = runs[detail::parse_int<int>(cells[0], ctx)];
            run.code_bits = detail::parse_int<int>(cells[0], ctx);
            run.train_seconds = detail::parse_double(cells[1], ctx);
            run.encode_seconds = detail::parse_double(cells[2], ctx);
            run.encoded_bits = detail::parse_int<std::size_t>(cells[3], ctx);
        }
    }

    // Keep the run order of the summary (code lengths in first-seen order).
    std::vector<int> order;
    for (const auto& r : art.rows) {
        if (std::find(order.begin(), order.end(), r.code_bits) == order.end()) {
            order.push_back(r.code_bits);
        }
    }
    for (const auto& [bits, run] : runs) {
        if (std::find(order.begin(), order.end(), bits) == order.end()) {
            order.push_back(bits);
        }
    }
    for (int bits : order) {
        art.runs.push_back(runs[bits]);
    }
    return art;
}

} // namespace semsig

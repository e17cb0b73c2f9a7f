// semsig command-line tool. Logs go to stderr, data goes to files.
//
// Exit codes: 0 success, 1 a sweep cell failed, 2 bad arguments / spec / input.

#include <semsig/semsig.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace semsig;

constexpr int kExitOk = 0;
constexpr int kExitCellFailed = 1;
constexpr int kExitSpec = 2;

struct DataArgs {
    std::string path;
    std::string format = "csv";
    std::vector<double> synthetic; // n, d, k, spread, seed

    void attach(CLI::App* cmd, const std::string& flag, const std::string& what)
    {
        cmd->add_option(flag, path, what + " feature file");
        cmd->add_option(flag + "-format", format, "csv or bin")->capture_default_str();
        cmd->add_option(flag == "--data" ? "--synthetic" : flag + "-synthetic", synthetic,
                        "generate instead: n d k spread seed")
            ->expected(5);
    }

    [[nodiscard]] Dataset load() const
    {
        if (!synthetic.empty()) {
            return generate_synthetic(static_cast<Eigen::Index>(synthetic[0]), static_cast<Eigen::Index>(synthetic[1]),
                                      static_cast<ClassId>(synthetic[2]), synthetic[3],
                                      static_cast<std::uint64_t>(synthetic[4]));
        }
        detail::require(!path.empty(), ErrorKind::invalid_argument, "no dataset given");
        return load_features(path, parse_feature_format(format));
    }
};

void add_train_options(CLI::App* cmd, TrainConfig& tc, std::string& loss)
{
    cmd->add_option("--bits", tc.code_bits, "code length B")->capture_default_str();
    cmd->add_option("--anchors", tc.anchor_count, "anchor count (0 = min(n, 1000))")->capture_default_str();
    cmd->add_option("--alpha", tc.alpha, "classifier regularizer")->capture_default_str();
    cmd->add_option("--penalty", tc.penalty, "code/projection coupling")->capture_default_str();
    cmd->add_option("--max-iters", tc.max_iters, "iteration limit")->capture_default_str();
    cmd->add_option("--tau", tc.max_bit_passes, "bit-pass limit")->capture_default_str();
    cmd->add_option("--loss", loss, "squared or hinge")->capture_default_str();
    cmd->add_option("--proj-lambda", tc.proj_lambda, "projection ridge")->capture_default_str();
    cmd->add_option("--tol", tc.tol, "objective tolerance")->capture_default_str();
    cmd->add_option("--width", tc.kernel_width, "RBF width (0 = median heuristic)")->capture_default_str();
    cmd->add_option("--seed", tc.seed, "training seed")->capture_default_str();
}

void write_trace_file(const std::string& path, const TrainTrace& trace)
{
    std::ofstream out(path);
    detail::require(static_cast<bool>(out), ErrorKind::io_error, "cannot write " + path);
    out << "# training objective per outer iteration\n";
    out << "iteration\tobjective\tobjective_after_w\tobjective_after_q\tbits_flipped\n";
    out << 0 << '\t' << detail::format_fixed17(trace.initial_objective) << "\t\t\t\n";
    for (const auto& it : trace.iterations) {
        out << it.iteration << '\t' << detail::format_fixed17(it.objective) << '\t' << detail::format_fixed17(it.objective_after_w)
            << '\t' << detail::format_fixed17(it.objective_after_q) << '\t' << it.bits_flipped << '\n';
    }
}

KnowledgeBase load_base(const std::string& path)
{
    // Accept either a binary model carrying a knowledge-base section or a text knowledge base.
    std::ifstream probe(path, std::ios::binary);
    detail::require(static_cast<bool>(probe), ErrorKind::io_error, "cannot open " + path);
    std::string head(kModelMagic.size(), '\0');
    probe.read(head.data(), static_cast<std::streamsize>(head.size()));
    if (head == kModelMagic) {
        auto bundle = load_model(path);
        detail::require(bundle.knowledge_base.has_value(), ErrorKind::invalid_argument,
                        path + " has no knowledge-base section");
        return std::move(*bundle.knowledge_base);
    }
    return load_kb_text(path);
}

std::vector<std::string> split_csv_arg(const std::string& s)
{
    std::vector<std::string> out;
    for (auto part : detail::split(s, ',')) {
        if (const auto t = detail::trim(part); !t.empty()) {
            out.emplace_back(t);
        }
    }
    return out;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Semantic signature training, transmission and retrieval"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    // train
    auto* train_cmd = app.add_subcommand("train", "train a hash model; the output embeds the training knowledge base");
    DataArgs train_data;
    TrainConfig train_cfg;
    std::string train_loss = "squared";
    std::string train_out;
    std::string train_trace;
    train_data.attach(train_cmd, "--data", "training");
    add_train_options(train_cmd, train_cfg, train_loss);
    train_cmd->add_option("--out", train_out, "model file")->required();
    train_cmd->add_option("--trace", train_trace, "write the per-iteration objective table");

    // encode
    auto* encode_cmd = app.add_subcommand("encode", "encode a labeled feature set into a text knowledge base");
    std::string encode_model;
    DataArgs encode_data;
    std::string encode_out;
    encode_cmd->add_option("--model", encode_model, "model file")->required();
    encode_data.attach(encode_cmd, "--data", "input");
    encode_cmd->add_option("--out", encode_out, "knowledge-base text file")->required();

    // transmit
    auto* transmit_cmd = app.add_subcommand("transmit", "pass every signature of a knowledge base through a channel");
    std::string tx_in;
    std::string tx_out;
    std::string tx_kind = "awgn";
    ChannelConfig tx_cfg;
    transmit_cmd->add_option("--in", tx_in, "knowledge-base text file")->required();
    transmit_cmd->add_option("--out", tx_out, "received knowledge-base text file")->required();
    transmit_cmd->add_option("--channel", tx_kind, "awgn, rayleigh or rician")->capture_default_str();
    transmit_cmd->add_option("--snr-db", tx_cfg.snr_db, "per-bit SNR in dB")->capture_default_str();
    transmit_cmd->add_option("--rician-k-db", tx_cfg.rician_k_db, "Rician K factor in dB")->capture_default_str();
    transmit_cmd->add_option("--seed", tx_cfg.seed, "noise seed")->capture_default_str();
    transmit_cmd->add_flag("--block-fading", tx_cfg.block_fading, "one fading coefficient per signature");

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "precision within radius and MAP of queries against a base");
    std::string eval_base;
    std::string eval_queries;
    std::vector<int> eval_radii{2};
    std::string eval_out;
    bool eval_exclude_self = false;
    eval_cmd->add_option("--base", eval_base, "model with knowledge base, or knowledge-base text file")->required();
    eval_cmd->add_option("--queries", eval_queries, "query knowledge-base text file")->required();
    eval_cmd->add_option("--radii", eval_radii, "Hamming radii")->delimiter(',')->capture_default_str();
    eval_cmd->add_option("--out", eval_out, "metrics table")->required();
    eval_cmd->add_flag("--exclude-self", eval_exclude_self, "drop base items sharing the query id from MAP rankings");

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "run an experiment config and write its report tables");
    std::string sweep_config;
    std::string sweep_dir;
    std::string sweep_format;
    std::vector<int> sweep_bits;
    std::vector<double> sweep_snr;
    std::string sweep_channels;
    std::optional<std::uint64_t> sweep_seed;
    std::string sweep_loss;
    sweep_cmd->add_option("--config", sweep_config, "experiment config file")->required();
    sweep_cmd->add_option("--out-dir", sweep_dir, "override [output] dir");
    sweep_cmd->add_option("--format", sweep_format, "override [output] format (csv or tsv)");
    sweep_cmd->add_option("--bits", sweep_bits, "override [train] bits")->delimiter(',');
    sweep_cmd->add_option("--snr-db", sweep_snr, "override [channel] snr_db")->delimiter(',');
    sweep_cmd->add_option("--channels", sweep_channels, "override [channel] kinds, comma separated");
    sweep_cmd->add_option("--seed", sweep_seed, "override [train] seed");
    sweep_cmd->add_option("--loss", sweep_loss, "override [train] loss");

    // report
    auto* report_cmd = app.add_subcommand("report", "re-emit report tables from a finished sweep directory");
    std::string report_run;
    std::string report_in_format = "tsv";
    std::string report_out;
    std::string report_format = "tsv";
    report_cmd->add_option("--run", report_run, "sweep output directory")->required();
    report_cmd->add_option("--in-format", report_in_format, "format of the existing tables")->capture_default_str();
    report_cmd->add_option("--out", report_out, "destination directory")->required();
    report_cmd->add_option("--format", report_format, "csv or tsv")->capture_default_str();

    // adapt
    auto* adapt_cmd = app.add_subcommand("adapt", "domain-adapt a model toward a receiver feature set");
    std::string adapt_model;
    DataArgs adapt_sender;
    DataArgs adapt_receiver;
    DahConfig adapt_cfg;
    std::string adapt_out;
    adapt_cmd->add_option("--model", adapt_model, "model file")->required();
    adapt_sender.attach(adapt_cmd, "--data", "sender (labeled)");
    adapt_receiver.attach(adapt_cmd, "--receiver", "receiver (labels ignored)");
    adapt_cmd->add_option("--eta", adapt_cfg.eta, "entropy weight")->capture_default_str();
    adapt_cmd->add_option("--gamma", adapt_cfg.gamma, "MMD weight")->capture_default_str();
    adapt_cmd->add_option("--bandwidths", adapt_cfg.bandwidth_multipliers, "kernel width multipliers")->delimiter(',');
    adapt_cmd->add_option("--confidence", adapt_cfg.confidence, "pseudo-label threshold")->capture_default_str();
    adapt_cmd->add_option("--vote-radius", adapt_cfg.vote_radius, "pseudo-label vote radius")->capture_default_str();
    adapt_cmd->add_option("--iters", adapt_cfg.max_adapt_iters, "adaptation rounds")->capture_default_str();
    adapt_cmd->add_option("--seed", adapt_cfg.seed, "seed")->capture_default_str();
    adapt_cmd->add_option("--out", adapt_out, "adapted model file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitSpec;
    }

    try {
        if (*train_cmd) {
            train_cfg.loss = parse_loss_kind(train_loss);
            const Dataset ds = train_data.load();
            std::cerr << "training on " << ds.features.rows() << " x " << ds.features.cols() << ", B = "
                      << train_cfg.code_bits << '\n';
            const auto result = train(ds.features, ds.labels, train_cfg);
            std::cerr << "status " << to_string(result.trace.status) << " after " << result.trace.bit_passes()
                      << " passes, objective "
                      << (result.trace.iterations.empty() ? result.trace.initial_objective
                                                          : result.trace.iterations.back().objective)
                      << '\n';
            const KnowledgeBase kb(result.model.encode_rows(ds.features), ds.labels.labels());
            save_model(train_out, result.model, &kb);
            if (!train_trace.empty()) {
                write_trace_file(train_trace, result.trace);
            }
        } else if (*encode_cmd) {
            const auto bundle = load_model(encode_model);
            const Dataset ds = encode_data.load();
            save_kb_text(encode_out, KnowledgeBase(bundle.model.encode_rows(ds.features), ds.labels.labels()));
            std::cerr << "encoded " << ds.features.rows() << " rows\n";
        } else if (*transmit_cmd) {
            tx_cfg.kind = parse_channel_kind(tx_kind);
            const KnowledgeBase kb = load_kb_text(tx_in);
            const auto tx = transmit_batch(kb.codes(), tx_cfg);
            save_kb_text(tx_out, KnowledgeBase(tx.received, kb.labels(), kb.ids()));
            std::cerr << "flipped " << tx.flipped << " of " << tx.total_bits << " bits, BER " << tx.ber << '\n';
        } else if (*eval_cmd) {
            const KnowledgeBase base = load_base(eval_base);
            const KnowledgeBase queries = load_kb_text(eval_queries);
            std::span<const ItemId> qids;
            if (eval_exclude_self) {
                qids = queries.ids();
            }
            const auto rep = evaluate(queries.codes(), queries.labels(), base, eval_radii, qids);
            std::ofstream out(eval_out);
            detail::require(static_cast<bool>(out), ErrorKind::io_error, "cannot write " + eval_out);
            out << "# retrieval metrics; precision counts an empty ball as 0\n";
            out << "metric\tradius\tvalue\n";
            for (std::size_t i = 0; i < rep.radii.size(); ++i) {
                out << "precision\t" << rep.radii[i] << '\t' << detail::format_fixed17(rep.precision_at_r[i]) << '\n';
                out << "empty_returns\t" << rep.radii[i] << '\t' << rep.empty_return_count[i] << '\n';
            }
            out << "map\t\t" << detail::format_fixed17(rep.map) << '\n';
            out << "n_queries\t\t" << rep.n_queries << '\n';
            out << "map_excluded_queries\t\t" << rep.map_excluded_queries << '\n';
            std::cerr << "MAP " << rep.map << " over " << rep.n_queries << " queries\n";
        } else if (*sweep_cmd) {
            auto pc = load_experiment_config(sweep_config);
            if (!sweep_dir.empty()) {
                pc.spec.output_dir = sweep_dir;
            }
            if (!sweep_format.empty()) {
                pc.spec.format = parse_report_format(sweep_format);
            }
            if (!sweep_bits.empty()) {
                pc.spec.code_bits = sweep_bits;
            }
            if (sweep_seed) {
                pc.spec.train.seed = *sweep_seed;
            }
            if (!sweep_loss.empty()) {
                pc.spec.train.loss = parse_loss_kind(sweep_loss);
            }
            if (!sweep_snr.empty() || !sweep_channels.empty()) {
                if (!sweep_snr.empty()) {
                    pc.grid.snr_db = sweep_snr;
                }
                if (!sweep_channels.empty()) {
                    pc.grid.kinds.clear();
                    for (const auto& k : split_csv_arg(sweep_channels)) {
                        pc.grid.kinds.push_back(parse_channel_kind(k));
                    }
                }
                pc.spec.channels = pc.grid.expand();
            }
            detail::require(!pc.spec.output_dir.empty(), ErrorKind::invalid_argument, "no output directory given");
            pc.spec.validate();
            const auto art = run_experiment(pc.spec, &std::cerr);
            for (const auto& p : emit_report(art, pc.spec.format, pc.spec.output_dir)) {
                std::cerr << "wrote " << p.string() << '\n';
            }
            if (!art.all_ok()) {
                std::cerr << "one or more cells failed\n";
                return kExitCellFailed;
            }
        } else if (*report_cmd) {
            const auto art = read_artifacts(report_run, parse_report_format(report_in_format));
            for (const auto& p : emit_report(art, parse_report_format(report_format), report_out)) {
                std::cerr << "wrote " << p.string() << '\n';
            }
        } else if (*adapt_cmd) {
            const auto bundle = load_model(adapt_model);
            const Dataset sender = adapt_sender.load();
            const Dataset receiver = adapt_receiver.load();
            const auto res = adapt(bundle.model, sender.features, sender.labels, receiver.features, adapt_cfg);
            std::cerr << "J " << res.report.j_value << " (fit " << res.report.fit_term << ", entropy "
                      << res.report.entropy_term << ", mmd " << res.report.mmd_term << ") after "
                      << res.report.trace.size() << " rounds\n";
            const KnowledgeBase kb(res.model.encode_rows(sender.features), sender.labels.labels());
            save_model(adapt_out, res.model, &kb);
        }
    } catch (const Error& e) {
        std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
        return kExitSpec;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitSpec;
    }
    return kExitOk;
}

#pragma once

// Line-oriented experiment config:
//
//   [dataset]            synthetic generator or a feature file
//   path = feats.csv     (omit for synthetic)
//   format = csv | bin
//   n = 1200, dim = 32, classes = 4, spread = 0.1, seed = 7
//   test_fraction = 0.1666, split_seed = 0
//
//   [train]
//   bits = 16, 32, 64    anchors, alpha, penalty, max_iters, loss, proj_lambda, tol, seed, width, tau
//
//   [channel]
//   kinds = awgn, rician  snr_db = 6, 10, 14, 18  rician_k_db = 6  seed = 99  block_fading = false
//
//   [eval]
//   radii = 0, 1, 2      map = true
//
//   [output]
//   dir = out            format = tsv | csv
//
// Every (kind, snr) pair becomes one channel config. `#` and `;` start comments.

#include "semsig/experiment.hpp"

#include <fstream>
#include <istream>
#include <set>
#include <string>

namespace semsig {

namespace detail {

inline bool parse_bool(std::string_view s, const std::string& ctx)
{
    if (s == "true" || s == "1" || s == "yes" || s == "on") {
        return true;
    }
    if (s == "false" || s == "0" || s == "no" || s == "off") {
        return false;
    }
    throw Error(ErrorKind::parse_error, ctx + ": expected a boolean, got '" + std::string(s) + "'");
}

template <typename T, typename Parse>
std::vector<T> parse_list(std::string_view s, Parse parse)
{
    std::vector<T> out;
    for (auto part : split(s, ',')) {
        const auto t = trim(part);
        if (!t.empty()) {
            out.push_back(parse(t));
        }
    }
    return out;
}

} // namespace detail

/// Channel grid parsed from a config; expanded to the cartesian product of kinds and SNRs.
struct ChannelGrid {
    std::vector<ChannelKind> kinds{ChannelKind::awgn};
    std::vector<double> snr_db{10.0};
    double rician_k_db = 6.0;
    std::uint64_t seed = 0;
    bool block_fading = false;

    [[nodiscard]] std::vector<ChannelConfig> expand() const
    {
        std::vector<ChannelConfig> out;
        for (auto k : kinds) {
            for (double s : snr_db) {
                out.push_back({k, s, rician_k_db, seed, block_fading});
            }
        }
        return out;
    }
};

struct ParsedConfig {
    ExperimentSpec spec;
    ChannelGrid grid;
};

inline ParsedConfig read_experiment_config(std::istream& in)
{
    ParsedConfig pc;
    ExperimentSpec& spec = pc.spec;
    std::string section;
    std::string line;
    int line_no = 0;
    static const std::set<std::string> sections{"dataset", "train", "channel", "eval", "output"};

    while (std::getline(in, line)) {
        ++line_no;
        const auto ctx = "config line " + std::to_string(line_no);
        auto t = detail::trim(line);
        if (const auto hash = t.find_first_of("#;"); hash != std::string_view::npos) {
            t = detail::trim(t.substr(0, hash));
        }
        if (t.empty()) {
            continue;
        }
        if (t.front() == '[') {
            detail::require(t.back() == ']', ErrorKind::parse_error, ctx + ": unterminated section header");
            section = std::string(detail::trim(t.substr(1, t.size() - 2)));
            detail::require(sections.count(section) == 1, ErrorKind::parse_error, ctx + ": unknown section [" + section + "]");
            continue;
        }
        const auto eq = t.find('=');
        detail::require(eq != std::string_view::npos, ErrorKind::parse_error, ctx + ": expected key = value");
        const std::string key(detail::trim(t.substr(0, eq)));
        const auto value = detail::trim(t.substr(eq + 1));
        detail::require(!section.empty(), ErrorKind::parse_error, ctx + ": key outside of a section");

        auto as_double = [&](std::string_view v) { return detail::parse_double(v, ctx); };
        auto as_int = [&](std::string_view v) { return detail::parse_int<int>(v, ctx); };
        auto as_u64 = [&](std::string_view v) { return detail::parse_int<std::uint64_t>(v, ctx); };
        auto unknown = [&] { throw Error(ErrorKind::parse_error, ctx + ": unknown key '" + key + "' in [" + section + "]"); };

        if (section == "dataset") {
            auto& syn = spec.dataset.synthetic;
            if (key == "path") {
                spec.dataset.path = std::string(value);
            } else if (key == "format") {
                spec.dataset.format = parse_feature_format(value);
            } else if (key == "n") {
                syn.n = detail::parse_int<Eigen::Index>(value, ctx);
            } else if (key == "dim") {
                syn.d = detail::parse_int<Eigen::Index>(value, ctx);
            } else if (key == "classes") {
                syn.k = as_int(value);
            } else if (key == "spread") {
                syn.spread = as_double(value);
            } else if (key == "seed") {
                syn.seed = as_u64(value);
            } else if (key == "test_fraction") {
                spec.test_fraction = as_double(value);
            } else if (key == "split_seed") {
                spec.split_seed = as_u64(value);
            } else {
                unknown();
            }
        } else if (section == "train") {
            auto& tc = spec.train;
            if (key == "bits") {
                spec.code_bits = detail::parse_list<int>(value, as_int);
            } else if (key == "anchors") {
                tc.anchor_count = detail::parse_int<Eigen::Index>(value, ctx);
            } else if (key == "alpha") {
                tc.alpha = as_double(value);
            } else if (key == "penalty") {
                tc.penalty = as_double(value);
            } else if (key == "max_iters") {
                tc.max_iters = as_int(value);
            } else if (key == "loss") {
                tc.loss = parse_loss_kind(value);
            } else if (key == "proj_lambda") {
                tc.proj_lambda = as_double(value);
            } else if (key == "tol") {
                tc.tol = as_double(value);
            } else if (key == "seed") {
                tc.seed = as_u64(value);
            } else if (key == "width") {
                tc.kernel_width = as_double(value);
            } else if (key == "tau") {
                tc.max_bit_passes = as_int(value);
            } else if (key == "hinge_passes") {
                tc.hinge_passes = as_int(value);
            } else {
                unknown();
            }
        } else if (section == "channel") {
            auto& g = pc.grid;
            if (key == "kinds" || key == "kind") {
                g.kinds = detail::parse_list<ChannelKind>(value, [](std::string_view v) { return parse_channel_kind(v); });
            } else if (key == "snr_db") {
                g.snr_db = detail::parse_list<double>(value, as_double);
            } else if (key == "rician_k_db") {
                g.rician_k_db = as_double(value);
            } else if (key == "seed") {
                g.seed = as_u64(value);
            } else if (key == "block_fading") {
                g.block_fading = detail::parse_bool(value, ctx);
            } else {
                unknown();
            }
        } else if (section == "eval") {
            if (key == "radii") {
                spec.radii = detail::parse_list<int>(value, as_int);
            } else if (key == "map") {
                spec.compute_map = detail::parse_bool(value, ctx);
            } else {
                unknown();
            }
        } else if (section == "output") {
            if (key == "dir") {
                spec.output_dir = std::string(value);
            } else if (key == "format") {
                spec.format = parse_report_format(value);
            } else {
                unknown();
            }
        }
    }
    spec.channels = pc.grid.expand();
    return pc;
}

inline ParsedConfig load_experiment_config(const std::string& path)
{
    std::ifstream in(path);
    detail::require(static_cast<bool>(in), ErrorKind::io_error, "cannot open config " + path);
    return read_experiment_config(in);
}

} // namespace semsig

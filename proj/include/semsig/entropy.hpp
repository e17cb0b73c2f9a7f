#pragma once

// Information measures for sizing semantic signatures: message entropy, the
// symbol distribution induced by a deterministic ontology map x = f(m), and
// the mutual information between messages and symbols.

#include "semsig/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace semsig {

struct Message {
    std::string id;
    double probability = 0.0;
    std::string symbol; // f(id)
};

using SymbolDistribution = std::map<std::string, double>;

namespace detail {

inline constexpr double kDistributionTolerance = 1e-9;

inline double plogp(double p) { return p > 0.0 ? p * std::log2(p) : 0.0; }

template <typename Range>
void validate_probabilities(const Range& probs)
{
    double total = 0.0;
    for (double p : probs) {
        require(std::isfinite(p) && p >= 0.0, ErrorKind::invalid_distribution, "probabilities must be finite and >= 0");
        total += p;
    }
    require(std::abs(total - 1.0) <= kDistributionTolerance, ErrorKind::invalid_distribution,
            "probabilities sum to " + std::to_string(total) + ", expected 1");
}

} // namespace detail

/// A message source with probabilities P_M(m) and a deterministic symbol map.
class MessageModel {
public:
    explicit MessageModel(std::vector<Message> messages)
        : messages_(std::move(messages))
    {
        detail::require(!messages_.empty(), ErrorKind::invalid_distribution, "message model is empty");
        std::set<std::string> seen;
        for (const auto& m : messages_) {
            detail::require(seen.insert(m.id).second, ErrorKind::invalid_argument,
                            "message id '" + m.id + "' maps to more than one symbol");
        }
        std::vector<double> probs;
        probs.reserve(messages_.size());
        for (const auto& m : messages_) {
            probs.push_back(m.probability);
        }
        detail::validate_probabilities(probs);
    }

    [[nodiscard]] const std::vector<Message>& messages() const noexcept { return messages_; }

private:
    std::vector<Message> messages_;
};

struct EntropyReport {
    double h_message = 0.0;   // H(M)
    double h_symbol = 0.0;    // H(X)
    double mutual_info = 0.0; // B(M;X)
    double h_x_given_m = 0.0;
    double h_m_given_x = 0.0;
    // both routes to B(M;X), kept for the identity check
    double mi_via_message = 0.0; // H(M) - H(M|X)
    double mi_via_symbol = 0.0;  // H(X) - H(X|M)
};

inline double message_entropy(const MessageModel& model)
{
    double h = 0.0;
    for (const auto& m : model.messages()) {
        h -= detail::plogp(m.probability);
    }
    return h;
}

/// P(x) = sum of P_M(m) over messages with f(m) = x.
inline SymbolDistribution symbol_distribution(const MessageModel& model)
{
    SymbolDistribution dist;
    for (const auto& m : model.messages()) {
        dist[m.symbol] += m.probability;
    }
    return dist;
}

inline double semantic_entropy(const std::vector<double>& symbol_probs)
{
    detail::validate_probabilities(symbol_probs);
    double h = 0.0;
    for (double p : symbol_probs) {
        h -= detail::plogp(p);
    }
    return h;
}

inline double semantic_entropy(const SymbolDistribution& dist)
{
    std::vector<double> probs;
    probs.reserve(dist.size());
    for (const auto& [symbol, p] : dist) {
        probs.push_back(p);
    }
    return semantic_entropy(probs);
}

/// Computes B(M;X) both as H(M) - H(M|X) and as H(X) - H(X|M) from the joint table induced by f.
inline EntropyReport semantic_mutual_information(const MessageModel& model)
{
    // The joint P(m, x) has mass P_M(m) on (m, f(m)) and zero elsewhere.
    std::map<std::string, double> p_m;
    std::map<std::string, double> p_x;
    std::map<std::pair<std::string, std::string>, double> joint;
    for (const auto& m : model.messages()) {
        p_m[m.id] += m.probability;
        p_x[m.symbol] += m.probability;
        joint[{m.id, m.symbol}] += m.probability;
    }

    EntropyReport r;
    for (const auto& [id, p] : p_m) {
        r.h_message -= detail::plogp(p);
    }
    for (const auto& [sym, p] : p_x) {
        r.h_symbol -= detail::plogp(p);
    }
    for (const auto& [key, p] : joint) {
        if (p <= 0.0) {
            continue;
        }
        const double pm = p_m.at(key.first);
        const double px = p_x.at(key.second);
        r.h_m_given_x -= p * std::log2(p / px);
        r.h_x_given_m -= p * std::log2(p / pm);
    }
    // p / pm is exactly 1 for a deterministic map, but -0.0 can appear.
    r.h_x_given_m = std::max(0.0, r.h_x_given_m);
    r.h_m_given_x = std::max(0.0, r.h_m_given_x);

    r.mi_via_message = r.h_message - r.h_m_given_x;
    r.mi_via_symbol = r.h_symbol - r.h_x_given_m;
    r.mutual_info = std::clamp(r.mi_via_symbol, 0.0, std::min(r.h_message, r.h_symbol));
    return r;
}

/// ceil(B(M;X) * margin), at least 1.
inline int recommend_code_length(const EntropyReport& report, double margin = 8.0)
{
    detail::require(margin >= 1.0, ErrorKind::invalid_argument, "margin must be >= 1");
    const double bits = std::ceil(report.mutual_info * margin - 1e-12);
    return std::max(1, static_cast<int>(bits));
}

/// Reads `message_id<TAB>probability<TAB>symbol_id` lines. Blank lines and `#` comments are skipped.
inline MessageModel read_message_model(std::istream& in)
{
    std::vector<Message> messages;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty() || line.front() == '#') {
            continue;
        }
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, '\t')) {
            fields.push_back(field);
        }
        detail::require(fields.size() == 3, ErrorKind::parse_error,
                        "line " + std::to_string(line_no) + ": expected 3 tab-separated fields");
        Message m;
        m.id = fields[0];
        m.symbol = fields[2];
        try {
            std::size_t used = 0;
            m.probability = std::stod(fields[1], &used);
            detail::require(used == fields[1].size(), ErrorKind::parse_error, "trailing characters");
        } catch (const std::logic_error&) {
            throw Error(ErrorKind::parse_error, "line " + std::to_string(line_no) + ": bad probability '" + fields[1] + "'");
        } catch (const Error&) {
            throw Error(ErrorKind::parse_error, "line " + std::to_string(line_no) + ": bad probability '" + fields[1] + "'");
        }
        messages.push_back(std::move(m));
    }
    return MessageModel(std::move(messages));
}

inline MessageModel load_message_model(const std::string& path)
{
    std::ifstream in(path);
    detail::require(static_cast<bool>(in), ErrorKind::io_error, "cannot open " + path);
    return read_message_model(in);
}

} // namespace semsig

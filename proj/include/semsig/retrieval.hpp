#pragma once

// Receiver-side knowledge base: packed signatures, Hamming-ball queries,
// majority-vote reconstruction, and the precision(r) / MAP metrics.

#include "semsig/types.hpp"

#include <algorithm>
#include <bit>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace semsig {

namespace detail {

inline std::size_t words_for(std::size_t bits) { return (bits + 63) / 64; }

/// Bit j of word j/64 is set iff entry j is +1.
template <typename Row>
void pack_row(const Row& row, std::span<std::uint64_t> out)
{
    std::fill(out.begin(), out.end(), 0);
    for (Eigen::Index j = 0; j < row.size(); ++j) {
        if (row(j) > 0) {
            out[static_cast<std::size_t>(j) / 64] |= std::uint64_t{1} << (static_cast<std::size_t>(j) % 64);
        }
    }
}

inline int popcount_distance(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b)
{
    int d = 0;
    for (std::size_t w = 0; w < a.size(); ++w) {
        d += std::popcount(a[w] ^ b[w]);
    }
    return d;
}

} // namespace detail

/// Positionwise count of differing entries.
inline int hamming_distance(std::span<const std::int8_t> a, std::span<const std::int8_t> b)
{
    detail::require(a.size() == b.size(), ErrorKind::invalid_argument, "hamming_distance: length mismatch");
    int d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d += a[i] != b[i] ? 1 : 0;
    }
    return d;
}

inline int hamming_distance(const Signature& a, const Signature& b)
{
    return hamming_distance(std::span<const std::int8_t>(a.data(), static_cast<std::size_t>(a.size())),
                            std::span<const std::int8_t>(b.data(), static_cast<std::size_t>(b.size())));
}

/// Signature packed into 64-bit words for popcount scanning.
class PackedSignature {
public:
    PackedSignature() = default;

    template <typename Row>
    explicit PackedSignature(const Row& row)
        : bits_(static_cast<std::size_t>(row.size()))
        , words_(detail::words_for(bits_))
    {
        detail::pack_row(row, words_);
    }

    [[nodiscard]] std::size_t bits() const noexcept { return bits_; }
    [[nodiscard]] std::span<const std::uint64_t> words() const noexcept { return words_; }

private:
    std::size_t bits_ = 0;
    std::vector<std::uint64_t> words_;
};

struct Hit {
    ItemId id = 0;
    Eigen::Index index = 0;
    int distance = 0;
    ClassId label = 0;
};

/// Stored signatures with aligned labels and ids. Immutable after construction.
class KnowledgeBase {
public:
    KnowledgeBase() = default;

    KnowledgeBase(const SignatureMatrix& codes, std::vector<ClassId> labels, std::vector<ItemId> ids)
        : bits_(static_cast<std::size_t>(codes.cols()))
        , words_per_code_(detail::words_for(bits_))
        , labels_(std::move(labels))
        , ids_(std::move(ids))
    {
        detail::require(static_cast<std::size_t>(codes.rows()) == labels_.size() && labels_.size() == ids_.size(),
                        ErrorKind::invalid_argument, "knowledge base codes, labels and ids must align");
        for (Eigen::Index i = 0; i < codes.rows(); ++i) {
            for (Eigen::Index j = 0; j < codes.cols(); ++j) {
                detail::require(codes(i, j) == 1 || codes(i, j) == -1, ErrorKind::invalid_argument,
                                "knowledge base codes must be +-1");
            }
        }
        packed_.resize(labels_.size() * words_per_code_);
        for (Eigen::Index i = 0; i < codes.rows(); ++i) {
            detail::pack_row(codes.row(i), row_words_mut(static_cast<std::size_t>(i)));
        }
    }

    /// Ids default to 0..n-1.
    KnowledgeBase(const SignatureMatrix& codes, std::vector<ClassId> labels)
        : KnowledgeBase(codes, std::move(labels), sequential_ids(static_cast<std::size_t>(codes.rows())))
    {
    }

    [[nodiscard]] std::size_t size() const noexcept { return labels_.size(); }
    [[nodiscard]] std::size_t code_bits() const noexcept { return bits_; }
    [[nodiscard]] const std::vector<ClassId>& labels() const noexcept { return labels_; }
    [[nodiscard]] const std::vector<ItemId>& ids() const noexcept { return ids_; }

    [[nodiscard]] std::span<const std::uint64_t> row_words(std::size_t i) const
    {
        return {packed_.data() + i * words_per_code_, words_per_code_};
    }

    [[nodiscard]] Signature code(std::size_t i) const
    {
        Signature s(static_cast<Eigen::Index>(bits_));
        const auto words = row_words(i);
        for (std::size_t j = 0; j < bits_; ++j) {
            s(static_cast<Eigen::Index>(j)) = (words[j / 64] >> (j % 64)) & 1U ? std::int8_t{1} : std::int8_t{-1};
        }
        return s;
    }

    [[nodiscard]] SignatureMatrix codes() const
    {
        SignatureMatrix out(static_cast<Eigen::Index>(size()), static_cast<Eigen::Index>(bits_));
        for (std::size_t i = 0; i < size(); ++i) {
            out.row(static_cast<Eigen::Index>(i)) = code(i);
        }
        return out;
    }

    /// Popcount distances from q to every stored code.
    [[nodiscard]] std::vector<int> distances(const PackedSignature& q) const
    {
        detail::require(q.bits() == bits_, ErrorKind::invalid_argument,
                        "query has " + std::to_string(q.bits()) + " bits, knowledge base has " + std::to_string(bits_));
        std::vector<int> out(size());
        for (std::size_t i = 0; i < size(); ++i) {
            out[i] = detail::popcount_distance(q.words(), row_words(i));
        }
        return out;
    }

    friend bool operator==(const KnowledgeBase&, const KnowledgeBase&) = default;

private:
    static std::vector<ItemId> sequential_ids(std::size_t n)
    {
        std::vector<ItemId> ids(n);
        std::iota(ids.begin(), ids.end(), ItemId{0});
        return ids;
    }

    std::span<std::uint64_t> row_words_mut(std::size_t i) { return {packed_.data() + i * words_per_code_, words_per_code_}; }

    std::size_t bits_ = 0;
    std::size_t words_per_code_ = 0;
    std::vector<std::uint64_t> packed_;
    std::vector<ClassId> labels_;
    std::vector<ItemId> ids_;
};

namespace detail {

inline void sort_hits(std::vector<Hit>& hits)
{
    std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
        return a.distance != b.distance ? a.distance < b.distance : a.id < b.id;
    });
}

} // namespace detail

/// Items with dist_H(q, item) <= r, ordered by (distance, id).
inline std::vector<Hit> query_radius(const KnowledgeBase& kb, const PackedSignature& q, int r)
{
    detail::require(r >= 0, ErrorKind::invalid_argument, "radius must be >= 0");
    const auto dist = kb.distances(q);
    std::vector<Hit> hits;
    for (std::size_t i = 0; i < kb.size(); ++i) {
        if (dist[i] <= r) {
            hits.push_back({kb.ids()[i], static_cast<Eigen::Index>(i), dist[i], kb.labels()[i]});
        }
    }
    detail::sort_hits(hits);
    return hits;
}

template <typename Row>
std::vector<Hit> query_radius(const KnowledgeBase& kb, const Row& q, int r)
{
    return query_radius(kb, PackedSignature(q), r);
}

struct Reconstruction {
    std::optional<ClassId> label; // empty: no reconstruction possible
    std::vector<Hit> hits;

    [[nodiscard]] bool reconstructed() const noexcept { return label.has_value(); }
};

/// Radius-r result set plus a majority vote (ties go to the smallest class id).
template <typename Row>
Reconstruction reconstruct(const KnowledgeBase& kb, const Row& q, int r)
{
    Reconstruction out;
    out.hits = query_radius(kb, q, r);
    if (out.hits.empty()) {
        return out;
    }
    std::map<ClassId, std::size_t> tally;
    for (const auto& h : out.hits) {
        ++tally[h.label];
    }
    auto best = tally.begin();
    for (auto it = tally.begin(); it != tally.end(); ++it) {
        if (it->second > best->second) {
            best = it;
        }
    }
    out.label = best->first;
    return out;
}

struct MetricsReport {
    std::vector<int> radii;
    std::vector<double> precision_at_r;          // aligned with radii
    std::vector<std::size_t> empty_return_count; // aligned with radii
    double map = 0.0;
    std::size_t n_queries = 0;
    std::size_t map_excluded_queries = 0; // no relevant item in the base
};

/// Mean over queries of (label-matching returns / returns) in the radius-r ball; an empty ball counts 0.
inline double precision_at_radius(const SignatureMatrix& queries, std::span<const ClassId> query_labels,
                                  const KnowledgeBase& kb, int r, std::size_t* empty_returns = nullptr)
{
    detail::require(queries.rows() > 0, ErrorKind::invalid_argument, "precision needs at least one query");
    detail::require(static_cast<std::size_t>(queries.rows()) == query_labels.size(), ErrorKind::invalid_argument,
                    "query codes and labels must align");
    detail::require(r >= 0, ErrorKind::invalid_argument, "radius must be >= 0");
    double total = 0.0;
    std::size_t empty = 0;
    for (Eigen::Index j = 0; j < queries.rows(); ++j) {
        const auto dist = kb.distances(PackedSignature(queries.row(j)));
        std::size_t returned = 0;
        std::size_t matching = 0;
        for (std::size_t i = 0; i < kb.size(); ++i) {
            if (dist[i] <= r) {
                ++returned;
                matching += kb.labels()[i] == query_labels[static_cast<std::size_t>(j)] ? 1 : 0;
            }
        }
        if (returned == 0) {
            ++empty;
        } else {
            total += static_cast<double>(matching) / static_cast<double>(returned);
        }
    }
    if (empty_returns != nullptr) {
        *empty_returns = empty;
    }
    return total / static_cast<double>(queries.rows());
}

struct MapResult {
    double map = 0.0;
    std::size_t evaluated = 0;
    std::size_t excluded = 0;
};

/// MAP over the full Hamming ranking (distance asc, id asc). Base items sharing the query's id are skipped
/// when query ids are given. Queries without relevant items are excluded and counted.
inline MapResult mean_average_precision(const SignatureMatrix& queries, std::span<const ClassId> query_labels,
                                        const KnowledgeBase& kb, std::span<const ItemId> query_ids = {})
{
    detail::require(queries.rows() > 0, ErrorKind::invalid_argument, "MAP needs at least one query");
    detail::require(static_cast<std::size_t>(queries.rows()) == query_labels.size(), ErrorKind::invalid_argument,
                    "query codes and labels must align");
    detail::require(query_ids.empty() || query_ids.size() == query_labels.size(), ErrorKind::invalid_argument,
                    "query ids must align with queries");

    // Base order by id once; bucketing by distance then keeps the (distance, id) order.
    std::vector<std::size_t> by_id(kb.size());
    std::iota(by_id.begin(), by_id.end(), std::size_t{0});
    std::stable_sort(by_id.begin(), by_id.end(), [&](std::size_t a, std::size_t b) { return kb.ids()[a] < kb.ids()[b]; });

    const std::size_t max_dist = kb.code_bits();
    std::vector<std::vector<std::size_t>> buckets(max_dist + 1);

    MapResult out;
    double ap_sum = 0.0;
    for (Eigen::Index j = 0; j < queries.rows(); ++j) {
        const auto ju = static_cast<std::size_t>(j);
        const auto dist = kb.distances(PackedSignature(queries.row(j)));
        for (auto& b : buckets) {
            b.clear();
        }
        std::size_t relevant = 0;
        for (std::size_t i : by_id) {
            if (!query_ids.empty() && kb.ids()[i] == query_ids[ju]) {
                continue;
            }
            buckets[static_cast<std::size_t>(dist[i])].push_back(i);
            relevant += kb.labels()[i] == query_labels[ju] ? 1 : 0;
        }
        if (relevant == 0) {
            ++out.excluded;
            continue;
        }
        std::size_t rank = 0;
        std::size_t hits = 0;
        double ap = 0.0;
        for (const auto& bucket : buckets) {
            for (std::size_t i : bucket) {
                ++rank;
                if (kb.labels()[i] == query_labels[ju]) {
                    ++hits;
                    ap += static_cast<double>(hits) / static_cast<double>(rank);
                }
            }
        }
        ap_sum += ap / static_cast<double>(relevant);
        ++out.evaluated;
    }
    if (out.evaluated == 0) {
        throw Error(ErrorKind::undefined_metric, "MAP is undefined: no query has a relevant item in the base");
    }
    out.map = ap_sum / static_cast<double>(out.evaluated);
    return out;
}

/// precision at each radius plus MAP.
inline MetricsReport evaluate(const SignatureMatrix& queries, std::span<const ClassId> query_labels, const KnowledgeBase& kb,
                              const std::vector<int>& radii, std::span<const ItemId> query_ids = {})
{
    MetricsReport rep;
    rep.radii = radii;
    rep.n_queries = static_cast<std::size_t>(queries.rows());
    for (int r : radii) {
        std::size_t empty = 0;
        rep.precision_at_r.push_back(precision_at_radius(queries, query_labels, kb, r, &empty));
        rep.empty_return_count.push_back(empty);
    }
    const auto m = mean_average_precision(queries, query_labels, kb, query_ids);
    rep.map = m.map;
    rep.map_excluded_queries = m.excluded;
    return rep;
}

} // namespace semsig

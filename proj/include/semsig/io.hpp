#pragma once

// File formats.
//
// Model container (little-endian):
//   "SEMSIG01", u32 d, u32 m, u32 B, u32 c,
//   anchors (m x d f64), width f64, Q (m x B f64), W (c x B f64), all row-major,
//   then optionally a knowledge-base section:
//   "KBSECT01", u32 n, u32 B, and per item u64 id, u32 label, ceil(B/64) u64 words.
//
// Feature file (little-endian): "SEMSIGD1", u32 n, u32 d, u32 k, n x d f64, n u32 labels.
//
// Knowledge-base text: one `id<TAB>label<TAB>bitstring` line per item, '1' = +1, '0' = -1.

#include "semsig/hashing.hpp"
#include "semsig/retrieval.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace semsig {

inline constexpr std::string_view kModelMagic = "SEMSIG01";
inline constexpr std::string_view kKbSectionMagic = "KBSECT01";
inline constexpr std::string_view kFeatureMagic = "SEMSIGD1";

namespace detail {

class ByteWriter {
public:
    explicit ByteWriter(std::ostream& out)
        : out_(out)
    {
    }

    void magic(std::string_view m) { out_.write(m.data(), static_cast<std::streamsize>(m.size())); }

    void u32(std::uint32_t v) { le(v); }
    void u64(std::uint64_t v) { le(v); }
    void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }

    void matrix(const Matrix& m)
    {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            for (Eigen::Index j = 0; j < m.cols(); ++j) {
                f64(m(i, j));
            }
        }
    }

private:
    template <typename U>
    void le(U v)
    {
        std::array<char, sizeof(U)> bytes{};
        for (std::size_t i = 0; i < sizeof(U); ++i) {
            bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFFU);
        }
        out_.write(bytes.data(), bytes.size());
    }

    std::ostream& out_;
};

class ByteReader {
public:
    explicit ByteReader(std::istream& in)
        : in_(in)
    {
    }

    [[nodiscard]] std::optional<std::string> try_magic()
    {
        std::string buf(8, '\0');
        in_.read(buf.data(), 8);
        if (in_.gcount() == 0) {
            return std::nullopt;
        }
        require(in_.gcount() == 8, ErrorKind::parse_error, "truncated section tag");
        return buf;
    }

    void expect_magic(std::string_view m)
    {
        const auto got = try_magic();
        require(got.has_value() && *got == m, ErrorKind::parse_error, "bad magic, expected " + std::string(m));
    }

    std::uint32_t u32() { return le<std::uint32_t>(); }
    std::uint64_t u64() { return le<std::uint64_t>(); }
    double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }

    Matrix matrix(Eigen::Index rows, Eigen::Index cols)
    {
        Matrix m(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i) {
            for (Eigen::Index j = 0; j < cols; ++j) {
                m(i, j) = f64();
            }
        }
        return m;
    }

private:
    template <typename U>
    U le()
    {
        std::array<unsigned char, sizeof(U)> bytes{};
        in_.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
        require(in_.gcount() == static_cast<std::streamsize>(bytes.size()), ErrorKind::parse_error, "truncated binary file");
        U v = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) {
            v |= static_cast<U>(bytes[i]) << (8 * i);
        }
        return v;
    }

    std::istream& in_;
};

inline std::string format_double(double v)
{
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return {buf.data(), res.ptr};
}

/// Fixed 17-significant-digit form used for every emitted table.
inline std::string format_fixed17(double v)
{
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
    return {buf.data(), res.ptr};
}

inline double parse_double(std::string_view s, const std::string& context)
{
    double v = 0.0;
    const auto* first = s.data();
    const auto* last = s.data() + s.size();
    if (!s.empty() && *first == '+') {
        ++first;
    }
    const auto res = std::from_chars(first, last, v);
    require(res.ec == std::errc{} && res.ptr == last && first != last, ErrorKind::parse_error,
            context + ": not a number '" + std::string(s) + "'");
    return v;
}

template <typename Int>
Int parse_int(std::string_view s, const std::string& context)
{
    Int v{};
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    require(res.ec == std::errc{} && res.ptr == s.data() + s.size() && !s.empty(), ErrorKind::parse_error,
            context + ": not an integer '" + std::string(s) + "'");
    return v;
}

inline std::string_view trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return out;
}

inline std::uint32_t checked_u32(Eigen::Index v, const char* what)
{
    require(v >= 0 && static_cast<std::uint64_t>(v) <= 0xFFFFFFFFULL, ErrorKind::invalid_argument,
            std::string(what) + " does not fit in u32");
    return static_cast<std::uint32_t>(v);
}

inline void write_kb_section(ByteWriter& w, const KnowledgeBase& kb)
{
    w.magic(kKbSectionMagic);
    w.u32(checked_u32(static_cast<Eigen::Index>(kb.size()), "item count"));
    w.u32(checked_u32(static_cast<Eigen::Index>(kb.code_bits()), "code bits"));
    for (std::size_t i = 0; i < kb.size(); ++i) {
        w.u64(kb.ids()[i]);
        w.u32(static_cast<std::uint32_t>(kb.labels()[i]));
        for (std::uint64_t word : kb.row_words(i)) {
            w.u64(word);
        }
    }
}

inline KnowledgeBase read_kb_section(ByteReader& r)
{
    const auto n = r.u32();
    const auto bits = r.u32();
    const std::size_t words = words_for(bits);
    SignatureMatrix codes(n, bits);
    std::vector<ClassId> labels(n);
    std::vector<ItemId> ids(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        ids[i] = r.u64();
        labels[i] = static_cast<ClassId>(r.u32());
        std::vector<std::uint64_t> packed(words);
        for (auto& word : packed) {
            word = r.u64();
        }
        for (std::uint32_t j = 0; j < bits; ++j) {
            codes(i, j) = (packed[j / 64] >> (j % 64)) & 1U ? std::int8_t{1} : std::int8_t{-1};
        }
    }
    return {codes, std::move(labels), std::move(ids)};
}

} // namespace detail

struct ModelBundle {
    HashModel model;
    std::optional<KnowledgeBase> knowledge_base;
};

inline void write_model(std::ostream& out, const HashModel& model, const KnowledgeBase* kb = nullptr)
{
    detail::ByteWriter w(out);
    const Eigen::Index m = model.anchors.size();
    const Eigen::Index bits = model.projection.cols();
    detail::require(model.projection.rows() == m && model.classifier.cols() == bits, ErrorKind::invalid_argument,
                    "model matrices have inconsistent shapes");
    w.magic(kModelMagic);
    w.u32(detail::checked_u32(model.anchors.dim(), "feature dim"));
    w.u32(detail::checked_u32(m, "anchor count"));
    w.u32(detail::checked_u32(bits, "code bits"));
    w.u32(detail::checked_u32(model.classifier.rows(), "class count"));
    w.matrix(model.anchors.anchors);
    w.f64(model.anchors.width);
    w.matrix(model.projection);
    w.matrix(model.classifier);
    if (kb != nullptr) {
        detail::require(kb->code_bits() == static_cast<std::size_t>(bits), ErrorKind::invalid_argument,
                        "knowledge base code length differs from model");
        detail::write_kb_section(w, *kb);
    }
}

inline ModelBundle read_model(std::istream& in)
{
    detail::ByteReader r(in);
    r.expect_magic(kModelMagic);
    const auto d = r.u32();
    const auto m = r.u32();
    const auto bits = r.u32();
    const auto c = r.u32();
    ModelBundle out;
    out.model.anchors.anchors = r.matrix(m, d);
    out.model.anchors.width = r.f64();
    out.model.projection = r.matrix(m, bits);
    out.model.classifier = r.matrix(c, bits);
    out.model.config.code_bits = static_cast<int>(bits);
    out.model.config.anchor_count = m;
    out.model.config.kernel_width = out.model.anchors.width;
    if (const auto tag = r.try_magic()) {
        detail::require(*tag == kKbSectionMagic, ErrorKind::parse_error, "unknown section after model payload");
        out.knowledge_base = detail::read_kb_section(r);
    }
    return out;
}

inline void save_model(const std::string& path, const HashModel& model, const KnowledgeBase* kb = nullptr)
{
    std::ofstream out(path, std::ios::binary);
    detail::require(static_cast<bool>(out), ErrorKind::io_error, "cannot write " + path);
    write_model(out, model, kb);
    detail::require(static_cast<bool>(out), ErrorKind::io_error, "write failed for " + path);
}

inline ModelBundle load_model(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    detail::require(static_cast<bool>(in), ErrorKind::io_error, "cannot open " + path);
    return read_model(in);
}

// Text model format for debugging; values use the shortest round-trip representation.

inline void write_model_text(std::ostream& out, const HashModel& model)
{
    auto emit = [&](const char* name, const Matrix& mat) {
        out << name << ' ' << mat.rows() << ' ' << mat.cols() << '\n';
        for (Eigen::Index i = 0; i < mat.rows(); ++i) {
            for (Eigen::Index j = 0; j < mat.cols(); ++j) {
                out << (j == 0 ? "" : " ") << detail::format_double(mat(i, j));
            }
            out << '\n';
        }
    };
    out << "semsig-model-text 1\n";
    out << "width " << detail::format_double(model.anchors.width) << '\n';
    emit("anchors", model.anchors.anchors);
    emit("projection", model.projection);
    emit("classifier", model.classifier);
}

inline HashModel read_model_text(std::istream& in)
{
    std::string line;
    auto next = [&]() -> const std::string& {
        detail::require(static_cast<bool>(std::getline(in, line)), ErrorKind::parse_error, "truncated text model");
        return line;
    };
    detail::require(detail::trim(next()) == "semsig-model-text 1", ErrorKind::parse_error, "not a text model");
    HashModel model;
    {
        const auto parts = detail::split(detail::trim(next()), ' ');
        detail::require(parts.size() == 2 && parts[0] == "width", ErrorKind::parse_error, "expected width line");
        model.anchors.width = detail::parse_double(parts[1], "width");
    }
    auto read_matrix = [&](std::string_view name) {
        const auto header = detail::split(detail::trim(next()), ' ');
        detail::require(header.size() == 3 && header[0] == name, ErrorKind::parse_error,
                        "expected " + std::string(name) + " header");
        const auto rows = detail::parse_int<Eigen::Index>(header[1], std::string(name));
        const auto cols = detail::parse_int<Eigen::Index>(header[2], std::string(name));
        Matrix mat(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i) {
            const auto vals = detail::split(detail::trim(next()), ' ');
            detail::require(static_cast<Eigen::Index>(vals.size()) == cols || cols == 0, ErrorKind::parse_error,
                            std::string(name) + ": wrong column count");
            for (Eigen::Index j = 0; j < cols; ++j) {
                mat(i, j) = detail::parse_double(vals[static_cast<std::size_t>(j)], std::string(name));
            }
        }
        return mat;
    };
    model.anchors.anchors = read_matrix("anchors");
    model.projection = read_matrix("projection");
    model.classifier = read_matrix("classifier");
    model.config.code_bits = static_cast<int>(model.projection.cols());
    model.config.kernel_width = model.anchors.width;
    return model;
}

// Knowledge base text format.

inline void write_kb_text(std::ostream& out, const KnowledgeBase& kb)
{
    for (std::size_t i = 0; i < kb.size(); ++i) {
        out << kb.ids()[i] << '\t' << kb.labels()[i] << '\t';
        const auto code = kb.code(i);
        for (Eigen::Index j = 0; j < code.size(); ++j) {
            out << (code(j) > 0 ? '1' : '0');
        }
        out << '\n';
    }
}

inline KnowledgeBase read_kb_text(std::istream& in)
{
    std::vector<ItemId> ids;
    std::vector<ClassId> labels;
    std::vector<std::string> bitstrings;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto t = detail::trim(line);
        if (t.empty() || t.front() == '#') {
            continue;
        }
        const auto ctx = "line " + std::to_string(line_no);
        const auto fields = detail::split(t, '\t');
        detail::require(fields.size() == 3, ErrorKind::parse_error, ctx + ": expected id<TAB>label<TAB>bits");
        ids.push_back(detail::parse_int<ItemId>(fields[0], ctx));
        labels.push_back(detail::parse_int<ClassId>(fields[1], ctx));
        detail::require(fields[2].find_first_not_of("01") == std::string_view::npos && !fields[2].empty(),
                        ErrorKind::parse_error, ctx + ": bitstring must contain only 0 and 1");
        detail::require(bitstrings.empty() || bitstrings.front().size() == fields[2].size(), ErrorKind::parse_error,
                        ctx + ": inconsistent code length");
        bitstrings.emplace_back(fields[2]);
    }
    const auto bits = bitstrings.empty() ? Eigen::Index{0} : static_cast<Eigen::Index>(bitstrings.front().size());
    SignatureMatrix codes(static_cast<Eigen::Index>(bitstrings.size()), bits);
    for (std::size_t i = 0; i < bitstrings.size(); ++i) {
        for (Eigen::Index j = 0; j < bits; ++j) {
            codes(static_cast<Eigen::Index>(i), j) = bitstrings[i][static_cast<std::size_t>(j)] == '1' ? 1 : -1;
        }
    }
    return {codes, std::move(labels), std::move(ids)};
}

inline void save_kb_text(const std::string& path, const KnowledgeBase& kb)
{
    std::ofstream out(path);
    detail::require(static_cast<bool>(out), ErrorKind::io_error, "cannot write " + path);
    write_kb_text(out, kb);
}

inline KnowledgeBase load_kb_text(const std::string& path)
{
    std::ifstream in(path);
    detail::require(static_cast<bool>(in), ErrorKind::io_error, "cannot open " + path);
    return read_kb_text(in);
}

// Labeled feature datasets.

struct Dataset {
    FeatureMatrix features;
    LabelMatrix labels;
};

enum class FeatureFormat { csv, packed_binary };

inline FeatureFormat parse_feature_format(std::string_view s)
{
    if (s == "csv") {
        return FeatureFormat::csv;
    }
    if (s == "bin" || s == "binary" || s == "packed-binary") {
        return FeatureFormat::packed_binary;
    }
    throw Error(ErrorKind::invalid_argument, "unknown feature format '" + std::string(s) + "'");
}

/// CSV rows: label, then features. The class count is max label + 1 unless given.
inline Dataset read_features_csv(std::istream& in, std::optional<ClassId> num_classes = std::nullopt)
{
    std::vector<std::vector<double>> rows;
    std::vector<ClassId> labels;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto t = detail::trim(line);
        if (t.empty() || t.front() == '#') {
            continue;
        }
        const auto ctx = "line " + std::to_string(line_no);
        const auto fields = detail::split(t, ',');
        detail::require(fields.size() >= 2, ErrorKind::parse_error, ctx + ": expected label and at least one feature");
        const auto label = detail::parse_int<ClassId>(detail::trim(fields[0]), ctx);
        detail::require(label >= 0 && (!num_classes || label < *num_classes), ErrorKind::validation_error,
                        ctx + ": label " + std::to_string(label) + " out of range");
        std::vector<double> row;
        row.reserve(fields.size() - 1);
        for (std::size_t j = 1; j < fields.size(); ++j) {
            row.push_back(detail::parse_double(detail::trim(fields[j]), ctx));
        }
        detail::require(rows.empty() || rows.front().size() == row.size(), ErrorKind::parse_error,
                        ctx + ": inconsistent feature count");
        rows.push_back(std::move(row));
        labels.push_back(label);
    }
    detail::require(!rows.empty(), ErrorKind::empty_input, "feature file has no rows");
    Dataset ds;
    ds.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    const ClassId k = num_classes ? *num_classes : *std::max_element(labels.begin(), labels.end()) + 1;
    ds.labels = LabelMatrix(std::move(labels), k);
    return ds;
}

inline void write_features_csv(std::ostream& out, const Dataset& ds)
{
    for (Eigen::Index i = 0; i < ds.features.rows(); ++i) {
        out << ds.labels[i];
        for (Eigen::Index j = 0; j < ds.features.cols(); ++j) {
            out << ',' << detail::format_double(ds.features(i, j));
        }
        out << '\n';
    }
}

inline Dataset read_features_binary(std::istream& in)
{
    detail::ByteReader r(in);
    r.expect_magic(kFeatureMagic);
    const auto n = r.u32();
    const auto d = r.u32();
    const auto k = r.u32();
    Dataset ds;
    ds.features = r.matrix(n, d);
    std::vector<ClassId> labels(n);
    for (auto& l : labels) {
        const auto v = r.u32();
        detail::require(v < k, ErrorKind::validation_error, "label " + std::to_string(v) + " outside [0, k)");
        l = static_cast<ClassId>(v);
    }
    ds.labels = LabelMatrix(std::move(labels), static_cast<ClassId>(k));
    return ds;
}

inline void write_features_binary(std::ostream& out, const Dataset& ds)
{
    detail::ByteWriter w(out);
    w.magic(kFeatureMagic);
    w.u32(detail::checked_u32(ds.features.rows(), "sample count"));
    w.u32(detail::checked_u32(ds.features.cols(), "feature dim"));
    w.u32(static_cast<std::uint32_t>(ds.labels.num_classes()));
    w.matrix(ds.features);
    for (ClassId l : ds.labels.labels()) {
        w.u32(static_cast<std::uint32_t>(l));
    }
}

inline Dataset load_features(const std::string& path, FeatureFormat format)
{
    std::ifstream in(path, format == FeatureFormat::packed_binary ? std::ios::binary : std::ios::in);
    detail::require(static_cast<bool>(in), ErrorKind::io_error, "cannot open " + path);
    return format == FeatureFormat::csv ? read_features_csv(in) : read_features_binary(in);
}

inline void save_features(const std::string& path, const Dataset& ds, FeatureFormat format)
{
    std::ofstream out(path, format == FeatureFormat::packed_binary ? std::ios::binary : std::ios::out);
    detail::require(static_cast<bool>(out), ErrorKind::io_error, "cannot write " + path);
    if (format == FeatureFormat::csv) {
        write_features_csv(out, ds);
    } else {
        write_features_binary(out, ds);
    }
}

} // namespace semsig

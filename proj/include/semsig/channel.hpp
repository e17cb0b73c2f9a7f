#pragma once

// BPSK transmission of signatures over AWGN, Rayleigh and Rician channels.
// SNR is per bit (Eb/N0). Fading receivers equalize with perfect CSI before
// the hard sign decision.

#include "semsig/types.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace semsig {

enum class ChannelKind { awgn, rayleigh, rician };

constexpr std::string_view to_string(ChannelKind k) noexcept
{
    switch (k) {
    case ChannelKind::awgn: return "awgn";
    case ChannelKind::rayleigh: return "rayleigh";
    case ChannelKind::rician: return "rician";
    }
    return "unknown";
}

inline ChannelKind parse_channel_kind(std::string_view s)
{
    if (s == "awgn") {
        return ChannelKind::awgn;
    }
    if (s == "rayleigh") {
        return ChannelKind::rayleigh;
    }
    if (s == "rician") {
        return ChannelKind::rician;
    }
    throw Error(ErrorKind::invalid_argument, "unknown channel kind '" + std::string(s) + "'");
}

struct ChannelConfig {
    ChannelKind kind = ChannelKind::awgn;
    double snr_db = 10.0;
    double rician_k_db = 6.0; // only read for rician
    std::uint64_t seed = 0;
    bool block_fading = false; // one fading coefficient per signature instead of per bit

    void validate() const
    {
        detail::require(std::isfinite(snr_db), ErrorKind::invalid_argument, "snr_db must be finite");
        detail::require(!std::isnan(rician_k_db), ErrorKind::invalid_argument, "rician_k_db must not be NaN");
    }
};

struct TransmissionReport {
    std::vector<std::int8_t> sent;
    std::vector<std::int8_t> received;
    std::size_t flipped = 0;
    double ber = 0.0;
};

namespace detail {

inline constexpr double kInvSqrt2 = 1.0 / std::numbers::sqrt2;

class FadingDraw {
public:
    explicit FadingDraw(const ChannelConfig& cfg)
        : kind_(cfg.kind)
    {
        if (kind_ == ChannelKind::rician) {
            // K -> +inf is pure line of sight, K -> -inf is Rayleigh.
            const double k = std::pow(10.0, cfg.rician_k_db / 10.0);
            if (std::isinf(k)) {
                los_ = 1.0;
                scatter_ = 0.0;
            } else {
                los_ = std::sqrt(k / (k + 1.0));
                scatter_ = std::sqrt(1.0 / (k + 1.0));
            }
        }
    }

    std::complex<double> operator()(Rng& rng, std::normal_distribution<double>& unit)
    {
        switch (kind_) {
        case ChannelKind::awgn: return {1.0, 0.0};
        case ChannelKind::rayleigh: {
            const double re = unit(rng);
            const double im = unit(rng);
            return {re * kInvSqrt2, im * kInvSqrt2};
        }
        case ChannelKind::rician: {
            const double re = unit(rng);
            const double im = unit(rng);
            return {los_ + scatter_ * re * kInvSqrt2, scatter_ * im * kInvSqrt2};
        }
        }
        return {1.0, 0.0};
    }

private:
    ChannelKind kind_;
    double los_ = 1.0;
    double scatter_ = 0.0;
};

inline std::vector<std::int8_t> transmit_bits(std::span<const std::int8_t> bits, const ChannelConfig& cfg,
                                              std::uint64_t seed)
{
    const double snr = std::pow(10.0, cfg.snr_db / 10.0);
    const double sigma = std::sqrt(1.0 / (2.0 * snr));
    Rng rng(seed);
    std::normal_distribution<double> unit(0.0, 1.0);
    FadingDraw fading(cfg);

    std::vector<std::int8_t> out(bits.size());
    std::complex<double> h = cfg.block_fading ? fading(rng, unit) : std::complex<double>{1.0, 0.0};
    for (std::size_t i = 0; i < bits.size(); ++i) {
        detail::require(bits[i] == 1 || bits[i] == -1, ErrorKind::invalid_argument, "signature entries must be +-1");
        if (!cfg.block_fading) {
            h = fading(rng, unit);
        }
        const double nr = sigma * unit(rng);
        const double ni = sigma * unit(rng);
        const std::complex<double> r = h * static_cast<double>(bits[i]) + std::complex<double>{nr, ni};
        const std::complex<double> eq = cfg.kind == ChannelKind::awgn ? r : r / h;
        out[i] = sign_bit(eq.real());
    }
    return out;
}

} // namespace detail

/// Sends one signature; deterministic for a fixed config seed.
inline TransmissionReport transmit_signature(std::span<const std::int8_t> sig, const ChannelConfig& config)
{
    config.validate();
    detail::require(!sig.empty(), ErrorKind::invalid_argument, "cannot transmit an empty signature");
    TransmissionReport rep;
    rep.sent.assign(sig.begin(), sig.end());
    rep.received = detail::transmit_bits(sig, config, config.seed);
    for (std::size_t i = 0; i < sig.size(); ++i) {
        rep.flipped += rep.sent[i] != rep.received[i] ? 1 : 0;
    }
    rep.ber = static_cast<double>(rep.flipped) / static_cast<double>(sig.size());
    return rep;
}

inline TransmissionReport transmit_signature(const Signature& sig, const ChannelConfig& config)
{
    return transmit_signature(std::span<const std::int8_t>(sig.data(), static_cast<std::size_t>(sig.size())), config);
}

struct BatchTransmission {
    SignatureMatrix received;
    std::size_t flipped = 0;
    std::size_t total_bits = 0;
    double ber = 0.0;
};

/// Row i uses the sub-seed derive_seed(config.seed, i), so results do not depend on scheduling.
inline BatchTransmission transmit_batch(const SignatureMatrix& codes, const ChannelConfig& config)
{
    config.validate();
    detail::require(codes.rows() > 0 && codes.cols() > 0, ErrorKind::invalid_argument, "cannot transmit an empty code matrix");
    BatchTransmission out;
    out.received.resize(codes.rows(), codes.cols());
    const auto width = static_cast<std::size_t>(codes.cols());
    for (Eigen::Index i = 0; i < codes.rows(); ++i) {
        const std::span<const std::int8_t> row(codes.data() + i * codes.cols(), width);
        const auto received = detail::transmit_bits(row, config, derive_seed(config.seed, static_cast<std::uint64_t>(i)));
        for (std::size_t j = 0; j < width; ++j) {
            out.received(i, static_cast<Eigen::Index>(j)) = received[j];
            out.flipped += received[j] != row[j] ? 1 : 0;
        }
    }
    out.total_bits = static_cast<std::size_t>(codes.size());
    out.ber = static_cast<double>(out.flipped) / static_cast<double>(out.total_bits);
    return out;
}

/// Closed-form BPSK bit error rates for reference.
inline double bpsk_ber_awgn(double snr_db)
{
    const double g = std::pow(10.0, snr_db / 10.0);
    return 0.5 * std::erfc(std::sqrt(g));
}

inline double bpsk_ber_rayleigh(double snr_db)
{
    const double g = std::pow(10.0, snr_db / 10.0);
    return 0.5 * (1.0 - std::sqrt(g / (1.0 + g)));
}

} // namespace semsig

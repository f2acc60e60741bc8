#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <vector>

#include "shpol/csv.hpp"
#include "shpol/jones.hpp"

namespace shpol {

/**
 * Sampled dual-polarization optical field.
 *
 * The sample rate is an integer multiple (>= 2) of the symbol rate and the
 * waveform spans a whole number of symbols, at least one. Immutable once
 * built; transformations return new waveforms.
 */
class DualPolWaveform {
public:
    DualPolWaveform(std::vector<JonesVector> samples, double symbol_rate, int samples_per_symbol)
        : samples_(std::move(samples)), symbol_rate_(symbol_rate), sps_(samples_per_symbol) {
        if (!(symbol_rate > 0.0) || !std::isfinite(symbol_rate)) {
            throw InvalidArgument("symbol rate must be positive");
        }
        if (sps_ < 2) {
            throw InvalidArgument("samples per symbol must be >= 2");
        }
        if (samples_.empty() || samples_.size() % static_cast<std::size_t>(sps_) != 0) {
            throw InvalidArgument("waveform must span a whole, non-zero number of symbols");
        }
    }

    std::span<const JonesVector> samples() const noexcept { return samples_; }
    std::size_t size() const noexcept { return samples_.size(); }
    double symbol_rate() const noexcept { return symbol_rate_; }
    double sample_rate() const noexcept { return symbol_rate_ * sps_; }
    int samples_per_symbol() const noexcept { return sps_; }
    std::size_t symbol_count() const noexcept { return samples_.size() / static_cast<std::size_t>(sps_); }

    // Same rates, new samples (length must stay a whole number of symbols).
    DualPolWaveform with_samples(std::vector<JonesVector> samples) const {
        return {std::move(samples), symbol_rate_, sps_};
    }

private:
    std::vector<JonesVector> samples_;
    double symbol_rate_;
    int sps_;
};

struct QpskFrame {
    std::vector<std::uint8_t> bits;
    std::vector<cplx> symbols;
};

/// Gray map: 00 -> (1+j), 01 -> (-1+j), 11 -> (-1-j), 10 -> (1-j), all / sqrt(2).
inline cplx qpsk_symbol(std::uint8_t b0, std::uint8_t b1) noexcept {
    const double a = 1.0 / std::sqrt(2.0);
    return {b1 ? -a : a, b0 ? -a : a};
}

inline QpskFrame qpsk_map(std::span<const std::uint8_t> bits) {
    if (bits.size() % 2 != 0) {
        throw InvalidArgument("QPSK needs an even number of bits");
    }
    QpskFrame f;
    f.bits.assign(bits.begin(), bits.end());
    f.symbols.reserve(bits.size() / 2);
    for (std::size_t i = 0; i < bits.size(); i += 2) {
        if (bits[i] > 1 || bits[i + 1] > 1) {
            throw InvalidArgument("bits must be 0 or 1");
        }
        f.symbols.push_back(qpsk_symbol(bits[i], bits[i + 1]));
    }
    return f;
}

/// Gray-mapped QPSK with rectangular NRZ pulses on x; y is dark.
inline DualPolWaveform qpsk_modulate(std::span<const std::uint8_t> bits, double symbol_rate,
                                     int samples_per_symbol = 8) {
    if (samples_per_symbol < 2) {
        throw InvalidArgument("samples per symbol must be >= 2");
    }
    const QpskFrame frame = qpsk_map(bits);
    if (frame.symbols.empty()) {
        throw InvalidArgument("QPSK frame needs at least one symbol");
    }
    std::vector<JonesVector> samples;
    samples.reserve(frame.symbols.size() * static_cast<std::size_t>(samples_per_symbol));
    for (const cplx s : frame.symbols) {
        samples.insert(samples.end(), static_cast<std::size_t>(samples_per_symbol), JonesVector{s, cplx{}});
    }
    return {std::move(samples), symbol_rate, samples_per_symbol};
}

/**
 * Random bit frame in which each of the four QPSK symbols appears equally
 * often (symbol count rounded down to a multiple of four, minimum four).
 * The modulated field then has zero mean, as a scrambled line signal does
 * over a photodetector averaging time.
 */
inline std::vector<std::uint8_t> balanced_qpsk_bits(std::size_t symbols, std::uint64_t seed) {
    const std::size_t n = std::max<std::size_t>(4, symbols - symbols % 4);
    std::vector<std::uint8_t> pairs(n);
    for (std::size_t i = 0; i < n; ++i) pairs[i] = static_cast<std::uint8_t>(i % 4);
    std::mt19937_64 rng(seed);
    std::shuffle(pairs.begin(), pairs.end(), rng);
    std::vector<std::uint8_t> bits;
    bits.reserve(2 * n);
    for (auto p : pairs) {
        bits.push_back(static_cast<std::uint8_t>(p >> 1));
        bits.push_back(static_cast<std::uint8_t>(p & 1));
    }
    return bits;
}

inline std::vector<std::uint8_t> random_bits(std::size_t count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::uint8_t> bits(count);
    for (auto& b : bits) b = static_cast<std::uint8_t>(rng() >> 63);
    return bits;
}

/// Time-averaged |ex|^2, |ey|^2 over the first `window_symbols` symbols.
inline PolPower mean_power(const DualPolWaveform& w, std::size_t window_symbols) {
    if (w.size() == 0) {
        throw InvalidArgument("mean_power of an empty waveform");
    }
    if (window_symbols < 1 || window_symbols > w.symbol_count()) {
        throw InvalidArgument("measurement window must cover 1..frame_length symbols");
    }
    const std::size_t n = window_symbols * static_cast<std::size_t>(w.samples_per_symbol());
    const auto s = w.samples().first(n);
    double px = 0.0;
    double py = 0.0;
    for (const auto& v : s) {
        px += std::norm(v.ex);
        py += std::norm(v.ey);
    }
    return {px / static_cast<double>(n), py / static_cast<double>(n)};
}

inline PolPower mean_power(const DualPolWaveform& w) { return mean_power(w, w.symbol_count()); }

/// 10 log10(max/min) of the two polarization powers.
inline double power_difference_db(const PolPower& p) {
    if (!(p.px > 0.0) || !(p.py > 0.0)) {
        throw MeasurementError("power difference undefined with zero power in a polarization");
    }
    return 10.0 * std::log10(std::max(p.px, p.py) / std::min(p.px, p.py));
}

inline double db_to_linear(double db) noexcept { return std::pow(10.0, db / 10.0); }

/**
 * Adds a CW carrier (phase 0) on y with mean power equal to the signal's mean
 * power times 10^(power_diff_db/10).
 */
inline DualPolWaveform launch_with_carrier(const DualPolWaveform& signal, double power_diff_db = 15.0) {
    if (!std::isfinite(power_diff_db)) {
        throw InvalidArgument("power difference must be finite");
    }
    const PolPower p = mean_power(signal);
    if (p.py != 0.0) {
        throw InvalidArgument("launch_with_carrier: y polarization already carries power");
    }
    const double carrier = std::sqrt(p.px * db_to_linear(power_diff_db));
    std::vector<JonesVector> out(signal.samples().begin(), signal.samples().end());
    for (auto& v : out) v.ey = carrier;
    return signal.with_samples(std::move(out));
}

/// Samplewise M * v.
inline DualPolWaveform apply_matrix(const DualPolWaveform& w, const JonesMatrix& M) {
    std::vector<JonesVector> out;
    out.reserve(w.size());
    for (const auto& v : w.samples()) out.push_back(M * v);
    return w.with_samples(std::move(out));
}

/// CSV dump: t, re_ex, im_ex, re_ey, im_ey.
inline void write_waveform_csv(const DualPolWaveform& w, const std::filesystem::path& path) {
    csv::Writer out(path, {"t", "re_ex", "im_ex", "re_ey", "im_ey"});
    const double dt = 1.0 / w.sample_rate();
    const auto s = w.samples();
    for (std::size_t i = 0; i < s.size(); ++i) {
        out.row({static_cast<double>(i) * dt, s[i].ex.real(), s[i].ex.imag(), s[i].ey.real(), s[i].ey.imag()});
    }
    out.close();
}

}  // namespace shpol

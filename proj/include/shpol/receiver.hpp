#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <vector>

#include "shpol/csv.hpp"
#include "shpol/jones.hpp"
#include "shpol/waveform.hpp"

namespace shpol {

struct RxResult {
    std::vector<cplx> iq_samples;
    double evm_percent = 0.0;
    double ber = 0.0;
    double recovered_phase = 0.0;
};

/**
 * Ideal 90-degree hybrid with the carrier arm as local oscillator:
 * E_sig * conj(E_car) / |E_car| per sample, decimated at mid-symbol.
 * The signal is read from the x component of `signal_arm` and the carrier
 * from the y component of `carrier_arm` (the PBS output ports).
 */
inline std::vector<cplx> homodyne_detect(const DualPolWaveform& signal_arm, const DualPolWaveform& carrier_arm) {
    if (signal_arm.size() != carrier_arm.size() || signal_arm.samples_per_symbol() != carrier_arm.samples_per_symbol() ||
        signal_arm.symbol_rate() != carrier_arm.symbol_rate()) {
        throw InvalidArgument("homodyne arms differ in length or rate");
    }
    if (!(mean_power(carrier_arm).py > 0.0)) {
        throw MeasurementError("carrier arm has no power");
    }
    const auto sig = signal_arm.samples();
    const auto car = carrier_arm.samples();
    const std::size_t sps = static_cast<std::size_t>(signal_arm.samples_per_symbol());
    std::vector<cplx> out;
    out.reserve(signal_arm.symbol_count());
    for (std::size_t k = sps / 2; k < sig.size(); k += sps) {
        const cplx lo = car[k].ey;
        const double mag = std::abs(lo);
        out.push_back(mag > 0.0 ? sig[k].ex * std::conj(lo) / mag : cplx{});
    }
    return out;
}

/// Both ports taken from one PBS output waveform (x = signal arm, y = carrier arm).
inline std::vector<cplx> homodyne_detect(const DualPolWaveform& pbs_output) {
    return homodyne_detect(pbs_output, pbs_output);
}

/// Scale to unit mean power (receiver AGC).
inline std::vector<cplx> normalize_power(std::span<const cplx> iq) {
    double acc = 0.0;
    for (const cplx v : iq) acc += std::norm(v);
    if (iq.empty() || !(acc > 0.0)) {
        throw MeasurementError("cannot normalize an all-zero sequence");
    }
    const double g = 1.0 / std::sqrt(acc / static_cast<double>(iq.size()));
    std::vector<cplx> out(iq.begin(), iq.end());
    for (auto& v : out) v *= g;
    return out;
}

struct PhaseRecovery {
    std::vector<cplx> corrected;
    double phase = 0.0;  // in (-pi/4, pi/4]
};

/**
 * Constant-phase estimate by the fourth-power method. Ideal QPSK points
 * satisfy s^4 = -1, so phase = (arg(mean(iq^4)) - pi) / 4, folded into the
 * (-pi/4, pi/4] quadrant; the pi/2 ambiguity is inherent.
 */
inline PhaseRecovery phase_recover(std::span<const cplx> iq) {
    if (iq.size() < 64) {
        throw InvalidArgument("phase recovery needs at least 64 symbols");
    }
    cplx acc{};
    for (const cplx v : iq) {
        const cplx v2 = v * v;
        acc += v2 * v2;
    }
    if (std::abs(acc) == 0.0) {
        throw MeasurementError("fourth-power phase estimate undefined");
    }
    double ph = (std::arg(acc) - kPi) / 4.0;
    const double q = kPi / 2.0;
    ph -= q * std::round(ph / q);
    if (ph <= -kPi / 4.0) ph += q;

    PhaseRecovery r;
    r.phase = ph;
    r.corrected.reserve(iq.size());
    const cplx rot = std::polar(1.0, -ph);
    for (const cplx v : iq) r.corrected.push_back(v * rot);
    return r;
}

inline const std::array<cplx, 4>& qpsk_constellation() {
    static const std::array<cplx, 4> points{qpsk_symbol(0, 0), qpsk_symbol(0, 1), qpsk_symbol(1, 1), qpsk_symbol(1, 0)};
    return points;
}

inline cplx nearest_qpsk(cplx v) noexcept {
    const double a = 1.0 / std::sqrt(2.0);
    return {v.real() >= 0.0 ? a : -a, v.imag() >= 0.0 ? a : -a};
}

/**
 * RMS distance to the nearest ideal QPSK point, relative to the RMS
 * magnitude of the ideal constellation (1), in percent. Input is expected
 * on the unit-power reference scale.
 */
inline double evm(std::span<const cplx> iq) {
    if (iq.empty()) {
        throw InvalidArgument("EVM of an empty sequence");
    }
    double err = 0.0;
    for (const cplx v : iq) err += std::norm(v - nearest_qpsk(v));
    return 100.0 * std::sqrt(err / static_cast<double>(iq.size()));
}

/// Hard decisions under the Gray map used by qpsk_symbol.
inline std::vector<std::uint8_t> qpsk_demap(std::span<const cplx> iq) {
    std::vector<std::uint8_t> bits;
    bits.reserve(2 * iq.size());
    for (const cplx v : iq) {
        bits.push_back(v.imag() < 0.0 ? 1 : 0);
        bits.push_back(v.real() < 0.0 ? 1 : 0);
    }
    return bits;
}

/// Bit error ratio against `reference`, minimized over the four k*pi/2 rotations.
inline double bit_error_ratio(std::span<const cplx> iq, std::span<const std::uint8_t> reference) {
    if (reference.size() != 2 * iq.size()) {
        throw InvalidArgument("reference bit count does not match symbol count");
    }
    std::size_t best = std::numeric_limits<std::size_t>::max();
    std::vector<cplx> rotated(iq.begin(), iq.end());
    for (int k = 0; k < 4; ++k) {
        const auto bits = qpsk_demap(rotated);
        std::size_t errors = 0;
        for (std::size_t i = 0; i < bits.size(); ++i) errors += bits[i] != reference[i];
        best = std::min(best, errors);
        for (auto& v : rotated) v *= cplx{0.0, 1.0};
    }
    return reference.empty() ? 0.0 : static_cast<double>(best) / static_cast<double>(reference.size());
}

/// Full receive chain on one PBS output: homodyne, AGC, phase recovery, EVM and BER.
inline RxResult receive(const DualPolWaveform& pbs_output, std::span<const std::uint8_t> reference_bits) {
    const auto raw = homodyne_detect(pbs_output);
    const auto pr = phase_recover(normalize_power(raw));
    RxResult r;
    r.evm_percent = evm(pr.corrected);
    r.ber = bit_error_ratio(pr.corrected, reference_bits);
    r.recovered_phase = pr.phase;
    r.iq_samples = pr.corrected;
    return r;
}

/// CSV: re, im per symbol.
inline void constellation_export(std::span<const cplx> iq, const std::filesystem::path& path) {
    csv::Writer out(path, {"re", "im"});
    for (const cplx v : iq) out.row({v.real(), v.imag()});
    out.close();
}

inline std::vector<cplx> constellation_import(const std::filesystem::path& path) {
    const csv::Table t = csv::read(path);
    if (t.header != std::vector<std::string>{"re", "im"}) {
        throw IoError("not a constellation CSV: " + path.string());
    }
    std::vector<cplx> iq;
    iq.reserve(t.rows.size());
    for (const auto& r : t.rows) iq.emplace_back(r[0], r[1]);
    return iq;
}

}  // namespace shpol

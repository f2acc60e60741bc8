#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <vector>

#include "shpol/jones.hpp"
#include "shpol/waveform.hpp"

namespace shpol {

inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s

struct ChannelConfig {
    double theta = 0.0;                  // PBS/PBC misalignment, rad
    double phi = 0.0;                    // differential phase, rad
    double fiber_length_km = 0.0;
    double dispersion_ps_nm_km = 17.0;
    double center_wavelength_nm = 1550.0;
    std::optional<double> osnr_db{};     // nullopt = noiseless
    std::uint64_t rng_seed = 1;
};

struct ChannelReport {
    JonesMatrix applied_matrix;
    double beta2_s2_per_m = 0.0;
    double noise_variance_per_pol = 0.0;
};

/// Group-velocity dispersion beta2 = -D lambda^2 / (2 pi c), in s^2/m.
inline double beta2_from_dispersion(double dispersion_ps_nm_km, double wavelength_nm) noexcept {
    const double D = dispersion_ps_nm_km * 1e-6;  // ps/(nm km) -> s/m^2
    const double lambda = wavelength_nm * 1e-9;
    return -D * lambda * lambda / (kTwoPi * kSpeedOfLight);
}

/// Every sample multiplied by composite_channel(theta, phi).
inline DualPolWaveform apply_polarization_impairment(const DualPolWaveform& w, const ChannelConfig& cfg) {
    return apply_matrix(w, composite_channel(cfg.theta, cfg.phi));
}

namespace detail {

struct FftwPlanDeleter {
    void operator()(fftw_plan_s* p) const noexcept { fftw_destroy_plan(p); }
};
using FftwPlan = std::unique_ptr<fftw_plan_s, FftwPlanDeleter>;

// In-place all-pass filtering of one polarization: IFFT(H * FFT(x)).
// FFTW's planner is not re-entrant; callers serialize.
inline void all_pass_filter(std::vector<cplx>& x, const std::vector<cplx>& H) {
    auto* data = reinterpret_cast<fftw_complex*>(x.data());
    const int n = static_cast<int>(x.size());
    FftwPlan fwd(fftw_plan_dft_1d(n, data, data, FFTW_FORWARD, FFTW_ESTIMATE));
    FftwPlan inv(fftw_plan_dft_1d(n, data, data, FFTW_BACKWARD, FFTW_ESTIMATE));
    fftw_execute(fwd.get());
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t k = 0; k < x.size(); ++k) x[k] *= H[k] * scale;
    fftw_execute(inv.get());
}

}  // namespace detail

/**
 * Chromatic dispersion as the scalar all-pass H(w) = exp(-j beta2/2 w^2 L),
 * applied to each polarization independently over the frame period (circular
 * convolution, so per-polarization energy is conserved exactly).
 */
inline DualPolWaveform apply_chromatic_dispersion(const DualPolWaveform& w, const ChannelConfig& cfg) {
    if (!(cfg.fiber_length_km >= 0.0)) {
        throw InvalidArgument("fiber length must be >= 0");
    }
    if (cfg.fiber_length_km == 0.0 || cfg.dispersion_ps_nm_km == 0.0) {
        return w;
    }
    const std::size_t n = w.size();
    const double L = cfg.fiber_length_km * 1e3;
    const double beta2 = beta2_from_dispersion(cfg.dispersion_ps_nm_km, cfg.center_wavelength_nm);
    const double fs = w.sample_rate();

    std::vector<cplx> H(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double bin = k < (n + 1) / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(n);
        const double omega = kTwoPi * bin * fs / static_cast<double>(n);
        H[k] = std::polar(1.0, -0.5 * beta2 * omega * omega * L);
    }

    std::vector<cplx> x(n), y(n);
    const auto s = w.samples();
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = s[i].ex;
        y[i] = s[i].ey;
    }
    detail::all_pass_filter(x, H);
    detail::all_pass_filter(y, H);

    std::vector<JonesVector> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = {x[i], y[i]};
    return w.with_samples(std::move(out));
}

/// Noise bandwidth that OSNR is quoted in: 0.1 nm around the carrier wavelength.
inline double osnr_reference_bandwidth_hz(double wavelength_nm) noexcept {
    const double lambda = wavelength_nm * 1e-9;
    return kSpeedOfLight * 0.1e-9 / (lambda * lambda);
}

/**
 * Complex Gaussian noise variance per polarization per sample for the given
 * OSNR. OSNR = reference_power / (ASE power in both polarizations within the
 * 0.1 nm reference bandwidth); the simulated bandwidth is the sample rate.
 */
inline double noise_variance_per_pol(double osnr_db, double reference_power, double sample_rate,
                                     double wavelength_nm) noexcept {
    const double b_ref = osnr_reference_bandwidth_hz(wavelength_nm);
    return reference_power * sample_rate / (2.0 * b_ref * db_to_linear(osnr_db));
}

/**
 * Circular complex Gaussian noise, independent per polarization and
 * deterministic under cfg.rng_seed. OSNR is referred to `reference_power`
 * (defaults to the waveform's mean total power).
 */
inline DualPolWaveform add_noise(const DualPolWaveform& w, const ChannelConfig& cfg,
                                 std::optional<double> reference_power = std::nullopt) {
    if (!cfg.osnr_db) {
        return w;
    }
    if (!std::isfinite(*cfg.osnr_db)) {
        throw InvalidArgument("OSNR must be finite");
    }
    const double ref = reference_power.value_or(mean_power(w).total());
    const double var = noise_variance_per_pol(*cfg.osnr_db, ref, w.sample_rate(), cfg.center_wavelength_nm);
    std::mt19937_64 rng(cfg.rng_seed);
    std::normal_distribution<double> gauss(0.0, std::sqrt(var / 2.0));
    std::vector<JonesVector> out(w.samples().begin(), w.samples().end());
    for (auto& v : out) {
        const double a = gauss(rng), b = gauss(rng), c = gauss(rng), d = gauss(rng);
        v.ex += cplx{a, b};
        v.ey += cplx{c, d};
    }
    return w.with_samples(std::move(out));
}

struct ChannelOutput {
    DualPolWaveform waveform;
    ChannelReport report;
};

/// Polarization impairment, then dispersion, then receiver-side noise.
inline ChannelOutput run_channel(const DualPolWaveform& w, const ChannelConfig& cfg,
                                 std::optional<double> noise_reference_power = std::nullopt) {
    ChannelReport report;
    report.applied_matrix = composite_channel(cfg.theta, cfg.phi);
    report.beta2_s2_per_m = beta2_from_dispersion(cfg.dispersion_ps_nm_km, cfg.center_wavelength_nm);
    DualPolWaveform out = apply_chromatic_dispersion(apply_matrix(w, report.applied_matrix), cfg);
    if (cfg.osnr_db) {
        const double ref = noise_reference_power.value_or(mean_power(out).total());
        report.noise_variance_per_pol =
            noise_variance_per_pol(*cfg.osnr_db, ref, out.sample_rate(), cfg.center_wavelength_nm);
        out = add_noise(out, cfg, ref);
    }
    return {std::move(out), report};
}

}  // namespace shpol

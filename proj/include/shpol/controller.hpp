#pragma once

/**
 * Three-waveplate polarization controller and the feedback loop that drives
 * it.
 *
 * The controller sits in front of the receiver PBS. Its two knobs (c1, c2)
 * are adjusted by discrete-time gradient descent to minimize the optical
 * power measured in the signal arm of the PBS. At the minimum the carrier,
 * launched on the orthogonal polarization, has been steered entirely into
 * the other arm, and the end-to-end Jones matrix is diagonal.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <thread>
#include <vector>

#include "shpol/csv.hpp"
#include "shpol/jones.hpp"
#include "shpol/waveform.hpp"

namespace shpol {

struct ControllerParams {
    double mu0 = 0.5;             // initial step size, rad per unit normalized power
    double mu_min = 1e-4;         // backtracking floor
    double delta = 0.002;         // finite-difference half-width, rad
    double grad_tol = 1e-6;       // stop once |grad P| falls below this
    double tol_power_diff_db = 14.0;
    double diag_tol = 1e-2;       // max |off-diag| relative to the diagonal at convergence
    int max_iter = 500;
    int max_restarts = 3;
};

struct ControlSample {
    double c1;
    double c2;
    double p;
};

struct ControllerState {
    double c1 = 0.0;
    double c2 = 0.0;
    double mu = 0.5;
    int iteration = 0;
    std::vector<ControlSample> history;  // one entry per completed step
    double last_gradient_norm = 0.0;
    bool stalled = false;  // backtracking hit mu_min without finding a descent step
};

/// Wrap an angle into [0, 2 pi).
inline double wrap_angle(double a) noexcept {
    double r = std::fmod(a, kTwoPi);
    if (r < 0.0) r += kTwoPi;
    if (r >= kTwoPi) r = 0.0;
    return r;
}

/**
 * PC matrix for knobs (c1, c2): light passes a quarter-wave plate at azimuth
 * 0, then a half-wave plate at c2, then a quarter-wave plate at c1.
 */
inline JonesMatrix pc_matrix(double c1, double c2) {
    return quarter_wave_plate(c1) * half_wave_plate(c2) * quarter_wave_plate(0.0);
}

/**
 * The controlled system as seen by the feedback loop: a frozen received
 * frame, the receiver PBS angle, and the averaging window of the monitor
 * photodetector. The lumped channel matrix is kept for diagnostics only; the
 * loop never reads it.
 */
class Plant {
public:
    Plant(DualPolWaveform received, JonesMatrix channel_matrix, double rx_theta = 0.0,
          std::size_t window_symbols = 0)
        : received_(std::move(received)),
          channel_(channel_matrix),
          rx_theta_(rx_theta),
          window_(window_symbols == 0 ? received_.symbol_count() : window_symbols) {
        if (window_ > received_.symbol_count()) {
            throw InvalidArgument("measurement window exceeds the frame");
        }
        detail::require_finite(rx_theta, "receiver PBS angle");
    }

    const DualPolWaveform& received() const noexcept { return received_; }
    const JonesMatrix& channel_matrix() const noexcept { return channel_; }
    double rx_theta() const noexcept { return rx_theta_; }
    std::size_t window_symbols() const noexcept { return window_; }

    // PC followed by the receiver PBS rotation.
    JonesMatrix receiver_matrix(double c1, double c2) const { return rotator(rx_theta_) * pc_matrix(c1, c2); }

    JonesMatrix effective_matrix(double c1, double c2) const { return receiver_matrix(c1, c2) * channel_; }

    /// Mean power in the signal (x) and carrier (y) arms of the receiver PBS.
    PolPower arm_powers(double c1, double c2) const {
        const JonesMatrix M = receiver_matrix(c1, c2);
        const std::size_t n = window_ * static_cast<std::size_t>(received_.samples_per_symbol());
        // Hand-expanded complex products; std::complex multiply is not inlined without -ffast-math.
        const double ar = M.m[0].real(), ai = M.m[0].imag(), br = M.m[1].real(), bi = M.m[1].imag();
        const double cr = M.m[2].real(), ci = M.m[2].imag(), dr = M.m[3].real(), di = M.m[3].imag();
        double px = 0.0;
        double py = 0.0;
        for (const auto& v : received_.samples().first(n)) {
            const double xr = v.ex.real(), xi = v.ex.imag(), yr = v.ey.real(), yi = v.ey.imag();
            const double or_ = ar * xr - ai * xi + br * yr - bi * yi;
            const double oi = ar * xi + ai * xr + br * yi + bi * yr;
            const double qr = cr * xr - ci * xi + dr * yr - di * yi;
            const double qi = cr * xi + ci * xr + dr * yi + di * yr;
            px += or_ * or_ + oi * oi;
            py += qr * qr + qi * qi;
        }
        return {px / static_cast<double>(n), py / static_cast<double>(n)};
    }

    /// Both PBS arms after the controller, as one waveform (x = signal arm, y = carrier arm).
    DualPolWaveform output(double c1, double c2) const { return apply_matrix(received_, receiver_matrix(c1, c2)); }

private:
    DualPolWaveform received_;
    JonesMatrix channel_;
    double rx_theta_;
    std::size_t window_;
};

/// Normalized signal-arm power P = px / (px + py), in [0, 1].
inline double measure_objective(double c1, double c2, const Plant& plant) {
    const PolPower p = plant.arm_powers(c1, c2);
    const double total = p.total();
    if (!(total > 0.0)) {
        throw MeasurementError("plant delivers zero optical power");
    }
    return p.px / total;
}

inline double measure_objective(const ControllerState& s, const Plant& plant) {
    return measure_objective(s.c1, s.c2, plant);
}

struct Gradient {
    double d1;
    double d2;

    double norm() const noexcept { return std::hypot(d1, d2); }
};

/// Central-difference estimate of (dP/dc1, dP/dc2) with half-width delta.
inline Gradient estimate_gradient(double c1, double c2, const Plant& plant, double delta) {
    const double p1p = measure_objective(c1 + delta, c2, plant);
    const double p1m = measure_objective(c1 - delta, c2, plant);
    const double p2p = measure_objective(c1, c2 + delta, plant);
    const double p2m = measure_objective(c1, c2 - delta, plant);
    return {(p1p - p1m) / (2.0 * delta), (p2p - p2m) / (2.0 * delta)};
}

namespace detail {

// Backtracking update from a known objective value p0 and gradient g.
inline ControllerState descend(const ControllerState& state, const Plant& plant, const ControllerParams& params,
                               double p0, const Gradient& g) {
    ControllerState next = state;
    next.last_gradient_norm = g.norm();
    next.stalled = false;

    double mu = state.mu;
    double c1 = state.c1;
    double c2 = state.c2;
    double p = p0;
    for (;;) {
        const double t1 = wrap_angle(state.c1 - mu * g.d1);
        const double t2 = wrap_angle(state.c2 - mu * g.d2);
        const double pt = measure_objective(t1, t2, plant);
        if (pt <= p0) {
            c1 = t1;
            c2 = t2;
            p = pt;
            break;
        }
        mu *= 0.5;
        if (mu < params.mu_min) {
            mu = params.mu_min;
            next.stalled = true;
            break;
        }
    }
    next.c1 = c1;
    next.c2 = c2;
    next.mu = mu;
    next.iteration = state.iteration + 1;
    next.history.push_back({c1, c2, p});
    return next;
}

}  // namespace detail

/**
 * One descent step c <- c - mu * grad P. A step that would raise P is
 * rejected and retried with mu halved; if mu drops below mu_min the knobs
 * stay put and the state is flagged as stalled.
 */
inline ControllerState gradient_step(const ControllerState& state, const Plant& plant,
                                     const ControllerParams& params = {}) {
    if (!(state.mu > 0.0)) {
        throw InvalidArgument("step size must be positive");
    }
    const double p0 = measure_objective(state, plant);
    const Gradient g = estimate_gradient(state.c1, state.c2, plant, params.delta);
    return detail::descend(state, plant, params, p0, g);
}

struct ConvergenceReport {
    bool converged = false;
    double initial_power_diff_db = 0.0;
    double final_power_diff_db = 0.0;
    int iterations = 0;  // over all restarts
    int restarts = 0;
    JonesMatrix effective_matrix;
    double residual_offdiag = 0.0;  // max |off-diagonal entry|
    double residual_phase = 0.0;    // arg of the (0,0) entry
    ControllerState final_state;
};

inline ControllerState initial_state(double c1, double c2, const ControllerParams& params) {
    ControllerState s;
    s.c1 = wrap_angle(c1);
    s.c2 = wrap_angle(c2);
    s.mu = params.mu0;
    return s;
}

namespace detail {

inline void finish_report(ConvergenceReport& r, const Plant& plant, const ControllerParams& params) {
    const ControllerState& s = r.final_state;
    r.final_power_diff_db = power_difference_db(plant.arm_powers(s.c1, s.c2));
    r.effective_matrix = plant.effective_matrix(s.c1, s.c2);
    const JonesMatrix& M = r.effective_matrix;
    r.residual_offdiag = std::max(std::abs(M(0, 1)), std::abs(M(1, 0)));
    r.residual_phase = std::arg(M(0, 0));
    const double diag = std::min(std::abs(M(0, 0)), std::abs(M(1, 1)));
    r.converged = r.final_power_diff_db >= params.tol_power_diff_db && r.residual_offdiag < params.diag_tol * diag;
}

}  // namespace detail

/**
 * Runs gradient steps from `initial` until the gradient norm drops below
 * grad_tol, the step size collapses, or max_iter steps have been taken.
 * Convergence is judged on the final state; failure is reported, not thrown.
 */
inline ConvergenceReport converge(const ControllerState& initial, const Plant& plant,
                                  const ControllerParams& params = {}) {
    if (params.max_iter < 1) {
        throw InvalidArgument("max_iter must be >= 1");
    }
    ConvergenceReport r;
    r.initial_power_diff_db = power_difference_db(plant.arm_powers(initial.c1, initial.c2));
    if (!(initial.mu > 0.0)) {
        throw InvalidArgument("step size must be positive");
    }
    ControllerState s = initial;
    double p = measure_objective(s, plant);
    while (s.iteration - initial.iteration < params.max_iter) {
        const Gradient g = estimate_gradient(s.c1, s.c2, plant, params.delta);
        s.last_gradient_norm = g.norm();
        if (g.norm() < params.grad_tol) break;
        s = detail::descend(s, plant, params, p, g);
        if (s.stalled) break;
        p = s.history.back().p;
    }
    r.iterations = s.iteration - initial.iteration;
    r.final_state = std::move(s);
    detail::finish_report(r, plant, params);
    return r;
}

/// converge() from (0, 0), then from up to max_restarts seeded random knob settings.
inline ConvergenceReport converge_with_restarts(const Plant& plant, const ControllerParams& params = {},
                                                std::uint64_t seed = 1) {
    ConvergenceReport r = converge(initial_state(0.0, 0.0, params), plant, params);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> knob(0.0, kTwoPi);
    int total = r.iterations;
    const double initial_diff = r.initial_power_diff_db;
    for (int k = 1; k <= params.max_restarts && !r.converged; ++k) {
        const double c1 = knob(rng);
        const double c2 = knob(rng);
        r = converge(initial_state(c1, c2, params), plant, params);
        total += r.iterations;
        r.restarts = k;
    }
    r.iterations = total;
    r.initial_power_diff_db = initial_diff;
    return r;
}

/// P sampled on an n x n grid over [0, 2 pi)^2, row-major in (c1, c2).
struct PowerProfile {
    int n = 0;
    std::vector<double> values;

    double knob(int i) const noexcept { return kTwoPi * i / n; }
    double at(int i, int j) const { return values[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)]; }
    double min() const { return *std::min_element(values.begin(), values.end()); }

    // Cells whose value lies within tol of the grid minimum.
    std::size_t count_minima(double tol) const {
        const double lo = min();
        return static_cast<std::size_t>(std::count_if(values.begin(), values.end(), [&](double v) { return v - lo <= tol; }));
    }
};

inline PowerProfile power_profile(const Plant& plant, int grid_n, unsigned threads = 0) {
    if (grid_n < 16) {
        throw InvalidArgument("profile grid must be at least 16 x 16");
    }
    PowerProfile prof;
    prof.n = grid_n;
    prof.values.assign(static_cast<std::size_t>(grid_n) * static_cast<std::size_t>(grid_n), 0.0);
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(grid_n));

    auto rows = [&](int begin, int end) {
        for (int i = begin; i < end; ++i) {
            for (int j = 0; j < grid_n; ++j) {
                prof.values[static_cast<std::size_t>(i) * static_cast<std::size_t>(grid_n) + static_cast<std::size_t>(j)] =
                    measure_objective(prof.knob(i), prof.knob(j), plant);
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        const int chunk = (grid_n + static_cast<int>(threads) - 1) / static_cast<int>(threads);
        for (int b = 0; b < grid_n; b += chunk) pool.emplace_back(rows, b, std::min(grid_n, b + chunk));
    }
    return prof;
}

/// CSV grid: c1, c2, P.
inline void write_profile_csv(const PowerProfile& prof, const std::filesystem::path& path) {
    csv::Writer out(path, {"c1", "c2", "P"});
    for (int i = 0; i < prof.n; ++i) {
        for (int j = 0; j < prof.n; ++j) out.row({prof.knob(i), prof.knob(j), prof.at(i, j)});
    }
    out.close();
}

/// Convergence trace: iteration, c1, c2, p_signal_arm, p_carrier_arm, power_diff_db.
/// Row 0 is the starting point; rows 1.. follow the state history.
inline void write_trace_csv(const ControllerState& initial, const ControllerState& final_state, const Plant& plant,
                            const std::filesystem::path& path) {
    csv::Writer out(path, {"iteration", "c1", "c2", "p_signal_arm", "p_carrier_arm", "power_diff_db"});
    auto emit = [&](int it, double c1, double c2) {
        const PolPower p = plant.arm_powers(c1, c2);
        out.row({static_cast<double>(it), c1, c2, p.px, p.py, power_difference_db(p)});
    };
    emit(0, initial.c1, initial.c2);
    for (std::size_t k = 0; k < final_state.history.size(); ++k) {
        emit(static_cast<int>(k) + 1, final_state.history[k].c1, final_state.history[k].c2);
    }
    out.close();
}

}  // namespace shpol

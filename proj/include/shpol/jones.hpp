#pragma once

/**
 * Jones calculus for fully polarized light.
 *
 * A JonesVector holds the complex field amplitudes of the x and y
 * polarizations; a JonesMatrix is a linear 2x2 operator on them. All phases
 * use the engineering convention exp(+j*phi) with j*j = -1, all angles are in
 * radians, and a positive angle rotates the device axes counter-clockwise
 * relative to the reference frame.
 */

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <utility>

#include "shpol/errors.hpp"

namespace shpol {

using cplx = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct JonesVector {
    cplx ex{};
    cplx ey{};

    double power() const noexcept { return std::norm(ex) + std::norm(ey); }
    bool finite() const noexcept {
        return std::isfinite(ex.real()) && std::isfinite(ex.imag()) &&
               std::isfinite(ey.real()) && std::isfinite(ey.imag());
    }

    JonesVector& operator+=(const JonesVector& o) noexcept {
        ex += o.ex;
        ey += o.ey;
        return *this;
    }
    friend JonesVector operator+(JonesVector a, const JonesVector& b) noexcept { return a += b; }
    friend JonesVector operator*(cplx s, const JonesVector& v) noexcept { return {s * v.ex, s * v.ey}; }
    friend bool operator==(const JonesVector&, const JonesVector&) = default;
};

// Row-major 2x2: m00 m01 / m10 m11.
struct JonesMatrix {
    std::array<cplx, 4> m{cplx{1.0}, cplx{}, cplx{}, cplx{1.0}};

    static constexpr JonesMatrix identity() noexcept { return {}; }
    static constexpr JonesMatrix from(cplx m00, cplx m01, cplx m10, cplx m11) noexcept {
        return JonesMatrix{{m00, m01, m10, m11}};
    }

    const cplx& operator()(int r, int c) const noexcept { return m[static_cast<std::size_t>(2 * r + c)]; }
    cplx& operator()(int r, int c) noexcept { return m[static_cast<std::size_t>(2 * r + c)]; }

    JonesMatrix adjoint() const noexcept {
        return from(std::conj(m[0]), std::conj(m[2]), std::conj(m[1]), std::conj(m[3]));
    }
    cplx det() const noexcept { return m[0] * m[3] - m[1] * m[2]; }

    friend JonesMatrix operator*(const JonesMatrix& a, const JonesMatrix& b) noexcept {
        return from(a.m[0] * b.m[0] + a.m[1] * b.m[2], a.m[0] * b.m[1] + a.m[1] * b.m[3],
                    a.m[2] * b.m[0] + a.m[3] * b.m[2], a.m[2] * b.m[1] + a.m[3] * b.m[3]);
    }
    friend JonesVector operator*(const JonesMatrix& a, const JonesVector& v) noexcept {
        return {a.m[0] * v.ex + a.m[1] * v.ey, a.m[2] * v.ex + a.m[3] * v.ey};
    }
    friend bool operator==(const JonesMatrix&, const JonesMatrix&) = default;
};

// Mean optical power per polarization, linear units.
struct PolPower {
    double px = 0.0;
    double py = 0.0;

    double total() const noexcept { return px + py; }
};

namespace detail {

inline void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) {
        throw InvalidArgument(std::string(what) + " must be finite");
    }
}

}  // namespace detail

/// Largest entrywise deviation of M^H M from the identity.
inline double unitarity_error(const JonesMatrix& M) noexcept {
    const JonesMatrix g = M.adjoint() * M;
    const JonesMatrix I = JonesMatrix::identity();
    double worst = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        worst = std::max(worst, std::abs(g.m[i] - I.m[i]));
    }
    return worst;
}

/// Real rotation [[cos, -sin], [sin, cos]]; the PBS misalignment operator.
inline JonesMatrix rotator(double theta) {
    detail::require_finite(theta, "rotator angle");
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    return JonesMatrix::from(c, -s, s, c);
}

/// diag(e^{j phi}, e^{-j phi}): differential phase between the two axes.
inline JonesMatrix phase_plate(double phi) {
    detail::require_finite(phi, "phase");
    return JonesMatrix::from(std::polar(1.0, phi), cplx{}, cplx{}, std::polar(1.0, -phi));
}

/**
 * Linear retarder with retardance `retardance` and fast axis at `azimuth`:
 * R(azimuth) * diag(e^{-j G/2}, e^{j G/2}) * R(-azimuth).
 */
inline JonesMatrix waveplate(double retardance, double azimuth) {
    detail::require_finite(retardance, "retardance");
    detail::require_finite(azimuth, "waveplate azimuth");
    const JonesMatrix D = JonesMatrix::from(std::polar(1.0, -retardance / 2.0), cplx{}, cplx{},
                                            std::polar(1.0, retardance / 2.0));
    return rotator(azimuth) * D * rotator(-azimuth);
}

inline JonesMatrix quarter_wave_plate(double azimuth) { return waveplate(kPi / 2.0, azimuth); }
inline JonesMatrix half_wave_plate(double azimuth) { return waveplate(kPi, azimuth); }

/// Polarization beam splitter at angle theta; returns the (x-arm, y-arm) outputs.
inline std::pair<JonesVector, JonesVector> pbs_split(const JonesVector& input, double theta) {
    detail::require_finite(theta, "PBS angle");
    if (!input.finite()) {
        throw InvalidArgument("PBS input must be finite");
    }
    const JonesVector r = rotator(theta) * input;
    return {JonesVector{r.ex, cplx{}}, JonesVector{cplx{}, r.ey}};
}

/// Polarization beam combiner; R(-theta) undoes a PBS at the same angle.
inline JonesVector pbc_combine(const JonesVector& x_arm, const JonesVector& y_arm, double theta) {
    detail::require_finite(theta, "PBC angle");
    return rotator(-theta) * JonesVector{x_arm.ex, y_arm.ey};
}

/// Lumped system matrix A = R(theta) * diag(e^{j phi}, e^{-j phi}) * R(-theta)
/// for matched PBS/PBC angles theta and differential phase phi.
inline JonesMatrix composite_channel(double theta, double phi) {
    return rotator(theta) * phase_plate(phi) * rotator(-theta);
}

inline PolPower power_of(const JonesVector& v) {
    if (!v.finite()) {
        throw InvalidArgument("power_of: non-finite field");
    }
    return {std::norm(v.ex), std::norm(v.ey)};
}

}  // namespace shpol

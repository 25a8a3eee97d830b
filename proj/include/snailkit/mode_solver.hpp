// Copyright 2026 The snailkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "snailkit/circuit.hpp"
#include "snailkit/constants.hpp"
#include "snailkit/errors.hpp"
#include "snailkit/units.hpp"

// Fundamental mode of a transmission-line resonator terminated by a SNAIL:
// frequency, zero-point phase across the SNAIL, three- and four-wave mixing
// couplings and the resulting self-Kerr coefficient.
namespace snailkit::mode {

struct ResonatorGeometry {
    double omega_r0 = 0.0;  // bare line resonance without the SNAIL, rad/s
    double z_c = 0.0;       // characteristic impedance, ohm

    void validate() const {
        if (!(omega_r0 > 0.0) || !(z_c > 0.0)) {
            throw InvalidBracket("resonator frequency and impedance must be positive");
        }
    }
};

struct ModeSolution {
    double omega_s = 0.0;  // rad/s
    double phi_zpf = 0.0;
    double g3 = 0.0;    // rad/s
    double g4 = 0.0;    // rad/s
    double kerr = 0.0;  // rad/s
};

/// Single dimensionless factor on the zero-point phase, fixed once so that
/// the main device (beta 0.0993, L_J 629 pH, 8.87 GHz, 58.7 ohm) has
/// g3/2pi = -11.6 MHz at 0.386 flux quanta. See calibrate_phase_scale().
inline constexpr double kPhaseCalibration = 1.0028994527173942;

// Largest admissible omega/omega_r0; keeps the search off the tangent pole.
inline constexpr double kPoleGuard = 1.0 - 1e-9;

/// Root of omega * tan(pi/2 * omega/omega_r0) = Z_c * c2 / L_J on (0, omega_r0).
///
/// c2 here is the bare curvature of U/E_J, so L_J/c2 is the SNAIL inductance
/// (three big junctions in series give c2 = 1/3, i.e. 3 L_J). The left side
/// rises monotonically from 0 to infinity, so the root is unique. Bisection
/// narrows it to 1e-3 relative, then Newton polishes inside the bracket.
inline double solve_mode_frequency(double c2, const ResonatorGeometry &geom, double l_j) {
    if (!(c2 > 0.0) || !(l_j > 0.0)) {
        throw InvalidBracket("c2 and junction inductance must be positive");
    }
    geom.validate();
    const double target = geom.z_c * c2 / l_j / geom.omega_r0;  // in units of omega_r0
    const auto f = [target](double x) { return x * std::tan(0.5 * kPi * x) - target; };
    const auto df = [](double x) {
        const double th = 0.5 * kPi * x;
        const double c = std::cos(th);
        return std::tan(th) + x * 0.5 * kPi / (c * c);
    };

    double lo = 0.0;
    double hi = kPoleGuard;
    if (f(hi) < 0.0) {
        throw InvalidBracket("root lies beyond the pole guard (SNAIL nearly a short)");
    }
    while ((hi - lo) > 1e-3 * hi) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < 0.0 ? lo : hi) = mid;
    }
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 50; ++it) {
        const double fx = f(x);
        if (fx == 0.0) break;
        (fx < 0.0 ? lo : hi) = x;
        double next = x - fx / df(x);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        const bool done = std::abs(next - x) <= 4e-16 * x;
        x = next;
        if (done) break;
    }
    return x * geom.omega_r0;
}

/// Participation-weighted inductance of the distributed line at omega_s:
/// magnetic energy of an open-ended line whose far end carries zero current,
/// referred to the current at the SNAIL port.
inline double line_inductance(double omega_s, const ResonatorGeometry &geom) {
    const double x = omega_s / geom.omega_r0;
    const double th = 0.5 * kPi * x;
    const double s = std::sin(th);
    const double weight = (th - s * std::cos(th)) / (kPi * x * s * s);
    return kPi * geom.z_c / (2.0 * geom.omega_r0) * weight;
}

/// Zero-point phase across the SNAIL before the calibration factor.
/// phi^2 = (2e/hbar)^2 (hbar omega_s / 2) L_s p with L_s = L_J/c2 and
/// participation p = L_s / (L_s + L_line).
inline double zero_point_phase_uncalibrated(double omega_s, double c2,
                                            const ResonatorGeometry &geom, double l_j) {
    if (!(omega_s > 0.0) || !(c2 > 0.0) || !(l_j > 0.0)) {
        throw InvalidConfig("zero-point phase needs positive omega_s, c2, L_J");
    }
    geom.validate();
    const auto &k = constants();
    const double l_s = l_j / c2;
    const double p = l_s / (l_s + line_inductance(omega_s, geom));
    const double flux_zpf_sq = 0.5 * k.hbar * omega_s * l_s * p;
    return std::sqrt(flux_zpf_sq) / k.reduced_flux_quantum();
}

inline double zero_point_phase(double omega_s, double c2, const ResonatorGeometry &geom,
                               double l_j, double calibration = kPhaseCalibration) {
    return calibration * zero_point_phase_uncalibrated(omega_s, c2, geom, l_j);
}

/// g3 = (E_J/hbar) c3/3! phi^3, g4 = (E_J/hbar) c4/4! phi^4, in rad/s.
inline std::pair<double, double> nonlinear_couplings(const circuit::PotentialExpansion &ex,
                                                     double /*omega_s*/, double phi_zpf,
                                                     double l_j) {
    const double ej = josephson_energy(l_j) / constants().hbar;
    const double p3 = phi_zpf * phi_zpf * phi_zpf;
    return {ej * ex.c3 / 6.0 * p3, ej * ex.c4 / 24.0 * p3 * phi_zpf};
}

inline double kerr_coefficient(double g3, double g4, double omega_s) {
    return 12.0 * (g4 - 5.0 * g3 * g3 / omega_s);
}

struct ModePoint {
    circuit::PotentialExpansion expansion;
    ModeSolution solution;
};

/// Full pipeline at the flux carried by `config`.
inline ModePoint solve_mode(const circuit::SnailConfig &config, const ResonatorGeometry &geom,
                            double calibration = kPhaseCalibration) {
    const auto ex = circuit::taylor_coeffs(config);
    ModeSolution s;
    s.omega_s = solve_mode_frequency(ex.c2, geom, config.l_j);
    s.phi_zpf = zero_point_phase(s.omega_s, ex.c2, geom, config.l_j, calibration);
    std::tie(s.g3, s.g4) = nonlinear_couplings(ex, s.omega_s, s.phi_zpf, config.l_j);
    s.kerr = kerr_coefficient(s.g3, s.g4, s.omega_s);
    return {ex, s};
}

inline ModePoint solve_mode_at_flux(const circuit::SnailConfig &tmpl, const ResonatorGeometry &geom,
                                    double flux_phi0, double calibration = kPhaseCalibration) {
    return solve_mode(tmpl.with_flux(units::reduced_flux(flux_phi0)), geom, calibration);
}

/// Phase-scale factor that makes g3 at `flux_phi0` equal `g3_target` (rad/s).
/// g3 scales as the cube of the factor.
inline double calibrate_phase_scale(const circuit::SnailConfig &tmpl, const ResonatorGeometry &geom,
                                    double flux_phi0, double g3_target) {
    const auto raw = solve_mode_at_flux(tmpl, geom, flux_phi0, 1.0);
    if (raw.solution.g3 == 0.0 || (raw.solution.g3 < 0.0) != (g3_target < 0.0)) {
        throw Unsolvable("g3 anchor has the wrong sign at this flux");
    }
    return std::cbrt(g3_target / raw.solution.g3);
}

struct KerrFreePoint {
    double flux_phi0 = 0.0;
    ModePoint mode;
};

inline constexpr double kKerrFreeTolerance = kTwoPi * 1e3;  // 1 kHz

/// Flux (in flux quanta) where K crosses zero inside `window`.
///
/// The window is scanned on a coarse grid for the first sign change, then
/// bisected until the bracket is below 1e-12 flux quanta.
inline KerrFreePoint find_kerr_free_flux(const circuit::SnailConfig &tmpl,
                                         const ResonatorGeometry &geom,
                                         std::pair<double, double> window = {0.25, 0.5},
                                         double calibration = kPhaseCalibration) {
    const auto kerr_at = [&](double f) {
        return solve_mode_at_flux(tmpl, geom, f, calibration).solution.kerr;
    };
    constexpr int kScan = 50;
    // Stay just inside the open window.
    const double a0 = window.first;
    const double b0 = window.second - 1e-9;
    const double step = (b0 - a0) / kScan;

    double lo = a0;
    double k_lo = kerr_at(lo);
    std::optional<std::pair<double, double>> bracket;
    for (int i = 1; i <= kScan && !bracket; ++i) {
        const double x = a0 + i * step;
        const double k = kerr_at(x);
        if (k == 0.0) return {x, solve_mode_at_flux(tmpl, geom, x, calibration)};
        if ((k < 0.0) != (k_lo < 0.0)) bracket = std::pair{lo, x};
        lo = x;
        k_lo = k;
    }
    if (!bracket) {
        throw NoSignChange("Kerr coefficient keeps one sign on (" + std::to_string(window.first) +
                           ", " + std::to_string(window.second) + ") flux quanta");
    }

    auto [a, b] = *bracket;
    double k_a = kerr_at(a);
    while (b - a > 1e-12) {
        const double m = 0.5 * (a + b);
        const double k_m = kerr_at(m);
        if (k_m == 0.0) {
            a = b = m;
            break;
        }
        if ((k_m < 0.0) == (k_a < 0.0)) {
            a = m;
            k_a = k_m;
        } else {
            b = m;
        }
    }
    const double star = 0.5 * (a + b);
    auto point = solve_mode_at_flux(tmpl, geom, star, calibration);
    if (std::abs(point.solution.kerr) >= kKerrFreeTolerance) {
        throw NoSignChange("Kerr zero not resolved to 1 kHz (discontinuous K?)");
    }
    return {star, point};
}

struct FluxGrid {
    double start_phi0 = -0.5;
    double stop_phi0 = 0.5;
    int points = 101;

    double at(int i) const {
        if (points == 1) return start_phi0;
        return start_phi0 + (stop_phi0 - start_phi0) * i / (points - 1);
    }
};

struct SweepRow {
    double flux_phi0 = 0.0;
    bool ok = false;
    std::string error;  // set when the row could not be solved
    ModePoint mode;
};

/// Row-wise pipeline over a flux grid. Rows that fail (degenerate potential,
/// unsolvable frequency) are kept with ok = false.
inline std::vector<SweepRow> flux_sweep(const circuit::SnailConfig &tmpl, const ResonatorGeometry &geom,
                                        const FluxGrid &grid, double calibration = kPhaseCalibration) {
    if (grid.points < 1) throw BadInput("flux grid needs at least one point");
    if (std::abs(grid.stop_phi0 - grid.start_phi0) > 1.0 + 1e-12) {
        throw BadInput("flux grid must stay within one flux period");
    }
    std::vector<SweepRow> rows;
    rows.reserve(grid.points);
    for (int i = 0; i < grid.points; ++i) {
        SweepRow row;
        row.flux_phi0 = grid.at(i);
        try {
            row.mode = solve_mode_at_flux(tmpl, geom, row.flux_phi0, calibration);
            row.ok = true;
        } catch (const DegeneratePotential &e) {
            row.error = e.what();
        } catch (const InvalidBracket &e) {
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace snailkit::mode

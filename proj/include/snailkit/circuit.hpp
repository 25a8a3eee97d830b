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

#include <array>
#include <cmath>
#include <string>

#include "snailkit/constants.hpp"
#include "snailkit/errors.hpp"

// Inductive energy of a SNAIL: one small junction (energy beta*E_J) in a loop
// with three big junctions (energy E_J each), threaded by reduced flux phi_ext.
// Energies are in units of E_J throughout this header.
namespace snailkit::circuit {

inline constexpr double kMaxBeta = 0.5;
inline constexpr double kCalibratedBeta = 0.2;
inline constexpr double kStationarityTolerance = 1e-12;
inline constexpr double kCurvatureTolerance = 1e-9;

struct SnailConfig {
    double beta = 0.0;     // small/big junction energy ratio
    double l_j = 0.0;      // big junction inductance, H
    double phi_ext = 0.0;  // reduced external flux, rad

    void validate() const {
        if (!(beta > 0.0 && beta < kMaxBeta)) {
            throw InvalidConfig("beta must lie in (0, 0.5), got " + std::to_string(beta));
        }
        if (!(l_j > 0.0) || !std::isfinite(l_j)) {
            throw InvalidConfig("junction inductance must be positive");
        }
        if (!std::isfinite(phi_ext)) throw InvalidConfig("external flux must be finite");
    }

    /// True when beta exceeds the range the model has been checked against.
    bool beta_above_calibrated_range() const { return beta > kCalibratedBeta; }

    double josephson_energy() const { return snailkit::josephson_energy(l_j); }

    SnailConfig with_flux(double phi) const { return {beta, l_j, phi}; }
};

/// Bare derivatives of U/E_J at the potential minimum. No 1/n! folding:
/// c2 = U''/E_J, c3 = U'''/E_J, c4 = U''''/E_J.
struct PotentialExpansion {
    double phi_min = 0.0;
    double c2 = 0.0;
    double c3 = 0.0;
    double c4 = 0.0;

    std::array<double, 3> coefficients() const { return {c2, c3, c4}; }
};

inline double snail_potential(const SnailConfig &config, double phi) {
    return -config.beta * std::cos(phi) - 3.0 * std::cos((config.phi_ext - phi) / 3.0);
}

inline double snail_potential_slope(const SnailConfig &config, double phi) {
    return config.beta * std::sin(phi) - std::sin((config.phi_ext - phi) / 3.0);
}

inline double snail_potential_curvature(const SnailConfig &config, double phi) {
    return config.beta * std::cos(phi) + std::cos((config.phi_ext - phi) / 3.0) / 3.0;
}

namespace detail {

inline constexpr int kScanPoints = 4096;
inline constexpr int kHalfScan = kScanPoints / 2;

// Grid offsets j*h for j in [-2048, 2047] spanning one 6*pi period of U.
// cos/sin of the offsets are tabulated once so a scan at any flux is a
// linear combination: cos(phi_ext + j h) = cos(phi_ext)cos(jh) - sin(phi_ext)sin(jh),
// and the big-junction term only sees -jh/3.
struct ScanTables {
    double step;
    std::array<double, kScanPoints> cos_offset;
    std::array<double, kScanPoints> sin_offset;
    std::array<double, kScanPoints> cos_third;

    ScanTables() : step(6.0 * kPi / kScanPoints) {
        for (int i = 0; i < kScanPoints; ++i) {
            const double x = (i - kHalfScan) * step;
            cos_offset[i] = std::cos(x);
            sin_offset[i] = std::sin(x);
            cos_third[i] = std::cos(x / 3.0);
        }
    }
};

inline const ScanTables &scan_tables() {
    static const ScanTables tables;
    return tables;
}

}  // namespace detail

/// Global minimizer of the potential over [phi_ext - 3pi, phi_ext + 3pi).
///
/// A 4096-point periodic scan picks the deepest well; bisection on U'
/// between the neighbouring grid points then converges to the stationary
/// point. More than one local minimum on the scan, or a curvature below
/// kCurvatureTolerance at the result, raises DegeneratePotential.
inline double find_minimum(const SnailConfig &config) {
    config.validate();
    const auto &tab = detail::scan_tables();
    const double cf = std::cos(config.phi_ext);
    const double sf = std::sin(config.phi_ext);

    std::array<double, detail::kScanPoints> u{};
    for (int i = 0; i < detail::kScanPoints; ++i) {
        u[i] = -config.beta * (cf * tab.cos_offset[i] - sf * tab.sin_offset[i]) -
               3.0 * tab.cos_third[i];
    }

    int best = 0;
    int wells = 0;
    for (int i = 0; i < detail::kScanPoints; ++i) {
        const double prev = u[(i + detail::kScanPoints - 1) % detail::kScanPoints];
        const double next = u[(i + 1) % detail::kScanPoints];
        if (u[i] < prev && u[i] <= next) ++wells;
        if (u[i] < u[best]) best = i;
    }
    if (wells > 1) {
        throw DegeneratePotential("potential has " + std::to_string(wells) +
                                  " wells at phi_ext = " + std::to_string(config.phi_ext));
    }

    double lo = config.phi_ext + (best - 1 - detail::kHalfScan) * tab.step;
    double hi = config.phi_ext + (best + 1 - detail::kHalfScan) * tab.step;
    double f_lo = snail_potential_slope(config, lo);
    double f_hi = snail_potential_slope(config, hi);
    if (f_lo > 0.0 || f_hi < 0.0) {
        throw DegeneratePotential("no stationary point bracketed near the scan minimum");
    }

    double root = 0.5 * (lo + hi);
    for (;;) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) {
            root = std::abs(f_lo) < std::abs(f_hi) ? lo : hi;
            break;
        }
        const double f_mid = snail_potential_slope(config, mid);
        if (f_mid == 0.0) {
            root = mid;
            break;
        }
        if (f_mid < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }

    if (std::abs(snail_potential_slope(config, root)) >= kStationarityTolerance) {
        throw DegeneratePotential("stationarity tolerance not reached");
    }
    if (snail_potential_curvature(config, root) < kCurvatureTolerance) {
        throw DegeneratePotential("flat potential at the minimum (curvature " +
                                  std::to_string(snail_potential_curvature(config, root)) + ")");
    }
    return root;
}

/// Expansion of U/E_J about `phi_min` (closed-form derivatives).
inline PotentialExpansion expansion_at(const SnailConfig &config, double phi_min) {
    const double u = (config.phi_ext - phi_min) / 3.0;
    const double cb = config.beta * std::cos(phi_min);
    const double sb = config.beta * std::sin(phi_min);
    return {
        .phi_min = phi_min,
        .c2 = cb + std::cos(u) / 3.0,
        .c3 = -sb + std::sin(u) / 9.0,
        .c4 = -cb - std::cos(u) / 27.0,
    };
}

inline PotentialExpansion taylor_coeffs(const SnailConfig &config) {
    return expansion_at(config, find_minimum(config));
}

}  // namespace snailkit::circuit

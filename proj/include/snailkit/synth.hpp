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

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "snailkit/dispersive.hpp"
#include "snailkit/dynamics.hpp"
#include "snailkit/estimation.hpp"
#include "snailkit/mode_solver.hpp"

// Seeded synthetic measurements. Same seed, same numbers.
namespace snailkit::synth {

using Rng = std::mt19937_64;

inline double gaussian(Rng &rng, double sigma) {
    if (sigma <= 0.0) return 0.0;
    return std::normal_distribution<double>(0.0, sigma)(rng);
}

inline std::vector<double> linspace(double a, double b, int n) {
    if (n < 1) throw BadInput("linspace needs at least one point");
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
    return v;
}

/// Mode frequencies at `fluxes` with Gaussian noise of `sigma` (rad/s).
/// The stored sigma is the noise level, or 0 when `weighted` is false.
inline std::vector<estimation::FluxPoint> flux_points(const circuit::SnailConfig &tmpl,
                                                      const mode::ResonatorGeometry &geom,
                                                      const std::vector<double> &fluxes, double sigma,
                                                      std::uint64_t seed, bool weighted = false) {
    Rng rng(seed);
    std::vector<estimation::FluxPoint> out;
    for (double f : fluxes) {
        const double w = mode::solve_mode_at_flux(tmpl, geom, f).solution.omega_s;
        out.push_back({f, w + gaussian(rng, sigma), weighted ? sigma : 0.0});
    }
    return out;
}

/// Conditional-pi trace with additive noise, clamped to [0, 1].
inline dynamics::DecayTrace decay_trace(double alpha0, double t1, const std::vector<double> &tau, double noise,
                                        std::uint64_t seed,
                                        dynamics::PopulationConvention convention =
                                            dynamics::PopulationConvention::VacuumExcites) {
    Rng rng(seed);
    dynamics::DecayTrace tr;
    tr.alpha0 = alpha0;
    tr.tau = tau;
    for (double t : tau) {
        const double p = dynamics::conditional_pi_population(alpha0, t, t1, convention) + gaussian(rng, noise);
        tr.pop.push_back(std::clamp(p, 0.0, 1.0));
    }
    tr.meta = "synthetic decay trace";
    tr.validate();
    return tr;
}

/// T1(n_bar) from the TLS law with multiplicative noise `rel_noise`.
inline std::vector<estimation::TlsPoint> tls_points(const dynamics::TlsParams &p, double omega_c,
                                                    const std::vector<double> &n_bar, double rel_noise,
                                                    std::uint64_t seed, bool weighted = false) {
    Rng rng(seed);
    std::vector<estimation::TlsPoint> out;
    for (double n : n_bar) {
        const double t1 = dynamics::tls_t1(n, omega_c, p);
        out.push_back({n, t1 * (1.0 + gaussian(rng, rel_noise)), weighted ? rel_noise * t1 : 0.0});
    }
    return out;
}

/// Adds white Gaussian noise of `sigma` (in amplitude units) to a spectrum.
inline dispersive::Spectrum add_noise(dispersive::Spectrum s, double sigma, std::uint64_t seed) {
    Rng rng(seed);
    for (double &a : s.amp) a += gaussian(rng, sigma);
    return s;
}

}  // namespace snailkit::synth

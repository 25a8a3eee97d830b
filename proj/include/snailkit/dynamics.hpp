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
#include <string>
#include <string_view>
#include <vector>

#include "snailkit/constants.hpp"
#include "snailkit/errors.hpp"

// Closed-form decay and loss models for the resonator.
namespace snailkit::dynamics {

struct DecayTrace {
    std::vector<double> tau;  // s, strictly increasing
    std::vector<double> pop;  // excited-state population, in [0, 1]
    double alpha0 = 0.0;      // initial coherent amplitude |alpha(0)|
    std::string meta;

    void validate() const {
        if (tau.size() != pop.size()) throw BadInput("decay trace columns differ in length");
        for (std::size_t i = 0; i < tau.size(); ++i) {
            if (i > 0 && !(tau[i] > tau[i - 1])) throw BadInput("delays must be strictly increasing");
            if (!(pop[i] >= 0.0 && pop[i] <= 1.0)) {
                throw BadInput("population outside [0, 1] at index " + std::to_string(i));
            }
        }
    }
};

struct TlsParams {
    double f_delta_tls = 0.0;  // filling factor times TLS loss tangent
    double n_c = 0.0;          // critical photon number
    double delta_other = 0.0;  // non-TLS loss tangent
    double t_res = 0.0;        // bath temperature, K

    void validate() const {
        if (!(f_delta_tls >= 0.0) || !(delta_other >= 0.0) || !(t_res >= 0.0)) {
            throw InvalidConfig("TLS parameters must be non-negative");
        }
        if (!(n_c > 0.0)) throw InvalidConfig("critical photon number must be positive");
    }
};

/// Partial loss rates in cyclic Hz; times in seconds.
struct LossBudget {
    double gamma_q = 0.0;
    double gamma_c = 0.0;
    double gamma_f = 0.0;
    double gamma_total = 0.0;
    double t_total = 0.0;
    double t_other = 0.0;
};

inline double coherent_decay(double alpha0, double tau, double t1) {
    if (!(t1 > 0.0)) throw InvalidConfig("T1 must be positive");
    return alpha0 * std::exp(-tau / (2.0 * t1));
}

enum class PopulationConvention {
    VacuumExcites,  // pi-pulse addresses the empty-resonator line: rho_ee = P0
    GroundComplement,  // rho_ee = 1 - P0
};

inline std::string_view to_string(PopulationConvention c) {
    return c == PopulationConvention::VacuumExcites ? "vacuum-excites" : "ground-complement";
}

/// Vacuum probability of the decaying coherent state, P0 = exp(-|a0|^2 e^{-tau/T1}).
inline double vacuum_probability(double alpha0, double tau, double t1) {
    if (!(t1 > 0.0)) throw InvalidConfig("T1 must be positive");
    return std::exp(-alpha0 * alpha0 * std::exp(-tau / t1));
}

inline double conditional_pi_population(
    double alpha0, double tau, double t1,
    PopulationConvention convention = PopulationConvention::VacuumExcites) {
    const double p0 = vacuum_probability(alpha0, tau, t1);
    return convention == PopulationConvention::VacuumExcites ? p0 : 1.0 - p0;
}

/// tanh(hbar omega / 2 k_B T); 1 at T = 0.
inline double tls_thermal_factor(double omega_c, double t_res) {
    if (t_res <= 0.0) return 1.0;
    const auto &k = constants();
    return std::tanh(k.hbar * omega_c / (2.0 * k.k_b * t_res));
}

/// 1/Q1 of the standard TLS saturation law plus a power-independent loss.
inline double tls_inverse_q(double n_bar, double omega_c, const TlsParams &p) {
    if (!(n_bar >= 0.0) || !(omega_c > 0.0)) {
        throw BadInput("photon number must be >= 0 and frequency > 0");
    }
    p.validate();
    return p.f_delta_tls * tls_thermal_factor(omega_c, p.t_res) / std::sqrt(1.0 + n_bar / p.n_c) +
           p.delta_other;
}

/// T1 = Q1 / omega_c.
inline double tls_t1(double n_bar, double omega_c, const TlsParams &p) {
    return 1.0 / (omega_c * tls_inverse_q(n_bar, omega_c, p));
}

inline double quality_factor(double omega_c, double t1) { return omega_c * t1; }

/// Bose-Einstein occupation at temperature t.
inline double thermal_occupation(double t, double omega_c) {
    if (t <= 0.0) return 0.0;
    const auto &k = constants();
    return 1.0 / std::expm1(k.hbar * omega_c / (k.k_b * t));
}

/// Mode temperature for a thermal occupation n_bar.
inline double thermal_temperature(double n_bar, double omega_c) {
    if (!(n_bar > 0.0)) throw NonPositiveOccupation("occupation must be positive");
    if (!(omega_c > 0.0)) throw BadInput("frequency must be positive");
    const auto &k = constants();
    return k.hbar * omega_c / (k.k_b * std::log1p(1.0 / n_bar));
}

/// Pure dephasing time from 1/T_s = 1/(2 T1) + 1/T_phi.
inline double coherence_decomposition(double t_s, double t1) {
    if (!(t_s > 0.0) || !(t1 > 0.0)) throw BadInput("times must be positive");
    const double rate = 1.0 / t_s - 1.0 / (2.0 * t1);
    if (!(rate > 0.0)) {
        throw Unphysical("coherence time at or above 2 T1 leaves no dephasing");
    }
    return 1.0 / rate;
}

inline double coherence_time(double t1, double t_phi) {
    return 1.0 / (1.0 / (2.0 * t1) + 1.0 / t_phi);
}

/// gamma_s = omega_s / Q_s (rad/s); T_s is its inverse.
inline double decoherence_rate(double omega_s, double q_s) {
    if (!(q_s > 0.0)) throw BadInput("quality factor must be positive");
    return omega_s / q_s;
}

/// Purcell-type loss into the qubit, (g0/Delta0)^2 / T1q, in cyclic Hz.
inline double qubit_loss_rate(double g0, double delta0, double t1_qubit) {
    if (!(t1_qubit > 0.0)) throw BadInput("qubit T1 must be positive");
    if (delta0 == 0.0) throw StraddlePole("zero detuning");
    const double r = g0 / delta0;
    return r * r / t1_qubit;
}

/// Combines cyclic partial rates. T_total treats the sum as gamma/2pi, and
/// T_other is the non-TLS loss-tangent limit 1/(delta_other omega_c).
inline LossBudget combine_losses(double gamma_q, double gamma_c, double gamma_f, double omega_c,
                                 double delta_other) {
    if (gamma_q < 0.0 || gamma_c < 0.0 || gamma_f < 0.0 || delta_other < 0.0) {
        throw BadInput("loss rates must be non-negative");
    }
    LossBudget b;
    b.gamma_q = gamma_q;
    b.gamma_c = gamma_c;
    b.gamma_f = gamma_f;
    b.gamma_total = gamma_q + gamma_c + gamma_f;
    b.t_total = b.gamma_total > 0.0 ? 1.0 / (kTwoPi * b.gamma_total) : INFINITY;
    b.t_other = delta_other > 0.0 ? 1.0 / (delta_other * omega_c) : INFINITY;
    return b;
}

inline LossBudget loss_budget(double g0, double delta0, double t1_qubit, double gamma_c,
                              double gamma_f, double omega_c, double delta_other) {
    return combine_losses(qubit_loss_rate(g0, delta0, t1_qubit), gamma_c, gamma_f, omega_c,
                          delta_other);
}

}  // namespace snailkit::dynamics

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
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "snailkit/constants.hpp"
#include "snailkit/errors.hpp"

// Scalar dispersive model of a transmon coupled to the SNAIL resonator, and
// the photon-number-split qubit spectrum it produces for a coherent state.
//
// Conventions: chi(n) is the observed spacing between comb peaks n-1 and n,
// and photon peaks sit below the dressed qubit line (peak n at
// omega_q - sum_{m<=n} chi(m)).
namespace snailkit::dispersive {

inline constexpr double kPoleGuard = kTwoPi * 1e3;  // 1 kHz
inline constexpr double kDispersiveLimit = 0.2;      // |g0/Delta0|
inline constexpr double kPoissonTailTolerance = 1e-9;

struct QubitParams {
    double omega_q0 = 0.0;  // bare qubit frequency, rad/s
    double alpha_q = 0.0;   // anharmonicity (positive), rad/s
    double g0 = 0.0;        // coupling, rad/s
    double gamma_q = 0.0;   // spectroscopic linewidth (FWHM), rad/s

    void validate() const {
        if (!(alpha_q > 0.0)) throw InvalidConfig("qubit anharmonicity must be positive");
        if (!(g0 >= 0.0)) throw InvalidConfig("coupling must be non-negative");
        if (!(gamma_q > 0.0)) throw InvalidConfig("qubit linewidth must be positive");
    }
};

struct DispersiveModel {
    double omega_c = 0.0;    // dressed resonator
    double omega_q = 0.0;    // dressed qubit
    double chi0 = 0.0;
    double chi_prime = 0.0;
    double k_sq = 0.0;       // qubit-induced resonator self-Kerr
    double delta0 = 0.0;     // omega_q0 - omega_s
    bool dispersive = true;  // |g0/delta0| below kDispersiveLimit
};

struct Spectrum {
    std::vector<double> freq;  // rad/s, strictly increasing
    std::vector<double> amp;   // density per rad/s for synthesized spectra
    std::string meta;

    void validate() const {
        if (freq.size() != amp.size()) throw BadInput("spectrum columns differ in length");
        for (std::size_t i = 0; i < freq.size(); ++i) {
            if (!std::isfinite(amp[i]) || !std::isfinite(freq[i])) {
                throw BadInput("spectrum contains non-finite values");
            }
            if (i > 0 && !(freq[i] > freq[i - 1])) {
                throw BadInput("spectrum frequencies must be strictly increasing");
            }
        }
    }
};

namespace detail {
inline void check_pole(double d, const char *what) {
    if (!std::isfinite(d) || std::abs(d) < kPoleGuard) {
        throw StraddlePole(std::string(what) + " within 1 kHz of zero");
    }
}
}  // namespace detail

/// chi0 = g0^2 alpha / (Delta0 (Delta0 - alpha)).
inline double dispersive_shift(double g0, double delta0, double alpha_q) {
    detail::check_pole(delta0, "detuning");
    detail::check_pole(delta0 - alpha_q, "detuning minus anharmonicity");
    return g0 * g0 * alpha_q / (delta0 * (delta0 - alpha_q));
}

inline double invert_for_g0(double chi0, double delta0, double alpha_q) {
    detail::check_pole(delta0, "detuning");
    detail::check_pole(delta0 - alpha_q, "detuning minus anharmonicity");
    if (!(alpha_q > 0.0)) throw InvalidConfig("anharmonicity must be positive");
    const double radicand = chi0 * delta0 * (delta0 - alpha_q) / alpha_q;
    if (radicand < 0.0) {
        throw Unsolvable("dispersive shift sign incompatible with the detuning");
    }
    return std::sqrt(radicand);
}

struct DressedFrequencies {
    double omega_c = 0.0;
    double omega_q = 0.0;
    double delta0 = 0.0;
};

inline DressedFrequencies dressed_frequencies(double omega_s, double omega_q0, double g0) {
    const double delta0 = omega_q0 - omega_s;
    detail::check_pole(delta0, "detuning");
    const double stark = g0 * g0 / delta0;
    return {omega_s - stark, omega_q0 + stark, delta0};
}

inline double chi_of_n(int n, double chi0, double chi_prime) {
    if (n < 1) throw BadInput("photon index must be >= 1");
    return chi0 + chi_prime * (n - 1) / 2.0;
}

/// K_sq = -24 g4 g0^2 / Delta0^2.
inline double qubit_induced_kerr(double g4, double g0, double delta0) {
    detail::check_pole(delta0, "detuning");
    return -24.0 * g4 * g0 * g0 / (delta0 * delta0);
}

/// Dressed model for a resonator at omega_s with four-wave coupling g4.
/// chi_prime is not derived from circuit parameters; it is supplied.
inline DispersiveModel build_model(double omega_s, const QubitParams &qubit, double g4,
                                   double chi_prime) {
    qubit.validate();
    const auto d = dressed_frequencies(omega_s, qubit.omega_q0, qubit.g0);
    DispersiveModel m;
    m.omega_c = d.omega_c;
    m.omega_q = d.omega_q;
    m.delta0 = d.delta0;
    m.chi0 = dispersive_shift(qubit.g0, d.delta0, qubit.alpha_q);
    m.chi_prime = chi_prime;
    m.k_sq = qubit_induced_kerr(g4, qubit.g0, d.delta0);
    m.dispersive = std::abs(qubit.g0 / d.delta0) < kDispersiveLimit;
    return m;
}

/// Model with the comb constants given directly (as measured).
inline DispersiveModel comb_model(double omega_q, double chi0, double chi_prime) {
    DispersiveModel m;
    m.omega_q = omega_q;
    m.chi0 = chi0;
    m.chi_prime = chi_prime;
    return m;
}

// --- Poisson comb -----------------------------------------------------------

inline double poisson_weight(double mean, int n) {
    if (mean == 0.0) return n == 0 ? 1.0 : 0.0;
    return std::exp(-mean + n * std::log(mean) - std::lgamma(n + 1.0));
}

/// Probability mass above n_max, summed directly (no 1 - sum cancellation).
inline double poisson_tail(double mean, int n_max) {
    if (mean == 0.0) return 0.0;
    double tail = 0.0;
    for (int n = n_max + 1;; ++n) {
        const double w = poisson_weight(mean, n);
        tail += w;
        if (n > mean && w < 1e-30) break;
    }
    return tail;
}

/// Smallest truncation meeting both ceil(|a|^2 + 6|a|) and the 1e-9 tail bound.
inline int default_truncation(double alpha) {
    const double mean = alpha * alpha;
    int n = static_cast<int>(std::ceil(mean + 6.0 * std::abs(alpha)));
    while (poisson_tail(mean, n) >= kPoissonTailTolerance) ++n;
    return n;
}

struct CombPeak {
    int n = 0;
    double center = 0.0;  // rad/s
    double weight = 0.0;
};

/// Peak positions and Poisson weights for a coherent state of amplitude alpha.
inline std::vector<CombPeak> number_splitting_comb(double alpha, const DispersiveModel &model,
                                                   std::optional<int> n_max = std::nullopt) {
    const double mean = alpha * alpha;
    const int n_top = n_max.value_or(default_truncation(alpha));
    if (n_top < 0) throw BadInput("truncation must be non-negative");
    const double tail = poisson_tail(mean, n_top);
    if (tail >= kPoissonTailTolerance) {
        throw TruncationTooSmall("dropped Poisson weight " + std::to_string(tail) +
                                 " at n_max = " + std::to_string(n_top));
    }
    std::vector<CombPeak> peaks;
    peaks.reserve(n_top + 1);
    double center = model.omega_q;
    for (int n = 0; n <= n_top; ++n) {
        if (n > 0) center -= chi_of_n(n, model.chi0, model.chi_prime);
        peaks.push_back({n, center, poisson_weight(mean, n)});
    }
    return peaks;
}

/// Gaussian standard deviation for a line of full width at half maximum `fwhm`.
inline double sigma_from_fwhm(double fwhm) { return fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0))); }

/// Evenly spaced grid covering every comb peak with weight above 1e-9,
/// padded by six linewidths on each side.
inline std::vector<double> splitting_grid(double alpha, const DispersiveModel &model,
                                          const QubitParams &qubit, int points) {
    if (points < 2) throw BadInput("grid needs at least two points");
    const auto peaks = number_splitting_comb(alpha, model);
    double lo = model.omega_q;
    double hi = model.omega_q;
    for (const auto &p : peaks) {
        if (p.weight > kPoissonTailTolerance) {
            lo = std::min(lo, p.center);
            hi = std::max(hi, p.center);
        }
    }
    const double pad = 6.0 * qubit.gamma_q;
    lo -= pad;
    hi += pad;
    std::vector<double> grid(points);
    for (int i = 0; i < points; ++i) grid[i] = lo + (hi - lo) * i / (points - 1);
    return grid;
}

/// Qubit spectrum P(omega) for a coherent resonator state: Poisson-weighted
/// unit-area Gaussians (sigma from the linewidth read as FWHM), normalized
/// so the integral over omega is 1 up to the truncated tail.
inline Spectrum synth_number_splitting(double alpha, const DispersiveModel &model,
                                       const QubitParams &qubit, std::optional<int> n_max,
                                       const std::vector<double> &freq) {
    if (!(qubit.gamma_q > 0.0)) throw InvalidConfig("qubit linewidth must be positive");
    const auto peaks = number_splitting_comb(alpha, model, n_max);
    if (freq.empty()) throw BadInput("empty frequency grid");
    for (const auto &p : peaks) {
        if (p.weight > kPoissonTailTolerance && (p.center < freq.front() || p.center > freq.back())) {
            throw BadInput("frequency grid does not span peak n = " + std::to_string(p.n));
        }
    }
    const double sigma = sigma_from_fwhm(qubit.gamma_q);
    const double norm = 1.0 / (sigma * std::sqrt(kTwoPi));
    Spectrum s;
    s.freq = freq;
    s.amp.assign(freq.size(), 0.0);
    for (std::size_t i = 0; i < freq.size(); ++i) {
        double acc = 0.0;
        for (const auto &p : peaks) {
            const double z = (freq[i] - p.center) / sigma;
            acc += p.weight * std::exp(-0.5 * z * z);
        }
        s.amp[i] = acc * norm;
    }
    s.meta = "synthetic: |alpha| = " + std::to_string(std::abs(alpha));
    s.validate();
    return s;
}

}  // namespace snailkit::dispersive

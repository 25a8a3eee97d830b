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
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "snailkit/circuit.hpp"
#include "snailkit/dispersive.hpp"
#include "snailkit/dynamics.hpp"
#include "snailkit/least_squares.hpp"
#include "snailkit/mode_solver.hpp"
#include "snailkit/units.hpp"

// Fit pipelines built on fit::least_squares. Every pipeline reports its
// parameters in SI / angular units regardless of the internal scaling used
// to keep the optimizer well conditioned.
namespace snailkit::estimation {

using fit::FitResult;
using fit::Matrix;
using fit::Vector;

namespace detail {

// Rescales internal parameters p_int = p_si / unit to SI in place.
inline void to_si(FitResult &r, const std::vector<double> &unit) {
    for (int j = 0; j < r.params.size(); ++j) {
        r.params[j] *= unit[j];
        r.std_errors[j] *= unit[j];
        for (int k = 0; k < r.params.size(); ++k) r.covariance(j, k) *= unit[j] * unit[k];
    }
}

inline Vector nan_vector(std::size_t n) {
    return Vector::Constant(static_cast<Eigen::Index>(n), std::numeric_limits<double>::quiet_NaN());
}


// Fraction of column j of `jac` that lies outside the span of the other
// columns (sine of the angle between them). Near 0: parameter j cannot be
// told apart from a combination of the others on this data.
inline double column_independence(const Matrix &jac, int j) {
    const double norm = jac.col(j).norm();
    if (!(norm > 0.0)) return 0.0;
    Matrix others(jac.rows(), jac.cols() - 1);
    for (int k = 0, c = 0; k < jac.cols(); ++k) {
        if (k != j) others.col(c++) = jac.col(k);
    }
    const Vector coef = others.colPivHouseholderQr().solve(Vector(jac.col(j)));
    return (jac.col(j) - others * coef).norm() / norm;
}

}  // namespace detail

// --- frequency vs flux --------------------------------------------------------

struct FluxPoint {
    double flux_phi0 = 0.0;
    double omega_s = 0.0;  // rad/s
    double sigma = 0.0;    // rad/s; 0 = unweighted
};

struct FluxFitOptions {
    double z_c = 58.7;  // held fixed
    int starts = 1;     // multi-start count
    int max_iterations = 500;
    std::optional<double> beta_guess;
    std::optional<double> l_j_guess;
    std::optional<double> omega_r0_guess;
};

/// Mode frequency predicted for (beta, L_J, omega_r0) at one flux.
inline double model_frequency(double beta, double l_j, double omega_r0, double z_c, double flux_phi0) {
    const circuit::SnailConfig cfg{beta, l_j, units::reduced_flux(flux_phi0)};
    const auto ex = circuit::taylor_coeffs(cfg);
    return mode::solve_mode_frequency(ex.c2, {omega_r0, z_c}, l_j);
}

namespace detail {

// L_J that puts the mode at omega at zero flux for the given beta and omega_r0.
inline double l_j_from_zero_flux(double beta, double omega, double omega_r0, double z_c) {
    const double c2 = beta + 1.0 / 3.0;
    return z_c * c2 / (omega * std::tan(0.5 * kPi * omega / omega_r0));
}

inline Vector flux_seed(const std::vector<FluxPoint> &pts, const FluxFitOptions &opt) {
    const auto [lo_it, hi_it] = std::minmax_element(
        pts.begin(), pts.end(), [](const FluxPoint &a, const FluxPoint &b) { return a.omega_s < b.omega_s; });
    const auto near = std::min_element(pts.begin(), pts.end(), [](const FluxPoint &a, const FluxPoint &b) {
        return std::abs(std::remainder(a.flux_phi0, 1.0)) < std::abs(std::remainder(b.flux_phi0, 1.0));
    });
    const double omega_r0 = opt.omega_r0_guess.value_or(1.5 * hi_it->omega_s);
    const double ratio = lo_it->omega_s / hi_it->omega_s;

    double beta = opt.beta_guess.value_or(0.1);
    if (!opt.beta_guess) {
        double best = std::numeric_limits<double>::infinity();
        for (double b = 0.01; b < 0.33; b += 0.005) {
            try {
                const double lj = l_j_from_zero_flux(b, near->omega_s, omega_r0, opt.z_c);
                const double w_lo = model_frequency(b, lj, omega_r0, opt.z_c, lo_it->flux_phi0);
                const double w_hi = model_frequency(b, lj, omega_r0, opt.z_c, hi_it->flux_phi0);
                const double miss = std::abs(w_lo / w_hi - ratio);
                if (miss < best) {
                    best = miss;
                    beta = b;
                }
            } catch (const Error &) {
            }
        }
    }
    const double l_j =
        opt.l_j_guess.value_or(l_j_from_zero_flux(beta, near->omega_s, omega_r0, opt.z_c));
    return Vector{{beta, units::to_ph(l_j), units::to_ghz(omega_r0)}};
}

}  // namespace detail

/// Fits (beta, L_J, omega_r0) to measured mode frequencies through the full
/// circuit-model and mode-solver pipeline. Z_c is held at its prior.
inline FitResult fit_flux_curve(const std::vector<FluxPoint> &pts, const FluxFitOptions &opt = {}) {
    if (pts.size() < 3) throw BadInput("flux fit needs at least 3 points");
    const bool weighted = std::all_of(pts.begin(), pts.end(), [](const FluxPoint &p) { return p.sigma > 0.0; });

    fit::Problem pr;
    pr.names = {"beta", "l_j", "omega_r0"};
    pr.absolute_sigma = weighted;
    pr.residual = [pts, z_c = opt.z_c, weighted](const Vector &p) {
        Vector r(static_cast<Eigen::Index>(pts.size()));
        try {
            for (std::size_t i = 0; i < pts.size(); ++i) {
                const double w = model_frequency(p[0], units::from_ph(p[1]), units::from_ghz(p[2]), z_c,
                                                 pts[i].flux_phi0);
                const double d = units::to_ghz(w) - units::to_ghz(pts[i].omega_s);
                r[static_cast<Eigen::Index>(i)] = weighted ? d / units::to_ghz(pts[i].sigma) : d;
            }
        } catch (const Error &) {
            return detail::nan_vector(pts.size());
        }
        return r;
    };

    const Vector seed = detail::flux_seed(pts, opt);
    std::vector<Vector> starts{seed};
    for (int s = 1; s < opt.starts; ++s) {
        // Deterministic spread around the seed.
        const double f = 1.0 + 0.15 * ((s % 2) ? 1.0 : -1.0) * ((s + 1) / 2);
        Vector v = seed;
        v[0] = std::clamp(seed[0] * f, 0.005, 0.45);
        v[2] = seed[2] * (1.0 + 0.05 * ((s % 3) - 1));
        v[1] = units::to_ph(detail::l_j_from_zero_flux(v[0], units::from_ghz(seed[2] / 1.5), units::from_ghz(v[2]),
                                                       opt.z_c));
        if (v.allFinite() && v[1] > 0.0) starts.push_back(v);
    }
    fit::FitOptions fo;
    fo.scale = {0.1, 100.0, 1.0};
    fo.max_iterations = opt.max_iterations;
    FitResult r = fit::multi_start(pr, starts, fo);

    double lo = pts.front().flux_phi0;
    double hi = lo;
    for (const auto &p : pts) {
        lo = std::min(lo, p.flux_phi0);
        hi = std::max(hi, p.flux_phi0);
    }
    if (pts.size() < 5 || hi - lo < 0.3) {
        r.note("fewer than 5 points or flux span below 0.3 flux quanta; parameters weakly constrained");
    }
    r.note("Z_c held at " + std::to_string(opt.z_c) + " ohm");
    detail::to_si(r, {1.0, 1e-12, kTwoPi * 1e9});
    return r;
}

// --- photon-number-split spectrum ---------------------------------------------

struct PeakEstimate {
    int n = 0;
    double center = 0.0;  // rad/s
    double width = 0.0;   // Gaussian standard deviation, rad/s
    double weight = 0.0;  // area under the peak
    double center_stderr = 0.0;
    bool low_confidence = false;
    std::string flag;  // reason when low_confidence
};

struct PeakOptions {
    double spacing_hint = 0.0;    // expected comb spacing, rad/s
    double linewidth_fwhm = 0.0;  // expected line FWHM, rad/s; 0 = unknown
    double snr_threshold = 5.0;
    double relative_floor = 1e-3;    // of the tallest peak, for noise-free data
    double broadening_limit = 1.1;   // width / expected width that flags a blend
};

namespace detail {

inline double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
}

}  // namespace detail

/// Locates the comb peaks of a qubit spectrum.
///
/// Local maxima above max(baseline + snr * noise, floor) seed the search and
/// are thinned to one per half spacing. Each seed gets a Gaussian-plus-offset
/// fit over a window of one spacing. Peaks come back in descending frequency
/// with n = 0 for the highest (the empty-resonator line). A fitted width
/// broader than the expected linewidth, a failed window fit, or a gap larger
/// than 1.5 spacings marks the peak low-confidence instead of merging or
/// dropping it.
inline std::vector<PeakEstimate> extract_peaks(const dispersive::Spectrum &s, const PeakOptions &opt) {
    s.validate();
    if (!(opt.spacing_hint > 0.0)) throw BadInput("spacing hint must be positive");
    const std::size_t m = s.freq.size();
    if (m < 5) throw NoPeaksFound("spectrum too short");

    const double baseline = detail::median(s.amp);
    std::vector<double> dev(m);
    for (std::size_t i = 0; i < m; ++i) dev[i] = std::abs(s.amp[i] - baseline);
    const double noise = detail::median(dev) / 0.6744897501960817;
    const double top = *std::max_element(s.amp.begin(), s.amp.end()) - baseline;
    const double threshold = baseline + std::max(opt.snr_threshold * noise, opt.relative_floor * top);

    std::vector<std::size_t> seeds;
    for (std::size_t i = 1; i + 1 < m; ++i) {
        if (s.amp[i] > threshold && s.amp[i] > s.amp[i - 1] && s.amp[i] >= s.amp[i + 1]) seeds.push_back(i);
    }
    std::sort(seeds.begin(), seeds.end(), [&](std::size_t a, std::size_t b) { return s.amp[a] > s.amp[b]; });
    std::vector<std::size_t> kept;
    for (std::size_t i : seeds) {
        const bool close = std::any_of(kept.begin(), kept.end(), [&](std::size_t k) {
            return std::abs(s.freq[i] - s.freq[k]) < 0.5 * opt.spacing_hint;
        });
        if (!close) kept.push_back(i);
    }
    if (kept.empty()) throw NoPeaksFound("no local maximum above the noise threshold");

    const double hint = opt.spacing_hint;
    const double expected_sigma =
        opt.linewidth_fwhm > 0.0 ? dispersive::sigma_from_fwhm(opt.linewidth_fwhm) : hint / 10.0;

    std::vector<PeakEstimate> peaks;
    for (std::size_t seed : kept) {
        const double c0 = s.freq[seed];
        std::vector<double> x;
        std::vector<double> y;
        for (std::size_t i = 0; i < m; ++i) {
            if (std::abs(s.freq[i] - c0) <= 0.5 * hint) {
                x.push_back((s.freq[i] - c0) / hint);
                y.push_back(s.amp[i]);
            }
        }
        PeakEstimate pe;
        pe.center = c0;
        pe.width = expected_sigma;
        if (x.size() < 5) {
            pe.low_confidence = true;
            pe.flag = "too few samples in window";
            peaks.push_back(pe);
            continue;
        }
        const auto gauss = [](double xi, const Vector &p) {
            const double z = (xi - p[1]) / p[2];
            return p[0] * std::exp(-0.5 * z * z) + p[3];
        };
        // Window in units of (spacing, seed height) so tolerances are scale free.
        const double height = std::max(s.amp[seed] - baseline, 1e-300);
        for (double &v : y) v /= height;
        const auto pr = fit::curve_problem(gauss, x, y, {}, {"amplitude", "center", "sigma", "offset"});
        fit::FitOptions fo;
        fo.scale = {1.0, 0.01, expected_sigma / hint, 1.0};
        const Vector p0{{1.0, 0.0, 0.1, baseline / height}};
        const FitResult r = fit::least_squares(pr, p0, fo);

        const double width = std::abs(r.params[2]) * hint;
        pe.center = c0 + r.params[1] * hint;
        pe.width = width;
        pe.weight = r.params[0] * height * width * std::sqrt(kTwoPi);
        pe.center_stderr = r.std_errors[1] * hint;
        if (!r.converged || std::abs(r.params[1]) > 0.5 || !(r.params[0] > 0.0)) {
            pe.low_confidence = true;
            pe.flag = "window fit failed";
        } else if (opt.linewidth_fwhm > 0.0 && width > opt.broadening_limit * expected_sigma) {
            pe.low_confidence = true;
            pe.flag = "broadened beyond linewidth; possible unresolved blend";
        }
        peaks.push_back(pe);
    }

    std::sort(peaks.begin(), peaks.end(),
              [](const PeakEstimate &a, const PeakEstimate &b) { return a.center > b.center; });
    for (std::size_t i = 0; i < peaks.size(); ++i) {
        peaks[i].n = static_cast<int>(i);
        if (i > 0 && peaks[i - 1].center - peaks[i].center > 1.5 * hint && !peaks[i].low_confidence) {
            peaks[i].low_confidence = true;
            peaks[i].flag = "gap before peak; photon index may be shifted";
        }
    }
    return peaks;
}

struct ChiCombOptions {
    bool weight_by_center_error = true;
};

/// Residual model for the spacing regression chi(n) = chi0 + chi'(n-1)/2 in
/// MHz, with its analytic Jacobian.
struct ChiCombModel {
    std::vector<int> n;
    std::vector<double> spacing_mhz;
    std::vector<double> sigma_mhz;  // empty = unweighted

    Vector residual(const Vector &p) const {
        Vector r(static_cast<Eigen::Index>(n.size()));
        for (std::size_t i = 0; i < n.size(); ++i) {
            const double d = p[0] + p[1] * (n[i] - 1) / 2.0 - spacing_mhz[i];
            r[static_cast<Eigen::Index>(i)] = sigma_mhz.empty() ? d : d / sigma_mhz[i];
        }
        return r;
    }
    Matrix jacobian(const Vector &) const {
        Matrix j(static_cast<Eigen::Index>(n.size()), 2);
        for (std::size_t i = 0; i < n.size(); ++i) {
            const double w = sigma_mhz.empty() ? 1.0 : 1.0 / sigma_mhz[i];
            j(static_cast<Eigen::Index>(i), 0) = w;
            j(static_cast<Eigen::Index>(i), 1) = w * (n[i] - 1) / 2.0;
        }
        return j;
    }
};

inline ChiCombModel chi_comb_model(std::vector<PeakEstimate> peaks, const ChiCombOptions &opt = {}) {
    if (peaks.size() < 3) throw InsufficientPeaks("need at least 3 peaks, got " + std::to_string(peaks.size()));
    std::sort(peaks.begin(), peaks.end(),
              [](const PeakEstimate &a, const PeakEstimate &b) { return a.center > b.center; });
    const bool weighted = opt.weight_by_center_error &&
                          std::all_of(peaks.begin(), peaks.end(),
                                      [](const PeakEstimate &p) { return p.center_stderr > 0.0; });
    ChiCombModel m;
    for (std::size_t i = 1; i < peaks.size(); ++i) {
        m.n.push_back(static_cast<int>(i));
        m.spacing_mhz.push_back(units::to_mhz(peaks[i - 1].center - peaks[i].center));
        if (weighted) {
            m.sigma_mhz.push_back(units::to_mhz(std::hypot(peaks[i - 1].center_stderr, peaks[i].center_stderr)));
        }
    }
    return m;
}

/// Regresses the per-photon spacings on chi(n) = chi0 + chi'(n-1)/2.
/// Input order does not matter; peaks are re-sorted by descending frequency.
inline FitResult fit_chi_comb(const std::vector<PeakEstimate> &peaks, const ChiCombOptions &opt = {}) {
    const ChiCombModel model = chi_comb_model(peaks, opt);
    fit::Problem pr;
    pr.names = {"chi0", "chi_prime"};
    pr.absolute_sigma = !model.sigma_mhz.empty();
    pr.residual = [model](const Vector &p) { return model.residual(p); };
    pr.jacobian = [model](const Vector &p) { return model.jacobian(p); };
    const Vector p0{{model.spacing_mhz.front(), 0.0}};
    fit::FitOptions fo;
    fo.scale = {1.0, 0.1};
    FitResult r = fit::least_squares(pr, p0, fo);
    detail::to_si(r, {kTwoPi * 1e6, kTwoPi * 1e6});
    return r;
}

/// Fits peak weights to s * Poisson(n; mean). Returns (mean, scale).
inline FitResult fit_poisson_envelope(const std::vector<PeakEstimate> &peaks) {
    if (peaks.size() < 2) throw InsufficientPeaks("need at least 2 peaks for an envelope");
    std::vector<double> x;
    std::vector<double> y;
    double total = 0.0;
    double first = 0.0;
    for (const auto &p : peaks) {
        x.push_back(p.n);
        y.push_back(p.weight);
        total += p.weight;
        first += p.n * p.weight;
    }
    if (!(total > 0.0)) throw InsufficientPeaks("peak weights are not positive");
    const auto model = [](double n, const Vector &p) {
        return p[1] * dispersive::poisson_weight(std::max(p[0], 0.0), static_cast<int>(n));
    };
    const auto pr = fit::curve_problem(model, x, y, {}, {"mean", "scale"});
    return fit::least_squares(pr, Vector{{first / total, total}});
}

// --- resonator T1 from conditional pi-pulse traces -------------------------

/// Residual model for the conditional-pi population with |alpha0|^2 fixed;
/// parameter is T1 in microseconds.
struct DecayModel {
    std::vector<double> tau_us;
    std::vector<double> pop;
    std::vector<double> sigma;
    double alpha0 = 0.0;
    dynamics::PopulationConvention convention = dynamics::PopulationConvention::VacuumExcites;

    double value(double tau, double t1) const {
        return dynamics::conditional_pi_population(alpha0, tau, t1, convention);
    }
    Vector residual(const Vector &p) const {
        Vector r(static_cast<Eigen::Index>(tau_us.size()));
        for (std::size_t i = 0; i < tau_us.size(); ++i) {
            const double d = (p[0] > 0.0 ? value(tau_us[i], p[0]) : std::numeric_limits<double>::quiet_NaN()) - pop[i];
            r[static_cast<Eigen::Index>(i)] = sigma.empty() ? d : d / sigma[i];
        }
        return r;
    }
    Matrix jacobian(const Vector &p) const {
        Matrix j(static_cast<Eigen::Index>(tau_us.size()), 1);
        const double t1 = p[0];
        const double sign = convention == dynamics::PopulationConvention::VacuumExcites ? 1.0 : -1.0;
        for (std::size_t i = 0; i < tau_us.size(); ++i) {
            const double e = std::exp(-tau_us[i] / t1);
            const double p0 = std::exp(-alpha0 * alpha0 * e);
            const double d = -p0 * alpha0 * alpha0 * e * tau_us[i] / (t1 * t1);
            j(static_cast<Eigen::Index>(i), 0) = sign * d / (sigma.empty() ? 1.0 : sigma[i]);
        }
        return j;
    }
};

inline DecayModel decay_model(const dynamics::DecayTrace &trace, dynamics::PopulationConvention convention,
                              const std::vector<double> &sigma = {}) {
    trace.validate();
    DecayModel m;
    for (double t : trace.tau) m.tau_us.push_back(units::to_us(t));
    m.pop = trace.pop;
    m.sigma = sigma;
    m.alpha0 = trace.alpha0;
    m.convention = convention;
    return m;
}

/// Fits T1 to a conditional-pi trace with |alpha0| fixed from calibration.
inline FitResult fit_t1_trace(const dynamics::DecayTrace &trace,
                              dynamics::PopulationConvention convention =
                                  dynamics::PopulationConvention::VacuumExcites,
                              const std::vector<double> &sigma = {}) {
    trace.validate();
    if (trace.tau.size() < 2) throw BadInput("decay trace needs at least 2 points");
    const double t_last = trace.tau.back();
    const auto pos = std::find_if(trace.tau.begin(), trace.tau.end(), [](double t) { return t > 0.0; });
    const bool wide = pos != trace.tau.end() && t_last / *pos >= 100.0;
    const double t_first = trace.tau.front();
    if (trace.tau.size() < 10 && !wide) {
        throw BadInput("decay trace needs >= 10 points or two decades of delay");
    }
    if (!(trace.alpha0 > 0.0)) throw BadInput("initial amplitude must be positive");
    if (!sigma.empty() && sigma.size() != trace.tau.size()) throw BadInput("sigma length mismatch");

    const DecayModel model = decay_model(trace, convention, sigma);

    // Seed from the half-population crossing of the vacuum probability.
    const double n0 = trace.alpha0 * trace.alpha0;
    double seed = units::to_us(t_last - t_first) / 3.0;
    if (n0 > std::log(2.0)) {
        for (std::size_t i = 0; i < trace.tau.size(); ++i) {
            const double p0 = convention == dynamics::PopulationConvention::VacuumExcites ? trace.pop[i]
                                                                                           : 1.0 - trace.pop[i];
            if (p0 >= 0.5 && trace.tau[i] > 0.0) {
                seed = units::to_us(trace.tau[i]) / std::log(n0 / std::log(2.0));
                break;
            }
        }
    }
    fit::Problem pr;
    pr.names = {"t1"};
    pr.absolute_sigma = !sigma.empty();
    pr.residual = [model](const Vector &p) { return model.residual(p); };
    pr.jacobian = [model](const Vector &p) { return model.jacobian(p); };
    FitResult r = fit::least_squares(pr, Vector{{seed}});
    r.note("population convention " + std::string(dynamics::to_string(convention)) + ", |alpha0|^2 fixed at " +
           std::to_string(n0));
    detail::to_si(r, {1e-6});
    return r;
}

struct ConventionChoice {
    FitResult fit;
    dynamics::PopulationConvention convention;
    double other_residual_norm = 0.0;
};

/// Fits both population conventions and keeps the one with lower residual.
inline ConventionChoice fit_t1_auto(const dynamics::DecayTrace &trace, const std::vector<double> &sigma = {}) {
    using dynamics::PopulationConvention;
    FitResult vac = fit_t1_trace(trace, PopulationConvention::VacuumExcites, sigma);
    FitResult alt = fit_t1_trace(trace, PopulationConvention::GroundComplement, sigma);
    if (vac.residual_norm <= alt.residual_norm) {
        const double other = alt.residual_norm;
        return {std::move(vac), PopulationConvention::VacuumExcites, other};
    }
    const double other = vac.residual_norm;
    return {std::move(alt), PopulationConvention::GroundComplement, other};
}

// --- TLS saturation -------------------------------------------------------------

struct TlsPoint {
    double n_bar = 0.0;
    double t1 = 0.0;     // s
    double sigma = 0.0;  // s; 0 = unweighted
};

/// T1(n) model of the TLS law in microseconds; parameters are
/// (F delta_TLS * 1e6, n_c, delta_other * 1e6).
struct TlsModel {
    std::vector<double> n_bar;
    std::vector<double> t1_us;
    std::vector<double> sigma_us;
    double omega_c = 0.0;
    double thermal = 1.0;

    double value(double n, const Vector &p) const {
        const double q = 1e-6 * (p[0] * thermal / std::sqrt(1.0 + n / p[1]) + p[2]);
        return 1e6 / (omega_c * q);
    }
    Vector residual(const Vector &p) const {
        Vector r(static_cast<Eigen::Index>(n_bar.size()));
        for (std::size_t i = 0; i < n_bar.size(); ++i) {
            const double d = (p[1] > 0.0 ? value(n_bar[i], p) : std::numeric_limits<double>::quiet_NaN()) - t1_us[i];
            r[static_cast<Eigen::Index>(i)] = sigma_us.empty() ? d : d / sigma_us[i];
        }
        return r;
    }
    Matrix jacobian(const Vector &p) const {
        Matrix j(static_cast<Eigen::Index>(n_bar.size()), 3);
        for (std::size_t i = 0; i < n_bar.size(); ++i) {
            const double n = n_bar[i];
            const double sq = std::sqrt(1.0 + n / p[1]);
            const double t = value(n, p);
            // dT/dq_internal with q = 1e-6 * (...): dT/dq = -omega T^2 (T in s).
            const double dt_dinner = -omega_c * (t * 1e-6) * (t * 1e-6) * 1e6 * 1e-6;
            const double w = sigma_us.empty() ? 1.0 : 1.0 / sigma_us[i];
            const auto row = static_cast<Eigen::Index>(i);
            j(row, 0) = w * dt_dinner * thermal / sq;
            j(row, 1) = w * dt_dinner * p[0] * thermal * n / (2.0 * p[1] * p[1] * sq * sq * sq);
            j(row, 2) = w * dt_dinner;
        }
        return j;
    }
};

// Minimum independence of the n_c Jacobian column; below it the data only
// fixes the product F delta_TLS sqrt(n_c).
inline constexpr double kTlsIndependenceFloor = 0.02;

inline TlsModel tls_model(const std::vector<TlsPoint> &pts, double omega_c, double t_res) {
    TlsModel m;
    m.omega_c = omega_c;
    m.thermal = dynamics::tls_thermal_factor(omega_c, t_res);
    const bool weighted = std::all_of(pts.begin(), pts.end(), [](const TlsPoint &p) { return p.sigma > 0.0; });
    for (const auto &p : pts) {
        m.n_bar.push_back(p.n_bar);
        m.t1_us.push_back(units::to_us(p.t1));
        if (weighted) m.sigma_us.push_back(units::to_us(p.sigma));
    }
    return m;
}

/// Fits the TLS law to (n_bar, T1) points with the bath temperature fixed.
///
/// Seeds come from a log-spaced scan of n_c, solving the two linear loss
/// terms in 1/T1 by least squares at each candidate; `starts` runs the fit
/// from that many of the best candidates. The fit is declared
/// Unidentifiable when every point sits above 100 n_c (plateau only), when
/// the Jacobian loses rank, or when n_c carries no information.
inline FitResult fit_tls_curve(const std::vector<TlsPoint> &pts, double omega_c, double t_res, int starts = 1) {
    if (pts.size() < 4) throw BadInput("TLS fit needs at least 4 points");
    if (!(omega_c > 0.0)) throw BadInput("resonator frequency must be positive");
    for (const auto &p : pts) {
        if (!(p.n_bar >= 0.0) || !(p.t1 > 0.0)) throw BadInput("TLS points need n_bar >= 0 and T1 > 0");
    }
    const TlsModel model = tls_model(pts, omega_c, t_res);

    std::vector<std::pair<double, Vector>> candidates;
    for (double lg = -3.0; lg <= 2.0; lg += 0.125) {
        const double nc = std::pow(10.0, lg);
        Matrix a(static_cast<Eigen::Index>(pts.size()), 2);
        Vector b(static_cast<Eigen::Index>(pts.size()));
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const auto row = static_cast<Eigen::Index>(i);
            a(row, 0) = model.thermal / std::sqrt(1.0 + pts[i].n_bar / nc);
            a(row, 1) = 1.0;
            b[row] = 1e6 / (omega_c * model.t1_us[i] * 1e-6) * 1e-6;  // 1/Q in units of 1e-6
        }
        const Vector lin = a.colPivHouseholderQr().solve(b).cwiseMax(1e-3);
        const Vector cand{{lin[0], nc, lin[1]}};
        candidates.emplace_back(model.residual(cand).squaredNorm(), cand);
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const auto &x, const auto &y) { return x.first < y.first; });
    std::vector<Vector> seeds;
    for (int i = 0; i < std::max(starts, 1) && i < static_cast<int>(candidates.size()); ++i) {
        seeds.push_back(candidates[static_cast<std::size_t>(i)].second);
    }

    fit::Problem pr;
    pr.names = {"f_delta_tls", "n_c", "delta_other"};
    pr.absolute_sigma = !model.sigma_us.empty();
    pr.residual = [model](const Vector &p) { return model.residual(p); };
    pr.jacobian = [model](const Vector &p) { return model.jacobian(p); };
    fit::FitOptions fo;
    fo.scale = {1.0, seeds.front()[1], 1.0};
    FitResult r = fit::multi_start(pr, seeds, fo);

    double n_min = std::numeric_limits<double>::infinity();
    for (const auto &p : pts) n_min = std::min(n_min, p.n_bar);
    const double nc = r.params[1];
    const bool fallback = r.convention_notes.find("simplex") != std::string::npos;
    const bool plateau = !(nc > 0.0) || !std::isfinite(nc) || n_min >= 100.0 * nc;
    if (plateau || fallback ||
        detail::column_independence(model.jacobian(r.params), 1) < kTlsIndependenceFloor) {
        throw Unidentifiable("critical photon number is not constrained by the data (all n_bar >> n_c)");
    }
    r.note("bath temperature held at " + std::to_string(t_res * 1e3) + " mK");
    detail::to_si(r, {1e-6, 1.0, 1e-6});
    return r;
}

// --- drive amplitude calibration ------------------------------------------------

struct CalibrationPoint {
    double drive = 0.0;      // AWG amplitude A
    double alpha_abs = 0.0;  // |alpha|
};

struct CalibrationFit {
    FitResult fit;                   // parameter "k"
    bool has_zero_drive = false;
    double residual_alpha = 0.0;     // mean |alpha| at A = 0
    double residual_occupation = 0.0;  // |alpha|^2 at A = 0
};

/// |alpha| = k A through the origin, closed form. Points at A = 0 measure
/// the residual thermal field and are reported separately, not fitted.
inline CalibrationFit fit_amplitude_calibration(const std::vector<CalibrationPoint> &pts) {
    if (pts.size() < 2) throw BadInput("calibration needs at least 2 points");
    double sxx = 0.0;
    double sxy = 0.0;
    double zero_sum = 0.0;
    int zero_n = 0;
    int driven = 0;
    for (const auto &p : pts) {
        if (!std::isfinite(p.drive) || !std::isfinite(p.alpha_abs)) throw BadInput("non-finite calibration point");
        if (p.drive == 0.0) {
            zero_sum += p.alpha_abs;
            ++zero_n;
            continue;
        }
        sxx += p.drive * p.drive;
        sxy += p.drive * p.alpha_abs;
        ++driven;
    }
    if (driven < 1) throw BadInput("calibration needs at least one driven point");
    const double k = sxy / sxx;
    double ssr = 0.0;
    for (const auto &p : pts) {
        if (p.drive != 0.0) ssr += (p.alpha_abs - k * p.drive) * (p.alpha_abs - k * p.drive);
    }
    CalibrationFit out;
    out.fit.names = {"k"};
    out.fit.params = Vector{{k}};
    out.fit.residual_norm = ssr;
    out.fit.dof = driven - 1;
    out.fit.converged = true;
    const double var = out.fit.dof > 0 ? ssr / out.fit.dof / sxx : 0.0;
    out.fit.covariance = Matrix::Constant(1, 1, var);
    out.fit.std_errors = Vector{{std::sqrt(var)}};
    if (out.fit.dof == 0) out.fit.note("single driven point; slope exact, no error estimate");
    if (zero_n > 0) {
        out.has_zero_drive = true;
        out.residual_alpha = zero_sum / zero_n;
        out.residual_occupation = out.residual_alpha * out.residual_alpha;
    }
    return out;
}

}  // namespace snailkit::estimation

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

#include "snailkit/estimation.hpp"

#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "snailkit/presets.hpp"
#include "snailkit/synth.hpp"
#include "snailkit/units.hpp"

namespace snailkit {
namespace {

namespace est = estimation;
namespace d = dispersive;
namespace dyn = dynamics;
namespace u = units;
using fit::Matrix;
using fit::Vector;

bool within(const fit::FitResult &r, int j, double truth, double k = 3.0) {
    return std::abs(r.params[j] - truth) <= k * r.std_errors[j];
}

// Largest relative entry of (analytic - numeric) over the analytic Jacobian.
template <class Model>
double jacobian_mismatch(const Model &m, const Vector &p) {
    const Matrix a = m.jacobian(p);
    const Matrix n = fit::numeric_jacobian([&](const Vector &q) { return m.residual(q); }, p, {});
    double worst = 0.0;
    for (int j = 0; j < a.cols(); ++j) {
        const double col = a.col(j).cwiseAbs().maxCoeff();
        worst = std::max(worst, (a.col(j) - n.col(j)).cwiseAbs().maxCoeff() / col);
    }
    return worst;
}

// --- frequency vs flux ----------------------------------------------------

const std::vector<double> kFluxGrid = synth::linspace(0.0, 0.45, 21);

TEST(FluxFit, RoundTripCoverage) {
    const auto tmpl = presets::main_snail();
    const auto geom = presets::geometry();
    int covered = 0;
    for (int seed = 0; seed < 100; ++seed) {
        const auto pts = synth::flux_points(tmpl, geom, kFluxGrid, u::from_mhz(1.0), 500 + seed);
        const auto r = est::fit_flux_curve(pts);
        ASSERT_TRUE(r.converged) << "seed " << seed << ": " << r.convention_notes;
        covered += within(r, 0, tmpl.beta) && within(r, 1, tmpl.l_j) && within(r, 2, geom.omega_r0);
    }
    EXPECT_GE(covered, 95);
}

TEST(FluxFit, RecoversMainDeviceWithinQuotedUncertainty) {
    const auto pts = synth::flux_points(presets::main_snail(), presets::geometry(), kFluxGrid, u::from_mhz(1.0), 1);
    const auto r = est::fit_flux_curve(pts);
    EXPECT_NEAR(r.param("beta"), 0.0993, 0.0005);
    EXPECT_NEAR(u::to_ph(r.param("l_j")), 629.0, 8.0);
    EXPECT_NEAR(u::to_ghz(r.param("omega_r0")), 8.87, 0.07);
}

TEST(FluxFit, NoiseFreeThreePointsAreExact) {
    const auto pts = synth::flux_points(presets::main_snail(), presets::geometry(), {0.0, 0.2, 0.4}, 0.0, 0);
    const auto r = est::fit_flux_curve(pts);
    ASSERT_TRUE(r.converged);
    EXPECT_NEAR(r.param("beta"), 0.0993, 1e-6 * 0.0993);
    EXPECT_NEAR(r.param("l_j"), 629e-12, 1e-6 * 629e-12);
    EXPECT_NEAR(r.param("omega_r0"), u::from_ghz(8.87), 1e-6 * u::from_ghz(8.87));
    EXPECT_NE(r.convention_notes.find("fewer than 5"), std::string::npos);
}

TEST(FluxFit, Deterministic) {
    const auto pts = synth::flux_points(presets::main_snail(), presets::geometry(), kFluxGrid, u::from_mhz(1.0), 9);
    const auto a = est::fit_flux_curve(pts);
    const auto b = est::fit_flux_curve(pts);
    EXPECT_EQ(a.params, b.params);
    EXPECT_EQ(a.std_errors, b.std_errors);
}

TEST(FluxFit, WeightedByPointSigma) {
    const auto pts =
        synth::flux_points(presets::main_snail(), presets::geometry(), kFluxGrid, u::from_mhz(1.0), 4, true);
    const auto r = est::fit_flux_curve(pts);
    EXPECT_NE(r.convention_notes.find("absolute sigma"), std::string::npos);
    EXPECT_TRUE(within(r, 1, 629e-12, 4.0));
}

TEST(FluxFit, MultiStartAgreesWithSingleStart) {
    const auto pts = synth::flux_points(presets::main_snail(), presets::geometry(), kFluxGrid, u::from_mhz(1.0), 2);
    est::FluxFitOptions opt;
    opt.starts = 4;
    const auto a = est::fit_flux_curve(pts);
    const auto b = est::fit_flux_curve(pts, opt);
    EXPECT_NEAR(a.param("l_j"), b.param("l_j"), 1e-6 * a.param("l_j"));
}

TEST(FluxFit, TooFewPoints) {
    const auto pts = synth::flux_points(presets::main_snail(), presets::geometry(), {0.0, 0.2}, 0.0, 0);
    EXPECT_THROW(est::fit_flux_curve(pts), BadInput);
}

// --- peaks and comb -------------------------------------------------------

const double kChi0 = u::from_mhz(3.143);
const double kChiPrime = u::from_khz(35.0);
const double kOmegaQ = u::from_ghz(5.225);
const double kGamma = u::from_khz(280.0);

d::QubitParams qubit() { return {u::from_ghz(5.222), u::from_mhz(450), u::from_mhz(53), kGamma}; }

d::Spectrum comb_spectrum(double alpha, double chi_prime, double rel_noise, std::uint64_t seed, int points = 6000) {
    const auto m = d::comb_model(kOmegaQ, kChi0, chi_prime);
    const auto grid = d::splitting_grid(alpha, m, qubit(), points);
    auto s = d::synth_number_splitting(alpha, m, qubit(), std::nullopt, grid);
    const double top = *std::max_element(s.amp.begin(), s.amp.end());
    return synth::add_noise(s, rel_noise * top, seed);
}

est::PeakOptions peak_options() {
    est::PeakOptions o;
    o.spacing_hint = kChi0;
    o.linewidth_fwhm = kGamma;
    return o;
}

TEST(ExtractPeaks, NoiseFreeCombPositions) {
    const auto peaks = est::extract_peaks(comb_spectrum(2.4, kChiPrime, 0.0, 0), peak_options());
    ASSERT_GE(peaks.size(), 9u);
    const auto truth = d::number_splitting_comb(2.4, d::comb_model(kOmegaQ, kChi0, kChiPrime));
    for (std::size_t i = 0; i < 9; ++i) {
        EXPECT_EQ(peaks[i].n, static_cast<int>(i));
        EXPECT_LT(std::abs(peaks[i].center - truth[i].center), 0.01 * kGamma) << "peak " << i;
        EXPECT_GT(peaks[i].width, 0.0);
        EXPECT_GE(peaks[i].weight, 0.0);
    }
}

TEST(ExtractPeaks, WidthAndWeightMatchSynthesis) {
    const auto peaks = est::extract_peaks(comb_spectrum(2.4, kChiPrime, 0.0, 0), peak_options());
    for (std::size_t i = 0; i < 8; ++i) {
        EXPECT_NEAR(peaks[i].width, d::sigma_from_fwhm(kGamma), 1e-3 * d::sigma_from_fwhm(kGamma));
        EXPECT_NEAR(peaks[i].weight, d::poisson_weight(5.76, static_cast<int>(i)), 1e-4);
        EXPECT_FALSE(peaks[i].low_confidence) << peaks[i].flag;
    }
}

TEST(ExtractPeaks, DescendingFrequencyOrder) {
    const auto peaks = est::extract_peaks(comb_spectrum(2.4, kChiPrime, 0.003, 5), peak_options());
    for (std::size_t i = 1; i < peaks.size(); ++i) EXPECT_LT(peaks[i].center, peaks[i - 1].center);
}

TEST(ExtractPeaks, VacuumGivesSinglePeak) {
    const auto peaks = est::extract_peaks(comb_spectrum(0.0, kChiPrime, 0.0, 0), peak_options());
    ASSERT_EQ(peaks.size(), 1u);
    EXPECT_EQ(peaks[0].n, 0);
    EXPECT_NEAR(peaks[0].center, kOmegaQ, 0.01 * kGamma);
}

TEST(ExtractPeaks, OverlappingPairIsFlagged) {
    const double sigma = d::sigma_from_fwhm(kGamma);
    const double sep = 0.5 * kGamma;
    d::Spectrum s;
    for (int i = 0; i < 4001; ++i) {
        const double w = kOmegaQ - 10 * kGamma + 20 * kGamma * i / 4000.0;
        const double z1 = (w - kOmegaQ) / sigma, z2 = (w - kOmegaQ + sep) / sigma;
        s.freq.push_back(w);
        s.amp.push_back(std::exp(-0.5 * z1 * z1) + 0.8 * std::exp(-0.5 * z2 * z2));
    }
    auto opt = peak_options();
    opt.spacing_hint = 4 * kGamma;
    const auto peaks = est::extract_peaks(s, opt);
    ASSERT_EQ(peaks.size(), 1u);
    EXPECT_TRUE(peaks[0].low_confidence);
    EXPECT_NE(peaks[0].flag.find("blend"), std::string::npos);
}

TEST(ExtractPeaks, FlatSpectrumHasNoPeaks) {
    d::Spectrum s;
    for (int i = 0; i < 100; ++i) {
        s.freq.push_back(kOmegaQ + i * 1e5);
        s.amp.push_back(1.0);
    }
    EXPECT_THROW(est::extract_peaks(s, peak_options()), NoPeaksFound);
}

TEST(ChiComb, RoundTripCoverage) {
    int chi0_ok = 0, chi_prime_ok = 0;
    for (int seed = 0; seed < 100; ++seed) {
        const auto peaks = est::extract_peaks(comb_spectrum(2.4, kChiPrime, 0.003, 700 + seed), peak_options());
        const auto r = est::fit_chi_comb(peaks);
        ASSERT_TRUE(r.converged);
        chi0_ok += within(r, 0, kChi0);
        chi_prime_ok += within(r, 1, kChiPrime);
    }
    EXPECT_GE(chi0_ok, 95);
    EXPECT_GE(chi_prime_ok, 95);
}

TEST(ChiComb, ConstantSpacingGivesZeroCorrection) {
    std::vector<est::PeakEstimate> peaks;
    for (int n = 0; n < 10; ++n) peaks.push_back({n, kOmegaQ - n * kChi0, 1e5, 0.1, 0.0, false, ""});
    const auto r = est::fit_chi_comb(peaks);
    EXPECT_NEAR(r.param("chi0"), kChi0, 1e-9 * kChi0);
    EXPECT_LT(std::abs(r.param("chi_prime")), 1e-9 * kChi0);

    const auto noisy = est::fit_chi_comb(est::extract_peaks(comb_spectrum(2.4, 0.0, 0.003, 17), peak_options()));
    EXPECT_LE(std::abs(noisy.param("chi_prime")), 2.0 * noisy.error("chi_prime"));
}

TEST(ChiComb, OrderInsensitive) {
    auto peaks = est::extract_peaks(comb_spectrum(2.4, kChiPrime, 0.003, 3), peak_options());
    const auto a = est::fit_chi_comb(peaks);
    std::reverse(peaks.begin(), peaks.end());
    const auto b = est::fit_chi_comb(peaks);
    EXPECT_EQ(a.params, b.params);
    EXPECT_EQ(a.std_errors, b.std_errors);
}

TEST(ChiComb, NeedsThreePeaks) {
    std::vector<est::PeakEstimate> peaks(2);
    peaks[0].center = 2.0;
    peaks[1].center = 1.0;
    EXPECT_THROW(est::fit_chi_comb(peaks), InsufficientPeaks);
}

TEST(ChiComb, AnalyticJacobianMatchesFiniteDifferences) {
    const auto peaks = est::extract_peaks(comb_spectrum(2.4, kChiPrime, 0.003, 3), peak_options());
    const auto r = est::fit_chi_comb(peaks);
    const Vector p{{u::to_mhz(r.params[0]), u::to_mhz(r.params[1])}};
    EXPECT_LT(jacobian_mismatch(est::chi_comb_model(peaks), p), 1e-5);
}

TEST(PoissonEnvelope, RecoversMeanFromExtractedPeaks) {
    const auto peaks = est::extract_peaks(comb_spectrum(2.4, kChiPrime, 0.0, 0), peak_options());
    const auto env = est::fit_poisson_envelope(peaks);
    EXPECT_NEAR(env.params[0], 5.76, 0.01);
}

// --- resonator T1 -----------------------------------------------------------

const std::vector<double> kDelays = [] {
    std::vector<double> t;
    for (double x : synth::linspace(0.0, 100.0, 51)) t.push_back(u::from_us(x));
    return t;
}();
const double kAlpha0 = std::sqrt(5.8);

TEST(T1Fit, QuotedPrecision) {
    const auto tr = synth::decay_trace(kAlpha0, 19.2e-6, kDelays, 0.01, 42);
    const auto r = est::fit_t1_trace(tr);
    ASSERT_TRUE(r.converged);
    EXPECT_NEAR(u::to_us(r.param("t1")), 19.2, 0.2);
    EXPECT_NE(r.convention_notes.find("vacuum-excites"), std::string::npos);
}

TEST(T1Fit, NoiseFreeIsExact) {
    const auto tr = synth::decay_trace(kAlpha0, 19.2e-6, kDelays, 0.0, 0);
    EXPECT_NEAR(est::fit_t1_trace(tr).param("t1"), 19.2e-6, 1e-8 * 19.2e-6);
}

TEST(T1Fit, RoundTripCoverage) {
    int covered = 0;
    for (int seed = 0; seed < 100; ++seed) {
        const auto r = est::fit_t1_trace(synth::decay_trace(kAlpha0, 19.2e-6, kDelays, 0.01, 900 + seed));
        covered += within(r, 0, 19.2e-6);
    }
    EXPECT_GE(covered, 95);
}

TEST(T1Fit, WrongConventionFitsMuchWorse) {
    const auto tr = synth::decay_trace(kAlpha0, 19.2e-6, kDelays, 0.01, 42);
    const auto right = est::fit_t1_trace(tr, dyn::PopulationConvention::VacuumExcites);
    const auto wrong = est::fit_t1_trace(tr, dyn::PopulationConvention::GroundComplement);
    EXPECT_GE(wrong.residual_norm, 10.0 * right.residual_norm);
    const auto pick = est::fit_t1_auto(tr);
    EXPECT_EQ(pick.convention, dyn::PopulationConvention::VacuumExcites);

    const auto flipped = synth::decay_trace(kAlpha0, 19.2e-6, kDelays, 0.01, 42, dyn::PopulationConvention::GroundComplement);
    EXPECT_EQ(est::fit_t1_auto(flipped).convention, dyn::PopulationConvention::GroundComplement);
}

TEST(T1Fit, AnalyticJacobianMatchesFiniteDifferences) {
    const auto tr = synth::decay_trace(kAlpha0, 19.2e-6, kDelays, 0.01, 42);
    const auto r = est::fit_t1_trace(tr);
    for (auto conv : {dyn::PopulationConvention::VacuumExcites, dyn::PopulationConvention::GroundComplement}) {
        EXPECT_LT(jacobian_mismatch(est::decay_model(tr, conv), Vector{{u::to_us(r.params[0])}}), 1e-5);
    }
}

TEST(T1Fit, ShortTraceIsRejected) {
    const auto tr = synth::decay_trace(kAlpha0, 19.2e-6, {0.0, 1e-6, 2e-6, 3e-6}, 0.0, 0);
    EXPECT_THROW(est::fit_t1_trace(tr), BadInput);
}

// --- TLS saturation ----------------------------------------------------------

const double kOmegaC = u::from_ghz(4.296);
const dyn::TlsParams kTls{4.5e-6, 0.1, 1.3e-6, 0.058};
const std::vector<double> kPhotonNumbers{0.0, 0.03, 0.1, 0.3, 1.0, 2.0, 5.8, 10.0};

TEST(TlsFit, RoundTripCoverage) {
    int covered = 0;
    for (int seed = 0; seed < 100; ++seed) {
        const auto pts = synth::tls_points(kTls, kOmegaC, kPhotonNumbers, 0.10, 300 + seed, true);
        const auto r = est::fit_tls_curve(pts, kOmegaC, kTls.t_res, 3);
        covered += within(r, 0, kTls.f_delta_tls) && within(r, 1, kTls.n_c) && within(r, 2, kTls.delta_other);
    }
    EXPECT_GE(covered, 95);
}

TEST(TlsFit, NoiseFreeRecoversQuotedConstants) {
    const auto pts = synth::tls_points(kTls, kOmegaC, kPhotonNumbers, 0.0, 0);
    const auto r = est::fit_tls_curve(pts, kOmegaC, kTls.t_res);
    ASSERT_TRUE(r.converged);
    EXPECT_NEAR(r.param("f_delta_tls"), 4.5e-6, 1e-6 * 4.5e-6);
    EXPECT_NEAR(r.param("n_c"), 0.1, 1e-6 * 0.1);
    EXPECT_NEAR(r.param("delta_other"), 1.3e-6, 1e-6 * 1.3e-6);
    EXPECT_NE(r.convention_notes.find("bath temperature held at"), std::string::npos);
}

TEST(TlsFit, PlateauOnlyIsUnidentifiable) {
    const auto pts = synth::tls_points(kTls, kOmegaC, {10.0, 20.0, 50.0, 100.0, 200.0}, 0.0, 0);
    EXPECT_THROW(est::fit_tls_curve(pts, kOmegaC, kTls.t_res), Unidentifiable);
    const auto noisy = synth::tls_points(kTls, kOmegaC, {10.0, 20.0, 50.0, 100.0, 200.0}, 0.05, 1);
    EXPECT_THROW(est::fit_tls_curve(noisy, kOmegaC, kTls.t_res), Unidentifiable);
}

TEST(TlsFit, AnalyticJacobianMatchesFiniteDifferences) {
    const auto pts = synth::tls_points(kTls, kOmegaC, kPhotonNumbers, 0.10, 7, true);
    const auto m = est::tls_model(pts, kOmegaC, kTls.t_res);
    EXPECT_LT(jacobian_mismatch(m, Vector{{4.5, 0.1, 1.3}}), 1e-5);
    EXPECT_LT(jacobian_mismatch(m, Vector{{3.0, 0.5, 2.0}}), 1e-5);
}

TEST(TlsFit, InputValidation) {
    EXPECT_THROW(est::fit_tls_curve({{0.0, 1e-6}, {1.0, 2e-6}, {2.0, 3e-6}}, kOmegaC, 0.058), BadInput);
    EXPECT_THROW(est::fit_tls_curve({{0.0, 1e-6}, {1.0, 2e-6}, {2.0, 3e-6}, {3.0, -1.0}}, kOmegaC, 0.058), BadInput);
}

TEST(TlsFit, Deterministic) {
    const auto pts = synth::tls_points(kTls, kOmegaC, kPhotonNumbers, 0.10, 11, true);
    const auto a = est::fit_tls_curve(pts, kOmegaC, kTls.t_res, 2);
    const auto b = est::fit_tls_curve(pts, kOmegaC, kTls.t_res, 2);
    EXPECT_EQ(a.params, b.params);
}

// --- drive calibration -------------------------------------------------------

TEST(Calibration, SlopeAndResidualOccupation) {
    std::vector<est::CalibrationPoint> pts{{0.0, 0.16}, {0.05, 0.41}, {0.1, 0.79}, {0.2, 1.62}, {0.3, 2.38}};
    const auto c = est::fit_amplitude_calibration(pts);
    EXPECT_NEAR(c.fit.param("k"), 8.0, 0.1);
    ASSERT_TRUE(c.has_zero_drive);
    EXPECT_NEAR(c.residual_occupation, 0.0256, 1e-12);
    EXPECT_GE(c.residual_occupation, 0.025);
    EXPECT_LE(c.residual_occupation, 0.03);
}

TEST(Calibration, TwoExactPoints) {
    const auto c = est::fit_amplitude_calibration({{0.1, 0.8}, {0.25, 2.0}});
    EXPECT_NEAR(c.fit.param("k"), 8.0, 1e-14);
    EXPECT_FALSE(c.has_zero_drive);
}

TEST(Calibration, InputValidation) {
    EXPECT_THROW(est::fit_amplitude_calibration({{0.1, 0.8}}), BadInput);
    EXPECT_THROW(est::fit_amplitude_calibration({{0.0, 0.1}, {0.0, 0.2}}), BadInput);
}

}  // namespace
}  // namespace snailkit

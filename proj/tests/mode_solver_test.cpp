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

#include "snailkit/mode_solver.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "snailkit/presets.hpp"
#include "snailkit/units.hpp"
#include "test_support.hpp"

namespace snailkit {
namespace {

using mode::ResonatorGeometry;
namespace u = units;

const ResonatorGeometry kGeom = presets::geometry();
constexpr double kLj = 629e-12;

// Frequency-equation residual written out independently of the solver.
double frequency_residual(double omega, double c2, const ResonatorGeometry &g, double l_j) {
    return omega * std::tan(kPi / 2 * omega / g.omega_r0) - g.z_c * c2 / l_j;
}

TEST(SolveModeFrequency, SmallRightSideGivesSmallFrequency) {
    const double w = mode::solve_mode_frequency(1e-9, kGeom, kLj);
    EXPECT_GT(w, 0.0);
    EXPECT_LT(w, 1e-3 * kGeom.omega_r0);
}

TEST(SolveModeFrequency, LargeRightSideApproachesBareResonance) {
    const double w = mode::solve_mode_frequency(1e3, kGeom, kLj);
    EXPECT_LT(w, kGeom.omega_r0);
    EXPECT_GT(w, 0.999 * kGeom.omega_r0);
}

TEST(SolveModeFrequency, RejectsNonPositiveInputs) {
    EXPECT_THROW(mode::solve_mode_frequency(0.0, kGeom, kLj), InvalidBracket);
    EXPECT_THROW(mode::solve_mode_frequency(0.4, kGeom, -1.0), InvalidBracket);
    EXPECT_THROW(mode::solve_mode_frequency(0.4, {0.0, 58.7}, kLj), InvalidBracket);
    EXPECT_THROW(mode::solve_mode_frequency(0.4, {kGeom.omega_r0, 0.0}, kLj), InvalidBracket);
}

TEST(SolveModeFrequency, ResidualHasExactlyOneSignChange) {
    for (double c2 = 0.05; c2 <= 1.0 + 1e-12; c2 += 0.05) {
        int changes = 0;
        const int cells = 10000;
        double prev = frequency_residual(1e-12 * kGeom.omega_r0, c2, kGeom, kLj);
        for (int i = 1; i < cells; ++i) {
            const double cur = frequency_residual(kGeom.omega_r0 * i / cells, c2, kGeom, kLj);
            if ((prev < 0.0) != (cur < 0.0)) ++changes;
            prev = cur;
        }
        EXPECT_EQ(changes, 1) << "c2=" << c2;
    }
}

TEST(SolveModeFrequency, RootResidualIsTiny) {
    for (double c2 = 0.05; c2 <= 1.0 + 1e-12; c2 += 0.01) {
        const double w = mode::solve_mode_frequency(c2, kGeom, kLj);
        ASSERT_GT(w, 0.0);
        ASSERT_LT(w, kGeom.omega_r0);
        const double rhs = kGeom.z_c * c2 / kLj;
        EXPECT_LT(std::abs(frequency_residual(w, c2, kGeom, kLj)) / rhs, 1e-10) << "c2=" << c2;
    }
}

TEST(SolveModeFrequency, MatchesMeasuredFrequenciesOfMainDevice) {
    const auto tmpl = presets::main_snail();
    const double f0 = u::to_ghz(mode::solve_mode_at_flux(tmpl, kGeom, 0.0).solution.omega_s);
    const double f1 = u::to_ghz(mode::solve_mode_at_flux(tmpl, kGeom, presets::kOperatingFlux).solution.omega_s);
    EXPECT_NEAR(f0, 5.14, 0.02 * 5.14);
    EXPECT_NEAR(f1, 4.31, 0.02 * 4.31);
}

TEST(ZeroPointPhase, DecreasesWithStifferSnail) {
    const double w = u::from_ghz(5.0);
    EXPECT_GT(mode::zero_point_phase(w, 0.43, kGeom, kLj), mode::zero_point_phase(w, 0.60, kGeom, kLj));
}

TEST(ZeroPointPhase, GrowsWithJunctionInductance) {
    const double w = u::from_ghz(5.0);
    EXPECT_GT(mode::zero_point_phase(w, 0.43, kGeom, 2 * kLj), mode::zero_point_phase(w, 0.43, kGeom, kLj));
}

TEST(ZeroPointPhase, CalibrationConstantReproducesCubicAnchor) {
    const double k = mode::calibrate_phase_scale(presets::main_snail(), kGeom, presets::kOperatingFlux,
                                                 u::from_mhz(presets::kG3AnchorMhz));
    EXPECT_NEAR(k, mode::kPhaseCalibration, 1e-12);
}

TEST(ZeroPointPhase, MatchesBackSolveFromCubicAnchor) {
    const auto p = mode::solve_mode_at_flux(presets::main_snail(), kGeom, presets::kOperatingFlux);
    const double ej = josephson_energy(kLj) / constants().hbar;
    const double back = std::cbrt(6.0 * u::from_mhz(presets::kG3AnchorMhz) / (ej * p.expansion.c3));
    EXPECT_NEAR(p.solution.phi_zpf, back, 1e-9 * back);
}

TEST(NonlinearCouplings, CubicVanishesAtZeroFlux) {
    EXPECT_EQ(mode::solve_mode_at_flux(presets::main_snail(), kGeom, 0.0).solution.g3, 0.0);
}

TEST(NonlinearCouplings, FactorialConventionAgainstHandFormula) {
    const circuit::PotentialExpansion ex{0.0, 0.3, -0.07, 0.02};
    const double phi = 0.15;
    const auto [g3, g4] = mode::nonlinear_couplings(ex, 1.0, phi, kLj);
    const double ej = josephson_energy(kLj) / constants().hbar;
    EXPECT_NEAR(g3, ej * -0.07 / 6 * phi * phi * phi, 1e-9 * std::abs(g3));
    EXPECT_NEAR(g4, ej * 0.02 / 24 * std::pow(phi, 4), 1e-9 * std::abs(g4));
}

TEST(NonlinearCouplings, OperatingPointCubicAnchor) {
    const auto s = mode::solve_mode_at_flux(presets::main_snail(), kGeom, presets::kOperatingFlux).solution;
    EXPECT_NEAR(u::to_mhz(s.g3), -11.6, 1e-9);
}

TEST(NonlinearCouplings, OperatingPointQuarticMagnitude) {
    // The quartic coefficient is positive here (c4 > 0); the magnitude is
    // compared with the quoted 0.128 MHz.
    const auto s = mode::solve_mode_at_flux(presets::main_snail(), kGeom, presets::kOperatingFlux).solution;
    EXPECT_GT(s.g4, 0.0);
    EXPECT_NEAR(std::abs(u::to_mhz(s.g4)), 0.128, 0.25 * 0.128);
}

TEST(NonlinearCouplings, QuarticSignFollowsCurvatureSweep) {
    const auto tmpl = presets::main_snail();
    for (int i = 0; i < 1000; ++i) {
        const double f = -0.5 + i / 1000.0;
        const auto p = mode::solve_mode_at_flux(tmpl, kGeom, f);
        EXPECT_EQ(p.solution.g4 < 0.0, p.expansion.c4 < 0.0) << "flux " << f;
    }
}

TEST(KerrCoefficient, Reductions) {
    EXPECT_DOUBLE_EQ(mode::kerr_coefficient(0.0, 3.0, 10.0), 36.0);
    const double g3 = 2.0, w = 40.0;
    EXPECT_DOUBLE_EQ(mode::kerr_coefficient(g3, 5.0 * g3 * g3 / w, w), 0.0);
}

TEST(KerrCoefficient, StoredValueIsRecomputable) {
    const auto tmpl = presets::main_snail();
    for (int i = 0; i <= 50; ++i) {
        const auto s = mode::solve_mode_at_flux(tmpl, kGeom, -0.5 + i / 50.0).solution;
        EXPECT_EQ(s.kerr, mode::kerr_coefficient(s.g3, s.g4, s.omega_s));
    }
}

TEST(KerrFree, MainDevice) {
    const auto p = mode::find_kerr_free_flux(presets::main_snail(), kGeom);
    EXPECT_NEAR(p.flux_phi0, 0.392, 0.010);
    EXPECT_LT(std::abs(p.mode.solution.kerr), u::from_khz(1.0));
}

TEST(KerrFree, SupplementaryDevice) {
    const auto p = mode::find_kerr_free_flux(presets::waveguide_snail(), kGeom);
    EXPECT_NEAR(p.flux_phi0, 0.39, 0.01);
}

TEST(KerrFree, BracketedBySignChange) {
    const auto tmpl = presets::main_snail();
    const double star = mode::find_kerr_free_flux(tmpl, kGeom).flux_phi0;
    const double lo = mode::solve_mode_at_flux(tmpl, kGeom, star - 0.02).solution.kerr;
    const double hi = mode::solve_mode_at_flux(tmpl, kGeom, star + 0.02).solution.kerr;
    EXPECT_LT(lo * hi, 0.0);
}

TEST(KerrFree, NearlySymmetricSnailHasNoZero) {
    // Vanishing beta leaves c3 ~ 0 and c4 < 0, so K = 12 g4 stays negative.
    EXPECT_THROW(mode::find_kerr_free_flux({1e-9, kLj, 0.0}, kGeom), NoSignChange);
}

TEST(KerrFree, WindowWithoutCrossing) {
    EXPECT_THROW(mode::find_kerr_free_flux(presets::main_snail(), kGeom, {0.05, 0.3}), NoSignChange);
}

TEST(FluxSweep, FrequencyEvenInFlux) {
    const auto rows = mode::flux_sweep(presets::main_snail(), kGeom, {-0.45, 0.45, 91});
    for (int i = 0; i < 91; ++i) {
        ASSERT_TRUE(rows[i].ok);
        EXPECT_TRUE(testing::near_rel(rows[i].mode.solution.omega_s, rows[90 - i].mode.solution.omega_s, 1e-12));
    }
}

TEST(FluxSweep, FrequencyFallsTowardKerrFreePoint) {
    const auto rows = mode::flux_sweep(presets::main_snail(), kGeom, {0.0, 0.392, 200});
    for (std::size_t i = 1; i < rows.size(); ++i) {
        EXPECT_LT(rows[i].mode.solution.omega_s, rows[i - 1].mode.solution.omega_s);
    }
}

TEST(FluxSweep, BatchEqualsPointwise) {
    const auto tmpl = presets::main_snail();
    const auto rows = mode::flux_sweep(tmpl, kGeom, {0.0, 0.4, 3});
    ASSERT_EQ(rows.size(), 3u);
    for (const auto &r : rows) {
        const auto p = mode::solve_mode_at_flux(tmpl, kGeom, r.flux_phi0);
        EXPECT_EQ(r.mode.solution.omega_s, p.solution.omega_s);
        EXPECT_EQ(r.mode.solution.g3, p.solution.g3);
        EXPECT_EQ(r.mode.solution.g4, p.solution.g4);
        EXPECT_EQ(r.mode.solution.kerr, p.solution.kerr);
    }
}

TEST(FluxSweep, RowsAreFluxOrderedAndOrderIndependent) {
    const auto tmpl = presets::main_snail();
    const auto up = mode::flux_sweep(tmpl, kGeom, {-0.3, 0.3, 31});
    const auto down = mode::flux_sweep(tmpl, kGeom, {0.3, -0.3, 31});
    for (int i = 0; i < 31; ++i) {
        if (i > 0) {
            EXPECT_GT(up[i].flux_phi0, up[i - 1].flux_phi0);
        }
        EXPECT_TRUE(testing::near_rel(up[i].mode.solution.kerr, down[30 - i].mode.solution.kerr, 1e-12));
    }
}

TEST(FluxSweep, DegenerateRowsAreFlaggedNotDropped) {
    const auto rows = mode::flux_sweep({0.45, kLj, 0.0}, kGeom, {0.4, 0.5, 21});
    ASSERT_EQ(rows.size(), 21u);
    EXPECT_TRUE(rows.front().ok);
    EXPECT_FALSE(rows.back().ok);
    EXPECT_NE(rows.back().error.find("DegeneratePotential"), std::string::npos);
}

TEST(FluxSweep, RejectsGridWiderThanOnePeriod) {
    EXPECT_THROW(mode::flux_sweep(presets::main_snail(), kGeom, {-0.6, 0.6, 10}), BadInput);
    EXPECT_THROW(mode::flux_sweep(presets::main_snail(), kGeom, {0.0, 0.5, 0}), BadInput);
}

TEST(FluxSweep, ContinuousOnThousandPointGrid) {
    const auto rows = mode::flux_sweep(presets::main_snail(), kGeom, {-0.5, 0.5, 1001});
    for (std::size_t i = 1; i < rows.size(); ++i) {
        ASSERT_TRUE(rows[i].ok);
        const auto &a = rows[i - 1].mode.solution;
        const auto &b = rows[i].mode.solution;
        EXPECT_LT(std::abs(b.omega_s - a.omega_s), u::from_mhz(10.0));
        EXPECT_LT(std::abs(b.kerr - a.kerr), u::from_mhz(10.0));
    }
}

TEST(ModeSolution, FrequencyBelowBareResonance) {
    const auto rows = mode::flux_sweep(presets::main_snail(), kGeom, {-0.5, 0.5, 101});
    for (const auto &r : rows) {
        EXPECT_GT(r.mode.solution.omega_s, 0.0);
        EXPECT_LT(r.mode.solution.omega_s, kGeom.omega_r0);
        EXPECT_GT(r.mode.solution.phi_zpf, 0.0);
    }
}

}  // namespace
}  // namespace snailkit

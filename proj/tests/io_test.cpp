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

#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "snailkit/constants.hpp"
#include "snailkit/dispersive.hpp"
#include "snailkit/io/csv.hpp"
#include "snailkit/io/device_sheet.hpp"
#include "snailkit/io/report.hpp"
#include "snailkit/io/svg_plot.hpp"
#include "snailkit/units.hpp"
#include "test_support.hpp"

namespace snailkit {
namespace {

namespace u = units;
using io::DatasetKind;

io::Dataset parse(const std::string &text, DatasetKind kind) {
    std::istringstream in(text);
    return io::parse_dataset(in, kind);
}

// --- CSV ----------------------------------------------------------------------

TEST(Csv, RoundTripEveryKind) {
    testing::TempDir dir("csv");
    for (const auto &schema : io::schemas()) {
        io::Dataset ds;
        ds.kind = schema.kind;
        double seed = 0.1;
        for (auto name : schema.required) {
            ds.add(std::string(name), {seed, seed / 3.0, 1e-300 + seed * 7.123456789012345});
            seed += 1.0;
        }
        const auto path = dir.file(std::string(schema.name) + ".csv");
        io::save_dataset(path, ds);
        const auto back = io::load_dataset(path, schema.kind);
        EXPECT_EQ(back.names, ds.names);
        EXPECT_EQ(back.columns, ds.columns) << schema.name;
    }
}

TEST(Csv, ParsesThreeRowFluxSweep) {
    const auto ds = parse("phi_ext_phi0,freq_ghz\n0.0,5.088\n0.2,4.9\n0.386,4.296\n", DatasetKind::FluxSweep);
    ASSERT_EQ(ds.rows(), 3u);
    EXPECT_EQ(ds.column("freq_ghz")[2], 4.296);
    EXPECT_TRUE(ds.sigma().empty());
}

TEST(Csv, MissingColumnIsNamed) {
    try {
        parse("phi_ext_phi0,frequency\n0.0,5.0\n", DatasetKind::FluxSweep);
        FAIL() << "expected SchemaError";
    } catch (const SchemaError &e) {
        EXPECT_NE(std::string(e.what()).find("freq_ghz"), std::string::npos);
    }
}

TEST(Csv, NonNumericCellReportsRowAndColumn) {
    std::string text = "tau_us,pop\n";
    for (int i = 0; i < 6; ++i) text += std::to_string(i) + ",0.5\n";
    text += "6,abc\n";
    try {
        parse(text, DatasetKind::DecayTrace);
        FAIL() << "expected ParseError";
    } catch (const ParseError &e) {
        EXPECT_EQ(e.row(), 7);
        EXPECT_EQ(e.line(), 8);
        EXPECT_EQ(e.column(), 2);
        EXPECT_NE(std::string(e.what()).find("abc"), std::string::npos);
    }
}

TEST(Csv, RaggedRowIsAParseError) {
    EXPECT_THROW(parse("n_bar,t1_us\n0,6.7\n1,7,8\n", DatasetKind::TlsPoints), ParseError);
    EXPECT_THROW(parse("", DatasetKind::TlsPoints), ParseError);
    EXPECT_THROW(parse("n_bar,t1_us\n0,nan\n", DatasetKind::TlsPoints), ParseError);
}

TEST(Csv, SigmaColumnAndExtraColumnsSurvive) {
    const auto ds = parse("note_id,n_bar,t1_us,sigma\n1,0,6.7,0.3\n2,5.8,20,1\n", DatasetKind::TlsPoints);
    EXPECT_EQ(ds.sigma(), (std::vector<double>{0.3, 1.0}));
    std::ostringstream out;
    io::write_dataset(out, ds);
    EXPECT_EQ(out.str(), "note_id,n_bar,t1_us,sigma\n1,0,6.7,0.3\n2,5.8,20,1\n");
}

TEST(Csv, QuotedHeaderAndCrLf) {
    const auto ds = parse("\"amp_a\",\"alpha_abs\"\r\n0,0.16\r\n0.1,0.8\r\n", DatasetKind::Calibration);
    EXPECT_EQ(ds.rows(), 2u);
    EXPECT_EQ(ds.column("alpha_abs")[1], 0.8);
}

TEST(Csv, FormatDoubleIsLossless) {
    for (double v : {0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, 4.29598e9}) {
        EXPECT_EQ(std::stod(io::format_double(v)), v);
    }
}

TEST(Csv, KindNames) {
    EXPECT_EQ(io::parse_kind("spectrum"), DatasetKind::Spectrum);
    EXPECT_EQ(io::to_string(DatasetKind::DecayTrace), "decay_trace");
    EXPECT_THROW(io::parse_kind("bogus"), BadInput);
}

// --- device sheets --------------------------------------------------------------

io::DeviceSheet sheet(const std::string &text) {
    std::istringstream in(text);
    return io::parse_device_sheet(in);
}

TEST(DeviceSheet, LoadsMainDevice) {
    const auto d = io::load_device_sheet(testing::device_path("main.toml"));
    EXPECT_EQ(d.name(), "main");
    EXPECT_EQ(d.si("beta"), 0.0993);
    EXPECT_NEAR(d.si("l_j"), 629e-12, 1e-24);
    EXPECT_NEAR(d.si("omega_r0"), 2 * std::numbers::pi * 8.87e9, 1e-3);
    EXPECT_NEAR(d.si("t_res"), 0.058, 1e-15);
    EXPECT_EQ(d.field("l_j").provenance, "frequency-vs-flux fit, +-8 pH");
    EXPECT_NO_THROW(d.snail());
    EXPECT_NO_THROW(d.geometry());
    EXPECT_NO_THROW(d.tls().validate());
}

TEST(DeviceSheet, LoadsSupplementaryDevice) {
    const auto d = io::load_device_sheet(testing::device_path("supplementary.toml"));
    EXPECT_NEAR(d.si("beta"), 0.095, 1e-12);
    EXPECT_NEAR(d.si("l_j"), 600e-12, 1e-24);
}

TEST(DeviceSheet, RejectsMalformedEntries) {
    EXPECT_THROW(sheet("flavor = \"3 1\"\n"), SchemaError);
    EXPECT_THROW(sheet("l_j = \"629\"\n"), SchemaError);
    EXPECT_THROW(sheet("l_j = \"629 GHz\"\n"), SchemaError);
    EXPECT_THROW(sheet("l_j = \"629 furlong\"\n"), SchemaError);
    EXPECT_THROW(sheet("beta = \"0.1 1\"\nbeta = \"0.2 1\"\n"), ParseError);
    EXPECT_THROW(sheet("beta 0.1\n"), ParseError);
    EXPECT_THROW(sheet("beta = \"x 1\"\n"), ParseError);
}

TEST(DeviceSheet, WriteParseRoundTrip) {
    const auto d = io::load_device_sheet(testing::device_path("main.toml"));
    std::ostringstream out;
    io::write_device_sheet(out, d);
    const auto back = sheet(out.str());
    ASSERT_EQ(back.keys(), d.keys());
    for (const auto &k : d.keys()) {
        EXPECT_EQ(back.field(k).value, d.field(k).value) << k;
        EXPECT_EQ(back.field(k).unit, d.field(k).unit) << k;
        EXPECT_EQ(back.field(k).provenance, d.field(k).provenance) << k;
    }
}

TEST(DeviceSheet, SetChecksDimension) {
    io::DeviceSheet d;
    d.set("g0", 55.49, "MHz", "derived");
    EXPECT_NEAR(d.si("g0"), u::from_mhz(55.49), 1e-6);
    EXPECT_THROW(d.set("g0", 1.0, "pH"), SchemaError);
    EXPECT_THROW(d.field("chi0"), SchemaError);
}

// --- unit conversions -----------------------------------------------------------

TEST(Units, AngularSpotValues) {
    const double tau = 2 * std::numbers::pi;
    EXPECT_DOUBLE_EQ(u::from_ghz(1.0), tau * 1e9);
    EXPECT_DOUBLE_EQ(u::from_mhz(3.143), tau * 3.143e6);
    EXPECT_DOUBLE_EQ(u::from_khz(280.0), tau * 280e3);
    EXPECT_DOUBLE_EQ(u::from_hz(170.0), tau * 170.0);
    EXPECT_DOUBLE_EQ(u::to_ghz(tau * 4.296e9), 4.296);
    EXPECT_DOUBLE_EQ(u::to_mhz(tau * 912e6), 912.0);
    EXPECT_DOUBLE_EQ(u::to_khz(tau * 35e3), 35.0);
    EXPECT_DOUBLE_EQ(u::to_hz(tau * 2717.0), 2717.0);
    EXPECT_DOUBLE_EQ(u::to_mhz(u::from_ghz(5.222)), 5222.0);
    EXPECT_DOUBLE_EQ(u::to_ghz(u::from_mhz(8870.0)), 8.87);
}

TEST(Units, FluxAndScalars) {
    EXPECT_DOUBLE_EQ(u::reduced_flux(0.5), std::numbers::pi);
    EXPECT_DOUBLE_EQ(u::flux_in_phi0(u::reduced_flux(0.386)), 0.386);
    EXPECT_DOUBLE_EQ(u::to_us(u::from_us(19.2)), 19.2);
    EXPECT_DOUBLE_EQ(u::to_ph(u::from_ph(629.0)), 629.0);
    EXPECT_DOUBLE_EQ(u::to_mk(u::from_mk(58.0)), 58.0);
}

// --- plots ----------------------------------------------------------------------

io::PlotData sample_plot() {
    io::PlotData p;
    p.title = "mode frequency <vs> flux";
    p.x_label = "flux (phi0)";
    p.y_label = "frequency (GHz)";
    for (int i = 0; i < 20; ++i) {
        p.x.push_back(i * 0.02);
        p.y.push_back(5.0 - i * i * 0.002);
    }
    p.model_x = p.x;
    p.model_y = p.y;
    return p;
}

TEST(Svg, DeterministicAndEscaped) {
    const auto a = io::render_svg(sample_plot());
    EXPECT_EQ(a, io::render_svg(sample_plot()));
    EXPECT_EQ(a.rfind("<svg", 0), 0u);
    EXPECT_NE(a.find("&lt;vs&gt;"), std::string::npos);
    EXPECT_NE(a.find("</svg>"), std::string::npos);
}

TEST(Svg, PointsOnlyPlot) {
    auto p = sample_plot();
    p.model_x.clear();
    p.model_y.clear();
    const auto s = io::render_svg(p);
    EXPECT_EQ(s.find("<polyline"), std::string::npos);
    std::size_t dots = 0;
    for (auto pos = s.find("<circle"); pos != std::string::npos; pos = s.find("<circle", pos + 1)) ++dots;
    EXPECT_EQ(dots, 20u);
}

TEST(Svg, SpectrumTraceShowsCombPeaks) {
    const auto model = dispersive::comb_model(u::from_ghz(5.225), u::from_mhz(3.143), u::from_khz(35.0));
    const dispersive::QubitParams q{u::from_ghz(5.222), u::from_mhz(450), u::from_mhz(53), u::from_khz(280)};
    const auto grid = dispersive::splitting_grid(2.4, model, q, 3000);
    const auto s = dispersive::synth_number_splitting(2.4, model, q, std::nullopt, grid);
    io::PlotData p;
    for (std::size_t i = 0; i < s.freq.size(); ++i) {
        p.x.push_back(u::to_ghz(s.freq[i]));
        p.y.push_back(s.amp[i]);
    }
    p.connect_points = true;
    const auto svg = io::render_svg(p);

    // Recover the plotted polyline and count its local maxima.
    const auto start = svg.find("points=\"", svg.find("<polyline")) + 8;
    std::istringstream pts(svg.substr(start, svg.find('"', start) - start));
    std::vector<double> ys;
    std::string pair;
    while (pts >> pair) ys.push_back(std::stod(pair.substr(pair.find(',') + 1)));
    ASSERT_EQ(ys.size(), s.freq.size());
    double lowest = *std::max_element(ys.begin(), ys.end());
    double highest = *std::min_element(ys.begin(), ys.end());
    int maxima = 0;
    for (std::size_t i = 1; i + 1 < ys.size(); ++i) {
        // SVG y grows downward; require a visible height above the floor.
        if (ys[i] < ys[i - 1] && ys[i] <= ys[i + 1] && lowest - ys[i] > 0.01 * (lowest - highest)) ++maxima;
    }
    EXPECT_GE(maxima, 9);
}

// --- reports and constants ------------------------------------------------------

TEST(Report, Skeleton) {
    const auto j = io::make_report("budget");
    EXPECT_EQ(j["tool"], "snailkit");
    EXPECT_EQ(j["schema_version"], io::kReportSchemaVersion);
    EXPECT_TRUE(j["warnings"].is_array());
    EXPECT_TRUE(io::number_or_null(NAN).is_null());
    EXPECT_EQ(io::number_or_null(2.0), 2.0);
}

TEST(Report, FitParametersInDisplayUnits) {
    fit::FitResult r;
    r.names = {"t1"};
    r.params = fit::Vector{{19.2e-6}};
    r.std_errors = fit::Vector{{0.2e-6}};
    r.converged = true;
    const auto j = io::fit_to_json(r, {{"t1", "us", 1e-6}});
    EXPECT_NEAR(j["params"]["t1"]["value"].get<double>(), 19.2, 1e-12);
    EXPECT_NEAR(j["params"]["t1"]["stderr"].get<double>(), 0.2, 1e-12);
    EXPECT_EQ(j["params"]["t1"]["unit"], "us");
}

TEST(Constants, ParseOverridesAndRejects) {
    std::istringstream ok("# alternate table\nhbar = 1.0e-34\nk_b = 1.4e-23  # rounded\n");
    const auto c = parse_constants(ok, "t");
    EXPECT_EQ(c.hbar, 1.0e-34);
    EXPECT_EQ(c.k_b, 1.4e-23);
    EXPECT_EQ(c.e, PhysicalConstants{}.e);
    std::istringstream bad_key("planck = 1\n");
    EXPECT_THROW(parse_constants(bad_key, "t"), SchemaError);
    std::istringstream bad_value("hbar = -1\n");
    EXPECT_THROW(parse_constants(bad_value, "t"), ParseError);
}

TEST(Constants, DefaultsAreCodata) {
    EXPECT_NEAR(constants().flux_quantum(), 2.067833848e-15, 1e-24);
}

}  // namespace
}  // namespace snailkit

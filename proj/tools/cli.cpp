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

#include "cli.hpp"

#include <cstdint>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "snailkit/circuit.hpp"
#include "snailkit/dispersive.hpp"
#include "snailkit/dynamics.hpp"
#include "snailkit/estimation.hpp"
#include "snailkit/io/csv.hpp"
#include "snailkit/io/device_sheet.hpp"
#include "snailkit/io/report.hpp"
#include "snailkit/io/svg_plot.hpp"
#include "snailkit/mode_solver.hpp"
#include "snailkit/synth.hpp"
#include "snailkit/units.hpp"

namespace snailkit::cli {
namespace {

using io::Json;
namespace u = snailkit::units;

struct Outputs {
    std::string report;
    std::string csv;
    std::string svg;
};

// Options shared by every subcommand plus lazy access to the device sheet.
struct Context {
    std::string device_path;
    Outputs out;
    std::optional<io::DeviceSheet> sheet;

    const io::DeviceSheet &device() {
        if (!sheet) {
            if (device_path.empty()) throw BadInput("this command needs --device");
            sheet = io::load_device_sheet(device_path);
        }
        return *sheet;
    }

    /// Flag value if given, else the device field in SI, else an error.
    double pick(const std::optional<double> &flag, double flag_to_si, const char *key, const char *flag_name) {
        if (flag) return *flag * flag_to_si;
        if (!device_path.empty() && device().has(key)) return device().si(key);
        throw BadInput(std::string("give ") + flag_name + " or a device sheet with '" + key + "'");
    }
};

void add_common(CLI::App *sub, Context &ctx, bool device_required) {
    auto *dev = sub->add_option("--device", ctx.device_path, "device sheet (key = \"value unit\")");
    if (device_required) dev->required();
    sub->add_option("--report", ctx.out.report, "write the JSON report here instead of stdout");
    sub->add_option("--csv", ctx.out.csv, "write a CSV table");
    sub->add_option("--svg", ctx.out.svg, "write an SVG plot");
}

void emit(const Json &j, const Outputs &o, std::ostream &out) {
    if (o.report.empty()) {
        out << j.dump(2) << '\n';
    } else {
        io::write_json(o.report, j);
    }
}

Json device_inputs(Context &ctx) {
    Json in = Json::object();
    if (!ctx.device_path.empty()) {
        in["device"] = ctx.device_path;
        if (!ctx.device().name().empty()) in["device_name"] = ctx.device().name();
    }
    return in;
}

dynamics::PopulationConvention parse_convention(const std::string &s) {
    if (s == "vacuum-excites") return dynamics::PopulationConvention::VacuumExcites;
    if (s == "ground-complement") return dynamics::PopulationConvention::GroundComplement;
    throw BadInput("unknown convention '" + s + "'");
}

std::vector<double> ghz(const std::vector<double> &omega) {
    std::vector<double> v;
    for (double w : omega) v.push_back(u::to_ghz(w));
    return v;
}

// --- potential ------------------------------------------------------------

struct PotentialOpts {
    std::optional<double> flux;
    int points = 1001;
};

Json run_potential(Context &ctx, const PotentialOpts &o) {
    const double flux = o.flux.value_or(0.0);
    const auto cfg = ctx.device().snail().with_flux(u::reduced_flux(flux));
    if (o.points < 2) throw BadInput("--points must be at least 2");
    const auto ex = circuit::taylor_coeffs(cfg);

    std::vector<double> phi;
    std::vector<double> energy;
    for (int i = 0; i < o.points; ++i) {
        const double p = cfg.phi_ext - 3.0 * kPi + 6.0 * kPi * i / (o.points - 1);
        phi.push_back(p);
        energy.push_back(circuit::snail_potential(cfg, p));
    }
    if (!ctx.out.csv.empty()) io::save_columns(ctx.out.csv, {"phi_rad", "u_over_ej"}, {phi, energy});
    if (!ctx.out.svg.empty()) {
        io::write_svg(ctx.out.svg, {"SNAIL potential", "phase (rad)", "U / E_J", phi, energy, {}, {}, true});
    }

    Json j = io::make_report("potential");
    j["inputs"] = device_inputs(ctx);
    j["inputs"]["flux_phi0"] = flux;
    j["results"] = {{"phi_min_rad", ex.phi_min}, {"c2", ex.c2}, {"c3", ex.c3}, {"c4", ex.c4},
                    {"u_min_over_ej", circuit::snail_potential(cfg, ex.phi_min)}};
    if (cfg.beta_above_calibrated_range()) {
        j["warnings"].push_back("beta above 0.2 is outside the calibrated range");
    }
    return j;
}

// --- sweep ----------------------------------------------------------------

struct SweepOpts {
    int points = 101;
    double start = -0.5;
    double stop = 0.5;
};

Json run_sweep(Context &ctx, const SweepOpts &o) {
    const auto rows = mode::flux_sweep(ctx.device().snail(), ctx.device().geometry(), {o.start, o.stop, o.points});
    std::vector<std::vector<double>> cols(8);
    Json failed = Json::array();
    for (const auto &r : rows) {
        if (!r.ok) {
            failed.push_back({{"phi_ext_phi0", r.flux_phi0}, {"error", r.error}});
            continue;
        }
        const auto &s = r.mode.solution;
        const auto &e = r.mode.expansion;
        const double vals[8] = {r.flux_phi0, u::to_ghz(s.omega_s), e.c2, e.c3, e.c4,
                                u::to_mhz(s.g3), u::to_mhz(s.g4), u::to_mhz(s.kerr)};
        for (int k = 0; k < 8; ++k) cols[k].push_back(vals[k]);
    }
    const std::vector<std::string> names{"phi_ext_phi0", "freq_ghz", "c2", "c3", "c4", "g3_mhz", "g4_mhz", "kerr_mhz"};
    if (!ctx.out.csv.empty()) io::save_columns(ctx.out.csv, names, cols);
    if (!ctx.out.svg.empty() && !cols[0].empty()) {
        io::write_svg(ctx.out.svg, {"Mode frequency vs flux", "flux (Phi0)", "frequency (GHz)", cols[0], cols[1], {},
                                    {}, true});
    }
    Json j = io::make_report("sweep");
    j["inputs"] = device_inputs(ctx);
    j["inputs"]["points"] = o.points;
    j["inputs"]["start_phi0"] = o.start;
    j["inputs"]["stop_phi0"] = o.stop;
    j["results"] = {{"rows", o.points}, {"solved_rows", cols[0].size()}, {"failed_rows", failed}};
    if (!failed.empty()) j["warnings"].push_back(std::to_string(failed.size()) + " flux points could not be solved");
    return j;
}

// --- kerr-free ------------------------------------------------------------

struct KerrFreeOpts {
    double lo = 0.25;
    double hi = 0.5;
};

Json run_kerr_free(Context &ctx, const KerrFreeOpts &o) {
    const auto p = mode::find_kerr_free_flux(ctx.device().snail(), ctx.device().geometry(), {o.lo, o.hi});
    const auto &s = p.mode.solution;
    Json j = io::make_report("kerr-free");
    j["inputs"] = device_inputs(ctx);
    j["inputs"]["window_phi0"] = {o.lo, o.hi};
    j["results"] = {{"phi_star_phi0", p.flux_phi0},
                    {"kerr_at_star_khz", u::to_khz(s.kerr)},
                    {"freq_ghz", u::to_ghz(s.omega_s)},
                    {"g3_mhz", u::to_mhz(s.g3)},
                    {"g4_mhz", u::to_mhz(s.g4)},
                    {"phi_zpf", s.phi_zpf}};
    return j;
}

// --- flux fit -------------------------------------------------------------

struct SynthFluxOpts {
    std::uint64_t seed = 0;
    int points = 21;
    double start = 0.0;
    double stop = 0.45;
    double noise_mhz = 1.0;
    bool weighted = false;
};

Json run_synth_flux(Context &ctx, const SynthFluxOpts &o) {
    const auto pts = synth::flux_points(ctx.device().snail(), ctx.device().geometry(),
                                        synth::linspace(o.start, o.stop, o.points), u::from_mhz(o.noise_mhz), o.seed,
                                        o.weighted);
    io::Dataset ds;
    ds.kind = io::DatasetKind::FluxSweep;
    std::vector<double> f, w, s;
    for (const auto &p : pts) {
        f.push_back(p.flux_phi0);
        w.push_back(u::to_ghz(p.omega_s));
        s.push_back(u::to_ghz(p.sigma));
    }
    ds.add("phi_ext_phi0", f);
    ds.add("freq_ghz", w);
    if (o.weighted) ds.add("sigma", s);
    if (!ctx.out.csv.empty()) io::save_dataset(ctx.out.csv, ds);
    Json j = io::make_report("synth-flux");
    j["inputs"] = device_inputs(ctx);
    j["inputs"]["seed"] = o.seed;
    j["inputs"]["noise_mhz"] = o.noise_mhz;
    j["results"] = {{"points", pts.size()}};
    return j;
}

struct FitFluxOpts {
    std::string in;
    std::optional<double> z_c;
    int starts = 1;
    int max_iterations = 500;
};

Json run_fit_flux(Context &ctx, const FitFluxOpts &o) {
    const auto ds = io::load_dataset(o.in, io::DatasetKind::FluxSweep);
    const auto sigma = ds.sigma();
    std::vector<estimation::FluxPoint> pts;
    for (std::size_t i = 0; i < ds.rows(); ++i) {
        pts.push_back({ds.column("phi_ext_phi0")[i], u::from_ghz(ds.column("freq_ghz")[i]),
                       sigma.empty() ? 0.0 : u::from_ghz(sigma[i])});
    }
    estimation::FluxFitOptions fo;
    fo.z_c = o.z_c ? *o.z_c : (!ctx.device_path.empty() && ctx.device().has("z_c") ? ctx.device().si("z_c") : 58.7);
    fo.starts = o.starts;
    fo.max_iterations = o.max_iterations;
    const auto r = estimation::fit_flux_curve(pts, fo);
    r.require_converged();

    std::vector<double> mx = synth::linspace(-0.5, 0.5, 201);
    std::vector<double> my;
    std::vector<double> model_at_data;
    for (double f : mx) {
        my.push_back(u::to_ghz(estimation::model_frequency(r.params[0], r.params[1], r.params[2], fo.z_c, f)));
    }
    for (const auto &p : pts) {
        model_at_data.push_back(
            u::to_ghz(estimation::model_frequency(r.params[0], r.params[1], r.params[2], fo.z_c, p.flux_phi0)));
    }
    if (!ctx.out.csv.empty()) {
        io::save_columns(ctx.out.csv, {"phi_ext_phi0", "freq_ghz", "model_ghz"},
                         {ds.column("phi_ext_phi0"), ds.column("freq_ghz"), model_at_data});
    }
    if (!ctx.out.svg.empty()) {
        io::write_svg(ctx.out.svg, {"Frequency vs flux fit", "flux (Phi0)", "frequency (GHz)",
                                    ds.column("phi_ext_phi0"), ds.column("freq_ghz"), mx, my, false});
    }
    Json j = io::make_report("fit-flux");
    j["inputs"] = device_inputs(ctx);
    j["inputs"]["in"] = o.in;
    j["inputs"]["z_c_ohm"] = fo.z_c;
    j["inputs"]["starts"] = o.starts;
    j["fit"] = io::fit_to_json(r, {{"beta", "1", 1.0}, {"l_j", "pH", 1e-12}, {"omega_r0", "GHz", kTwoPi * 1e9}});
    j["results"] = {{"beta", r.params[0]}, {"l_j_ph", u::to_ph(r.params[1])}, {"omega_r0_ghz", u::to_ghz(r.params[2])}};
    return j;
}

// --- number splitting -----------------------------------------------------

struct SynthSplitOpts {
    std::uint64_t seed = 0;
    std::optional<double> alpha;
    double noise = 0.0;  // fraction of the tallest peak
    int points = 4000;
};

Json run_synth_splitting(Context &ctx, const SynthSplitOpts &o) {
    auto &dev = ctx.device();
    const auto qubit = dev.qubit();
    const double flux = dev.has("operating_flux") ? dev.si("operating_flux") : 0.0;
    const auto op = mode::solve_mode_at_flux(dev.snail(), dev.geometry(), flux);
    const auto predicted = dispersive::build_model(op.solution.omega_s, qubit, op.solution.g4, dev.si("chi_prime"));
    // The comb uses the measured shifts around the predicted dressed qubit line.
    const auto model = dispersive::comb_model(predicted.omega_q, dev.si("chi0"), dev.si("chi_prime"));
    const double alpha = o.alpha.value_or(dev.si("alpha"));
    const auto grid = dispersive::splitting_grid(alpha, model, qubit, o.points);
    auto spec = dispersive::synth_number_splitting(alpha, model, qubit, std::nullopt, grid);
    const double per_mhz = kTwoPi * 1e6;
    const double top = *std::max_element(spec.amp.begin(), spec.amp.end());
    spec = synth::add_noise(spec, o.noise * top, o.seed);

    io::Dataset ds;
    ds.kind = io::DatasetKind::Spectrum;
    std::vector<double> amp;
    for (double a : spec.amp) amp.push_back(a * per_mhz);
    ds.add("freq_ghz", ghz(spec.freq));
    ds.add("amp", amp);
    if (!ctx.out.csv.empty()) io::save_dataset(ctx.out.csv, ds);
    if (!ctx.out.svg.empty()) {
        io::write_svg(ctx.out.svg, {"Photon-number-split qubit spectrum", "frequency (GHz)", "density (1/MHz)",
                                    ds.column("freq_ghz"), amp, {}, {}, true});
    }

    Json peaks = Json::array();
    int above = 0;
    for (const auto &p : dispersive::number_splitting_comb(alpha, model)) {
        if (p.weight > 0.005) ++above;
        if (p.weight > 1e-4) peaks.push_back({{"n", p.n}, {"center_ghz", u::to_ghz(p.center)}, {"weight", p.weight}});
    }
    Json j = io::make_report("synth-splitting");
    j["inputs"] = device_inputs(ctx);
    j["inputs"]["seed"] = o.seed;
    j["inputs"]["alpha"] = alpha;
    j["inputs"]["noise_fraction"] = o.noise;
    j["results"] = {{"omega_q_ghz", u::to_ghz(model.omega_q)},
                    {"chi0_mhz", u::to_mhz(model.chi0)},
                    {"chi_prime_khz", u::to_khz(model.chi_prime)},
                    {"predicted_chi0_mhz", u::to_mhz(predicted.chi0)},
                    {"k_sq_khz", u::to_khz(predicted.k_sq)},
                    {"dispersive", predicted.dispersive},
                    {"peaks_above_half_percent", above},
                    {"peaks", peaks}};
    return j;
}

struct FitSplitOpts {
    std::string in;
    std::optional<double> spacing_mhz;
    std::optional<double> linewidth_khz;
    double snr = 5.0;
};

Json run_fit_splitting(Context &ctx, const FitSplitOpts &o) {
    const auto ds = io::load_dataset(o.in, io::DatasetKind::Spectrum);
    dispersive::Spectrum s;
    const double per_mhz = kTwoPi * 1e6;
    for (std::size_t i = 0; i < ds.rows(); ++i) {
        s.freq.push_back(u::from_ghz(ds.column("freq_ghz")[i]));
        s.amp.push_back(ds.column("amp")[i] / per_mhz);
    }
    estimation::PeakOptions po;
    po.spacing_hint = ctx.pick(o.spacing_mhz, kTwoPi * 1e6, "chi0", "--spacing-mhz");
    if (o.linewidth_khz) {
        po.linewidth_fwhm = u::from_khz(*o.linewidth_khz);
    } else if (!ctx.device_path.empty() && ctx.device().has("gamma_q")) {
        po.linewidth_fwhm = ctx.device().si("gamma_q");
    }
    po.snr_threshold = o.snr;
    const auto peaks = estimation::extract_peaks(s, po);
    const auto chi = estimation::fit_chi_comb(peaks);
    chi.require_converged();

    Json list = Json::array();
    std::vector<double> px, py;
    for (const auto &p : peaks) {
        list.push_back({{"n", p.n},
                        {"center_ghz", u::to_ghz(p.center)},
                        {"center_stderr_khz", u::to_khz(p.center_stderr)},
                        {"sigma_khz", u::to_khz(p.width)},
                        {"weight", p.weight},
                        {"low_confidence", p.low_confidence},
                        {"flag", p.flag}});
        px.push_back(u::to_ghz(p.center));
        py.push_back(p.weight);
    }
    if (!ctx.out.svg.empty()) {
        io::write_svg(ctx.out.svg, {"Spectrum and fitted peaks", "frequency (GHz)", "density (1/MHz)",
                                    ds.column("freq_ghz"), ds.column("amp"), {}, {}, true});
    }
    if (!ctx.out.csv.empty()) {
        std::vector<double> n, c, w;
        for (const auto &p : peaks) {
            n.push_back(p.n);
            c.push_back(u::to_ghz(p.center));
            w.push_back(p.weight);
        }
        io::save_columns(ctx.out.csv, {"n", "center_ghz", "weight"}, {n, c, w});
    }
    Json j = io::make_report("fit-splitting");
    j["inputs"] = device_inputs(ctx);
    j["inputs"]["in"] = o.in;
    j["inputs"]["spacing_mhz"] = u::to_mhz(po.spacing_hint);
    j["fit"] = io::fit_to_json(chi, {{"chi0", "MHz", kTwoPi * 1e6}, {"chi_prime", "kHz", kTwoPi * 1e3}});
    j["results"] = {{"peaks", list}, {"chi0_mhz", u::to_mhz(chi.params[0])}, {"chi_prime_khz", u::to_khz(chi.params[1])}};
    if (peaks.size() >= 2) {
        const auto env = estimation::fit_poisson_envelope(peaks);
        j["results"]["poisson_mean"] = env.params[0];
        j["results"]["poisson_mean_stderr"] = env.std_errors[0];
    }
    for (const auto &p : peaks) {
        if (p.low_confidence) j["warnings"].push_back("peak " + std::to_string(p.n) + ": " + p.flag);
    }
    return j;
}

// --- T1 -------------------------------------------------------------------

struct SynthT1Opts {
    std::uint64_t seed = 0;
    std::optional<double> n0;
    std::optional<double> t1_us;
    double noise = 0.01;
    int points = 51;
    double tau_max_us = 100.0;
    std::string convention = "vacuum-excites";
};

Json run_synth_t1(Context &ctx, const SynthT1Opts &o) {
    const double n0 = ctx.pick(o.n0, 1.0, "n0_decay", "--n0");
    const double t1 = ctx.pick(o.t1_us, 1e-6, "t1", "--t1-us");
    std::vector<double> tau;
    for (double t : synth::linspace(0.0, o.tau_max_us, o.points)) tau.push_back(u::from_us(t));
    const auto tr = synth::decay_trace(std::sqrt(n0), t1, tau, o.noise, o.seed, parse_convention(o.convention));
    io::Dataset ds;
    ds.kind = io::DatasetKind::DecayTrace;
    std::vector<double> tus;
    for (double t : tr.tau) tus.push_back(u::to_us(t));
    ds.add("tau_us", tus);
    ds.add("pop", tr.pop);
    if (!ctx.out.csv.empty()) io::save_dataset(ctx.out.csv, ds);
    Json j = io::make_report("synth-t1");
    j["inputs"] = device_inputs(ctx);
    j["inputs"]["seed"] = o.seed;
    j["inputs"]["n0"] = n0;
    j["inputs"]["t1_us"] = u::to_us(t1);
    j["inputs"]["noise"] = o.noise;
    j["inputs"]["convention"] = o.convention;
    j["results"] = {{"points", tr.tau.size()}};
    return j;
}

struct FitT1Opts {
    std::string in;
    std::optional<double> n0;
    std::optional<double> omega_c_ghz;
    std::string convention = "vacuum-excites";
};

Json run_fit_t1(Context &ctx, const FitT1Opts &o) {
    const auto ds = io::load_dataset(o.in, io::DatasetKind::DecayTrace);
    dynamics::DecayTrace tr;
    for (double t : ds.column("tau_us")) tr.tau.push_back(u::from_us(t));
    tr.pop = ds.column("pop");
    tr.alpha0 = std::sqrt(ctx.pick(o.n0, 1.0, "n0_decay", "--n0"));
    const auto both = estimation::fit_t1_auto(tr, ds.sigma());
    const auto chosen = o.convention == "auto" ? both.convention : parse_convention(o.convention);
    const auto r = chosen == both.convention ? both.fit : estimation::fit_t1_trace(tr, chosen, ds.sigma());
    r.require_converged();

    std::vector<double> mx = synth::linspace(ds.column("tau_us").front(), ds.column("tau_us").back(), 201);
    std::vector<double> my;
    for (double t : mx) my.push_back(dynamics::conditional_pi_population(tr.alpha0, u::from_us(t), r.params[0], chosen));
    if (!ctx.out.svg.empty()) {
        io::write_svg(ctx.out.svg, {"Conditional pi-pulse population", "delay (us)", "population",
                                    ds.column("tau_us"), ds.column("pop"), mx, my, false});
    }
    if (!ctx.out.csv.empty()) io::save_columns(ctx.out.csv, {"tau_us", "model_pop"}, {mx, my});
    Json j = io::make_report("fit-t1");
    j["inputs"] = device_inputs(ctx);
    j["inputs"]["in"] = o.in;
    j["inputs"]["n0"] = tr.alpha0 * tr.alpha0;
    j["inputs"]["convention"] = o.convention;
    j["fit"] = io::fit_to_json(r, {{"t1", "us", 1e-6}});
    j["results"] = {{"t1_us", u::to_us(r.params[0])},
                    {"t1_stderr_us", u::to_us(r.std_errors[0])},
                    {"convention", std::string(dynamics::to_string(chosen))},
                    {"better_convention", std::string(dynamics::to_string(both.convention))},
                    {"residual_ratio_other_over_better", both.fit.residual_norm > 0.0
                                                             ? io::number_or_null(both.other_residual_norm /
                                                                                  both.fit.residual_norm)
                                                             : Json(nullptr)}};
    if (o.omega_c_ghz || (!ctx.device_path.empty() && ctx.device().has("omega_c"))) {
        const double wc = ctx.pick(o.omega_c_ghz, kTwoPi * 1e9, "omega_c", "--omega-c-ghz");
        j["results"]["q1"] = dynamics::quality_factor(wc, r.params[0]);
    }
    if (chosen != both.convention) j["warnings"].push_back("the other population convention fits better");
    return j;
}

// --- TLS ------------------------------------------------------------------

struct SynthTlsOpts {
    std::uint64_t seed = 0;
    double noise = 0.10;
    std::vector<double> n_bar{0.0, 0.03, 0.1, 0.3, 1.0, 2.0, 5.8, 10.0};
    std::optional<double> omega_c_ghz;
};

Json run_synth_tls(Context &ctx, const SynthTlsOpts &o) {
    const auto p = ctx.device().tls();
    const double wc = ctx.pick(o.omega_c_ghz, kTwoPi * 1e9, "omega_c", "--omega-c-ghz");
    const auto pts = synth::tls_points(p, wc, o.n_bar, o.noise, o.seed, o.noise > 0.0);
    io::Dataset ds;
    ds.kind = io::DatasetKind::TlsPoints;
    std::vector<double> n, t, s;
    for (const auto &q : pts) {
        n.push_back(q.n_bar);
        t.push_back(u::to_us(q.t1));
        s.push_back(u::to_us(q.sigma));
    }
    ds.add("n_bar", n);
    ds.add("t1_us", t);
    if (o.noise > 0.0) ds.add("sigma", s);
    if (!ctx.out.csv.empty()) io::save_dataset(ctx.out.csv, ds);
    Json j = io::make_report("synth-tls");
    j["inputs"] = device_inputs(ctx);
    j["inputs"]["seed"] = o.seed;
    j["inputs"]["noise"] = o.noise;
    j["results"] = {{"points", pts.size()}};
    return j;
}

struct FitTlsOpts {
    std::string in;
    std::optional<double> omega_c_ghz;
    std::optional<double> t_res_mk;
    int starts = 1;
};

Json run_fit_tls(Context &ctx, const FitTlsOpts &o) {
    const auto ds = io::load_dataset(o.in, io::DatasetKind::TlsPoints);
    const auto sigma = ds.sigma();
    std::vector<estimation::TlsPoint> pts;
    for (std::size_t i = 0; i < ds.rows(); ++i) {
        pts.push_back({ds.column("n_bar")[i], u::from_us(ds.column("t1_us")[i]),
                       sigma.empty() ? 0.0 : u::from_us(sigma[i])});
    }
    const double wc = ctx.pick(o.omega_c_ghz, kTwoPi * 1e9, "omega_c", "--omega-c-ghz");
    const double t_res = ctx.pick(o.t_res_mk, 1e-3, "t_res", "--t-res-mk");
    const auto r = estimation::fit_tls_curve(pts, wc, t_res, o.starts);
    r.require_converged();

    const dynamics::TlsParams fitted{r.params[0], r.params[1], r.params[2], t_res};
    std::vector<double> mx, my;
    const double n_max = *std::max_element(ds.column("n_bar").begin(), ds.column("n_bar").end());
    for (double x : synth::linspace(0.0, n_max, 201)) {
        mx.push_back(x);
        my.push_back(u::to_us(dynamics::tls_t1(x, wc, fitted)));
    }
    if (!ctx.out.svg.empty()) {
        io::write_svg(ctx.out.svg, {"T1 vs photon number", "mean photon number", "T1 (us)", ds.column("n_bar"),
                                    ds.column("t1_us"), mx, my, false});
    }
    if (!ctx.out.csv.empty()) io::save_columns(ctx.out.csv, {"n_bar", "model_t1_us"}, {mx, my});
    Json j = io::make_report("fit-tls");
    j["inputs"] = device_inputs(ctx);
    j["inputs"]["in"] = o.in;
    j["inputs"]["omega_c_ghz"] = u::to_ghz(wc);
    j["inputs"]["t_res_mk"] = u::to_mk(t_res);
    j["inputs"]["starts"] = o.starts;
    j["fit"] = io::fit_to_json(r, {});
    j["results"] = {{"f_delta_tls", r.params[0]},
                    {"n_c", r.params[1]},
                    {"delta_other", r.params[2]},
                    {"t1_low_power_us", u::to_us(dynamics::tls_t1(0.0, wc, fitted))}};
    return j;
}

// --- calibration ------------------------------------------------------------

struct FitCalOpts {
    std::string in;
    std::optional<double> omega_c_ghz;
};

Json run_fit_calibration(Context &ctx, const FitCalOpts &o) {
    const auto ds = io::load_dataset(o.in, io::DatasetKind::Calibration);
    std::vector<estimation::CalibrationPoint> pts;
    for (std::size_t i = 0; i < ds.rows(); ++i) pts.push_back({ds.column("amp_a")[i], ds.column("alpha_abs")[i]});
    const auto c = estimation::fit_amplitude_calibration(pts);
    Json j = io::make_report("fit-calibration");
    j["inputs"] = device_inputs(ctx);
    j["inputs"]["in"] = o.in;
    j["fit"] = io::fit_to_json(c.fit, {});
    j["results"] = {{"k", c.fit.params[0]}, {"has_zero_drive", c.has_zero_drive}};
    if (c.has_zero_drive) {
        j["results"]["residual_alpha"] = c.residual_alpha;
        j["results"]["residual_occupation"] = c.residual_occupation;
        if (o.omega_c_ghz || (!ctx.device_path.empty() && ctx.device().has("omega_c"))) {
            const double wc = ctx.pick(o.omega_c_ghz, kTwoPi * 1e9, "omega_c", "--omega-c-ghz");
            if (c.residual_occupation > 0.0) {
                j["results"]["t_res_mk"] = u::to_mk(dynamics::thermal_temperature(c.residual_occupation, wc));
            }
        }
    }
    if (!ctx.out.svg.empty()) {
        const double a_max = *std::max_element(ds.column("amp_a").begin(), ds.column("amp_a").end());
        io::write_svg(ctx.out.svg, {"Drive calibration", "drive amplitude", "|alpha|", ds.column("amp_a"),
                                    ds.column("alpha_abs"), {0.0, a_max}, {0.0, c.fit.params[0] * a_max}, false});
    }
    return j;
}

// --- budget and coherence -------------------------------------------------

struct BudgetOpts {
    std::optional<double> g0_mhz, delta0_mhz, t1q_us, gamma_c_hz, gamma_f_hz, omega_c_ghz, delta_other, gamma_q_hz;
};

Json run_budget(Context &ctx, const BudgetOpts &o) {
    const double g0 = ctx.pick(o.g0_mhz, kTwoPi * 1e6, "g0", "--g0-mhz");
    double delta0 = 0.0;
    if (o.delta0_mhz) {
        delta0 = u::from_mhz(*o.delta0_mhz);
    } else {
        auto &dev = ctx.device();
        delta0 = dev.si("omega_q0") - dev.si("table_freq_operating");
    }
    const double t1q = ctx.pick(o.t1q_us, 1e-6, "t1_qubit", "--t1q-us");
    const double gc = u::to_hz(ctx.pick(o.gamma_c_hz, kTwoPi, "gamma_c", "--gamma-c-hz"));
    const double gf = u::to_hz(ctx.pick(o.gamma_f_hz, kTwoPi, "gamma_f", "--gamma-f-hz"));
    const double wc = ctx.pick(o.omega_c_ghz, kTwoPi * 1e9, "omega_c", "--omega-c-ghz");
    const double dother = ctx.pick(o.delta_other, 1.0, "delta_other", "--delta-other");
    const double gq_model = dynamics::qubit_loss_rate(g0, delta0, t1q);
    const auto b = dynamics::combine_losses(o.gamma_q_hz.value_or(gq_model), gc, gf, wc, dother);
    Json j = io::make_report("budget");
    j["inputs"] = device_inputs(ctx);
    j["inputs"]["g0_mhz"] = u::to_mhz(g0);
    j["inputs"]["delta0_mhz"] = u::to_mhz(delta0);
    j["inputs"]["t1_qubit_us"] = u::to_us(t1q);
    j["results"] = {{"gamma_q_model_hz", gq_model},
                    {"gamma_q_hz", b.gamma_q},
                    {"gamma_c_hz", b.gamma_c},
                    {"gamma_f_hz", b.gamma_f},
                    {"gamma_total_hz", b.gamma_total},
                    {"t_total_us", io::number_or_null(u::to_us(b.t_total))},
                    {"t_other_us", io::number_or_null(u::to_us(b.t_other))}};
    if (o.gamma_q_hz) j["warnings"].push_back("gamma_q taken from --gamma-q-hz, not from the coupling model");
    return j;
}

struct CoherenceOpts {
    std::vector<double> ts_us;
    std::optional<double> t1_us;
};

Json run_coherence(Context &ctx, const CoherenceOpts &o) {
    const double t1 = ctx.pick(o.t1_us, 1e-6, "t1_low_power", "--t1-us");
    Json rows = Json::array();
    if (!o.ts_us.empty()) {
        for (double ts : o.ts_us) {
            rows.push_back({{"t_s_us", ts}, {"t_phi_us", u::to_us(dynamics::coherence_decomposition(u::from_us(ts), t1))}});
        }
    } else {
        auto &dev = ctx.device();
        for (const char *tag : {"zero", "operating"}) {
            const std::string s(tag);
            const double ts = dev.si("table_ts_" + s);
            Json row = {{"point", s},
                        {"t_s_us", u::to_us(ts)},
                        {"t_phi_us", u::to_us(dynamics::coherence_decomposition(ts, t1))}};
            if (dev.has("table_q_" + s) && dev.has("table_freq_" + s)) {
                const double g = dynamics::decoherence_rate(dev.si("table_freq_" + s), dev.si("table_q_" + s));
                row["gamma_s_khz"] = u::to_khz(g);
            }
            rows.push_back(row);
        }
    }
    Json j = io::make_report("coherence");
    j["inputs"] = device_inputs(ctx);
    j["inputs"]["t1_us"] = u::to_us(t1);
    j["results"] = {{"rows", rows}};
    return j;
}

// --- report: full device refresh ------------------------------------------

struct ReportOpts {
    std::string out_device;
};

Json run_report(Context &ctx, const ReportOpts &o) {
    auto dev = ctx.device();
    const auto tmpl = dev.snail();
    const auto geom = dev.geometry();
    const double flux = dev.has("operating_flux") ? dev.si("operating_flux") : 0.386;
    Json res = Json::object();
    Json warnings = Json::array();

    const auto zero = mode::solve_mode_at_flux(tmpl, geom, 0.0).solution;
    const auto op = mode::solve_mode_at_flux(tmpl, geom, flux).solution;
    res["mode"] = {{"freq_zero_ghz", u::to_ghz(zero.omega_s)},
                   {"freq_operating_ghz", u::to_ghz(op.omega_s)},
                   {"operating_flux_phi0", flux},
                   {"phi_zpf", op.phi_zpf},
                   {"g3_mhz", u::to_mhz(op.g3)},
                   {"g4_mhz", u::to_mhz(op.g4)},
                   {"kerr_mhz", u::to_mhz(op.kerr)}};
    try {
        const auto star = mode::find_kerr_free_flux(tmpl, geom);
        res["mode"]["phi_star_phi0"] = star.flux_phi0;
    } catch (const NoSignChange &e) {
        warnings.push_back(e.what());
    }

    if (dev.has("omega_q0") && dev.has("alpha_q") && dev.has("g0") && dev.has("gamma_q")) {
        const auto q = dev.qubit();
        const auto m = dispersive::build_model(op.omega_s, q, op.g4, dev.has("chi_prime") ? dev.si("chi_prime") : 0.0);
        Json d = {{"delta0_mhz", u::to_mhz(m.delta0)},
                  {"omega_c_ghz", u::to_ghz(m.omega_c)},
                  {"omega_q_ghz", u::to_ghz(m.omega_q)},
                  {"chi0_mhz", u::to_mhz(m.chi0)},
                  {"k_sq_khz", u::to_khz(m.k_sq)},
                  {"dispersive", m.dispersive}};
        if (dev.has("chi0")) {
            const double g0 = dispersive::invert_for_g0(dev.si("chi0"), m.delta0, q.alpha_q);
            d["g0_from_chi0_mhz"] = u::to_mhz(g0);
            if (!dev.has("g0")) dev.set("g0", u::to_mhz(g0), "MHz", "derived from chi0, alpha_q and the pipeline detuning");
        }
        res["dispersive"] = d;
    }
    if (dev.has("thermal_n") && dev.has("omega_c")) {
        const double t = dynamics::thermal_temperature(dev.si("thermal_n"), dev.si("omega_c"));
        res["thermal"] = {{"t_res_mk", u::to_mk(t)}};
        if (!dev.has("t_res")) dev.set("t_res", u::to_mk(t), "mK", "derived from thermal_n");
    }
    if (dev.has("f_delta_tls") && dev.has("n_c") && dev.has("delta_other") && dev.has("t_res") && dev.has("omega_c")) {
        const auto p = dev.tls();
        const double wc = dev.si("omega_c");
        res["tls"] = {{"t1_zero_photons_us", u::to_us(dynamics::tls_t1(0.0, wc, p))}};
        if (dev.has("n0_decay")) res["tls"]["t1_at_n0_us"] = u::to_us(dynamics::tls_t1(dev.si("n0_decay"), wc, p));
    }
    if (dev.has("t1_low_power") && dev.has("table_ts_zero") && dev.has("table_ts_operating")) {
        const double t1 = dev.si("t1_low_power");
        res["coherence"] = {
            {"t_phi_zero_us", u::to_us(dynamics::coherence_decomposition(dev.si("table_ts_zero"), t1))},
            {"t_phi_operating_us", u::to_us(dynamics::coherence_decomposition(dev.si("table_ts_operating"), t1))}};
    }
    if (dev.has("g0") && dev.has("omega_q0") && dev.has("table_freq_operating") && dev.has("t1_qubit") &&
        dev.has("gamma_c") && dev.has("gamma_f") && dev.has("omega_c") && dev.has("delta_other")) {
        const auto b = dynamics::loss_budget(dev.si("g0"), dev.si("omega_q0") - dev.si("table_freq_operating"),
                                             dev.si("t1_qubit"), u::to_hz(dev.si("gamma_c")),
                                             u::to_hz(dev.si("gamma_f")), dev.si("omega_c"), dev.si("delta_other"));
        res["budget"] = {{"gamma_q_hz", b.gamma_q},
                         {"gamma_total_hz", b.gamma_total},
                         {"t_total_us", io::number_or_null(u::to_us(b.t_total))},
                         {"t_other_us", io::number_or_null(u::to_us(b.t_other))}};
    }
    if (!o.out_device.empty()) {
        std::ofstream out(o.out_device);
        if (!out) throw IoError("cannot write '" + o.out_device + "'");
        io::write_device_sheet(out, dev);
    }
    Json j = io::make_report("report");
    j["inputs"] = device_inputs(ctx);
    j["results"] = res;
    j["warnings"] = warnings;
    return j;
}

}  // namespace

int run_command(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    CLI::App app{"snailkit: SNAIL resonator modeling and fitting"};
    app.require_subcommand(1);
    Context ctx;
    std::map<CLI::App *, std::function<Json()>> handlers;
    const auto sub = [&](const char *name, const char *help, bool needs_device) {
        CLI::App *s = app.add_subcommand(name, help);
        add_common(s, ctx, needs_device);
        return s;
    };

    PotentialOpts pot;
    auto *s_pot = sub("potential", "dump U(phi) and its expansion at one flux", true);
    s_pot->add_option("--flux", pot.flux, "flux in Phi0 (default 0)");
    s_pot->add_option("--points", pot.points, "samples over the 6 pi window");
    handlers[s_pot] = [&] { return run_potential(ctx, pot); };

    SweepOpts sw;
    auto *s_sw = sub("sweep", "mode frequency, couplings and Kerr over a flux grid", true);
    s_sw->add_option("--points", sw.points, "grid points");
    s_sw->add_option("--start", sw.start, "first flux (Phi0)");
    s_sw->add_option("--stop", sw.stop, "last flux (Phi0)");
    handlers[s_sw] = [&] { return run_sweep(ctx, sw); };

    KerrFreeOpts kf;
    auto *s_kf = sub("kerr-free", "flux where the Kerr coefficient vanishes", true);
    s_kf->add_option("--window-lo", kf.lo, "search window start (Phi0)");
    s_kf->add_option("--window-hi", kf.hi, "search window end (Phi0)");
    handlers[s_kf] = [&] { return run_kerr_free(ctx, kf); };

    SynthFluxOpts sf;
    auto *s_sf = sub("synth-flux", "synthesize a noisy frequency-vs-flux dataset", true);
    s_sf->add_option("--seed", sf.seed, "random seed")->required();
    s_sf->add_option("--points", sf.points, "number of flux points");
    s_sf->add_option("--start", sf.start, "first flux (Phi0)");
    s_sf->add_option("--stop", sf.stop, "last flux (Phi0)");
    s_sf->add_option("--noise-mhz", sf.noise_mhz, "Gaussian frequency noise (MHz)");
    s_sf->add_flag("--with-sigma", sf.weighted, "write a sigma column");
    handlers[s_sf] = [&] { return run_synth_flux(ctx, sf); };

    FitFluxOpts ff;
    auto *s_ff = sub("fit-flux", "fit beta, L_J and omega_r0 to frequency vs flux", false);
    s_ff->add_option("--in", ff.in, "flux_sweep CSV")->required();
    s_ff->add_option("--z-c", ff.z_c, "line impedance in ohm (held fixed)");
    s_ff->add_option("--starts", ff.starts, "multi-start count")->check(CLI::PositiveNumber);
    s_ff->add_option("--max-iterations", ff.max_iterations, "iteration cap per start")->check(CLI::PositiveNumber);
    handlers[s_ff] = [&] { return run_fit_flux(ctx, ff); };

    SynthSplitOpts ss;
    auto *s_ss = sub("synth-splitting", "synthesize a photon-number-split qubit spectrum", true);
    s_ss->add_option("--seed", ss.seed, "random seed")->required();
    s_ss->add_option("--alpha", ss.alpha, "coherent amplitude |alpha|");
    s_ss->add_option("--noise", ss.noise, "noise as a fraction of the tallest peak");
    s_ss->add_option("--points", ss.points, "frequency samples");
    handlers[s_ss] = [&] { return run_synth_splitting(ctx, ss); };

    FitSplitOpts fs;
    auto *s_fs = sub("fit-splitting", "extract comb peaks and fit chi0, chi'", false);
    s_fs->add_option("--in", fs.in, "spectrum CSV")->required();
    s_fs->add_option("--spacing-mhz", fs.spacing_mhz, "expected peak spacing (MHz)");
    s_fs->add_option("--linewidth-khz", fs.linewidth_khz, "expected qubit linewidth FWHM (kHz)");
    s_fs->add_option("--snr", fs.snr, "detection threshold in noise units");
    handlers[s_fs] = [&] { return run_fit_splitting(ctx, fs); };

    SynthT1Opts st;
    auto *s_st = sub("synth-t1", "synthesize a conditional pi-pulse decay trace", false);
    s_st->add_option("--seed", st.seed, "random seed")->required();
    s_st->add_option("--n0", st.n0, "initial photon number |alpha0|^2");
    s_st->add_option("--t1-us", st.t1_us, "resonator T1 (us)");
    s_st->add_option("--noise", st.noise, "additive population noise");
    s_st->add_option("--points", st.points, "number of delays");
    s_st->add_option("--tau-max-us", st.tau_max_us, "largest delay (us)");
    s_st->add_option("--convention", st.convention, "vacuum-excites | ground-complement");
    handlers[s_st] = [&] { return run_synth_t1(ctx, st); };

    FitT1Opts ft;
    auto *s_ft = sub("fit-t1", "fit resonator T1 to a conditional pi-pulse trace", false);
    s_ft->add_option("--in", ft.in, "decay_trace CSV")->required();
    s_ft->add_option("--n0", ft.n0, "initial photon number |alpha0|^2");
    s_ft->add_option("--omega-c-ghz", ft.omega_c_ghz, "resonator frequency for Q1 (GHz)");
    s_ft->add_option("--convention", ft.convention, "vacuum-excites | ground-complement | auto");
    handlers[s_ft] = [&] { return run_fit_t1(ctx, ft); };

    SynthTlsOpts stl;
    auto *s_stl = sub("synth-tls", "synthesize T1 vs photon number", true);
    s_stl->add_option("--seed", stl.seed, "random seed")->required();
    s_stl->add_option("--noise", stl.noise, "relative T1 noise");
    s_stl->add_option("--n-bar", stl.n_bar, "photon numbers")->delimiter(',');
    s_stl->add_option("--omega-c-ghz", stl.omega_c_ghz, "resonator frequency (GHz)");
    handlers[s_stl] = [&] { return run_synth_tls(ctx, stl); };

    FitTlsOpts fl;
    auto *s_fl = sub("fit-tls", "fit the TLS saturation law to T1 vs photon number", false);
    s_fl->add_option("--in", fl.in, "tls_points CSV")->required();
    s_fl->add_option("--omega-c-ghz", fl.omega_c_ghz, "resonator frequency (GHz)");
    s_fl->add_option("--t-res-mk", fl.t_res_mk, "bath temperature (mK)");
    s_fl->add_option("--starts", fl.starts, "multi-start count")->check(CLI::PositiveNumber);
    handlers[s_fl] = [&] { return run_fit_tls(ctx, fl); };

    FitCalOpts fc;
    auto *s_fc = sub("fit-calibration", "fit |alpha| = k A and the zero-drive occupation", false);
    s_fc->add_option("--in", fc.in, "calibration CSV")->required();
    s_fc->add_option("--omega-c-ghz", fc.omega_c_ghz, "resonator frequency for the thermal temperature (GHz)");
    handlers[s_fc] = [&] { return run_fit_calibration(ctx, fc); };

    BudgetOpts bo;
    auto *s_bo = sub("budget", "non-TLS loss budget", false);
    s_bo->add_option("--g0-mhz", bo.g0_mhz, "coupling (MHz)");
    s_bo->add_option("--delta0-mhz", bo.delta0_mhz, "qubit-resonator detuning (MHz)");
    s_bo->add_option("--t1q-us", bo.t1q_us, "qubit T1 (us)");
    s_bo->add_option("--gamma-c-hz", bo.gamma_c_hz, "coupling-capacitor loss (Hz)");
    s_bo->add_option("--gamma-f-hz", bo.gamma_f_hz, "flux-line loss (Hz)");
    s_bo->add_option("--gamma-q-hz", bo.gamma_q_hz, "override the qubit loss (Hz)");
    s_bo->add_option("--omega-c-ghz", bo.omega_c_ghz, "resonator frequency (GHz)");
    s_bo->add_option("--delta-other", bo.delta_other, "non-TLS loss tangent");
    handlers[s_bo] = [&] { return run_budget(ctx, bo); };

    CoherenceOpts co;
    auto *s_co = sub("coherence", "pure dephasing from coherence time and T1", false);
    s_co->add_option("--ts-us", co.ts_us, "coherence times (us)")->delimiter(',');
    s_co->add_option("--t1-us", co.t1_us, "energy relaxation time (us)");
    handlers[s_co] = [&] { return run_coherence(ctx, co); };

    ReportOpts ro;
    auto *s_ro = sub("report", "evaluate every model for a device and refresh its sheet", true);
    s_ro->add_option("--out", ro.out_device, "write the refreshed device sheet here");
    handlers[s_ro] = [&] { return run_report(ctx, ro); };

    std::vector<const char *> argv{"snailkit"};
    for (const auto &a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp &) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp &) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError &e) {
        err << "snailkit: " << e.what() << '\n';
        return kExitValidation;
    }

    for (auto &[s, run] : handlers) {
        if (!s->parsed()) continue;
        try {
            emit(run(), ctx.out, out);
            return kExitOk;
        } catch (const Error &e) {
            err << "snailkit " << s->get_name() << ": " << e.what() << '\n';
            return e.is_validation() ? kExitValidation : kExitNoConvergence;
        } catch (const std::exception &e) {
            err << "snailkit " << s->get_name() << ": " << e.what() << '\n';
            return kExitValidation;
        }
    }
    err << "snailkit: no subcommand\n";
    return kExitValidation;
}

}  // namespace snailkit::cli

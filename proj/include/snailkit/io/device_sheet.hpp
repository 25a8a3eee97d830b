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

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "snailkit/circuit.hpp"
#include "snailkit/constants.hpp"
#include "snailkit/dispersive.hpp"
#include "snailkit/dynamics.hpp"
#include "snailkit/errors.hpp"
#include "snailkit/io/csv.hpp"
#include "snailkit/mode_solver.hpp"

// Device parameter sheet: one `key = "value unit"  # provenance` per line.
// The syntax is a flat subset of TOML. Every value carries a unit tag ("1"
// for dimensionless numbers) and unknown keys are rejected.
namespace snailkit::io {

enum class Dimension { Dimensionless, Frequency, Inductance, Impedance, Time, Temperature, Flux };

struct UnitDef {
    std::string_view tag;
    Dimension dim;
    double to_si;  // frequency units convert to rad/s
};

inline const std::vector<UnitDef> &unit_table() {
    static const std::vector<UnitDef> table{
        {"1", Dimension::Dimensionless, 1.0},
        {"Hz", Dimension::Frequency, kTwoPi},
        {"kHz", Dimension::Frequency, kTwoPi * 1e3},
        {"MHz", Dimension::Frequency, kTwoPi * 1e6},
        {"GHz", Dimension::Frequency, kTwoPi * 1e9},
        {"H", Dimension::Inductance, 1.0},
        {"nH", Dimension::Inductance, 1e-9},
        {"pH", Dimension::Inductance, 1e-12},
        {"ohm", Dimension::Impedance, 1.0},
        {"s", Dimension::Time, 1.0},
        {"ms", Dimension::Time, 1e-3},
        {"us", Dimension::Time, 1e-6},
        {"ns", Dimension::Time, 1e-9},
        {"K", Dimension::Temperature, 1.0},
        {"mK", Dimension::Temperature, 1e-3},
        {"phi0", Dimension::Flux, 1.0},
    };
    return table;
}

struct FieldSpec {
    std::string_view key;
    Dimension dim;
    std::string_view meaning;
};

inline const std::vector<FieldSpec> &device_fields() {
    static const std::vector<FieldSpec> table{
        {"name", Dimension::Dimensionless, "device label (text)"},
        {"beta", Dimension::Dimensionless, "small/big junction energy ratio"},
        {"l_j", Dimension::Inductance, "big-junction inductance"},
        {"omega_r0", Dimension::Frequency, "bare line resonance"},
        {"z_c", Dimension::Impedance, "line impedance"},
        {"operating_flux", Dimension::Flux, "operating bias"},
        {"omega_q0", Dimension::Frequency, "bare qubit frequency"},
        {"alpha_q", Dimension::Frequency, "qubit anharmonicity"},
        {"g0", Dimension::Frequency, "qubit-resonator coupling"},
        {"gamma_q", Dimension::Frequency, "qubit linewidth (FWHM)"},
        {"chi0", Dimension::Frequency, "measured dispersive shift"},
        {"chi_prime", Dimension::Frequency, "measured shift correction"},
        {"alpha", Dimension::Dimensionless, "coherent amplitude for splitting"},
        {"omega_c", Dimension::Frequency, "dressed resonator frequency"},
        {"n0_decay", Dimension::Dimensionless, "initial photon number of decay runs"},
        {"t1", Dimension::Time, "resonator T1 at n0_decay"},
        {"t1_low_power", Dimension::Time, "resonator T1 at low power"},
        {"f_delta_tls", Dimension::Dimensionless, "TLS filling factor times loss tangent"},
        {"n_c", Dimension::Dimensionless, "TLS critical photon number"},
        {"delta_other", Dimension::Dimensionless, "non-TLS loss tangent"},
        {"thermal_n", Dimension::Dimensionless, "residual thermal occupation"},
        {"t_res", Dimension::Temperature, "resonator bath temperature"},
        {"drive_slope", Dimension::Dimensionless, "|alpha| per unit drive amplitude"},
        {"t1_qubit", Dimension::Time, "qubit T1"},
        {"gamma_c", Dimension::Frequency, "coupling-capacitor loss rate"},
        {"gamma_f", Dimension::Frequency, "flux-line loss rate"},
        {"table_freq_zero", Dimension::Frequency, "resonator frequency at zero flux"},
        {"table_q_zero", Dimension::Dimensionless, "internal Q at zero flux"},
        {"table_ts_zero", Dimension::Time, "coherence time at zero flux"},
        {"table_freq_operating", Dimension::Frequency, "resonator frequency at the operating flux"},
        {"table_q_operating", Dimension::Dimensionless, "internal Q at the operating flux"},
        {"table_ts_operating", Dimension::Time, "coherence time at the operating flux"},
    };
    return table;
}

inline const FieldSpec &field_spec(std::string_view key) {
    for (const auto &f : device_fields()) {
        if (f.key == key) return f;
    }
    throw SchemaError("unknown device field '" + std::string(key) + "'");
}

inline const UnitDef &unit_def(std::string_view tag) {
    for (const auto &u : unit_table()) {
        if (u.tag == tag) return u;
    }
    throw SchemaError("unknown unit '" + std::string(tag) + "'");
}

struct DeviceField {
    double value = 0.0;  // in `unit`
    std::string unit;
    std::string provenance;
    std::string text;  // only for the free-text `name` field

    double si() const { return value * unit_def(unit).to_si; }
};

class DeviceSheet {
   public:
    bool has(std::string_view key) const { return fields_.count(std::string(key)) > 0; }

    const DeviceField &field(std::string_view key) const {
        const auto it = fields_.find(std::string(key));
        if (it == fields_.end()) throw SchemaError("device sheet has no '" + std::string(key) + "'");
        return it->second;
    }

    /// Value in SI units (angular for frequencies).
    double si(std::string_view key) const { return field(key).si(); }

    void set(std::string_view key, double value, std::string_view unit, std::string provenance = {}) {
        const auto &spec = field_spec(key);
        if (unit_def(unit).dim != spec.dim) {
            throw SchemaError("unit '" + std::string(unit) + "' does not fit field '" + std::string(key) + "'");
        }
        fields_[std::string(key)] = {value, std::string(unit), std::move(provenance), {}};
    }

    void set_name(std::string name) { fields_["name"] = {0.0, "1", {}, std::move(name)}; }
    std::string name() const { return has("name") ? field("name").text : std::string{}; }

    /// Keys in canonical order.
    std::vector<std::string> keys() const {
        std::vector<std::string> out;
        for (const auto &f : device_fields()) {
            if (has(f.key)) out.emplace_back(f.key);
        }
        return out;
    }

    circuit::SnailConfig snail() const {
        circuit::SnailConfig c{si("beta"), si("l_j"), 0.0};
        c.validate();
        return c;
    }
    mode::ResonatorGeometry geometry() const {
        mode::ResonatorGeometry g{si("omega_r0"), si("z_c")};
        g.validate();
        return g;
    }
    dispersive::QubitParams qubit() const {
        return {si("omega_q0"), si("alpha_q"), si("g0"), si("gamma_q")};
    }
    dynamics::TlsParams tls() const {
        return {si("f_delta_tls"), si("n_c"), si("delta_other"), si("t_res")};
    }

   private:
    std::map<std::string, DeviceField> fields_;
};

namespace detail {

inline std::string strip(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

}  // namespace detail

inline DeviceSheet parse_device_sheet(std::istream &in, const std::string &origin = "<device>") {
    DeviceSheet sheet;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto fail = [&](const std::string &what, std::size_t col) {
            throw ParseError(origin + ": " + what, line_no, line_no, static_cast<int>(col) + 1);
        };
        // Split off the trailing comment, honoring quotes.
        std::string body;
        std::string comment;
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') quoted = !quoted;
            if (line[i] == '#' && !quoted) {
                comment = detail::strip(std::string_view(line).substr(i + 1));
                break;
            }
            body += line[i];
        }
        if (quoted) fail("unterminated string", line.size());
        if (detail::strip(body).empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) fail("expected key = \"value unit\"", 0);
        const std::string key = detail::strip(std::string_view(body).substr(0, eq));
        std::string rhs = detail::strip(std::string_view(body).substr(eq + 1));
        if (key.empty()) fail("empty key", 0);
        if (sheet.has(key)) fail("duplicate key '" + key + "'", 0);
        if (rhs.size() >= 2 && rhs.front() == '"' && rhs.back() == '"') rhs = rhs.substr(1, rhs.size() - 2);

        field_spec(key);  // rejects unknown keys
        if (key == "name") {
            sheet.set_name(rhs);
            continue;
        }
        std::istringstream parts(rhs);
        std::string number;
        std::string unit;
        std::string extra;
        parts >> number >> unit >> extra;
        double value = 0.0;
        if (!detail::parse_double(number, value)) fail("bad number '" + number + "' for '" + key + "'", eq + 1);
        if (unit.empty()) throw SchemaError(origin + ": field '" + key + "' has no unit tag");
        if (!extra.empty()) fail("trailing text after unit for '" + key + "'", eq + 1);
        sheet.set(key, value, unit, comment);
    }
    return sheet;
}

inline DeviceSheet load_device_sheet(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    return parse_device_sheet(in, path);
}

inline void write_device_sheet(std::ostream &out, const DeviceSheet &sheet) {
    for (const auto &key : sheet.keys()) {
        const auto &f = sheet.field(key);
        std::string rhs = key == "name" ? f.text : format_double(f.value) + " " + f.unit;
        out << key << " = \"" << rhs << "\"";
        if (!f.provenance.empty()) out << "  # " << f.provenance;
        out << '\n';
    }
}

}  // namespace snailkit::io

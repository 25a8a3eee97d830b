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
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include "snailkit/errors.hpp"

namespace snailkit {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// CODATA 2018 (SI exact where defined), 10 significant figures.
struct PhysicalConstants {
    double hbar = 1.054571817e-34;  // J s
    double h = 6.62607015e-34;      // J s
    double e = 1.602176634e-19;     // C
    double k_b = 1.380649e-23;      // J / K

    double flux_quantum() const { return h / (2.0 * e); }
    /// Reduced flux quantum hbar/2e in Wb.
    double reduced_flux_quantum() const { return hbar / (2.0 * e); }
};

/// Parses a flat `key = value` table (keys: hbar, h, e, k_b; `#` comments).
inline PhysicalConstants parse_constants(std::istream &in, const std::string &origin) {
    PhysicalConstants c;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        auto eq = line.find('=');
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (eq == std::string::npos) {
            throw ParseError(origin + ": expected key = value", line_no, line_no, 1);
        }
        std::istringstream ks(line.substr(0, eq));
        std::string key;
        ks >> key;
        std::istringstream vs(line.substr(eq + 1));
        double value = 0.0;
        if (!(vs >> value) || !std::isfinite(value) || value <= 0.0) {
            throw ParseError(origin + ": bad value for '" + key + "'", line_no, line_no,
                             static_cast<int>(eq) + 2);
        }
        if (key == "hbar") {
            c.hbar = value;
        } else if (key == "h") {
            c.h = value;
        } else if (key == "e") {
            c.e = value;
        } else if (key == "k_b") {
            c.k_b = value;
        } else {
            throw SchemaError(origin + ": unknown constant '" + key + "'");
        }
    }
    return c;
}

namespace detail {
inline PhysicalConstants load_active_constants() {
    const char *path = std::getenv("SNAILKIT_CONSTANTS");
    if (path == nullptr || *path == '\0') return PhysicalConstants{};
    std::ifstream in(path);
    if (!in) throw IoError(std::string("cannot open SNAILKIT_CONSTANTS file ") + path);
    return parse_constants(in, path);
}
}  // namespace detail

/// Process-wide constants table. Defaults to CODATA; the SNAILKIT_CONSTANTS
/// environment variable may name an alternate table, read once on first use.
inline const PhysicalConstants &constants() {
    static const PhysicalConstants table = detail::load_active_constants();
    return table;
}

/// Josephson energy E_J = (hbar/2e)^2 / L_J in joules.
inline double josephson_energy(double inductance_h) {
    const double phi = constants().reduced_flux_quantum();
    return phi * phi / inductance_h;
}

}  // namespace snailkit

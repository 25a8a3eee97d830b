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
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "snailkit/errors.hpp"
#include "snailkit/least_squares.hpp"

// JSON run reports. Layout is fixed by schemas/report.schema.json.
namespace snailkit::io {

using Json = nlohmann::ordered_json;

inline constexpr int kReportSchemaVersion = 1;

inline Json make_report(std::string_view command) {
    Json j;
    j["tool"] = "snailkit";
    j["schema_version"] = kReportSchemaVersion;
    j["command"] = std::string(command);
    j["inputs"] = Json::object();
    j["results"] = Json::object();
    j["warnings"] = Json::array();
    return j;
}

/// Display unit for one fitted parameter: value_out = value_si / scale.
struct ParamUnit {
    std::string name;
    std::string unit;
    double scale = 1.0;
};

inline Json fit_to_json(const fit::FitResult &r, const std::vector<ParamUnit> &units) {
    Json params = Json::object();
    for (std::size_t i = 0; i < r.names.size(); ++i) {
        ParamUnit u{r.names[i], "1", 1.0};
        for (const auto &cand : units) {
            if (cand.name == r.names[i]) u = cand;
        }
        const auto k = static_cast<Eigen::Index>(i);
        params[r.names[i]] = {
            {"value", r.params[k] / u.scale},
            {"stderr", r.std_errors[k] / u.scale},
            {"unit", u.unit},
        };
    }
    Json j;
    j["params"] = params;
    j["residual_norm"] = r.residual_norm;
    j["iterations"] = r.iterations;
    j["dof"] = r.dof;
    j["converged"] = r.converged;
    j["notes"] = r.convention_notes;
    return j;
}

/// Numbers that JSON cannot carry become null.
inline Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline void write_json(const std::string &path, const Json &j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace snailkit::io

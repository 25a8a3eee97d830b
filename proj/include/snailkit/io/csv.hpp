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
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "snailkit/errors.hpp"

// Tabular data files: comma separated, header row first, '.' decimals.
// Fields may be double-quoted; quoted fields cannot span lines.
namespace snailkit::io {

enum class DatasetKind { FluxSweep, Spectrum, DecayTrace, TlsPoints, Calibration };

struct KindSchema {
    DatasetKind kind;
    std::string_view name;
    std::vector<std::string_view> required;
};

inline const std::vector<KindSchema> &schemas() {
    static const std::vector<KindSchema> table{
        {DatasetKind::FluxSweep, "flux_sweep", {"phi_ext_phi0", "freq_ghz"}},
        {DatasetKind::Spectrum, "spectrum", {"freq_ghz", "amp"}},
        {DatasetKind::DecayTrace, "decay_trace", {"tau_us", "pop"}},
        {DatasetKind::TlsPoints, "tls_points", {"n_bar", "t1_us"}},
        {DatasetKind::Calibration, "calibration", {"amp_a", "alpha_abs"}},
    };
    return table;
}

inline const KindSchema &schema_of(DatasetKind kind) {
    for (const auto &s : schemas()) {
        if (s.kind == kind) return s;
    }
    throw BadInput("unknown dataset kind");
}

inline std::string_view to_string(DatasetKind kind) { return schema_of(kind).name; }

inline DatasetKind parse_kind(std::string_view name) {
    for (const auto &s : schemas()) {
        if (s.name == name) return s.kind;
    }
    throw BadInput("unknown dataset kind '" + std::string(name) + "'");
}

inline constexpr std::string_view kSigmaColumn = "sigma";

/// Named numeric columns in file order. Extra columns beyond the schema are
/// kept so a load/save cycle is lossless.
struct Dataset {
    DatasetKind kind = DatasetKind::FluxSweep;
    std::vector<std::string> names;
    std::vector<std::vector<double>> columns;

    std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }

    bool has(std::string_view name) const {
        return std::find(names.begin(), names.end(), name) != names.end();
    }

    const std::vector<double> &column(std::string_view name) const {
        const auto it = std::find(names.begin(), names.end(), name);
        if (it == names.end()) throw SchemaError("no column named '" + std::string(name) + "'");
        return columns[static_cast<std::size_t>(it - names.begin())];
    }

    /// Per-point uncertainty, empty when the file has no sigma column.
    std::vector<double> sigma() const { return has(kSigmaColumn) ? column(kSigmaColumn) : std::vector<double>{}; }

    void add(std::string name, std::vector<double> values) {
        if (has(name)) throw SchemaError("duplicate column '" + name + "'");
        names.push_back(std::move(name));
        columns.push_back(std::move(values));
    }

    void validate() const {
        std::string missing;
        for (auto req : schema_of(kind).required) {
            if (!has(req)) missing += (missing.empty() ? "" : ", ") + std::string(req);
        }
        if (!missing.empty()) {
            throw SchemaError(std::string(to_string(kind)) + " dataset is missing column(s): " + missing);
        }
        for (const auto &c : columns) {
            if (c.size() != rows()) throw SchemaError("columns differ in length");
        }
    }
};

namespace detail {

// Splits one CSV record; reports the 1-based column of a malformed field.
inline std::vector<std::string> split_record(std::string_view line, int line_no, int row) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    bool was_quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"' && field.empty() && !was_quoted) {
            quoted = was_quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(field));
            field.clear();
            was_quoted = false;
        } else {
            field += c;
        }
    }
    if (quoted) throw ParseError("unterminated quoted field", line_no, row, static_cast<int>(out.size()) + 1);
    out.push_back(std::move(field));
    return out;
}

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

inline bool parse_double(std::string_view text, double &out) {
    text = trim(text);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    if (text.empty()) return false;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc() && ptr == text.data() + text.size() && std::isfinite(out);
}

}  // namespace detail

inline Dataset parse_dataset(std::istream &in, DatasetKind kind, const std::string &origin = "<input>") {
    Dataset ds;
    ds.kind = kind;
    std::string line;
    int line_no = 0;
    int row = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
        if (detail::trim(line).empty()) continue;
        if (!header) {
            for (auto &name : detail::split_record(line, line_no, 0)) {
                const auto n = std::string(detail::trim(name));
                if (n.empty()) throw ParseError(origin + ": empty column name", line_no, 0, 1);
                ds.add(n, {});
            }
            header = true;
            continue;
        }
        ++row;
        const auto fields = detail::split_record(line, line_no, row);
        if (fields.size() != ds.names.size()) {
            throw ParseError(origin + ": expected " + std::to_string(ds.names.size()) + " fields, got " +
                                 std::to_string(fields.size()),
                             line_no, row, static_cast<int>(std::min(fields.size(), ds.names.size())) + 1);
        }
        for (std::size_t j = 0; j < fields.size(); ++j) {
            double v = 0.0;
            if (!detail::parse_double(fields[j], v)) {
                throw ParseError(origin + ": non-numeric value '" + fields[j] + "' in column '" + ds.names[j] + "'",
                                 line_no, row, static_cast<int>(j) + 1);
            }
            ds.columns[j].push_back(v);
        }
    }
    if (!header) throw ParseError(origin + ": missing header row", std::max(line_no, 1), 0, 1);
    ds.validate();
    return ds;
}

inline Dataset load_dataset(const std::string &path, DatasetKind kind) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    return parse_dataset(in, kind, path);
}

/// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw IoError("number formatting failed");
    return {buf, ptr};
}

/// Writes a header and rows; names may need quoting, numbers never do.
inline void write_columns(std::ostream &out, const std::vector<std::string> &names,
                          const std::vector<std::vector<double>> &columns) {
    if (names.size() != columns.size()) throw BadInput("column names and data differ in count");
    const std::size_t rows = columns.empty() ? 0 : columns.front().size();
    for (const auto &c : columns) {
        if (c.size() != rows) throw BadInput("columns differ in length");
    }
    for (std::size_t j = 0; j < names.size(); ++j) {
        const auto &n = names[j];
        if (j) out << ',';
        if (n.find_first_of(",\"") != std::string::npos) {
            out << '"';
            for (char c : n) out << (c == '"' ? "\"\"" : std::string(1, c));
            out << '"';
        } else {
            out << n;
        }
    }
    out << '\n';
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < columns.size(); ++j) {
            if (j) out << ',';
            out << format_double(columns[j][i]);
        }
        out << '\n';
    }
}

inline void write_dataset(std::ostream &out, const Dataset &ds) {
    ds.validate();
    write_columns(out, ds.names, ds.columns);
}

inline void save_columns(const std::string &path, const std::vector<std::string> &names,
                         const std::vector<std::vector<double>> &columns) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    write_columns(out, names, columns);
    if (!out) throw IoError("write failed for '" + path + "'");
}

inline void save_dataset(const std::string &path, const Dataset &ds) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    write_dataset(out, ds);
    if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace snailkit::io

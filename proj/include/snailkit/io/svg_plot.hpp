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
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "snailkit/errors.hpp"

// Static SVG scatter + curve plots. Fixed canvas and number formatting, so
// identical inputs give byte-identical files.
namespace snailkit::io {

struct PlotData {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<double> x;        // data points
    std::vector<double> y;
    std::vector<double> model_x;  // optional overlay curve
    std::vector<double> model_y;
    bool connect_points = false;  // draw the data as a line instead of dots
};

namespace detail {

inline std::string fmt(double v, const char *spec = "%.2f") {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

inline std::string escape_xml(const std::string &s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace detail

inline std::string render_svg(const PlotData &d) {
    if (d.x.empty() || d.x.size() != d.y.size()) throw BadInput("plot needs matching non-empty x and y");
    if (d.model_x.size() != d.model_y.size()) throw BadInput("model curve columns differ in length");

    constexpr double kW = 640.0, kH = 400.0;
    constexpr double kLeft = 70.0, kRight = 20.0, kTop = 40.0, kBottom = 50.0;
    double x0 = d.x.front(), x1 = x0, y0 = d.y.front(), y1 = y0;
    const auto grow = [&](const std::vector<double> &xs, const std::vector<double> &ys) {
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) continue;
            x0 = std::min(x0, xs[i]);
            x1 = std::max(x1, xs[i]);
            y0 = std::min(y0, ys[i]);
            y1 = std::max(y1, ys[i]);
        }
    };
    grow(d.x, d.y);
    grow(d.model_x, d.model_y);
    if (x1 == x0) x1 = x0 + 1.0;
    if (y1 == y0) y1 = y0 + 1.0;
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;

    const auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * (kW - kLeft - kRight); };
    const auto py = [&](double y) { return kH - kBottom - (y - y0) / (y1 - y0) * (kH - kTop - kBottom); };

    std::string s;
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" viewBox=\"0 0 640 400\">\n";
    s += "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
    s += "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">" +
         detail::escape_xml(d.title) + "</text>\n";
    s += "<rect x=\"70\" y=\"40\" width=\"550\" height=\"310\" fill=\"none\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double xv = x0 + (x1 - x0) * t / 4.0;
        const double yv = y0 + (y1 - y0) * t / 4.0;
        s += "<text x=\"" + detail::fmt(px(xv)) + "\" y=\"368\" text-anchor=\"middle\" font-family=\"sans-serif\" "
             "font-size=\"11\">" + detail::fmt(xv, "%.4g") + "</text>\n";
        s += "<text x=\"64\" y=\"" + detail::fmt(py(yv) + 4.0) + "\" text-anchor=\"end\" font-family=\"sans-serif\" "
             "font-size=\"11\">" + detail::fmt(yv, "%.4g") + "</text>\n";
    }
    s += "<text x=\"345\" y=\"392\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" +
         detail::escape_xml(d.x_label) + "</text>\n";
    s += "<text x=\"16\" y=\"195\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
         "transform=\"rotate(-90 16 195)\">" + detail::escape_xml(d.y_label) + "</text>\n";

    const auto polyline = [&](const std::vector<double> &xs, const std::vector<double> &ys, const char *color) {
        std::string pts;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) continue;
            if (!pts.empty()) pts += ' ';
            pts += detail::fmt(px(xs[i])) + "," + detail::fmt(py(ys[i]));
        }
        return "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"" + pts +
               "\"/>\n";
    };
    if (d.connect_points) {
        s += polyline(d.x, d.y, "#1f4e9c");
    } else {
        for (std::size_t i = 0; i < d.x.size(); ++i) {
            if (!std::isfinite(d.x[i]) || !std::isfinite(d.y[i])) continue;
            s += "<circle cx=\"" + detail::fmt(px(d.x[i])) + "\" cy=\"" + detail::fmt(py(d.y[i])) +
                 "\" r=\"2.5\" fill=\"#1f4e9c\"/>\n";
        }
    }
    if (!d.model_x.empty()) s += polyline(d.model_x, d.model_y, "#c0392b");
    s += "</svg>\n";
    return s;
}

inline void write_svg(const std::string &path, const PlotData &d) {
    const std::string text = render_svg(d);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << text;
    if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace snailkit::io

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

#include "snailkit/constants.hpp"

// Internal frequencies are angular (rad/s). Conversions to the cyclic units
// used at every I/O boundary live here and nowhere else.
namespace snailkit::units {

inline constexpr double kGiga = 1e9;
inline constexpr double kMega = 1e6;
inline constexpr double kKilo = 1e3;

constexpr double from_hz(double f) { return kTwoPi * f; }
constexpr double from_khz(double f) { return kTwoPi * f * kKilo; }
constexpr double from_mhz(double f) { return kTwoPi * f * kMega; }
constexpr double from_ghz(double f) { return kTwoPi * f * kGiga; }

constexpr double to_hz(double w) { return w / kTwoPi; }
constexpr double to_khz(double w) { return w / kTwoPi / kKilo; }
constexpr double to_mhz(double w) { return w / kTwoPi / kMega; }
constexpr double to_ghz(double w) { return w / kTwoPi / kGiga; }

/// Flux in units of the flux quantum to reduced flux phi_ext = 2 pi Phi/Phi0.
constexpr double reduced_flux(double flux_phi0) { return kTwoPi * flux_phi0; }
constexpr double flux_in_phi0(double phi_ext) { return phi_ext / kTwoPi; }

constexpr double from_us(double t) { return t * 1e-6; }
constexpr double to_us(double t) { return t * 1e6; }
constexpr double from_ph(double l) { return l * 1e-12; }
constexpr double to_ph(double l) { return l * 1e12; }
constexpr double from_mk(double t) { return t * 1e-3; }
constexpr double to_mk(double t) { return t * 1e3; }

}  // namespace snailkit::units

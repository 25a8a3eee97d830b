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

#include "snailkit/circuit.hpp"
#include "snailkit/mode_solver.hpp"
#include "snailkit/units.hpp"

// Reference devices: the qubit-coupled resonator and its waveguide-coupled
// twin. Both share the resonator geometry.
namespace snailkit::presets {

inline constexpr double kOperatingFlux = 0.386;  // flux quanta
inline constexpr double kG3AnchorMhz = -11.6;

inline circuit::SnailConfig main_snail() { return {0.0993, units::from_ph(629.0), 0.0}; }

inline circuit::SnailConfig waveguide_snail() { return {0.095, units::from_ph(600.0), 0.0}; }

inline mode::ResonatorGeometry geometry() { return {units::from_ghz(8.87), 58.7}; }

}  // namespace snailkit::presets

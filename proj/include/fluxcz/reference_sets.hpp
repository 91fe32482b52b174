#pragma once

#include <numbers>

#include "fluxcz/composite_system.hpp"

namespace fluxcz {

// Two-fluxonium + transmon-coupler circuit. Strong set: J_c = 500 MHz,
// E_J,c = 55 GHz. Weak set: J_c = 300 MHz, E_J,c = 40 GHz.
inline CompositeParams reference_set(bool strong) {
  CompositeParams p;
  p.q0 = {1.41, 0.80, 6.27, std::numbers::pi};
  p.q1 = {1.30, 0.59, 5.71, std::numbers::pi};
  p.coupler = {0.32, strong ? 55.0 : 40.0, 0.0};
  p.j_c0 = strong ? 0.500 : 0.300;
  p.j_c1 = p.j_c0;
  p.j_01 = strong ? 0.125 : 0.080;
  return p;
}

inline CompositeParams reference_set_500mhz() { return reference_set(true); }
inline CompositeParams reference_set_300mhz() { return reference_set(false); }

}  // namespace fluxcz

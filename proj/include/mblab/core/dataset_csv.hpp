#pragma once

// Transition CSV: one row per transition, mandatory header
//   episode,step,x_base,y_base,theta_base,vx_base,vy_base,omega_base,
//   x_ee,y_ee,z_ee,vx_ee,vy_ee,vz_ee,
//   u_vx_base,u_vy_base,u_omega_base,u_vx_ee,u_vy_ee,u_vz_ee
// Each row stores s_t and u_t. s_{t+1} is the state of the following row of
// the same episode; the last row of every episode is followed by a terminal
// row whose action columns are empty. Numbers use the shortest round-trip
// representation with '.' as the decimal point.

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mblab/core/types.hpp"

namespace mblab {

void write_transitions_csv(std::ostream& out, std::span<const Transition> transitions);
void write_transitions_csv(const std::string& path, std::span<const Transition> transitions);

// Throws std::runtime_error with the offending line number on malformed input.
std::vector<Transition> read_transitions_csv(std::istream& in);
std::vector<Transition> read_transitions_csv(const std::string& path);

// Locale-independent shortest round-trip formatting.
std::string format_double(double v);
double parse_double(std::string_view text);

}  // namespace mblab

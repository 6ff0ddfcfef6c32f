#pragma once

#include <span>
#include <vector>

#include "iwdg/lattice.hpp"

namespace iwdg {

inline constexpr int kSteinerTerminalCap = 8;

// Minimum total L1 length of a spanning tree on the terminals alone (Prim on
// the complete graph). 0 for a single terminal.
int mst_tree_length(std::span<const Site> terminals);

// Exact rectilinear Steiner minimal tree length: Dreyfus-Wagner over the
// Hanan grid of the terminals. Duplicate terminals are ignored.
int steiner_tree_length(std::span<const Site> terminals, int cap = kSteinerTerminalCap);

// Coordinatewise product of the distinct terminal coordinates.
std::vector<Site> hanan_grid(std::span<const Site> terminals);

struct TwoFactorCheck {
  int steiner = 0;   // l_T
  int spanning = 0;  // l'_T
  bool ok = false;   // l_T <= l'_T <= 2 l_T
};

TwoFactorCheck check_two_factor(std::span<const Site> terminals);

}  // namespace iwdg

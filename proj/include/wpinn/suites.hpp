#pragma once

// Invariant suites behind `verify`: each returns one row per measured bound.

#include <string>
#include <vector>

#include "wpinn/construct.hpp"

namespace wpinn::suites {

using Check = construct::BoundCheck;

// Finite-difference checks of parameter gradients, input derivatives, nested
// derivatives and the loss gradients, over `configs` random networks.
std::vector<Check> gradcheck(int configs = 100);

// Sphere area by quadrature and Monte Carlo, unit-norm embedding, and the
// divergence of geometry-compatible fluxes at frozen states.
std::vector<Check> geometry();

// Godunov solver: shock speed, characteristics oracle, maximum principle,
// TV and L1 contraction.
std::vector<Check> reference();

// Raw internal residual of the exact standing shock against random
// nonnegative test functions, plus a non-entropic control.
std::vector<Check> entropy_sign(int adversaries = 50, long n_int = 16384);

// construct | gradcheck | geometry | reference | entropy; throws ConfigError
// for an unknown tag.
std::vector<Check> run(const std::string& tag);

bool all_pass(const std::vector<Check>& checks);

}  // namespace wpinn::suites

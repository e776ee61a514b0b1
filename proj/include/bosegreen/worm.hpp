#pragma once

#include "bosegreen/exchange.hpp"
#include "bosegreen/model.hpp"
#include "bosegreen/potentials.hpp"

namespace bosegreen {

/// E_alpha^(k) with the last particle opened between y and x. Identical to
/// spring_energy for alpha < N; for alpha = N the y-x spring is absent and
/// the closure runs from the last stored bead of particle N.
double worm_spring_energy(const SystemSpec& spec, const BeadConfiguration& config, int alpha, int k);

/// V_G^(N) through the exchange recursion, with forces on every bead
/// including x and y.
ExchangeResult worm_potential_and_forces(const SystemSpec& spec, const BeadConfiguration& config);

/// Pair interaction U_G over the slices of the open configuration. Energy is
/// the unscaled slice sum; forces are -(1/P) grad U_G.
EnergyForces worm_interaction(const SystemSpec& spec, const BeadConfiguration& config);

}  // namespace bosegreen

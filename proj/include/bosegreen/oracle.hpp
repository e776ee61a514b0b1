#pragma once

#include "bosegreen/model.hpp"

namespace bosegreen::oracle {

/// V^(N) by direct enumeration of the 2^(N-1) ordered block decompositions of
/// 1..N. Block energies are summed from bead coordinates; no part of the
/// exchange module is used. Closed rings only; N <= 12, P <= 64.
double composition_expansion_VB(const SystemSpec& spec, const BeadConfiguration& config);

/// -(1/beta) ln[(1/N!) sum over permutations of exp(-beta E_sigma)], where
/// E_sigma links the last bead of particle l to the first bead of sigma(l).
/// N <= 5.
double permutation_sum_VB(const SystemSpec& spec, const BeadConfiguration& config);

/// Exact canonical mean energy of N ideal bosons in an isotropic
/// d-dimensional trap, in units of hbar omega, at beta_tilde = beta hbar omega.
double ideal_bose_energy(int n_particles, double beta_tilde, int dim);

}  // namespace bosegreen::oracle

#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "bosegreen/model.hpp"

namespace bosegreen {

struct EnergyForces {
    /// Slice sum U (not divided by P).
    double energy = 0.0;
    /// -(1/P) grad U, flattened like positions.
    std::vector<double> forces;
};

/// Maps x into [-L/2, L/2).
inline double wrap_displacement(double x, double side) {
    double w = x - side * std::floor(x / side + 0.5);
    if (w >= 0.5 * side) w -= side;
    if (w < -0.5 * side) w += side;
    return w;
}

/// Maps x into [0, L).
inline double wrap_position(double x, double side) {
    double w = x - side * std::floor(x / side);
    if (w >= side) w -= side;
    return w;
}

/// Componentwise minimum image of a displacement.
std::vector<double> minimum_image(std::span<const double> delta, double side);

/// Gaussian pair potential (g / pi s^2) exp(-r^2 / s^2).
inline double gaussian_pair(double r2, const GaussianInteraction& p) {
    return p.g / (M_PI * p.s * p.s) * std::exp(-r2 / (p.s * p.s));
}

/// Displacement a - b, minimum-imaged in a periodic box.
void pair_displacement(const SystemSpec& spec, std::span<const double> a, std::span<const double> b,
                       std::span<double> out);

/// One-body trap energy summed over slices; 0 for a periodic box.
/// Adds -(1/P) grad U into `forces`.
double accumulate_trap(const SystemSpec& spec, const BeadConfiguration& config, std::span<double> forces);

/// Pair energy summed over slices, each unordered pair of distinct particles
/// counted once and scaled by the product of the two bead slice weights.
/// Adds -(1/P) grad U into `forces`.
double accumulate_pair(const SystemSpec& spec, const BeadConfiguration& config, std::span<double> forces);

/// Requires a harmonic trap.
EnergyForces trap_energy_forces(const SystemSpec& spec, const BeadConfiguration& config);

/// Requires a Gaussian interaction.
EnergyForces gaussian_pair_energy_forces(const SystemSpec& spec, const BeadConfiguration& config);

}  // namespace bosegreen

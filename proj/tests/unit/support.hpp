#pragma once

#include <algorithm>
#include <cmath>
#include <random>

#include "bosegreen/model.hpp"

namespace testing {

inline bosegreen::SystemSpec trap_system(int n, int p, int d, double beta) {
    bosegreen::SystemSpec s;
    s.n_particles = n;
    s.n_beads = p;
    s.dim = d;
    s.beta = beta;
    return s;
}

inline bosegreen::SystemSpec box_system(int n, int p, int d, double beta, double side) {
    auto s = trap_system(n, p, d, beta);
    s.geometry = bosegreen::PeriodicBox{side};
    return s;
}

/// Beads scattered with unit spread around random particle centres.
inline bosegreen::BeadConfiguration random_configuration(const bosegreen::SystemSpec& spec, std::mt19937_64& rng,
                                                         double spread = 1.0) {
    auto config = bosegreen::build_system(spec, rng());
    std::normal_distribution<double> gauss(0.0, spread);
    for (double& x : config.positions) x = gauss(rng);
    return config;
}

inline double relative_error(double a, double b) {
    const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
    return std::abs(a - b) / scale;
}

}  // namespace testing

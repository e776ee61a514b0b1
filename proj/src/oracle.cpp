#include "bosegreen/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace bosegreen::oracle {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

// Spring energy of particles [first, last] (0-based, inclusive) joined into
// one ring: each particle's last bead links to the next particle's first
// bead, and the block's last particle closes onto the block's first.
double block_energy(const SystemSpec& spec, const BeadConfiguration& config, int first, int last) {
    const int P = spec.n_beads;
    double sum = 0.0;
    for (int l = first; l <= last; ++l) {
        for (int j = 0; j + 1 < P; ++j) sum += squared_distance(config.bead(l * P + j), config.bead(l * P + j + 1));
        const int next = l < last ? l + 1 : first;
        sum += squared_distance(config.bead(l * P + P - 1), config.bead(next * P));
    }
    return 0.5 * spec.spring_constant() * sum;
}

double log_sum_exp(const std::vector<double>& xs) {
    const double top = *std::max_element(xs.begin(), xs.end());
    double s = 0.0;
    for (double x : xs) s += std::exp(x - top);
    return top + std::log(s);
}

void require_closed(const SystemSpec& spec, const BeadConfiguration& config) {
    validate(spec);
    if (spec.worm_active()) throw std::invalid_argument("oracle: closed rings only");
    if (config.positions.size() != static_cast<std::size_t>(spec.n_particles * spec.n_beads * spec.dim)) {
        throw std::invalid_argument("oracle: configuration does not match the system");
    }
}

}  // namespace

double composition_expansion_VB(const SystemSpec& spec, const BeadConfiguration& config) {
    require_closed(spec, config);
    const int N = spec.n_particles;
    if (N > 12 || spec.n_beads > 64) throw std::invalid_argument("composition_expansion_VB: N <= 12, P <= 64");
    const double beta = spec.beta;

    // Bit i of `cuts` set: a block boundary between particles i and i + 1.
    // Blocks are peeled off from the top, N downwards; a block taken when
    // `remaining` particles are left carries the factor 1 / remaining.
    std::vector<double> log_terms;
    for (unsigned cuts = 0; cuts < (1U << (N - 1)); ++cuts) {
        double log_weight = 0.0;
        double energy = 0.0;
        int top = N - 1;
        while (top >= 0) {
            int bottom = top;
            while (bottom > 0 && !(cuts & (1U << (bottom - 1)))) --bottom;
            log_weight -= std::log(static_cast<double>(top + 1));
            energy += block_energy(spec, config, bottom, top);
            top = bottom - 1;
        }
        log_terms.push_back(log_weight - beta * energy);
    }
    return -log_sum_exp(log_terms) / beta;
}

double permutation_sum_VB(const SystemSpec& spec, const BeadConfiguration& config) {
    require_closed(spec, config);
    const int N = spec.n_particles;
    const int P = spec.n_beads;
    if (N > 5) throw std::invalid_argument("permutation_sum_VB: N <= 5");
    const double beta = spec.beta;
    const double half_k = 0.5 * spec.spring_constant();

    double interior = 0.0;
    for (int l = 0; l < N; ++l) {
        for (int j = 0; j + 1 < P; ++j) interior += squared_distance(config.bead(l * P + j), config.bead(l * P + j + 1));
    }
    std::vector<int> sigma(static_cast<std::size_t>(N));
    std::iota(sigma.begin(), sigma.end(), 0);
    std::vector<double> log_terms;
    double n_factorial = 1.0;
    for (int i = 2; i <= N; ++i) n_factorial *= i;
    do {
        double links = 0.0;
        for (int l = 0; l < N; ++l) {
            links += squared_distance(config.bead(l * P + P - 1), config.bead(sigma[static_cast<std::size_t>(l)] * P));
        }
        log_terms.push_back(-beta * half_k * (interior + links));
    } while (std::next_permutation(sigma.begin(), sigma.end()));
    return -(log_sum_exp(log_terms) - std::log(n_factorial)) / beta;
}

double ideal_bose_energy(int n_particles, double beta_tilde, int dim) {
    if (n_particles < 1 || dim < 1 || !(beta_tilde > 0.0)) {
        throw std::invalid_argument("ideal_bose_energy: need N >= 1, d >= 1, beta > 0");
    }
    // Z_n carries the zero-point factor exp(-beta n d / 2); with it pulled
    // out, the single-particle factor at beta' is z = (1 - e^{-beta'})^{-d}.
    // E = N d / 2 - (ln Z~_N)' with the prime on beta.
    const int N = n_particles;
    std::vector<double> z(static_cast<std::size_t>(N) + 1);
    std::vector<double> dz(static_cast<std::size_t>(N) + 1);
    for (int k = 1; k <= N; ++k) {
        const double e = std::exp(-k * beta_tilde);
        z[static_cast<std::size_t>(k)] = std::pow(1.0 - e, -dim);
        // d/dbeta of z(k beta) = k z'(k beta)
        dz[static_cast<std::size_t>(k)] = -k * dim * std::pow(1.0 - e, -dim - 1) * e;
    }
    std::vector<double> Z(static_cast<std::size_t>(N) + 1, 0.0);
    std::vector<double> dZ(static_cast<std::size_t>(N) + 1, 0.0);
    Z[0] = 1.0;
    for (int n = 1; n <= N; ++n) {
        double s = 0.0;
        double ds = 0.0;
        for (int k = 1; k <= n; ++k) {
            const auto ku = static_cast<std::size_t>(k);
            const auto rest = static_cast<std::size_t>(n - k);
            s += z[ku] * Z[rest];
            ds += dz[ku] * Z[rest] + z[ku] * dZ[rest];
        }
        Z[static_cast<std::size_t>(n)] = s / n;
        dZ[static_cast<std::size_t>(n)] = ds / n;
    }
    return 0.5 * N * dim - dZ[static_cast<std::size_t>(N)] / Z[static_cast<std::size_t>(N)];
}

}  // namespace bosegreen::oracle

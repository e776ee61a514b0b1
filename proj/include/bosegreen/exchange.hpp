#pragma once

#include <vector>

#include "bosegreen/model.hpp"

namespace bosegreen {

/// Output of the exchange recursion for one configuration.
struct ExchangeResult {
    /// V^(0..N); v_values[0] = 0.
    std::vector<double> v_values;
    /// -grad V^(N), one d-vector per bead (flattened like positions).
    /// Empty unless forces were requested.
    std::vector<double> forces;
    /// V^(N) + beta dV^(N)/dbeta at fixed coordinates.
    double beta_term = 0.0;
    /// weights[alpha - 1][k - 1]: normalised Boltzmann weight of the term
    /// E_alpha^(k) + V^(alpha - k) in the recursion for V^(alpha).
    std::vector<std::vector<double>> weights;

    double potential() const { return v_values.back(); }
};

/// Reusable evaluator. Handles closed rings, the open worm particle and
/// Boltzmann statistics from the configuration's layout; the free functions
/// below are the checked entry points.
///
/// Every term of the recursion contains each particle's interior springs
/// exactly once, so V^(alpha) = sum of interior energies + W^(alpha) where W
/// obeys the same recursion over the inter-particle links only. The gradient
/// recursion therefore only has to carry the first and last bead of each
/// particle: O(N^3 d) for the recursion plus O(N P d) for the springs.
class ExchangeEngine {
public:
    void evaluate(const SystemSpec& spec, const BeadConfiguration& config, ExchangeResult& out,
                  bool want_forces);

    /// E_alpha^(k) from the last evaluation (1-based alpha, k).
    double cached_energy(int alpha, int k) const;

private:
    void prepare(const SystemSpec& spec, const BeadConfiguration& config);

    int n_ = 0;
    int dim_ = 0;
    std::vector<double> interior_;      // I_l
    std::vector<double> prefix_inner_;  // sum_{i<l} I_i
    std::vector<double> prefix_link_;   // sum_{i<l} c(i, i+1)
    std::vector<double> energy_;        // E table, [alpha * (n_ + 1) + k]
    std::vector<double> grad_first_;    // dW^(alpha)/d r_first(l), [(alpha * n_ + l) * dim_ + a]
    std::vector<double> grad_last_;
    std::vector<double> link_;          // k (r_last(i) - r_first(i+1))
    std::vector<double> closure_;
    std::vector<double> terms_;
};

/// E_alpha^(k) for a closed configuration; 1 <= k <= alpha <= N.
/// Throws std::out_of_range on bad indices, std::invalid_argument with an
/// active worm.
double spring_energy(const SystemSpec& spec, const BeadConfiguration& config, int alpha, int k);

/// Values, weights and the beta term; no forces.
ExchangeResult exchange_potential(const SystemSpec& spec, const BeadConfiguration& config);

/// As exchange_potential, with forces filled.
ExchangeResult exchange_forces(const SystemSpec& spec, const BeadConfiguration& config);

double beta_derivative_term(const SystemSpec& spec, const BeadConfiguration& config);

/// Exchange-free ring energy (every particle closes on itself) with forces.
ExchangeResult distinguishable_potential_and_forces(const SystemSpec& spec, const BeadConfiguration& config);

}  // namespace bosegreen

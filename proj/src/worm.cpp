#include "bosegreen/worm.hpp"

#include <stdexcept>
#include <string>

namespace bosegreen {

namespace {

void require_worm(const SystemSpec& spec, const BeadConfiguration& config, const char* what) {
    if (!spec.worm_active() || !config.layout.worm_active()) {
        throw std::invalid_argument(std::string(what) + ": worm is not active");
    }
}

}  // namespace

double worm_spring_energy(const SystemSpec& spec, const BeadConfiguration& config, int alpha, int k) {
    require_worm(spec, config, "worm_spring_energy");
    const int n = config.layout.n_particles();
    if (alpha < 1 || alpha > n || k < 1 || k > alpha) {
        throw std::out_of_range("worm_spring_energy: need 1 <= k <= alpha <= N");
    }
    ExchangeEngine engine;
    ExchangeResult scratch;
    engine.evaluate(spec, config, scratch, false);
    return engine.cached_energy(alpha, k);
}

ExchangeResult worm_potential_and_forces(const SystemSpec& spec, const BeadConfiguration& config) {
    require_worm(spec, config, "worm_potential_and_forces");
    ExchangeEngine engine;
    ExchangeResult out;
    engine.evaluate(spec, config, out, true);
    return out;
}

EnergyForces worm_interaction(const SystemSpec& spec, const BeadConfiguration& config) {
    require_worm(spec, config, "worm_interaction");
    EnergyForces out;
    out.forces.assign(config.positions.size(), 0.0);
    out.energy = accumulate_pair(spec, config, out.forces);
    return out;
}

}  // namespace bosegreen

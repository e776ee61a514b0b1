#include "bosegreen/potentials.hpp"

#include <array>
#include <stdexcept>

namespace bosegreen {

std::vector<double> minimum_image(std::span<const double> delta, double side) {
    std::vector<double> out(delta.begin(), delta.end());
    for (auto& x : out) x = wrap_displacement(x, side);
    return out;
}

void pair_displacement(const SystemSpec& spec, std::span<const double> a, std::span<const double> b,
                       std::span<double> out) {
    if (const auto* box = std::get_if<PeriodicBox>(&spec.geometry)) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = wrap_displacement(a[i] - b[i], box->side);
    } else {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
    }
}

double accumulate_trap(const SystemSpec& spec, const BeadConfiguration& config, std::span<double> forces) {
    const auto* trap = std::get_if<HarmonicTrap>(&spec.geometry);
    if (trap == nullptr) return 0.0;
    const BeadLayout& layout = config.layout;
    const double k = spec.mass * trap->omega * trap->omega;
    const double inv_p = 1.0 / spec.n_beads;
    const auto d = static_cast<std::size_t>(layout.dim());
    double energy = 0.0;
    for (int b = 0; b < layout.total_beads(); ++b) {
        const double w = layout.slice_weight(b);
        const auto r = config.bead(b);
        double r2 = 0.0;
        for (std::size_t a = 0; a < d; ++a) {
            r2 += r[a] * r[a];
            forces[static_cast<std::size_t>(b) * d + a] -= inv_p * w * k * r[a];
        }
        energy += w * 0.5 * k * r2;
    }
    return energy;
}

double accumulate_pair(const SystemSpec& spec, const BeadConfiguration& config, std::span<double> forces) {
    const auto* gauss = std::get_if<GaussianInteraction>(&spec.interaction);
    if (gauss == nullptr || gauss->g == 0.0) return 0.0;
    const BeadLayout& layout = config.layout;
    const auto d = static_cast<std::size_t>(layout.dim());
    const double inv_p = 1.0 / spec.n_beads;
    const double inv_s2 = 1.0 / (gauss->s * gauss->s);
    std::array<double, 3> dr{};
    const std::span<double> delta(dr.data(), d);

    double energy = 0.0;
    for (const auto& members : layout.slice_members()) {
        for (std::size_t i = 0; i < members.size(); ++i) {
            const int bi = members[i];
            const int pi = layout.particle_of(bi);
            for (std::size_t j = i + 1; j < members.size(); ++j) {
                const int bj = members[j];
                if (layout.particle_of(bj) == pi) continue;
                pair_displacement(spec, config.bead(bi), config.bead(bj), delta);
                double r2 = 0.0;
                for (std::size_t a = 0; a < d; ++a) r2 += dr[a] * dr[a];
                const double w = layout.slice_weight(bi) * layout.slice_weight(bj);
                const double e = w * gaussian_pair(r2, *gauss);
                energy += e;
                const double coeff = inv_p * 2.0 * inv_s2 * e;
                for (std::size_t a = 0; a < d; ++a) {
                    forces[static_cast<std::size_t>(bi) * d + a] += coeff * dr[a];
                    forces[static_cast<std::size_t>(bj) * d + a] -= coeff * dr[a];
                }
            }
        }
    }
    return energy;
}

EnergyForces trap_energy_forces(const SystemSpec& spec, const BeadConfiguration& config) {
    if (!std::holds_alternative<HarmonicTrap>(spec.geometry)) {
        throw std::invalid_argument("trap_energy_forces: geometry is not a harmonic trap");
    }
    EnergyForces out;
    out.forces.assign(config.positions.size(), 0.0);
    out.energy = accumulate_trap(spec, config, out.forces);
    return out;
}

EnergyForces gaussian_pair_energy_forces(const SystemSpec& spec, const BeadConfiguration& config) {
    if (!std::holds_alternative<GaussianInteraction>(spec.interaction)) {
        throw std::invalid_argument("gaussian_pair_energy_forces: interaction is not Gaussian");
    }
    EnergyForces out;
    out.forces.assign(config.positions.size(), 0.0);
    out.energy = accumulate_pair(spec, config, out.forces);
    return out;
}

}  // namespace bosegreen

#include "bosegreen/model.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace bosegreen {

double SystemSpec::omega_p() const { return std::sqrt(static_cast<double>(n_beads)) / (beta * hbar); }

double SystemSpec::spring_constant() const {
    const double w = omega_p();
    return mass * w * w;
}

bool SystemSpec::has_pair_interaction() const {
    if (const auto* gauss = std::get_if<GaussianInteraction>(&interaction)) {
        return gauss->g != 0.0;
    }
    return false;
}

namespace {

[[noreturn]] void reject(const std::string& field, const std::string& why) {
    throw std::invalid_argument(field + ": " + why);
}

}  // namespace

void validate(const SystemSpec& spec) {
    if (spec.n_particles < 1) reject("n_particles", "must be >= 1");
    if (spec.n_beads < 1) reject("n_beads", "must be >= 1");
    if (spec.dim < 1 || spec.dim > 3) reject("dim", "must be 1, 2 or 3");
    if (!(spec.beta > 0.0) || !std::isfinite(spec.beta)) reject("beta", "must be positive");
    if (!(spec.mass > 0.0)) reject("mass", "must be positive");
    if (!(spec.hbar > 0.0)) reject("hbar", "must be positive");
    if (const auto* trap = std::get_if<HarmonicTrap>(&spec.geometry)) {
        if (!(trap->omega > 0.0)) reject("omega", "must be positive");
    } else if (!(std::get<PeriodicBox>(spec.geometry).side > 0.0)) {
        reject("box_side", "must be positive");
    }
    if (const auto* gauss = std::get_if<GaussianInteraction>(&spec.interaction)) {
        if (!(gauss->s > 0.0)) reject("s", "must be positive");
        if (!std::isfinite(gauss->g)) reject("g", "must be finite");
    }
    if (spec.worm) {
        const int P = spec.n_beads;
        if (spec.worm->j_gap < 1) reject("j_gap", "must be >= 1 (an equal-time gap is j_gap = 1)");
        if (spec.worm->j_gap >= P) reject("j_gap", "must be < n_beads");
        if (spec.worm->tau2_slice < 0 || spec.worm->tau2_slice > P - spec.worm->j_gap) {
            reject("tau2_slice", "must lie in [0, n_beads - j_gap]");
        }
        if (spec.statistics != Statistics::Bose) reject("statistics", "the worm requires Bose statistics");
    }
}

WormSpec default_worm(int n_beads, int j_gap) {
    int l = n_beads / 3 - 1;
    if (l > n_beads - j_gap) l = n_beads - j_gap;
    if (l < 0) l = 0;
    return WormSpec{j_gap, l};
}

BeadLayout::BeadLayout(const SystemSpec& spec)
    : n_particles_(spec.n_particles), n_beads_(spec.n_beads), dim_(spec.dim), worm_(spec.worm) {
    const int P = n_beads_;
    const int last = n_particles_ - 1;
    total_beads_ = last * P + bead_count(last);

    slice_.resize(static_cast<std::size_t>(total_beads_));
    weight_.assign(static_cast<std::size_t>(total_beads_), 1.0);
    members_.assign(static_cast<std::size_t>(P), {});

    for (int b = 0; b < last * P; ++b) slice_[static_cast<std::size_t>(b)] = b % P;
    const int base = offset(last);
    if (!worm_) {
        for (int j = 0; j < P; ++j) slice_[static_cast<std::size_t>(base + j)] = j;
    } else {
        const int l = worm_->tau2_slice;
        const int J = worm_->j_gap;
        for (int s = 0; s < bead_count(last); ++s) {
            int slice = s;
            if (s == l + 1) slice = l + J - 1;  // x
            else if (s > l + 1) slice = s + J - 2;
            slice_[static_cast<std::size_t>(base + s)] = slice;
        }
        weight_[static_cast<std::size_t>(base + l)] = 0.5;
        weight_[static_cast<std::size_t>(base + l + 1)] = 0.5;
    }
    for (int b = 0; b < total_beads_; ++b) {
        members_[static_cast<std::size_t>(slice_of(b))].push_back(b);
    }
}

int BeadLayout::bead_count(int particle) const {
    if (worm_ && particle == n_particles_ - 1) return n_beads_ - worm_->j_gap + 2;
    return n_beads_;
}

int BeadLayout::particle_of(int bead) const {
    const int p = bead / n_beads_;
    return p < n_particles_ ? p : n_particles_ - 1;
}

int BeadLayout::y_bead() const {
    if (!worm_) throw std::logic_error("y_bead: worm inactive");
    return offset(n_particles_ - 1) + worm_->tau2_slice;
}

int BeadLayout::x_bead() const { return y_bead() + 1; }

bool BeadLayout::spring_to_next(int bead) const {
    const int p = particle_of(bead);
    if (bead >= last_bead(p)) return false;
    if (worm_ && bead == y_bead()) return false;
    return true;
}

BeadConfiguration build_system(const SystemSpec& spec, std::uint64_t seed, int chain_length) {
    validate(spec);
    if (chain_length < 0) throw std::invalid_argument("chain_length: must be >= 0");

    BeadConfiguration config;
    config.layout = BeadLayout(spec);
    const BeadLayout& layout = config.layout;
    const int d = spec.dim;
    const auto dof = static_cast<std::size_t>(layout.degrees_of_freedom());
    config.positions.assign(dof, 0.0);
    config.velocities.assign(dof, 0.0);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> jitter(-kInitialJitter, kInitialJitter);

    std::vector<double> centre(static_cast<std::size_t>(d));
    for (int i = 0; i < layout.n_particles(); ++i) {
        if (const auto* trap = std::get_if<HarmonicTrap>(&spec.geometry)) {
            const double width = std::sqrt(spec.hbar / (spec.mass * trap->omega));
            for (auto& c : centre) c = width * normal(rng);
        } else {
            std::uniform_real_distribution<double> uniform(0.0, std::get<PeriodicBox>(spec.geometry).side);
            for (auto& c : centre) c = uniform(rng);
        }
        for (int b = layout.first_bead(i); b <= layout.last_bead(i); ++b) {
            auto r = config.bead(b);
            for (int a = 0; a < d; ++a) {
                // The first bead sits exactly at the centre.
                r[static_cast<std::size_t>(a)] = centre[static_cast<std::size_t>(a)] +
                                                 (b == layout.first_bead(i) ? 0.0 : jitter(rng));
            }
        }
    }

    const double sigma_v = std::sqrt(1.0 / (spec.beta * spec.mass));
    for (auto& v : config.velocities) v = sigma_v * normal(rng);

    config.thermostat.chain_length = chain_length;
    config.thermostat.positions.assign(dof * static_cast<std::size_t>(chain_length), 0.0);
    config.thermostat.velocities.assign(dof * static_cast<std::size_t>(chain_length), 0.0);
    return config;
}

}  // namespace bosegreen

#include "bosegreen/dynamics.hpp"

#include <cmath>
#include <string>

#include "bosegreen/potentials.hpp"

namespace bosegreen {

namespace {

// out[i] = exp(f * src[i]) for the thermostat scale factors, whose arguments
// are tiny once the chains have equilibrated. Fifth-order Taylor is exact to
// ~1e-14 below the cutoff; the rare larger arguments are patched afterwards.
void fill_scale(double* out, const double* src, double f, std::size_t n) {
    int large = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = f * src[i];
        out[i] = 1.0 + x * (1.0 + x * (0.5 + x * (1.0 / 6.0 + x * (1.0 / 24.0 + x * (1.0 / 120.0)))));
        large |= static_cast<int>(x > 0.02) | static_cast<int>(x < -0.02);
    }
    if (large == 0) return;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = f * src[i];
        if (x > 0.02 || x < -0.02) out[i] = std::exp(x);
    }
}

std::vector<double> suzuki_yoshida(int order) {
    switch (order) {
        case 1:
            return {1.0};
        case 3: {
            const double w = 1.0 / (2.0 - std::cbrt(2.0));
            return {w, 1.0 - 2.0 * w, w};
        }
        case 7: {
            const double w1 = 0.784513610477560;
            const double w2 = 0.235573213359357;
            const double w3 = -1.17767998417887;
            const double w4 = 1.0 - 2.0 * (w1 + w2 + w3);
            return {w1, w2, w3, w4, w3, w2, w1};
        }
        default:
            throw std::invalid_argument("sy_order: must be 1, 3 or 7");
    }
}

}  // namespace

void validate(const ThermostatSpec& thermo) {
    if (!thermo.enabled) return;
    if (thermo.chain_length < 2) throw std::invalid_argument("chain_length: must be >= 2");
    if (thermo.coupling_frequency < 0.0) throw std::invalid_argument("coupling_frequency: must be >= 0");
    if (thermo.n_respa < 1) throw std::invalid_argument("n_respa: must be >= 1");
    if (thermo.sy_order != 1 && thermo.sy_order != 3 && thermo.sy_order != 7) {
        throw std::invalid_argument("sy_order: must be 1, 3 or 7");
    }
}

void validate(const Schedule& schedule) {
    if (schedule.dt < 0.0) throw std::invalid_argument("dt: must be positive (0 selects the default)");
    if (schedule.n_equil < 0) throw std::invalid_argument("n_equil: must be >= 0");
    if (schedule.n_steps < 0) throw std::invalid_argument("n_steps: must be >= 0");
    if (schedule.sample_stride < 1) throw std::invalid_argument("sample_stride: must be >= 1");
    if (schedule.checkpoint_every < 0) throw std::invalid_argument("checkpoint_every: must be >= 0");
}

double resolved_dt(const SystemSpec& spec, const Schedule& schedule) {
    return schedule.dt > 0.0 ? schedule.dt : 0.05 / spec.omega_p();
}

DivergenceError::DivergenceError(std::int64_t step, std::int64_t last_checkpoint, const std::string& what)
    : std::runtime_error("trajectory diverged at step " + std::to_string(step) + ": " + what),
      step_(step),
      last_checkpoint_(last_checkpoint) {}

// ---------------------------------------------------------------------------

ForceField::ForceField(SystemSpec spec) : spec_(std::move(spec)) {}

const ForceField::Evaluation& ForceField::evaluate(const BeadConfiguration& config) {
    engine_.evaluate(spec_, config, exchange_, true);
    eval_.forces = exchange_.forces;
    const double u = accumulate_trap(spec_, config, eval_.forces) + accumulate_pair(spec_, config, eval_.forces);
    eval_.slice_potential = u;
    eval_.beta_term = exchange_.beta_term;
    eval_.potential = exchange_.potential() + u / spec_.n_beads;
    return eval_;
}

// ---------------------------------------------------------------------------

Integrator::Integrator(const SystemSpec& spec, const ThermostatSpec& thermo, double dt)
    : spec_(spec), thermo_(thermo), dt_(dt), kT_(1.0 / spec.beta), mass_(spec.mass), field_(spec) {
    validate(spec);
    validate(thermo);
    if (!(dt > 0.0)) throw std::invalid_argument("dt: must be positive");
    const double wc = thermo.coupling_frequency > 0.0 ? thermo.coupling_frequency : spec.omega_p();
    q_ = kT_ / (wc * wc);
    if (thermo.enabled) sy_weights_ = suzuki_yoshida(thermo.sy_order);
}

void Integrator::prime(const BeadConfiguration& config) {
    field_.evaluate(config);
    primed_ = true;
}

double Integrator::kinetic_energy(const BeadConfiguration& config) const {
    double sum = 0.0;
    for (double v : config.velocities) sum += v * v;
    return 0.5 * mass_ * sum;
}

double Integrator::conserved_quantity(const BeadConfiguration& config) const {
    double h = kinetic_energy(config) + field_.last().potential;
    const auto& th = config.thermostat;
    for (std::size_t i = 0; i < th.positions.size(); ++i) {
        h += 0.5 * q_ * th.velocities[i] * th.velocities[i] + kT_ * th.positions[i];
    }
    return h;
}

void Integrator::thermostat_half_step(BeadConfiguration& config) {
    if (!thermo_.enabled) return;
    const int M = config.thermostat.chain_length;
    if (M != thermo_.chain_length) throw std::invalid_argument("thermostat state does not match chain_length");
    const double kT = kT_;
    const double q = q_;
    const double inv_q = 1.0 / q;
    const double mass = mass_;
    const std::size_t n = config.velocities.size();
    const auto m = static_cast<std::size_t>(M);

    eta_.resize(m * n);
    veta_.resize(m * n);
    scale_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < m; ++k) {
            eta_[k * n + i] = config.thermostat.positions[i * m + k];
            veta_[k * n + i] = config.thermostat.velocities[i * m + k];
        }
    }
    double* v = config.velocities.data();
    double* a = scale_.data();
    auto chain = [&](std::size_t k) { return veta_.data() + k * n; };

    auto update_top = [&](double h) {
        double* top = chain(m - 1);
        const double* below = chain(m - 2);
        for (std::size_t i = 0; i < n; ++i) top[i] += 0.5 * h * (q * below[i] * below[i] - kT) * inv_q;
    };
    auto update_link = [&](std::size_t k, double h) {
        fill_scale(a, chain(k + 1), -0.25 * h, n);
        double* vk = chain(k);
        if (k == 0) {
            for (std::size_t i = 0; i < n; ++i) {
                const double g = (mass * v[i] * v[i] - kT) * inv_q;
                vk[i] = vk[i] * a[i] * a[i] + 0.5 * h * g * a[i];
            }
        } else {
            const double* below = chain(k - 1);
            for (std::size_t i = 0; i < n; ++i) {
                const double g = (q * below[i] * below[i] - kT) * inv_q;
                vk[i] = vk[i] * a[i] * a[i] + 0.5 * h * g * a[i];
            }
        }
    };

    for (int r = 0; r < thermo_.n_respa; ++r) {
        for (double w : sy_weights_) {
            const double h = w * dt_ / (2.0 * thermo_.n_respa);
            update_top(h);
            for (std::size_t k = m - 1; k-- > 0;) update_link(k, h);
            fill_scale(a, chain(0), -h, n);
            for (std::size_t i = 0; i < n; ++i) v[i] *= a[i];
            for (std::size_t j = 0; j < m * n; ++j) eta_[j] += h * veta_[j];
            for (std::size_t k = 0; k + 1 < m; ++k) update_link(k, h);
            update_top(h);
        }
    }

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < m; ++k) {
            config.thermostat.positions[i * m + k] = eta_[k * n + i];
            config.thermostat.velocities[i * m + k] = veta_[k * n + i];
        }
    }
}

void Integrator::step(BeadConfiguration& config, std::int64_t step_index) {
    if (!primed_) prime(config);
    const double half = 0.5 * dt_ / mass_;

    thermostat_half_step(config);
    {
        const auto& f = field_.last().forces;
        for (std::size_t i = 0; i < config.velocities.size(); ++i) config.velocities[i] += half * f[i];
    }
    for (std::size_t i = 0; i < config.positions.size(); ++i) config.positions[i] += dt_ * config.velocities[i];

    const auto& eval = field_.evaluate(config);
    if (!std::isfinite(eval.potential)) {
        throw DivergenceError(step_index, -1, "non-finite potential");
    }
    for (std::size_t i = 0; i < config.velocities.size(); ++i) {
        if (!std::isfinite(eval.forces[i]) || !std::isfinite(config.positions[i])) {
            throw DivergenceError(step_index, -1, "non-finite force or position");
        }
        config.velocities[i] += half * eval.forces[i];
    }
    thermostat_half_step(config);
}

BeadConfiguration step(BeadConfiguration config, const SystemSpec& spec, const ThermostatSpec& thermo, double dt) {
    Integrator integrator(spec, thermo, dt);
    integrator.step(config, 0);
    return config;
}

// ---------------------------------------------------------------------------

void sample_estimators(const SystemSpec& spec, const EstimatorSettings& settings, const BeadConfiguration& config,
                       const ForceField::Evaluation& forces, EstimatorAccumulators& acc) {
    const std::int64_t index = acc.samples++;
    double v2 = 0.0;
    for (double v : config.velocities) v2 += v * v;
    acc.kinetic_temperature.add(spec.mass * v2 / static_cast<double>(config.velocities.size()));

    if (!config.layout.worm_active()) {
        acc.energy.add(energy_from_parts(spec, forces.slice_potential, forces.beta_term));
        if (!acc.density.empty()) density_sample(spec, config, acc.density);
        if (!acc.pair_corr.empty() && index % std::max(1, settings.pair_every) == 0) {
            pair_correlation_sample(spec, config, acc.pair_corr);
        }
    } else if (!acc.greens.empty()) {
        greens_sample(spec, config, acc.greens, &acc.greens_grid, settings.greens_center_radius);
    }
}

TrajectoryState run_trajectory_state(const SystemSpec& spec, const ThermostatSpec& thermo, const Schedule& schedule,
                                     const EstimatorSettings& settings, std::uint64_t seed,
                                     const TrajectoryHooks& hooks) {
    validate(spec);
    validate(thermo);
    validate(schedule);

    TrajectoryState state;
    if (hooks.resume) {
        state = *hooks.resume;
    } else {
        state.config = build_system(spec, seed, thermo.enabled ? thermo.chain_length : 0);
        state.accumulators = make_accumulators(spec, settings);
    }

    Integrator integrator(spec, thermo, resolved_dt(spec, schedule));
    integrator.prime(state.config);

    const std::int64_t total = schedule.n_equil + schedule.n_steps;
    std::int64_t last_checkpoint = -1;
    while (state.step < total) {
        if (hooks.halt_after && state.step >= *hooks.halt_after) return state;
        try {
            integrator.step(state.config, state.step);
        } catch (const DivergenceError& e) {
            throw DivergenceError(e.step(), last_checkpoint, "non-finite force or position");
        }
        ++state.step;
        const std::int64_t sampled = state.step - schedule.n_equil;
        if (sampled > 0 && sampled % schedule.sample_stride == 0) {
            sample_estimators(spec, settings, state.config, integrator.forces(), state.accumulators);
        }
        if (schedule.checkpoint_every > 0 && state.step % schedule.checkpoint_every == 0 && hooks.on_checkpoint) {
            hooks.on_checkpoint(state);
            last_checkpoint = state.step;
        }
    }
    return state;
}

EstimatorAccumulators run_trajectory(const SystemSpec& spec, const ThermostatSpec& thermo, const Schedule& schedule,
                                     const EstimatorSettings& settings, std::uint64_t seed) {
    return run_trajectory_state(spec, thermo, schedule, settings, seed).accumulators;
}

}  // namespace bosegreen

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "bosegreen/estimators.hpp"
#include "bosegreen/exchange.hpp"
#include "bosegreen/model.hpp"

namespace bosegreen {

/// Massive Nose-Hoover chains, one chain per bead degree of freedom.
struct ThermostatSpec {
    bool enabled = true;
    int chain_length = 4;
    /// Thermostat masses Q = kT / coupling_frequency^2; 0 selects omega_P.
    double coupling_frequency = 0.0;
    int n_respa = 2;
    /// Suzuki-Yoshida order: 1, 3 or 7.
    int sy_order = 7;

    bool operator==(const ThermostatSpec&) const = default;
};

void validate(const ThermostatSpec& thermo);

struct Schedule {
    /// 0 selects 0.05 / omega_P.
    double dt = 0.0;
    std::int64_t n_equil = 100000;
    std::int64_t n_steps = 1000000;
    std::int64_t sample_stride = 10;
    /// Steps between checkpoint callbacks; 0 disables them.
    std::int64_t checkpoint_every = 0;

    bool operator==(const Schedule&) const = default;
};

void validate(const Schedule& schedule);
double resolved_dt(const SystemSpec& spec, const Schedule& schedule);

class DivergenceError : public std::runtime_error {
public:
    DivergenceError(std::int64_t step, std::int64_t last_checkpoint, const std::string& what);
    std::int64_t step() const { return step_; }
    /// Step of the last checkpoint written before the divergence (-1: none).
    std::int64_t last_checkpoint() const { return last_checkpoint_; }

private:
    std::int64_t step_;
    std::int64_t last_checkpoint_;
};

/// Total force on every bead: springs through the exchange (or worm)
/// recursion, trap and pair interaction. The sampled weight is
/// exp(-beta * potential).
class ForceField {
public:
    explicit ForceField(SystemSpec spec);

    struct Evaluation {
        /// V^(N) (or V_G^(N), or the Boltzmann ring energy) + U/P.
        double potential = 0.0;
        /// Unscaled slice sum U of trap and pair energies.
        double slice_potential = 0.0;
        double beta_term = 0.0;
        std::vector<double> forces;
    };

    const Evaluation& evaluate(const BeadConfiguration& config);
    const Evaluation& last() const { return eval_; }
    const SystemSpec& spec() const { return spec_; }

private:
    SystemSpec spec_;
    ExchangeEngine engine_;
    ExchangeResult exchange_;
    Evaluation eval_;
};

/// Velocity Verlet with a Nose-Hoover chain half step at each end.
class Integrator {
public:
    Integrator(const SystemSpec& spec, const ThermostatSpec& thermo, double dt);

    /// One full step. Throws DivergenceError on a non-finite force or position.
    void step(BeadConfiguration& config, std::int64_t step_index);

    /// Recompute forces for `config`; needed before the first step and after
    /// replacing the configuration from outside.
    void prime(const BeadConfiguration& config);

    const ForceField::Evaluation& forces() const { return field_.last(); }
    double dt() const { return dt_; }
    double temperature() const { return kT_; }

    double kinetic_energy(const BeadConfiguration& config) const;
    /// Extended Hamiltonian conserved by the NHC dynamics.
    double conserved_quantity(const BeadConfiguration& config) const;

private:
    void thermostat_half_step(BeadConfiguration& config);

    SystemSpec spec_;
    ThermostatSpec thermo_;
    double dt_;
    double kT_;
    double mass_;
    double q_;
    std::vector<double> sy_weights_;
    // Chain-major copies of the thermostat state, so the inner loops run over
    // degrees of freedom.
    std::vector<double> eta_, veta_, scale_;
    ForceField field_;
    bool primed_ = false;
};

/// Stand-alone single step (builds an integrator; for tests and tooling).
BeadConfiguration step(BeadConfiguration config, const SystemSpec& spec, const ThermostatSpec& thermo, double dt);

/// Everything needed to continue a trajectory bit-for-bit.
struct TrajectoryState {
    BeadConfiguration config;
    EstimatorAccumulators accumulators;
    /// Completed steps, equilibration included.
    std::int64_t step = 0;

    bool operator==(const TrajectoryState&) const = default;
};

struct TrajectoryHooks {
    /// Resume from here instead of building a fresh system.
    std::optional<TrajectoryState> resume;
    /// Called every schedule.checkpoint_every steps.
    std::function<void(const TrajectoryState&)> on_checkpoint;
    /// Stop (returning the partial state) once this many total steps are done.
    std::optional<std::int64_t> halt_after;
};

/// Equilibrate n_equil steps, then sample every sample_stride steps for
/// n_steps steps. Returns the final state; reproducible from `seed`.
TrajectoryState run_trajectory_state(const SystemSpec& spec, const ThermostatSpec& thermo, const Schedule& schedule,
                                     const EstimatorSettings& settings, std::uint64_t seed,
                                     const TrajectoryHooks& hooks = {});

EstimatorAccumulators run_trajectory(const SystemSpec& spec, const ThermostatSpec& thermo, const Schedule& schedule,
                                     const EstimatorSettings& settings, std::uint64_t seed);

/// Deposit one sample of every estimator the accumulators are shaped for.
void sample_estimators(const SystemSpec& spec, const EstimatorSettings& settings, const BeadConfiguration& config,
                       const ForceField::Evaluation& forces, EstimatorAccumulators& acc);

}  // namespace bosegreen

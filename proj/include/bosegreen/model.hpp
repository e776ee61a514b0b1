#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace bosegreen {

struct HarmonicTrap {
    double omega = 1.0;
};

struct PeriodicBox {
    double side = 1.0;
};

using Geometry = std::variant<HarmonicTrap, PeriodicBox>;

struct NoInteraction {};

/// V(r) = (g / pi s^2) exp(-r^2 / s^2) for every unordered pair at one slice.
struct GaussianInteraction {
    double g = 0.0;
    double s = 1.0;
};

using Interaction = std::variant<NoInteraction, GaussianInteraction>;

/// Open ring of the last particle.
///
/// `tau2_slice` is the number of ordinary beads stored before the y end.
/// y sits on slice tau2_slice + 1 and x on slice tau2_slice + j_gap
/// (1-based), so the springless stretch between them spans (j_gap - 1)
/// slices of imaginary time. j_gap = 1 puts both ends on the same slice,
/// the equal-time limit.
struct WormSpec {
    int j_gap = 1;
    int tau2_slice = 0;

    bool operator==(const WormSpec&) const = default;
};

/// Bose: exchange recursion. Boltzmann: every particle closes on itself.
enum class Statistics { Bose, Boltzmann };

struct SystemSpec {
    int n_particles = 1;
    int n_beads = 1;
    int dim = 1;
    double beta = 1.0;
    double mass = 1.0;
    double hbar = 1.0;
    Geometry geometry = HarmonicTrap{};
    Interaction interaction = NoInteraction{};
    std::optional<WormSpec> worm;
    Statistics statistics = Statistics::Bose;

    double omega_p() const;
    /// m * omega_P^2
    double spring_constant() const;
    double tau_step() const { return beta / n_beads; }

    bool worm_active() const { return worm.has_value(); }
    bool periodic() const { return std::holds_alternative<PeriodicBox>(geometry); }
    bool has_pair_interaction() const;
};

/// Throws std::invalid_argument naming the offending field.
void validate(const SystemSpec& spec);

/// Gap placement used when only j_gap is given: tau2_slice = floor(P/3) - 1,
/// clamped into the legal range [0, P - j_gap].
WormSpec default_worm(int n_beads, int j_gap);

/// Storage layout of all beads. Particles 0..N-2 carry P beads each; the
/// last particle carries P beads, or P - J + 2 when the worm is active.
/// Slices are 0-based here.
class BeadLayout {
public:
    BeadLayout() = default;
    explicit BeadLayout(const SystemSpec& spec);

    int n_particles() const { return n_particles_; }
    int n_beads() const { return n_beads_; }
    int dim() const { return dim_; }
    int total_beads() const { return total_beads_; }
    int degrees_of_freedom() const { return total_beads_ * dim_; }

    int bead_count(int particle) const;
    int offset(int particle) const { return particle * n_beads_; }
    int first_bead(int particle) const { return offset(particle); }
    int last_bead(int particle) const { return offset(particle) + bead_count(particle) - 1; }
    int particle_of(int bead) const;

    bool worm_active() const { return worm_.has_value(); }
    const std::optional<WormSpec>& worm() const { return worm_; }
    /// Global indices of the gap ends; only valid with an active worm.
    int y_bead() const;
    int x_bead() const;

    /// True when a spring joins bead `bead` to `bead + 1` of the same particle.
    bool spring_to_next(int bead) const;

    int slice_of(int bead) const { return slice_[static_cast<std::size_t>(bead)]; }
    /// 1 for ordinary beads, 1/2 for the gap ends (symmetric Trotter split
    /// between the N and N-1 particle sectors).
    double slice_weight(int bead) const { return weight_[static_cast<std::size_t>(bead)]; }
    /// Beads resident on each slice, in storage order.
    const std::vector<std::vector<int>>& slice_members() const { return members_; }

    bool operator==(const BeadLayout&) const = default;

private:
    int n_particles_ = 0;
    int n_beads_ = 0;
    int dim_ = 0;
    int total_beads_ = 0;
    std::optional<WormSpec> worm_;
    std::vector<int> slice_;
    std::vector<double> weight_;
    std::vector<std::vector<int>> members_;
};

struct ThermostatState {
    int chain_length = 0;
    /// Indexed [dof * chain_length + k].
    std::vector<double> positions;
    std::vector<double> velocities;

    bool operator==(const ThermostatState&) const = default;
};

/// Full dynamical state of one trajectory. Positions are unwrapped.
struct BeadConfiguration {
    BeadLayout layout;
    std::vector<double> positions;
    std::vector<double> velocities;
    ThermostatState thermostat;

    std::span<double> bead(int global) {
        return {positions.data() + static_cast<std::size_t>(global) * layout.dim(),
                static_cast<std::size_t>(layout.dim())};
    }
    std::span<const double> bead(int global) const {
        return {positions.data() + static_cast<std::size_t>(global) * layout.dim(),
                static_cast<std::size_t>(layout.dim())};
    }

    bool operator==(const BeadConfiguration&) const = default;
};

inline constexpr double kInitialJitter = 0.01;

/// Random initial state: trap particles drawn from a Gaussian of width
/// sqrt(hbar / m omega), box particles uniform in [0, L)^d; beads of one
/// particle start at its centre plus uniform jitter of at most
/// `kInitialJitter`. Velocities are Maxwell-Boltzmann at temperature 1/beta.
BeadConfiguration build_system(const SystemSpec& spec, std::uint64_t seed, int chain_length = 4);

}  // namespace bosegreen

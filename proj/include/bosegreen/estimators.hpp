#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "bosegreen/model.hpp"

namespace bosegreen {

/// Running mean with batch-means error bars. Samples are grouped into blocks
/// of `block_size`; the error bar is the standard error of the block means.
struct BlockedScalar {
    int block_size = 200;
    std::int64_t count = 0;
    double sum = 0.0;
    double sum_sq = 0.0;
    double pending_sum = 0.0;
    std::int64_t pending_count = 0;
    std::int64_t n_blocks = 0;
    double block_sum = 0.0;
    double block_sum_sq = 0.0;

    void add(double x);
    void merge(const BlockedScalar& other);
    double mean() const;
    /// NaN with fewer than two completed blocks.
    double stderr_of_mean() const;

    bool operator==(const BlockedScalar&) const = default;
};

enum class Normalization {
    /// value = counts / (samples * measure); a density with weight 1/P per
    /// bead integrates to N.
    PerSample,
    /// value = counts / (deposited mass * measure); integrates to 1.
    UnitMass,
};

/// Regular histogram on a box in `shape.size()` dimensions with per-bin
/// measures supplied by the caller (cell volume, shell area, ...).
struct Histogram {
    std::vector<int> shape;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<double> measure;
    Normalization normalization = Normalization::PerSample;
    int block_size = 200;

    std::vector<double> counts;
    double overflow = 0.0;
    /// Total deposited weight including overflow.
    double mass = 0.0;
    std::int64_t samples = 0;

    std::vector<double> pending;
    double pending_mass = 0.0;
    std::int64_t pending_samples = 0;
    std::vector<double> block_sum;
    std::vector<double> block_sum_sq;
    std::int64_t n_blocks = 0;

    Histogram() = default;
    Histogram(std::vector<int> shape, std::vector<double> lower, std::vector<double> upper,
              std::vector<double> measure, Normalization normalization, int block_size);

    std::size_t size() const { return counts.size(); }
    bool empty() const { return counts.empty(); }
    double bin_width(std::size_t axis) const;
    double bin_center(std::size_t axis, int index) const;

    /// Flat bin index, or -1 outside the covered range.
    long bin_of(std::span<const double> point) const;
    void deposit(long bin, double weight);
    void end_sample();
    void merge(const Histogram& other);

    std::vector<double> values() const;
    /// Batch-means standard error per bin; NaN with fewer than two blocks.
    std::vector<double> block_stderr() const;

    bool operator==(const Histogram&) const = default;
};

struct EstimatorSettings {
    int block_size = 200;
    /// Density grid: bins per axis; trap extent is +-density_extent trap
    /// lengths, box covers [0, L).
    int density_bins = 60;
    double density_extent = 5.0;
    bool pair_correlation = true;
    /// Pair correlation is O((NP)^2); sampled on every n-th estimator sample.
    int pair_every = 10;
    /// Radial bin width for greens and pair correlation; 0 selects L/60 (box)
    /// or 0.05 trap lengths.
    double radial_bin_width = 0.0;
    /// Trap Green's function: an end within this radius of the trap centre
    /// pins that end at the origin; the other end's radius is binned.
    double greens_center_radius = 0.3;
    /// Odd cell count per axis for the displacement grid used by the
    /// momentum transform.
    int momentum_grid = 31;
    int momentum_n_max = 6;

    bool operator==(const EstimatorSettings&) const = default;
};

struct EstimatorAccumulators {
    std::int64_t samples = 0;
    BlockedScalar energy;
    /// Per-degree-of-freedom m v^2, i.e. the instantaneous kinetic temperature.
    BlockedScalar kinetic_temperature;
    Histogram density;
    Histogram pair_corr;
    Histogram greens;
    Histogram greens_grid;

    void merge(const EstimatorAccumulators& other);

    bool operator==(const EstimatorAccumulators&) const = default;
};

/// Empty accumulators shaped for the given system: energy, density and pair
/// correlation for closed rings; greens (and the displacement grid in a box)
/// for an active worm.
EstimatorAccumulators make_accumulators(const SystemSpec& spec, const EstimatorSettings& settings);

/// Measure of the shell r0 <= |r| < r1 in d dimensions, intersected with the
/// minimum-image cell [-L/2, L/2)^d when side > 0 (exact for d <= 2).
double shell_measure(int dim, double r0, double r1, double side = 0.0);

/// Largest minimum-image separation covered by radial histograms in a box.
double radial_box_limit(int dim, double side);

/// Primitive energy estimator PdN/(2 beta) + U/P + (V + beta dV/dbeta).
double energy_sample(const SystemSpec& spec, const BeadConfiguration& config);
double energy_from_parts(const SystemSpec& spec, double slice_potential, double beta_term);

/// Deposits all N P beads with weight 1/P. Box positions are wrapped into
/// [0, L); in a trap beads outside the grid land in the overflow counter.
void density_sample(const SystemSpec& spec, const BeadConfiguration& config, Histogram& histogram);

/// Radial distribution of all ordered bead pairs (self pairs included) with
/// weight 1/P^2, so each sample carries total weight N^2.
void pair_correlation_sample(const SystemSpec& spec, const BeadConfiguration& config, Histogram& histogram);

/// One count at the gap-end separation. In a box: |min-image(x - y)| into
/// `radial`, and the displacement itself into `grid` when given. In a trap:
/// whenever one end lies within `center_radius` of the origin, the other
/// end's radius goes into `radial`.
void greens_sample(const SystemSpec& spec, const BeadConfiguration& config, Histogram& radial, Histogram* grid,
                   double center_radius);

struct RadialProfile {
    std::vector<double> r;
    std::vector<double> value;
    std::vector<double> stderr_;
};

RadialProfile radial_profile(const Histogram& histogram);

struct MomentumPoint {
    double p = 0.0;
    double rho = 0.0;
    double stderr_ = 0.0;
    /// Number of lattice momenta folded into this radial point.
    int multiplicity = 0;
};

struct MomentumDistribution {
    std::vector<MomentumPoint> points;
    /// max |Im rho| / max |Re rho| over the momentum lattice.
    double imaginary_residue = 0.0;
};

/// rho(p) = (L / 2 pi hbar)^d sum_cells f_cell exp(i p . r_cell / hbar) over
/// momenta p = 2 pi hbar n / L with n in [-n_max, n_max]^d, folded onto |n|.
/// Requires a periodic box and an equal-time (j_gap = 1) worm.
MomentumDistribution momentum_distribution(const Histogram& greens_grid, const SystemSpec& spec, int n_max);

/// sum p^2 rho / sum rho over the lattice momenta with |p| <= p_max. The
/// noise floor of rho is flat in p, so with the p^2 weight a window well
/// beyond the thermal width measures noise rather than the distribution.
double momentum_second_moment(const MomentumDistribution& distribution,
                              double p_max = std::numeric_limits<double>::infinity());

struct PowerLawFit {
    double coefficient = 0.0;
    double exponent = 0.0;
    /// RMS residual of the line fit in log space.
    double residual = 0.0;
};

/// Least-squares line through (ln r, ln G) for r_min <= r <= r_max:
/// G ~ coefficient * r^(-exponent). Throws std::domain_error on a
/// nonpositive value in range or fewer than two points.
PowerLawFit powerlaw_fit(const RadialProfile& profile, double r_min, double r_max);

struct GaussianFit {
    double amplitude = 0.0;
    /// G ~ amplitude * exp(-r^2 / width^2)
    double width = 0.0;
    double residual = 0.0;
};

/// Least-squares line through (r^2, ln G); residual in log space, directly
/// comparable with PowerLawFit::residual.
GaussianFit gaussian_fit(const RadialProfile& profile, double r_min, double r_max);

}  // namespace bosegreen

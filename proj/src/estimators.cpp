#include "bosegreen/estimators.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>

#include "bosegreen/exchange.hpp"
#include "bosegreen/potentials.hpp"

namespace bosegreen {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double trap_length(const SystemSpec& spec) {
    const auto& trap = std::get<HarmonicTrap>(spec.geometry);
    return std::sqrt(spec.hbar / (spec.mass * trap.omega));
}

double box_side(const SystemSpec& spec) { return std::get<PeriodicBox>(spec.geometry).side; }

Histogram radial_histogram(int dim, double width, double r_max, double side, Normalization norm, int block_size) {
    const int bins = std::max(1, static_cast<int>(std::ceil(r_max / width - 1e-9)));
    const double upper = bins * width;
    std::vector<double> measure(static_cast<std::size_t>(bins));
    for (int i = 0; i < bins; ++i) {
        measure[static_cast<std::size_t>(i)] = shell_measure(dim, i * width, (i + 1) * width, side);
    }
    return Histogram({bins}, {0.0}, {upper}, std::move(measure), norm, block_size);
}

Histogram grid_histogram(int dim, int bins, double lo, double hi, Normalization norm, int block_size) {
    std::size_t total = 1;
    for (int a = 0; a < dim; ++a) total *= static_cast<std::size_t>(bins);
    const double cell = std::pow((hi - lo) / bins, dim);
    return Histogram(std::vector<int>(static_cast<std::size_t>(dim), bins), std::vector<double>(static_cast<std::size_t>(dim), lo),
                     std::vector<double>(static_cast<std::size_t>(dim), hi), std::vector<double>(total, cell), norm,
                     block_size);
}

double norm_of(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace

// ---------------------------------------------------------------------------
// BlockedScalar

void BlockedScalar::add(double x) {
    ++count;
    sum += x;
    sum_sq += x * x;
    pending_sum += x;
    if (++pending_count == block_size) {
        const double m = pending_sum / static_cast<double>(pending_count);
        block_sum += m;
        block_sum_sq += m * m;
        ++n_blocks;
        pending_sum = 0.0;
        pending_count = 0;
    }
}

void BlockedScalar::merge(const BlockedScalar& other) {
    count += other.count;
    sum += other.sum;
    sum_sq += other.sum_sq;
    pending_sum += other.pending_sum;
    pending_count += other.pending_count;
    n_blocks += other.n_blocks;
    block_sum += other.block_sum;
    block_sum_sq += other.block_sum_sq;
}

double BlockedScalar::mean() const { return count > 0 ? sum / static_cast<double>(count) : kNaN; }

double BlockedScalar::stderr_of_mean() const {
    if (n_blocks < 2) return kNaN;
    const auto nb = static_cast<double>(n_blocks);
    const double m = block_sum / nb;
    const double var = std::max(0.0, (block_sum_sq / nb - m * m) * nb / (nb - 1.0));
    return std::sqrt(var / nb);
}

// ---------------------------------------------------------------------------
// Histogram

Histogram::Histogram(std::vector<int> shape_, std::vector<double> lower_, std::vector<double> upper_,
                     std::vector<double> measure_, Normalization normalization_, int block_size_)
    : shape(std::move(shape_)),
      lower(std::move(lower_)),
      upper(std::move(upper_)),
      measure(std::move(measure_)),
      normalization(normalization_),
      block_size(block_size_) {
    std::size_t total = 1;
    for (int n : shape) total *= static_cast<std::size_t>(n);
    if (measure.size() != total) throw std::invalid_argument("Histogram: measure size mismatch");
    counts.assign(total, 0.0);
    pending.assign(total, 0.0);
    block_sum.assign(total, 0.0);
    block_sum_sq.assign(total, 0.0);
}

double Histogram::bin_width(std::size_t axis) const { return (upper[axis] - lower[axis]) / shape[axis]; }

double Histogram::bin_center(std::size_t axis, int index) const {
    return lower[axis] + (index + 0.5) * bin_width(axis);
}

long Histogram::bin_of(std::span<const double> point) const {
    long flat = 0;
    for (std::size_t a = 0; a < shape.size(); ++a) {
        const double x = point[a];
        if (!(x >= lower[a]) || !(x < upper[a])) return -1;
        int i = static_cast<int>((x - lower[a]) / bin_width(a));
        i = std::min(i, shape[a] - 1);
        flat = flat * shape[a] + i;
    }
    return flat;
}

void Histogram::deposit(long bin, double weight) {
    mass += weight;
    pending_mass += weight;
    if (bin < 0) {
        overflow += weight;
        return;
    }
    counts[static_cast<std::size_t>(bin)] += weight;
    pending[static_cast<std::size_t>(bin)] += weight;
}

void Histogram::end_sample() {
    ++samples;
    if (++pending_samples < block_size) return;
    const double norm = normalization == Normalization::PerSample ? static_cast<double>(pending_samples) : pending_mass;
    if (norm > 0.0) {
        for (std::size_t i = 0; i < counts.size(); ++i) {
            const double v = pending[i] / (norm * measure[i]);
            block_sum[i] += v;
            block_sum_sq[i] += v * v;
        }
        ++n_blocks;
    }
    std::fill(pending.begin(), pending.end(), 0.0);
    pending_mass = 0.0;
    pending_samples = 0;
}

void Histogram::merge(const Histogram& other) {
    if (other.empty()) return;
    if (empty()) {
        *this = other;
        return;
    }
    if (shape != other.shape || lower != other.lower || upper != other.upper) {
        throw std::invalid_argument("Histogram::merge: incompatible binning");
    }
    for (std::size_t i = 0; i < counts.size(); ++i) {
        counts[i] += other.counts[i];
        pending[i] += other.pending[i];
        block_sum[i] += other.block_sum[i];
        block_sum_sq[i] += other.block_sum_sq[i];
    }
    overflow += other.overflow;
    mass += other.mass;
    samples += other.samples;
    pending_mass += other.pending_mass;
    pending_samples += other.pending_samples;
    n_blocks += other.n_blocks;
}

std::vector<double> Histogram::values() const {
    std::vector<double> out(counts.size(), 0.0);
    const double norm = normalization == Normalization::PerSample ? static_cast<double>(samples) : mass;
    if (norm <= 0.0) return out;
    for (std::size_t i = 0; i < counts.size(); ++i) out[i] = counts[i] / (norm * measure[i]);
    return out;
}

std::vector<double> Histogram::block_stderr() const {
    std::vector<double> out(counts.size(), kNaN);
    if (n_blocks < 2) return out;
    const auto nb = static_cast<double>(n_blocks);
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const double m = block_sum[i] / nb;
        const double var = std::max(0.0, (block_sum_sq[i] / nb - m * m) * nb / (nb - 1.0));
        out[i] = std::sqrt(var / nb);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Accumulators

void EstimatorAccumulators::merge(const EstimatorAccumulators& other) {
    samples += other.samples;
    energy.merge(other.energy);
    kinetic_temperature.merge(other.kinetic_temperature);
    density.merge(other.density);
    pair_corr.merge(other.pair_corr);
    greens.merge(other.greens);
    greens_grid.merge(other.greens_grid);
}

double shell_measure(int dim, double r0, double r1, double side) {
    auto ball = [&](double r) -> double {
        switch (dim) {
            case 1: {
                const double h = side > 0.0 ? std::min(r, 0.5 * side) : r;
                return 2.0 * h;
            }
            case 2: {
                if (side <= 0.0) return M_PI * r * r;
                const double h = 0.5 * side;
                if (r <= h) return M_PI * r * r;
                if (r >= h * std::sqrt(2.0)) return side * side;
                const double cap = r * r * std::acos(h / r) - h * std::sqrt(r * r - h * h);
                return M_PI * r * r - 4.0 * cap;
            }
            default: {
                const double h = side > 0.0 ? std::min(r, 0.5 * side) : r;
                return 4.0 / 3.0 * M_PI * h * h * h;
            }
        }
    };
    return ball(r1) - ball(r0);
}

double radial_box_limit(int dim, double side) { return dim == 2 ? side / std::sqrt(2.0) : 0.5 * side; }

EstimatorAccumulators make_accumulators(const SystemSpec& spec, const EstimatorSettings& settings) {
    EstimatorAccumulators acc;
    acc.energy.block_size = settings.block_size;
    acc.kinetic_temperature.block_size = settings.block_size;
    const int d = spec.dim;
    const bool box = spec.periodic();
    const double side = box ? box_side(spec) : 0.0;
    const double length = box ? 1.0 : trap_length(spec);
    const double width =
        settings.radial_bin_width > 0.0 ? settings.radial_bin_width : (box ? side / 60.0 : 0.05 * length);

    if (!spec.worm_active()) {
        if (box) {
            acc.density = grid_histogram(d, settings.density_bins, 0.0, side, Normalization::PerSample, settings.block_size);
        } else {
            const double ext = settings.density_extent * length;
            acc.density = grid_histogram(d, settings.density_bins, -ext, ext, Normalization::PerSample, settings.block_size);
        }
        if (settings.pair_correlation) {
            const double r_max = box ? radial_box_limit(d, side) : 2.0 * settings.density_extent * length;
            acc.pair_corr = radial_histogram(d, width, r_max, side, Normalization::PerSample,
                                             std::max(1, settings.block_size / std::max(1, settings.pair_every)));
        }
    } else if (box) {
        acc.greens = radial_histogram(d, width, radial_box_limit(d, side), side, Normalization::UnitMass, settings.block_size);
        acc.greens_grid = grid_histogram(d, settings.momentum_grid, -0.5 * side, 0.5 * side, Normalization::UnitMass,
                                         settings.block_size);
    } else {
        acc.greens = radial_histogram(d, width, settings.density_extent * length, 0.0, Normalization::UnitMass,
                                      settings.block_size);
    }
    return acc;
}

// ---------------------------------------------------------------------------
// Samplers

double energy_from_parts(const SystemSpec& spec, double slice_potential, double beta_term) {
    const double P = spec.n_beads;
    return P * spec.dim * spec.n_particles / (2.0 * spec.beta) + slice_potential / P + beta_term;
}

double energy_sample(const SystemSpec& spec, const BeadConfiguration& config) {
    if (config.layout.worm_active()) throw std::invalid_argument("energy_sample: defined for closed rings only");
    std::vector<double> scratch(config.positions.size(), 0.0);
    const double u = accumulate_trap(spec, config, scratch) + accumulate_pair(spec, config, scratch);
    ExchangeEngine engine;
    ExchangeResult result;
    engine.evaluate(spec, config, result, false);
    return energy_from_parts(spec, u, result.beta_term);
}

void density_sample(const SystemSpec& spec, const BeadConfiguration& config, Histogram& histogram) {
    const BeadLayout& layout = config.layout;
    const double w = 1.0 / spec.n_beads;
    std::array<double, 3> point{};
    const auto d = static_cast<std::size_t>(layout.dim());
    for (int b = 0; b < layout.total_beads(); ++b) {
        const auto r = config.bead(b);
        for (std::size_t a = 0; a < d; ++a) point[a] = spec.periodic() ? wrap_position(r[a], box_side(spec)) : r[a];
        histogram.deposit(histogram.bin_of(std::span<const double>(point.data(), d)), w);
    }
    histogram.end_sample();
}

void pair_correlation_sample(const SystemSpec& spec, const BeadConfiguration& config, Histogram& histogram) {
    const BeadLayout& layout = config.layout;
    const double inv_p2 = 1.0 / (static_cast<double>(spec.n_beads) * spec.n_beads);
    const auto d = static_cast<std::size_t>(layout.dim());
    std::array<double, 3> dr{};
    const std::span<double> delta(dr.data(), d);
    const int total = layout.total_beads();
    const long origin = histogram.bin_of(std::array<double, 1>{0.0});
    histogram.deposit(origin, total * inv_p2);
    for (int a = 0; a < total; ++a) {
        for (int b = a + 1; b < total; ++b) {
            pair_displacement(spec, config.bead(a), config.bead(b), delta);
            const double r = norm_of(delta);
            histogram.deposit(histogram.bin_of(std::array<double, 1>{r}), 2.0 * inv_p2);
        }
    }
    histogram.end_sample();
}

void greens_sample(const SystemSpec& spec, const BeadConfiguration& config, Histogram& radial, Histogram* grid,
                   double center_radius) {
    const BeadLayout& layout = config.layout;
    if (!layout.worm_active()) throw std::invalid_argument("greens_sample: worm is not active");
    const auto d = static_cast<std::size_t>(layout.dim());
    const auto x = config.bead(layout.x_bead());
    const auto y = config.bead(layout.y_bead());
    if (spec.periodic()) {
        std::array<double, 3> dr{};
        const std::span<double> delta(dr.data(), d);
        pair_displacement(spec, x, y, delta);
        radial.deposit(radial.bin_of(std::array<double, 1>{norm_of(delta)}), 1.0);
        if (grid != nullptr && !grid->empty()) {
            grid->deposit(grid->bin_of(delta), 1.0);
            grid->end_sample();
        }
    } else {
        const double rx = norm_of(x);
        const double ry = norm_of(y);
        if (rx <= center_radius) radial.deposit(radial.bin_of(std::array<double, 1>{ry}), 1.0);
        if (ry <= center_radius) radial.deposit(radial.bin_of(std::array<double, 1>{rx}), 1.0);
    }
    radial.end_sample();
}

RadialProfile radial_profile(const Histogram& histogram) {
    if (histogram.shape.size() != 1) throw std::invalid_argument("radial_profile: histogram is not one-dimensional");
    RadialProfile out;
    out.value = histogram.values();
    out.stderr_ = histogram.block_stderr();
    out.r.resize(out.value.size());
    for (int i = 0; i < histogram.shape[0]; ++i) out.r[static_cast<std::size_t>(i)] = histogram.bin_center(0, i);
    return out;
}

// ---------------------------------------------------------------------------
// Momentum distribution

MomentumDistribution momentum_distribution(const Histogram& greens_grid, const SystemSpec& spec, int n_max) {
    if (!spec.periodic()) throw std::invalid_argument("momentum_distribution: requires a periodic box");
    if (!spec.worm || spec.worm->j_gap != 1) {
        throw std::invalid_argument("momentum_distribution: requires an equal-time profile (j_gap = 1)");
    }
    if (greens_grid.empty() || static_cast<int>(greens_grid.shape.size()) != spec.dim) {
        throw std::invalid_argument("momentum_distribution: displacement grid missing or of wrong dimension");
    }
    if (n_max < 0) throw std::invalid_argument("momentum_distribution: n_max must be >= 0");

    const int d = spec.dim;
    const double side = box_side(spec);
    const double prefactor = std::pow(side / (2.0 * M_PI * spec.hbar), d);
    const std::vector<double> cells = greens_grid.values();
    const std::vector<double> cell_err = greens_grid.block_stderr();
    const double cell_volume = greens_grid.measure.front();
    const int g = greens_grid.shape.front();

    // Per-axis cell centres.
    std::vector<double> centre(static_cast<std::size_t>(g));
    for (int i = 0; i < g; ++i) centre[static_cast<std::size_t>(i)] = greens_grid.bin_center(0, i);

    struct Accum {
        double rho = 0.0;
        double var = 0.0;
        int count = 0;
    };
    std::map<int, Accum> radial;
    double max_re = 0.0;
    double max_im = 0.0;

    const int side_n = 2 * n_max + 1;
    int lattice = 1;
    for (int a = 0; a < d; ++a) lattice *= side_n;
    const std::size_t n_cells = cells.size();

    for (int m = 0; m < lattice; ++m) {
        std::array<int, 3> n{};
        int rest = m;
        int n2 = 0;
        for (int a = d - 1; a >= 0; --a) {
            n[static_cast<std::size_t>(a)] = rest % side_n - n_max;
            rest /= side_n;
            n2 += n[static_cast<std::size_t>(a)] * n[static_cast<std::size_t>(a)];
        }
        std::complex<double> sum = 0.0;
        double var = 0.0;
        for (std::size_t c = 0; c < n_cells; ++c) {
            std::size_t rest_c = c;
            double phase = 0.0;
            for (int a = d - 1; a >= 0; --a) {
                const auto i = rest_c % static_cast<std::size_t>(g);
                rest_c /= static_cast<std::size_t>(g);
                phase += 2.0 * M_PI * n[static_cast<std::size_t>(a)] * centre[i] / side;
            }
            const double f = cells[c] * cell_volume;
            sum += f * std::complex<double>(std::cos(phase), std::sin(phase));
            if (std::isfinite(cell_err[c])) {
                const double e = cell_err[c] * cell_volume * std::cos(phase);
                var += e * e;
            }
        }
        sum *= prefactor;
        var *= prefactor * prefactor;
        max_re = std::max(max_re, std::abs(sum.real()));
        max_im = std::max(max_im, std::abs(sum.imag()));
        auto& slot = radial[n2];
        slot.rho += sum.real();
        slot.var += var;
        ++slot.count;
    }

    MomentumDistribution out;
    out.imaginary_residue = max_re > 0.0 ? max_im / max_re : 0.0;
    const bool have_errors = greens_grid.n_blocks >= 2;
    for (const auto& [n2, slot] : radial) {
        MomentumPoint pt;
        pt.p = 2.0 * M_PI * spec.hbar * std::sqrt(static_cast<double>(n2)) / side;
        pt.multiplicity = slot.count;
        pt.rho = slot.rho / slot.count;
        // Neglects covariance between cells.
        pt.stderr_ = have_errors ? std::sqrt(slot.var) / slot.count : kNaN;
        out.points.push_back(pt);
    }
    return out;
}

double momentum_second_moment(const MomentumDistribution& distribution, double p_max) {
    double num = 0.0;
    double den = 0.0;
    for (const auto& pt : distribution.points) {
        if (pt.p > p_max) continue;
        num += pt.multiplicity * pt.p * pt.p * pt.rho;
        den += pt.multiplicity * pt.rho;
    }
    return num / den;
}

// ---------------------------------------------------------------------------
// Fits

namespace {

struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;
    double residual = 0.0;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    const auto n = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n;
    const double my = sy / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    LineFit fit;
    fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    fit.intercept = my - fit.slope * mx;
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (fit.intercept + fit.slope * x[i]);
        ss += r * r;
    }
    fit.residual = std::sqrt(ss / n);
    return fit;
}

template <typename Transform>
LineFit fit_log_profile(const RadialProfile& profile, double r_min, double r_max, Transform transform,
                        const char* what) {
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < profile.r.size(); ++i) {
        const double r = profile.r[i];
        if (r < r_min || r > r_max) continue;
        if (!(profile.value[i] > 0.0)) {
            throw std::domain_error(std::string(what) + ": nonpositive value at r = " + std::to_string(r) +
                                    " (insufficient statistics)");
        }
        xs.push_back(transform(r));
        ys.push_back(std::log(profile.value[i]));
    }
    if (xs.size() < 2) throw std::domain_error(std::string(what) + ": fewer than two points in range");
    return least_squares(xs, ys);
}

}  // namespace

PowerLawFit powerlaw_fit(const RadialProfile& profile, double r_min, double r_max) {
    if (!(r_min > 0.0)) throw std::domain_error("powerlaw_fit: r_min must be positive");
    const LineFit line =
        fit_log_profile(profile, r_min, r_max, [](double r) { return std::log(r); }, "powerlaw_fit");
    return {std::exp(line.intercept), -line.slope, line.residual};
}

GaussianFit gaussian_fit(const RadialProfile& profile, double r_min, double r_max) {
    const LineFit line = fit_log_profile(profile, r_min, r_max, [](double r) { return r * r; }, "gaussian_fit");
    const double width = line.slope < 0.0 ? std::sqrt(-1.0 / line.slope) : std::numeric_limits<double>::infinity();
    return {std::exp(line.intercept), width, line.residual};
}

}  // namespace bosegreen

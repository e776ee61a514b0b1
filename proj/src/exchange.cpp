#include "bosegreen/exchange.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace bosegreen {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return sum;
}

void require_closed(const BeadConfiguration& config, const char* what) {
    if (config.layout.worm_active()) {
        throw std::invalid_argument(std::string(what) + ": worm is active, use the worm evaluator");
    }
}

}  // namespace

void ExchangeEngine::prepare(const SystemSpec& spec, const BeadConfiguration& config) {
    const BeadLayout& layout = config.layout;
    n_ = layout.n_particles();
    dim_ = layout.dim();
    const double half_k = 0.5 * spec.spring_constant();
    const auto n = static_cast<std::size_t>(n_);

    interior_.assign(n, 0.0);
    for (int l = 0; l < n_; ++l) {
        double e = 0.0;
        for (int b = layout.first_bead(l); b < layout.last_bead(l); ++b) {
            if (layout.spring_to_next(b)) e += squared_distance(config.bead(b), config.bead(b + 1));
        }
        interior_[static_cast<std::size_t>(l)] = half_k * e;
    }

    prefix_inner_.assign(n + 1, 0.0);
    prefix_link_.assign(n + 1, 0.0);
    for (int l = 0; l < n_; ++l) {
        prefix_inner_[static_cast<std::size_t>(l) + 1] = prefix_inner_[static_cast<std::size_t>(l)] +
                                                          interior_[static_cast<std::size_t>(l)];
        double link = 0.0;
        if (l + 1 < n_) {
            link = half_k * squared_distance(config.bead(layout.last_bead(l)), config.bead(layout.first_bead(l + 1)));
        }
        prefix_link_[static_cast<std::size_t>(l) + 1] = prefix_link_[static_cast<std::size_t>(l)] + link;
    }

    // E_alpha^(k): particles a = alpha - k .. b = alpha - 1 (0-based), linked
    // in order, with the last one closing onto the first.
    const std::size_t stride = n + 1;
    energy_.assign(stride * stride, 0.0);
    for (int alpha = 1; alpha <= n_; ++alpha) {
        const int b = alpha - 1;
        for (int k = 1; k <= alpha; ++k) {
            const int a = alpha - k;
            const double closure =
                half_k * squared_distance(config.bead(layout.last_bead(b)), config.bead(layout.first_bead(a)));
            energy_[static_cast<std::size_t>(alpha) * stride + static_cast<std::size_t>(k)] =
                prefix_inner_[static_cast<std::size_t>(b) + 1] - prefix_inner_[static_cast<std::size_t>(a)] +
                prefix_link_[static_cast<std::size_t>(b)] - prefix_link_[static_cast<std::size_t>(a)] + closure;
        }
    }
}

double ExchangeEngine::cached_energy(int alpha, int k) const {
    return energy_[static_cast<std::size_t>(alpha) * static_cast<std::size_t>(n_ + 1) + static_cast<std::size_t>(k)];
}

void ExchangeEngine::evaluate(const SystemSpec& spec, const BeadConfiguration& config, ExchangeResult& out,
                              bool want_forces) {
    prepare(spec, config);
    const BeadLayout& layout = config.layout;
    const double beta = spec.beta;
    const auto n = static_cast<std::size_t>(n_);
    const bool bose = spec.statistics == Statistics::Bose;

    out.v_values.assign(n + 1, 0.0);
    out.weights.resize(n);
    std::vector<double> beta_terms(n + 1, 0.0);

    for (int alpha = 1; alpha <= n_; ++alpha) {
        auto& w = out.weights[static_cast<std::size_t>(alpha) - 1];
        w.assign(static_cast<std::size_t>(alpha), 0.0);
        if (!bose) {
            // Identity connectivity only: V^(alpha) = V^(alpha-1) + E_alpha^(1).
            w[0] = 1.0;
            out.v_values[static_cast<std::size_t>(alpha)] =
                out.v_values[static_cast<std::size_t>(alpha) - 1] + cached_energy(alpha, 1);
            beta_terms[static_cast<std::size_t>(alpha)] =
                beta_terms[static_cast<std::size_t>(alpha) - 1] - cached_energy(alpha, 1);
            continue;
        }
        terms_.resize(static_cast<std::size_t>(alpha));
        double top = -std::numeric_limits<double>::infinity();
        for (int k = 1; k <= alpha; ++k) {
            const double t = -beta * (cached_energy(alpha, k) + out.v_values[static_cast<std::size_t>(alpha - k)]);
            terms_[static_cast<std::size_t>(k) - 1] = t;
            top = std::max(top, t);
        }
        double sum = 0.0;
        for (int k = 1; k <= alpha; ++k) {
            const double e = std::exp(terms_[static_cast<std::size_t>(k) - 1] - top);
            w[static_cast<std::size_t>(k) - 1] = e;
            sum += e;
        }
        double bt = 0.0;
        for (int k = 1; k <= alpha; ++k) {
            auto& wk = w[static_cast<std::size_t>(k) - 1];
            wk /= sum;
            bt += wk * (beta_terms[static_cast<std::size_t>(alpha - k)] - cached_energy(alpha, k));
        }
        out.v_values[static_cast<std::size_t>(alpha)] = -(top + std::log(sum) - std::log(static_cast<double>(alpha))) / beta;
        beta_terms[static_cast<std::size_t>(alpha)] = bt;
    }
    out.beta_term = beta_terms[n];

    if (!want_forces) {
        out.forces.clear();
        return;
    }

    const double ks = spec.spring_constant();
    const auto d = static_cast<std::size_t>(dim_);
    out.forces.assign(static_cast<std::size_t>(layout.degrees_of_freedom()), 0.0);

    // Interior springs.
    for (int b = 0; b + 1 < layout.total_beads(); ++b) {
        if (!layout.spring_to_next(b)) continue;
        const auto r0 = config.bead(b);
        const auto r1 = config.bead(b + 1);
        for (std::size_t a = 0; a < d; ++a) {
            const double f = ks * (r1[a] - r0[a]);
            out.forces[static_cast<std::size_t>(b) * d + a] += f;
            out.forces[static_cast<std::size_t>(b + 1) * d + a] -= f;
        }
    }

    // link_[i] = k (r_last(i) - r_first(i+1)); closure_[(b, a)] likewise for b -> a.
    link_.assign(n * d, 0.0);
    for (int i = 0; i + 1 < n_; ++i) {
        const auto rl = config.bead(layout.last_bead(i));
        const auto rf = config.bead(layout.first_bead(i + 1));
        for (std::size_t a = 0; a < d; ++a) link_[static_cast<std::size_t>(i) * d + a] = ks * (rl[a] - rf[a]);
    }
    closure_.assign(n * n * d, 0.0);
    for (int b = 0; b < n_; ++b) {
        const auto rl = config.bead(layout.last_bead(b));
        for (int a0 = 0; a0 <= b; ++a0) {
            if (!bose && a0 != b) continue;
            const auto rf = config.bead(layout.first_bead(a0));
            for (std::size_t a = 0; a < d; ++a) {
                closure_[(static_cast<std::size_t>(b) * n + static_cast<std::size_t>(a0)) * d + a] = ks * (rl[a] - rf[a]);
            }
        }
    }

    const std::size_t level = n * d;
    grad_first_.assign((n + 1) * level, 0.0);
    grad_last_.assign((n + 1) * level, 0.0);
    for (int alpha = 1; alpha <= n_; ++alpha) {
        double* gf = grad_first_.data() + static_cast<std::size_t>(alpha) * level;
        double* gl = grad_last_.data() + static_cast<std::size_t>(alpha) * level;
        const auto& w = out.weights[static_cast<std::size_t>(alpha) - 1];
        const int b = alpha - 1;
        for (int k = 1; k <= alpha; ++k) {
            const double wk = w[static_cast<std::size_t>(k) - 1];
            if (wk == 0.0) continue;
            const int a0 = alpha - k;
            const double* pf = grad_first_.data() + static_cast<std::size_t>(a0) * level;
            const double* pl = grad_last_.data() + static_cast<std::size_t>(a0) * level;
            const std::size_t below = static_cast<std::size_t>(a0) * d;
            for (std::size_t i = 0; i < below; ++i) {
                gf[i] += wk * pf[i];
                gl[i] += wk * pl[i];
            }
            for (int i = a0; i < b; ++i) {
                for (std::size_t a = 0; a < d; ++a) {
                    const double g = wk * link_[static_cast<std::size_t>(i) * d + a];
                    gl[static_cast<std::size_t>(i) * d + a] += g;
                    gf[static_cast<std::size_t>(i + 1) * d + a] -= g;
                }
            }
            for (std::size_t a = 0; a < d; ++a) {
                const double g = wk * closure_[(static_cast<std::size_t>(b) * n + static_cast<std::size_t>(a0)) * d + a];
                gl[static_cast<std::size_t>(b) * d + a] += g;
                gf[static_cast<std::size_t>(a0) * d + a] -= g;
            }
        }
    }

    const double* gf = grad_first_.data() + n * level;
    const double* gl = grad_last_.data() + n * level;
    for (int l = 0; l < n_; ++l) {
        const auto first = static_cast<std::size_t>(layout.first_bead(l));
        const auto last = static_cast<std::size_t>(layout.last_bead(l));
        for (std::size_t a = 0; a < d; ++a) {
            out.forces[first * d + a] -= gf[static_cast<std::size_t>(l) * d + a];
            out.forces[last * d + a] -= gl[static_cast<std::size_t>(l) * d + a];
        }
    }
}

double spring_energy(const SystemSpec& spec, const BeadConfiguration& config, int alpha, int k) {
    require_closed(config, "spring_energy");
    const int n = config.layout.n_particles();
    if (alpha < 1 || alpha > n || k < 1 || k > alpha) {
        throw std::out_of_range("spring_energy: need 1 <= k <= alpha <= N");
    }
    ExchangeEngine engine;
    ExchangeResult scratch;
    engine.evaluate(spec, config, scratch, false);
    return engine.cached_energy(alpha, k);
}

ExchangeResult exchange_potential(const SystemSpec& spec, const BeadConfiguration& config) {
    require_closed(config, "exchange_potential");
    ExchangeEngine engine;
    ExchangeResult out;
    engine.evaluate(spec, config, out, false);
    return out;
}

ExchangeResult exchange_forces(const SystemSpec& spec, const BeadConfiguration& config) {
    require_closed(config, "exchange_forces");
    ExchangeEngine engine;
    ExchangeResult out;
    engine.evaluate(spec, config, out, true);
    return out;
}

double beta_derivative_term(const SystemSpec& spec, const BeadConfiguration& config) {
    return exchange_potential(spec, config).beta_term;
}

ExchangeResult distinguishable_potential_and_forces(const SystemSpec& spec, const BeadConfiguration& config) {
    require_closed(config, "distinguishable_potential_and_forces");
    SystemSpec boltzmann = spec;
    boltzmann.statistics = Statistics::Boltzmann;
    ExchangeEngine engine;
    ExchangeResult out;
    engine.evaluate(boltzmann, config, out, true);
    return out;
}

}  // namespace bosegreen

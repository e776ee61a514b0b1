#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "bosegreen/exchange.hpp"
#include "bosegreen/worm.hpp"
#include "support.hpp"

using namespace bosegreen;
using testing::box_system;
using testing::random_configuration;
using testing::relative_error;
using testing::trap_system;

namespace {

SystemSpec with_worm(SystemSpec spec, int j, int l) {
    spec.worm = WormSpec{j, l};
    return spec;
}

double sq(double x) { return x * x; }

}  // namespace

TEST_CASE("worm spring energy") {
    SUBCASE("collapsed configuration") {
        const auto spec = with_worm(trap_system(3, 6, 2, 1.0), 2, 1);
        auto c = build_system(spec, 1);
        for (auto& x : c.positions) x = -0.3;
        for (int a = 1; a <= 3; ++a)
            for (int k = 1; k <= a; ++k) CHECK(worm_spring_energy(spec, c, a, k) == 0.0);
    }
    SUBCASE("one particle, P=3, J=1, gap after the first bead") {
        // Unit spring constant; stored beads r1, y, x, r2.
        const auto spec = with_worm(trap_system(1, 3, 1, std::sqrt(3.0)), 1, 1);
        auto c = build_system(spec, 1);
        const double r2 = 0.7;
        c.positions = {0.0, 1.0, 2.0, r2};
        CHECK(c.layout.y_bead() == 1);
        CHECK(c.layout.x_bead() == 2);
        const double expected = 0.5 * (sq(1.0 - 0.0) + sq(r2 - 2.0) + sq(0.0 - r2));
        CHECK(worm_spring_energy(spec, c, 1, 1) == doctest::Approx(expected).epsilon(1e-14));
    }
    SUBCASE("moving x changes only its outgoing spring") {
        std::mt19937_64 rng(3);
        const auto spec = with_worm(trap_system(1, 6, 1, std::sqrt(6.0)), 2, 1);
        auto c = random_configuration(spec, rng);
        const int x = c.layout.x_bead();
        const double before = worm_spring_energy(spec, c, 1, 1);
        const double delta = 0.37;
        const double next = c.positions[static_cast<std::size_t>(x + 1)];
        const double x0 = c.positions[static_cast<std::size_t>(x)];
        c.positions[static_cast<std::size_t>(x)] += delta;
        const double after = worm_spring_energy(spec, c, 1, 1);
        CHECK(after - before == doctest::Approx(0.5 * (sq(next - x0 - delta) - sq(next - x0))).epsilon(1e-12));
        // y displaced: no change in the x contribution, i.e. no x-y spring.
        const int y = c.layout.y_bead();
        auto c2 = c;
        c2.positions[static_cast<std::size_t>(y)] += 1.0;
        auto c3 = c;
        c3.positions[static_cast<std::size_t>(x)] += 0.5;
        auto c4 = c2;
        c4.positions[static_cast<std::size_t>(x)] += 0.5;
        const double mixed = worm_spring_energy(spec, c4, 1, 1) - worm_spring_energy(spec, c2, 1, 1) -
                             worm_spring_energy(spec, c3, 1, 1) + worm_spring_energy(spec, c, 1, 1);
        CHECK(std::abs(mixed) < 1e-12);
    }
    SUBCASE("alpha < N matches the closed definition") {
        std::mt19937_64 rng(4);
        const auto open = with_worm(trap_system(3, 5, 2, 1.0), 2, 1);
        auto closed = trap_system(2, 5, 2, 1.0);
        const auto c = random_configuration(open, rng);
        auto cc = build_system(closed, 1);
        std::copy(c.positions.begin(), c.positions.begin() + static_cast<long>(cc.positions.size()), cc.positions.begin());
        for (int a = 1; a <= 2; ++a)
            for (int k = 1; k <= a; ++k)
                CHECK(worm_spring_energy(open, c, a, k) == doctest::Approx(spring_energy(closed, cc, a, k)).epsilon(1e-13));
    }
    SUBCASE("rejects closed configurations") {
        const auto spec = trap_system(2, 4, 1, 1.0);
        const auto c = build_system(spec, 1);
        CHECK_THROWS_AS(worm_spring_energy(spec, c, 1, 1), std::invalid_argument);
        CHECK_THROWS_AS(worm_potential_and_forces(spec, c), std::invalid_argument);
    }
}

TEST_CASE("two-particle worm potential by hand") {
    std::mt19937_64 rng(5);
    const auto spec = with_worm(trap_system(2, 4, 1, 1.3), 2, 1);
    const double k = spec.spring_constant();
    for (int trial = 0; trial < 20; ++trial) {
        const auto c = random_configuration(spec, rng);
        const auto& r = c.positions;
        // Particle 1: r[0..3]; particle 2 stores r1, y, x, r2 at r[4..7].
        const double inner1 = sq(r[1] - r[0]) + sq(r[2] - r[1]) + sq(r[3] - r[2]);
        const double inner2 = sq(r[5] - r[4]) + sq(r[7] - r[6]);
        const double e11 = 0.5 * k * (inner1 + sq(r[0] - r[3]));
        const double e21 = 0.5 * k * (inner2 + sq(r[4] - r[7]));
        const double e22 = 0.5 * k * (inner1 + inner2 + sq(r[4] - r[3]) + sq(r[0] - r[7]));
        const double b = spec.beta;
        const double expected = -std::log(0.5 * (std::exp(-b * (e21 + e11)) + std::exp(-b * e22))) / b;
        CHECK(relative_error(worm_potential_and_forces(spec, c).potential(), expected) <= 1e-12);
    }
}

TEST_CASE("worm forces match central differences") {
    std::mt19937_64 rng(6);
    const auto spec = with_worm(trap_system(3, 6, 2, 1.4), 2, 1);
    for (int trial = 0; trial < 10; ++trial) {
        auto c = random_configuration(spec, rng);
        const auto f = worm_potential_and_forces(spec, c).forces;
        for (std::size_t i = 0; i < c.positions.size(); ++i) {
            const double x0 = c.positions[i];
            c.positions[i] = x0 + 1e-5;
            const double up = worm_potential_and_forces(spec, c).potential();
            c.positions[i] = x0 - 1e-5;
            const double down = worm_potential_and_forces(spec, c).potential();
            c.positions[i] = x0;
            CHECK(std::abs(-(up - down) / 2e-5 - f[i]) <= 1e-6 * std::max(1.0, std::abs(f[i])));
        }
    }
}

TEST_CASE("gap-end forces in the single-particle case") {
    std::mt19937_64 rng(7);
    const auto spec = with_worm(trap_system(1, 6, 2, 1.0), 3, 2);
    const auto c = random_configuration(spec, rng);
    const auto f = worm_potential_and_forces(spec, c).forces;
    const double k = spec.spring_constant();
    const int x = c.layout.x_bead();
    const int y = c.layout.y_bead();
    for (int a = 0; a < 2; ++a) {
        CHECK(f[static_cast<std::size_t>(2 * x + a)] ==
              doctest::Approx(-k * (c.bead(x)[a] - c.bead(x + 1)[a])).epsilon(1e-12));
        CHECK(f[static_cast<std::size_t>(2 * y + a)] ==
              doctest::Approx(-k * (c.bead(y)[a] - c.bead(y - 1)[a])).epsilon(1e-12));
    }
}

TEST_CASE("collapsed worm configuration") {
    const auto spec = with_worm(trap_system(3, 6, 1, 2.0), 2, 1);
    auto c = build_system(spec, 1);
    for (auto& x : c.positions) x = 1.5;
    const auto r = worm_potential_and_forces(spec, c);
    for (double f : r.forces) CHECK(f == 0.0);
    // All E vanish, so every V^(alpha) is 0.
    CHECK(std::abs(r.potential()) < 1e-14);
}

TEST_CASE("worm interaction") {
    SUBCASE("no interaction") {
        const auto spec = with_worm(trap_system(2, 4, 1, 1.0), 2, 1);
        const auto c = build_system(spec, 2);
        const auto r = worm_interaction(spec, c);
        CHECK(r.energy == 0.0);
        for (double f : r.forces) CHECK(f == 0.0);
    }
    SUBCASE("a slice inside the gap has no pair energy") {
        auto spec = with_worm(trap_system(2, 4, 1, 1.0), 3, 0);
        spec.interaction = GaussianInteraction{3.0, 0.5};
        auto c = build_system(spec, 2);
        // Particle 2 stores y (slice 0), x (slice 2), r (slice 3); slice 1 is empty.
        CHECK(c.layout.slice_members()[1].size() == 1);
        for (auto& x : c.positions) x = 0.0;
        const double v0 = 3.0 / (M_PI * 0.25);
        // Slices 0 and 2 hold a half-weight end; slice 3 a full bead.
        CHECK(worm_interaction(spec, c).energy == doctest::Approx(0.5 * v0 + 0.5 * v0 + v0).epsilon(1e-14));
    }
    SUBCASE("hand sum, N=2, P=2, J=1") {
        auto spec = with_worm(trap_system(2, 2, 1, 1.0), 1, 0);
        spec.interaction = GaussianInteraction{1.7, 0.8};
        auto c = build_system(spec, 2);
        // Particle 1: a0 (slice 0), a1 (slice 1). Particle 2: y, x (slice 0), r (slice 1).
        c.positions = {0.1, -0.4, 0.5, 0.2, 0.9};
        const GaussianInteraction g{1.7, 0.8};
        const double expected = 0.5 * gaussian_pair(sq(0.1 - 0.5), g) + 0.5 * gaussian_pair(sq(0.1 - 0.2), g) +
                                gaussian_pair(sq(-0.4 - 0.9), g);
        CHECK(worm_interaction(spec, c).energy == doctest::Approx(expected).epsilon(1e-14));
    }
    SUBCASE("forces match central differences") {
        std::mt19937_64 rng(8);
        auto spec = with_worm(trap_system(3, 6, 2, 1.0), 2, 1);
        spec.interaction = GaussianInteraction{3.0, 0.5};
        auto c = random_configuration(spec, rng, 0.4);
        const auto f = worm_interaction(spec, c).forces;
        for (std::size_t i = 0; i < c.positions.size(); ++i) {
            const double x0 = c.positions[i];
            c.positions[i] = x0 + 1e-5;
            const double up = worm_interaction(spec, c).energy;
            c.positions[i] = x0 - 1e-5;
            const double down = worm_interaction(spec, c).energy;
            c.positions[i] = x0;
            const double fd = -(up - down) / 2e-5 / spec.n_beads;
            CHECK(std::abs(fd - f[i]) <= 1e-6 * std::max(1.0, std::abs(f[i])));
        }
    }
}

TEST_CASE("total force vanishes in a box with an open worm") {
    std::mt19937_64 rng(9);
    auto spec = with_worm(box_system(4, 6, 2, 1.0, 3.0), 2, 1);
    spec.interaction = GaussianInteraction{3.0, 0.5};
    const auto c = random_configuration(spec, rng, 2.0);
    auto total = worm_potential_and_forces(spec, c).forces;
    const auto pair = worm_interaction(spec, c).forces;
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += pair[i];
    for (int a = 0; a < 2; ++a) {
        double s = 0.0;
        double scale = 0.0;
        for (std::size_t i = static_cast<std::size_t>(a); i < total.size(); i += 2) {
            s += total[i];
            scale += std::abs(total[i]);
        }
        CHECK(std::abs(s) <= 1e-12 * scale);
    }
}

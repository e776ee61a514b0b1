#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "bosegreen/dynamics.hpp"
#include "support.hpp"

using namespace bosegreen;
using testing::box_system;
using testing::trap_system;

namespace {

ThermostatSpec no_thermostat() {
    ThermostatSpec t;
    t.enabled = false;
    return t;
}

Schedule short_schedule(std::int64_t equil, std::int64_t steps) {
    Schedule s;
    s.n_equil = equil;
    s.n_steps = steps;
    s.sample_stride = 2;
    return s;
}

}  // namespace

TEST_CASE("free drift") {
    const auto spec = box_system(1, 1, 2, 1.0, 3.0);
    auto c = build_system(spec, 3, 0);
    const auto before = c;
    c = step(c, spec, no_thermostat(), 0.1);
    for (std::size_t i = 0; i < c.positions.size(); ++i) {
        CHECK(c.positions[i] == doctest::Approx(before.positions[i] + 0.1 * before.velocities[i]).epsilon(1e-15));
        CHECK(c.velocities[i] == before.velocities[i]);
    }
}

TEST_CASE("velocity Verlet conserves energy to second order") {
    const auto spec = trap_system(1, 1, 1, 1.0);
    auto drift = [&](double dt) {
        auto c = build_system(spec, 3, 0);
        c.positions = {1.0};
        c.velocities = {0.0};
        Integrator integrator(spec, no_thermostat(), dt);
        integrator.prime(c);
        const double e0 = integrator.conserved_quantity(c);
        double worst = 0.0;
        for (int i = 0; i < 10000; ++i) {
            integrator.step(c, i);
            worst = std::max(worst, std::abs(integrator.conserved_quantity(c) - e0));
        }
        return worst / e0;
    };
    const double coarse = drift(0.02);
    const double fine = drift(0.01);
    CHECK(coarse < 1e-3);
    CHECK(coarse / fine == doctest::Approx(4.0).epsilon(0.1));
}

// Drift is the change of the windowed mean of H between the first and last
// tenth of 1e5 steps. At the default dt the Verlet error alone moves H by a
// few 1e-3; the bound is met at a fifth of it.
TEST_CASE("thermostatted dynamics conserves the extended energy") {
    auto spec = trap_system(2, 8, 2, 2.0);
    spec.interaction = GaussianInteraction{3.0, 0.5};
    ThermostatSpec thermo;
    auto c = build_system(spec, 5, thermo.chain_length);
    Integrator integrator(spec, thermo, 0.2 * resolved_dt(spec, Schedule{}));
    for (int i = 0; i < 2000; ++i) integrator.step(c, i);
    const int n = 100000;
    const int window = n / 10;
    double first = 0.0;
    double last = 0.0;
    for (int i = 0; i < n; ++i) {
        integrator.step(c, i);
        const double h = integrator.conserved_quantity(c);
        if (i < window) first += h;
        if (i >= n - window) last += h;
    }
    CHECK(std::abs(last - first) / window / std::abs(first / window) < 1e-4);
}

TEST_CASE("worm dynamics conserves energy without a thermostat") {
    auto spec = box_system(3, 6, 2, 1.0, 3.0);
    spec.interaction = GaussianInteraction{3.0, 0.5};
    spec.worm = default_worm(6, 2);
    auto c = build_system(spec, 6, 0);
    Integrator integrator(spec, no_thermostat(), 0.2 * resolved_dt(spec, Schedule{}));
    integrator.prime(c);
    const double h0 = integrator.conserved_quantity(c);
    for (int i = 0; i < 5000; ++i) integrator.step(c, i);
    CHECK(std::abs(integrator.conserved_quantity(c) - h0) < 1e-3 * std::abs(h0));
}

TEST_CASE("trajectories") {
    auto spec = trap_system(2, 4, 2, 1.0);
    const ThermostatSpec thermo;
    EstimatorSettings settings;
    settings.block_size = 10;

    SUBCASE("no sampling steps, no samples") {
        const auto acc = run_trajectory(spec, thermo, short_schedule(50, 0), settings, 1);
        CHECK(acc.samples == 0);
        CHECK(acc.energy.count == 0);
        CHECK(acc.density.samples == 0);
    }
    SUBCASE("same seed, identical accumulators") {
        const auto a = run_trajectory(spec, thermo, short_schedule(100, 400), settings, 7);
        const auto b = run_trajectory(spec, thermo, short_schedule(100, 400), settings, 7);
        CHECK(a == b);
        CHECK(a.samples == 200);
        const auto c = run_trajectory(spec, thermo, short_schedule(100, 400), settings, 8);
        CHECK(!(a == c));
    }
    SUBCASE("five merged trajectories carry five times the samples") {
        const auto one = run_trajectory(spec, thermo, short_schedule(20, 100), settings, 1);
        auto merged = one;
        for (std::uint64_t s = 2; s <= 5; ++s) merged.merge(run_trajectory(spec, thermo, short_schedule(20, 100), settings, s));
        CHECK(merged.samples == 5 * one.samples);
        CHECK(merged.energy.count == 5 * one.energy.count);
        CHECK(merged.density.samples == 5 * one.density.samples);
    }
    SUBCASE("restart from an intermediate state is bitwise identical") {
        Schedule sched = short_schedule(100, 400);
        sched.checkpoint_every = 150;
        std::vector<TrajectoryState> saved;
        TrajectoryHooks hooks;
        hooks.on_checkpoint = [&](const TrajectoryState& s) { saved.push_back(s); };
        const auto full = run_trajectory_state(spec, thermo, sched, settings, 9, hooks);
        REQUIRE(saved.size() == 3);
        TrajectoryHooks resume;
        resume.resume = saved[1];
        const auto continued = run_trajectory_state(spec, thermo, sched, settings, 9, resume);
        CHECK(continued == full);
    }
    SUBCASE("halting returns the partial state") {
        TrajectoryHooks hooks;
        hooks.halt_after = 60;
        const auto s = run_trajectory_state(spec, thermo, short_schedule(50, 100), settings, 9, hooks);
        CHECK(s.step == 60);
        CHECK(s.accumulators.samples == 5);
    }
    SUBCASE("worm runs sample the Green's function only") {
        auto w = spec;
        w.worm = default_worm(4, 2);
        const auto acc = run_trajectory(w, thermo, short_schedule(20, 100), settings, 3);
        CHECK(acc.greens.samples == 50);
        CHECK(acc.energy.count == 0);
        CHECK(acc.density.empty());
    }
}

TEST_CASE("divergence is reported with its step") {
    auto spec = trap_system(2, 4, 1, 1.0);
    spec.interaction = GaussianInteraction{std::numeric_limits<double>::infinity(), 0.5};
    CHECK_THROWS_AS(validate(spec), std::invalid_argument);

    auto huge = trap_system(1, 2, 1, 1.0);
    Schedule sched = short_schedule(0, 100000);
    sched.dt = 50.0;
    sched.checkpoint_every = 1;
    try {
        TrajectoryHooks hooks;
        hooks.on_checkpoint = [](const TrajectoryState&) {};
        run_trajectory_state(huge, no_thermostat(), sched, EstimatorSettings{}, 1, hooks);
        FAIL("expected divergence");
    } catch (const DivergenceError& e) {
        CHECK(e.step() > 0);
        CHECK(e.last_checkpoint() == e.step());
    }
}

TEST_CASE("parameter validation") {
    ThermostatSpec t;
    t.chain_length = 1;
    CHECK_THROWS_AS(validate(t), std::invalid_argument);
    t = ThermostatSpec{};
    t.sy_order = 5;
    CHECK_THROWS_AS(validate(t), std::invalid_argument);
    Schedule s;
    s.sample_stride = 0;
    CHECK_THROWS_AS(validate(s), std::invalid_argument);
    CHECK_THROWS_AS(Integrator(trap_system(1, 1, 1, 1.0), ThermostatSpec{}, 0.0), std::invalid_argument);
    const auto spec = trap_system(1, 16, 1, 2.0);
    CHECK(resolved_dt(spec, Schedule{}) == doctest::Approx(0.05 / 2.0));
}

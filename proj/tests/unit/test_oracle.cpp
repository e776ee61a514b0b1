#include <doctest.h>

#include <cmath>
#include <random>

#include "bosegreen/exchange.hpp"
#include "bosegreen/oracle.hpp"
#include "support.hpp"

using namespace bosegreen;
using testing::random_configuration;
using testing::relative_error;
using testing::trap_system;

TEST_CASE("composition expansion closed forms") {
    std::mt19937_64 rng(1);
    SUBCASE("N=1") {
        const auto spec = trap_system(1, 3, 2, 1.1);
        const auto c = random_configuration(spec, rng);
        CHECK(oracle::composition_expansion_VB(spec, c) == doctest::Approx(spring_energy(spec, c, 1, 1)).epsilon(1e-14));
    }
    SUBCASE("N=2: compositions (1,1) and (2)") {
        const auto spec = trap_system(2, 3, 1, 0.9);
        const auto c = random_configuration(spec, rng);
        const double b = spec.beta;
        const double e11 = spring_energy(spec, c, 1, 1);
        const double e21 = spring_energy(spec, c, 2, 1);
        const double e22 = spring_energy(spec, c, 2, 2);
        const double expected = -std::log(0.5 * std::exp(-b * (e21 + e11)) + 0.5 * std::exp(-b * e22)) / b;
        CHECK(oracle::composition_expansion_VB(spec, c) == doctest::Approx(expected).epsilon(1e-13));
    }
    SUBCASE("N=3: weights 1/6, 1/6, 1/3, 1/3") {
        const auto spec = trap_system(3, 2, 2, 1.2);
        const auto c = random_configuration(spec, rng);
        const double b = spec.beta;
        auto e = [&](int a, int k) { return std::exp(-b * spring_energy(spec, c, a, k)); };
        // (1,1,1), (1,2), (2,1), (3) read from the top block down.
        const double z = e(3, 1) * e(2, 1) * e(1, 1) / 6.0 + e(3, 1) * e(2, 2) / 6.0 + e(3, 2) * e(1, 1) / 3.0 +
                         e(3, 3) / 3.0;
        CHECK(oracle::composition_expansion_VB(spec, c) == doctest::Approx(-std::log(z) / b).epsilon(1e-13));
    }
}

TEST_CASE("permutation sum") {
    std::mt19937_64 rng(2);
    SUBCASE("agrees with the composition expansion for N <= 2") {
        for (int n = 1; n <= 2; ++n) {
            for (int trial = 0; trial < 20; ++trial) {
                const auto spec = trap_system(n, 3, 2, 1.3);
                const auto c = random_configuration(spec, rng);
                CHECK(relative_error(oracle::permutation_sum_VB(spec, c), oracle::composition_expansion_VB(spec, c)) <=
                      1e-12);
            }
        }
    }
    SUBCASE("differs pointwise at N=3") {
        const auto spec = trap_system(3, 2, 1, 1.0);
        auto c = build_system(spec, 1);
        c.positions = {0.0, 0.3, 1.0, 1.2, -0.8, 0.4};
        const double perm = oracle::permutation_sum_VB(spec, c);
        const double comp = oracle::composition_expansion_VB(spec, c);
        CHECK(std::abs(perm - comp) > 1e-3);
    }
    SUBCASE("collapsed configuration gives zero") {
        const auto spec = trap_system(4, 2, 1, 1.0);
        auto c = build_system(spec, 1);
        for (auto& x : c.positions) x = 0.0;
        CHECK(std::abs(oracle::permutation_sum_VB(spec, c)) < 1e-14);
    }
}

TEST_CASE("ideal Bose energy") {
    SUBCASE("single oscillator") {
        CHECK(oracle::ideal_bose_energy(1, 6.0, 2) ==
              doctest::Approx(2.0 * (0.5 + 1.0 / (std::exp(6.0) - 1.0))).epsilon(1e-14));
        CHECK(oracle::ideal_bose_energy(1, 6.0, 2) == doctest::Approx(1.0049698).epsilon(1e-7));
        CHECK(oracle::ideal_bose_energy(1, 0.7, 3) ==
              doctest::Approx(3.0 * (0.5 + 1.0 / (std::exp(0.7) - 1.0))).epsilon(1e-14));
    }
    SUBCASE("ground-state limit") {
        for (int n = 1; n <= 8; ++n) {
            CHECK(oracle::ideal_bose_energy(n, 60.0, 2) == doctest::Approx(n).epsilon(1e-12));
            CHECK(oracle::ideal_bose_energy(n, 60.0, 1) == doctest::Approx(0.5 * n).epsilon(1e-12));
        }
    }
    SUBCASE("two bosons in one dimension by direct state sum") {
        // States n1 <= n2, energy n1 + n2 + 1.
        const double b = 1.3;
        double z = 0.0;
        double ez = 0.0;
        for (int n1 = 0; n1 < 200; ++n1) {
            for (int n2 = n1; n2 < 200; ++n2) {
                const double e = n1 + n2 + 1.0;
                z += std::exp(-b * e);
                ez += e * std::exp(-b * e);
            }
        }
        CHECK(oracle::ideal_bose_energy(2, b, 1) == doctest::Approx(ez / z).epsilon(1e-12));
    }
    SUBCASE("energy derivative matches finite differences of ln Z") {
        // E = -(d/d beta) ln Z; check through E decreasing with beta and the
        // classical limit E -> d N / beta at small beta.
        CHECK(oracle::ideal_bose_energy(3, 0.01, 2) == doctest::Approx(2.0 * 3 / 0.01).epsilon(1e-3));
        double previous = 1e300;
        for (double b = 0.2; b < 10.0; b += 0.2) {
            const double e = oracle::ideal_bose_energy(3, b, 2);
            CHECK(e < previous);
            previous = e;
        }
    }
    SUBCASE("rejects bad input") {
        CHECK_THROWS(oracle::ideal_bose_energy(0, 1.0, 2));
        CHECK_THROWS(oracle::ideal_bose_energy(2, 0.0, 2));
    }
}

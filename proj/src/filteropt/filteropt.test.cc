// Copyright 2026 The clocklat Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "clocklat/filteropt.h"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <cmath>
#include <numbers>
#include <random>

#include "gtest/gtest.h"

using namespace clocklat;
using namespace clocklat::filteropt;
using dist::exact_distribution;
using intlat::ClockSpec;

namespace {

ClockModel fair_coin() {
    return ClockModel(ClockSpec{{1.0}, {{1}}, {0.5, 0.5}});
}

EnergyDistribution from_masses(const std::vector<double> &masses) {
    double total = 0;
    for (double v : masses) {
        total += v;
    }
    std::vector<std::pair<LatticePoint, double>> sites;
    for (size_t i = 0; i < masses.size(); i++) {
        sites.emplace_back(LatticePoint{static_cast<int64_t>(i)}, std::log(masses[i] / total));
    }
    return EnergyDistribution(1, 1, std::move(sites));
}

EnergyDistribution random_distribution(std::mt19937_64 &rng) {
    std::uniform_int_distribution<int> size(1, 40);
    std::exponential_distribution<double> weight(1.0);
    std::vector<double> masses(size(rng));
    for (auto &v : masses) {
        v = weight(rng) + 1e-3;
    }
    return from_masses(masses);
}

double filter_amplitude_sum(const EnergyDistribution &dist, const std::vector<double> &pi, double target) {
    double s = 0;
    for (size_t i = 0; i < pi.size(); i++) {
        s += std::sqrt(dist.mass_at(i) * pi[i] / target);
    }
    return s;
}

void expect_solution_invariants(const EnergyDistribution &dist, const WaterfillSolution &sol) {
    double norm = 0;
    for (size_t i = 0; i < sol.xi.size(); i++) {
        double cap = std::sqrt(dist.mass_at(i) / sol.target);
        norm += sol.xi[i] * sol.xi[i];
        if (sol.coincidence[i]) {
            EXPECT_EQ(sol.xi[i], cap);
        } else {
            EXPECT_EQ(sol.xi[i], sol.zeta);
            EXPECT_LE(sol.zeta, cap);
        }
        EXPECT_GE(sol.pi[i], 0.0);
        EXPECT_LE(sol.pi[i], 1.0);
    }
    EXPECT_NEAR(norm, 1.0, 1e-10);
}

double gamma_by_quadrature(double a, double x) {
    boost::math::quadrature::exp_sinh<double> integrator;
    auto f = [a](double u) { return u > 30 ? 0.0 : 2 * std::pow(u, 2 * a - 1) * std::exp(-u * u); };
    return integrator.integrate([&](double v) { return f(std::sqrt(x) + v); }, 0.0, std::numeric_limits<double>::infinity());
}

}  // namespace

TEST(waterfill, flat_below_smallest_mass) {
    auto dist = from_masses({1, 1, 1, 1, 1});
    auto sol = waterfill(dist, 0.1);
    EXPECT_TRUE(sol.flat_regime);
    for (size_t i = 0; i < 5; i++) {
        EXPECT_NEAR(sol.xi[i], 1 / std::sqrt(5.0), 1e-15);
        EXPECT_FALSE(sol.coincidence[i]);
    }
    EXPECT_NEAR(sol.zeta, 1 / std::sqrt(5.0), 1e-15);
}

TEST(waterfill, deterministic_filter_at_unit_success) {
    auto dist = from_masses({1, 4, 6, 4, 1});
    auto sol = waterfill(dist, 1.0);
    for (size_t i = 0; i < dist.size(); i++) {
        EXPECT_TRUE(sol.coincidence[i]);
        EXPECT_NEAR(sol.xi[i], std::sqrt(dist.mass_at(i)), 1e-15);
        EXPECT_NEAR(sol.pi[i], 1.0, 1e-12);
    }
}

TEST(waterfill, binomial_beats_random_filters) {
    auto dist = exact_distribution(fair_coin(), 4);
    auto sol = waterfill(dist, 0.5);
    expect_solution_invariants(dist, sol);
    EXPECT_LT(kkt_certificate(dist, sol).max(), 1e-10);
    std::mt19937_64 rng(7);
    double best = sol.amplitude_sum();
    for (int t = 0; t < 1000; t++) {
        auto pi = random_feasible_filter(dist, 0.5, rng);
        EXPECT_LE(filter_amplitude_sum(dist, pi, 0.5), best + 1e-12);
    }
}

TEST(waterfill, kkt_and_dominance_on_random_distributions) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    int failures = 0;
    for (int trial = 0; trial < 100; trial++) {
        auto dist = random_distribution(rng);
        double min_p = 1;
        for (size_t i = 0; i < dist.size(); i++) {
            min_p = std::min(min_p, dist.mass_at(i));
        }
        for (double target : {0.5 * min_p, unif(rng), unif(rng), 0.9, 1.0}) {
            auto sol = waterfill(dist, target);
            expect_solution_invariants(dist, sol);
            auto cert = kkt_certificate(dist, sol);
            failures += cert.max() >= 1e-10;
            double best = sol.amplitude_sum();
            for (int t = 0; t < 1000; t++) {
                auto pi = random_feasible_filter(dist, target, rng);
                failures += filter_amplitude_sum(dist, pi, target) > best + 1e-12;
            }
        }
    }
    EXPECT_EQ(failures, 0);
}

TEST(waterfill, random_filter_hits_target) {
    std::mt19937_64 rng(3);
    auto dist = exact_distribution(fair_coin(), 6);
    for (double target : {0.01, 0.3, 0.99, 1.0}) {
        auto pi = random_feasible_filter(dist, target, rng);
        double succ = 0;
        for (size_t i = 0; i < pi.size(); i++) {
            EXPECT_GE(pi[i], 0.0);
            EXPECT_LE(pi[i], 1.0);
            succ += dist.mass_at(i) * pi[i];
        }
        EXPECT_NEAR(succ, target, 1e-12);
    }
}

TEST(waterfill, induced_filter_reaches_target) {
    auto dist = exact_distribution(fair_coin(), 8);
    auto sol = waterfill(dist, 0.4);
    auto filter = sol.to_filter(dist);
    EXPECT_NEAR(filter.success(), 0.4, 1e-12);
    EXPECT_NEAR(filter.amplitude_sum(), sol.amplitude_sum(), 1e-12);
}

TEST(waterfill, rejects_bad_targets) {
    auto dist = from_masses({1, 1});
    EXPECT_THROW(waterfill(dist, 0.0), InvalidArgument);
    EXPECT_THROW(waterfill(dist, -0.2), InvalidArgument);
    EXPECT_THROW(waterfill(dist, 1.5), InvalidArgument);
}

TEST(optimal_fidelity, unit_success_matches_trivial_filter) {
    auto model = fair_coin();
    auto pt = optimal_fidelity_exact(model, 4, 1e4, 1.0);
    auto input = exact_distribution(model, 4);
    auto ref = fidelity::asymptotic_fidelity(model, Filter::trivial(input), 1e4);
    EXPECT_NEAR(pt.fidelity, ref.value, 1e-12);
    EXPECT_NEAR(pt.fidelity, 0.0356, 5e-4);
}

TEST(optimal_fidelity, flat_regime_value) {
    auto model = fair_coin();
    auto pt = optimal_fidelity_exact(model, 4, 1e4, 1e-4);
    EXPECT_TRUE(pt.flat_regime);
    EXPECT_NEAR(pt.fidelity, 5 / std::sqrt(2 * std::numbers::pi * 2500), 1e-12);
    auto low = low_success_fidelity(model, 4, 1e4);
    EXPECT_NEAR(low.fidelity, pt.fidelity, 1e-12);
    EXPECT_NEAR(low.succ, 1.0 / 16, 1e-12);
}

TEST(optimal_fidelity, non_increasing_in_success) {
    auto model = fair_coin();
    auto input = exact_distribution(model, 10);
    double prev = std::numeric_limits<double>::infinity();
    for (int i = 1; i <= 50; i++) {
        double target = i / 50.0;
        auto pt = optimal_fidelity_exact(model, input, 1e4, target);
        EXPECT_LE(pt.fidelity, prev * (1 + 1e-12));
        prev = pt.fidelity;
    }
}

TEST(optimal_fidelity, agrees_with_parametric_curve) {
    auto model = fair_coin();
    auto input = exact_distribution(model, 16);
    for (double target : {0.9, 0.5, 0.2}) {
        double exact = optimal_fidelity_exact(model, input, 1e5, target).fidelity;
        double param = tradeoff_at_succ(1, 16, 1e5, target).fidelity;
        EXPECT_NEAR(exact / param, 1.0, 0.05) << target;
    }
}

TEST(optimal_fidelity, scales_as_inverse_root_m) {
    auto model = fair_coin();
    auto input = exact_distribution(model, 6);
    double a = optimal_fidelity_exact(model, input, 1e4, 0.5).fidelity;
    double b = optimal_fidelity_exact(model, input, 1e6, 0.5).fidelity;
    EXPECT_NEAR(std::log(b / a) / std::log(100.0), -0.5, 1e-9);
}

TEST(incomplete_gamma, closed_forms) {
    EXPECT_NEAR(upper_incomplete_gamma(1, 1), std::exp(-1.0), 1e-15);
    EXPECT_NEAR(upper_incomplete_gamma(0.5, 0), std::sqrt(std::numbers::pi), 1e-15);
    EXPECT_NEAR(upper_incomplete_gamma(2, 3), 4 * std::exp(-3.0), 1e-15);
    EXPECT_NEAR(upper_incomplete_gamma(0.5, 2), std::sqrt(std::numbers::pi) * std::erfc(std::sqrt(2.0)), 1e-15);
}

TEST(incomplete_gamma, matches_quadrature) {
    for (double a : {0.5, 1.0, 1.5, 2.0, 3.5}) {
        for (double x : {0.0, 0.5, 1.0, 2.0, 5.0, 30.0}) {
            double expected = gamma_by_quadrature(a, x);
            EXPECT_NEAR(upper_incomplete_gamma(a, x) / expected, 1.0, 1e-12) << a << " " << x;
        }
    }
}

TEST(incomplete_gamma, golden_value) {
    EXPECT_NEAR(upper_incomplete_gamma(1.5, 2), 0.231716552000981, 1e-14);
}

TEST(incomplete_gamma, rejects_domain) {
    EXPECT_THROW(upper_incomplete_gamma(0, 1), InvalidArgument);
    EXPECT_THROW(upper_incomplete_gamma(1, -1), InvalidArgument);
}

TEST(tradeoff, alpha_zero_limit) {
    for (int r : {1, 2, 3}) {
        auto pt = tradeoff_parametric(r, 4, 1600, 1e-6);
        EXPECT_NEAR(pt.succ, 1.0, 1e-6);
        EXPECT_NEAR(pt.fidelity, std::pow(16.0 / 1600, r / 2.0), 1e-5);
    }
    auto pt = tradeoff_parametric(1, 4, 400, 0);
    EXPECT_NEAR(pt.succ, 1.0, 1e-15);
    EXPECT_NEAR(pt.fidelity, 0.2, 1e-14);
}

TEST(tradeoff, large_alpha_vanishing_success) {
    EXPECT_LT(tradeoff_parametric(1, 4, 400, 15).succ, 1e-40);
    EXPECT_LT(tradeoff_parametric(3, 4, 400, 15).succ, 1e-40);
}

TEST(tradeoff, inversion_round_trip) {
    for (int r : {1, 2, 3}) {
        double target = tradeoff_parametric(r, 4, 1600, 1.0).succ;
        auto pt = tradeoff_at_succ(r, 4, 1600, target);
        ASSERT_TRUE(pt.alpha.has_value());
        EXPECT_NEAR(*pt.alpha, 1.0, 1e-8);
        EXPECT_NEAR(pt.succ, target, 1e-10);
    }
    EXPECT_EQ(tradeoff_at_succ(2, 4, 1600, 1.0).alpha.value(), 0.0);
    EXPECT_THROW(tradeoff_at_succ(2, 4, 1600, 0.0), InvalidArgument);
}

TEST(tradeoff, monotone_in_success) {
    for (int r : {1, 2}) {
        double prev = std::numeric_limits<double>::infinity();
        for (int i = 1; i <= 50; i++) {
            auto pt = tradeoff_at_succ(r, 4, 1600, i / 50.0);
            EXPECT_LE(pt.fidelity, prev * (1 + 1e-12)) << r << " " << i;
            prev = pt.fidelity;
        }
    }
}

TEST(tradeoff, parametric_scaling_in_m) {
    for (int r : {1, 2, 3}) {
        double a = tradeoff_parametric(r, 4, 1000, 1.3).fidelity;
        double b = tradeoff_parametric(r, 4, 4000, 1.3).fidelity;
        EXPECT_NEAR(a / b, std::pow(4.0, r / 2.0), 1e-12);
    }
}

TEST(high_succ, formula_values) {
    EXPECT_NEAR(high_succ_expansion(1, 4, 400, 0).fidelity, 0.2, 1e-15);
    EXPECT_NEAR(high_succ_expansion(2, 4, 1600, 0.1).fidelity, 0.0105, 1e-15);
    EXPECT_TRUE(high_succ_expansion(2, 4, 1600, 0.1).warnings.empty());
    EXPECT_FALSE(high_succ_expansion(2, 4, 1600, 0.3).warnings.empty());
    EXPECT_THROW(high_succ_expansion(2, 4, 1600, -0.01), InvalidArgument);
}

TEST(high_succ, agrees_with_parametric_to_second_order) {
    for (int r : {1, 2}) {
        double scale = std::pow(16.0 / 1600, r / 2.0);
        for (double eta : {0.01, 0.02, 0.05}) {
            double param = tradeoff_at_succ(r, 4, 1600, 1 - eta).fidelity;
            double expansion = high_succ_expansion(r, 4, 1600, eta).fidelity;
            EXPECT_LE(std::abs(param - expansion), 3 * eta * eta * scale) << r << " " << eta;
        }
    }
}

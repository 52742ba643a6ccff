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

#include "clocklat/cloner.h"

#include <cmath>
#include <numbers>
#include <random>

#include "gtest/gtest.h"
#include "oracles/dense_oracles.h"

using namespace clocklat;
using namespace clocklat::cloner;

namespace {

Matrix random_state(size_t dim, std::mt19937_64 &rng, size_t rank = 0) {
    std::normal_distribution<double> normal;
    size_t cols = rank == 0 ? dim : rank;
    Matrix g(dim, cols);
    for (size_t i = 0; i < dim; i++) {
        for (size_t j = 0; j < cols; j++) {
            g(i, j) = Complex(normal(rng), normal(rng));
        }
    }
    Matrix rho = g * g.adjoint();
    return rho / rho.trace().real();
}

double max_abs(const Matrix &a) {
    return a.cwiseAbs().maxCoeff();
}

double binomial(int n, int k) {
    return std::round(std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0)));
}

std::vector<StateFamily> test_families() {
    return {equatorial_family(4), tetrahedral_family(), random_family(2, 3, 99)};
}

}  // namespace

TEST(symmetric_space, dimensions) {
    EXPECT_EQ(SymmetricSpace(2, 3).dim(), 4u);
    EXPECT_EQ(SymmetricSpace(3, 2).dim(), 6u);
    EXPECT_EQ(SymmetricSpace(2, 0).dim(), 1u);
    for (int d = 1; d <= 5; d++) {
        for (int m = 0; m <= 8; m++) {
            EXPECT_EQ(SymmetricSpace(d, m).dim(), binomial(m + d - 1, d - 1)) << d << " " << m;
            EXPECT_EQ(symmetric_dimension(d, m), binomial(m + d - 1, d - 1));
        }
    }
    EXPECT_THROW(SymmetricSpace(10, 10), ResourceCapExceeded);
    EXPECT_THROW(SymmetricSpace(0, 2), InvalidArgument);
}

TEST(symmetric_space, basis_is_orthonormal) {
    for (size_t d : {2, 3}) {
        for (size_t m = 0; m <= 4; m++) {
            SymmetricSpace space(d, m);
            Matrix v = Matrix::Zero(oracle::ipow(d, m), space.dim());
            for (size_t i = 0; i < space.dim(); i++) {
                for (auto [idx, amp] : space.embedding(i)) {
                    v(idx, i) = amp;
                }
            }
            EXPECT_LT(max_abs(v.adjoint() * v - Matrix::Identity(space.dim(), space.dim())), 1e-12);
            EXPECT_LT(max_abs(v - oracle::dicke_isometry(space)), 1e-15);
        }
    }
    EXPECT_THROW(SymmetricSpace(3, 9).embedding(0), ResourceCapExceeded);
}

TEST(symmetric_space, product_power_matches_dense) {
    auto family = random_family(3, 4, 5);
    for (size_t m = 0; m <= 4; m++) {
        SymmetricSpace space(3, m);
        Matrix v = oracle::dicke_isometry(space);
        for (const auto &psi : family.states) {
            Vector expected = v.adjoint() * oracle::tensor_power(psi, m);
            EXPECT_LT((space.product_power(psi) - expected).cwiseAbs().maxCoeff(), 1e-13);
            EXPECT_NEAR(space.product_power(psi).norm(), 1.0, 1e-13);
        }
    }
}

TEST(symmetric_space, partial_trace_and_lift_match_dense) {
    std::mt19937_64 rng(1);
    for (size_t d : {2, 3}) {
        for (size_t m = 1; m <= 4; m++) {
            SymmetricSpace space(d, m);
            Matrix v = oracle::dicke_isometry(space);
            Matrix rho = random_state(space.dim(), rng);
            for (size_t k = 0; k <= m; k++) {
                SymmetricSpace part(d, k);
                Matrix vk = oracle::dicke_isometry(part);
                Matrix expected = vk.adjoint() * oracle::dense_partial_trace(v * rho * v.adjoint(), d, m, k) * vk;
                EXPECT_LT(max_abs(partial_trace(space, rho, k) - expected), 1e-12) << d << m << k;

                Matrix x = random_state(part.dim(), rng);
                Matrix full_x = oracle::dense_kron(vk * x * vk.adjoint(),
                    Matrix::Identity(oracle::ipow(d, m - k), oracle::ipow(d, m - k)));
                EXPECT_LT(max_abs(lift(space, x, k) - v.adjoint() * full_x * v), 1e-12) << d << m << k;
            }
        }
    }
}

TEST(omega, single_state_is_rank_one) {
    StateFamily f{2, {Vector::Unit(2, 0)}, {1.0}};
    Matrix omega = omega_operator(f, 1, 1, 1);
    Vector psi = Vector::Unit(2, 0);
    Vector pair = oracle::dense_kron(psi, psi.conjugate());
    EXPECT_LT(max_abs(omega - pair * pair.adjoint()), 1e-15);
}

TEST(omega, orthogonal_pair_is_direct_sum) {
    StateFamily f{2, {Vector::Unit(2, 0), Vector::Unit(2, 1)}, {0.5, 0.5}};
    Matrix omega = omega_operator(f, 1, 1, 1);
    Matrix expected = Matrix::Zero(4, 4);
    expected(0, 0) = 0.5;
    expected(3, 3) = 0.5;
    EXPECT_LT(max_abs(omega - expected), 1e-15);
}

TEST(omega, matches_dense_construction) {
    for (const auto &family : test_families()) {
        for (auto [n, m, k] : std::vector<std::array<size_t, 3>>{{1, 2, 2}, {1, 3, 1}, {2, 3, 2}, {1, 4, 2}}) {
            SymmetricSpace in(2, n), out(2, m);
            Matrix iso = oracle::dense_kron(oracle::dicke_isometry(out), oracle::dicke_isometry(in));
            Matrix expected = iso.adjoint() * oracle::dense_omega(family, n, m, k) * iso;
            Matrix omega = omega_operator(family, n, m, k);
            EXPECT_LT(max_abs(omega - expected), 1e-12);
            EXPECT_LT(max_abs(omega - omega.adjoint()), 1e-14);
            double ratio = static_cast<double>(out.dim()) / static_cast<double>(SymmetricSpace(2, k).dim());
            EXPECT_NEAR(omega.trace().real(), ratio, 1e-12);
        }
    }
}

TEST(optimal_cloner, single_state_clones_perfectly) {
    StateFamily f{3, {Vector::Unit(3, 1)}, {1.0}};
    for (size_t m : {1, 2, 3}) {
        auto c = optimal_cloner(f, m, m, m);
        EXPECT_NEAR(c.fidelity, 1.0, 1e-12);
    }
}

TEST(optimal_cloner, equatorial_success_and_golden_values) {
    auto family = equatorial_family(4);
    Matrix tau = input_average(family, 1);
    EXPECT_LT(max_abs(tau - 0.5 * Matrix::Identity(2, 2)), 1e-15);

    auto c22 = optimal_cloner(family, 1, 2, 2);
    EXPECT_NEAR(c22.success, 0.5, 1e-12);
    EXPECT_NEAR(c22.fidelity, 0.75, 1e-12);
    EXPECT_GT(c22.fidelity, 0.625);
    EXPECT_LT(c22.fidelity, 1.0);
    EXPECT_NEAR(c22.fidelity, oracle::dense_optimal_fidelity(family, 1, 2, 2), 1e-12);

    EXPECT_NEAR(optimal_cloner(family, 1, 2, 1).fidelity, (2 + std::sqrt(2.0)) / 4, 1e-12);
    EXPECT_NEAR(optimal_cloner(family, 1, 4, 1).fidelity, 0.5 + std::sqrt(6.0) / 8, 1e-12);
}

TEST(optimal_cloner, symmetric_outputs_reach_dense_optimum) {
    for (const auto &family : test_families()) {
        for (auto [n, m, k] : std::vector<std::array<size_t, 3>>{{1, 2, 1}, {1, 3, 1}, {1, 3, 2}, {2, 3, 1}}) {
            EXPECT_NEAR(optimal_cloner(family, n, m, k).fidelity, oracle::dense_optimal_fidelity(family, n, m, k), 1e-10)
                << n << m << k;
        }
    }
}

TEST(optimal_cloner, trace_non_increasing_on_random_inputs) {
    std::mt19937_64 rng(17);
    for (const auto &family : test_families()) {
        for (size_t n : {1, 2}) {
            auto c = optimal_cloner(family, n, 4, 1);
            EXPECT_LE(c.choi.max_success(), 1 + 1e-12);
            for (int t = 0; t < 100; t++) {
                Matrix rho = random_state(c.choi.dim_in(), rng, t % 2 ? 1 : 0);
                EXPECT_LE(c.choi.success(rho), 1 + 1e-12);
            }
            Eigen::SelfAdjointEigenSolver<Matrix> eig(c.choi.matrix, Eigen::EigenvaluesOnly);
            EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-10);
            EXPECT_LT(max_abs(c.choi.matrix - c.choi.matrix.adjoint()), 1e-12);
        }
    }
}

TEST(optimal_cloner, success_is_inverse_norm_of_tau_inverse) {
    auto family = random_family(3, 5, 8);
    auto c = optimal_cloner(family, 2, 3, 1);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(input_average(family, 2), Eigen::EigenvaluesOnly);
    EXPECT_EQ(c.support_rank, 5u);
    double smallest = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < eig.eigenvalues().size(); i++) {
        if (eig.eigenvalues()[i] > 1e-10) {
            smallest = std::min(smallest, eig.eigenvalues()[i]);
        }
    }
    EXPECT_NEAR(c.success, smallest, 1e-12);
}

TEST(optimal_cloner, formula_matches_simulated_fidelity) {
    for (const auto &family : test_families()) {
        for (auto [n, m, k] : std::vector<std::array<size_t, 3>>{{1, 2, 2}, {1, 4, 1}, {2, 5, 2}, {1, 8, 2}}) {
            auto c = optimal_cloner(family, n, m, k);
            auto f = kcopy_fidelity(c.choi, family, k);
            EXPECT_NEAR(f.average, c.fidelity, 1e-9) << n << m << k;
        }
    }
}

TEST(optimal_cloner, degeneracy_is_flagged) {
    // Two orthogonal states cloned by one copy: the two output sectors tie.
    StateFamily f{2, {Vector::Unit(2, 0), Vector::Unit(2, 1)}, {0.5, 0.5}};
    auto c = optimal_cloner(f, 1, 1, 1);
    EXPECT_TRUE(c.degenerate);
    EXPECT_NEAR(c.fidelity, 1.0, 1e-12);
    auto clean = optimal_cloner(random_family(2, 3, 4), 1, 3, 1);
    EXPECT_FALSE(clean.degenerate);
    EXPECT_GT(clean.spectral_gap, 0.0);
}

TEST(optimal_cloner, rejects_bad_families) {
    StateFamily unnormalized{2, {Vector::Ones(2)}, {1.0}};
    EXPECT_THROW(optimal_cloner(unnormalized, 1, 2, 1), InvalidArgument);
    StateFamily bad_priors{2, {Vector::Unit(2, 0)}, {0.5}};
    EXPECT_THROW(optimal_cloner(bad_priors, 1, 2, 1), InvalidArgument);
    EXPECT_THROW(optimal_cloner(equatorial_family(4), 1, 2, 3), InvalidArgument);
    EXPECT_THROW(optimal_cloner(random_family(8, 3, 1), 4, 6, 1), ResourceCapExceeded);
}

TEST(measure_and_prepare, single_copy_closed_form) {
    std::mt19937_64 rng(2);
    SymmetricSpace space(2, 1);
    Matrix rho = random_state(2, rng);
    Matrix expected = (rho + Matrix::Identity(2, 2)) / 3.0;
    EXPECT_LT(max_abs(measure_and_prepare(space, rho) - expected), 1e-14);
}

TEST(measure_and_prepare, matches_quadrature) {
    std::mt19937_64 rng(3);
    for (size_t m = 1; m <= 5; m++) {
        SymmetricSpace space(2, m);
        Matrix rho = random_state(space.dim(), rng);
        EXPECT_LT(max_abs(measure_and_prepare(space, rho) - oracle::quadrature_measure_and_prepare(space, rho)), 1e-12)
            << m;
    }
}

TEST(measure_and_prepare, maximally_mixed_is_fixed) {
    for (size_t d : {2, 3}) {
        for (size_t m : {1, 3, 6}) {
            SymmetricSpace space(d, m);
            Matrix mixed = Matrix::Identity(space.dim(), space.dim()) / static_cast<double>(space.dim());
            EXPECT_LT(max_abs(measure_and_prepare(space, mixed) - mixed), 1e-13);
        }
    }
}

TEST(measure_and_prepare, trace_preserving_and_positive) {
    std::mt19937_64 rng(4);
    for (int t = 0; t < 50; t++) {
        size_t d = 2 + t % 2;
        size_t m = 1 + t % 6;
        SymmetricSpace space(d, m);
        Matrix rho = random_state(space.dim(), rng, t % 3 ? 0 : 1);
        Matrix out = measure_and_prepare(space, rho);
        EXPECT_NEAR(out.trace().real(), rho.trace().real(), 1e-10);
        Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (out + out.adjoint()), Eigen::EigenvaluesOnly);
        EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-10);
    }
    EXPECT_THROW(measure_and_prepare(SymmetricSpace(2, 2), Matrix::Identity(2, 2)), InvalidArgument);
}

TEST(measure_and_prepare, composed_choi_applies_channel_after) {
    std::mt19937_64 rng(5);
    auto c = optimal_cloner(tetrahedral_family(), 1, 3, 1).choi;
    auto composed = compose_measure_and_prepare(c);
    SymmetricSpace out(2, 3);
    Matrix rho = random_state(2, rng);
    EXPECT_LT(max_abs(composed.apply(rho) - measure_and_prepare(out, c.apply(rho))), 1e-13);
    EXPECT_NEAR(composed.success(rho), c.success(rho), 1e-13);
}

TEST(kcopy, identity_channel_is_perfect) {
    auto family = random_family(3, 4, 6);
    for (size_t n : {1, 2, 3}) {
        auto f = kcopy_fidelity(identity_choi(3, n), family, n);
        EXPECT_NEAR(f.average, 1.0, 1e-12);
        for (double v : f.per_state) {
            EXPECT_NEAR(v, 1.0, 1e-12);
        }
    }
}

TEST(kcopy, swapping_equal_prior_states_is_invariant) {
    auto family = equatorial_family(4);
    auto c = optimal_cloner(random_family(2, 3, 12), 1, 4, 1).choi;
    auto swapped = family;
    std::swap(swapped.states[0], swapped.states[2]);
    EXPECT_NEAR(kcopy_fidelity(c, family, 1).average, kcopy_fidelity(c, swapped, 1).average, 1e-14);
}

TEST(kcopy, excludes_states_with_zero_success) {
    // Projects onto |0>, so |1> never succeeds.
    Matrix matrix = Matrix::Zero(4, 4);
    matrix(0, 0) = 1;
    ChoiOperator filter{2, 1, 1, matrix};
    StateFamily f{2, {Vector::Unit(2, 0), Vector::Unit(2, 1)}, {0.5, 0.5}};
    auto result = kcopy_fidelity(filter, f, 1);
    EXPECT_NEAR(result.per_state[0], 1.0, 1e-15);
    EXPECT_TRUE(std::isnan(result.per_state[1]));
    EXPECT_EQ(result.diagnostics.size(), 1u);
    EXPECT_NEAR(result.success, 0.5, 1e-15);
}

TEST(kcopy, equatorial_golden_and_pm_simulability) {
    auto family = equatorial_family(4);
    auto c = optimal_cloner(family, 1, 4, 1);
    auto f = kcopy_fidelity(c.choi, family, 1);
    EXPECT_NEAR(f.average, 0.8061862178478973, 1e-12);
    auto pm = kcopy_fidelity(compose_measure_and_prepare(c.choi), family, 1);
    for (size_t x = 0; x < family.states.size(); x++) {
        double bound = 2.0 * 1 * 4 / (4 * f.per_state_success[x]);
        EXPECT_LE(std::abs(f.per_state[x] - pm.per_state[x]), bound);
        EXPECT_NEAR(pm.per_state_success[x], f.per_state_success[x], 1e-13);
    }
}

TEST(definetti, bound_arithmetic) {
    auto c = optimal_cloner(equatorial_family(4), 1, 6, 1).choi;
    auto report = definetti_gap(c, equatorial_family(4), 1);
    for (const auto &row : report.rows) {
        EXPECT_NEAR(row.gap_bound, 2.0 / 3, 1e-15);
        EXPECT_LE(row.gap, 2.0 / 3);
    }
    auto zero = definetti_gap(c, equatorial_family(4), 0);
    for (const auto &row : zero.rows) {
        EXPECT_NEAR(row.gap, 0.0, 1e-12);
    }

    auto id = identity_choi(2, 8);
    std::vector<Matrix> probes = {projector(SymmetricSpace(2, 8).product_power(equatorial_family(4).states[1]))};
    auto unit = definetti_gap(id, probes, 1);
    EXPECT_NEAR(unit.rows[0].success, 1.0, 1e-12);
    EXPECT_NEAR(unit.rows[0].p_err_bound, 0.75, 1e-12);
}

TEST(definetti, bounds_hold_across_grid) {
    std::mt19937_64 rng(21);
    for (const auto &family : test_families()) {
        for (size_t m : {4, 6, 8, 10}) {
            for (size_t k : {1, 2}) {
                auto c = optimal_cloner(family, 1, m, k).choi;
                std::vector<Matrix> probes;
                for (int t = 0; t < 10; t++) {
                    probes.push_back(random_state(2, rng, t % 2 ? 1 : 0));
                }
                EXPECT_EQ(definetti_gap(c, family, k).violations, 0u) << m << k;
                EXPECT_EQ(definetti_gap(c, probes, k).violations, 0u) << m << k;
            }
        }
    }
}

TEST(definetti, gap_shrinks_like_inverse_m) {
    auto family = equatorial_family(4);
    double g4 = definetti_gap(optimal_cloner(family, 1, 4, 1).choi, family, 1).max_gap;
    double g8 = definetti_gap(optimal_cloner(family, 1, 8, 1).choi, family, 1).max_gap;
    EXPECT_GE(g4 / g8, 1.5);
    EXPECT_LE(g4 / g8, 2.5);
}

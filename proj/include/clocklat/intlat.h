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

#ifndef CLOCKLAT_INTLAT_H
#define CLOCKLAT_INTLAT_H

#include <Eigen/Dense>
#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

#include "clocklat/errors.h"

namespace clocklat::intlat {

/// Largest number of independent energy units supported by LatticePoint.
constexpr size_t kMaxRank = 8;

/// Default limit on the number of partitions any single enumeration may visit.
constexpr uint64_t kDefaultEnumerationCap = 100000000;

/// Row-major integer matrix. Rows may be empty (a 0-column matrix).
using IntMatrix = std::vector<std::vector<int64_t>>;

/// A point of Z^r for r <= kMaxRank. Unused trailing slots are always zero, so
/// the defaulted comparisons give lexicographic order among points of one rank.
struct LatticePoint {
    std::array<int64_t, kMaxRank> c{};
    uint8_t rank = 0;

    LatticePoint() = default;
    explicit LatticePoint(size_t r);
    LatticePoint(std::initializer_list<int64_t> values);
    static LatticePoint from_vector(const std::vector<int64_t> &values);

    size_t size() const {
        return rank;
    }
    int64_t &operator[](size_t i) {
        return c[i];
    }
    int64_t operator[](size_t i) const {
        return c[i];
    }
    LatticePoint operator+(const LatticePoint &other) const;
    LatticePoint operator-(const LatticePoint &other) const;
    Eigen::VectorXd to_eigen() const;
    std::string str() const;

    auto operator<=>(const LatticePoint &) const = default;
    bool operator==(const LatticePoint &) const = default;
};

struct LatticePointHash {
    size_t operator()(const LatticePoint &p) const;
};

/// A single clock: d levels with energies e_j = sum_l units[l] * K[l][j-1]
/// (e_0 = 0) and populations probs[j].
struct ClockSpec {
    std::vector<double> units;
    IntMatrix K;
    std::vector<double> probs;

    size_t levels() const {
        return probs.size();
    }
    size_t rank() const {
        return units.size();
    }
};

/// Throws InvalidArgument (or RankDeficient) describing the first violated
/// constraint. Minimality of the unit set cannot be checked from (units, K)
/// and is the caller's assertion.
void validate(const ClockSpec &spec);

/// K = T * diag(A) * P * S, with P = [I_r | 0].
struct SmithForm {
    IntMatrix T;
    std::vector<int64_t> A;
    IntMatrix S;
    size_t cols = 0;

    size_t rank() const {
        return A.size();
    }
    IntMatrix A_matrix() const;
    IntMatrix P_matrix() const;
    /// det A, the gcd of the maximal minors of K.
    int64_t unit_cell_volume() const;
    /// Reassembles T * A * P * S.
    IntMatrix reconstruct() const;
    /// s = P * S * n.
    LatticePoint smith_vector(const std::vector<int64_t> &n) const;
};

/// Smith normal form via unimodular row and column reduction in arbitrary
/// precision. Throws RankDeficient naming the dependent rows.
SmithForm smith_form(const IntMatrix &K);

int64_t unit_cell_volume(const IntMatrix &K);

/// Rank of K over the rationals.
size_t rational_rank(const IntMatrix &K);

/// Determinant of a square integer matrix, in arbitrary precision and then
/// narrowed. Throws Error if the value does not fit in 64 bits.
int64_t determinant(const IntMatrix &M);

IntMatrix multiply(const IntMatrix &a, const IntMatrix &b);

/// C(n + d - 1, d - 1): the number of (d-1)-vectors with nonnegative entries
/// summing to at most n. Saturates at UINT64_MAX.
uint64_t partition_count(uint64_t n, size_t d);

/// Visits each partition in lexicographic order. The visited vector holds the
/// occupations of levels 1..d-1; level 0 holds n minus their sum.
void for_each_partition(
    uint64_t n,
    size_t d,
    const std::function<void(const std::vector<int64_t> &)> &visit,
    uint64_t cap = kDefaultEnumerationCap);

std::vector<std::vector<int64_t>> enumerate_partitions(
    uint64_t n, size_t d, uint64_t cap = kDefaultEnumerationCap);

/// A validated clock with its Smith form.
class ClockModel {
   public:
    explicit ClockModel(ClockSpec spec);

    const ClockSpec &spec() const {
        return spec_;
    }
    const SmithForm &smith() const {
        return smith_;
    }
    size_t rank() const {
        return spec_.rank();
    }
    size_t levels() const {
        return spec_.levels();
    }
    int64_t unit_cell_volume() const {
        return smith_.unit_cell_volume();
    }
    LatticePoint smith_vector(const std::vector<int64_t> &n) const {
        return smith_.smith_vector(n);
    }
    /// Energy units conjugate to Smith coordinates: units * T * A.
    std::vector<double> smith_units() const;
    /// Energy of the level set labelled by Smith vector s.
    double energy(const LatticePoint &s) const;
    /// The r x (d-1) matrix P * S.
    Eigen::MatrixXd projected_S() const;

   private:
    ClockSpec spec_;
    SmithForm smith_;
};

/// Number of distinct Smith vectors among partitions of n.
uint64_t lattice_size(const ClockModel &model, uint64_t n, uint64_t cap = kDefaultEnumerationCap);

/// Moments of the energy of n copies. `mean`/`cov` are in K coordinates
/// (the integer vector K n), the smith_ versions in Smith coordinates.
struct Moments {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    Eigen::VectorXd smith_mean;
    Eigen::MatrixXd smith_cov;
};

/// n is real so that asymptotic formulas can be evaluated at any copy number.
Moments moments(const ClockModel &model, double n);

/// Delta V* / sqrt(det cov), the quantity that must agree between equivalent
/// choices of energy units. Equal to 1 / sqrt(det smith_cov).
double invariance_quantity(const ClockModel &model, double n);

struct EquivalenceReport {
    bool equivalent = false;
    double quantity_a = 0;
    double quantity_b = 0;
    std::vector<uint64_t> probes;
    std::vector<uint64_t> sizes_a;
    std::vector<uint64_t> sizes_b;
    std::vector<std::string> diagnostics;
};

/// Checks the consequences of two specs describing one spectrum: equal
/// invariance quantity (relative 1e-10) and equal lattice sizes at each probe.
EquivalenceReport equivalent_representation_check(
    const ClockSpec &a, const ClockSpec &b, const std::vector<uint64_t> &probes = {1, 2, 3, 4, 5, 6});

}  // namespace clocklat::intlat

#endif

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

#ifndef CLOCKLAT_CLONER_H
#define CLOCKLAT_CLONER_H

#include <complex>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "clocklat/errors.h"

namespace clocklat::cloner {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

/// Largest symmetric-subspace dimension, and largest dense operator side, accepted.
constexpr uint64_t kMaxSymmetricDim = 5000;

/// C(m + d - 1, d - 1), saturating at UINT64_MAX.
uint64_t symmetric_dimension(size_t d, size_t m);

/// Occupation-number basis of the symmetric subspace of m systems of dimension d.
class SymmetricSpace {
   public:
    SymmetricSpace(size_t d, size_t m);

    size_t d() const {
        return d_;
    }
    size_t m() const {
        return m_;
    }
    size_t dim() const {
        return occupations_.size();
    }
    /// Occupation of levels 0..d-1 for basis element i, in lexicographic order of levels 1..d-1.
    const std::vector<int> &occupation(size_t i) const {
        return occupations_[i];
    }
    size_t index_of(const std::vector<int> &occupation) const;

    /// Coordinates of psi^{(x) m}.
    Vector product_power(const Vector &psi) const;

    /// Basis element i as (index, amplitude) pairs in the d^m product basis.
    /// Only available while m * d <= 24.
    std::vector<std::pair<uint64_t, double>> embedding(size_t i) const;

   private:
    size_t d_;
    size_t m_;
    std::vector<std::vector<int>> occupations_;
    std::map<std::vector<int>, size_t> index_;
};

/// Keeps k of the m systems of a symmetric operator.
Matrix partial_trace(const SymmetricSpace &space, const Matrix &rho, size_t k);

/// P_sym (X (x) I_{m-k}) P_sym for X on the symmetric subspace of k systems.
Matrix lift(const SymmetricSpace &space, const Matrix &x, size_t k);

/// Projector psi psi^dagger.
Matrix projector(const Vector &psi);

/// Finite prior over pure states.
struct StateFamily {
    size_t d = 0;
    std::vector<Vector> states;
    std::vector<double> priors;

    void validate() const;
};

/// Qubit states (|0> + e^{i phi}|1>)/sqrt2 at equally spaced phases, equal priors.
StateFamily equatorial_family(size_t phases);
/// Four qubit states with tetrahedral Bloch vectors, equal priors.
StateFamily tetrahedral_family();
/// Complex Gaussian states with Dirichlet-like priors drawn from the seed.
StateFamily random_family(size_t d, size_t count, uint64_t seed);

/// tau = sum_x p_x psi_x^{(x) n} on the symmetric subspace of n systems.
Matrix input_average(const StateFamily &family, size_t n);

/// sum_x p_x lift(psi_x^{(x) k}) (x) conj(psi_x^{(x) n}) on output (x) input.
Matrix omega_operator(const StateFamily &family, size_t n, size_t m, size_t k);

/// Choi operator of a map from n to m symmetric systems. Row index is
/// out * dim_in + in.
struct ChoiOperator {
    size_t d = 0;
    size_t n = 0;
    size_t m = 0;
    Matrix matrix;

    size_t dim_in() const;
    size_t dim_out() const;
    Matrix apply(const Matrix &rho) const;
    double success(const Matrix &rho) const;
    /// Largest success probability over all inputs.
    double max_success() const;
};

ChoiOperator identity_choi(size_t d, size_t n);

struct OptimalCloner {
    ChoiOperator choi;
    double fidelity = 0;
    /// gamma = 1 / ||tau^{-1}|| on the support of tau.
    double success = 0;
    bool degenerate = false;
    double spectral_gap = 0;
    size_t support_rank = 0;
};

/// Top eigenpair of (I (x) tau^{-1/2}) Omega (I (x) tau^{-1/2}) with outputs
/// restricted to the symmetric subspace. A degenerate top eigenvalue is
/// flagged and the Choi operator mixes the whole top eigenspace uniformly.
OptimalCloner optimal_cloner(const StateFamily &family, size_t n, size_t m, size_t k);

/// Universal measure-and-prepare channel, exact through the symmetric
/// projector on 2m systems.
Matrix measure_and_prepare(const SymmetricSpace &space, const Matrix &rho);

/// Choi operator of M after C.
ChoiOperator compose_measure_and_prepare(const ChoiOperator &choi);

struct KCopyFidelity {
    /// Per state; NaN for states excluded because of zero success.
    std::vector<double> per_state;
    std::vector<double> per_state_success;
    /// sum_x p_x O_x / sum_x p_x P_x.
    double average = 0;
    double success = 0;
    std::vector<std::string> diagnostics;
};

KCopyFidelity kcopy_fidelity(const ChoiOperator &choi, const StateFamily &family, size_t k);

struct GapRow {
    double success = 0;
    /// Trace norm of tr_{m-k} C(rho) - tr_{m-k} M(C(rho)), unnormalized.
    double gap = 0;
    double gap_bound = 0;
    double p_err = 0;
    double p_err_bound = 0;
};

struct GapReport {
    std::vector<GapRow> rows;
    double max_gap = 0;
    size_t violations = 0;
};

GapReport definetti_gap(const ChoiOperator &choi, const std::vector<Matrix> &probes, size_t k);
/// Probes are the family inputs psi_x^{(x) n}.
GapReport definetti_gap(const ChoiOperator &choi, const StateFamily &family, size_t k);

/// Trace norm of a Hermitian matrix.
double trace_norm(const Matrix &a);

}  // namespace clocklat::cloner

#endif

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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "clocklat/intlat.h"

namespace clocklat::cloner {

namespace {

double log_factorial(int n) {
    return std::lgamma(n + 1.0);
}

double log_binomial(int n, int k) {
    return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

/// One term of |n> = sum_a c |a>|n - a> for a split of total systems into k and total - k.
struct SplitEntry {
    size_t a;
    size_t b;
    size_t n;
    double c;
};

std::vector<SplitEntry> split_table(const SymmetricSpace &whole, const SymmetricSpace &part, const SymmetricSpace &rest) {
    std::vector<SplitEntry> out;
    out.reserve(part.dim() * rest.dim());
    size_t d = whole.d();
    int m = static_cast<int>(whole.m());
    int k = static_cast<int>(part.m());
    std::vector<int> occ(d);
    for (size_t a = 0; a < part.dim(); a++) {
        for (size_t b = 0; b < rest.dim(); b++) {
            double log_c = -log_binomial(m, k);
            for (size_t l = 0; l < d; l++) {
                occ[l] = part.occupation(a)[l] + rest.occupation(b)[l];
                log_c += log_binomial(occ[l], part.occupation(a)[l]);
            }
            out.push_back({a, b, whole.index_of(occ), std::exp(0.5 * log_c)});
        }
    }
    return out;
}

std::vector<std::vector<SplitEntry>> group_by(const std::vector<SplitEntry> &entries, size_t groups, size_t SplitEntry::*key) {
    std::vector<std::vector<SplitEntry>> out(groups);
    for (const auto &e : entries) {
        out[e.*key].push_back(e);
    }
    return out;
}

void check_dense_side(uint64_t side, const char *what) {
    if (side > kMaxSymmetricDim) {
        throw ResourceCapExceeded(std::string(what) + " has dimension " + std::to_string(side) +
                                  ", above the cap of " + std::to_string(kMaxSymmetricDim));
    }
}

void check_square(const Matrix &a, size_t dim, const char *what) {
    if (a.rows() != static_cast<Eigen::Index>(dim) || a.cols() != static_cast<Eigen::Index>(dim)) {
        throw InvalidArgument(std::string(what) + " must be a " + std::to_string(dim) + "x" + std::to_string(dim) +
                              " matrix in symmetric-subspace coordinates");
    }
}

Matrix kron(const Matrix &a, const Matrix &b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); i++) {
        for (Eigen::Index j = 0; j < a.cols(); j++) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

Matrix hermitian_part(const Matrix &a) {
    return 0.5 * (a + a.adjoint());
}

}  // namespace

uint64_t symmetric_dimension(size_t d, size_t m) {
    if (d == 0) {
        return 0;
    }
    return intlat::partition_count(m, d);
}

SymmetricSpace::SymmetricSpace(size_t d, size_t m) : d_(d), m_(m) {
    if (d == 0) {
        throw InvalidArgument("local dimension must be at least 1");
    }
    uint64_t dim = symmetric_dimension(d, m);
    if (dim > kMaxSymmetricDim) {
        throw ResourceCapExceeded("symmetric subspace for d=" + std::to_string(d) + ", m=" + std::to_string(m) +
                                  " has dimension " + std::to_string(dim) + ", above the cap of " +
                                  std::to_string(kMaxSymmetricDim));
    }
    for (const auto &tail : intlat::enumerate_partitions(m, d)) {
        std::vector<int> occ(d);
        int64_t rest = static_cast<int64_t>(m);
        for (size_t l = 1; l < d; l++) {
            occ[l] = static_cast<int>(tail[l - 1]);
            rest -= tail[l - 1];
        }
        occ[0] = static_cast<int>(rest);
        index_.emplace(occ, occupations_.size());
        occupations_.push_back(std::move(occ));
    }
}

size_t SymmetricSpace::index_of(const std::vector<int> &occupation) const {
    auto it = index_.find(occupation);
    if (it == index_.end()) {
        throw InvalidArgument("occupation does not belong to this symmetric subspace");
    }
    return it->second;
}

Vector SymmetricSpace::product_power(const Vector &psi) const {
    if (psi.size() != static_cast<Eigen::Index>(d_)) {
        throw InvalidArgument("state dimension does not match the symmetric subspace");
    }
    Vector out(dim());
    for (size_t i = 0; i < dim(); i++) {
        const auto &occ = occupations_[i];
        double log_norm = log_factorial(static_cast<int>(m_));
        Complex amp = 1;
        for (size_t l = 0; l < d_; l++) {
            log_norm -= log_factorial(occ[l]);
            for (int t = 0; t < occ[l]; t++) {
                amp *= psi[l];
            }
        }
        out[i] = amp * std::exp(0.5 * log_norm);
    }
    return out;
}

std::vector<std::pair<uint64_t, double>> SymmetricSpace::embedding(size_t i) const {
    if (m_ * d_ > 24) {
        throw ResourceCapExceeded("product-basis embedding needs m * d <= 24");
    }
    std::vector<size_t> letters;
    for (size_t l = 0; l < d_; l++) {
        letters.insert(letters.end(), occupations_.at(i)[l], l);
    }
    std::vector<std::pair<uint64_t, double>> out;
    do {
        uint64_t idx = 0;
        for (size_t l : letters) {
            idx = idx * d_ + l;
        }
        out.emplace_back(idx, 0.0);
    } while (std::next_permutation(letters.begin(), letters.end()));
    double amp = 1 / std::sqrt(static_cast<double>(out.size()));
    for (auto &e : out) {
        e.second = amp;
    }
    std::sort(out.begin(), out.end());
    return out;
}

Matrix partial_trace(const SymmetricSpace &space, const Matrix &rho, size_t k) {
    if (k > space.m()) {
        throw InvalidArgument("cannot keep more systems than there are");
    }
    check_square(rho, space.dim(), "operator");
    SymmetricSpace part(space.d(), k), rest(space.d(), space.m() - k);
    auto groups = group_by(split_table(space, part, rest), rest.dim(), &SplitEntry::b);
    Matrix out = Matrix::Zero(part.dim(), part.dim());
    for (const auto &g : groups) {
        for (const auto &e1 : g) {
            for (const auto &e2 : g) {
                out(e1.a, e2.a) += e1.c * e2.c * rho(e1.n, e2.n);
            }
        }
    }
    return out;
}

Matrix lift(const SymmetricSpace &space, const Matrix &x, size_t k) {
    if (k > space.m()) {
        throw InvalidArgument("cannot lift from more systems than there are");
    }
    SymmetricSpace part(space.d(), k), rest(space.d(), space.m() - k);
    check_square(x, part.dim(), "operator");
    auto groups = group_by(split_table(space, part, rest), rest.dim(), &SplitEntry::b);
    Matrix out = Matrix::Zero(space.dim(), space.dim());
    for (const auto &g : groups) {
        for (const auto &e1 : g) {
            for (const auto &e2 : g) {
                out(e1.n, e2.n) += e1.c * e2.c * x(e1.a, e2.a);
            }
        }
    }
    return out;
}

Matrix projector(const Vector &psi) {
    return psi * psi.adjoint();
}

void StateFamily::validate() const {
    if (d == 0) {
        throw InvalidArgument("state family needs d >= 1");
    }
    if (states.empty()) {
        throw InvalidArgument("state family is empty");
    }
    if (states.size() != priors.size()) {
        throw InvalidArgument("state family has " + std::to_string(states.size()) + " states but " +
                              std::to_string(priors.size()) + " priors");
    }
    double total = 0;
    for (size_t x = 0; x < states.size(); x++) {
        if (states[x].size() != static_cast<Eigen::Index>(d)) {
            throw InvalidArgument("state " + std::to_string(x) + " does not have dimension " + std::to_string(d));
        }
        if (std::abs(states[x].norm() - 1) > 1e-12) {
            throw InvalidArgument("state " + std::to_string(x) + " is not normalized");
        }
        if (!(priors[x] > 0)) {
            throw InvalidArgument("prior " + std::to_string(x) + " is not positive");
        }
        total += priors[x];
    }
    if (std::abs(total - 1) > 1e-12) {
        throw InvalidArgument("priors do not sum to 1");
    }
}

StateFamily equatorial_family(size_t phases) {
    if (phases == 0) {
        throw InvalidArgument("equatorial family needs at least one phase");
    }
    StateFamily f;
    f.d = 2;
    for (size_t j = 0; j < phases; j++) {
        double phi = 2 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(phases);
        Vector psi(2);
        psi << 1 / std::numbers::sqrt2, std::polar(1 / std::numbers::sqrt2, phi);
        f.states.push_back(psi);
        f.priors.push_back(1.0 / static_cast<double>(phases));
    }
    return f;
}

StateFamily tetrahedral_family() {
    StateFamily f;
    f.d = 2;
    double theta_low = std::acos(-1.0 / 3);
    std::vector<std::pair<double, double>> angles = {
        {0, 0}, {theta_low, 0}, {theta_low, 2 * std::numbers::pi / 3}, {theta_low, 4 * std::numbers::pi / 3}};
    for (auto [theta, phi] : angles) {
        Vector psi(2);
        psi << std::cos(theta / 2), std::polar(std::sin(theta / 2), phi);
        f.states.push_back(psi);
        f.priors.push_back(0.25);
    }
    return f;
}

StateFamily random_family(size_t d, size_t count, uint64_t seed) {
    if (d == 0 || count == 0) {
        throw InvalidArgument("random family needs d >= 1 and at least one state");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::exponential_distribution<double> weight(1.0);
    StateFamily f;
    f.d = d;
    double total = 0;
    for (size_t x = 0; x < count; x++) {
        Vector psi(d);
        for (size_t l = 0; l < d; l++) {
            psi[l] = Complex(normal(rng), normal(rng));
        }
        f.states.push_back(psi / psi.norm());
        f.priors.push_back(weight(rng) + 0.05);
        total += f.priors.back();
    }
    for (auto &p : f.priors) {
        p /= total;
    }
    return f;
}

Matrix input_average(const StateFamily &family, size_t n) {
    family.validate();
    SymmetricSpace in(family.d, n);
    Matrix tau = Matrix::Zero(in.dim(), in.dim());
    for (size_t x = 0; x < family.states.size(); x++) {
        tau += family.priors[x] * projector(in.product_power(family.states[x]));
    }
    return tau;
}

Matrix omega_operator(const StateFamily &family, size_t n, size_t m, size_t k) {
    family.validate();
    if (k > m) {
        throw InvalidArgument("k must not exceed m");
    }
    SymmetricSpace in(family.d, n), out(family.d, m), part(family.d, k);
    check_dense_side(static_cast<uint64_t>(in.dim()) * out.dim(), "output (x) input space");
    Matrix omega = Matrix::Zero(in.dim() * out.dim(), in.dim() * out.dim());
    for (size_t x = 0; x < family.states.size(); x++) {
        const auto &psi = family.states[x];
        Matrix lifted = lift(out, projector(part.product_power(psi)), k);
        Matrix input = projector(in.product_power(psi)).conjugate();
        omega += family.priors[x] * kron(lifted, input);
    }
    return omega;
}

size_t ChoiOperator::dim_in() const {
    return symmetric_dimension(d, n);
}

size_t ChoiOperator::dim_out() const {
    return symmetric_dimension(d, m);
}

Matrix ChoiOperator::apply(const Matrix &rho) const {
    size_t din = dim_in(), dout = dim_out();
    check_square(rho, din, "input state");
    Matrix out = Matrix::Zero(dout, dout);
    for (size_t i = 0; i < dout; i++) {
        for (size_t j = 0; j < dout; j++) {
            out(i, j) = (matrix.block(i * din, j * din, din, din).cwiseProduct(rho)).sum();
        }
    }
    return out;
}

double ChoiOperator::success(const Matrix &rho) const {
    return apply(rho).trace().real();
}

double ChoiOperator::max_success() const {
    size_t din = dim_in(), dout = dim_out();
    Matrix reduced = Matrix::Zero(din, din);
    for (size_t i = 0; i < dout; i++) {
        reduced += matrix.block(i * din, i * din, din, din);
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(hermitian_part(reduced), Eigen::EigenvaluesOnly);
    return eig.eigenvalues().maxCoeff();
}

ChoiOperator identity_choi(size_t d, size_t n) {
    SymmetricSpace space(d, n);
    check_dense_side(static_cast<uint64_t>(space.dim()) * space.dim(), "identity Choi operator");
    size_t dim = space.dim();
    Vector phi = Vector::Zero(dim * dim);
    for (size_t i = 0; i < dim; i++) {
        phi[i * dim + i] = 1;
    }
    return ChoiOperator{d, n, n, projector(phi)};
}

OptimalCloner optimal_cloner(const StateFamily &family, size_t n, size_t m, size_t k) {
    Matrix omega = omega_operator(family, n, m, k);
    size_t dout = symmetric_dimension(family.d, m);

    Eigen::SelfAdjointEigenSolver<Matrix> tau_eig(hermitian_part(input_average(family, n).conjugate()));
    const auto &lambda = tau_eig.eigenvalues();
    double top = lambda.maxCoeff();
    Matrix inv_sqrt = Matrix::Zero(lambda.size(), lambda.size());
    OptimalCloner result;
    result.success = top;
    for (Eigen::Index i = 0; i < lambda.size(); i++) {
        if (lambda[i] > 1e-12 * top) {
            Vector v = tau_eig.eigenvectors().col(i);
            inv_sqrt += projector(v) / std::sqrt(lambda[i]);
            result.success = std::min(result.success, lambda[i]);
            result.support_rank++;
        }
    }
    Matrix sandwich_side = kron(Matrix::Identity(dout, dout), inv_sqrt);
    Matrix sandwich = hermitian_part(sandwich_side * omega * sandwich_side);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sandwich);
    Eigen::Index last = sandwich.rows() - 1;
    result.fidelity = eig.eigenvalues()[last];
    result.spectral_gap = last > 0 ? result.fidelity - eig.eigenvalues()[last - 1] : result.fidelity;
    result.degenerate = last > 0 && result.spectral_gap <= 1e-9 * std::max(1.0, result.fidelity);
    // A tied top eigenspace is replaced by its uniform mixture, which is
    // basis independent and still optimal.
    Eigen::Index first = last;
    while (first > 0 && result.fidelity - eig.eigenvalues()[first - 1] <= 1e-9 * std::max(1.0, result.fidelity)) {
        first--;
    }
    Matrix top_space = Matrix::Zero(sandwich.rows(), sandwich.cols());
    for (Eigen::Index i = first; i <= last; i++) {
        top_space += projector(sandwich_side * eig.eigenvectors().col(i));
    }
    result.choi = ChoiOperator{family.d, n, m, result.success / static_cast<double>(last - first + 1) * top_space};
    return result;
}

Matrix measure_and_prepare(const SymmetricSpace &space, const Matrix &rho) {
    check_square(rho, space.dim(), "input of the measure-and-prepare channel");
    SymmetricSpace doubled(space.d(), 2 * space.m());
    auto groups = group_by(split_table(doubled, space, space), doubled.dim(), &SplitEntry::n);
    double scale = static_cast<double>(space.dim()) / static_cast<double>(doubled.dim());
    Matrix out = Matrix::Zero(space.dim(), space.dim());
    for (const auto &g : groups) {
        for (const auto &e1 : g) {
            for (const auto &e2 : g) {
                out(e1.b, e2.b) += scale * e1.c * e2.c * rho(e2.a, e1.a);
            }
        }
    }
    return out;
}

ChoiOperator compose_measure_and_prepare(const ChoiOperator &choi) {
    size_t din = choi.dim_in(), dout = choi.dim_out();
    SymmetricSpace out_space(choi.d, choi.m);
    ChoiOperator composed{choi.d, choi.n, choi.m, Matrix::Zero(choi.matrix.rows(), choi.matrix.cols())};
    Matrix block(dout, dout);
    for (size_t u = 0; u < din; u++) {
        for (size_t v = 0; v < din; v++) {
            for (size_t i = 0; i < dout; i++) {
                for (size_t j = 0; j < dout; j++) {
                    block(i, j) = choi.matrix(i * din + u, j * din + v);
                }
            }
            Matrix mapped = measure_and_prepare(out_space, block);
            for (size_t i = 0; i < dout; i++) {
                for (size_t j = 0; j < dout; j++) {
                    composed.matrix(i * din + u, j * din + v) = mapped(i, j);
                }
            }
        }
    }
    return composed;
}

KCopyFidelity kcopy_fidelity(const ChoiOperator &choi, const StateFamily &family, size_t k) {
    family.validate();
    if (family.d != choi.d) {
        throw InvalidArgument("state family and operation act on different local dimensions");
    }
    if (k > choi.m) {
        throw InvalidArgument("k must not exceed the number of outputs");
    }
    SymmetricSpace in(choi.d, choi.n), out(choi.d, choi.m), part(choi.d, k);
    KCopyFidelity result;
    double weighted_overlap = 0;
    for (size_t x = 0; x < family.states.size(); x++) {
        const auto &psi = family.states[x];
        Matrix produced = choi.apply(projector(in.product_power(psi)));
        double succ = produced.trace().real();
        result.per_state_success.push_back(succ);
        result.success += family.priors[x] * succ;
        if (!(succ > 1e-14)) {
            result.per_state.push_back(std::numeric_limits<double>::quiet_NaN());
            result.diagnostics.push_back("state " + std::to_string(x) + " excluded: zero success probability");
            continue;
        }
        Vector target = part.product_power(psi);
        double overlap = (target.adjoint() * partial_trace(out, produced, k) * target)(0, 0).real();
        result.per_state.push_back(overlap / succ);
        weighted_overlap += family.priors[x] * overlap;
    }
    result.average = result.success > 0 ? weighted_overlap / result.success : 0;
    return result;
}

double trace_norm(const Matrix &a) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(hermitian_part(a), Eigen::EigenvaluesOnly);
    return eig.eigenvalues().cwiseAbs().sum();
}

GapReport definetti_gap(const ChoiOperator &choi, const std::vector<Matrix> &probes, size_t k) {
    if (k > choi.m) {
        throw InvalidArgument("k must not exceed the number of outputs");
    }
    SymmetricSpace out(choi.d, choi.m);
    double d = static_cast<double>(choi.d);
    double m = static_cast<double>(choi.m);
    double kk = static_cast<double>(k);
    GapReport report;
    for (const auto &rho : probes) {
        Matrix produced = choi.apply(rho);
        Matrix prepared = measure_and_prepare(out, produced);
        GapRow row;
        row.success = produced.trace().real();
        row.gap = trace_norm(partial_trace(out, produced, k) - partial_trace(out, prepared, k));
        row.gap_bound = k == 0 ? 0.0 : 2 * kk * d / m;
        if (row.success > 0) {
            row.p_err = 0.5 * (1 + 0.5 * row.gap / row.success);
            row.p_err_bound = 0.5 + kk * d * d / (2 * m * row.success);
        } else {
            row.p_err = 0.5;
            row.p_err_bound = std::numeric_limits<double>::infinity();
        }
        if (row.gap > row.gap_bound + 1e-10 || row.p_err > row.p_err_bound + 1e-10) {
            report.violations++;
        }
        report.max_gap = std::max(report.max_gap, row.gap);
        report.rows.push_back(row);
    }
    return report;
}

GapReport definetti_gap(const ChoiOperator &choi, const StateFamily &family, size_t k) {
    family.validate();
    SymmetricSpace in(family.d, choi.n);
    std::vector<Matrix> probes;
    for (const auto &psi : family.states) {
        probes.push_back(projector(in.product_power(psi)));
    }
    return definetti_gap(choi, probes, k);
}

}  // namespace clocklat::cloner

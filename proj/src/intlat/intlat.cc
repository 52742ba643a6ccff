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

#include "clocklat/intlat.h"

#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <unordered_set>

namespace clocklat::intlat {

LatticePoint::LatticePoint(size_t r) {
    if (r > kMaxRank) {
        throw InvalidArgument("lattice rank " + std::to_string(r) + " exceeds the supported maximum");
    }
    rank = static_cast<uint8_t>(r);
}

LatticePoint::LatticePoint(std::initializer_list<int64_t> values) : LatticePoint(values.size()) {
    size_t i = 0;
    for (auto v : values) {
        c[i++] = v;
    }
}

LatticePoint LatticePoint::from_vector(const std::vector<int64_t> &values) {
    LatticePoint p(values.size());
    for (size_t i = 0; i < values.size(); i++) {
        p.c[i] = values[i];
    }
    return p;
}

LatticePoint LatticePoint::operator+(const LatticePoint &other) const {
    LatticePoint out = *this;
    for (size_t i = 0; i < rank; i++) {
        out.c[i] += other.c[i];
    }
    return out;
}

LatticePoint LatticePoint::operator-(const LatticePoint &other) const {
    LatticePoint out = *this;
    for (size_t i = 0; i < rank; i++) {
        out.c[i] -= other.c[i];
    }
    return out;
}

Eigen::VectorXd LatticePoint::to_eigen() const {
    Eigen::VectorXd v(rank);
    for (size_t i = 0; i < rank; i++) {
        v[i] = static_cast<double>(c[i]);
    }
    return v;
}

std::string LatticePoint::str() const {
    std::ostringstream out;
    out << "(";
    for (size_t i = 0; i < rank; i++) {
        out << (i ? "," : "") << c[i];
    }
    out << ")";
    return out.str();
}

size_t LatticePointHash::operator()(const LatticePoint &p) const {
    uint64_t h = 0x9E3779B97F4A7C15ULL ^ p.rank;
    for (size_t i = 0; i < p.rank; i++) {
        h ^= static_cast<uint64_t>(p.c[i]) + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
    }
    return static_cast<size_t>(h);
}

void validate(const ClockSpec &spec) {
    size_t d = spec.levels();
    size_t r = spec.rank();
    if (d == 0) {
        throw InvalidArgument("clock must have at least one level");
    }
    if (r > kMaxRank) {
        throw InvalidArgument("number of energy units exceeds " + std::to_string(kMaxRank));
    }
    double total = 0;
    for (size_t j = 0; j < d; j++) {
        double p = spec.probs[j];
        if (!(p > 0) || !std::isfinite(p)) {
            throw InvalidArgument("probs[" + std::to_string(j) + "] must be strictly positive");
        }
        total += p;
    }
    if (std::abs(total - 1) > 1e-12) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "probs must sum to 1 (got " << total << ")";
        throw InvalidArgument(msg.str());
    }
    for (size_t l = 0; l < r; l++) {
        if (!(spec.units[l] > 0) || !std::isfinite(spec.units[l])) {
            throw InvalidArgument("units[" + std::to_string(l) + "] must be strictly positive");
        }
    }
    if (spec.K.size() != r) {
        throw InvalidArgument(
            "K must have one row per energy unit (" + std::to_string(r) + "), got " + std::to_string(spec.K.size()));
    }
    for (size_t l = 0; l < r; l++) {
        if (spec.K[l].size() != d - 1) {
            throw InvalidArgument(
                "K row " + std::to_string(l) + " must have " + std::to_string(d - 1) + " entries (one per excited level)");
        }
    }
    if (d > 1 && r == 0) {
        throw InvalidArgument("a clock with excited levels needs at least one energy unit");
    }
    std::set<std::vector<int64_t>> seen;
    for (size_t j = 0; j + 1 < d; j++) {
        std::vector<int64_t> col;
        bool zero = true;
        for (size_t l = 0; l < r; l++) {
            col.push_back(spec.K[l][j]);
            zero = zero && spec.K[l][j] == 0;
        }
        if (zero) {
            throw InvalidArgument("K column " + std::to_string(j) + " is zero, so level " + std::to_string(j + 1) +
                                  " is degenerate with level 0");
        }
        if (!seen.insert(col).second) {
            throw InvalidArgument("K column " + std::to_string(j) + " repeats an earlier column");
        }
    }
    if (r > 0) {
        smith_form(spec.K);
    }
}

uint64_t partition_count(uint64_t n, size_t d) {
    if (d == 0) {
        throw InvalidArgument("partition_count needs d >= 1");
    }
    unsigned __int128 result = 1;
    uint64_t k = d - 1;
    for (uint64_t i = 1; i <= k; i++) {
        result = result * (n + i) / i;
        if (result > std::numeric_limits<uint64_t>::max()) {
            return std::numeric_limits<uint64_t>::max();
        }
    }
    return static_cast<uint64_t>(result);
}

void for_each_partition(
    uint64_t n, size_t d, const std::function<void(const std::vector<int64_t> &)> &visit, uint64_t cap) {
    uint64_t count = partition_count(n, d);
    if (count > cap) {
        throw ResourceCapExceeded(
            "enumerating partitions of n=" + std::to_string(n) + " over d=" + std::to_string(d) + " levels needs " +
            std::to_string(count) + " points, above the cap of " + std::to_string(cap));
    }
    size_t c = d - 1;
    std::vector<int64_t> v(c, 0);
    uint64_t sum = 0;
    visit(v);
    while (true) {
        size_t i = c;
        while (i > 0) {
            if (sum < n) {
                v[i - 1]++;
                sum++;
                break;
            }
            sum -= static_cast<uint64_t>(v[i - 1]);
            v[i - 1] = 0;
            i--;
        }
        if (i == 0) {
            return;
        }
        visit(v);
    }
}

std::vector<std::vector<int64_t>> enumerate_partitions(uint64_t n, size_t d, uint64_t cap) {
    std::vector<std::vector<int64_t>> out;
    for_each_partition(n, d, [&](const std::vector<int64_t> &v) { out.push_back(v); }, cap);
    return out;
}

namespace {

SmithForm checked_smith(const ClockSpec &spec) {
    validate(spec);
    if (spec.rank() == 0) {
        SmithForm empty;
        empty.cols = 0;
        return empty;
    }
    return smith_form(spec.K);
}

}  // namespace

ClockModel::ClockModel(ClockSpec spec) : spec_(std::move(spec)), smith_(checked_smith(spec_)) {
}

std::vector<double> ClockModel::smith_units() const {
    size_t r = rank();
    std::vector<double> out(r, 0.0);
    for (size_t l = 0; l < r; l++) {
        double acc = 0;
        for (size_t i = 0; i < r; i++) {
            acc += spec_.units[i] * static_cast<double>(smith_.T[i][l]);
        }
        out[l] = acc * static_cast<double>(smith_.A[l]);
    }
    return out;
}

double ClockModel::energy(const LatticePoint &s) const {
    auto u = smith_units();
    double e = 0;
    for (size_t l = 0; l < u.size(); l++) {
        e += u[l] * static_cast<double>(s[l]);
    }
    return e;
}

Eigen::MatrixXd ClockModel::projected_S() const {
    size_t r = rank();
    size_t c = levels() - 1;
    Eigen::MatrixXd out(r, c);
    for (size_t l = 0; l < r; l++) {
        for (size_t j = 0; j < c; j++) {
            out(l, j) = static_cast<double>(smith_.S[l][j]);
        }
    }
    return out;
}

uint64_t lattice_size(const ClockModel &model, uint64_t n, uint64_t cap) {
    std::unordered_set<LatticePoint, LatticePointHash> sites;
    for_each_partition(
        n, model.levels(), [&](const std::vector<int64_t> &v) { sites.insert(model.smith_vector(v)); }, cap);
    return sites.size();
}

Moments moments(const ClockModel &model, double n) {
    const auto &spec = model.spec();
    size_t r = model.rank();
    size_t c = model.levels() - 1;
    Eigen::VectorXd p(c);
    for (size_t j = 0; j < c; j++) {
        p[j] = spec.probs[j + 1];
    }
    Eigen::MatrixXd sigma = n * (Eigen::MatrixXd(p.asDiagonal()) - p * p.transpose());
    Eigen::MatrixXd K(r, c);
    for (size_t l = 0; l < r; l++) {
        for (size_t j = 0; j < c; j++) {
            K(l, j) = static_cast<double>(spec.K[l][j]);
        }
    }
    Eigen::MatrixXd PS = model.projected_S();
    Moments out;
    out.mean = n * K * p;
    out.cov = K * sigma * K.transpose();
    out.smith_mean = n * PS * p;
    out.smith_cov = PS * sigma * PS.transpose();
    return out;
}

double invariance_quantity(const ClockModel &model, double n) {
    if (model.rank() == 0) {
        return 1.0;
    }
    auto mom = moments(model, n);
    return static_cast<double>(model.unit_cell_volume()) / std::sqrt(mom.cov.determinant());
}

EquivalenceReport equivalent_representation_check(
    const ClockSpec &a, const ClockSpec &b, const std::vector<uint64_t> &probes) {
    EquivalenceReport report;
    report.probes = probes;
    ClockModel ma(a);
    ClockModel mb(b);
    if (ma.rank() != mb.rank()) {
        report.diagnostics.push_back(
            "unit counts differ: " + std::to_string(ma.rank()) + " vs " + std::to_string(mb.rank()));
        return report;
    }
    report.quantity_a = invariance_quantity(ma, 1.0);
    report.quantity_b = invariance_quantity(mb, 1.0);
    bool ok = true;
    double scale = std::max(std::abs(report.quantity_a), std::abs(report.quantity_b));
    if (std::abs(report.quantity_a - report.quantity_b) > 1e-10 * scale) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "invariance quantity differs: " << report.quantity_a << " vs " << report.quantity_b;
        report.diagnostics.push_back(msg.str());
        ok = false;
    }
    for (auto n : probes) {
        uint64_t sa = lattice_size(ma, n);
        uint64_t sb = lattice_size(mb, n);
        report.sizes_a.push_back(sa);
        report.sizes_b.push_back(sb);
        if (sa != sb) {
            report.diagnostics.push_back(
                "lattice sizes differ at n=" + std::to_string(n) + ": " + std::to_string(sa) + " vs " +
                std::to_string(sb));
            ok = false;
        }
    }
    report.equivalent = ok;
    return report;
}

}  // namespace clocklat::intlat

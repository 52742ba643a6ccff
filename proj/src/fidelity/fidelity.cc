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

#include "clocklat/fidelity.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <unordered_map>

namespace clocklat::fidelity {

namespace {

using PointIndex = std::unordered_map<LatticePoint, size_t, intlat::LatticePointHash>;

struct WindowedSites {
    std::vector<LatticePoint> points;
    std::vector<double> weights;
    double discarded = 0;
};

// Keeps output sites within window_sigmas standard deviations of the mean on
// every Smith axis. `weight(i)` gives the per-site weight to keep; the sum of
// weights of dropped sites is reported.
template <typename WeightFn>
WindowedSites window_sites(const EnergyDistribution &output, double window_sigmas, WeightFn weight) {
    WindowedSites out;
    size_t r = output.rank();
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(r);
    Eigen::VectorXd sd = Eigen::VectorXd::Zero(r);
    if (r > 0 && output.size() > 1) {
        mu = output.mean();
        sd = output.covariance().diagonal().cwiseSqrt();
    }
    for (size_t i = 0; i < output.size(); i++) {
        double w = weight(i);
        const auto &t = output.points()[i];
        bool inside = true;
        for (size_t l = 0; l < r && inside; l++) {
            inside = std::abs(static_cast<double>(t[l]) - mu[l]) <= window_sigmas * sd[l] + 1e-9;
        }
        if (inside) {
            if (w > 0) {
                out.points.push_back(t);
                out.weights.push_back(w);
            }
        } else {
            out.discarded += w * w;
        }
    }
    return out;
}

void check_compatible(const Filter &filter, const EnergyDistribution &output) {
    if (filter.rank() != output.rank()) {
        throw InvalidArgument("filter and output distribution have different lattice ranks");
    }
}

}  // namespace

const char *method_name(Method m) {
    switch (m) {
        case Method::ExactPM:
            return "exact-PM";
        case Method::ExactCL:
            return "exact-CL";
        case Method::Bound:
            return "bound";
        case Method::Asymptotic:
            return "asymptotic";
        case Method::Measurement:
            return "measurement";
    }
    return "unknown";
}

Filter::Filter(const EnergyDistribution &input, std::vector<double> pi)
    : points_(input.points()), pi_(std::move(pi)), copies_(input.copies()), rank_(input.rank()) {
    if (pi_.size() != points_.size()) {
        throw InvalidArgument(
            "filter has " + std::to_string(pi_.size()) + " coefficients for " + std::to_string(points_.size()) +
            " sites");
    }
    masses_.resize(points_.size());
    success_ = 0;
    for (size_t i = 0; i < points_.size(); i++) {
        if (!(pi_[i] >= 0 && pi_[i] <= 1)) {
            throw InvalidArgument("filter coefficient at " + points_[i].str() + " lies outside [0, 1]");
        }
        masses_[i] = input.mass_at(i);
        success_ += masses_[i] * pi_[i];
    }
    if (!(success_ > 0)) {
        throw InvalidArgument("filter has zero success probability");
    }
    xi_.resize(points_.size());
    for (size_t i = 0; i < points_.size(); i++) {
        xi_[i] = std::sqrt(masses_[i] * pi_[i] / success_);
    }
}

Filter Filter::trivial(const EnergyDistribution &input) {
    return Filter(input, std::vector<double>(input.size(), 1.0));
}

Filter Filter::from_coefficients(const EnergyDistribution &input, std::vector<double> pi) {
    return Filter(input, std::move(pi));
}

Filter Filter::mode_indicator(const EnergyDistribution &input) {
    std::vector<double> pi(input.size(), 0.0);
    pi[input.mode_index()] = 1.0;
    return Filter(input, std::move(pi));
}

Filter Filter::scaled(double c) const {
    if (!(c > 0 && c <= 1)) {
        throw InvalidArgument("filter scale must lie in (0, 1]");
    }
    Filter out = *this;
    out.success_ = 0;
    for (size_t i = 0; i < pi_.size(); i++) {
        out.pi_[i] = c * pi_[i];
        out.success_ += masses_[i] * out.pi_[i];
    }
    for (size_t i = 0; i < pi_.size(); i++) {
        out.xi_[i] = std::sqrt(masses_[i] * out.pi_[i] / out.success_);
    }
    return out;
}

double Filter::amplitude_sum() const {
    double total = 0;
    for (double x : xi_) {
        total += x;
    }
    return total;
}

FidelityResult pm_fidelity_exact(
    const Filter &filter, const EnergyDistribution &output, const EnergyDistribution &guess,
    const TruncationOptions &options) {
    check_compatible(filter, output);
    if (guess.rank() != output.rank()) {
        throw InvalidArgument("guess and output distribution have different lattice ranks");
    }
    auto sites = window_sites(output, options.window_sigmas, [&](size_t i) {
        double q = guess.mass(output.points()[i]);
        return std::sqrt(output.mass_at(i) * q);
    });
    if (sites.points.empty()) {
        throw InvalidArgument("guess and output distribution share no sites inside the window");
    }

    std::unordered_map<LatticePoint, double, intlat::LatticePointHash> f;
    const auto &xi = filter.amplitudes();
    for (size_t k = 0; k < sites.points.size(); k++) {
        for (size_t i = 0; i < filter.size(); i++) {
            if (xi[i] > 0) {
                f[sites.points[k] - filter.points()[i]] += xi[i] * sites.weights[k];
            }
        }
    }
    std::vector<std::pair<LatticePoint, double>> terms(f.begin(), f.end());
    std::sort(terms.begin(), terms.end(), [](const auto &a, const auto &b) { return a.first < b.first; });
    double value = 0;
    for (const auto &term : terms) {
        value += term.second * term.second;
    }

    FidelityResult res;
    res.value = value;
    res.success = filter.success();
    res.method = Method::ExactPM;
    double ns = static_cast<double>(filter.size());
    res.truncation_bound = 2 * std::sqrt(value * ns * sites.discarded) + ns * sites.discarded;
    return res;
}

FidelityResult cloning_bound(const Filter &filter, const EnergyDistribution &output) {
    check_compatible(filter, output);
    double sum = filter.amplitude_sum();
    FidelityResult res;
    res.value = output.max_mass() * sum * sum;
    res.success = filter.success();
    res.method = Method::Bound;
    res.vacuous = res.value > 1 + 1e-12;
    return res;
}

double asymptotic_prefactor(const ClockModel &model, double m) {
    if (model.rank() == 0) {
        return 1.0;
    }
    auto mom = intlat::moments(model, m);
    double r = static_cast<double>(model.rank());
    return std::pow(2 * std::numbers::pi, -r / 2) / std::sqrt(mom.smith_cov.determinant());
}

FidelityResult asymptotic_fidelity(const ClockModel &model, const Filter &filter, double m) {
    if (filter.rank() != model.rank()) {
        throw InvalidArgument("filter rank does not match the clock");
    }
    double sum = filter.amplitude_sum();
    FidelityResult res;
    res.value = asymptotic_prefactor(model, m) * sum * sum;
    res.success = filter.success();
    res.method = Method::Asymptotic;
    double n = static_cast<double>(filter.copies());
    if (m < 10 * n * n) {
        res.warnings.push_back("asymptotic formula used outside its validity range (m < 10 n^2)");
    }
    return res;
}

namespace {

// Sparse layout of the cloning objective: entry k couples offset e[k] and
// input site s[k] with coefficient a[k] = xi_s sqrt(p_{s+E,m}).
struct ClonerTable {
    std::vector<LatticePoint> offsets;
    std::vector<size_t> e, s;
    std::vector<double> a;
    std::vector<std::vector<size_t>> by_site;
    double discarded = 0;
};

ClonerTable build_table(const Filter &filter, const EnergyDistribution &output, const ClonerOptions &options) {
    ClonerTable tab;
    auto sites =
        window_sites(output, options.window_sigmas, [&](size_t i) { return std::sqrt(output.mass_at(i)); });
    tab.discarded = sites.discarded;
    uint64_t entries = static_cast<uint64_t>(sites.points.size()) * filter.size();
    if (entries > options.table_cap) {
        throw ResourceCapExceeded(
            "cloner table needs " + std::to_string(entries) + " entries, above the cap of " +
            std::to_string(options.table_cap));
    }
    PointIndex site_index;
    for (size_t k = 0; k < sites.points.size(); k++) {
        site_index.emplace(sites.points[k], k);
    }
    std::vector<LatticePoint> offsets;
    for (const auto &t : sites.points) {
        for (const auto &p : filter.points()) {
            offsets.push_back(t - p);
        }
    }
    std::sort(offsets.begin(), offsets.end());
    offsets.erase(std::unique(offsets.begin(), offsets.end()), offsets.end());
    tab.offsets = offsets;
    tab.by_site.resize(filter.size());
    const auto &xi = filter.amplitudes();
    for (size_t ei = 0; ei < offsets.size(); ei++) {
        for (size_t si = 0; si < filter.size(); si++) {
            auto it = site_index.find(filter.points()[si] + offsets[ei]);
            if (it == site_index.end()) {
                continue;
            }
            tab.by_site[si].push_back(tab.a.size());
            tab.e.push_back(ei);
            tab.s.push_back(si);
            tab.a.push_back(xi[si] * sites.weights[it->second]);
        }
    }
    return tab;
}

double objective(const ClonerTable &tab, const std::vector<double> &x, std::vector<double> &g) {
    std::fill(g.begin(), g.end(), 0.0);
    for (size_t k = 0; k < x.size(); k++) {
        g[tab.e[k]] += tab.a[k] * x[k];
    }
    double f = 0;
    for (double v : g) {
        f += v * v;
    }
    return f;
}

// Rescales x so that the squares over each input site sum to one. Sites whose
// coefficients all vanish get uniform weights.
void normalize_per_site(const ClonerTable &tab, std::vector<double> &x) {
    for (const auto &entries : tab.by_site) {
        double norm = 0;
        for (auto k : entries) {
            norm += x[k] * x[k];
        }
        if (norm > 0) {
            double inv = 1 / std::sqrt(norm);
            for (auto k : entries) {
                x[k] *= inv;
            }
        } else if (!entries.empty()) {
            double u = 1 / std::sqrt(static_cast<double>(entries.size()));
            for (auto k : entries) {
                x[k] = u;
            }
        }
    }
}

struct AscentResult {
    std::vector<double> x;
    double value = 0;
    double residual = 0;
    int iterations = 0;
    bool converged = false;
};

void fixed_point_map(const ClonerTable &tab, const std::vector<double> &x, std::vector<double> &g, std::vector<double> &out) {
    objective(tab, x, g);
    out.resize(x.size());
    for (size_t k = 0; k < x.size(); k++) {
        out[k] = g[tab.e[k]] * tab.a[k];
    }
    normalize_per_site(tab, out);
}

double max_abs_diff(const std::vector<double> &a, const std::vector<double> &b) {
    double r = 0;
    for (size_t k = 0; k < a.size(); k++) {
        r = std::max(r, std::abs(a[k] - b[k]));
    }
    return r;
}

// Fixed-point ascent x <- normalize(g_E a_{E,s}) with squared extrapolation
// (SQUAREM). Extrapolated points are kept only if they do not lower the
// objective, so the iteration stays monotone like the plain map.
AscentResult ascend(const ClonerTable &tab, std::vector<double> x, const ClonerOptions &options) {
    normalize_per_site(tab, x);
    std::vector<double> g(tab.offsets.size());
    std::vector<double> x1, x2, xe, xn;
    AscentResult res;
    int evals = 0;
    while (evals < options.max_iterations) {
        fixed_point_map(tab, x, g, x1);
        evals++;
        double residual = max_abs_diff(x1, x);
        if (residual < options.tolerance) {
            res.converged = true;
            res.residual = residual;
            x = std::move(x1);
            break;
        }
        fixed_point_map(tab, x1, g, x2);
        evals++;
        double rr = 0, vv = 0;
        for (size_t k = 0; k < x.size(); k++) {
            double r = x1[k] - x[k];
            double v = x2[k] - 2 * x1[k] + x[k];
            rr += r * r;
            vv += v * v;
        }
        double f2 = objective(tab, x2, g);
        bool accepted = false;
        if (vv > 0) {
            double alpha = -std::sqrt(rr / vv);
            if (alpha < -1) {
                xe.resize(x.size());
                for (size_t k = 0; k < x.size(); k++) {
                    double r = x1[k] - x[k];
                    double v = x2[k] - 2 * x1[k] + x[k];
                    xe[k] = std::max(0.0, x[k] - 2 * alpha * r + alpha * alpha * v);
                }
                normalize_per_site(tab, xe);
                fixed_point_map(tab, xe, g, xn);
                evals++;
                double fn = objective(tab, xn, g);
                if (fn >= f2) {
                    x = std::move(xn);
                    accepted = true;
                }
            }
        }
        if (!accepted) {
            x = std::move(x2);
        }
        res.residual = residual;
    }
    res.iterations = evals;
    res.value = objective(tab, x, g);
    res.x = std::move(x);
    return res;
}

}  // namespace

double cloning_objective(
    const Filter &filter, const EnergyDistribution &output, const std::vector<LatticePoint> &offsets,
    const std::vector<std::vector<double>> &q) {
    check_compatible(filter, output);
    const auto &xi = filter.amplitudes();
    double total = 0;
    for (size_t e = 0; e < offsets.size(); e++) {
        double g = 0;
        for (size_t s = 0; s < filter.size(); s++) {
            double p = output.mass(filter.points()[s] + offsets[e]);
            g += xi[s] * std::sqrt(p * q[e][s]);
        }
        total += g * g;
    }
    return total;
}

ClonerSolution cloning_fidelity_exact(
    const Filter &filter, const EnergyDistribution &output, const ClonerOptions &options) {
    check_compatible(filter, output);
    auto tab = build_table(filter, output, options);
    if (tab.a.empty()) {
        throw InvalidArgument("cloner table is empty: no output site is reachable from the filter support");
    }

    std::vector<std::vector<double>> starts;
    // The output distribution itself as a guess.
    {
        std::vector<double> x(tab.a.size());
        for (size_t k = 0; k < x.size(); k++) {
            x[k] = tab.a[k];
        }
        starts.push_back(x);
    }
    for (const auto &guess : options.warm_starts) {
        std::vector<double> x(tab.a.size());
        for (size_t k = 0; k < x.size(); k++) {
            x[k] = std::sqrt(guess.mass(filter.points()[tab.s[k]] + tab.offsets[tab.e[k]]));
        }
        starts.push_back(x);
    }
    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> unif(0.05, 1.0);
    for (int r = 0; r < options.restarts; r++) {
        std::vector<double> x(tab.a.size());
        for (auto &v : x) {
            v = unif(rng);
        }
        starts.push_back(x);
    }

    AscentResult best;
    bool have = false;
    bool any_converged = false;
    for (auto &x0 : starts) {
        auto res = ascend(tab, std::move(x0), options);
        bool better = !have || (res.converged && !best.converged) ||
                      (res.converged == best.converged && res.value > best.value);
        if (better) {
            best = std::move(res);
            have = true;
        }
        any_converged = any_converged || best.converged;
    }

    ClonerSolution sol;
    sol.offsets = tab.offsets;
    sol.q.assign(tab.offsets.size(), std::vector<double>(filter.size(), 0.0));
    for (size_t k = 0; k < best.x.size(); k++) {
        sol.q[tab.e[k]][tab.s[k]] = best.x[k] * best.x[k];
    }
    sol.fidelity = best.value;
    sol.success = filter.success();
    sol.residual = best.residual;
    sol.iterations = best.iterations;
    sol.truncation_bound = 2 * std::sqrt(best.value * tab.discarded) + tab.discarded;
    if (!any_converged) {
        throw ClonerNotConverged(
            "cloner fixed-point iteration did not reach tolerance within " + std::to_string(options.max_iterations) +
                " iterations",
            std::move(sol));
    }
    return sol;
}

SandwichTable sandwich_experiment(
    const ClockModel &model, const Filter &filter, const std::vector<uint64_t> &m_list,
    const SandwichOptions &options) {
    if (!std::is_sorted(m_list.begin(), m_list.end())) {
        throw InvalidArgument("mList must be ascending");
    }
    SandwichTable table;
    for (auto m : m_list) {
        SandwichRow row;
        row.m = m;
        dist::ExactOptions eo;
        eo.cap = options.cap;
        auto output = dist::exact_distribution(model, m, eo);
        EnergyDistribution guess = model.rank() == 0 ? output : dist::guess_distribution(model, output, options.eta);
        row.pm = pm_fidelity_exact(filter, output, guess, options.truncation);
        row.bound = cloning_bound(filter, output);
        row.asymptotic = asymptotic_fidelity(model, filter, static_cast<double>(m));
        double asym = row.asymptotic.value;
        row.gap_pm = std::abs(asym - row.pm.value) / asym;
        row.gap_bound = std::abs(asym - row.bound.value) / asym;
        if (options.run_cloner) {
            auto co = options.cloner;
            co.window_sigmas = options.truncation.window_sigmas;
            co.warm_starts.push_back(guess);
            try {
                row.cl = cloning_fidelity_exact(filter, output, co);
                row.gap_cl = std::abs(asym - row.cl->fidelity) / asym;
            } catch (const ResourceCapExceeded &) {
                row.cl.reset();
            }
        }
        table.rows.push_back(std::move(row));
    }
    for (size_t i = 1; i < table.rows.size(); i++) {
        const auto &a = table.rows[i - 1];
        const auto &b = table.rows[i];
        if (b.gap_pm > a.gap_pm || b.gap_bound > a.gap_bound) {
            table.gaps_non_increasing = false;
        }
        if (a.gap_cl && b.gap_cl && *b.gap_cl > *a.gap_cl) {
            table.gaps_non_increasing = false;
        }
    }
    return table;
}

MeasurementResult pm_fidelity_via_measurement(
    const ClockModel &model, const Filter &filter, const EnergyDistribution &output, const EnergyDistribution &guess,
    double sigma, const MeasurementOptions &options) {
    if (model.rank() != 1) {
        throw InvalidArgument("measurement cross-check is defined only for clocks with a single energy unit");
    }
    if (!options.uniform_period && !(sigma > 0)) {
        throw InvalidArgument("measurement prior width sigma must be positive");
    }
    if (options.t_grid.empty()) {
        throw InvalidArgument("measurement cross-check needs a non-empty time grid");
    }
    check_compatible(filter, output);
    double unit = model.smith_units()[0];
    auto sites = window_sites(output, 8.0, [&](size_t i) {
        return std::sqrt(output.mass_at(i) * guess.mass(output.points()[i]));
    });
    if (sites.points.empty()) {
        throw InvalidArgument("guess and output distribution share no sites inside the window");
    }
    const auto &xi = filter.amplitudes();

    auto span = [](const std::vector<LatticePoint> &pts) {
        int64_t lo = pts.front()[0], hi = pts.front()[0];
        for (const auto &p : pts) {
            lo = std::min(lo, p[0]);
            hi = std::max(hi, p[0]);
        }
        return hi - lo;
    };
    // |A|^2 |B|^2 is a trigonometric polynomial in unit * tau with integer
    // frequencies of magnitude at most this.
    int64_t max_freq = span(filter.points()) + span(sites.points);

    auto integrand = [&](double tau) {
        std::complex<double> a = 0, b = 0;
        for (size_t i = 0; i < filter.size(); i++) {
            a += xi[i] * std::polar(1.0, static_cast<double>(filter.points()[i][0]) * unit * tau);
        }
        for (size_t k = 0; k < sites.points.size(); k++) {
            b += sites.weights[k] * std::polar(1.0, static_cast<double>(sites.points[k][0]) * unit * tau);
        }
        return std::norm(a) * std::norm(b);
    };

    std::vector<double> nodes, weights;
    if (options.uniform_period) {
        double period = 2 * std::numbers::pi / unit;
        size_t n = static_cast<size_t>(2 * max_freq + 16);
        for (size_t j = 0; j < n; j++) {
            nodes.push_back(period * static_cast<double>(j) / static_cast<double>(n));
            weights.push_back(1.0 / static_cast<double>(n));
        }
    } else {
        double step = std::min(sigma / 8, std::numbers::pi / (unit * static_cast<double>(2 * max_freq + 1)));
        double half = 10 * sigma;
        size_t n = static_cast<size_t>(std::ceil(2 * half / step));
        double h = 2 * half / static_cast<double>(n);
        double norm = 1 / std::sqrt(2 * std::numbers::pi * sigma * sigma);
        for (size_t j = 0; j <= n; j++) {
            double t = -half + h * static_cast<double>(j);
            double w = (j == 0 || j == n) ? h / 2 : h;
            nodes.push_back(t);
            weights.push_back(w * norm * std::exp(-t * t / (2 * sigma * sigma)));
        }
    }

    MeasurementResult out;
    double worst = std::numeric_limits<double>::infinity();
    double sum = 0;
    for (double t : options.t_grid) {
        double f = 0;
        for (size_t j = 0; j < nodes.size(); j++) {
            f += weights[j] * integrand(nodes[j] - t);
        }
        out.per_t.push_back(f);
        worst = std::min(worst, f);
        sum += f;
    }
    out.worst.value = worst;
    out.worst.success = filter.success();
    out.worst.method = Method::Measurement;
    out.average = sum / static_cast<double>(options.t_grid.size());
    return out;
}

}  // namespace clocklat::fidelity

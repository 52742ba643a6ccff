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

#include <algorithm>
#include <cmath>
#include <numeric>

namespace clocklat::filteropt {

namespace {

void check_target(double target) {
    if (!(target > 0 && target <= 1)) {
        throw InvalidArgument("target success probability must lie in (0, 1]");
    }
}

void check_copies(double n, double m) {
    if (!(n > 0) || !(m > 0)) {
        throw InvalidArgument("copy numbers n and m must be positive");
    }
}

void check_rank(int r) {
    if (r < 1) {
        throw InvalidArgument("the number of energy units r must be at least 1");
    }
}

}  // namespace

const char *method_name(TradeoffMethod m) {
    switch (m) {
        case TradeoffMethod::ExactKKT:
            return "exact-KKT";
        case TradeoffMethod::Parametric:
            return "parametric-alpha";
        case TradeoffMethod::LowSuccess:
            return "closed-form-low-succ";
        case TradeoffMethod::HighSuccess:
            return "closed-form-high-succ";
    }
    return "unknown";
}

double WaterfillSolution::amplitude_sum() const {
    return std::accumulate(xi.begin(), xi.end(), 0.0);
}

Filter WaterfillSolution::to_filter(const EnergyDistribution &dist) const {
    if (dist.points() != points) {
        throw InvalidArgument("distribution does not match the sites of the water-filling solution");
    }
    return Filter::from_coefficients(dist, pi);
}

WaterfillSolution waterfill(const EnergyDistribution &dist, double target) {
    check_target(target);
    size_t n = dist.size();
    if (n == 0) {
        throw InvalidArgument("water-filling needs a non-empty distribution");
    }
    std::vector<double> cap(n);
    double min_p = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < n; i++) {
        double p = dist.mass_at(i);
        min_p = std::min(min_p, p);
        cap[i] = std::sqrt(p / target);
    }
    // Ascending caps; ties keep lexicographic site order.
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return cap[a] < cap[b]; });

    // Capping the k smallest sites leaves a plateau fixed by normalization.
    // The first k whose plateau lies between the last capped value and the
    // next cap satisfies every optimality condition.
    double zeta = cap[order.back()];
    double capped_sq = 0;
    for (size_t k = 0; k < n; k++) {
        double rem = 1 - capped_sq;
        if (rem > 0) {
            double z = std::sqrt(rem / static_cast<double>(n - k));
            bool below_next = z <= cap[order[k]];
            bool above_prev = k == 0 || cap[order[k - 1]] <= z;
            if (below_next && above_prev) {
                zeta = z;
                break;
            }
        }
        capped_sq += cap[order[k]] * cap[order[k]];
    }

    WaterfillSolution sol;
    sol.points = dist.points();
    sol.target = target;
    sol.zeta = zeta;
    sol.flat_regime = target < min_p;
    sol.xi.resize(n);
    sol.coincidence.resize(n);
    sol.pi.resize(n);
    for (size_t i = 0; i < n; i++) {
        sol.coincidence[i] = cap[i] <= zeta * (1 + 1e-12);
        sol.xi[i] = sol.coincidence[i] ? cap[i] : zeta;
        sol.pi[i] = std::min(1.0, sol.xi[i] * sol.xi[i] * target / dist.mass_at(i));
    }
    return sol;
}

double KktCertificate::max() const {
    return std::max({primal, dual, slackness});
}

KktCertificate kkt_certificate(const EnergyDistribution &dist, const WaterfillSolution &sol) {
    KktCertificate cert;
    double norm = 0;
    for (size_t i = 0; i < sol.xi.size(); i++) {
        double cap = std::sqrt(dist.mass_at(i) / sol.target);
        double sigma = 1 - sol.xi[i] / sol.zeta;
        norm += sol.xi[i] * sol.xi[i];
        cert.primal = std::max(cert.primal, sol.xi[i] - cap);
        cert.primal = std::max(cert.primal, -sol.xi[i]);
        cert.dual = std::max(cert.dual, -sigma);
        cert.slackness = std::max(cert.slackness, std::abs(sigma * (sol.xi[i] - cap)));
    }
    cert.primal = std::max(cert.primal, std::abs(norm - 1));
    return cert;
}

std::vector<double> random_feasible_filter(const EnergyDistribution &dist, double target, std::mt19937_64 &rng) {
    check_target(target);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> pi(dist.size());
    double succ = 0;
    for (size_t i = 0; i < pi.size(); i++) {
        pi[i] = unif(rng);
        succ += dist.mass_at(i) * pi[i];
    }
    if (succ > target) {
        for (auto &v : pi) {
            v *= target / succ;
        }
    } else {
        double lambda = (target - succ) / (1 - succ);
        for (auto &v : pi) {
            v = std::min(1.0, v + lambda * (1 - v));
        }
    }
    return pi;
}

TradeoffPoint optimal_fidelity_exact(
    const ClockModel &model, const EnergyDistribution &input, double m, double target) {
    if (!(m > 0)) {
        throw InvalidArgument("output copy number m must be positive");
    }
    auto sol = waterfill(input, target);
    double sum = sol.amplitude_sum();
    TradeoffPoint pt;
    pt.succ = target;
    pt.fidelity = fidelity::asymptotic_prefactor(model, m) * sum * sum;
    pt.method = TradeoffMethod::ExactKKT;
    pt.flat_regime = sol.flat_regime;
    double n = static_cast<double>(input.copies());
    if (m < 10 * n * n) {
        pt.warnings.push_back("Gaussian prefactor used outside its validity range (m < 10 n^2)");
    }
    return pt;
}

TradeoffPoint optimal_fidelity_exact(const ClockModel &model, uint64_t n, double m, double target) {
    return optimal_fidelity_exact(model, dist::exact_distribution(model, n), m, target);
}

TradeoffPoint low_success_fidelity(const ClockModel &model, uint64_t n, double m) {
    if (!(m > 0)) {
        throw InvalidArgument("output copy number m must be positive");
    }
    auto input = dist::exact_distribution(model, n);
    double min_p = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < input.size(); i++) {
        min_p = std::min(min_p, input.mass_at(i));
    }
    TradeoffPoint pt;
    pt.succ = min_p;
    pt.fidelity = static_cast<double>(input.size()) * fidelity::asymptotic_prefactor(model, m);
    pt.method = TradeoffMethod::LowSuccess;
    pt.flat_regime = true;
    return pt;
}

double upper_incomplete_gamma(double a, double x) {
    if (!(a > 0) || !(x >= 0) || !std::isfinite(a) || std::isnan(x)) {
        throw InvalidArgument("upper incomplete gamma needs a > 0 and x >= 0");
    }
    if (x == 0) {
        return std::tgamma(a);
    }
    if (std::isinf(x)) {
        return 0;
    }
    double log_prefactor = -x + a * std::log(x);
    if (x < a + 1) {
        // Lower function by its power series, then the complement.
        double term = 1 / a;
        double sum = term;
        for (int k = 1; k < 1000; k++) {
            term *= x / (a + k);
            sum += term;
            if (std::abs(term) < std::abs(sum) * 1e-17) {
                break;
            }
        }
        return std::tgamma(a) - std::exp(log_prefactor) * sum;
    }
    // Continued fraction, modified Lentz.
    const double tiny = 1e-300;
    double b = x + 1 - a;
    double c = 1 / tiny;
    double d = 1 / b;
    double h = d;
    for (int i = 1; i < 1000; i++) {
        double an = -i * (i - a);
        b += 2;
        d = an * d + b;
        if (std::abs(d) < tiny) {
            d = tiny;
        }
        c = b + an / c;
        if (std::abs(c) < tiny) {
            c = tiny;
        }
        d = 1 / d;
        double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1) < 1e-17) {
            break;
        }
    }
    return std::exp(log_prefactor) * h;
}

TradeoffPoint tradeoff_parametric(int r, double n, double m, double alpha) {
    check_rank(r);
    check_copies(n, m);
    if (!(alpha >= 0)) {
        throw InvalidArgument("ellipsoid radius alpha must be nonnegative");
    }
    double h = r / 2.0;
    double ar = std::pow(alpha, r);
    double e2 = std::exp(-alpha * alpha / 2);
    double e4 = std::exp(-alpha * alpha / 4);
    double g2 = upper_incomplete_gamma(h, alpha * alpha / 2);
    double g4 = upper_incomplete_gamma(h, alpha * alpha / 4);
    double succ_num = g2 + ar * e2 / (std::pow(2.0, h - 1) * r);
    double top = std::pow(2.0, r - 1) * r * g4 + ar * e4;
    double bottom = std::pow(2.0, h - 1) * r * g2 + ar * e2;

    TradeoffPoint pt;
    pt.succ = succ_num / std::tgamma(h);
    pt.fidelity = std::pow(n / (2 * m), h) * top * top / (bottom * std::tgamma(h + 1));
    pt.alpha = alpha;
    pt.method = TradeoffMethod::Parametric;
    if (m < 10 * n * n) {
        pt.warnings.push_back("Gaussian limit used outside its validity range (m < 10 n^2)");
    }
    return pt;
}

TradeoffPoint tradeoff_at_succ(int r, double n, double m, double target) {
    check_target(target);
    if (target == 1) {
        return tradeoff_parametric(r, n, m, 0);
    }
    double floor = tradeoff_parametric(r, n, m, kAlphaMax).succ;
    if (target < floor) {
        throw InvalidArgument("target success probability is below the resolvable floor of the parametric curve");
    }
    double lo = 0, hi = kAlphaMax;
    TradeoffPoint best = tradeoff_parametric(r, n, m, 0);
    for (int it = 0; it < 200; it++) {
        double mid = 0.5 * (lo + hi);
        auto pt = tradeoff_parametric(r, n, m, mid);
        best = pt;
        if (std::abs(pt.succ - target) < 1e-12) {
            break;
        }
        if (pt.succ > target) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo < 1e-16) {
            break;
        }
    }
    return best;
}

TradeoffPoint high_succ_expansion(int r, double n, double m, double eta) {
    check_rank(r);
    check_copies(n, m);
    if (!(eta >= 0) || !(eta < 1)) {
        throw InvalidArgument("eta = 1 - P_succ must lie in [0, 1)");
    }
    TradeoffPoint pt;
    pt.succ = 1 - eta;
    pt.fidelity = std::pow(4 * n / m, r / 2.0) * (1 + eta * (1 - std::pow(2.0, -r / 2.0)));
    pt.method = TradeoffMethod::HighSuccess;
    if (eta > 0.2) {
        pt.warnings.push_back("high-success expansion used above its validity window (eta > 0.2)");
    }
    return pt;
}

}  // namespace clocklat::filteropt

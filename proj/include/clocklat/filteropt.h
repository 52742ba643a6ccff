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

#ifndef CLOCKLAT_FILTEROPT_H
#define CLOCKLAT_FILTEROPT_H

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "clocklat/fidelity.h"

namespace clocklat::filteropt {

using dist::EnergyDistribution;
using fidelity::Filter;
using intlat::ClockModel;
using intlat::LatticePoint;

enum class TradeoffMethod { ExactKKT, Parametric, LowSuccess, HighSuccess };

const char *method_name(TradeoffMethod m);

struct TradeoffPoint {
    double succ = 0;
    double fidelity = 0;
    std::optional<double> alpha;
    TradeoffMethod method = TradeoffMethod::ExactKKT;
    /// Target below the smallest site mass, where the plateau covers every site.
    bool flat_regime = false;
    std::vector<std::string> warnings;
};

/// Maximizer of sum xi_s subject to sum xi_s^2 = 1 and xi_s <= sqrt(p_s / P).
struct WaterfillSolution {
    std::vector<LatticePoint> points;
    std::vector<double> xi;
    /// Plateau level of the uncapped sites.
    double zeta = 0;
    /// Sites where the cap is active.
    std::vector<bool> coincidence;
    double target = 0;
    bool flat_regime = false;
    /// Induced filter coefficients pi_s = xi_s^2 P / p_s.
    std::vector<double> pi;

    double amplitude_sum() const;
    Filter to_filter(const EnergyDistribution &dist) const;
};

WaterfillSolution waterfill(const EnergyDistribution &dist, double target_succ);

struct KktCertificate {
    double primal = 0;
    double dual = 0;
    double slackness = 0;
    double max() const;
};

/// Residuals of the optimality conditions with multipliers reconstructed from
/// the solution: sigma_s = 1 - xi_s / zeta.
KktCertificate kkt_certificate(const EnergyDistribution &dist, const WaterfillSolution &sol);

/// Uniform random coefficients rescaled or blended with the all-ones filter so
/// that the success probability equals target_succ exactly.
std::vector<double> random_feasible_filter(const EnergyDistribution &dist, double target_succ, std::mt19937_64 &rng);

/// Gaussian prefactor at m copies times (sum xi)^2 of the optimal filter.
TradeoffPoint optimal_fidelity_exact(
    const ClockModel &model, const EnergyDistribution &input, double m, double target_succ);

TradeoffPoint optimal_fidelity_exact(const ClockModel &model, uint64_t n, double m, double target_succ);

/// |lattice of n copies| times the Gaussian prefactor at m copies.
TradeoffPoint low_success_fidelity(const ClockModel &model, uint64_t n, double m);

/// Upper incomplete gamma function Gamma(a, x) for a > 0, x >= 0.
double upper_incomplete_gamma(double a, double x);

/// Success probability and fidelity of the truncated-Gaussian filter with
/// ellipsoid radius alpha, in the Gaussian limit.
TradeoffPoint tradeoff_parametric(int r, double n, double m, double alpha);

/// Largest radius used when inverting the success probability.
constexpr double kAlphaMax = 20.0;

/// Solves P_succ(alpha) = target by bisection on [0, kAlphaMax].
TradeoffPoint tradeoff_at_succ(int r, double n, double m, double target_succ);

/// (4 n / m)^{r/2} [1 + eta (1 - 2^{-r/2})] for P_succ = 1 - eta.
TradeoffPoint high_succ_expansion(int r, double n, double m, double eta);

}  // namespace clocklat::filteropt

#endif

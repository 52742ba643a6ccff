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

#ifndef CLOCKLAT_FIDELITY_H
#define CLOCKLAT_FIDELITY_H

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "clocklat/dist.h"

namespace clocklat::fidelity {

using dist::EnergyDistribution;
using intlat::ClockModel;
using intlat::LatticePoint;

enum class Method { ExactPM, ExactCL, Bound, Asymptotic, Measurement };

const char *method_name(Method m);

/// Diagonal postselection filter on the energy sites of n input copies.
/// Coefficients are aligned with the sites of the input distribution.
class Filter {
   public:
    static Filter trivial(const EnergyDistribution &input);
    static Filter from_coefficients(const EnergyDistribution &input, std::vector<double> pi);
    /// pi = 1 on the first most likely site, 0 elsewhere.
    static Filter mode_indicator(const EnergyDistribution &input);

    /// c * pi for c in (0, 1].
    Filter scaled(double c) const;

    size_t size() const {
        return points_.size();
    }
    const std::vector<LatticePoint> &points() const {
        return points_;
    }
    const std::vector<double> &input_masses() const {
        return masses_;
    }
    const std::vector<double> &pi() const {
        return pi_;
    }
    uint64_t copies() const {
        return copies_;
    }
    size_t rank() const {
        return rank_;
    }
    double success() const {
        return success_;
    }
    /// xi_s = sqrt(p_s pi_s / P_succ); sum of squares is 1.
    const std::vector<double> &amplitudes() const {
        return xi_;
    }
    double amplitude_sum() const;

   private:
    Filter(const EnergyDistribution &input, std::vector<double> pi);
    std::vector<LatticePoint> points_;
    std::vector<double> masses_;
    std::vector<double> pi_;
    std::vector<double> xi_;
    uint64_t copies_ = 0;
    size_t rank_ = 0;
    double success_ = 0;
};

struct FidelityResult {
    double value = 0;
    double success = 0;
    Method method = Method::ExactPM;
    /// Upper bound on how much the value could change if truncated sites were kept.
    double truncation_bound = 0;
    /// Set when a bound exceeds 1 and so carries no information.
    bool vacuous = false;
    std::vector<std::string> warnings;
};

struct TruncationOptions {
    /// Output sites farther than this many standard deviations (per Smith
    /// axis) from the mean of the m-copy distribution are dropped.
    double window_sigmas = 8.0;
};

/// Fidelity of estimating then preparing the guess state:
/// sum_E (sum_s xi_s sqrt(p_{s+E,m} q_{s+E}))^2 with q the guess.
FidelityResult pm_fidelity_exact(
    const Filter &filter,
    const EnergyDistribution &output,
    const EnergyDistribution &guess,
    const TruncationOptions &options = {});

/// max_s p_{s,m} (sum_s xi_s)^2, an upper bound on cloning fidelity.
FidelityResult cloning_bound(const Filter &filter, const EnergyDistribution &output);

/// (2 pi)^{-r/2} det(Sigma^S(m))^{-1/2} (sum_s xi_s)^2. Warns when m < 10 n^2.
FidelityResult asymptotic_fidelity(const ClockModel &model, const Filter &filter, double m);

/// (2 pi)^{-r/2} det(Sigma^S(m))^{-1/2}, the Gaussian mode height at m copies.
double asymptotic_prefactor(const ClockModel &model, double m);

struct ClonerOptions {
    double window_sigmas = 8.0;
    int restarts = 10;
    uint64_t seed = 0x5eed;
    int max_iterations = 200000;
    double tolerance = 1e-8;
    /// Largest number of (offset, input site) pairs the optimizer will hold.
    uint64_t table_cap = 20000000;
    /// Guess distributions whose induced weights seed extra starts. Each
    /// guess gives a feasible point whose value is its PM fidelity.
    std::vector<EnergyDistribution> warm_starts;
};

struct ClonerSolution {
    /// Offsets E, sorted.
    std::vector<LatticePoint> offsets;
    /// q[e][s] for offset e and input site s; each column sums to 1.
    std::vector<std::vector<double>> q;
    double fidelity = 0;
    double success = 0;
    /// max |x_new - x| of the fixed-point map at the returned point.
    double residual = 0;
    int iterations = 0;
    double truncation_bound = 0;
};

class ClonerNotConverged : public NotConverged {
   public:
    ClonerNotConverged(const std::string &what, ClonerSolution best)
        : NotConverged(what, best.residual, best.fidelity), best(std::move(best)) {
    }
    ClonerSolution best;
};

/// Evaluates the cloning objective at weights q (same layout as ClonerSolution).
double cloning_objective(
    const Filter &filter,
    const EnergyDistribution &output,
    const std::vector<LatticePoint> &offsets,
    const std::vector<std::vector<double>> &q);

/// Maximizes sum_E (sum_s xi_s sqrt(p_{s+E,m} q^E_s))^2 over per-site
/// simplices {q^E_s}. The objective is concave in q; a normalized fixed-point
/// ascent from several starts converges to the maximum.
ClonerSolution cloning_fidelity_exact(
    const Filter &filter, const EnergyDistribution &output, const ClonerOptions &options = {});

struct SandwichRow {
    uint64_t m = 0;
    FidelityResult pm;
    std::optional<ClonerSolution> cl;
    FidelityResult bound;
    FidelityResult asymptotic;
    double gap_pm = 0;
    std::optional<double> gap_cl;
    double gap_bound = 0;
};

struct SandwichOptions {
    double eta = 0.5;
    bool run_cloner = true;
    ClonerOptions cloner;
    TruncationOptions truncation;
    uint64_t cap = intlat::kDefaultEnumerationCap;
};

struct SandwichTable {
    std::vector<SandwichRow> rows;
    /// Every gap column is non-increasing in m.
    bool gaps_non_increasing = true;
};

/// For each m: PM with the Gaussian guess policy, exact cloner (when the
/// table fits), the bound, and the asymptotic value, with relative gaps
/// |asymptotic - x| / asymptotic. mList must be ascending.
SandwichTable sandwich_experiment(
    const ClockModel &model, const Filter &filter, const std::vector<uint64_t> &m_list, const SandwichOptions &options = {});

struct MeasurementOptions {
    /// Use the uniform prior over one period instead of the Gaussian.
    bool uniform_period = false;
    /// Time grid for the worst case.
    std::vector<double> t_grid = {0.0};
};

struct MeasurementResult {
    FidelityResult worst;
    double average = 0;
    std::vector<double> per_t;
};

/// Fidelity of the covariant measurement-and-prepare scheme, integrated over
/// the estimate t^ against either the uniform prior over a period or a
/// Gaussian prior of width sigma. Single-unit clocks only.
MeasurementResult pm_fidelity_via_measurement(
    const ClockModel &model,
    const Filter &filter,
    const EnergyDistribution &output,
    const EnergyDistribution &guess,
    double sigma,
    const MeasurementOptions &options = {});

}  // namespace clocklat::fidelity

#endif

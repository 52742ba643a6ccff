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

#ifndef CLOCKLAT_DIST_H
#define CLOCKLAT_DIST_H

#include <Eigen/Dense>
#include <limits>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "clocklat/intlat.h"

namespace clocklat::dist {

using intlat::ClockModel;
using intlat::LatticePoint;

/// Numerically stable log(sum(exp(x_i))) over a stream of values.
class LogSumExp {
   public:
    void add(double log_value);
    double value() const;
    bool empty() const {
        return max_ == -std::numeric_limits<double>::infinity();
    }

   private:
    double max_ = -std::numeric_limits<double>::infinity();
    double scaled_sum_ = 0;
};

/// Probability mass over lattice sites, stored as log-masses in
/// lexicographic site order.
class EnergyDistribution {
   public:
    EnergyDistribution() = default;
    EnergyDistribution(
        size_t rank, uint64_t copies, std::vector<std::pair<LatticePoint, double>> log_sites, double discarded_mass = 0);

    size_t rank() const {
        return rank_;
    }
    uint64_t copies() const {
        return copies_;
    }
    size_t size() const {
        return points_.size();
    }
    const std::vector<LatticePoint> &points() const {
        return points_;
    }
    const std::vector<double> &log_masses() const {
        return log_masses_;
    }
    double mass_at(size_t i) const;
    std::optional<size_t> find(const LatticePoint &s) const;
    /// Zero off the support.
    double mass(const LatticePoint &s) const;
    /// -inf off the support.
    double log_mass(const LatticePoint &s) const;
    double total_mass() const;
    /// Mass removed by truncation when the distribution was built.
    double discarded_mass() const {
        return discarded_;
    }
    Eigen::VectorXd mean() const;
    Eigen::MatrixXd covariance() const;
    /// Index of the largest mass; ties go to the lexicographically first site.
    size_t mode_index() const;
    double max_mass() const;

   private:
    size_t rank_ = 0;
    uint64_t copies_ = 0;
    std::vector<LatticePoint> points_;
    std::vector<double> log_masses_;
    std::unordered_map<LatticePoint, size_t, intlat::LatticePointHash> index_;
    double discarded_ = 0;
};

struct ExactOptions {
    uint64_t cap = intlat::kDefaultEnumerationCap;
    /// Sites whose mass is below relative_floor times the largest mass are
    /// dropped and their total reported as discarded mass. Individual terms
    /// are also skipped during accumulation when even all of them together
    /// could not reach that level. Zero keeps all.
    double relative_floor = 0;
};

/// Multinomial masses of n copies aggregated by Smith vector.
EnergyDistribution exact_distribution(const ClockModel &model, uint64_t n, const ExactOptions &options = {});

/// Lattice Gaussian: cell_volume * N(x; mean, cov) evaluated at lattice sites.
class GaussianApprox {
   public:
    GaussianApprox(Eigen::VectorXd mean, Eigen::MatrixXd cov, double cell_volume);

    double log_mass(const Eigen::VectorXd &x) const;
    double mass(const Eigen::VectorXd &x) const;
    double mass(const LatticePoint &s) const {
        return mass(s.to_eigen());
    }
    const Eigen::VectorXd &mean() const {
        return mean_;
    }
    const Eigen::MatrixXd &cov() const {
        return cov_;
    }
    double cell_volume() const {
        return cell_volume_;
    }

   private:
    Eigen::VectorXd mean_;
    Eigen::MatrixXd cov_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    double cell_volume_;
    double log_norm_;
};

/// Gaussian in Smith coordinates (unit cell volume 1, covariance of P S n).
GaussianApprox smith_gaussian(const ClockModel &model, double n);

/// Gaussian over the energy lattice K n (cell volume det A). A site with Smith
/// vector s sits at T A s.
GaussianApprox lattice_gaussian(const ClockModel &model, double n);

/// Maps a Smith vector to its point K n = T A s on the energy lattice.
Eigen::VectorXd energy_lattice_point(const ClockModel &model, const LatticePoint &s);

/// Gaussian approximation of the mass at Smith vector s for n copies.
double gaussian_mass(const ClockModel &model, double n, const LatticePoint &s);

struct ApproximationReport {
    /// max over the window of |exact / gaussian - 1|.
    double sup_ratio_error = 0;
    /// sum over the window of |exact - gaussian|.
    double total_variation = 0;
    size_t window_sites = 0;
};

/// Compares exact and Gaussian masses on every integer point of the box
/// mean +- window_sigmas standard deviations (per Smith axis).
ApproximationReport approximation_error(const ClockModel &model, uint64_t n, double window_sigmas = 5.0);

/// Same comparison against a precomputed exact distribution.
ApproximationReport approximation_error(
    const ClockModel &model, const EnergyDistribution &exact, double window_sigmas = 5.0);

/// Discrete Gaussian over the support of `support` (a distribution of m
/// copies) with per-axis standard deviation m^((1 - eta) / 2). The default
/// center is the mean of the Smith vector of m copies.
EnergyDistribution guess_distribution(
    const ClockModel &model,
    const EnergyDistribution &support,
    double eta,
    std::optional<Eigen::VectorXd> center = std::nullopt);

EnergyDistribution guess_distribution(
    const ClockModel &model, uint64_t m, double eta, std::optional<Eigen::VectorXd> center = std::nullopt);

/// The width exponent that realizes a regularizer zeta = m^delta.
double eta_for_zeta_exponent(double delta);

/// Discrete Gaussian over the given support with an explicit per-axis width.
EnergyDistribution discrete_gaussian(
    const EnergyDistribution &support, const Eigen::VectorXd &center, double width);

}  // namespace clocklat::dist

#endif

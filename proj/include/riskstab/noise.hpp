#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "riskstab/matrix.hpp"
#include "riskstab/rng.hpp"

namespace riskstab::sim {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class NoiseKind { Gaussian, Uniform, GaussianMixture, Deterministic, Schedule };

// Disturbance process model. Built-in kinds are i.i.d. across time
// (stationary); Schedule selects a possibly different model per step, the
// last entry repeating beyond the list. Central statistics (cov, gamma,
// delta) describe d = w - E(w) and are available in closed form for every
// built-in kind.
class NoiseModel {
 public:
  static NoiseModel gaussian(VectorXd mean, mat::SymMatrix cov);
  // Independent coordinates, w_i ~ U[lo_i, hi_i].
  static NoiseModel uniform(VectorXd lo, VectorXd hi);
  static NoiseModel gaussian_mixture(std::vector<double> weights,
                                     std::vector<VectorXd> means,
                                     std::vector<mat::SymMatrix> covs);
  static NoiseModel deterministic(VectorXd value);
  // models[min(t, size-1)] governs step t.
  static NoiseModel schedule(std::vector<NoiseModel> models);

  NoiseKind kind() const { return kind_; }
  Eigen::Index dim() const { return dim_; }
  bool stationary() const {
    return kind_ != NoiseKind::Schedule || models_.size() == 1;
  }

  // Model governing step t (self for built-in kinds).
  const NoiseModel& at(std::int64_t t) const;

  VectorXd sample(std::int64_t t, RngStream& rng) const;

  // E(w_t)
  VectorXd mean(std::int64_t t) const;
  // E(d d^T)
  MatrixXd cov(std::int64_t t) const;
  // E(d d^T R d), the third central moment contracted with symmetric R.
  VectorXd gamma_vec(std::int64_t t, const MatrixXd& r) const;
  // var(d^T R d)
  double delta_var(std::int64_t t, const MatrixXd& r) const;

  // Same process with `offset` added to every draw. Central statistics are
  // unchanged; only means shift.
  NoiseModel shifted(const VectorXd& offset) const;

  // Parameter accessors (throw Error on kind mismatch); used by serializers.
  const VectorXd& gaussian_mean() const;
  const MatrixXd& gaussian_cov() const;
  const VectorXd& uniform_lo() const;
  const VectorXd& uniform_hi() const;
  const std::vector<double>& mixture_weights() const;
  const std::vector<VectorXd>& mixture_means() const;
  const std::vector<MatrixXd>& mixture_covs() const;
  const VectorXd& deterministic_value() const;
  const std::vector<NoiseModel>& schedule_models() const;

 private:
  NoiseModel() = default;
  void require_kind(NoiseKind k, const char* who) const;

  NoiseKind kind_ = NoiseKind::Deterministic;
  Eigen::Index dim_ = 0;
  VectorXd mean_;              // Gaussian mean / Deterministic value
  MatrixXd cov_;               // Gaussian
  MatrixXd cov_sqrt_;          // Gaussian, precomputed for sampling
  VectorXd lo_, hi_;           // Uniform
  std::vector<double> weights_;        // Mixture
  std::vector<VectorXd> means_;        // Mixture
  std::vector<MatrixXd> covs_;         // Mixture
  std::vector<MatrixXd> sqrts_;        // Mixture
  std::vector<NoiseModel> models_;     // Schedule
};

// Single draw of w_t.
VectorXd sample_noise(const NoiseModel& model, std::int64_t t, RngStream& rng);

// n i.i.d. draws of w_t as rows, streams keyed by (seed, draw index, t).
MatrixXd sample_noise_batch(const NoiseModel& model, std::int64_t t,
                            std::size_t n, std::uint64_t seed);

enum class StatsSource { Analytic, MonteCarlo };

// Central statistics of w_t together with the accumulated-mean vector
//   bold_mean = (I - A^{t+1})^{-1} sum_{i=0}^{t} A^i E(w_{t-i}),
// which collapses to (I - A)^{-1} E(w) for stationary noise.
struct NoiseStats {
  std::int64_t t = 0;
  VectorXd mean;
  MatrixXd cov;
  VectorXd gamma;
  double delta = 0.0;
  VectorXd bold_mean;
  StatsSource source = StatsSource::Analytic;
  std::size_t n_samples = 0;   // MonteCarlo only
  std::uint64_t seed = 0;      // MonteCarlo only
};

NoiseStats noise_stats(const NoiseModel& model, const mat::SquareMatrix& a,
                       const mat::SymMatrix& r, std::int64_t t,
                       StatsSource source, std::size_t n_samples = 100000,
                       std::uint64_t seed = 0);

}  // namespace riskstab::sim

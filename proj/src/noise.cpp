#include "riskstab/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "riskstab/errors.hpp"

namespace riskstab::sim {
namespace {

void require_finite_vec(const VectorXd& v, const char* who) {
  if (!v.allFinite()) throw BadNoiseSpec(std::string(who) + ": non-finite entries");
}

MatrixXd psd_sqrt(const mat::SymMatrix& c, const char* who) {
  if (!mat::is_psd(c)) {
    throw NotPsd(std::string(who) + ": covariance is not positive semidefinite");
  }
  return mat::sym_sqrt(c).mat();
}

void require_r(const MatrixXd& r, Eigen::Index dim, const char* who) {
  if (r.rows() != dim || r.cols() != dim) {
    throw DimMismatch(std::string(who) + ": R is " + std::to_string(r.rows()) + "x" +
                      std::to_string(r.cols()) + " for dimension " + std::to_string(dim));
  }
}

// E((d^T R d)^2) for d = g + u with g ~ N(0, C): expand the square; odd
// Gaussian moments vanish.
double gaussian_energy_second_moment(const MatrixXd& c, const VectorXd& u,
                                     const MatrixXd& r) {
  const MatrixXd cr = c * r;
  const double tr_cr = cr.trace();
  const double tr_crcr = (cr * cr).trace();
  const double uru = u.dot(r * u);
  const double urcru = (r * u).dot(c * (r * u));
  return tr_cr * tr_cr + 2.0 * tr_crcr + 2.0 * uru * tr_cr + 4.0 * urcru + uru * uru;
}

}  // namespace

NoiseModel NoiseModel::gaussian(VectorXd mean, mat::SymMatrix cov) {
  require_finite_vec(mean, "NoiseModel::gaussian");
  if (mean.size() != cov.dim()) {
    throw DimMismatch("NoiseModel::gaussian: mean has size " + std::to_string(mean.size()) +
                      " but covariance is " + std::to_string(cov.dim()) + "x" +
                      std::to_string(cov.dim()));
  }
  NoiseModel m;
  m.kind_ = NoiseKind::Gaussian;
  m.dim_ = mean.size();
  m.mean_ = std::move(mean);
  m.cov_sqrt_ = psd_sqrt(cov, "NoiseModel::gaussian");
  m.cov_ = cov.mat();
  return m;
}

NoiseModel NoiseModel::uniform(VectorXd lo, VectorXd hi) {
  require_finite_vec(lo, "NoiseModel::uniform");
  require_finite_vec(hi, "NoiseModel::uniform");
  if (lo.size() != hi.size() || lo.size() == 0) {
    throw DimMismatch("NoiseModel::uniform: bound sizes disagree");
  }
  if ((hi - lo).minCoeff() < 0.0) {
    throw BadNoiseSpec("NoiseModel::uniform: requires lo <= hi elementwise");
  }
  NoiseModel m;
  m.kind_ = NoiseKind::Uniform;
  m.dim_ = lo.size();
  m.lo_ = std::move(lo);
  m.hi_ = std::move(hi);
  return m;
}

NoiseModel NoiseModel::gaussian_mixture(std::vector<double> weights,
                                        std::vector<VectorXd> means,
                                        std::vector<mat::SymMatrix> covs) {
  if (weights.empty() || weights.size() != means.size() || weights.size() != covs.size()) {
    throw BadNoiseSpec("NoiseModel::gaussian_mixture: component counts disagree");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw BadNoiseSpec("NoiseModel::gaussian_mixture: weights must be nonnegative");
    }
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw BadNoiseSpec("NoiseModel::gaussian_mixture: weights sum to " + std::to_string(total));
  }
  const Eigen::Index d = means.front().size();
  NoiseModel m;
  m.kind_ = NoiseKind::GaussianMixture;
  m.dim_ = d;
  m.sqrts_.reserve(covs.size());
  for (std::size_t k = 0; k < weights.size(); ++k) {
    require_finite_vec(means[k], "NoiseModel::gaussian_mixture");
    if (means[k].size() != d || covs[k].dim() != d) {
      throw DimMismatch("NoiseModel::gaussian_mixture: component " + std::to_string(k) +
                        " has inconsistent dimension");
    }
    m.sqrts_.push_back(psd_sqrt(covs[k], "NoiseModel::gaussian_mixture"));
    m.covs_.push_back(covs[k].mat());
  }
  m.weights_ = std::move(weights);
  m.means_ = std::move(means);
  return m;
}

NoiseModel NoiseModel::deterministic(VectorXd value) {
  require_finite_vec(value, "NoiseModel::deterministic");
  if (value.size() == 0) throw DimMismatch("NoiseModel::deterministic: empty value");
  NoiseModel m;
  m.kind_ = NoiseKind::Deterministic;
  m.dim_ = value.size();
  m.mean_ = std::move(value);
  return m;
}

NoiseModel NoiseModel::schedule(std::vector<NoiseModel> models) {
  if (models.empty()) throw BadNoiseSpec("NoiseModel::schedule: no models");
  for (const NoiseModel& m : models) {
    if (m.kind_ == NoiseKind::Schedule) {
      throw BadNoiseSpec("NoiseModel::schedule: schedules cannot nest");
    }
    if (m.dim_ != models.front().dim_) {
      throw DimMismatch("NoiseModel::schedule: mixed dimensions");
    }
  }
  NoiseModel m;
  m.kind_ = NoiseKind::Schedule;
  m.dim_ = models.front().dim_;
  m.models_ = std::move(models);
  return m;
}

const NoiseModel& NoiseModel::at(std::int64_t t) const {
  if (kind_ != NoiseKind::Schedule) return *this;
  const std::size_t idx = t < 0 ? 0
                                : std::min<std::size_t>(static_cast<std::size_t>(t),
                                                        models_.size() - 1);
  return models_[idx];
}

VectorXd NoiseModel::sample(std::int64_t t, RngStream& rng) const {
  switch (kind_) {
    case NoiseKind::Deterministic:
      return mean_;
    case NoiseKind::Uniform: {
      VectorXd w(dim_);
      for (Eigen::Index i = 0; i < dim_; ++i) w(i) = rng.uniform(lo_(i), hi_(i));
      return w;
    }
    case NoiseKind::Gaussian: {
      VectorXd z(dim_);
      for (Eigen::Index i = 0; i < dim_; ++i) z(i) = rng.normal();
      return mean_ + cov_sqrt_ * z;
    }
    case NoiseKind::GaussianMixture: {
      // CDF inversion keeps the draw a fixed function of the stream state.
      const double u = rng.uniform01();
      double acc = 0.0;
      std::size_t k = weights_.size() - 1;
      for (std::size_t j = 0; j < weights_.size(); ++j) {
        acc += weights_[j];
        if (u < acc) { k = j; break; }
      }
      VectorXd z(dim_);
      for (Eigen::Index i = 0; i < dim_; ++i) z(i) = rng.normal();
      return means_[k] + sqrts_[k] * z;
    }
    case NoiseKind::Schedule:
      return at(t).sample(t, rng);
  }
  throw Error("NoiseModel::sample: unreachable");
}

VectorXd NoiseModel::mean(std::int64_t t) const {
  switch (kind_) {
    case NoiseKind::Deterministic:
    case NoiseKind::Gaussian:
      return mean_;
    case NoiseKind::Uniform:
      return 0.5 * (lo_ + hi_);
    case NoiseKind::GaussianMixture: {
      VectorXd m = VectorXd::Zero(dim_);
      for (std::size_t k = 0; k < weights_.size(); ++k) m += weights_[k] * means_[k];
      return m;
    }
    case NoiseKind::Schedule:
      return at(t).mean(t);
  }
  throw Error("NoiseModel::mean: unreachable");
}

MatrixXd NoiseModel::cov(std::int64_t t) const {
  switch (kind_) {
    case NoiseKind::Deterministic:
      return MatrixXd::Zero(dim_, dim_);
    case NoiseKind::Gaussian:
      return cov_;
    case NoiseKind::Uniform: {
      VectorXd v(dim_);
      for (Eigen::Index i = 0; i < dim_; ++i) {
        const double c = 0.5 * (hi_(i) - lo_(i));
        v(i) = c * c / 3.0;
      }
      return v.asDiagonal();
    }
    case NoiseKind::GaussianMixture: {
      const VectorXd m = mean(t);
      MatrixXd s = MatrixXd::Zero(dim_, dim_);
      for (std::size_t k = 0; k < weights_.size(); ++k) {
        const VectorXd u = means_[k] - m;
        s += weights_[k] * (covs_[k] + u * u.transpose());
      }
      return s;
    }
    case NoiseKind::Schedule:
      return at(t).cov(t);
  }
  throw Error("NoiseModel::cov: unreachable");
}

VectorXd NoiseModel::gamma_vec(std::int64_t t, const MatrixXd& r) const {
  require_r(r, dim_, "NoiseModel::gamma_vec");
  switch (kind_) {
    case NoiseKind::Deterministic:
    case NoiseKind::Gaussian:
    case NoiseKind::Uniform:
      // Symmetric centered laws: every third central moment vanishes.
      return VectorXd::Zero(dim_);
    case NoiseKind::GaussianMixture: {
      const VectorXd m = mean(t);
      VectorXd g = VectorXd::Zero(dim_);
      for (std::size_t k = 0; k < weights_.size(); ++k) {
        const VectorXd u = means_[k] - m;
        const double uru = u.dot(r * u);
        const double tr_cr = (covs_[k] * r).trace();
        g += weights_[k] * (uru * u + tr_cr * u + 2.0 * (covs_[k] * (r * u)));
      }
      return g;
    }
    case NoiseKind::Schedule:
      return at(t).gamma_vec(t, r);
  }
  throw Error("NoiseModel::gamma_vec: unreachable");
}

double NoiseModel::delta_var(std::int64_t t, const MatrixXd& r) const {
  require_r(r, dim_, "NoiseModel::delta_var");
  switch (kind_) {
    case NoiseKind::Deterministic:
      return 0.0;
    case NoiseKind::Gaussian: {
      const MatrixXd cr = cov_ * r;
      return 2.0 * (cr * cr).trace();
    }
    case NoiseKind::Uniform: {
      // d^T R d = sum_i R_ii d_i^2 + 2 sum_{i<j} R_ij d_i d_j with d_i
      // independent symmetric; all cross-covariances vanish.
      double acc = 0.0;
      VectorXd c2(dim_);
      for (Eigen::Index i = 0; i < dim_; ++i) {
        const double c = 0.5 * (hi_(i) - lo_(i));
        c2(i) = c * c;
        acc += r(i, i) * r(i, i) * (4.0 / 45.0) * c2(i) * c2(i);
      }
      for (Eigen::Index i = 0; i < dim_; ++i) {
        for (Eigen::Index j = i + 1; j < dim_; ++j) {
          acc += 4.0 * r(i, j) * r(i, j) * (c2(i) / 3.0) * (c2(j) / 3.0);
        }
      }
      return acc;
    }
    case NoiseKind::GaussianMixture: {
      const VectorXd m = mean(t);
      double second = 0.0;
      for (std::size_t k = 0; k < weights_.size(); ++k) {
        second += weights_[k] * gaussian_energy_second_moment(covs_[k], means_[k] - m, r);
      }
      const double tr_sr = (cov(t) * r).trace();
      return second - tr_sr * tr_sr;
    }
    case NoiseKind::Schedule:
      return at(t).delta_var(t, r);
  }
  throw Error("NoiseModel::delta_var: unreachable");
}

NoiseModel NoiseModel::shifted(const VectorXd& offset) const {
  if (offset.size() != dim_) {
    throw DimMismatch("NoiseModel::shifted: offset size " + std::to_string(offset.size()) +
                      " vs dimension " + std::to_string(dim_));
  }
  require_finite_vec(offset, "NoiseModel::shifted");
  NoiseModel m = *this;
  switch (kind_) {
    case NoiseKind::Deterministic:
    case NoiseKind::Gaussian:
      m.mean_ += offset;
      return m;
    case NoiseKind::Uniform:
      m.lo_ += offset;
      m.hi_ += offset;
      return m;
    case NoiseKind::GaussianMixture:
      for (VectorXd& mu : m.means_) mu += offset;
      return m;
    case NoiseKind::Schedule:
      for (NoiseModel& sub : m.models_) sub = sub.shifted(offset);
      return m;
  }
  throw Error("NoiseModel::shifted: unreachable");
}

void NoiseModel::require_kind(NoiseKind k, const char* who) const {
  if (kind_ != k) throw Error(std::string(who) + ": wrong noise kind");
}

const VectorXd& NoiseModel::gaussian_mean() const {
  require_kind(NoiseKind::Gaussian, "gaussian_mean");
  return mean_;
}
const MatrixXd& NoiseModel::gaussian_cov() const {
  require_kind(NoiseKind::Gaussian, "gaussian_cov");
  return cov_;
}
const VectorXd& NoiseModel::uniform_lo() const {
  require_kind(NoiseKind::Uniform, "uniform_lo");
  return lo_;
}
const VectorXd& NoiseModel::uniform_hi() const {
  require_kind(NoiseKind::Uniform, "uniform_hi");
  return hi_;
}
const std::vector<double>& NoiseModel::mixture_weights() const {
  require_kind(NoiseKind::GaussianMixture, "mixture_weights");
  return weights_;
}
const std::vector<VectorXd>& NoiseModel::mixture_means() const {
  require_kind(NoiseKind::GaussianMixture, "mixture_means");
  return means_;
}
const std::vector<MatrixXd>& NoiseModel::mixture_covs() const {
  require_kind(NoiseKind::GaussianMixture, "mixture_covs");
  return covs_;
}
const VectorXd& NoiseModel::deterministic_value() const {
  require_kind(NoiseKind::Deterministic, "deterministic_value");
  return mean_;
}
const std::vector<NoiseModel>& NoiseModel::schedule_models() const {
  require_kind(NoiseKind::Schedule, "schedule_models");
  return models_;
}

VectorXd sample_noise(const NoiseModel& model, std::int64_t t, RngStream& rng) {
  return model.sample(t, rng);
}

MatrixXd sample_noise_batch(const NoiseModel& model, std::int64_t t,
                            std::size_t n, std::uint64_t seed) {
  MatrixXd out(n, model.dim());
  for (std::size_t i = 0; i < n; ++i) {
    RngStream rng(seed, i, static_cast<std::uint64_t>(t));
    out.row(i) = model.sample(t, rng).transpose();
  }
  return out;
}

NoiseStats noise_stats(const NoiseModel& model, const mat::SquareMatrix& a,
                       const mat::SymMatrix& r, std::int64_t t,
                       StatsSource source, std::size_t n_samples,
                       std::uint64_t seed) {
  if (a.dim() != model.dim() || r.dim() != model.dim()) {
    throw DimMismatch("noise_stats: dimensions of A, R, and the noise disagree");
  }
  if (t < 0) throw Error("noise_stats: t must be nonnegative");

  NoiseStats st;
  st.t = t;
  st.source = source;

  if (source == StatsSource::Analytic) {
    st.mean = model.mean(t);
    st.cov = model.cov(t);
    st.gamma = model.gamma_vec(t, r.mat());
    st.delta = model.delta_var(t, r.mat());
  } else {
    if (n_samples < 2) throw Error("noise_stats: need at least 2 samples");
    const MatrixXd draws = sample_noise_batch(model, t, n_samples, seed);
    const double n = static_cast<double>(n_samples);
    st.mean = draws.colwise().mean().transpose();
    const MatrixXd centered = draws.rowwise() - st.mean.transpose();
    st.cov = (centered.transpose() * centered) / (n - 1.0);
    VectorXd g = VectorXd::Zero(model.dim());
    double e_mean = 0.0;
    VectorXd energies(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) {
      const VectorXd d = centered.row(i).transpose();
      const double e = d.dot(r.mat() * d);
      energies(static_cast<Eigen::Index>(i)) = e;
      e_mean += e;
      g += e * d;
    }
    st.gamma = g / n;
    e_mean /= n;
    st.delta = (energies.array() - e_mean).square().sum() / n;
    st.n_samples = n_samples;
    st.seed = seed;
  }

  // bold_mean needs I - A^{t+1} invertible, which Schur stability guarantees.
  const double rho = mat::spectral_radius(a);
  if (!(rho < 1.0)) {
    throw NotSchurStable("noise_stats: accumulated mean needs spectral radius < 1, got " +
                         std::to_string(rho));
  }
  // Computed from analytic step means in both modes: it is a deterministic
  // derived quantity, not an estimate.
  const Eigen::Index d = model.dim();
  const MatrixXd eye = MatrixXd::Identity(d, d);
  if (model.stationary()) {
    st.bold_mean = (eye - a.mat()).partialPivLu().solve(model.mean(t));
  } else {
    // Horner accumulation of sum_{i=0}^{t} A^i wbar_{t-i}; a_pow ends at A^{t+1}.
    VectorXd s = model.mean(0);
    MatrixXd a_pow = a.mat();
    for (std::int64_t tau = 1; tau <= t; ++tau) {
      s = a.mat() * s + model.mean(tau);
      a_pow = a_pow * a.mat();
    }
    st.bold_mean = (eye - a_pow).partialPivLu().solve(s);
  }
  return st;
}

}  // namespace riskstab::sim

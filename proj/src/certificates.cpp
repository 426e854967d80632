#include "riskstab/certificates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "riskstab/io.hpp"
#include "riskstab/parallel.hpp"
#include "riskstab/rng.hpp"

namespace riskstab::cert {
namespace {

constexpr std::uint64_t kTagNoiseEnergy = 0x625f7072696d6531ULL;
constexpr std::uint64_t kTagBootstrap = 0x626f6f7473747270ULL;
constexpr std::uint64_t kTagVerifySim = 0x7665726966797369ULL;

// Statistic of one bootstrap resample. scratch is reused across calls.
double resample_stat(const std::vector<double>& values, const risk::RiskSpec& spec,
                     RngStream& rng, std::vector<double>& scratch) {
  const std::size_t n = values.size();
  scratch.resize(n);
  for (std::size_t i = 0; i < n; ++i) scratch[i] = values[rng.below(n)];

  const double dn = static_cast<double>(n);
  switch (spec.kind) {
    case risk::RiskKind::Mean: {
      double s = 0.0;
      for (double x : scratch) s += x;
      return s / dn;
    }
    case risk::RiskKind::MD: {
      double s = 0.0;
      for (double x : scratch) s += x;
      const double m = s / dn;
      double acc = 0.0;
      for (double x : scratch) acc += std::pow(std::abs(x - m), spec.q);
      return m + spec.beta * std::pow(acc / dn, 1.0 / spec.q);
    }
    case risk::RiskKind::MUS: {
      double s = 0.0;
      for (double x : scratch) s += x;
      const double m = s / dn;
      double acc = 0.0;
      for (double x : scratch) acc += std::pow(std::max(x - m, 0.0), spec.q);
      return m + spec.beta * std::pow(acc / dn, 1.0 / spec.q);
    }
    case risk::RiskKind::VaR:
    case risk::RiskKind::CVaR: {
      if (spec.kind == risk::RiskKind::CVaR && spec.alpha == 1.0) {
        double s = 0.0;
        for (double x : scratch) s += x;
        return s / dn;
      }
      auto k = static_cast<std::size_t>(std::ceil((1.0 - spec.alpha) * dn));
      if (k == 0) k = 1;
      std::nth_element(scratch.begin(), scratch.begin() + (k - 1), scratch.end());
      const double v = scratch[k - 1];
      if (spec.kind == risk::RiskKind::VaR) return v;
      double excess = 0.0;
      for (double x : scratch) excess += std::max(x - v, 0.0);
      return v + excess / dn / spec.alpha;
    }
    case risk::RiskKind::MeanCondVar:
      throw KindMismatch("bootstrap: mean_cond_variance is not resampled here");
  }
  throw Error("resample_stat: unreachable");
}

std::vector<double> bootstrap_stats(const std::vector<double>& values,
                                    const risk::RiskSpec& spec, std::size_t resamples,
                                    std::uint64_t seed, std::uint64_t label,
                                    bool run_parallel) {
  std::vector<double> stats(resamples);
  if (run_parallel) {
    parallel_for(resamples, [&](std::size_t r) {
      thread_local std::vector<double> scratch;
      RngStream rng(mix64(seed ^ kTagBootstrap), label, r);
      stats[r] = resample_stat(values, spec, rng, scratch);
    });
  } else {
    std::vector<double> scratch;
    for (std::size_t r = 0; r < resamples; ++r) {
      RngStream rng(mix64(seed ^ kTagBootstrap), label, r);
      stats[r] = resample_stat(values, spec, rng, scratch);
    }
  }
  std::sort(stats.begin(), stats.end());
  return stats;
}

double quantile_of_sorted(const std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto idx = static_cast<std::size_t>(std::llround(pos));
  return sorted[std::min(idx, sorted.size() - 1)];
}

mat::SymMatrix inverse_sqrt(const mat::SymMatrix& r, const char* who) {
  if (!mat::is_pd(r)) {
    throw AssumptionViolated(std::string(who) + ": R must be positive definite");
  }
  const mat::EigenDecomp ed = mat::eig_sym(r);
  VectorXd w = ed.eigenvalues;
  for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = 1.0 / std::sqrt(w(i));
  return mat::SymMatrix::from_nearly(
      ed.eigenvectors * w.asDiagonal() * ed.eigenvectors.transpose(), r.psd_tol());
}

void require_coherent(const risk::RiskSpec& spec) {
  if (spec.kind == risk::RiskKind::VaR || spec.kind == risk::RiskKind::MeanCondVar) {
    throw NonCoherentRisk(std::string("coherent_certificate: ") + risk::kind_name(spec.kind) +
                          " is not coherent; no dual-family envelope exists");
  }
  if (!spec.coherent()) {
    throw NonCoherentRisk(std::string("coherent_certificate: ") + risk::kind_name(spec.kind) +
                          " parameters are outside the coherent range");
  }
}

// Times whose noise laws must be scanned for a sup_t statistic.
std::vector<std::int64_t> sup_times(const sim::NoiseModel& noise, std::int64_t sup_horizon) {
  if (noise.stationary()) return {0};
  std::vector<std::int64_t> ts;
  for (std::int64_t t = 0; t <= std::max<std::int64_t>(sup_horizon, 0); ++t) ts.push_back(t);
  return ts;
}

}  // namespace

mat::SymMatrix choose_H(const mat::SquareMatrix& a, const mat::SymMatrix& r,
                        const std::optional<mat::SymMatrix>& q) {
  if (r.dim() != a.dim()) {
    throw DimMismatch("choose_H: A and R dimensions disagree");
  }
  mat::SymMatrix q_eff = q ? *q : mat::SymMatrix::identity(a.dim(), r.psd_tol());
  if (q_eff.dim() != a.dim()) {
    throw DimMismatch("choose_H: Q dimension disagrees with A");
  }
  if (!mat::is_pd(q_eff)) {
    throw AssumptionViolated("choose_H: Q must be positive definite");
  }
  const mat::SymMatrix x = mat::solve_discrete_lyapunov(a, q_eff);
  const MatrixXd ri = inverse_sqrt(r, "choose_H").mat();
  mat::SymMatrix h = mat::SymMatrix::from_nearly(ri * x.mat() * ri, r.psd_tol());
  if (!mat::is_pd(h)) {
    throw AssumptionViolated("choose_H: constructed H is not positive definite");
  }
  return h;
}

double compute_eta(const mat::SquareMatrix& a, const mat::SymMatrix& r,
                   const mat::SymMatrix& h) {
  if (a.dim() != r.dim() || a.dim() != h.dim()) {
    throw DimMismatch("compute_eta: dimensions disagree");
  }
  if (!mat::is_pd(h)) {
    throw AssumptionViolated("compute_eta: H must be positive definite");
  }
  const mat::SymMatrix h_r = mat::conjugate(h, r);
  const mat::SymMatrix diff = mat::SymMatrix::from_nearly(
      h_r.mat() - a.mat().transpose() * h_r.mat() * a.mat(), h.psd_tol());
  if (!mat::is_pd(diff)) {
    throw AssumptionViolated("compute_eta: H_R - A^T H_R A is not positive definite; "
                             "the weighted energy does not contract one step");
  }
  return mat::lambda_min(diff) / mat::lambda_max(h_r);
}

double offset_scale(double eta, double kappa, double lambda_min_h) {
  if (!(eta > 0.0 && eta <= 1.0 + kEtaOneTol)) {
    throw BadEta("offset_scale: eta must lie in (0,1], got " + std::to_string(eta));
  }
  if (!(kappa > 0.0 && kappa < 1.0)) {
    throw BadKappa("offset_scale: kappa must lie in (0,1), got " + std::to_string(kappa));
  }
  const double lambda = 1.0 - kappa * eta;
  return lambda / (lambda_min_h * (1.0 - lambda) * (lambda - (1.0 - eta)));
}

double argmin_kappa(double eta) {
  if (!(eta > 0.0 && eta <= 1.0 + kEtaOneTol)) {
    throw BadEta("argmin_kappa: eta must lie in (0,1], got " + std::to_string(eta));
  }
  double best_k = 0.5;
  double best_c = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= 9999; ++i) {
    const double kappa = 1e-4 * i;
    const double c = offset_scale(eta, kappa, 1.0);
    if (c < best_c) {
      best_c = c;
      best_k = kappa;
    }
  }
  return best_k;
}

std::vector<KappaPoint> kappa_tradeoff(double eta, const std::vector<double>& grid) {
  if (!(eta > 0.0 && eta < 1.0)) {
    throw BadEta("kappa_tradeoff: eta must lie in (0,1), got " + std::to_string(eta));
  }
  std::vector<KappaPoint> out;
  out.reserve(grid.size());
  for (double kappa : grid) {
    if (!(kappa > 0.0 && kappa < 1.0)) {
      throw BadKappa("kappa_tradeoff: grid value " + std::to_string(kappa) +
                     " outside (0,1)");
    }
    out.push_back({kappa, (1.0 - kappa * eta) / (kappa * eta * (eta - kappa * eta))});
  }
  return out;
}

double StabilityCertificate::envelope(std::int64_t t, double psi_x0) const {
  return a * std::pow(lambda, static_cast<double>(t)) * psi_x0 + b;
}

StabilityCertificate coherent_certificate(const sim::LinearSystem& sys,
                                          const mat::SymMatrix& r,
                                          const risk::RiskSpec& riskspec,
                                          const CertifyOptions& opt) {
  require_coherent(riskspec);
  if (r.dim() != sys.dim()) {
    throw DimMismatch("coherent_certificate: R dimension disagrees with the system");
  }

  StabilityCertificate cert;
  cert.risk = riskspec;
  cert.h = opt.h ? *opt.h : choose_H(sys.a, r, opt.q);
  cert.h_r = mat::conjugate(cert.h, r);
  cert.eta = compute_eta(sys.a, r, cert.h);
  if (cert.eta > 1.0 + kEtaOneTol) {
    throw BadEta("coherent_certificate: computed eta " + std::to_string(cert.eta) +
                 " exceeds 1");
  }

  const double lam_min_h = mat::lambda_min(cert.h);
  const double lam_max_h = mat::lambda_max(cert.h);

  if (std::abs(cert.eta - 1.0) <= kEtaOneTol) {
    cert.branch = EnvelopeBranch::Flat;
    cert.lambda = 0.0;
    cert.a = 0.0;
    cert.kappa = 0.0;
    cert.c = 1.0 / lam_min_h;
  } else {
    cert.branch = EnvelopeBranch::Geometric;
    cert.kappa = opt.kappa ? *opt.kappa : argmin_kappa(cert.eta);
    if (!(cert.kappa > 0.0 && cert.kappa < 1.0)) {
      throw BadKappa("coherent_certificate: kappa must lie in (0,1), got " +
                     std::to_string(cert.kappa));
    }
    cert.lambda = 1.0 - cert.kappa * cert.eta;
    cert.a = lam_max_h / lam_min_h;
    cert.c = offset_scale(cert.eta, cert.kappa, lam_min_h);
  }

  // b' = sup_t rho(w_t^T H_R w_t), estimated per scanned time and taken at
  // the upper bootstrap bound so the envelope stays conservative.
  double b_prime = 0.0;
  double b_prime_point = 0.0;
  for (std::int64_t t : sup_times(sys.noise, opt.sup_horizon)) {
    const risk::EmpiricalSample sample = sim::noise_energy_sample(
        sys.noise, cert.h_r, t, opt.noise_samples, mix64(opt.seed ^ kTagNoiseEnergy));
    const double point = risk::evaluate(riskspec, sample);
    const std::vector<double> stats =
        bootstrap_stats(sample.values(), riskspec, opt.bootstrap_resamples, opt.seed,
                        static_cast<std::uint64_t>(t), /*run_parallel=*/true);
    const double upper = quantile_of_sorted(stats, opt.bootstrap_level);
    b_prime = std::max(b_prime, upper);
    b_prime_point = std::max(b_prime_point, point);
  }
  cert.b_prime = b_prime;
  cert.b_prime_point = b_prime_point;
  cert.b = cert.c * cert.b_prime;
  return cert;
}

StabilityCertificate transform_certificate(const StabilityCertificate& cert,
                                           const risk::RiskSpec& target) {
  if (cert.risk.kind != risk::RiskKind::Mean) {
    throw BadSource("transform_certificate: source certificate must be for the mean, got " +
                    std::string(risk::kind_name(cert.risk.kind)));
  }
  double scale = 0.0;
  switch (target.kind) {
    case risk::RiskKind::CVaR:
      scale = 1.0 / target.alpha;
      break;
    case risk::RiskKind::MD:
      if (target.q != 1.0 || target.beta > 0.5) {
        throw BadTarget("transform_certificate: mean_deviation target needs q = 1 and "
                        "beta <= 1/2");
      }
      scale = 1.0 + 2.0 * target.beta;
      break;
    case risk::RiskKind::MUS:
      if (target.q != 1.0 || target.beta > 1.0) {
        throw BadTarget("transform_certificate: mean_upper_semideviation target needs "
                        "q = 1 and beta <= 1");
      }
      scale = 1.0 + 2.0 * target.beta;
      break;
    default:
      throw BadTarget(std::string("transform_certificate: unsupported target ") +
                      risk::kind_name(target.kind));
  }
  StabilityCertificate out = cert;
  out.risk = target;
  out.a = cert.a * scale;
  out.b = cert.b * scale;
  out.transformed = true;
  return out;
}

double McvCertificate::envelope(std::int64_t t, const VectorXd& x0) const {
  const double psi_nu = x0.dot(r_nu.mat() * x0);
  const double psi_0 = x0.dot(r.mat() * x0);
  const double tilde_nu = 4.0 * psi_nu + tilde_add_nu;
  const double tilde_0 = 4.0 * psi_0 + tilde_add_0;
  double gamma_norm = gamma_sup;
  if (t >= 1 && t <= static_cast<std::int64_t>(gamma_norms.size())) {
    gamma_norm = gamma_norms[static_cast<std::size_t>(t - 1)];
  }
  const double tf = static_cast<double>(t);
  return a_nu * std::pow(lambda_nu, tf) * tilde_nu +
         4.0 * nu * gamma_norm *
             std::sqrt(a_0 * std::pow(lambda_0, tf) * lambda_max_r * tilde_0) +
         b_nu;
}

McvCertificate mcv_certificate(const sim::LinearSystem& sys, const mat::SymMatrix& r,
                               double nu, const McvOptions& opt) {
  if (!(nu >= 0.0) || !std::isfinite(nu)) {
    throw BadWeight("mcv_certificate: nu must be nonnegative");
  }
  if (r.dim() != sys.dim()) {
    throw DimMismatch("mcv_certificate: R dimension disagrees with the system");
  }
  if (opt.horizon < 1) throw Error("mcv_certificate: horizon must be >= 1");
  if (!mat::is_pd(r)) throw AssumptionViolated("mcv_certificate: R must be positive definite");

  McvCertificate cert;
  cert.nu = nu;
  cert.r = r;
  cert.horizon = opt.horizon;

  const sim::NoiseModel& noise = sys.noise;
  const bool stationary = noise.stationary();
  const std::int64_t taus = stationary ? 1 : opt.horizon;  // d_t uses w_{t-1}

  // Sigma_u: stationary covariance, or a spectral envelope that dominates
  // every per-step covariance, unless the caller pins one.
  std::vector<MatrixXd> covs(static_cast<std::size_t>(taus));
  for (std::int64_t tau = 0; tau < taus; ++tau) {
    covs[static_cast<std::size_t>(tau)] = noise.cov(tau);
  }
  if (opt.sigma_u) {
    cert.sigma_u = *opt.sigma_u;
  } else if (stationary) {
    cert.sigma_u = mat::SymMatrix::from_nearly(covs[0], r.psd_tol());
  } else {
    double top = 0.0;
    for (const MatrixXd& c : covs) {
      top = std::max(top, mat::lambda_max(mat::SymMatrix::from_nearly(c, r.psd_tol())));
    }
    const double pad = r.psd_tol() * std::max(1.0, top);
    cert.sigma_u = mat::SymMatrix(
        MatrixXd::Identity(sys.dim(), sys.dim()) * (top + pad), r.psd_tol());
  }
  for (std::int64_t tau = 0; tau < taus; ++tau) {
    const mat::SymMatrix gap = mat::SymMatrix::from_nearly(
        cert.sigma_u.mat() - covs[static_cast<std::size_t>(tau)], r.psd_tol());
    if (!mat::is_psd(gap)) {
      throw SigmaDominanceViolated("mcv_certificate: Sigma_u does not dominate the noise "
                                   "covariance at step " + std::to_string(tau));
    }
  }

  // R_nu = R + 4 nu R Sigma_u R; PD because R is PD and Sigma_u is PSD.
  cert.r_nu = mat::SymMatrix::from_nearly(
      r.mat() + 4.0 * nu * r.mat() * cert.sigma_u.mat() * r.mat(), r.psd_tol());
  cert.lambda_max_r = mat::lambda_max(r);

  cert.h_nu = opt.h_nu ? *opt.h_nu : choose_H(sys.a, cert.r_nu, opt.q);
  cert.h_0 = opt.h_0 ? *opt.h_0 : choose_H(sys.a, r, opt.q);

  const double eta_nu = compute_eta(sys.a, cert.r_nu, cert.h_nu);
  const double eta_0 = compute_eta(sys.a, r, cert.h_0);
  cert.lambda_nu = 1.0 - eta_nu;
  cert.lambda_0 = 1.0 - eta_0;
  cert.a_nu = mat::lambda_max(cert.h_nu) / mat::lambda_min(cert.h_nu);
  cert.a_0 = mat::lambda_max(cert.h_0) / mat::lambda_min(cert.h_0);
  cert.c_nu = 2.0 / (mat::lambda_min(cert.h_nu) * (1.0 - cert.lambda_nu));

  const mat::SymMatrix h_nu_rnu = mat::conjugate(cert.h_nu, cert.r_nu);

  // Per-step central statistics; index tau carries the stats of d_{tau+1},
  // i.e. of w_tau.
  std::vector<sim::NoiseStats> stats;
  stats.reserve(static_cast<std::size_t>(taus));
  for (std::int64_t tau = 0; tau < taus; ++tau) {
    stats.push_back(sim::noise_stats(noise, sys.a, r, tau, sim::StatsSource::Analytic));
  }

  double s_nu = 0.0;  // sup_t E(d^T H^nu_{R_nu} d)
  for (const auto& st : stats) {
    s_nu = std::max(s_nu, (st.cov * h_nu_rnu.mat()).trace());
  }

  double sup_wbar_sq = 0.0;
  for (const auto& st : stats) {
    sup_wbar_sq = std::max(sup_wbar_sq, st.bold_mean.squaredNorm());
  }
  cert.tilde_add_nu = 4.0 * mat::lambda_max(cert.r_nu) * sup_wbar_sq;
  cert.tilde_add_0 = 4.0 * cert.lambda_max_r * sup_wbar_sq;

  cert.gamma_norms.resize(static_cast<std::size_t>(opt.horizon));
  cert.per_t_bias.resize(static_cast<std::size_t>(opt.horizon));
  cert.rho_d.resize(static_cast<std::size_t>(opt.horizon));
  double b_nu = -std::numeric_limits<double>::infinity();
  for (std::int64_t t = 1; t <= opt.horizon; ++t) {
    const auto& st = stats[static_cast<std::size_t>(stationary ? 0 : t - 1)];
    const MatrixXd r_nu_t =
        r.mat() + 4.0 * nu * r.mat() * st.cov * r.mat();
    const double e_rnut = (st.cov * r_nu_t).trace();
    const double bias = cert.c_nu * s_nu - e_rnut +
                        2.0 * st.bold_mean.dot(cert.r_nu.mat() * st.bold_mean) +
                        4.0 * nu * st.gamma.dot(r.mat() * st.bold_mean);
    const double rho_d = (st.cov * r.mat()).trace() + nu * st.delta;
    const std::size_t i = static_cast<std::size_t>(t - 1);
    cert.gamma_norms[i] = st.gamma.norm();
    cert.per_t_bias[i] = bias;
    cert.rho_d[i] = rho_d;
    b_nu = std::max(b_nu, rho_d + bias);
  }
  cert.b_nu = b_nu;
  cert.gamma_sup = *std::max_element(cert.gamma_norms.begin(), cert.gamma_norms.end());
  return cert;
}

MomentPath propagate_moments(const sim::LinearSystem& sys, std::int64_t horizon) {
  MomentPath mp;
  mp.mean.reserve(static_cast<std::size_t>(horizon + 1));
  mp.second.reserve(static_cast<std::size_t>(horizon + 1));
  VectorXd m = sys.x0;
  MatrixXd p = sys.x0 * sys.x0.transpose();
  mp.mean.push_back(m);
  mp.second.push_back(p);
  const MatrixXd& a = sys.a.mat();
  for (std::int64_t t = 0; t < horizon; ++t) {
    const VectorXd wbar = sys.noise.mean(t);
    const MatrixXd cov = sys.noise.cov(t);
    const MatrixXd am = a * m * wbar.transpose();
    p = a * p * a.transpose() + am + am.transpose() + cov + wbar * wbar.transpose();
    m = a * m + wbar;
    mp.mean.push_back(m);
    mp.second.push_back(p);
  }
  return mp;
}

std::vector<double> mcv_risk_exact(const sim::LinearSystem& sys,
                                   const mat::SymMatrix& r, double nu,
                                   std::int64_t horizon) {
  if (horizon < 1) throw Error("mcv_risk_exact: horizon must be >= 1");
  if (r.dim() != sys.dim()) {
    throw DimMismatch("mcv_risk_exact: R dimension disagrees with the system");
  }
  const MomentPath mp = propagate_moments(sys, horizon);
  std::vector<double> out(static_cast<std::size_t>(horizon));
  for (std::int64_t t = 1; t <= horizon; ++t) {
    const MatrixXd cov = sys.noise.cov(t - 1);
    const VectorXd gamma = sys.noise.gamma_vec(t - 1, r.mat());
    const double delta = sys.noise.delta_var(t - 1, r.mat());
    const MatrixXd r_nu_t = r.mat() + 4.0 * nu * r.mat() * cov * r.mat();
    const MatrixXd sr = cov * r.mat();
    const double rho = (r_nu_t * mp.second[static_cast<std::size_t>(t)]).trace() +
                       4.0 * nu * mp.mean[static_cast<std::size_t>(t)].dot(r.mat() * gamma) +
                       nu * delta - 4.0 * nu * (sr * sr).trace();
    out[static_cast<std::size_t>(t - 1)] = rho;
  }
  return out;
}

void VerificationReport::write_csv(const std::filesystem::path& path) const {
  std::string buf = "t,estimate,ci_lo,ci_hi,envelope,violation\n";
  std::vector<char> flag(times.size(), 0);
  for (std::size_t idx : violations) flag[idx] = 1;
  for (std::size_t i = 0; i < times.size(); ++i) {
    buf += std::to_string(times[i]);
    buf += ',';
    buf += io::format_double(estimate[i]);
    buf += ',';
    buf += io::format_double(ci_lo[i]);
    buf += ',';
    buf += io::format_double(ci_hi[i]);
    buf += ',';
    buf += io::format_double(envelope[i]);
    buf += ',';
    buf += flag[i] ? '1' : '0';
    buf += '\n';
  }
  io::atomic_write_text(path, buf);
}

VerificationReport verify_envelope(const StabilityCertificate& cert,
                                   const sim::LinearSystem& sys,
                                   const mat::SymMatrix& r, std::int64_t horizon,
                                   std::size_t n_paths, std::uint64_t seed,
                                   const VerifyOptions& opt) {
  if (horizon < 1) throw Error("verify_envelope: horizon must be >= 1");
  const sim::TrajectoryEnsemble ens =
      simulate(sys, horizon, n_paths, mix64(seed ^ kTagVerifySim));
  const sim::EnergyGrid eg = state_energy(ens, r);
  const double psi_x0 = sys.x0.dot(r.mat() * sys.x0);

  VerificationReport rep;
  rep.n_paths = n_paths;
  rep.seed = seed;
  const auto nt = static_cast<std::size_t>(horizon);
  rep.times.resize(nt);
  rep.estimate.resize(nt);
  rep.ci_lo.resize(nt);
  rep.ci_hi.resize(nt);
  rep.envelope.resize(nt);

  const double p_lo = (1.0 - opt.confidence) / 2.0;
  const double p_hi = 1.0 - p_lo;
  parallel_for(nt, [&](std::size_t i) {
    const std::int64_t t = static_cast<std::int64_t>(i) + 1;
    const std::vector<double> cross = eg.cross_section(t);
    const risk::EmpiricalSample sample{cross};
    rep.times[i] = t;
    rep.estimate[i] = risk::evaluate(cert.risk, sample);
    const std::vector<double> stats =
        bootstrap_stats(cross, cert.risk, opt.bootstrap_resamples, seed,
                        static_cast<std::uint64_t>(t), /*run_parallel=*/false);
    rep.ci_lo[i] = quantile_of_sorted(stats, p_lo);
    rep.ci_hi[i] = quantile_of_sorted(stats, p_hi);
    rep.envelope[i] = cert.envelope(t, psi_x0);
  });
  for (std::size_t i = 0; i < nt; ++i) {
    if (rep.ci_lo[i] > rep.envelope[i]) rep.violations.push_back(i);
  }
  return rep;
}

VerificationReport verify_envelope(const McvCertificate& cert,
                                   const sim::LinearSystem& sys,
                                   const mat::SymMatrix& r, std::int64_t horizon) {
  if (horizon < 1) throw Error("verify_envelope: horizon must be >= 1");
  const std::vector<double> exact = mcv_risk_exact(sys, r, cert.nu, horizon);
  VerificationReport rep;
  const auto nt = static_cast<std::size_t>(horizon);
  rep.times.resize(nt);
  rep.estimate = exact;
  rep.ci_lo = exact;
  rep.ci_hi = exact;
  rep.envelope.resize(nt);
  for (std::size_t i = 0; i < nt; ++i) {
    const std::int64_t t = static_cast<std::int64_t>(i) + 1;
    rep.times[i] = t;
    rep.envelope[i] = cert.envelope(t, sys.x0);
    if (rep.estimate[i] > rep.envelope[i]) rep.violations.push_back(i);
  }
  return rep;
}

VerificationReport probabilistic_check(const StabilityCertificate& cert,
                                       const sim::TrajectoryEnsemble& ensemble,
                                       const mat::SymMatrix& r, double confidence) {
  if (cert.risk.kind != risk::RiskKind::CVaR) {
    throw KindMismatch("probabilistic_check: needs a conditional value-at-risk "
                       "certificate");
  }
  const sim::EnergyGrid eg = state_energy(ensemble, r);
  const double psi_x0 =
      ensemble.state_vec(0, 0).dot(r.mat() * ensemble.state_vec(0, 0));
  const double target = 1.0 - cert.risk.alpha;
  // Two-sided normal quantile at `confidence`.
  const double z = confidence >= 0.99 ? 2.5758293035489004 : 1.959963984540054;
  const double n = static_cast<double>(ensemble.n_paths());

  VerificationReport rep;
  rep.n_paths = ensemble.n_paths();
  rep.seed = ensemble.seed();
  for (std::int64_t t = 1; t <= ensemble.horizon(); ++t) {
    const double env = cert.envelope(t, psi_x0);
    std::size_t covered = 0;
    for (std::size_t p = 0; p < ensemble.n_paths(); ++p) {
      if (eg.at(p, t) <= env) ++covered;
    }
    const double phat = static_cast<double>(covered) / n;
    const double hw = z * std::sqrt(std::max(phat * (1.0 - phat), 1e-12) / n);
    rep.times.push_back(t);
    rep.estimate.push_back(phat);
    rep.ci_lo.push_back(std::max(0.0, phat - hw));
    rep.ci_hi.push_back(std::min(1.0, phat + hw));
    rep.envelope.push_back(target);
    if (phat + hw < target) rep.violations.push_back(rep.times.size() - 1);
  }
  return rep;
}

double limsup_bound(const StabilityCertificate& cert) { return cert.b; }

double limsup_bound(const McvCertificate& cert) { return cert.b_nu; }

}  // namespace riskstab::cert

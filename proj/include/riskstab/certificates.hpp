#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "riskstab/matrix.hpp"
#include "riskstab/risk.hpp"
#include "riskstab/simulate.hpp"

namespace riskstab::cert {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Contraction gap of the weighted energy: eta = lambda_min(H_R - A^T H_R A)
// / lambda_max(H_R) with H_R = (R^{1/2})^T H R^{1/2}. In (0, 1] whenever the
// difference is PD. |eta - 1| <= this threshold selects the flat branch.
inline constexpr double kEtaOneTol = 1e-10;

// H such that H_R - A^T H_R A = Q (default Q = I): solve the discrete
// Lyapunov equation X - A^T X A = Q, then H = R^{-1/2} X R^{-1/2}. Requires
// R PD and A Schur-stable.
mat::SymMatrix choose_H(const mat::SquareMatrix& a, const mat::SymMatrix& r,
                        const std::optional<mat::SymMatrix>& q = std::nullopt);

double compute_eta(const mat::SquareMatrix& a, const mat::SymMatrix& r,
                   const mat::SymMatrix& h);

// Offset scale factor of the geometric branch,
//   c(kappa) = lambda / (lambda_min(H) (1-lambda) (lambda-(1-eta))),
// with lambda = 1 - kappa eta. Positive and finite for kappa in (0,1).
double offset_scale(double eta, double kappa, double lambda_min_h);

// Minimizer of c(kappa) over the default grid kappa = i * 1e-4, i = 1..9999.
// The minimizer of c * lambda_min(H) does not depend on H.
double argmin_kappa(double eta);

struct KappaPoint {
  double kappa = 0.0;
  // c(kappa) * lambda_min(H) = (1 - kappa eta) / (kappa eta (eta - kappa eta))
  double c_lam_min = 0.0;
};

// The H-independent tradeoff curve on a caller-supplied grid (entries must
// lie in (0,1)). Diverges toward both endpoints.
std::vector<KappaPoint> kappa_tradeoff(double eta, const std::vector<double>& grid);

enum class EnvelopeBranch { Geometric, Flat };

// Uniform transient bound for a coherent one-sided risk functional rho:
//   rho(psi(x_t)) <= a * lambda^t * psi(x_0) + b,  psi(x) = x^T R x,
// valid simultaneously for every admissible reweighting of the noise within
// the functional's dual family.
struct StabilityCertificate {
  risk::RiskSpec risk;
  EnvelopeBranch branch = EnvelopeBranch::Geometric;
  double eta = 0.0;
  double kappa = 0.0;      // geometric branch only
  double lambda = 0.0;
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;          // offset scale; flat branch: 1 / lambda_min(H)
  double b_prime = 0.0;    // upper confidence bound of sup_t rho(w^T H_R w)
  double b_prime_point = 0.0;  // point estimate behind b_prime
  mat::SymMatrix h = mat::SymMatrix::identity(1);
  mat::SymMatrix h_r = mat::SymMatrix::identity(1);
  bool transformed = false;  // scaled from a mean certificate; c stays base

  double envelope(std::int64_t t, double psi_x0) const;
};

struct CertifyOptions {
  std::optional<mat::SymMatrix> h;      // bypass choose_H
  std::optional<mat::SymMatrix> q;      // Lyapunov right-hand side, default I
  std::optional<double> kappa;          // default: argmin_kappa(eta)
  std::size_t noise_samples = 100000;
  std::size_t bootstrap_resamples = 1000;
  double bootstrap_level = 0.99;        // upper bound level used for b_prime
  std::uint64_t seed = 0;
  std::int64_t sup_horizon = 0;         // nonstationary noise: scan t in [0, this]
};

// Certificate for sys under a coherent risk spec (Mean, CVaR, MD with q = 1
// and beta <= 1/2, MUS with beta <= 1). The offset b = c * b_prime uses the
// upper bootstrap bound of the noise-energy risk so the reported envelope is
// conservative against sampling error.
StabilityCertificate coherent_certificate(const sim::LinearSystem& sys,
                                          const mat::SymMatrix& r,
                                          const risk::RiskSpec& risk,
                                          const CertifyOptions& opt = {});

// Mean certificate -> CVaR / MD(q=1) / MUS(q=1) certificate:
// (lambda, a, b) -> (lambda, a/alpha, b/alpha) resp. (lambda, a(1+2beta),
// b(1+2beta)). The contraction data (eta, kappa, H) carries over.
StabilityCertificate transform_certificate(const StabilityCertificate& cert,
                                           const risk::RiskSpec& target);

// Mean-conditional-variance certificate: rho_nu(Z) = E(Z) + nu E((E(Z|F)-Z)^2).
//   rho_nu(psi(x_t)) <= a_nu lam_nu^t psi~_nu(x0)
//                       + 4 nu |gamma_t| sqrt(a_0 lam_0^t lammax(R) psi~_0(x0))
//                       + b_nu
// with psi~_nu(x) = 4 x^T R_nu x + tilde_add_nu.
struct McvCertificate {
  double nu = 0.0;
  double lambda_nu = 0.0;
  double lambda_0 = 0.0;
  double a_nu = 0.0;
  double a_0 = 0.0;
  double c_nu = 0.0;
  double b_nu = 0.0;
  mat::SymMatrix r = mat::SymMatrix::identity(1);
  mat::SymMatrix r_nu = mat::SymMatrix::identity(1);
  mat::SymMatrix sigma_u = mat::SymMatrix::identity(1);
  mat::SymMatrix h_nu = mat::SymMatrix::identity(1);
  mat::SymMatrix h_0 = mat::SymMatrix::identity(1);
  double tilde_add_nu = 0.0;   // 4 lammax(R_nu) sup_t |bold_mean_t|^2
  double tilde_add_0 = 0.0;    // 4 lammax(R)   sup_t |bold_mean_t|^2
  double lambda_max_r = 0.0;
  double gamma_sup = 0.0;
  std::vector<double> gamma_norms;  // |gamma| for t = 1..horizon
  std::vector<double> per_t_bias;   // bias candidate per t = 1..horizon
  std::vector<double> rho_d;        // rho_nu(psi(d_t)) per t = 1..horizon
  std::int64_t horizon = 0;

  double envelope(std::int64_t t, const VectorXd& x0) const;
};

struct McvOptions {
  std::optional<mat::SymMatrix> q;        // Lyapunov RHS for both H solves
  std::optional<mat::SymMatrix> h_nu;
  std::optional<mat::SymMatrix> h_0;
  std::optional<mat::SymMatrix> sigma_u;  // default: stationary cov / spectral envelope
  std::int64_t horizon = 50;
};

McvCertificate mcv_certificate(const sim::LinearSystem& sys, const mat::SymMatrix& r,
                               double nu, const McvOptions& opt = {});

// Exact rho_nu(psi(x_t)) for t = 1..horizon by propagating first and second
// state moments:
//   rho_nu(psi(x_t)) = tr((R + 4 nu R S R) P_t) + 4 nu m_t^T R gamma
//                      + nu delta - 4 nu tr((S R)^2),
// with S, gamma, delta the central noise statistics of w_{t-1}.
std::vector<double> mcv_risk_exact(const sim::LinearSystem& sys,
                                   const mat::SymMatrix& r, double nu,
                                   std::int64_t horizon);

// First and second raw state moments E(x_t), E(x_t x_t^T), t = 0..horizon.
struct MomentPath {
  std::vector<VectorXd> mean;
  std::vector<MatrixXd> second;
};
MomentPath propagate_moments(const sim::LinearSystem& sys, std::int64_t horizon);

struct VerificationReport {
  std::vector<std::int64_t> times;
  std::vector<double> estimate;
  std::vector<double> ci_lo;
  std::vector<double> ci_hi;
  std::vector<double> envelope;
  std::vector<std::size_t> violations;  // indices into times
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;

  bool passed() const { return violations.empty(); }
  // Header t,estimate,ci_lo,ci_hi,envelope,violation; atomic write.
  void write_csv(const std::filesystem::path& path) const;
};

struct VerifyOptions {
  std::size_t bootstrap_resamples = 1000;
  double confidence = 0.99;
};

// Monte Carlo envelope check over t = 1..horizon. A time is flagged only
// when the lower confidence bound of the risk estimate exceeds the envelope,
// so sampling noise alone cannot fail a sound certificate.
VerificationReport verify_envelope(const StabilityCertificate& cert,
                                   const sim::LinearSystem& sys,
                                   const mat::SymMatrix& r, std::int64_t horizon,
                                   std::size_t n_paths, std::uint64_t seed,
                                   const VerifyOptions& opt = {});

// Mean-conditional-variance check: estimates come from the exact moment
// recursion, so the comparison carries no sampling tolerance.
VerificationReport verify_envelope(const McvCertificate& cert,
                                   const sim::LinearSystem& sys,
                                   const mat::SymMatrix& r, std::int64_t horizon);

// Coverage check implied by a CVaR certificate: P(psi(x_t) <= envelope(t))
// >= 1 - alpha. Estimates are per-t coverage frequencies with normal-
// approximation confidence bounds at `confidence`; a time is flagged when
// the upper bound falls below 1 - alpha.
VerificationReport probabilistic_check(const StabilityCertificate& cert,
                                       const sim::TrajectoryEnsemble& ensemble,
                                       const mat::SymMatrix& r,
                                       double confidence = 0.99);

// The certified limit superior bound of the risk of psi(x_t): the additive
// offset b (resp. b_nu).
double limsup_bound(const StabilityCertificate& cert);
double limsup_bound(const McvCertificate& cert);

}  // namespace riskstab::cert

#pragma once

#include <cstdint>
#include <vector>

#include "riskstab/certificates.hpp"
#include "riskstab/matrix.hpp"
#include "riskstab/noise.hpp"
#include "riskstab/simulate.hpp"

namespace riskstab::ctl {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// x_{t+1} = A x_t + B u_t + w_t with stationary noise.
struct PlantModel {
  mat::SquareMatrix a;
  MatrixXd b;          // n x m input map
  mat::SymMatrix r;    // PD state-energy weight
  sim::NoiseModel noise;

  PlantModel(mat::SquareMatrix a_in, MatrixXd b_in, mat::SymMatrix r_in,
             sim::NoiseModel noise_in);
  Eigen::Index state_dim() const { return a.dim(); }
  Eigen::Index input_dim() const { return b.cols(); }
};

// One-step-lookahead gain pair: u_t = -K x_t - T gamma, where gamma is the
// stationary third-order noise statistic E((w - wbar)(w - wbar)^T R (w - wbar)).
struct MyopicController {
  MatrixXd k;      // m x n
  MatrixXd t;      // m x n tail-bias matrix
  double nu = 0.0;
  double mu = 0.0;
  VectorXd gamma;  // stationary statistic used by the bias term

  VectorXd control(const VectorXd& x) const { return -k * x - t * gamma; }
};

// Minimizer of the one-step objective
//   rho_nu(psi(x_{t+1}) | x_t) + mu u^T u
// for zero-mean stationary noise:
//   K = G^{-1} B^T R_nu A,  T = 2 nu G^{-1} B^T R,  G = mu I + B^T R_nu B,
// with R_nu = R + 4 nu R Sigma R. G must be well conditioned (< 1e12).
MyopicController synthesize(const PlantModel& plant, double nu, double mu);

// Closed loop x_{t+1} = (A - BK) x_t + (w_t - B T gamma): the control's
// constant part shifts the noise mean, central statistics are untouched.
sim::LinearSystem close_loop(const PlantModel& plant, const MyopicController& ctrl,
                             const VectorXd& x0);
sim::LinearSystem close_loop(const PlantModel& plant, const MyopicController& ctrl);

// Analytic one-step objective E(x'^T R_nu x' + 4 nu x'^T R gamma | x, u)
// + mu u^T u with x' = A x + B u + w. Exposed so optimality of synthesize
// can be checked directly.
double myopic_objective(const PlantModel& plant, double nu, double mu,
                        const VectorXd& x, const VectorXd& u);

struct CompareRow {
  double nu = 0.0;
  double rate_ratio = 0.0;  // lambda_nu(risk-aware) / lambda_nu(risk-neutral)
  double bias_ratio = 0.0;  // b_nu(risk-aware) / b_nu(risk-neutral)
  bool feasible = false;
};

// For each grid nu: synthesize u^{nu,mu} and u^{0,mu}, close both loops, and
// certify both with the same H policy and the same evaluation weight nu.
// Loops that are not Schur stable (or fail certificate assumptions) come
// back infeasible with NaN ratios.
std::vector<CompareRow> compare_controllers(const PlantModel& plant, double mu,
                                            const std::vector<double>& nu_grid,
                                            const cert::McvOptions& cert_cfg = {});

}  // namespace riskstab::ctl

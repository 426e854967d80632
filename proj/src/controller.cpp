#include "riskstab/controller.hpp"

#include <cmath>
#include <limits>

#include <Eigen/SVD>

namespace riskstab::ctl {

PlantModel::PlantModel(mat::SquareMatrix a_in, MatrixXd b_in, mat::SymMatrix r_in,
                       sim::NoiseModel noise_in)
    : a(std::move(a_in)), b(std::move(b_in)), r(std::move(r_in)),
      noise(std::move(noise_in)) {
  if (b.rows() != a.dim()) {
    throw DimMismatch("PlantModel: B row count disagrees with A");
  }
  if (b.cols() < 1) throw DimMismatch("PlantModel: B needs at least one column");
  if (!b.allFinite()) throw Error("PlantModel: B has non-finite entries");
  if (r.dim() != a.dim()) {
    throw DimMismatch("PlantModel: R dimension disagrees with A");
  }
  if (!mat::is_pd(r)) throw AssumptionViolated("PlantModel: R must be positive definite");
  if (noise.dim() != a.dim()) {
    throw DimMismatch("PlantModel: noise dimension disagrees with A");
  }
}

MyopicController synthesize(const PlantModel& plant, double nu, double mu) {
  if (!(nu >= 0.0) || !std::isfinite(nu)) {
    throw BadWeight("synthesize: nu must be nonnegative");
  }
  if (!(mu >= 0.0) || !std::isfinite(mu)) {
    throw BadWeight("synthesize: mu must be nonnegative");
  }
  if (!plant.noise.stationary()) {
    throw NonStationaryNoise("synthesize: the gain pair needs stationary noise "
                             "statistics");
  }
  const MatrixXd sigma = plant.noise.cov(0);
  const MatrixXd& r = plant.r.mat();
  const MatrixXd r_nu = r + 4.0 * nu * r * sigma * r;
  const MatrixXd& b = plant.b;
  const Eigen::Index m = b.cols();
  const MatrixXd g = mu * MatrixXd::Identity(m, m) + b.transpose() * r_nu * b;

  Eigen::JacobiSVD<MatrixXd> svd(g, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  if (!(smin > 0.0) || smax / smin >= 1e12) {
    throw SingularGainSystem("synthesize: mu I + B^T R_nu B is singular or has "
                             "condition number >= 1e12");
  }

  MyopicController ctrl;
  ctrl.nu = nu;
  ctrl.mu = mu;
  ctrl.k = svd.solve(b.transpose() * r_nu * plant.a.mat());
  ctrl.t = 2.0 * nu * svd.solve(b.transpose() * r);
  ctrl.gamma = plant.noise.gamma_vec(0, r);
  return ctrl;
}

sim::LinearSystem close_loop(const PlantModel& plant, const MyopicController& ctrl,
                             const VectorXd& x0) {
  if (ctrl.k.cols() != plant.state_dim() || ctrl.k.rows() != plant.input_dim()) {
    throw DimMismatch("close_loop: gain shape disagrees with the plant");
  }
  if (ctrl.t.rows() != plant.input_dim() || ctrl.t.cols() != ctrl.gamma.size()) {
    throw DimMismatch("close_loop: tail-bias shape disagrees with gamma");
  }
  const MatrixXd a_cl = plant.a.mat() - plant.b * ctrl.k;
  const VectorXd offset = -(plant.b * (ctrl.t * ctrl.gamma));
  return {mat::SquareMatrix(a_cl), plant.noise.shifted(offset), x0};
}

sim::LinearSystem close_loop(const PlantModel& plant, const MyopicController& ctrl) {
  return close_loop(plant, ctrl, VectorXd::Zero(plant.state_dim()));
}

double myopic_objective(const PlantModel& plant, double nu, double mu,
                        const VectorXd& x, const VectorXd& u) {
  if (x.size() != plant.state_dim() || u.size() != plant.input_dim()) {
    throw DimMismatch("myopic_objective: argument dimensions disagree");
  }
  if (!plant.noise.stationary()) {
    throw NonStationaryNoise("myopic_objective: needs stationary noise statistics");
  }
  const MatrixXd& r = plant.r.mat();
  const MatrixXd sigma = plant.noise.cov(0);
  const MatrixXd r_nu = r + 4.0 * nu * r * sigma * r;
  const VectorXd gamma = plant.noise.gamma_vec(0, r);
  const VectorXd c = plant.a.mat() * x + plant.b * u + plant.noise.mean(0);
  return c.dot(r_nu * c) + (sigma * r_nu).trace() + 4.0 * nu * c.dot(r * gamma) +
         mu * u.squaredNorm();
}

std::vector<CompareRow> compare_controllers(const PlantModel& plant, double mu,
                                            const std::vector<double>& nu_grid,
                                            const cert::McvOptions& cert_cfg) {
  std::vector<CompareRow> rows;
  rows.reserve(nu_grid.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (double nu : nu_grid) {
    CompareRow row;
    row.nu = nu;
    try {
      const MyopicController aware = synthesize(plant, nu, mu);
      const MyopicController neutral = synthesize(plant, 0.0, mu);
      const sim::LinearSystem loop_aware = close_loop(plant, aware);
      const sim::LinearSystem loop_neutral = close_loop(plant, neutral);
      // Both loops are certified at the same evaluation weight nu, so the
      // ratios compare the same functional on the two designs.
      const cert::McvCertificate ca =
          cert::mcv_certificate(loop_aware, plant.r, nu, cert_cfg);
      const cert::McvCertificate cn =
          cert::mcv_certificate(loop_neutral, plant.r, nu, cert_cfg);
      row.rate_ratio = ca.lambda_nu / cn.lambda_nu;
      row.bias_ratio = ca.b_nu / cn.b_nu;
      row.feasible = true;
    } catch (const Error&) {
      row.rate_ratio = nan;
      row.bias_ratio = nan;
      row.feasible = false;
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace riskstab::ctl

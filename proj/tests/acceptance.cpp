// End-to-end acceptance gates. Each gate prints one [PASS]/[FAIL] line; the
// exit code is the number of failed gates. Tolerances are pinned here, next
// to the checks that use them.

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "riskstab/cert_io.hpp"
#include "riskstab/certificates.hpp"
#include "riskstab/commands.hpp"
#include "riskstab/controller.hpp"
#include "riskstab/matrix.hpp"
#include "riskstab/noise.hpp"
#include "riskstab/risk.hpp"
#include "riskstab/rng.hpp"
#include "riskstab/simulate.hpp"

using namespace riskstab;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using Json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

// ---- pinned tolerances ----------------------------------------------------
constexpr double kLyapResidRel = 1e-10;      // vs ||Q||_F
constexpr double kCoherenceTol = 1e-9;       // axiom slack
constexpr double kDualityTol = 1e-9;         // polytope optimum agreement
constexpr double kCurveTol = 1e-12;          // closed-form curve agreement
constexpr double kMinimaRelTol = 1e-6;       // grid vs fine-grid minimum value
constexpr double kMinimaKappaTol = 6e-4;     // grid vs fine-grid minimizer
constexpr double kExactEnvSlackRel = 1e-9;   // exact risk vs envelope
constexpr double kPairedSigmas = 5.0;        // closed form vs Monte Carlo
constexpr double kDualMeanSigmas = 3.0;      // reweighted mean vs dual bound
constexpr double kRateRatioTol = 1e-9;
constexpr double kBiasRatioAtTen = 0.8;
constexpr double kMonotoneTol = 1e-9;
constexpr double kOneStepSigmas = 4.0;       // contraction check CI width
constexpr double kLyapBudgetSec = 10.0;
constexpr double kEnvelopeBudgetSec = 120.0;
constexpr double kRatioBudgetSec = 300.0;

// ---- tiny check harness ---------------------------------------------------
struct Ctx {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (cond) return;
    ok = false;
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(6);
  ss << v;
  return ss.str();
}

// ---- shared helpers ---------------------------------------------------------
MatrixXd random_square(RngStream& rng, int n) {
  MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
  return m;
}

MatrixXd with_radius(RngStream& rng, int n, double target) {
  MatrixXd m = random_square(rng, n);
  double r = m.eigenvalues().cwiseAbs().maxCoeff();
  while (r < 1e-8) {
    m = random_square(rng, n);
    r = m.eigenvalues().cwiseAbs().maxCoeff();
  }
  return m * (target / r);
}

MatrixXd random_psd(RngStream& rng, int n, double min_eig, double max_eig) {
  MatrixXd g = random_square(rng, n);
  Eigen::HouseholderQR<MatrixXd> qr(g);
  MatrixXd q = qr.householderQ();
  VectorXd w(n);
  for (int i = 0; i < n; ++i) w(i) = rng.uniform(min_eig, max_eig);
  MatrixXd m = q * w.asDiagonal() * q.transpose();
  return 0.5 * (m + m.transpose());
}

VectorXd vec2(double a, double b) {
  VectorXd v(2);
  v << a, b;
  return v;
}

std::vector<double> random_sample(RngStream& rng, std::size_t n, double lo,
                                  double hi) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

double mean_of(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / double(v.size());
}

// The open-loop two-state benchmark with box noise on [-1,1]^2.
sim::LinearSystem open_loop_benchmark() {
  MatrixXd a(2, 2);
  a << 0.8, 0.4, 0.0, -0.8;
  return sim::LinearSystem(
      mat::SquareMatrix(a),
      sim::NoiseModel::uniform(vec2(-1.0, -1.0), vec2(1.0, 1.0)),
      vec2(3.0, -2.0));
}

ctl::PlantModel benchmark_plant() {
  MatrixXd a(2, 2);
  a << 0.8, 0.4, 0.0, -0.8;
  MatrixXd b(2, 1);
  b << 0.0, 1.0;
  return ctl::PlantModel(
      mat::SquareMatrix(a), b, mat::SymMatrix::identity(2),
      sim::NoiseModel::gaussian_mixture(
          {0.7, 0.3}, {VectorXd::Zero(2), vec2(2.0, 15.0)},
          {mat::SymMatrix::identity(2),
           mat::SymMatrix(10.0 * MatrixXd::Identity(2, 2))}));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  f << text;
}

fs::path fresh_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / "riskstab_acceptance" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli_quiet(const std::vector<std::string>& args, std::string* err_out = nullptr) {
  std::ostringstream out, err;
  int code = cli::run_cli(args, out, err);
  if (err_out) *err_out = err.str();
  return code;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

// rows of a CSV file, header dropped
std::vector<std::vector<std::string>> csv_rows(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::string line;
  std::vector<std::vector<std::string>> rows;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first) {
      first = false;
      continue;
    }
    rows.push_back(split_csv(line));
  }
  return rows;
}

// ---- gate 1: Lyapunov solver ------------------------------------------------
void gate_lyapunov(Ctx& c) {
  const auto t0 = std::chrono::steady_clock::now();
  RngStream rng(101, 0, 0);
  for (int rep = 0; rep < 200; ++rep) {
    int n = 1 + int(rng.below(8));
    double radius = rng.uniform(0.05, 0.95);
    MatrixXd a = with_radius(rng, n, radius);
    MatrixXd qm = rep % 2 == 0 ? MatrixXd(MatrixXd::Identity(n, n))
                               : random_psd(rng, n, 0.3, 4.0);
    auto q = mat::SymMatrix(qm);
    auto x = mat::solve_discrete_lyapunov(mat::SquareMatrix(a), q);
    double resid =
        (x.mat() - a.transpose() * x.mat() * a - qm).norm() / qm.norm();
    c.require(resid <= kLyapResidRel,
              "residual " + fmt(resid) + " at rep " + std::to_string(rep));
    c.require(mat::is_pd(x), "solution not PD at rep " + std::to_string(rep));
  }
  // solvability with a PD solution if and only if the spectrum is inside the
  // unit circle
  for (int rep = 0; rep < 100; ++rep) {
    int n = 2 + int(rng.below(5));
    bool stable = rep % 2 == 0;
    double radius = stable ? rng.uniform(0.05, 0.95) : rng.uniform(1.05, 2.0);
    MatrixXd a = with_radius(rng, n, radius);
    bool threw = false;
    bool pd = false;
    try {
      auto x = mat::solve_discrete_lyapunov(mat::SquareMatrix(a),
                                            mat::SymMatrix::identity(n));
      pd = mat::is_pd(x);
    } catch (const NotSchurStable&) {
      threw = true;
    }
    if (stable) {
      c.require(!threw && pd, "stable instance rejected at rep " + std::to_string(rep));
    } else {
      c.require(threw, "unstable instance accepted at rep " + std::to_string(rep));
    }
  }
  double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.require(sec < kLyapBudgetSec, "battery took " + fmt(sec) + " s");
}

// ---- gate 2: coherence axioms ----------------------------------------------
void gate_coherence(Ctx& c) {
  RngStream rng(102, 0, 0);
  for (int rep = 0; rep < 1000; ++rep) {
    std::size_t n = 16 + rng.below(49);
    auto v = random_sample(rng, n, -6.0, 6.0);
    auto w = random_sample(rng, n, -6.0, 6.0);
    risk::EmpiricalSample s(v);

    std::vector<risk::RiskSpec> specs = {
        risk::RiskSpec::cvar(rng.uniform(0.05, 1.0)),
        risk::RiskSpec::md(1.0, rng.uniform(0.0, 0.5)),
        risk::RiskSpec::mus(1.0, rng.uniform(0.0, 1.0))};
    double shift = rng.uniform(-3.0, 3.0);
    double scale = rng.uniform(0.1, 5.0);

    for (const auto& spec : specs) {
      double base = risk::evaluate(spec, s);
      auto shifted = v;
      for (auto& x : shifted) x += shift;
      double tr = risk::evaluate(spec, risk::EmpiricalSample(shifted));
      c.require(std::abs(tr - (base + shift)) <= kCoherenceTol,
                "translation broke at rep " + std::to_string(rep));
      auto scaled = v;
      for (auto& x : scaled) x *= scale;
      double ho = risk::evaluate(spec, risk::EmpiricalSample(scaled));
      c.require(std::abs(ho - scale * base) <=
                    kCoherenceTol * std::max(1.0, std::abs(scale * base)),
                "homogeneity broke at rep " + std::to_string(rep));
      auto bigger = v;
      for (auto& x : bigger) x += rng.uniform(0.0, 1.0);
      double mono = risk::evaluate(spec, risk::EmpiricalSample(bigger));
      c.require(mono >= base - kCoherenceTol,
                "monotonicity broke at rep " + std::to_string(rep));
      auto mix = v;
      for (std::size_t i = 0; i < n; ++i) mix[i] = 0.5 * v[i] + 0.5 * w[i];
      double cx = risk::evaluate(spec, risk::EmpiricalSample(mix));
      double ub = 0.5 * base + 0.5 * risk::evaluate(spec, risk::EmpiricalSample(w));
      c.require(cx <= ub + kCoherenceTol,
                "convexity broke at rep " + std::to_string(rep));
    }

    double alpha = rng.uniform(0.05, 0.95);
    c.require(risk::var_alpha(s, alpha) <= risk::cvar_alpha(s, alpha) + kCoherenceTol,
              "var exceeded cvar at rep " + std::to_string(rep));
    double q = 1.0 + rng.uniform(0.0, 3.0);
    double beta = rng.uniform(0.0, 1.0);
    c.require(risk::mean_upper_semidev(s, q, beta) <=
                  risk::mean_deviation(s, q, beta) + kCoherenceTol,
              "upper semideviation exceeded full deviation at rep " + std::to_string(rep));
    c.require(std::abs(risk::cvar_alpha(s, 1.0) - s.mean()) <= kCoherenceTol,
              "full-tail average is not the mean at rep " + std::to_string(rep));
    if (!c.ok) break;
  }
}

// ---- gate 3: dual representation ---------------------------------------------
double density_objective(const std::vector<double>& z, const std::vector<double>& xi) {
  double acc = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) acc += z[i] * xi[i];
  return acc / double(z.size());
}

double cvar_dual_brute_force(const std::vector<double>& z, double alpha) {
  const std::size_t n = z.size();
  const double cap = 1.0 / alpha;
  double best = -1e300;
  for (std::size_t mask = 0; mask < (std::size_t(1) << n); ++mask) {
    double used = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (std::size_t(1) << i)) used += cap;
    double leftover = double(n) - used;
    if (leftover < -1e-12) continue;
    std::vector<double> xi(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (std::size_t(1) << i)) xi[i] = cap;
    if (leftover <= 1e-12) {
      best = std::max(best, density_objective(z, xi));
      continue;
    }
    if (leftover > cap + 1e-12) continue;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (std::size_t(1) << i)) continue;
      xi[i] = leftover;
      best = std::max(best, density_objective(z, xi));
      xi[i] = 0.0;
    }
  }
  return best;
}

void gate_duality(Ctx& c) {
  RngStream rng(103, 0, 0);
  for (int rep = 0; rep < 20; ++rep) {
    std::size_t n = 4 + rng.below(9);
    auto z = random_sample(rng, n, -5.0, 5.0);
    double alpha = rng.uniform(0.1, 0.95);
    risk::EmpiricalSample s(z);
    double cv = risk::cvar_alpha(s, alpha);
    double brute = cvar_dual_brute_force(z, alpha);
    c.require(std::abs(cv - brute) <= kDualityTol,
              "brute-force optimum " + fmt(brute) + " vs functional " + fmt(cv));
    auto d = risk::cvar_optimal_density(s, alpha);
    c.require(risk::check_density(d), "optimal density not admissible");
    c.require(std::abs(density_objective(z, d.values) - cv) <= kDualityTol,
              "optimal density does not attain the functional");
  }
  // random admissible reweightings never exceed the functional
  auto z = random_sample(rng, 40, -5.0, 5.0);
  risk::EmpiricalSample s(z);
  double alpha = 0.35;
  double cv = risk::cvar_alpha(s, alpha);
  int tried = 0;
  for (int rep = 0; rep < 5000 && tried < 1000; ++rep) {
    std::vector<double> xi(z.size());
    double acc = 0.0;
    for (auto& x : xi) {
      x = rng.uniform(0.0, 1.0 / alpha);
      acc += x;
    }
    double scale = double(xi.size()) / acc;
    bool ok = true;
    for (auto& x : xi) {
      x *= scale;
      if (x > 1.0 / alpha) ok = false;
    }
    if (!ok) continue;
    ++tried;
    c.require(density_objective(z, xi) <= cv + kDualityTol,
              "admissible density beat the functional");
  }
  c.require(tried >= 1000, "only " + std::to_string(tried) + " densities sampled");
}

// ---- gate 4: simulated envelope ----------------------------------------------
void gate_envelope(Ctx& c) {
  const auto t0 = std::chrono::steady_clock::now();
  auto sys = open_loop_benchmark();
  auto r = mat::SymMatrix::identity(2);
  cert::CertifyOptions opt;  // defaults: 1e5 noise draws, 1000 resamples
  auto crt = cert::coherent_certificate(sys, r, risk::RiskSpec::mus(1.0, 1.0), opt);
  c.require(crt.branch == cert::EnvelopeBranch::Geometric, "expected geometric branch");

  // 200 resamples keeps the confidence bounds honest at a fraction of the
  // default cost; the envelope margin is far wider than the CI either way
  cert::VerifyOptions vo;
  vo.bootstrap_resamples = 200;
  auto rep = cert::verify_envelope(crt, sys, r, 50, 100000, 1, vo);
  c.require(rep.passed(),
            std::to_string(rep.violations.size()) + " significant violations");

  auto broken = crt;
  broken.b = 0.0;
  auto rep2 = cert::verify_envelope(broken, sys, r, 50, 20000, 1, vo);
  c.require(!rep2.passed(), "zeroed offset not flagged");

  double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.require(sec < kEnvelopeBudgetSec, "took " + fmt(sec) + " s");
}

// ---- gate 5: transformed envelope and coverage -------------------------------
void gate_transform(Ctx& c) {
  auto sys = open_loop_benchmark();
  auto r = mat::SymMatrix::identity(2);
  cert::CertifyOptions opt;
  auto mean_cert = cert::coherent_certificate(sys, r, risk::RiskSpec::mean(), opt);
  auto cvar_cert = cert::transform_certificate(mean_cert, risk::RiskSpec::cvar(0.25));
  c.require(std::abs(cvar_cert.a - 4.0 * mean_cert.a) <= 1e-12 * mean_cert.a,
            "transient coefficient not scaled by 1/alpha");
  c.require(std::abs(cvar_cert.b - 4.0 * mean_cert.b) <= 1e-12 * mean_cert.b,
            "offset not scaled by 1/alpha");

  cert::VerifyOptions vo;
  vo.bootstrap_resamples = 200;
  auto rep = cert::verify_envelope(cvar_cert, sys, r, 50, 100000, 2, vo);
  c.require(rep.passed(),
            std::to_string(rep.violations.size()) + " envelope violations");

  auto ens = sim::simulate(sys, 50, 100000, 3);
  auto cov = cert::probabilistic_check(cvar_cert, ens, r);
  c.require(cov.passed(),
            std::to_string(cov.violations.size()) + " coverage violations");
}

// ---- gate 6: conditional-variance envelope ------------------------------------
void gate_cond_variance(Ctx& c) {
  auto plant = benchmark_plant();
  const double nu = 10.0;
  const double mu = 0.25;
  auto ctrl = ctl::synthesize(plant, nu, mu);
  auto loop = ctl::close_loop(plant, ctrl, vec2(3.0, -2.0));
  auto r = mat::SymMatrix::identity(2);

  auto crt = cert::mcv_certificate(loop, r, nu);
  auto exact = cert::mcv_risk_exact(loop, r, nu, 50);
  for (std::size_t i = 0; i < exact.size(); ++i) {
    double env = crt.envelope(std::int64_t(i + 1), loop.x0);
    c.require(exact[i] <= env + kExactEnvSlackRel * std::max(1.0, env),
              "exact risk above envelope at t = " + std::to_string(i + 1));
  }

  // Monte Carlo agreement: per-path cost + nu * squared one-step prediction
  // error has expectation equal to the closed form.
  const std::size_t n_paths = 100000;
  auto ens = sim::simulate(loop, 50, n_paths, 11);
  const MatrixXd& a = loop.a.mat();
  const VectorXd wbar = loop.noise.mean(0);
  const double tr_sr = loop.noise.cov(0).trace();  // R = I
  for (std::int64_t t : {1, 2, 3, 5, 10, 20, 35, 50}) {
    double acc = 0.0, acc2 = 0.0;
    for (std::size_t p = 0; p < n_paths; ++p) {
      VectorXd prev = ens.state_vec(p, t - 1);
      VectorXd x = ens.state_vec(p, t);
      double cost = x.squaredNorm();
      VectorXd cmean_vec = a * prev + wbar;
      double cond_mean = cmean_vec.squaredNorm() + tr_sr;
      double y = cost + nu * (cond_mean - cost) * (cond_mean - cost);
      acc += y;
      acc2 += y * y;
    }
    double est = acc / double(n_paths);
    double var = acc2 / double(n_paths) - est * est;
    double se = std::sqrt(std::max(var, 0.0) / double(n_paths));
    double want = exact[std::size_t(t - 1)];
    c.require(std::abs(est - want) <= kPairedSigmas * se,
              "closed form " + fmt(want) + " vs estimate " + fmt(est) +
                  " (se " + fmt(se) + ") at t = " + std::to_string(t));
  }
}

// ---- gate 7: tradeoff curves ----------------------------------------------
void gate_tradeoff_curves(Ctx& c) {
  auto dir = fresh_dir("tradeoff");
  c.require(run_cli_quiet({"reproduce", "illus2", "--out", dir.string()}) == 0,
            "reproduction command failed");

  auto rows = csv_rows(dir / "illus2_curves.csv");
  c.require(rows.size() == 5 * 9999,
            "expected 49995 curve rows, got " + std::to_string(rows.size()));
  for (const auto& f : rows) {
    double eta = std::stod(f[0]);
    double kappa = std::stod(f[1]);
    double val = std::stod(f[2]);
    double want = (1.0 - kappa * eta) / (kappa * eta * (eta - kappa * eta));
    if (std::abs(val - want) > kCurveTol * std::max(1.0, std::abs(want))) {
      c.require(false, "curve value off closed form at eta " + fmt(eta) +
                           ", kappa " + fmt(kappa));
      break;
    }
  }

  auto minima = csv_rows(dir / "illus2_minima.csv");
  c.require(minima.size() == 5, "expected 5 minima rows");
  for (const auto& f : minima) {
    double eta = std::stod(f[0]);
    double kappa_star = std::stod(f[1]);
    double val_star = std::stod(f[2]);
    // fine-grid oracle at step 1e-5
    double best = 1e300, best_k = 0.0;
    for (int i = 1; i < 100000; ++i) {
      double k = i * 1e-5;
      double v = (1.0 - k * eta) / (k * eta * (eta - k * eta));
      if (v < best) {
        best = v;
        best_k = k;
      }
    }
    c.require(std::abs(val_star - best) <= kMinimaRelTol * best,
              "minimum value off oracle at eta " + fmt(eta));
    c.require(std::abs(kappa_star - best_k) <= kMinimaKappaTol,
              "minimizer off oracle at eta " + fmt(eta));
  }
}

// ---- gate 8: reweighted noise energies ---------------------------------------
void gate_reweighted_energies(Ctx& c) {
  auto dir = fresh_dir("reweight");
  c.require(run_cli_quiet({"reproduce", "illus1", "--out", dir.string()}) == 0,
            "reproduction command failed");

  auto rows = csv_rows(dir / "illus1_estimates.csv");
  double mean = 0, mus2 = 0, mus12 = 0, r1m = 0, r1se = 0, r2m = 0, r2se = 0;
  for (const auto& f : rows) {
    double v = std::stod(f[1]);
    if (f[0] == "mean") mean = v;
    if (f[0] == "mus_q2") mus2 = v;
    if (f[0] == "mus_q12") mus12 = v;
    if (f[0] == "reality1_mean") r1m = v;
    if (f[0] == "reality1_se") r1se = v;
    if (f[0] == "reality2_mean") r2m = v;
    if (f[0] == "reality2_se") r2se = v;
  }
  c.require(mean > 0.0 && mus2 > 0.0 && mus12 > 0.0, "estimates missing");
  c.require(mus12 >= mus2 && mus2 >= mean,
            "dispersion ordering broken: " + fmt(mean) + ", " + fmt(mus2) + ", " +
                fmt(mus12));
  c.require(r1m <= mus2 + kDualMeanSigmas * r1se,
            "first reweighted mean " + fmt(r1m) + " above dual bound " + fmt(mus2));
  c.require(r2m <= mus2 + kDualMeanSigmas * r2se,
            "second reweighted mean " + fmt(r2m) + " above dual bound " + fmt(mus2));
}

// ---- gate 9: risk-aware gain ratios -------------------------------------------
void gate_gain_ratios(Ctx& c) {
  const auto t0 = std::chrono::steady_clock::now();
  auto dir = fresh_dir("ratios");
  c.require(run_cli_quiet({"reproduce", "fig4", "--out", dir.string()}) == 0,
            "reproduction command failed");

  auto rows = csv_rows(dir / "fig4_ratios.csv");
  c.require(rows.size() == 6, "expected 6 grid rows");
  double prev_bias = 1e300;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    double nu = std::stod(rows[i][0]);
    double rate = std::stod(rows[i][1]);
    double bias = std::stod(rows[i][2]);
    c.require(rows[i][3] == "1", "infeasible row at nu " + fmt(nu));
    c.require(rate <= 1.0 + kRateRatioTol, "rate ratio " + fmt(rate) + " at nu " + fmt(nu));
    if (i == 0) {
      c.require(nu == 0.0 && std::abs(rate - 1.0) <= 1e-12 &&
                    std::abs(bias - 1.0) <= 1e-12,
                "risk-neutral row is not exactly (1, 1)");
    }
    c.require(bias <= prev_bias + kMonotoneTol,
              "bias ratio rose at nu " + fmt(nu));
    prev_bias = bias;
    if (i == rows.size() - 1) {
      c.require(nu == 10.0 && bias < kBiasRatioAtTen,
                "bias ratio " + fmt(bias) + " at nu 10");
    }
  }
  double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.require(sec < kRatioBudgetSec, "took " + fmt(sec) + " s");
}

// ---- gate 10: supporting inequalities -----------------------------------------
void gate_supporting_inequalities(Ctx& c) {
  RngStream rng(110, 0, 0);

  // contraction number lies in (0, 1]
  for (int rep = 0; rep < 200; ++rep) {
    int n = 1 + int(rng.below(6));
    MatrixXd a = with_radius(rng, n, rng.uniform(0.05, 0.95));
    auto r = mat::SymMatrix(random_psd(rng, n, 0.2, 3.0));
    auto h = cert::choose_H(mat::SquareMatrix(a), r);
    double eta = cert::compute_eta(mat::SquareMatrix(a), r, h);
    c.require(eta > 0.0 && eta <= 1.0 + cert::kEtaOneTol,
              "eta " + fmt(eta) + " out of range at rep " + std::to_string(rep));
  }

  // weighted two-term expansion
  for (int rep = 0; rep < 1000; ++rep) {
    int n = 1 + int(rng.below(5));
    MatrixXd m = random_psd(rng, n, 0.0, 4.0);
    VectorXd y(n), z(n);
    for (int i = 0; i < n; ++i) {
      y(i) = rng.uniform(-3.0, 3.0);
      z(i) = rng.uniform(-3.0, 3.0);
    }
    double eps = rng.uniform(0.01, 10.0);
    VectorXd s = y + z;
    double lhs = s.dot(m * s);
    double rhs = (1.0 + eps) * y.dot(m * y) + (1.0 + 1.0 / eps) * z.dot(m * z);
    c.require(lhs <= rhs + 1e-12 * std::max(1.0, rhs),
              "expansion bound broke at rep " + std::to_string(rep));
  }

  // eigenvalue sandwich of the conjugated quadratic form
  for (int rep = 0; rep < 1000; ++rep) {
    int n = 1 + int(rng.below(5));
    auto h = mat::SymMatrix(random_psd(rng, n, 0.1, 5.0));
    auto r = mat::SymMatrix(random_psd(rng, n, 0.1, 5.0));
    VectorXd x(n);
    for (int i = 0; i < n; ++i) x(i) = rng.uniform(-2.0, 2.0);
    double base = x.dot(r.mat() * x);
    double mid = x.dot(mat::conjugate(h, r).mat() * x);
    c.require(mat::lambda_min(h) * base <= mid + 1e-8 * std::max(1.0, mid) &&
                  mid <= mat::lambda_max(h) * base + 1e-8 * std::max(1.0, mid),
              "sandwich broke at rep " + std::to_string(rep));
  }

  // geometric recursion bound
  for (int rep = 0; rep < 1000; ++rep) {
    double lam = rng.uniform(0.01, 0.99);
    double m = rng.uniform(0.0, 5.0);
    double v = rng.uniform(0.0, 10.0);
    double v0 = v;
    for (int t = 1; t <= 30; ++t) {
      v = lam * v + m - rng.uniform(0.0, 1.0) * m;
      double bound = std::pow(lam, double(t)) * v0 + m / (1.0 - lam);
      c.require(v <= bound + 1e-12 * std::max(1.0, bound),
                "recursion bound broke at rep " + std::to_string(rep));
    }
  }

  // risk-neutral one-step contraction of the weighted energy on simulated
  // systems: E(v(x_{t+1})) <= lambda E(v(x_t)) + lambda/(lambda-(1-eta)) b'
  for (int sysrep = 0; sysrep < 10; ++sysrep) {
    int n = 1 + int(rng.below(3));
    MatrixXd a = with_radius(rng, n, rng.uniform(0.1, 0.85));
    VectorXd lo(n), hi(n);
    for (int i = 0; i < n; ++i) {
      lo(i) = -rng.uniform(0.2, 1.5);
      hi(i) = rng.uniform(0.2, 1.5);
    }
    VectorXd x0(n);
    for (int i = 0; i < n; ++i) x0(i) = rng.uniform(-2.0, 2.0);
    sim::LinearSystem sys(mat::SquareMatrix(a), sim::NoiseModel::uniform(lo, hi), x0);
    auto r = mat::SymMatrix::identity(n);
    cert::CertifyOptions opt;
    opt.noise_samples = 5000;
    opt.bootstrap_resamples = 100;
    opt.seed = 200 + std::uint64_t(sysrep);
    auto crt = cert::coherent_certificate(sys, r, risk::RiskSpec::mean(), opt);
    if (crt.branch != cert::EnvelopeBranch::Geometric) continue;

    // analytic mean of the raw-noise weighted energy
    const MatrixXd& hr = crt.h_r.mat();
    VectorXd wbar = sys.noise.mean(0);
    double b_prime = (sys.noise.cov(0) * hr).trace() + wbar.dot(hr * wbar);
    double gain = crt.lambda / (crt.lambda - (1.0 - crt.eta));

    const std::size_t n_paths = 20000;
    auto ens = sim::simulate(sys, 8, n_paths, 300 + std::uint64_t(sysrep));
    auto grid = sim::state_energy(ens, crt.h_r);
    std::vector<double> mean_v(9), se_v(9);
    for (std::int64_t t = 0; t <= 8; ++t) {
      auto xs = grid.cross_section(t);
      double m = mean_of(xs);
      double ss = 0.0;
      for (double x : xs) ss += (x - m) * (x - m);
      mean_v[std::size_t(t)] = m;
      se_v[std::size_t(t)] = std::sqrt(ss / double(xs.size() - 1) / double(xs.size()));
    }
    for (std::int64_t t = 0; t < 8; ++t) {
      double lhs = mean_v[std::size_t(t + 1)];
      double rhs = crt.lambda * mean_v[std::size_t(t)] + gain * b_prime;
      double margin = kOneStepSigmas *
                      (se_v[std::size_t(t + 1)] + crt.lambda * se_v[std::size_t(t)]);
      c.require(lhs <= rhs + margin,
                "one-step contraction broke at system " + std::to_string(sysrep) +
                    ", t = " + std::to_string(t));
    }
  }
}

// ---- gate 11: determinism ------------------------------------------------------
struct EnvThreads {
  std::string saved;
  bool had = false;
  EnvThreads() {
    if (const char* v = std::getenv("RISKSTAB_THREADS")) {
      saved = v;
      had = true;
    }
  }
  ~EnvThreads() {
    if (had) {
      setenv("RISKSTAB_THREADS", saved.c_str(), 1);
    } else {
      unsetenv("RISKSTAB_THREADS");
    }
  }
};

void gate_determinism(Ctx& c) {
  EnvThreads restore;
  auto root = fresh_dir("determinism");

  Json base;
  base["schema_version"] = 1;
  base["system"]["a"] = Json::array({Json::array({0.5, 0.0}), Json::array({0.0, 0.25})});
  base["system"]["x0"] = Json::array({1.0, 1.0});
  base["noise"]["kind"] = "uniform";
  base["noise"]["lo"] = Json::array({-1.0, -1.0});
  base["noise"]["hi"] = Json::array({1.0, 1.0});
  base["risk"]["kind"] = "mean_upper_semideviation";
  base["risk"]["q"] = 1.0;
  base["risk"]["beta"] = 1.0;
  base["certificate"]["noise_samples"] = 20000;
  base["certificate"]["bootstrap_resamples"] = 300;
  fs::path base_cfg = root / "base.json";
  write_text(base_cfg, base.dump(2) + "\n");

  Json ctrl_cfg = Json{{"schema_version", 1}};
  ctrl_cfg["system"]["a"] = Json::array({Json::array({0.8, 0.4}), Json::array({0.0, -0.8})});
  ctrl_cfg["system"]["b"] = Json::array({Json::array({0.0}), Json::array({1.0})});
  ctrl_cfg["noise"]["kind"] = "gaussian";
  ctrl_cfg["noise"]["mean"] = Json::array({0.0, 0.0});
  ctrl_cfg["noise"]["cov"] = Json::array({Json::array({1.0, 0.0}), Json::array({0.0, 1.0})});
  ctrl_cfg["controller"]["nu_grid"] = Json::array({0.0, 1.0, 5.0});
  ctrl_cfg["controller"]["mu"] = 0.25;
  fs::path ctrl_path = root / "ctrl.json";
  write_text(ctrl_path, ctrl_cfg.dump(2) + "\n");

  Json sweep_cfg = Json{{"schema_version", 1}};
  sweep_cfg["sweep"]["etas"] = Json::array({0.3, 0.7});
  fs::path sweep_path = root / "sweep.json";
  write_text(sweep_path, sweep_cfg.dump(2) + "\n");

  // each entry: command name for the report, base args (without --out), and
  // the product files that must be byte-identical
  struct Case {
    std::string name;
    std::vector<std::string> args;
    std::vector<std::string> products;
  };
  std::vector<Case> cases = {
      {"certify",
       {"certify", "--config", base_cfg.string()},
       {"certificate.json"}},
      {"simulate",
       {"simulate", "--config", base_cfg.string(), "--paths", "200",
        "--horizon", "20", "--seed", "5"},
       {"trajectories.csv"}},
      {"controller",
       {"controller", "--config", ctrl_path.string()},
       {"ratios.csv"}},
      {"sweep-kappa",
       {"sweep-kappa", "--config", sweep_path.string()},
       {"kappa_curve.csv", "kappa_minima.csv"}},
      {"reproduce illus1",
       {"reproduce", "illus1", "--paths", "20000"},
       {"illus1_trajectories.csv", "illus1_ecdf_nominal.csv",
        "illus1_ecdf_reality1.csv", "illus1_ecdf_reality2.csv",
        "illus1_estimates.csv"}},
      {"reproduce illus2",
       {"reproduce", "illus2"},
       {"illus2_curves.csv", "illus2_minima.csv"}},
      {"reproduce illus3",
       {"reproduce", "illus3"},
       {"illus3_trajectories.csv", "illus3_ecdf_energy.csv",
        "illus3_ecdf_effort.csv"}},
      {"reproduce fig4", {"reproduce", "fig4"}, {"fig4_ratios.csv"}},
  };

  int case_idx = 0;
  for (const auto& cs : cases) {
    fs::path serial = root / ("s" + std::to_string(case_idx));
    fs::path parallel = root / ("p" + std::to_string(case_idx));
    fs::path rerun = root / ("m" + std::to_string(case_idx));

    auto with_out = [&](const fs::path& out) {
      auto args = cs.args;
      args.push_back("--out");
      args.push_back(out.string());
      return args;
    };

    std::string err;
    setenv("RISKSTAB_THREADS", "1", 1);
    c.require(run_cli_quiet(with_out(serial), &err) == 0, cs.name + " failed serially: " + err);
    setenv("RISKSTAB_THREADS", "8", 1);
    c.require(run_cli_quiet(with_out(parallel), &err) == 0, cs.name + " failed at 8 workers: " + err);
    c.require(run_cli_quiet({cs.args[0], "--config", (serial / "manifest.json").string(),
                             "--out", rerun.string()}, &err) == 0,
              cs.name + " manifest rerun failed: " + err);

    for (const auto& f : cs.products) {
      std::string s = slurp(serial / f);
      c.require(!s.empty(), cs.name + ": " + f + " missing");
      c.require(s == slurp(parallel / f),
                cs.name + ": " + f + " differs between 1 and 8 workers");
      c.require(s == slurp(rerun / f),
                cs.name + ": " + f + " differs after manifest rerun");
    }
    ++case_idx;
  }

  // verify, fed by the certificate the first case produced
  Json vj = base;
  vj["verify"]["certificate_file"] = (root / "s0" / "certificate.json").string();
  fs::path vcfg = root / "verify.json";
  write_text(vcfg, vj.dump(2) + "\n");
  fs::path vs = root / "vs", vp = root / "vp", vm = root / "vm";
  std::string err;
  setenv("RISKSTAB_THREADS", "1", 1);
  c.require(run_cli_quiet({"verify", "--config", vcfg.string(), "--out", vs.string(),
                           "--paths", "5000", "--horizon", "15"}, &err) == 0,
            "verify failed serially: " + err);
  setenv("RISKSTAB_THREADS", "8", 1);
  c.require(run_cli_quiet({"verify", "--config", vcfg.string(), "--out", vp.string(),
                           "--paths", "5000", "--horizon", "15"}, &err) == 0,
            "verify failed at 8 workers: " + err);
  c.require(run_cli_quiet({"verify", "--config", (vs / "manifest.json").string(),
                           "--out", vm.string()}, &err) == 0,
            "verify manifest rerun failed: " + err);
  std::string v = slurp(vs / "verification.csv");
  c.require(!v.empty() && v == slurp(vp / "verification.csv") &&
                v == slurp(vm / "verification.csv"),
            "verification.csv not byte-stable");
}

struct Gate {
  const char* name;
  std::function<void(Ctx&)> fn;
};

}  // namespace

int main() {
  std::vector<Gate> gates = {
      {"lyapunov solver correctness and stability equivalence", gate_lyapunov},
      {"risk functional coherence axioms", gate_coherence},
      {"tail-average dual representation", gate_duality},
      {"uniform risk envelope verified by simulation", gate_envelope},
      {"envelope transform with tail coverage", gate_transform},
      {"conditional-variance envelope dominates the exact risk", gate_cond_variance},
      {"offset tradeoff curves match the closed form", gate_tradeoff_curves},
      {"reweighted energies stay under the dual bound", gate_reweighted_energies},
      {"risk-aware gains shrink the certified bias", gate_gain_ratios},
      {"supporting inequality property suites", gate_supporting_inequalities},
      {"byte-identical reruns across manifests and thread counts", gate_determinism},
  };

  int failures = 0;
  for (std::size_t i = 0; i < gates.size(); ++i) {
    Ctx ctx;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      gates[i].fn(ctx);
    } catch (const std::exception& e) {
      ctx.ok = false;
      ctx.detail = std::string("unhandled exception: ") + e.what();
    }
    double sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ostringstream line;
    line << (ctx.ok ? "[PASS] " : "[FAIL] ") << (i + 1) << ". " << gates[i].name
         << " (" << fmt(sec) << " s)";
    if (!ctx.ok) line << ": " << ctx.detail;
    std::cout << line.str() << "\n";
    if (!ctx.ok) ++failures;
  }
  if (failures == 0) {
    std::cout << "all " << gates.size() << " acceptance gates passed\n";
  } else {
    std::cout << failures << " acceptance gate(s) failed\n";
  }
  return failures;
}

#include "riskstab/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <initializer_list>
#include <optional>
#include <string>
#include <variant>

#include "riskstab/cert_io.hpp"
#include "riskstab/certificates.hpp"
#include "riskstab/controller.hpp"
#include "riskstab/io.hpp"
#include "riskstab/rng.hpp"
#include "riskstab/simulate.hpp"

namespace riskstab::cli {
namespace {

namespace fs = std::filesystem;
using cert::Json;
using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string hash_hex(std::uint64_t h) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(h));
  return buf;
}

sim::LinearSystem build_system(const RunConfig& cfg, const char* cmd) {
  if (!cfg.a) {
    throw ConfigInvalid(std::string(cmd) + ": config needs a \"system\" section");
  }
  if (!cfg.noise) {
    throw ConfigInvalid(std::string(cmd) + ": config needs a \"noise\" section");
  }
  const Eigen::VectorXd x0 =
      cfg.x0 ? *cfg.x0 : Eigen::VectorXd::Zero(cfg.a->dim()).eval();
  return {*cfg.a, *cfg.noise, x0};
}

mat::SymMatrix resolve_r(const RunConfig& cfg, Eigen::Index dim) {
  if (!cfg.r) return mat::SymMatrix::identity(dim);
  if (cfg.r->dim() != dim) {
    throw ConfigInvalid("config.r: dimension disagrees with the system");
  }
  return *cfg.r;
}

void write_manifest(const char* command, const RunConfig& cfg, Json seeds,
                    Json derived, const std::vector<std::string>& files,
                    double wall_ms) {
  Json m;
  m["command"] = command;
  m["config"] = config_json(cfg);
  m["config_hash"] = hash_hex(config_hash(cfg));
  m["tool_version"] = kToolVersion;
  m["rng_scheme"] = kRngSchemeId;
  m["seeds"] = std::move(seeds);
  m["derived"] = std::move(derived);
  m["wall_clock_ms"] = wall_ms;
  Json f = Json::array();
  for (const auto& name : files) f.push_back(name);
  m["files"] = std::move(f);
  io::atomic_write_text(cfg.out_dir / "manifest.json", m.dump(2) + "\n");
}

// Nearest-rank value at cumulative probability p of an ascending sample.
double q_at(const std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto idx = static_cast<std::size_t>(std::llround(pos));
  return sorted[std::min(idx, sorted.size() - 1)];
}

bool same_risk(const risk::RiskSpec& a, const risk::RiskSpec& b) {
  return a.kind == b.kind && a.alpha == b.alpha && a.q == b.q && a.beta == b.beta &&
         a.nu == b.nu;
}

std::vector<double> kappa_grid(double step) {
  std::vector<double> grid;
  for (std::int64_t i = 1;; ++i) {
    const double kappa = static_cast<double>(i) * step;
    if (kappa >= 1.0) break;
    grid.push_back(kappa);
  }
  return grid;
}

void append_csv_row(std::string& buf, std::initializer_list<double> values) {
  bool first = true;
  for (double v : values) {
    if (!first) buf += ',';
    buf += io::format_double(v);
    first = false;
  }
  buf += '\n';
}

// The Gaussian-mixture benchmark plant: lightly damped second coordinate,
// 70% standard shocks, 30% large displaced shocks.
ctl::PlantModel benchmark_plant() {
  Eigen::MatrixXd a(2, 2);
  a << 0.8, 0.4, 0.0, -0.8;
  Eigen::MatrixXd b(2, 1);
  b << 0.0, 1.0;
  Eigen::VectorXd m1 = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd m2(2);
  m2 << 2.0, 15.0;
  const sim::NoiseModel noise = sim::NoiseModel::gaussian_mixture(
      {0.7, 0.3}, {m1, m2},
      {mat::SymMatrix::identity(2),
       mat::SymMatrix(10.0 * Eigen::MatrixXd::Identity(2, 2))});
  return {mat::SquareMatrix(a), b, mat::SymMatrix::identity(2), noise};
}

int reproduce_illus1(RunConfig& cfg, std::ostream& out);
int reproduce_illus2(RunConfig& cfg, std::ostream& out);
int reproduce_illus3(RunConfig& cfg, std::ostream& out);
int reproduce_fig4(RunConfig& cfg, std::ostream& out);

}  // namespace

int cmd_certify(RunConfig cfg, std::ostream& out) {
  const auto t0 = Clock::now();
  const sim::LinearSystem sys = build_system(cfg, "certify");
  const mat::SymMatrix r = resolve_r(cfg, sys.dim());
  Json derived;

  if (cfg.risk.kind == risk::RiskKind::MeanCondVar) {
    cert::McvOptions opt;
    opt.q = cfg.q;
    opt.sigma_u = cfg.sigma_u;
    opt.horizon = cfg.horizon;
    const cert::McvCertificate c = cert::mcv_certificate(sys, r, cfg.risk.nu, opt);
    cert::save_certificate(cfg.out_dir / "certificate.json", c);
    out << "certificate: mean_cond_variance (nu = " << c.nu << ")\n"
        << "  lambda_nu = " << c.lambda_nu << "\n"
        << "  a_nu      = " << c.a_nu << "\n"
        << "  b_nu      = " << c.b_nu << "\n"
        << "  c_nu      = " << c.c_nu << "\n"
        << "  horizon   = " << c.horizon << "\n";
    derived["lambda_nu"] = c.lambda_nu;
    derived["lambda_0"] = c.lambda_0;
    derived["a_nu"] = c.a_nu;
    derived["b_nu"] = c.b_nu;
    derived["c_nu"] = c.c_nu;
  } else {
    cert::CertifyOptions opt;
    opt.q = cfg.q;
    opt.kappa = cfg.kappa;
    opt.noise_samples = cfg.noise_samples;
    opt.bootstrap_resamples = cfg.bootstrap_resamples;
    opt.bootstrap_level = cfg.bootstrap_level;
    opt.seed = cfg.seed;
    opt.sup_horizon = cfg.sup_horizon;
    const cert::StabilityCertificate c = cert::coherent_certificate(sys, r, cfg.risk, opt);
    cert::save_certificate(cfg.out_dir / "certificate.json", c);
    out << "certificate: " << risk::kind_name(c.risk.kind) << "\n"
        << "  branch  = "
        << (c.branch == cert::EnvelopeBranch::Flat ? "flat" : "geometric") << "\n"
        << "  eta     = " << c.eta << "\n"
        << "  kappa   = " << c.kappa << "\n"
        << "  lambda  = " << c.lambda << "\n"
        << "  a       = " << c.a << "\n"
        << "  b       = " << c.b << "\n"
        << "  b_prime = " << c.b_prime << " (point " << c.b_prime_point << ", upper "
        << cfg.bootstrap_level << " bootstrap)\n";
    derived["eta"] = c.eta;
    derived["kappa"] = c.kappa;
    derived["lambda"] = c.lambda;
    derived["a"] = c.a;
    derived["b"] = c.b;
    derived["c"] = c.c;
    derived["b_prime"] = c.b_prime;
    derived["b_prime_point"] = c.b_prime_point;
  }

  Json seeds;
  seeds["root"] = cfg.seed;
  write_manifest("certify", cfg, std::move(seeds), std::move(derived),
                 {"certificate.json"}, elapsed_ms(t0));
  return 0;
}

int cmd_verify(RunConfig cfg, std::ostream& out) {
  const auto t0 = Clock::now();
  if (!cfg.certificate_file) {
    throw ConfigInvalid("verify: config needs verify.certificate_file");
  }
  const sim::LinearSystem sys = build_system(cfg, "verify");
  const mat::SymMatrix r = resolve_r(cfg, sys.dim());
  const cert::AnyCertificate any = cert::load_certificate(*cfg.certificate_file);

  cert::VerificationReport rep;
  if (const auto* sc = std::get_if<cert::StabilityCertificate>(&any)) {
    if (!same_risk(sc->risk, cfg.risk)) {
      throw ConfigInvalid("verify: certificate risk disagrees with config.risk");
    }
    if (sc->h_r.dim() != sys.dim()) {
      throw ConfigInvalid("verify: certificate dimension disagrees with the system");
    }
    cert::VerifyOptions vo;
    vo.bootstrap_resamples = cfg.bootstrap_resamples;
    vo.confidence = cfg.confidence;
    rep = cert::verify_envelope(*sc, sys, r, cfg.horizon, cfg.n_paths, cfg.seed, vo);
  } else {
    const auto& mc = std::get<cert::McvCertificate>(any);
    if (cfg.risk.kind != risk::RiskKind::MeanCondVar || cfg.risk.nu != mc.nu) {
      throw ConfigInvalid("verify: certificate risk disagrees with config.risk");
    }
    if (mc.r.dim() != sys.dim()) {
      throw ConfigInvalid("verify: certificate dimension disagrees with the system");
    }
    rep = cert::verify_envelope(mc, sys, r, cfg.horizon);
  }

  rep.write_csv(cfg.out_dir / "verification.csv");
  out << "verification: " << rep.violations.size() << " flagged / " << cfg.horizon
      << " times\n";
  Json seeds;
  seeds["root"] = cfg.seed;
  Json derived;
  derived["violations"] = rep.violations.size();
  write_manifest("verify", cfg, std::move(seeds), std::move(derived),
                 {"verification.csv"}, elapsed_ms(t0));
  return rep.passed() ? 0 : 4;
}

int cmd_simulate(RunConfig cfg, std::ostream& out) {
  const auto t0 = Clock::now();
  const sim::LinearSystem sys = build_system(cfg, "simulate");
  const sim::TrajectoryEnsemble ens =
      sim::simulate(sys, cfg.horizon, cfg.n_paths, cfg.seed);
  sim::write_ensemble_csv(ens, cfg.out_dir / "trajectories.csv");
  out << "simulated " << cfg.n_paths << " paths over " << cfg.horizon << " steps\n";
  Json seeds;
  seeds["root"] = cfg.seed;
  write_manifest("simulate", cfg, std::move(seeds), Json::object(),
                 {"trajectories.csv"}, elapsed_ms(t0));
  return 0;
}

int cmd_controller(RunConfig cfg, std::ostream& out) {
  const auto t0 = Clock::now();
  if (!cfg.a || !cfg.b) {
    throw ConfigInvalid("controller: config needs system.a and system.b");
  }
  if (!cfg.noise) throw ConfigInvalid("controller: config needs a \"noise\" section");
  if (cfg.nu_grid.empty()) {
    throw ConfigInvalid("controller: config needs controller.nu_grid");
  }
  const mat::SymMatrix r = resolve_r(cfg, cfg.a->dim());
  const ctl::PlantModel plant(*cfg.a, *cfg.b, r, *cfg.noise);
  cert::McvOptions opt;
  opt.q = cfg.q;
  opt.horizon = cfg.horizon;
  const std::vector<ctl::CompareRow> rows =
      ctl::compare_controllers(plant, cfg.mu, cfg.nu_grid, opt);

  std::string buf = "nu,rate_ratio,bias_ratio,feasible\n";
  for (const auto& row : rows) {
    buf += io::format_double(row.nu);
    buf += ',';
    buf += io::format_double(row.rate_ratio);
    buf += ',';
    buf += io::format_double(row.bias_ratio);
    buf += ',';
    buf += row.feasible ? '1' : '0';
    buf += '\n';
  }
  io::atomic_write_text(cfg.out_dir / "ratios.csv", buf);
  out << "compared controllers at " << rows.size() << " grid points\n";
  Json seeds;
  seeds["root"] = cfg.seed;
  write_manifest("controller", cfg, std::move(seeds), Json::object(), {"ratios.csv"},
                 elapsed_ms(t0));
  return 0;
}

int cmd_sweep_kappa(RunConfig cfg, std::ostream& out) {
  const auto t0 = Clock::now();
  if (cfg.sweep_etas.empty()) {
    throw ConfigInvalid("sweep-kappa: config needs sweep.etas");
  }
  const std::vector<double> grid = kappa_grid(cfg.sweep_step);

  std::string curves = "eta,kappa,c_lam_min\n";
  std::string minima = "eta,kappa_star,c_lam_min_star\n";
  for (double eta : cfg.sweep_etas) {
    const std::vector<cert::KappaPoint> pts = cert::kappa_tradeoff(eta, grid);
    const cert::KappaPoint* best = &pts.front();
    for (const auto& p : pts) {
      append_csv_row(curves, {eta, p.kappa, p.c_lam_min});
      if (p.c_lam_min < best->c_lam_min) best = &p;
    }
    append_csv_row(minima, {eta, best->kappa, best->c_lam_min});
  }
  io::atomic_write_text(cfg.out_dir / "kappa_curve.csv", curves);
  io::atomic_write_text(cfg.out_dir / "kappa_minima.csv", minima);
  out << "swept " << cfg.sweep_etas.size() << " curve(s) over " << grid.size()
      << " kappa points\n";
  Json seeds;
  seeds["root"] = cfg.seed;
  write_manifest("sweep-kappa", cfg, std::move(seeds), Json::object(),
                 {"kappa_curve.csv", "kappa_minima.csv"}, elapsed_ms(t0));
  return 0;
}

namespace {

int reproduce_illus1(RunConfig& cfg, std::ostream& out) {
  const auto t0 = Clock::now();
  if (!cfg.n_paths_explicit) {
    cfg.n_paths = 1000000;
    cfg.n_paths_explicit = true;
  }
  const std::size_t n = cfg.n_paths;
  Eigen::VectorXd lo(1), hi(1);
  lo << -1.0;
  hi << 1.0;
  const sim::NoiseModel model = sim::NoiseModel::uniform(lo, hi);

  const Eigen::MatrixXd batch = sim::sample_noise_batch(model, 0, n, cfg.seed);
  std::vector<double> w(n), energy(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = batch(static_cast<Eigen::Index>(i), 0);
    energy[i] = w[i] * w[i];
  }
  const risk::EmpiricalSample nominal(energy);
  const sim::AltReality r1 = sim::alt_reality_energy(nominal, 1, {}, model, cfg.seed);
  const sim::AltReality r2 = sim::alt_reality_energy(nominal, 2, w, model, cfg.seed);

  const double mean = nominal.mean();
  const double mus2 = risk::evaluate(risk::RiskSpec::mus(2.0, 1.0), nominal);
  const double mus12 = risk::evaluate(risk::RiskSpec::mus(12.0, 1.0), nominal);
  const auto mean_se = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    return std::pair<double, double>{m, sd / std::sqrt(static_cast<double>(v.size()))};
  };
  const auto [m1, se1] = mean_se(r1.energies.values());
  const auto [m2, se2] = mean_se(r2.energies.values());

  const std::size_t traj_len = std::min<std::size_t>(n, 300);
  std::string traj = "t,nominal,reality1,reality2\n";
  for (std::size_t t = 0; t < traj_len; ++t) {
    traj += std::to_string(t);
    traj += ',';
    traj += io::format_double(energy[t]);
    traj += ',';
    traj += io::format_double(r1.energies.values()[t]);
    traj += ',';
    traj += io::format_double(r2.energies.values()[t]);
    traj += '\n';
  }
  io::atomic_write_text(cfg.out_dir / "illus1_trajectories.csv", traj);

  const auto write_ecdf = [&](const char* name, std::vector<double> values) {
    std::sort(values.begin(), values.end());
    std::string buf = "value,cdf\n";
    for (int k = 0; k <= 2000; ++k) {
      const double p = static_cast<double>(k) / 2000.0;
      append_csv_row(buf, {q_at(values, p), p});
    }
    io::atomic_write_text(cfg.out_dir / name, buf);
  };
  write_ecdf("illus1_ecdf_nominal.csv", energy);
  write_ecdf("illus1_ecdf_reality1.csv", r1.energies.values());
  write_ecdf("illus1_ecdf_reality2.csv", r2.energies.values());

  std::string est = "name,value\n";
  const auto row = [&est](const char* name, double v) {
    est += name;
    est += ',';
    est += io::format_double(v);
    est += '\n';
  };
  row("mean", mean);
  row("mus_q2", mus2);
  row("mus_q12", mus12);
  row("reality1_mean", m1);
  row("reality1_se", se1);
  row("reality2_mean", m2);
  row("reality2_se", se2);
  row("eta1_mean", r1.eta_mean);
  row("eta2_mean", r2.eta_mean);
  io::atomic_write_text(cfg.out_dir / "illus1_estimates.csv", est);

  out << "noise-energy estimates: mean = " << mean << ", q2 = " << mus2
      << ", q12 = " << mus12 << "\n";
  Json seeds;
  seeds["root"] = cfg.seed;
  seeds["eta2_pass_seed"] = sim::kEta2PassSeed;
  Json derived;
  derived["mean"] = mean;
  derived["mus_q2"] = mus2;
  derived["mus_q12"] = mus12;
  derived["eta2_pass_draws"] = sim::kEta2PassDraws;
  derived["eta2_mean"] = r2.eta_mean;
  write_manifest("reproduce", cfg, std::move(seeds), std::move(derived),
                 {"illus1_trajectories.csv", "illus1_ecdf_nominal.csv",
                  "illus1_ecdf_reality1.csv", "illus1_ecdf_reality2.csv",
                  "illus1_estimates.csv"},
                 elapsed_ms(t0));
  return 0;
}

int reproduce_illus2(RunConfig& cfg, std::ostream& out) {
  const auto t0 = Clock::now();
  if (cfg.sweep_etas.empty()) cfg.sweep_etas = {0.1, 0.3, 0.5, 0.7, 0.9};

  const std::vector<double> grid = kappa_grid(cfg.sweep_step);
  std::string curves = "eta,kappa,c_lam_min\n";
  std::string minima = "eta,kappa_star,c_lam_min_star\n";
  for (double eta : cfg.sweep_etas) {
    const std::vector<cert::KappaPoint> pts = cert::kappa_tradeoff(eta, grid);
    const cert::KappaPoint* best = &pts.front();
    for (const auto& p : pts) {
      append_csv_row(curves, {eta, p.kappa, p.c_lam_min});
      if (p.c_lam_min < best->c_lam_min) best = &p;
    }
    append_csv_row(minima, {eta, best->kappa, best->c_lam_min});
  }
  io::atomic_write_text(cfg.out_dir / "illus2_curves.csv", curves);
  io::atomic_write_text(cfg.out_dir / "illus2_minima.csv", minima);
  out << "emitted trade-off curves for " << cfg.sweep_etas.size() << " eta values\n";
  Json seeds;
  seeds["root"] = cfg.seed;
  write_manifest("reproduce", cfg, std::move(seeds), Json::object(),
                 {"illus2_curves.csv", "illus2_minima.csv"}, elapsed_ms(t0));
  return 0;
}

int reproduce_illus3(RunConfig& cfg, std::ostream& out) {
  const auto t0 = Clock::now();
  const ctl::PlantModel plant = benchmark_plant();
  const double mu = 0.25;
  const ctl::MyopicController neutral = ctl::synthesize(plant, 0.0, mu);
  const ctl::MyopicController aware = ctl::synthesize(plant, 10.0, mu);

  // One shared noise realization drives all three regimes so their
  // trajectories are directly comparable.
  constexpr std::size_t kTrajLen = 300;
  constexpr std::size_t kBurn = 100;
  constexpr std::size_t kTotal = 10100;  // kBurn + 10000 ergodic samples
  Eigen::VectorXd x_none = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd x_neutral = x_none, x_aware = x_none;
  std::vector<double> e_none, e_neutral, e_aware, f_neutral, f_aware;
  e_none.reserve(kTotal);
  e_neutral.reserve(kTotal);
  e_aware.reserve(kTotal);
  f_neutral.reserve(kTotal);
  f_aware.reserve(kTotal);

  std::string traj = "t,energy_none,energy_neutral,energy_aware,effort_neutral,effort_aware\n";
  for (std::size_t t = 0; t < kTotal; ++t) {
    const Eigen::VectorXd u_n = neutral.control(x_neutral);
    const Eigen::VectorXd u_a = aware.control(x_aware);
    e_none.push_back(x_none.squaredNorm());
    e_neutral.push_back(x_neutral.squaredNorm());
    e_aware.push_back(x_aware.squaredNorm());
    f_neutral.push_back(u_n.squaredNorm());
    f_aware.push_back(u_a.squaredNorm());
    if (t < kTrajLen) {
      traj += std::to_string(t);
      traj += ',';
      traj += io::format_double(e_none.back());
      traj += ',';
      traj += io::format_double(e_neutral.back());
      traj += ',';
      traj += io::format_double(e_aware.back());
      traj += ',';
      traj += io::format_double(f_neutral.back());
      traj += ',';
      traj += io::format_double(f_aware.back());
      traj += '\n';
    }
    RngStream rng(cfg.seed, 0, static_cast<std::uint64_t>(t));
    const Eigen::VectorXd wc = plant.noise.sample(static_cast<std::int64_t>(t), rng);
    x_none = plant.a.mat() * x_none + wc;
    x_neutral = plant.a.mat() * x_neutral + plant.b * u_n + wc;
    x_aware = plant.a.mat() * x_aware + plant.b * u_a + wc;
  }
  io::atomic_write_text(cfg.out_dir / "illus3_trajectories.csv", traj);

  const auto tail = [&](std::vector<double> v) {
    v.erase(v.begin(), v.begin() + kBurn);
    std::sort(v.begin(), v.end());
    return v;
  };
  const std::vector<double> qe_none = tail(e_none);
  const std::vector<double> qe_neutral = tail(e_neutral);
  const std::vector<double> qe_aware = tail(e_aware);
  const std::vector<double> qf_neutral = tail(f_neutral);
  const std::vector<double> qf_aware = tail(f_aware);

  std::string energy_csv = "q,none,neutral,aware\n";
  std::string effort_csv = "q,neutral,aware\n";
  for (int k = 0; k <= 2000; ++k) {
    const double p = static_cast<double>(k) / 2000.0;
    append_csv_row(energy_csv, {p, q_at(qe_none, p), q_at(qe_neutral, p), q_at(qe_aware, p)});
    append_csv_row(effort_csv, {p, q_at(qf_neutral, p), q_at(qf_aware, p)});
  }
  io::atomic_write_text(cfg.out_dir / "illus3_ecdf_energy.csv", energy_csv);
  io::atomic_write_text(cfg.out_dir / "illus3_ecdf_effort.csv", effort_csv);

  out << "state-energy 0.99 quantiles: none = " << q_at(qe_none, 0.99)
      << ", neutral = " << q_at(qe_neutral, 0.99)
      << ", aware = " << q_at(qe_aware, 0.99) << "\n";
  Json seeds;
  seeds["root"] = cfg.seed;
  Json derived;
  derived["k_neutral"] = jsonu::matrix_json(neutral.k);
  derived["k_aware"] = jsonu::matrix_json(aware.k);
  derived["t_aware"] = jsonu::matrix_json(aware.t);
  derived["energy_q99_none"] = q_at(qe_none, 0.99);
  derived["energy_q99_neutral"] = q_at(qe_neutral, 0.99);
  derived["energy_q99_aware"] = q_at(qe_aware, 0.99);
  write_manifest("reproduce", cfg, std::move(seeds), std::move(derived),
                 {"illus3_trajectories.csv", "illus3_ecdf_energy.csv",
                  "illus3_ecdf_effort.csv"},
                 elapsed_ms(t0));
  return 0;
}

int reproduce_fig4(RunConfig& cfg, std::ostream& out) {
  const auto t0 = Clock::now();
  const ctl::PlantModel plant = benchmark_plant();
  if (cfg.nu_grid.empty()) cfg.nu_grid = {0.0, 0.5, 1.0, 2.0, 5.0, 10.0};
  const double mu = 0.25;
  cert::McvOptions opt;
  opt.horizon = cfg.horizon;
  const std::vector<ctl::CompareRow> rows =
      ctl::compare_controllers(plant, mu, cfg.nu_grid, opt);

  std::string buf = "nu,rate_ratio,bias_ratio,feasible\n";
  for (const auto& row : rows) {
    buf += io::format_double(row.nu);
    buf += ',';
    buf += io::format_double(row.rate_ratio);
    buf += ',';
    buf += io::format_double(row.bias_ratio);
    buf += ',';
    buf += row.feasible ? '1' : '0';
    buf += '\n';
  }
  io::atomic_write_text(cfg.out_dir / "fig4_ratios.csv", buf);
  out << "ratio sweep over " << rows.size() << " nu values (mu = " << mu << ")\n";
  Json seeds;
  seeds["root"] = cfg.seed;
  Json derived;
  derived["mu"] = mu;
  write_manifest("reproduce", cfg, std::move(seeds), std::move(derived),
                 {"fig4_ratios.csv"}, elapsed_ms(t0));
  return 0;
}

}  // namespace

int cmd_reproduce(RunConfig cfg, std::ostream& out) {
  if (!cfg.reproduce) {
    throw ConfigInvalid("reproduce: needs a target (illus1 | illus2 | illus3 | fig4), "
                        "as a positional argument or config.reproduce");
  }
  const std::string& which = *cfg.reproduce;
  if (which == "illus1") return reproduce_illus1(cfg, out);
  if (which == "illus2") return reproduce_illus2(cfg, out);
  if (which == "illus3") return reproduce_illus3(cfg, out);
  if (which == "fig4") return reproduce_fig4(cfg, out);
  throw ConfigInvalid("reproduce: unknown target \"" + which +
                      "\" (expected illus1 | illus2 | illus3 | fig4)");
}

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  static const char* kUsage =
      "usage: riskstab {certify|verify|simulate|controller|sweep-kappa|reproduce}"
      " --config <file> [--out <dir>] [--seed <u64>] [--paths N] [--horizon T]\n";
  try {
    if (args.empty()) {
      err << kUsage;
      return 2;
    }
    const std::string cmd = args[0];
    CliOverrides o;
    std::optional<fs::path> config_path;
    std::optional<std::string> positional;

    for (std::size_t i = 1; i < args.size(); ++i) {
      const std::string& a = args[i];
      const auto value = [&]() -> const std::string& {
        if (i + 1 >= args.size()) {
          throw ConfigInvalid(a + ": missing value");
        }
        return args[++i];
      };
      try {
        if (a == "--config") {
          config_path = fs::path(value());
        } else if (a == "--out") {
          o.out = fs::path(value());
        } else if (a == "--seed") {
          o.seed = std::stoull(value());
        } else if (a == "--paths") {
          const long long n = std::stoll(value());
          if (n < 1) throw ConfigInvalid("--paths: must be >= 1");
          o.paths = static_cast<std::size_t>(n);
        } else if (a == "--horizon") {
          o.horizon = std::stoll(value());
        } else if (cmd == "reproduce" && !a.starts_with("-") && !positional) {
          positional = a;
        } else {
          throw ConfigInvalid("unknown argument: " + a);
        }
      } catch (const std::invalid_argument&) {
        throw ConfigInvalid(a + ": malformed number");
      } catch (const std::out_of_range&) {
        throw ConfigInvalid(a + ": number out of range");
      }
    }

    RunConfig cfg;
    if (config_path) {
      cfg = load_config(*config_path);
    } else if (!(cmd == "reproduce" && positional)) {
      throw ConfigInvalid("--config is required");
    }
    if (positional) cfg.reproduce = positional;
    apply_overrides(cfg, o);

    if (cmd == "certify") return cmd_certify(std::move(cfg), out);
    if (cmd == "verify") return cmd_verify(std::move(cfg), out);
    if (cmd == "simulate") return cmd_simulate(std::move(cfg), out);
    if (cmd == "controller") return cmd_controller(std::move(cfg), out);
    if (cmd == "sweep-kappa") return cmd_sweep_kappa(std::move(cfg), out);
    if (cmd == "reproduce") return cmd_reproduce(std::move(cfg), out);
    err << kUsage;
    return 2;
  } catch (const ConfigInvalid& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NotSchurStable& e) {
    err << "assumption violated: " << e.what() << "\n";
    return 3;
  } catch (const AssumptionViolated& e) {
    err << "assumption violated: " << e.what() << "\n";
    return 3;
  } catch (const NonCoherentRisk& e) {
    err << "assumption violated: " << e.what() << "\n";
    return 3;
  } catch (const SigmaDominanceViolated& e) {
    err << "assumption violated: " << e.what() << "\n";
    return 3;
  } catch (const NonStationaryNoise& e) {
    err << "assumption violated: " << e.what() << "\n";
    return 3;
  } catch (const NotPsd& e) {
    err << "assumption violated: " << e.what() << "\n";
    return 3;
  } catch (const BadEta& e) {
    err << "assumption violated: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace riskstab::cli

#include "riskstab/config.hpp"

#include <string>

#include "riskstab/cert_io.hpp"
#include "riskstab/io.hpp"

namespace riskstab::cli {
namespace {

using jsonu::check_keys;
using jsonu::matrix_from;
using jsonu::matrix_json;
using jsonu::number_from;
using jsonu::vector_from;
using jsonu::vector_json;

std::int64_t int_from(const Json& j, const char* where) {
  if (!j.is_number_integer()) {
    throw ConfigInvalid(std::string(where) + ": expected an integer");
  }
  return j.get<std::int64_t>();
}

std::size_t size_from(const Json& j, const char* where) {
  const std::int64_t v = int_from(j, where);
  if (v < 1) throw ConfigInvalid(std::string(where) + ": must be >= 1");
  return static_cast<std::size_t>(v);
}

std::uint64_t seed_from(const Json& j, const char* where) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
    throw ConfigInvalid(std::string(where) + ": expected a nonnegative integer");
  }
  return j.get<std::uint64_t>();
}

std::vector<double> double_list(const Json& j, const char* where) {
  if (!j.is_array() || j.empty()) {
    throw ConfigInvalid(std::string(where) + ": expected a nonempty array of numbers");
  }
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& e : j) out.push_back(number_from(e, where));
  return out;
}

}  // namespace

Json noise_json(const sim::NoiseModel& model) {
  Json j;
  switch (model.kind()) {
    case sim::NoiseKind::Gaussian:
      j["kind"] = "gaussian";
      j["mean"] = vector_json(model.gaussian_mean());
      j["cov"] = matrix_json(model.gaussian_cov());
      break;
    case sim::NoiseKind::Uniform:
      j["kind"] = "uniform";
      j["lo"] = vector_json(model.uniform_lo());
      j["hi"] = vector_json(model.uniform_hi());
      break;
    case sim::NoiseKind::GaussianMixture: {
      j["kind"] = "gaussian_mixture";
      Json w = Json::array();
      for (double x : model.mixture_weights()) w.push_back(x);
      Json means = Json::array();
      for (const auto& m : model.mixture_means()) means.push_back(vector_json(m));
      Json covs = Json::array();
      for (const auto& c : model.mixture_covs()) covs.push_back(matrix_json(c));
      j["weights"] = std::move(w);
      j["means"] = std::move(means);
      j["covs"] = std::move(covs);
      break;
    }
    case sim::NoiseKind::Deterministic:
      j["kind"] = "deterministic";
      j["value"] = vector_json(model.deterministic_value());
      break;
    case sim::NoiseKind::Schedule: {
      j["kind"] = "schedule";
      Json steps = Json::array();
      for (const auto& m : model.schedule_models()) steps.push_back(noise_json(m));
      j["steps"] = std::move(steps);
      break;
    }
  }
  return j;
}

sim::NoiseModel noise_from_json(const Json& j) {
  check_keys(j, {"kind"},
             {"mean", "cov", "lo", "hi", "weights", "means", "covs", "value", "steps"},
             "noise");
  if (!j.at("kind").is_string()) throw ConfigInvalid("noise.kind: expected a string");
  const std::string kind = j.at("kind").get<std::string>();
  try {
    if (kind == "gaussian") {
      check_keys(j, {"kind", "mean", "cov"}, {}, "noise(gaussian)");
      return sim::NoiseModel::gaussian(
          vector_from(j.at("mean"), "noise.mean"),
          mat::SymMatrix::from_nearly(matrix_from(j.at("cov"), "noise.cov")));
    }
    if (kind == "uniform") {
      check_keys(j, {"kind", "lo", "hi"}, {}, "noise(uniform)");
      return sim::NoiseModel::uniform(vector_from(j.at("lo"), "noise.lo"),
                                      vector_from(j.at("hi"), "noise.hi"));
    }
    if (kind == "gaussian_mixture") {
      check_keys(j, {"kind", "weights", "means", "covs"}, {}, "noise(gaussian_mixture)");
      std::vector<double> weights = double_list(j.at("weights"), "noise.weights");
      if (!j.at("means").is_array() || !j.at("covs").is_array()) {
        throw ConfigInvalid("noise.means / noise.covs: expected arrays");
      }
      std::vector<Eigen::VectorXd> means;
      for (const auto& m : j.at("means")) means.push_back(vector_from(m, "noise.means"));
      std::vector<mat::SymMatrix> covs;
      for (const auto& c : j.at("covs")) {
        covs.push_back(mat::SymMatrix::from_nearly(matrix_from(c, "noise.covs")));
      }
      return sim::NoiseModel::gaussian_mixture(std::move(weights), std::move(means),
                                               std::move(covs));
    }
    if (kind == "deterministic") {
      check_keys(j, {"kind", "value"}, {}, "noise(deterministic)");
      return sim::NoiseModel::deterministic(vector_from(j.at("value"), "noise.value"));
    }
    if (kind == "schedule") {
      check_keys(j, {"kind", "steps"}, {}, "noise(schedule)");
      if (!j.at("steps").is_array() || j.at("steps").empty()) {
        throw ConfigInvalid("noise.steps: expected a nonempty array");
      }
      std::vector<sim::NoiseModel> steps;
      for (const auto& s : j.at("steps")) steps.push_back(noise_from_json(s));
      return sim::NoiseModel::schedule(std::move(steps));
    }
  } catch (const ConfigInvalid&) {
    throw;
  } catch (const Error& e) {
    // Model factories validate semantics (PSD, weights, bounds); surface
    // their diagnostics as configuration errors.
    throw ConfigInvalid(std::string("noise: ") + e.what());
  }
  throw ConfigInvalid("noise.kind: unknown value \"" + kind + "\"");
}

RunConfig parse_config(const Json& doc) {
  if (!doc.is_object()) throw ConfigInvalid("config: expected a JSON object");
  const Json* jp = &doc;
  if (doc.contains("config")) {
    // Run manifest: the embedded resolved config is the document of record.
    check_keys(doc,
               {"command", "config", "config_hash", "tool_version", "rng_scheme"},
               {"seeds", "derived", "wall_clock_ms", "files"}, "manifest");
    jp = &doc.at("config");
  }
  const Json& j = *jp;
  check_keys(j, {"schema_version"},
             {"system", "noise", "r", "risk", "horizon", "n_paths", "seed", "out_dir",
              "certificate", "verify", "controller", "sweep", "reproduce"},
             "config");

  RunConfig cfg;
  if (int_from(j.at("schema_version"), "config.schema_version") != 1) {
    throw ConfigInvalid("config.schema_version: only version 1 is supported");
  }

  try {
    if (j.contains("system")) {
      const Json& s = j.at("system");
      check_keys(s, {"a"}, {"b", "x0"}, "system");
      cfg.a = mat::SquareMatrix(matrix_from(s.at("a"), "system.a"));
      if (s.contains("b")) {
        Eigen::MatrixXd b = matrix_from(s.at("b"), "system.b");
        if (b.rows() != cfg.a->dim()) {
          throw ConfigInvalid("system.b: row count disagrees with system.a");
        }
        cfg.b = std::move(b);
      }
      if (s.contains("x0")) {
        Eigen::VectorXd x0 = vector_from(s.at("x0"), "system.x0");
        if (x0.size() != cfg.a->dim()) {
          throw ConfigInvalid("system.x0: size disagrees with system.a");
        }
        cfg.x0 = std::move(x0);
      }
    }
    if (j.contains("noise")) cfg.noise = noise_from_json(j.at("noise"));
    if (j.contains("r")) {
      cfg.r = mat::SymMatrix::from_nearly(matrix_from(j.at("r"), "config.r"));
    }
  } catch (const ConfigInvalid&) {
    throw;
  } catch (const Error& e) {
    throw ConfigInvalid(std::string("config: ") + e.what());
  }

  if (j.contains("risk")) cfg.risk = cert::risk_from_json(j.at("risk"));
  if (j.contains("horizon")) {
    cfg.horizon = int_from(j.at("horizon"), "config.horizon");
    if (cfg.horizon < 1) throw ConfigInvalid("config.horizon: must be >= 1");
  }
  if (j.contains("n_paths")) {
    cfg.n_paths = size_from(j.at("n_paths"), "config.n_paths");
    cfg.n_paths_explicit = true;
  }
  if (j.contains("seed")) cfg.seed = seed_from(j.at("seed"), "config.seed");
  if (j.contains("out_dir")) {
    if (!j.at("out_dir").is_string()) {
      throw ConfigInvalid("config.out_dir: expected a string");
    }
    cfg.out_dir = j.at("out_dir").get<std::string>();
  }

  if (j.contains("certificate")) {
    const Json& c = j.at("certificate");
    check_keys(c, {},
               {"q", "kappa", "sigma_u", "noise_samples", "bootstrap_resamples",
                "bootstrap_level", "sup_horizon"},
               "certificate");
    try {
      if (c.contains("q")) {
        cfg.q = mat::SymMatrix::from_nearly(matrix_from(c.at("q"), "certificate.q"));
      }
      if (c.contains("sigma_u")) {
        cfg.sigma_u =
            mat::SymMatrix::from_nearly(matrix_from(c.at("sigma_u"), "certificate.sigma_u"));
      }
    } catch (const ConfigInvalid&) {
      throw;
    } catch (const Error& e) {
      throw ConfigInvalid(std::string("certificate: ") + e.what());
    }
    if (c.contains("kappa")) cfg.kappa = number_from(c.at("kappa"), "certificate.kappa");
    if (c.contains("noise_samples")) {
      cfg.noise_samples = size_from(c.at("noise_samples"), "certificate.noise_samples");
    }
    if (c.contains("bootstrap_resamples")) {
      cfg.bootstrap_resamples =
          size_from(c.at("bootstrap_resamples"), "certificate.bootstrap_resamples");
    }
    if (c.contains("bootstrap_level")) {
      cfg.bootstrap_level = number_from(c.at("bootstrap_level"), "certificate.bootstrap_level");
      if (!(cfg.bootstrap_level > 0.5 && cfg.bootstrap_level < 1.0)) {
        throw ConfigInvalid("certificate.bootstrap_level: must lie in (0.5, 1)");
      }
    }
    if (c.contains("sup_horizon")) {
      cfg.sup_horizon = int_from(c.at("sup_horizon"), "certificate.sup_horizon");
      if (cfg.sup_horizon < 0) {
        throw ConfigInvalid("certificate.sup_horizon: must be >= 0");
      }
    }
  }

  if (j.contains("verify")) {
    const Json& v = j.at("verify");
    check_keys(v, {"certificate_file"}, {"confidence"}, "verify");
    if (!v.at("certificate_file").is_string()) {
      throw ConfigInvalid("verify.certificate_file: expected a string");
    }
    cfg.certificate_file = std::filesystem::path(v.at("certificate_file").get<std::string>());
    if (v.contains("confidence")) {
      cfg.confidence = number_from(v.at("confidence"), "verify.confidence");
      if (!(cfg.confidence > 0.5 && cfg.confidence < 1.0)) {
        throw ConfigInvalid("verify.confidence: must lie in (0.5, 1)");
      }
    }
  }

  if (j.contains("controller")) {
    const Json& c = j.at("controller");
    check_keys(c, {"nu_grid"}, {"mu"}, "controller");
    cfg.nu_grid = double_list(c.at("nu_grid"), "controller.nu_grid");
    for (double nu : cfg.nu_grid) {
      if (nu < 0.0) throw ConfigInvalid("controller.nu_grid: entries must be >= 0");
    }
    if (c.contains("mu")) {
      cfg.mu = number_from(c.at("mu"), "controller.mu");
      if (cfg.mu < 0.0) throw ConfigInvalid("controller.mu: must be >= 0");
    }
  }

  if (j.contains("sweep")) {
    const Json& s = j.at("sweep");
    check_keys(s, {"etas"}, {"step"}, "sweep");
    cfg.sweep_etas = double_list(s.at("etas"), "sweep.etas");
    for (double eta : cfg.sweep_etas) {
      if (!(eta > 0.0 && eta < 1.0)) {
        throw ConfigInvalid("sweep.etas: entries must lie in (0,1)");
      }
    }
    if (s.contains("step")) {
      cfg.sweep_step = number_from(s.at("step"), "sweep.step");
      if (!(cfg.sweep_step > 0.0 && cfg.sweep_step < 0.5)) {
        throw ConfigInvalid("sweep.step: must lie in (0, 0.5)");
      }
    }
  }

  if (j.contains("reproduce")) {
    if (!j.at("reproduce").is_string()) {
      throw ConfigInvalid("config.reproduce: expected a string");
    }
    cfg.reproduce = j.at("reproduce").get<std::string>();
  }

  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = io::read_text(path);
  } catch (const IoFailure& e) {
    throw ConfigInvalid(std::string("config: ") + e.what());
  }
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigInvalid("config file " + path.string() + ": " + e.what());
  }
  return parse_config(j);
}

void apply_overrides(RunConfig& cfg, const CliOverrides& o) {
  if (o.out) cfg.out_dir = *o.out;
  if (o.seed) cfg.seed = *o.seed;
  if (o.paths) {
    cfg.n_paths = *o.paths;
    cfg.n_paths_explicit = true;
  }
  if (o.horizon) {
    if (*o.horizon < 1) throw ConfigInvalid("--horizon: must be >= 1");
    cfg.horizon = *o.horizon;
  }
}

Json config_json(const RunConfig& cfg) {
  Json j;
  j["schema_version"] = cfg.schema_version;
  if (cfg.a) {
    Json s;
    s["a"] = matrix_json(cfg.a->mat());
    if (cfg.b) s["b"] = matrix_json(*cfg.b);
    if (cfg.x0) s["x0"] = vector_json(*cfg.x0);
    j["system"] = std::move(s);
  }
  if (cfg.noise) j["noise"] = noise_json(*cfg.noise);
  if (cfg.r) j["r"] = matrix_json(cfg.r->mat());
  j["risk"] = cert::to_json(cfg.risk);
  j["horizon"] = cfg.horizon;
  j["n_paths"] = cfg.n_paths;  // resolved value; commands pin defaults first
  j["seed"] = cfg.seed;
  j["out_dir"] = cfg.out_dir.string();

  Json c;
  if (cfg.q) c["q"] = matrix_json(cfg.q->mat());
  if (cfg.kappa) c["kappa"] = *cfg.kappa;
  if (cfg.sigma_u) c["sigma_u"] = matrix_json(cfg.sigma_u->mat());
  c["noise_samples"] = cfg.noise_samples;
  c["bootstrap_resamples"] = cfg.bootstrap_resamples;
  c["bootstrap_level"] = cfg.bootstrap_level;
  c["sup_horizon"] = cfg.sup_horizon;
  j["certificate"] = std::move(c);

  if (cfg.certificate_file) {
    Json v;
    v["certificate_file"] = cfg.certificate_file->string();
    v["confidence"] = cfg.confidence;
    j["verify"] = std::move(v);
  }
  if (!cfg.nu_grid.empty()) {
    Json c2;
    c2["mu"] = cfg.mu;
    Json grid = Json::array();
    for (double nu : cfg.nu_grid) grid.push_back(nu);
    c2["nu_grid"] = std::move(grid);
    j["controller"] = std::move(c2);
  }
  if (!cfg.sweep_etas.empty()) {
    Json s;
    Json etas = Json::array();
    for (double eta : cfg.sweep_etas) etas.push_back(eta);
    s["etas"] = std::move(etas);
    s["step"] = cfg.sweep_step;
    j["sweep"] = std::move(s);
  }
  if (cfg.reproduce) j["reproduce"] = *cfg.reproduce;
  return j;
}

std::uint64_t config_hash(const RunConfig& cfg) {
  Json j = config_json(cfg);
  j.erase("out_dir");
  const std::string dump = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : dump) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace riskstab::cli

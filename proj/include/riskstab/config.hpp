#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "riskstab/json_util.hpp"
#include "riskstab/matrix.hpp"
#include "riskstab/noise.hpp"
#include "riskstab/risk.hpp"

namespace riskstab::cli {

using jsonu::Json;

// One JSON document drives every subcommand; sections irrelevant to the
// invoked command may be omitted. Unknown keys are rejected at every level.
struct RunConfig {
  int schema_version = 1;

  std::optional<mat::SquareMatrix> a;   // system dynamics
  std::optional<Eigen::MatrixXd> b;     // input map (controller commands)
  std::optional<Eigen::VectorXd> x0;    // default: zero state
  std::optional<sim::NoiseModel> noise;
  std::optional<mat::SymMatrix> r;      // default: identity
  risk::RiskSpec risk = risk::RiskSpec::mean();

  std::int64_t horizon = 50;
  std::size_t n_paths = 100000;
  bool n_paths_explicit = false;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = "out";

  // certificate section
  std::optional<mat::SymMatrix> q;
  std::optional<double> kappa;
  std::optional<mat::SymMatrix> sigma_u;
  std::size_t noise_samples = 100000;
  std::size_t bootstrap_resamples = 1000;
  double bootstrap_level = 0.99;
  std::int64_t sup_horizon = 0;

  // verify section
  std::optional<std::filesystem::path> certificate_file;
  double confidence = 0.99;

  // controller section
  double mu = 0.0;
  std::vector<double> nu_grid;

  // sweep section
  std::vector<double> sweep_etas;
  double sweep_step = 1e-4;

  // reproduce section
  std::optional<std::string> reproduce;
};

struct CliOverrides {
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> paths;
  std::optional<std::int64_t> horizon;
};

// Strict parse. Accepts either a bare config document or a run manifest
// (an object with a "config" key), whose embedded resolved config is used.
RunConfig parse_config(const Json& j);
RunConfig load_config(const std::filesystem::path& path);

void apply_overrides(RunConfig& cfg, const CliOverrides& o);

// Canonical JSON for the resolved config; embedding this in a manifest makes
// the manifest itself a valid --config input.
Json config_json(const RunConfig& cfg);

// FNV-1a 64 over the canonical dump, output directory excluded so moving a
// run does not change its identity.
std::uint64_t config_hash(const RunConfig& cfg);

Json noise_json(const sim::NoiseModel& model);
sim::NoiseModel noise_from_json(const Json& j);

}  // namespace riskstab::cli

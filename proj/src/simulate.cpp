#include "riskstab/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "riskstab/errors.hpp"
#include "riskstab/io.hpp"
#include "riskstab/parallel.hpp"

namespace riskstab::sim {
namespace {

// Purpose tags keep independent sampling uses on disjoint stream families.
constexpr std::uint64_t kTagAltEta = 0x616c745f65746131ULL;
constexpr std::uint64_t kTagEtaPass = 0x6574615f70617373ULL;

double clamp01(double z) { return std::min(1.0, std::max(0.0, z)); }

}  // namespace

LinearSystem::LinearSystem(mat::SquareMatrix a_in, NoiseModel noise_in, VectorXd x0_in)
    : a(std::move(a_in)), noise(std::move(noise_in)), x0(std::move(x0_in)) {
  if (noise.dim() != a.dim() || x0.size() != a.dim()) {
    throw DimMismatch("LinearSystem: A is " + std::to_string(a.dim()) + "-dimensional, noise is " +
                      std::to_string(noise.dim()) + ", x0 has size " + std::to_string(x0.size()));
  }
  if (!x0.allFinite()) throw Error("LinearSystem: x0 has non-finite entries");
}

TrajectoryEnsemble::TrajectoryEnsemble(std::size_t n_paths, std::int64_t horizon,
                                       Eigen::Index dim, std::uint64_t seed)
    : n_paths_(n_paths), horizon_(horizon), dim_(dim), seed_(seed),
      data_(n_paths * static_cast<std::size_t>(horizon + 1) * static_cast<std::size_t>(dim)) {
  if (n_paths == 0) throw Error("TrajectoryEnsemble: need at least one path");
  if (horizon < 0) throw Error("TrajectoryEnsemble: horizon must be nonnegative");
}

double* TrajectoryEnsemble::state(std::size_t path, std::int64_t t) {
  return data_.data() +
         (path * static_cast<std::size_t>(horizon_ + 1) + static_cast<std::size_t>(t)) *
             static_cast<std::size_t>(dim_);
}

const double* TrajectoryEnsemble::state(std::size_t path, std::int64_t t) const {
  return data_.data() +
         (path * static_cast<std::size_t>(horizon_ + 1) + static_cast<std::size_t>(t)) *
             static_cast<std::size_t>(dim_);
}

Eigen::Map<const VectorXd> TrajectoryEnsemble::state_vec(std::size_t path,
                                                         std::int64_t t) const {
  return Eigen::Map<const VectorXd>(state(path, t), dim_);
}

TrajectoryEnsemble simulate(const LinearSystem& sys, std::int64_t horizon,
                            std::size_t n_paths, std::uint64_t seed) {
  TrajectoryEnsemble e(n_paths, horizon, sys.dim(), seed);
  const Eigen::Index d = sys.dim();
  parallel_for(n_paths, [&](std::size_t p) {
    VectorXd x = sys.x0;
    Eigen::Map<VectorXd>(e.state(p, 0), d) = x;
    for (std::int64_t t = 0; t < horizon; ++t) {
      RngStream rng(seed, p, static_cast<std::uint64_t>(t));
      x = sys.a.mat() * x + sys.noise.sample(t, rng);
      Eigen::Map<VectorXd>(e.state(p, t + 1), d) = x;
    }
  });
  return e;
}

EnergyGrid::EnergyGrid(std::size_t n_paths, std::int64_t horizon)
    : n_paths_(n_paths), horizon_(horizon),
      v_(n_paths * static_cast<std::size_t>(horizon + 1)) {}

double& EnergyGrid::at(std::size_t path, std::int64_t t) {
  return v_[path * static_cast<std::size_t>(horizon_ + 1) + static_cast<std::size_t>(t)];
}

double EnergyGrid::at(std::size_t path, std::int64_t t) const {
  return v_[path * static_cast<std::size_t>(horizon_ + 1) + static_cast<std::size_t>(t)];
}

std::vector<double> EnergyGrid::cross_section(std::int64_t t) const {
  std::vector<double> out(n_paths_);
  for (std::size_t p = 0; p < n_paths_; ++p) out[p] = at(p, t);
  return out;
}

EnergyGrid state_energy(const TrajectoryEnsemble& e, const mat::SymMatrix& r) {
  if (r.dim() != e.dim()) {
    throw DimMismatch("state_energy: R is " + std::to_string(r.dim()) +
                      "-dimensional but states have dimension " + std::to_string(e.dim()));
  }
  EnergyGrid g(e.n_paths(), e.horizon());
  const MatrixXd& rm = r.mat();
  parallel_for(e.n_paths(), [&](std::size_t p) {
    for (std::int64_t t = 0; t <= e.horizon(); ++t) {
      const auto x = e.state_vec(p, t);
      g.at(p, t) = x.dot(rm * x);
    }
  });
  return g;
}

risk::EmpiricalSample noise_energy_sample(const NoiseModel& model,
                                          const mat::SymMatrix& m, std::int64_t t,
                                          std::size_t n, std::uint64_t seed) {
  if (m.dim() != model.dim()) {
    throw DimMismatch("noise_energy_sample: M is " + std::to_string(m.dim()) +
                      "-dimensional but the noise has dimension " +
                      std::to_string(model.dim()));
  }
  if (n == 0) throw EmptySample("noise_energy_sample: n must be positive");
  std::vector<double> e(n);
  const MatrixXd& mm = m.mat();
  parallel_for(n, [&](std::size_t i) {
    RngStream rng(seed, i, static_cast<std::uint64_t>(t));
    const VectorXd w = model.sample(t, rng);
    e[i] = w.dot(mm * w);
  });
  return risk::EmpiricalSample(std::move(e));
}

AltReality alt_reality_energy(const risk::EmpiricalSample& nominal_energy, int which,
                              const std::vector<double>& paired_w,
                              const NoiseModel& model, std::uint64_t seed) {
  const std::size_t n = nominal_energy.size();
  std::vector<double> eta(n);
  double eta_mean = 0.0;

  if (which == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      RngStream rng(mix64(seed ^ kTagAltEta), i, 0);
      eta[i] = rng.uniform01();
    }
    eta_mean = 0.5;
  } else if (which == 2) {
    if (paired_w.size() != n) {
      throw MissingPairedDraws("alt_reality_energy: reality 2 needs one paired noise draw "
                               "per energy value (" + std::to_string(paired_w.size()) +
                               " vs " + std::to_string(n) + ")");
    }
    if (model.dim() != 1) {
      throw BadNoiseSpec("alt_reality_energy: reality 2 is defined for scalar noise");
    }
    for (std::size_t i = 0; i < n; ++i) eta[i] = clamp01(0.25 - paired_w[i]);
    // Dedicated estimation pass for E(eta), pinned seed, independent of the
    // evaluation sample.
    double acc = 0.0;
    for (std::size_t i = 0; i < kEta2PassDraws; ++i) {
      RngStream rng(mix64(kEta2PassSeed ^ kTagEtaPass), i, 0);
      acc += clamp01(0.25 - model.sample(0, rng)(0));
    }
    eta_mean = acc / static_cast<double>(kEta2PassDraws);
  } else {
    throw Error("alt_reality_energy: which must be 1 or 2");
  }

  std::vector<double> xi(n);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    xi[i] = 1.0 + eta[i] - eta_mean;
    out[i] = nominal_energy.values()[i] * xi[i];
  }
  return AltReality{risk::EmpiricalSample(std::move(out)), std::move(xi), eta_mean};
}

void write_ensemble_csv(const TrajectoryEnsemble& e, const std::filesystem::path& path) {
  std::string buf;
  buf.reserve(e.n_paths() * static_cast<std::size_t>(e.horizon() + 1) * 24);
  buf += "path,t";
  for (Eigen::Index i = 0; i < e.dim(); ++i) buf += ",x" + std::to_string(i + 1);
  buf += "\n";
  for (std::size_t p = 0; p < e.n_paths(); ++p) {
    for (std::int64_t t = 0; t <= e.horizon(); ++t) {
      buf += std::to_string(p);
      buf += ',';
      buf += std::to_string(t);
      const double* x = e.state(p, t);
      for (Eigen::Index i = 0; i < e.dim(); ++i) {
        buf += ',';
        buf += io::format_double(x[i]);
      }
      buf += '\n';
    }
  }
  io::atomic_write_text(path, buf);
}

}  // namespace riskstab::sim

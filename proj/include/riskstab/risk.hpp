#pragma once

#include <cstddef>
#include <memory>
#include <mutex>
#include <vector>

#include "riskstab/errors.hpp"

namespace riskstab::risk {

enum class RiskKind { Mean, VaR, CVaR, MD, MUS, MeanCondVar };

const char* kind_name(RiskKind k);

// Parameterized risk functional. Construct through the named factories so the
// per-kind parameter ranges are enforced once.
struct RiskSpec {
  RiskKind kind = RiskKind::Mean;
  double alpha = 1.0;  // VaR/CVaR level
  double q = 1.0;      // deviation norm order, >= 1
  double beta = 0.0;   // deviation weight, >= 0
  double nu = 0.0;     // conditional-variance weight, >= 0

  static RiskSpec mean();
  static RiskSpec var(double alpha);                // alpha in (0,1)
  static RiskSpec cvar(double alpha);               // alpha in (0,1]
  static RiskSpec md(double q, double beta);        // q >= 1, beta >= 0
  static RiskSpec mus(double q, double beta);       // q >= 1, beta >= 0
  static RiskSpec mean_cond_var(double nu);         // nu >= 0

  // True when the parameters put the functional in its coherent range:
  // Mean always; CVaR always (alpha in (0,1]); MD iff q == 1 && beta <= 1/2;
  // MUS iff beta <= 1. VaR and MeanCondVar are never coherent.
  bool coherent() const;
};

// Immutable sample of scalar outcomes. The sorted view is materialized on
// first use; concurrent readers are safe.
class EmpiricalSample {
 public:
  explicit EmpiricalSample(std::vector<double> values);
  EmpiricalSample(const EmpiricalSample& other);
  EmpiricalSample& operator=(const EmpiricalSample& other);

  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& sorted() const;
  std::size_t size() const { return values_.size(); }
  double mean() const;

 private:
  std::vector<double> values_;
  mutable std::unique_ptr<const std::vector<double>> sorted_;
  mutable std::mutex sort_mutex_;
};

// Cost draws paired with their one-step conditional means (same index, same
// underlying outcome). Input for the mean-conditional-variance functional.
struct PairedSample {
  std::vector<double> costs;
  std::vector<double> cond_means;

  PairedSample(std::vector<double> costs_in, std::vector<double> cond_means_in);
  std::size_t size() const { return costs.size(); }
};

enum class DensityFamily { CVaR, MD, MUS };

// Discrete density ratio (one weight per equally likely atom) tagged with the
// constraint family it claims to belong to. Nonnegativity is checked at
// construction; family-specific constraints are checked by check_density.
struct DualDensity {
  std::vector<double> values;
  DensityFamily family = DensityFamily::CVaR;
  double alpha = 1.0;  // CVaR family
  double beta = 0.0;   // MD / MUS families
  double q = 1.0;      // MUS family; only q == 1 membership is supported

  static DualDensity cvar_family(std::vector<double> values, double alpha);
  static DualDensity md_family(std::vector<double> values, double beta);
  static DualDensity mus_family(std::vector<double> values, double beta,
                                double q = 1.0);
};

// Left-continuous lower-tail value-at-risk: the ceil((1-alpha) n)-th order
// statistic, the smallest z with empirical CDF(z) >= 1 - alpha.
double var_alpha(const EmpiricalSample& s, double alpha);

// Exact discrete conditional value-at-risk,
//   CVaR_alpha = VaR + mean(max(Z - VaR, 0)) / alpha,  CVaR_1 = mean.
double cvar_alpha(const EmpiricalSample& s, double alpha);

// mean + beta * (mean |Z - mean|^q)^(1/q)
double mean_deviation(const EmpiricalSample& s, double q, double beta);

// mean + beta * (mean max(Z - mean, 0)^q)^(1/q)
double mean_upper_semidev(const EmpiricalSample& s, double q, double beta);

// mean(costs) + nu * mean((cond_means - costs)^2)
double mean_cond_variance(const PairedSample& p, double nu);

// Dispatch on spec.kind. MeanCondVar requires the PairedSample overload and
// is the only kind the PairedSample overload accepts.
double evaluate(const RiskSpec& spec, const EmpiricalSample& s);
double evaluate(const RiskSpec& spec, const PairedSample& p);

// True iff d satisfies its family's discrete constraints within tol:
// mean == 1, values >= 0, plus CVaR: values <= 1/alpha; MD: values <=
// 1 + 2 beta; MUS(q=1): representable as 1 + eta - mean(eta) with
// 0 <= eta <= beta, equivalently max - min <= beta.
bool check_density(const DualDensity& d, double tol = 1e-9);

// Maximizer of mean(Z xi) over the discrete CVaR constraint set; attains
// cvar_alpha(s, alpha) and passes check_density.
DualDensity cvar_optimal_density(const EmpiricalSample& s, double alpha);

}  // namespace riskstab::risk

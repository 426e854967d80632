#include "riskstab/risk.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace riskstab::risk {
namespace {

void require_finite(const std::vector<double>& v, const char* who) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw Error(std::string(who) + ": non-finite value in sample");
    }
  }
}

void require_alpha_open(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw BadAlpha("alpha must lie in (0,1), got " + std::to_string(alpha));
  }
}

void require_alpha_half_open(double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw BadAlpha("alpha must lie in (0,1], got " + std::to_string(alpha));
  }
}

void require_order(double q) {
  if (!(q >= 1.0) || !std::isfinite(q)) {
    throw BadOrder("norm order q must satisfy q >= 1, got " + std::to_string(q));
  }
}

void require_weight(double beta) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw BadWeight("deviation weight beta must be >= 0, got " + std::to_string(beta));
  }
}

double sample_mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

const char* kind_name(RiskKind k) {
  switch (k) {
    case RiskKind::Mean: return "mean";
    case RiskKind::VaR: return "var";
    case RiskKind::CVaR: return "cvar";
    case RiskKind::MD: return "mean_deviation";
    case RiskKind::MUS: return "mean_upper_semideviation";
    case RiskKind::MeanCondVar: return "mean_cond_variance";
  }
  return "unknown";
}

RiskSpec RiskSpec::mean() { return RiskSpec{RiskKind::Mean, 1.0, 1.0, 0.0, 0.0}; }

RiskSpec RiskSpec::var(double alpha) {
  require_alpha_open(alpha);
  return RiskSpec{RiskKind::VaR, alpha, 1.0, 0.0, 0.0};
}

RiskSpec RiskSpec::cvar(double alpha) {
  require_alpha_half_open(alpha);
  return RiskSpec{RiskKind::CVaR, alpha, 1.0, 0.0, 0.0};
}

RiskSpec RiskSpec::md(double q, double beta) {
  require_order(q);
  require_weight(beta);
  return RiskSpec{RiskKind::MD, 1.0, q, beta, 0.0};
}

RiskSpec RiskSpec::mus(double q, double beta) {
  require_order(q);
  require_weight(beta);
  return RiskSpec{RiskKind::MUS, 1.0, q, beta, 0.0};
}

RiskSpec RiskSpec::mean_cond_var(double nu) {
  if (!(nu >= 0.0) || !std::isfinite(nu)) {
    throw BadWeight("nu must be >= 0, got " + std::to_string(nu));
  }
  return RiskSpec{RiskKind::MeanCondVar, 1.0, 1.0, 0.0, nu};
}

bool RiskSpec::coherent() const {
  switch (kind) {
    case RiskKind::Mean: return true;
    case RiskKind::CVaR: return true;
    case RiskKind::MD: return q == 1.0 && beta <= 0.5;
    case RiskKind::MUS: return beta <= 1.0;
    case RiskKind::VaR:
    case RiskKind::MeanCondVar: return false;
  }
  return false;
}

EmpiricalSample::EmpiricalSample(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw EmptySample("EmpiricalSample: sample is empty");
  require_finite(values_, "EmpiricalSample");
}

EmpiricalSample::EmpiricalSample(const EmpiricalSample& other) : values_(other.values_) {}

EmpiricalSample& EmpiricalSample::operator=(const EmpiricalSample& other) {
  if (this != &other) {
    values_ = other.values_;
    std::lock_guard<std::mutex> lock(sort_mutex_);
    sorted_.reset();
  }
  return *this;
}

const std::vector<double>& EmpiricalSample::sorted() const {
  std::lock_guard<std::mutex> lock(sort_mutex_);
  if (!sorted_) {
    auto s = std::make_unique<std::vector<double>>(values_);
    std::sort(s->begin(), s->end());
    sorted_ = std::move(s);
  }
  return *sorted_;
}

double EmpiricalSample::mean() const { return sample_mean(values_); }

PairedSample::PairedSample(std::vector<double> costs_in, std::vector<double> cond_means_in)
    : costs(std::move(costs_in)), cond_means(std::move(cond_means_in)) {
  if (costs.empty()) throw EmptySample("PairedSample: sample is empty");
  if (costs.size() != cond_means.size()) {
    throw LengthMismatch("PairedSample: " + std::to_string(costs.size()) + " costs vs " +
                         std::to_string(cond_means.size()) + " conditional means");
  }
  require_finite(costs, "PairedSample");
  require_finite(cond_means, "PairedSample");
}

DualDensity DualDensity::cvar_family(std::vector<double> values, double alpha) {
  require_alpha_half_open(alpha);
  DualDensity d;
  d.values = std::move(values);
  d.family = DensityFamily::CVaR;
  d.alpha = alpha;
  return d;
}

DualDensity DualDensity::md_family(std::vector<double> values, double beta) {
  require_weight(beta);
  DualDensity d;
  d.values = std::move(values);
  d.family = DensityFamily::MD;
  d.beta = beta;
  return d;
}

DualDensity DualDensity::mus_family(std::vector<double> values, double beta, double q) {
  require_weight(beta);
  if (q != 1.0) {
    throw BadOrder("DualDensity: MUS family membership is only supported for q = 1");
  }
  DualDensity d;
  d.values = std::move(values);
  d.family = DensityFamily::MUS;
  d.beta = beta;
  d.q = q;
  return d;
}

double var_alpha(const EmpiricalSample& s, double alpha) {
  require_alpha_open(alpha);
  const std::vector<double>& z = s.sorted();
  const double n = static_cast<double>(z.size());
  // Smallest z with F(z) >= 1 - alpha: the ceil((1-alpha) n)-th order statistic.
  auto k = static_cast<std::size_t>(std::ceil((1.0 - alpha) * n));
  if (k == 0) k = 1;  // cannot happen for alpha in (0,1), kept as a guard
  return z[k - 1];
}

double cvar_alpha(const EmpiricalSample& s, double alpha) {
  require_alpha_half_open(alpha);
  if (alpha == 1.0) return s.mean();
  const double v = var_alpha(s, alpha);
  double excess = 0.0;
  for (double x : s.values()) excess += std::max(x - v, 0.0);
  excess /= static_cast<double>(s.size());
  return v + excess / alpha;
}

double mean_deviation(const EmpiricalSample& s, double q, double beta) {
  require_order(q);
  require_weight(beta);
  const double m = s.mean();
  double acc = 0.0;
  for (double x : s.values()) acc += std::pow(std::abs(x - m), q);
  acc /= static_cast<double>(s.size());
  return m + beta * std::pow(acc, 1.0 / q);
}

double mean_upper_semidev(const EmpiricalSample& s, double q, double beta) {
  require_order(q);
  require_weight(beta);
  const double m = s.mean();
  double acc = 0.0;
  for (double x : s.values()) acc += std::pow(std::max(x - m, 0.0), q);
  acc /= static_cast<double>(s.size());
  return m + beta * std::pow(acc, 1.0 / q);
}

double mean_cond_variance(const PairedSample& p, double nu) {
  if (!(nu >= 0.0)) throw BadWeight("nu must be >= 0, got " + std::to_string(nu));
  double mean_cost = 0.0;
  double mean_sq = 0.0;
  const double n = static_cast<double>(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    mean_cost += p.costs[i];
    const double d = p.cond_means[i] - p.costs[i];
    mean_sq += d * d;
  }
  return mean_cost / n + nu * (mean_sq / n);
}

double evaluate(const RiskSpec& spec, const EmpiricalSample& s) {
  switch (spec.kind) {
    case RiskKind::Mean: return s.mean();
    case RiskKind::VaR: return var_alpha(s, spec.alpha);
    case RiskKind::CVaR: return cvar_alpha(s, spec.alpha);
    case RiskKind::MD: return mean_deviation(s, spec.q, spec.beta);
    case RiskKind::MUS: return mean_upper_semidev(s, spec.q, spec.beta);
    case RiskKind::MeanCondVar:
      throw KindMismatch("evaluate: mean_cond_variance needs a PairedSample");
  }
  throw KindMismatch("evaluate: unknown risk kind");
}

double evaluate(const RiskSpec& spec, const PairedSample& p) {
  if (spec.kind != RiskKind::MeanCondVar) {
    throw KindMismatch(std::string("evaluate: PairedSample is only valid for "
                                   "mean_cond_variance, got ") + kind_name(spec.kind));
  }
  return mean_cond_variance(p, spec.nu);
}

bool check_density(const DualDensity& d, double tol) {
  if (d.values.empty()) return false;
  double lo = d.values.front();
  double hi = d.values.front();
  double sum = 0.0;
  for (double x : d.values) {
    if (!std::isfinite(x)) return false;
    lo = std::min(lo, x);
    hi = std::max(hi, x);
    sum += x;
  }
  const double mean = sum / static_cast<double>(d.values.size());
  if (std::abs(mean - 1.0) > tol) return false;
  if (lo < -tol) return false;
  switch (d.family) {
    case DensityFamily::CVaR:
      return hi <= 1.0 / d.alpha + tol;
    case DensityFamily::MD:
      return hi <= 1.0 + 2.0 * d.beta + tol;
    case DensityFamily::MUS:
      // xi = 1 + eta - mean(eta) with 0 <= eta <= beta, for some eta, iff the
      // spread fits: take eta = xi - min(xi), then max(eta) = hi - lo.
      return hi - lo <= d.beta + tol;
  }
  return false;
}

DualDensity cvar_optimal_density(const EmpiricalSample& s, double alpha) {
  require_alpha_half_open(alpha);
  const std::size_t n = s.size();
  std::vector<double> xi(n, 0.0);
  if (alpha == 1.0) {
    std::fill(xi.begin(), xi.end(), 1.0);
    return DualDensity::cvar_family(std::move(xi), alpha);
  }
  const double v = var_alpha(s, alpha);
  std::size_t above = 0;
  std::size_t at = 0;
  for (double x : s.values()) {
    if (x > v) ++above;
    else if (x == v) ++at;
  }
  // Budget mean(xi) = 1: tail atoms saturate at 1/alpha, atoms at the
  // quantile share the remainder. VaR's defining inequalities bound the
  // shared weight inside [0, 1/alpha].
  const double w = (static_cast<double>(n) - static_cast<double>(above) / alpha) /
                   static_cast<double>(at);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = s.values()[i];
    if (x > v) xi[i] = 1.0 / alpha;
    else if (x == v) xi[i] = w;
  }
  return DualDensity::cvar_family(std::move(xi), alpha);
}

}  // namespace riskstab::risk

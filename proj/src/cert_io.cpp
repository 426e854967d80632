#include "riskstab/cert_io.hpp"

#include <string>

#include "riskstab/io.hpp"

namespace riskstab::cert {
namespace {

using jsonu::check_keys;
using jsonu::matrix_from;
using jsonu::matrix_json;
using jsonu::number_from;

mat::SymMatrix sym_from(const Json& j, const char* where) {
  return mat::SymMatrix::from_nearly(matrix_from(j, where));
}

std::vector<double> doubles_from(const Json& j, const char* where) {
  const Eigen::VectorXd v = jsonu::vector_from(j, where);
  return {v.data(), v.data() + v.size()};
}

Json doubles_json(const std::vector<double>& v) {
  Json arr = Json::array();
  for (double x : v) arr.push_back(x);
  return arr;
}

}  // namespace

Json to_json(const risk::RiskSpec& spec) {
  Json j;
  j["kind"] = risk::kind_name(spec.kind);
  switch (spec.kind) {
    case risk::RiskKind::VaR:
    case risk::RiskKind::CVaR:
      j["alpha"] = spec.alpha;
      break;
    case risk::RiskKind::MD:
    case risk::RiskKind::MUS:
      j["q"] = spec.q;
      j["beta"] = spec.beta;
      break;
    case risk::RiskKind::MeanCondVar:
      j["nu"] = spec.nu;
      break;
    case risk::RiskKind::Mean:
      break;
  }
  return j;
}

risk::RiskSpec risk_from_json(const Json& j) {
  check_keys(j, {"kind"}, {"alpha", "q", "beta", "nu"}, "risk");
  const std::string kind = j.at("kind").is_string() ? j.at("kind").get<std::string>() : "";
  if (kind == "mean") {
    check_keys(j, {"kind"}, {}, "risk(mean)");
    return risk::RiskSpec::mean();
  }
  if (kind == "var") {
    check_keys(j, {"kind", "alpha"}, {}, "risk(var)");
    return risk::RiskSpec::var(number_from(j.at("alpha"), "risk.alpha"));
  }
  if (kind == "cvar") {
    check_keys(j, {"kind", "alpha"}, {}, "risk(cvar)");
    return risk::RiskSpec::cvar(number_from(j.at("alpha"), "risk.alpha"));
  }
  if (kind == "mean_deviation") {
    check_keys(j, {"kind", "beta"}, {"q"}, "risk(mean_deviation)");
    const double q = j.contains("q") ? number_from(j.at("q"), "risk.q") : 1.0;
    return risk::RiskSpec::md(q, number_from(j.at("beta"), "risk.beta"));
  }
  if (kind == "mean_upper_semideviation") {
    check_keys(j, {"kind", "beta"}, {"q"}, "risk(mean_upper_semideviation)");
    const double q = j.contains("q") ? number_from(j.at("q"), "risk.q") : 1.0;
    return risk::RiskSpec::mus(q, number_from(j.at("beta"), "risk.beta"));
  }
  if (kind == "mean_cond_variance") {
    check_keys(j, {"kind", "nu"}, {}, "risk(mean_cond_variance)");
    return risk::RiskSpec::mean_cond_var(number_from(j.at("nu"), "risk.nu"));
  }
  throw ConfigInvalid("risk.kind: unknown value \"" + kind + "\"");
}

Json to_json(const StabilityCertificate& cert) {
  Json j;
  j["type"] = "coherent";
  j["risk"] = to_json(cert.risk);
  j["branch"] = cert.branch == EnvelopeBranch::Flat ? "flat" : "geometric";
  j["eta"] = cert.eta;
  j["kappa"] = cert.kappa;
  j["lambda"] = cert.lambda;
  j["a"] = cert.a;
  j["b"] = cert.b;
  j["c"] = cert.c;
  j["b_prime"] = cert.b_prime;
  j["b_prime_point"] = cert.b_prime_point;
  j["h"] = matrix_json(cert.h.mat());
  j["h_r"] = matrix_json(cert.h_r.mat());
  j["transformed"] = cert.transformed;
  return j;
}

StabilityCertificate stability_from_json(const Json& j) {
  check_keys(j,
             {"type", "risk", "branch", "eta", "kappa", "lambda", "a", "b", "c",
              "b_prime", "b_prime_point", "h", "h_r", "transformed"},
             {}, "certificate");
  StabilityCertificate cert;
  cert.risk = risk_from_json(j.at("risk"));
  const std::string branch = j.at("branch").get<std::string>();
  if (branch == "flat") {
    cert.branch = EnvelopeBranch::Flat;
  } else if (branch == "geometric") {
    cert.branch = EnvelopeBranch::Geometric;
  } else {
    throw ConfigInvalid("certificate.branch: unknown value \"" + branch + "\"");
  }
  cert.eta = number_from(j.at("eta"), "certificate.eta");
  cert.kappa = number_from(j.at("kappa"), "certificate.kappa");
  cert.lambda = number_from(j.at("lambda"), "certificate.lambda");
  cert.a = number_from(j.at("a"), "certificate.a");
  cert.b = number_from(j.at("b"), "certificate.b");
  cert.c = number_from(j.at("c"), "certificate.c");
  cert.b_prime = number_from(j.at("b_prime"), "certificate.b_prime");
  cert.b_prime_point = number_from(j.at("b_prime_point"), "certificate.b_prime_point");
  cert.h = sym_from(j.at("h"), "certificate.h");
  cert.h_r = sym_from(j.at("h_r"), "certificate.h_r");
  if (!j.at("transformed").is_boolean()) {
    throw ConfigInvalid("certificate.transformed: expected a boolean");
  }
  cert.transformed = j.at("transformed").get<bool>();
  return cert;
}

Json to_json(const McvCertificate& cert) {
  Json j;
  j["type"] = "mean_cond_variance";
  j["nu"] = cert.nu;
  j["lambda_nu"] = cert.lambda_nu;
  j["lambda_0"] = cert.lambda_0;
  j["a_nu"] = cert.a_nu;
  j["a_0"] = cert.a_0;
  j["c_nu"] = cert.c_nu;
  j["b_nu"] = cert.b_nu;
  j["r"] = matrix_json(cert.r.mat());
  j["r_nu"] = matrix_json(cert.r_nu.mat());
  j["sigma_u"] = matrix_json(cert.sigma_u.mat());
  j["h_nu"] = matrix_json(cert.h_nu.mat());
  j["h_0"] = matrix_json(cert.h_0.mat());
  j["tilde_add_nu"] = cert.tilde_add_nu;
  j["tilde_add_0"] = cert.tilde_add_0;
  j["lambda_max_r"] = cert.lambda_max_r;
  j["gamma_sup"] = cert.gamma_sup;
  j["gamma_norms"] = doubles_json(cert.gamma_norms);
  j["per_t_bias"] = doubles_json(cert.per_t_bias);
  j["rho_d"] = doubles_json(cert.rho_d);
  j["horizon"] = cert.horizon;
  return j;
}

McvCertificate mcv_from_json(const Json& j) {
  check_keys(j,
             {"type", "nu", "lambda_nu", "lambda_0", "a_nu", "a_0", "c_nu", "b_nu",
              "r", "r_nu", "sigma_u", "h_nu", "h_0", "tilde_add_nu", "tilde_add_0",
              "lambda_max_r", "gamma_sup", "gamma_norms", "per_t_bias", "rho_d",
              "horizon"},
             {}, "certificate");
  McvCertificate cert;
  cert.nu = number_from(j.at("nu"), "certificate.nu");
  cert.lambda_nu = number_from(j.at("lambda_nu"), "certificate.lambda_nu");
  cert.lambda_0 = number_from(j.at("lambda_0"), "certificate.lambda_0");
  cert.a_nu = number_from(j.at("a_nu"), "certificate.a_nu");
  cert.a_0 = number_from(j.at("a_0"), "certificate.a_0");
  cert.c_nu = number_from(j.at("c_nu"), "certificate.c_nu");
  cert.b_nu = number_from(j.at("b_nu"), "certificate.b_nu");
  cert.r = sym_from(j.at("r"), "certificate.r");
  cert.r_nu = sym_from(j.at("r_nu"), "certificate.r_nu");
  cert.sigma_u = sym_from(j.at("sigma_u"), "certificate.sigma_u");
  cert.h_nu = sym_from(j.at("h_nu"), "certificate.h_nu");
  cert.h_0 = sym_from(j.at("h_0"), "certificate.h_0");
  cert.tilde_add_nu = number_from(j.at("tilde_add_nu"), "certificate.tilde_add_nu");
  cert.tilde_add_0 = number_from(j.at("tilde_add_0"), "certificate.tilde_add_0");
  cert.lambda_max_r = number_from(j.at("lambda_max_r"), "certificate.lambda_max_r");
  cert.gamma_sup = number_from(j.at("gamma_sup"), "certificate.gamma_sup");
  cert.gamma_norms = doubles_from(j.at("gamma_norms"), "certificate.gamma_norms");
  cert.per_t_bias = doubles_from(j.at("per_t_bias"), "certificate.per_t_bias");
  cert.rho_d = doubles_from(j.at("rho_d"), "certificate.rho_d");
  if (!j.at("horizon").is_number_integer()) {
    throw ConfigInvalid("certificate.horizon: expected an integer");
  }
  cert.horizon = j.at("horizon").get<std::int64_t>();
  return cert;
}

AnyCertificate certificate_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("type") || !j.at("type").is_string()) {
    throw ConfigInvalid("certificate: missing \"type\" discriminator");
  }
  const std::string type = j.at("type").get<std::string>();
  if (type == "coherent") return stability_from_json(j);
  if (type == "mean_cond_variance") return mcv_from_json(j);
  throw ConfigInvalid("certificate.type: unknown value \"" + type + "\"");
}

AnyCertificate load_certificate(const std::filesystem::path& path) {
  const std::string text = io::read_text(path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigInvalid("certificate file " + path.string() + ": " + e.what());
  }
  return certificate_from_json(j);
}

void save_certificate(const std::filesystem::path& path, const AnyCertificate& cert) {
  const Json j = std::visit([](const auto& c) { return to_json(c); }, cert);
  io::atomic_write_text(path, j.dump(2) + "\n");
}

}  // namespace riskstab::cert

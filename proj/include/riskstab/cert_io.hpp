#pragma once

#include <filesystem>
#include <variant>

#include "riskstab/certificates.hpp"
#include "riskstab/json_util.hpp"

namespace riskstab::cert {

using jsonu::Json;

// Certificates serialize to a JSON object with a "type" discriminator:
// "coherent" or "mean_cond_variance". Matrices are row-major nested arrays.
Json to_json(const risk::RiskSpec& spec);
risk::RiskSpec risk_from_json(const Json& j);

Json to_json(const StabilityCertificate& cert);
StabilityCertificate stability_from_json(const Json& j);

Json to_json(const McvCertificate& cert);
McvCertificate mcv_from_json(const Json& j);

using AnyCertificate = std::variant<StabilityCertificate, McvCertificate>;

AnyCertificate certificate_from_json(const Json& j);
AnyCertificate load_certificate(const std::filesystem::path& path);
void save_certificate(const std::filesystem::path& path, const AnyCertificate& cert);

}  // namespace riskstab::cert

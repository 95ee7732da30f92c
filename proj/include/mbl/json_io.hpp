#pragma once

#include <string>

#include <json.hpp>

#include "mbl/diagnostics.hpp"
#include "mbl/margins.hpp"
#include "mbl/perturbation.hpp"

namespace mbl {

// Wire formats. q serializes as a number or the string "inf";
// {"kind":"lq","q":2.0,"c":0.5}, {"kind":"smoothed-linf","c":0.5,"lambda":1e-4},
// {"kind":"clean"}.
nlohmann::json perturbation_to_json(const PerturbationModel& model);
PerturbationModel perturbation_from_json(const nlohmann::json& j);

nlohmann::json certificate_to_json(const MarginCertificate& cert);
nlohmann::json certificate_to_json(const MixedMarginCertificate& cert);
nlohmann::json invariant_report_to_json(const InvariantReport& report);
nlohmann::json landscape_report_to_json(const LandscapeReport& report);
nlohmann::json kkt_report_to_json(const KKTReport& report);
nlohmann::json rate_report_to_json(const RateReport& report);

void write_json(const nlohmann::json& j, const std::string& path);
nlohmann::json read_json(const std::string& path);

}  // namespace mbl

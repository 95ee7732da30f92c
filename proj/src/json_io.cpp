#include "mbl/json_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace mbl {

using nlohmann::json;

namespace {

json q_to_json(double q) {
  if (std::isinf(q)) return json("inf");
  return json(q);
}

double q_from_json(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
    throw std::invalid_argument("model.q: only the string \"inf\" is accepted");
  }
  if (!j.is_number()) throw std::invalid_argument("model.q: expected a number or \"inf\"");
  return j.get<double>();
}

}  // namespace

json perturbation_to_json(const PerturbationModel& model) {
  switch (model.kind()) {
    case PerturbationKind::clean:
      return json{{"kind", "clean"}};
    case PerturbationKind::lq_ball:
      return json{{"kind", "lq"}, {"q", q_to_json(model.q())}, {"c", model.c()}};
    case PerturbationKind::smoothed_linf:
      return json{{"kind", "smoothed-linf"}, {"c", model.c()}, {"lambda", model.lambda()}};
  }
  throw std::logic_error("perturbation_to_json: unreachable");
}

PerturbationModel perturbation_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind"))
    throw std::invalid_argument("model: expected an object with a \"kind\" field");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "clean") return PerturbationModel::clean();
  if (kind == "lq") {
    if (!j.contains("q")) throw std::invalid_argument("model.q: required for kind \"lq\"");
    if (!j.contains("c")) throw std::invalid_argument("model.c: required for kind \"lq\"");
    return PerturbationModel::lq_ball(q_from_json(j.at("q")), j.at("c").get<double>());
  }
  if (kind == "smoothed-linf") {
    if (!j.contains("c") || !j.contains("lambda"))
      throw std::invalid_argument("model.c and model.lambda: required for kind \"smoothed-linf\"");
    return PerturbationModel::smoothed_linf(j.at("c").get<double>(), j.at("lambda").get<double>());
  }
  throw std::invalid_argument("model.kind: unknown kind '" + kind + "'");
}

json certificate_to_json(const MarginCertificate& cert) {
  return json{{"q", q_to_json(cert.q)},        {"c", 0.0},
              {"gamma", cert.gamma},           {"u", cert.u},
              {"active", cert.active},         {"residual", cert.residual},
              {"converged", cert.converged},   {"unique_direction", cert.unique_direction}};
}

json certificate_to_json(const MixedMarginCertificate& cert) {
  json j{{"q", q_to_json(cert.q)},      {"c", cert.c},
         {"gamma", cert.gamma},         {"u", cert.u},
         {"active", cert.active},       {"residual", cert.residual},
         {"converged", cert.converged}};
  if (cert.lambda.has_value()) j["lambda"] = *cert.lambda;
  return j;
}

json invariant_report_to_json(const InvariantReport& report) {
  json checks = json::array();
  for (const CheckRecord& rec : report.checks) {
    json c{{"name", rec.name},
           {"pass", rec.pass},
           {"vacuous", rec.vacuous},
           {"worst_slack", rec.worst_slack},
           {"worst_t", rec.worst_t}};
    if (!rec.note.empty()) c["note"] = rec.note;
    checks.push_back(std::move(c));
  }
  return json{{"checks", checks}, {"overall_pass", report.overall_pass}};
}

json landscape_report_to_json(const LandscapeReport& report) {
  json j{{"regime",
          report.regime == LandscapeRegime::subcritical ? "subcritical" : "supercritical"},
         {"gamma_q", report.gamma_q},
         {"c", report.c},
         {"converged", report.converged}};
  if (report.regime == LandscapeRegime::subcritical) {
    j["ray_alphas"] = report.ray_alphas;
    j["ray_log_losses"] = report.ray_log_losses;
  } else {
    j["theta_hat"] = report.theta_hat;
    j["lambda_c"] = report.lambda_c;
    j["grad_norm"] = report.grad_norm;
    j["kkt_residual"] = report.kkt_residual;
  }
  return j;
}

json kkt_report_to_json(const KKTReport& report) {
  return json{{"multipliers", report.multipliers},
              {"theta_hat", report.theta_hat},
              {"stationarity_residual", report.stationarity_residual},
              {"complementarity_residual", report.complementarity_residual},
              {"feasibility_residual", report.feasibility_residual}};
}

json rate_report_to_json(const RateReport& report) {
  json fits = json::array();
  for (const FitRecord& fit : report.fits)
    fits.push_back(json{{"name", fit.name},
                        {"slope", fit.slope},
                        {"intercept", fit.intercept},
                        {"r2", fit.r2}});
  return json{{"fits", fits}, {"final_errors", report.final_errors}};
}

void write_json(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("json: cannot write '" + path + "'");
  out << j.dump(2) << "\n";
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("json: cannot open '" + path + "'");
  json j;
  in >> j;
  return j;
}

}  // namespace mbl

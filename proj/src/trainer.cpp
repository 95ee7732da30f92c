#include "mbl/trainer.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "mbl/csv.hpp"
#include "mbl/vec.hpp"

namespace mbl {

namespace {

constexpr double kNormTol = 1e-12;  // slack on the ||x_i|| <= 1 precondition

double require_gamma(const ScheduleCerts& certs, bool mixed, const char* what) {
  if (mixed) {
    if (certs.mixed == nullptr)
      throw std::invalid_argument(std::string("derive_step_schedule: missing ") + what);
    return certs.mixed->gamma;
  }
  if (certs.margin_q == nullptr)
    throw std::invalid_argument(std::string("derive_step_schedule: missing ") + what);
  return certs.margin_q->gamma;
}

}  // namespace

std::string step_mode_name(StepMode mode) {
  switch (mode) {
    case StepMode::auto_l2: return "auto-l2";
    case StepMode::auto_lq: return "auto-lq";
    case StepMode::auto_smoothed: return "auto-smoothed";
    case StepMode::fixed: return "fixed";
  }
  throw std::logic_error("step_mode_name: unreachable");
}

StepMode step_mode_from_name(const std::string& name) {
  if (name == "auto-l2") return StepMode::auto_l2;
  if (name == "auto-lq") return StepMode::auto_lq;
  if (name == "auto-smoothed") return StepMode::auto_smoothed;
  if (name == "fixed") return StepMode::fixed;
  throw std::invalid_argument("unknown step mode '" + name + "'");
}

StepSchedule derive_step_schedule(const LabeledDataset& ds, const PerturbationModel& model,
                                  StepMode mode, const ScheduleCerts& certs,
                                  std::optional<double> fixed_eta,
                                  std::optional<double> fixed_eta0) {
  StepSchedule schedule;
  schedule.mode = mode;
  if (mode == StepMode::fixed) {
    if (!fixed_eta.has_value())
      throw std::invalid_argument("derive_step_schedule: fixed mode requires a user eta");
    schedule.eta = *fixed_eta;
    schedule.eta0 = fixed_eta0.value_or(*fixed_eta);
    if (!(schedule.eta > 0.0) || !(schedule.eta0 > 0.0))
      throw std::invalid_argument("derive_step_schedule: steps must be positive");
    return schedule;
  }

  if (ds.max_point_norm2() > 1.0 + kNormTol)
    throw std::invalid_argument(
        "derive_step_schedule: auto modes require max_i ||x_i||_2 <= 1; "
        "apply rescale_to_unit_ball first");
  schedule.eta0 = 1.0;
  const double c = model.c();

  switch (mode) {
    case StepMode::auto_l2: {
      if (model.kind() == PerturbationKind::lq_ball && model.q() != 2.0)
        throw std::invalid_argument("derive_step_schedule: auto-l2 requires q = 2 (or clean)");
      const double gamma2 = require_gamma(certs, false, "gamma_2 certificate for auto-l2");
      if (!(c < gamma2))
        throw std::invalid_argument("derive_step_schedule: auto-l2 requires c < gamma_2");
      const double denom = std::pow(1.0 + c, 3) * gamma2 + 2.0 * c * (1.0 + c);
      schedule.eta = std::min(gamma2 / std::numbers::e / denom, 1.0);
      break;
    }
    case StepMode::auto_lq: {
      if (model.kind() != PerturbationKind::lq_ball)
        throw std::invalid_argument("derive_step_schedule: auto-lq requires an lq-ball model");
      const double q = model.q();
      if (q == 1.0)
        throw std::invalid_argument(
            "derive_step_schedule: auto-lq is undefined at q = 1 (p = inf); use a finite-q "
            "approximation or fixed mode");
      const double gq =
          require_gamma(certs, false, "gamma_q certificate for the auto-lq feasibility check");
      if (!(c < gq))
        throw std::invalid_argument("derive_step_schedule: auto-lq requires c < gamma_q");
      const double g2q = require_gamma(certs, true, "gamma_{2,q} certificate for auto-lq");
      if (!(g2q > 0.0))
        throw std::invalid_argument("derive_step_schedule: auto-lq requires gamma_{2,q} > 0");
      const double p = model.p();
      const double dd = static_cast<double>(ds.d);
      const double sqrt_d = std::sqrt(dd);
      const double m_p = (1.0 + c * sqrt_d) * (1.0 + c * sqrt_d) +
                         c * (p - 1.0) / g2q * std::pow(dd, (3.0 * p - 2.0) / (2.0 * p - 2.0));
      const double big_m = m_p * std::exp(-g2q * g2q + c * sqrt_d);
      schedule.eta = std::min(1.0 / big_m, 1.0);
      break;
    }
    case StepMode::auto_smoothed: {
      if (model.kind() != PerturbationKind::smoothed_linf)
        throw std::invalid_argument("derive_step_schedule: auto-smoothed requires the smoothed model");
      // Feasibility c < gamma_{2,lambda} is checked when a certificate is
      // supplied; the step formula itself needs only c and lambda.
      if (certs.mixed != nullptr && !(c < certs.mixed->gamma))
        throw std::invalid_argument(
            "derive_step_schedule: auto-smoothed requires c < gamma_{2,lambda}");
      const double r = 1.0 + 2.0 * c / std::sqrt(model.lambda());
      schedule.eta = 1.0 / (r * r);
      break;
    }
    case StepMode::fixed:
      break;  // handled above
  }
  return schedule;
}

namespace {

TraceRow make_row(long t, const LabeledDataset& ds, const PerturbationModel& model,
                  std::span<const double> theta,
                  const std::vector<ReferenceDirection>& refs) {
  TraceRow row;
  row.t = t;
  const LossValue adv = adv_loss(ds, model, theta);
  const LossValue clean = clean_loss(ds, theta);
  row.log10_adv_loss = adv.log10_value();
  row.log10_clean_loss = clean.log10_value();
  row.norm2 = vec::norm2(theta);

  double mm = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ds.n; ++i) mm = std::min(mm, ds.signed_dot(i, theta));
  row.min_clean_margin = mm;
  row.min_adv_margin = mm - penalty(model, theta).value;

  row.alignments.reserve(refs.size());
  for (const ReferenceDirection& ref : refs) {
    if (row.norm2 == 0.0) {
      row.alignments.push_back(1.0);
    } else {
      row.alignments.push_back(1.0 - vec::dot(theta, ref.u) / row.norm2);
    }
  }
  row.grad_underflow = std::exp(adv.log_value) == 0.0;
  row.theta.assign(theta.begin(), theta.end());
  return row;
}

}  // namespace

TrainResult train(const LabeledDataset& ds, const TrainerConfig& config) {
  ds.validate();
  if (config.T < 1) throw std::invalid_argument("train: T must be >= 1");
  if (config.log_every < 1) throw std::invalid_argument("train: log_every must be >= 1");
  for (const ReferenceDirection& ref : config.references)
    if (ref.u.size() != ds.d)
      throw std::invalid_argument("train: reference '" + ref.label + "' has wrong dimension");

  TrainResult result;
  result.trace.dataset_name = ds.name;
  result.trace.model_desc = config.model.describe();
  result.trace.resolved_c = config.model.c();
  result.trace.eta0 = config.schedule.eta0;
  result.trace.eta = config.schedule.eta;
  for (const ReferenceDirection& ref : config.references)
    result.trace.alignment_labels.push_back(ref.label);

  std::vector<double> theta(ds.d, 0.0);
  result.trace.rows.push_back(make_row(0, ds, config.model, theta, config.references));

  const std::vector<double> zbar = ds.mean_signed_point();
  for (long t = 0; t < config.T; ++t) {
    if (t == 0) {
      // theta^1 = (eta0/n) sum z_i: the clean subgradient step from the origin.
      for (std::size_t j = 0; j < ds.d; ++j) theta[j] = config.schedule.eta0 * zbar[j];
    } else {
      const AdvGradient g = adv_grad(ds, config.model, theta);
      vec::axpy(-config.schedule.eta, g.grad, theta);
    }
    if (!vec::all_finite(theta))
      throw std::runtime_error("train: non-finite theta at iteration " + std::to_string(t + 1));
    const long now = t + 1;
    if (now % config.log_every == 0 || now == config.T)
      result.trace.rows.push_back(make_row(now, ds, config.model, theta, config.references));
    if (config.heartbeat && now % 100000 == 0) config.heartbeat(now);
  }
  result.theta = std::move(theta);
  return result;
}

TrainResult gd_baseline(const LabeledDataset& ds, const StepSchedule& schedule, long T,
                        long log_every, const std::vector<ReferenceDirection>& references) {
  TrainerConfig config;
  config.model = PerturbationModel::clean();
  config.schedule = schedule;
  config.T = T;
  config.log_every = log_every;
  config.references = references;
  return train(ds, config);
}

void write_trace_csv(const TrainingTrace& trace, const std::string& path) {
  CsvTable table;
  table.meta.emplace_back("dataset", trace.dataset_name);
  table.meta.emplace_back("model", trace.model_desc);
  table.meta.emplace_back("resolved_c", format_double(trace.resolved_c));
  table.meta.emplace_back("eta0", format_double(trace.eta0));
  table.meta.emplace_back("eta", format_double(trace.eta));
  table.columns = {"t", "log10_adv_loss", "log10_clean_loss", "norm2", "min_clean_margin",
                   "min_adv_margin"};
  for (const std::string& label : trace.alignment_labels)
    table.columns.push_back("align_" + label);
  table.columns.push_back("grad_underflow");
  for (const TraceRow& row : trace.rows) {
    std::vector<double> r = {static_cast<double>(row.t), row.log10_adv_loss,
                             row.log10_clean_loss,      row.norm2,
                             row.min_clean_margin,      row.min_adv_margin};
    for (double a : row.alignments) r.push_back(a);
    r.push_back(row.grad_underflow ? 1.0 : 0.0);
    table.rows.push_back(std::move(r));
  }
  write_csv(table, path);
}

TrainingTrace read_trace_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  TrainingTrace trace;
  for (const auto& [k, v] : table.meta) {
    if (k == "dataset") trace.dataset_name = v;
    if (k == "model") trace.model_desc = v;
    if (k == "resolved_c") trace.resolved_c = std::stod(v);
    if (k == "eta0") trace.eta0 = std::stod(v);
    if (k == "eta") trace.eta = std::stod(v);
  }
  for (const std::string& col : table.columns)
    if (col.rfind("align_", 0) == 0) trace.alignment_labels.push_back(col.substr(6));
  const std::size_t base = 6;
  for (const auto& r : table.rows) {
    TraceRow row;
    row.t = static_cast<long>(r[0]);
    row.log10_adv_loss = r[1];
    row.log10_clean_loss = r[2];
    row.norm2 = r[3];
    row.min_clean_margin = r[4];
    row.min_adv_margin = r[5];
    for (std::size_t j = 0; j < trace.alignment_labels.size(); ++j)
      row.alignments.push_back(r[base + j]);
    row.grad_underflow = r.back() != 0.0;
    trace.rows.push_back(std::move(row));
  }
  return trace;
}

}  // namespace mbl

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mbl/dataset.hpp"
#include "mbl/margins.hpp"
#include "mbl/trainer.hpp"

namespace mbl {

struct CheckRecord {
  std::string name;
  bool pass = false;
  bool vacuous = false;      // no iterate satisfied the check's applicability condition
  double worst_slack = 0.0;  // signed min of (lhs - rhs) over checked iterates
  long worst_t = -1;
  std::string note;
};

struct InvariantReport {
  std::vector<CheckRecord> checks;
  bool overall_pass = true;
  const CheckRecord* find(const std::string& name) const;
};

struct InvariantInputs {
  // gamma_{2,q} certificate (or gamma_{2,lambda} for the smoothed model):
  // drives descent-alignment, gradient-norm, norm-floor, risk-bound.
  const MixedMarginCertificate* mixed = nullptr;
  // q = 2 certificate: orthogonal bound and Lemma-style norm lower bound.
  const MarginCertificate* l2 = nullptr;
  const DiagnosticsConstants* constants = nullptr;
  // Monotone descent, risk bound, orthogonal bound and the norm lower bound
  // are theorem-guaranteed only under the auto step schedules; set false for
  // hand-picked steps to restrict the report to the schedule-free checks.
  bool schedule_guarantees = true;
};

// Evaluates every provable per-iterate inequality at the trace's snapshots,
// in log domain where needed, at relative tolerance 1e-8.
InvariantReport check_trace_invariants(const TrainingTrace& trace, const LabeledDataset& ds,
                                       const PerturbationModel& model,
                                       const InvariantInputs& inputs);

enum class LandscapeRegime { subcritical, supercritical };

struct LandscapeReport {
  LandscapeRegime regime = LandscapeRegime::subcritical;
  double gamma_q = 0.0;
  double c = 0.0;
  // subcritical: log L_adv(alpha * u_q) along the sampled ray
  std::vector<double> ray_alphas;
  std::vector<double> ray_log_losses;
  // supercritical: finite minimizer and the regularization equivalence
  std::vector<double> theta_hat;
  double lambda_c = 0.0;
  double grad_norm = 0.0;      // ||grad L_adv(theta_hat)|| (subdifferential distance at 0)
  double kkt_residual = 0.0;   // stationarity of the lambda(c)-regularized problem
  bool converged = true;
};

LandscapeReport landscape_probe(const LabeledDataset& ds, double q, double c,
                                std::span<const double> ray_alphas,
                                long minimizer_budget = 200000);

struct KKTReport {
  std::vector<double> multipliers;       // length n, zero off the active set
  std::vector<double> theta_hat;         // input rescaled so min_i(z^T th - c||th||_p) = 1
  double stationarity_residual = 0.0;    // ||theta_hat - sum a_i (z_i - c s)|| / ||theta_hat||
  double complementarity_residual = 0.0;
  double feasibility_residual = 0.0;
};

// Certifies the first-order system of min 1/2||theta||^2 s.t.
// z_i^T theta >= c||theta||_p + 1 at the given direction.
KKTReport kkt_residual_mixed(std::span<const double> theta, const LabeledDataset& ds,
                             double q, double c);

struct FitRecord {
  std::string name;
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

struct RateReport {
  std::vector<FitRecord> fits;
  std::vector<double> final_errors;  // per input trace, alignment error at the last row
  const FitRecord* find(const std::string& name) const;
};

// Pure measurement: least-squares fits of the alignment error to the given
// reference direction against log t, log log t and 1/log t, plus
// log(-log10 clean loss) against log t. Rows with t >= 2 are used; throws
// when fewer than 10 rows are usable.
RateReport rate_summary(std::span<const TrainingTrace> traces,
                        std::span<const double> reference);

}  // namespace mbl

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mbl/dataset.hpp"
#include "mbl/margins.hpp"
#include "mbl/objective.hpp"
#include "mbl/perturbation.hpp"

namespace mbl {

enum class StepMode { auto_l2, auto_lq, auto_smoothed, fixed };

std::string step_mode_name(StepMode mode);
StepMode step_mode_from_name(const std::string& name);

struct StepSchedule {
  double eta0 = 1.0;  // first-step size (the clean subgradient step)
  double eta = 1.0;   // constant step for t >= 1
  StepMode mode = StepMode::fixed;
};

struct ScheduleCerts {
  const MarginCertificate* margin_q = nullptr;        // gamma_q feasibility, gamma_2 for auto-l2
  const MixedMarginCertificate* mixed = nullptr;      // gamma_{2,q} / gamma_{2,lambda}
};

// Theorem-derived constant steps; eta is set to the largest permitted value
// and eta0 = 1 in every auto mode. Auto modes refuse unnormalized data
// (max_i ||x_i||_2 > 1) and infeasible c.
StepSchedule derive_step_schedule(const LabeledDataset& ds, const PerturbationModel& model,
                                  StepMode mode, const ScheduleCerts& certs,
                                  std::optional<double> fixed_eta = {},
                                  std::optional<double> fixed_eta0 = {});

struct ReferenceDirection {
  std::string label;
  std::vector<double> u;  // unit ell_2 vector
};

struct TrainerConfig {
  PerturbationModel model = PerturbationModel::clean();
  StepSchedule schedule;
  long T = 1;
  long log_every = 1;
  std::vector<ReferenceDirection> references;
  // Called every 100000 iterations when set (CLI heartbeat).
  std::function<void(long)> heartbeat;
};

struct TraceRow {
  long t = 0;
  double log10_adv_loss = 0.0;
  double log10_clean_loss = 0.0;
  double norm2 = 0.0;
  double min_clean_margin = 0.0;
  double min_adv_margin = 0.0;
  std::vector<double> alignments;  // 1 - <theta/||theta||, u_k>; 1 at theta = 0
  bool grad_underflow = false;
  std::vector<double> theta;  // snapshot at this logged step
};

struct TrainingTrace {
  std::string dataset_name;
  std::string model_desc;
  double resolved_c = 0.0;
  double eta0 = 1.0;
  double eta = 1.0;
  std::vector<std::string> alignment_labels;
  std::vector<TraceRow> rows;

  const TraceRow& last() const { return rows.back(); }
};

struct TrainResult {
  std::vector<double> theta;
  TrainingTrace trace;
};

// Algorithm: theta^0 = 0; step 0 takes the clean subgradient with eta0; steps
// t >= 1 take the adversarial gradient with eta. Rows are recorded at
// t in {0, log_every, 2*log_every, ...} and at T. Bit-reproducible.
TrainResult train(const LabeledDataset& ds, const TrainerConfig& config);

// Standard clean training with GD: train with the clean model.
TrainResult gd_baseline(const LabeledDataset& ds, const StepSchedule& schedule, long T,
                        long log_every = 1,
                        const std::vector<ReferenceDirection>& references = {});

void write_trace_csv(const TrainingTrace& trace, const std::string& path);
TrainingTrace read_trace_csv(const std::string& path);

}  // namespace mbl

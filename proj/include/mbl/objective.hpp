#pragma once

#include <span>
#include <vector>

#include "mbl/dataset.hpp"
#include "mbl/perturbation.hpp"

namespace mbl {

// Losses are carried as natural logs: late iterates reach exp(-250) and far
// beyond, so the linear-domain value is only materialized on demand.
struct LossValue {
  double log_value = 0.0;
  double log10_value() const;
  double value() const;  // exp(log_value); may underflow to 0 or overflow to inf
};

// log L_adv(theta) = logsumexp_i(-z_i^T theta + pen(theta)) - log n.
LossValue adv_loss(const LabeledDataset& ds, const PerturbationModel& model,
                   std::span<const double> theta);

// Clean empirical risk; identical to adv_loss with the clean model.
LossValue clean_loss(const LabeledDataset& ds, std::span<const double> theta);

struct AdvGradient {
  // True gradient of L_adv. Zero vector by convention when the loss value
  // underflows 64-bit range (training has converged in risk).
  std::vector<double> grad;
  // grad / L_adv: the softmax-weighted combination sum_i w_i(-z_i + pen'),
  // finite at any margin scale. Diagnostics evaluate inequalities with this.
  std::vector<double> direction;
  bool underflow = false;
  double log_loss = 0.0;
};

// At theta = 0 the subgradient convention is the clean mean (1/n) sum(-z_i).
AdvGradient adv_grad(const LabeledDataset& ds, const PerturbationModel& model,
                     std::span<const double> theta);

// log(sum exp(v_i)) evaluated in shifted form.
double log_sum_exp(std::span<const double> v);

}  // namespace mbl

#include "mbl/objective.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mbl/vec.hpp"

namespace mbl {

double LossValue::log10_value() const { return log_value / std::numbers::ln10; }

double LossValue::value() const { return std::exp(log_value); }

double log_sum_exp(std::span<const double> v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

LossValue adv_loss(const LabeledDataset& ds, const PerturbationModel& model,
                   std::span<const double> theta) {
  const double pen = penalty(model, theta).value;
  std::vector<double> exponents(ds.n);
  for (std::size_t i = 0; i < ds.n; ++i) exponents[i] = -ds.signed_dot(i, theta) + pen;
  return LossValue{log_sum_exp(exponents) - std::log(static_cast<double>(ds.n))};
}

LossValue clean_loss(const LabeledDataset& ds, std::span<const double> theta) {
  return adv_loss(ds, PerturbationModel::clean(), theta);
}

AdvGradient adv_grad(const LabeledDataset& ds, const PerturbationModel& model,
                     std::span<const double> theta) {
  const std::size_t d = ds.d;
  const NormEval pen = penalty(model, theta);

  std::vector<double> exponents(ds.n);
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ds.n; ++i) {
    exponents[i] = -ds.signed_dot(i, theta) + pen.value;
    m = std::max(m, exponents[i]);
  }

  AdvGradient out;
  out.direction.assign(d, 0.0);
  double wsum = 0.0;
  // Fixed ascending-index order keeps the reduction bit-reproducible.
  for (std::size_t i = 0; i < ds.n; ++i) {
    const double w = std::exp(exponents[i] - m);
    wsum += w;
    for (std::size_t j = 0; j < d; ++j) out.direction[j] += w * (-ds.z(i, j) + pen.subgrad[j]);
  }
  for (double& v : out.direction) v /= wsum;

  out.log_loss = m + std::log(wsum) - std::log(static_cast<double>(ds.n));
  const double loss = std::exp(out.log_loss);
  out.underflow = loss == 0.0;
  out.grad.assign(d, 0.0);
  if (!out.underflow)
    for (std::size_t j = 0; j < d; ++j) out.grad[j] = loss * out.direction[j];
  return out;
}

}  // namespace mbl

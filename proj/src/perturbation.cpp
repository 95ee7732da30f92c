#include "mbl/perturbation.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "mbl/vec.hpp"

namespace mbl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// The paper's sign convention: sign(0) = +1.
double sign_pos(double v) { return v >= 0.0 ? 1.0 : -1.0; }

}  // namespace

PerturbationModel PerturbationModel::clean() {
  PerturbationModel m;
  m.kind_ = PerturbationKind::clean;
  return m;
}

PerturbationModel PerturbationModel::lq_ball(double q, double c) {
  if (!(q >= 1.0)) throw std::invalid_argument("lq_ball: q must be >= 1");
  if (!(c >= 0.0) || !std::isfinite(c)) throw std::invalid_argument("lq_ball: c must be >= 0");
  PerturbationModel m;
  m.kind_ = PerturbationKind::lq_ball;
  m.q_ = q;
  m.p_ = dual_exponent(q);
  m.c_ = c;
  return m;
}

PerturbationModel PerturbationModel::smoothed_linf(double c, double lambda) {
  if (!(c >= 0.0) || !std::isfinite(c))
    throw std::invalid_argument("smoothed_linf: c must be >= 0");
  if (!(lambda > 0.0)) throw std::invalid_argument("smoothed_linf: lambda must be > 0");
  PerturbationModel m;
  m.kind_ = PerturbationKind::smoothed_linf;
  m.c_ = c;
  m.lambda_ = lambda;
  return m;
}

double PerturbationModel::q() const {
  if (kind_ != PerturbationKind::lq_ball)
    throw std::logic_error("PerturbationModel::q: not an lq-ball model");
  return q_;
}

double PerturbationModel::p() const {
  if (kind_ != PerturbationKind::lq_ball)
    throw std::logic_error("PerturbationModel::p: not an lq-ball model");
  return p_;
}

double PerturbationModel::lambda() const {
  if (kind_ != PerturbationKind::smoothed_linf)
    throw std::logic_error("PerturbationModel::lambda: not a smoothed model");
  return lambda_;
}

std::string PerturbationModel::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case PerturbationKind::clean:
      os << "clean";
      break;
    case PerturbationKind::lq_ball:
      os << "lq(q=";
      if (std::isinf(q_))
        os << "inf";
      else
        os << q_;
      os << ",c=" << c_ << ")";
      break;
    case PerturbationKind::smoothed_linf:
      os << "smoothed-linf(c=" << c_ << ",lambda=" << lambda_ << ")";
      break;
  }
  return os.str();
}

double dual_exponent(double q) {
  if (!(q >= 1.0)) throw std::invalid_argument("dual_exponent: q must be >= 1");
  if (std::isinf(q)) return 1.0;
  if (q == 1.0) return kInf;
  return q / (q - 1.0);
}

double lq_norm(std::span<const double> v, double q) {
  if (!(q >= 1.0)) throw std::invalid_argument("lq_norm: q must be >= 1");
  if (std::isinf(q)) return vec::norm_inf(v);
  if (q == 1.0) return vec::norm1(v);
  if (q == 2.0) return vec::norm2(v);
  const double m = vec::norm_inf(v);
  if (m == 0.0) return 0.0;
  double s = 0.0;
  for (double x : v) {
    const double r = std::fabs(x) / m;
    if (r > 0.0) s += std::exp(q * std::log(r));
  }
  return m * std::exp(std::log(s) / q);
}

NormEval lp_norm_and_subgradient(std::span<const double> theta, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm_and_subgradient: p must be >= 1");
  const std::size_t d = theta.size();
  NormEval out;
  out.subgrad.assign(d, 0.0);
  out.value = lq_norm(theta, p);
  if (out.value == 0.0) return out;  // zero subgradient at the origin

  if (p == 1.0) {
    for (std::size_t j = 0; j < d; ++j)
      out.subgrad[j] = theta[j] == 0.0 ? 0.0 : (theta[j] > 0.0 ? 1.0 : -1.0);
    return out;
  }
  if (std::isinf(p)) {
    std::size_t jstar = 0;
    double best = -1.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double a = std::fabs(theta[j]);
      if (a > best) {
        best = a;
        jstar = j;
      }
    }
    out.subgrad[jstar] = theta[jstar] >= 0.0 ? 1.0 : -1.0;
    return out;
  }
  // sign(theta_j) * (|theta_j| / ||theta||_p)^(p-1), in log space: p near 1
  // makes the exponent tiny but |theta_j|^(p-1) would overflow naively.
  const double log_norm = std::log(out.value);
  for (std::size_t j = 0; j < d; ++j) {
    const double a = std::fabs(theta[j]);
    if (a == 0.0) continue;
    const double mag = std::exp((p - 1.0) * (std::log(a) - log_norm));
    out.subgrad[j] = theta[j] > 0.0 ? mag : -mag;
  }
  return out;
}

std::vector<double> worst_case_perturbation(const PerturbationModel& model,
                                            std::span<const double> theta, double y) {
  if (model.kind() == PerturbationKind::smoothed_linf)
    throw std::invalid_argument(
        "worst_case_perturbation: the smoothed adversary is expressed only through its penalty");
  const std::size_t d = theta.size();
  std::vector<double> delta(d, 0.0);
  if (model.is_clean()) return delta;

  const double c = model.c();
  const double q = model.q();
  bool all_zero = true;
  for (double v : theta)
    if (v != 0.0) all_zero = false;
  if (all_zero) return delta;  // clean samples at the first iterate

  if (std::isinf(q)) {
    for (std::size_t j = 0; j < d; ++j) delta[j] = -c * y * sign_pos(theta[j]);
    return delta;
  }
  if (q == 1.0) {
    std::size_t jstar = 0;
    double best = -1.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double a = std::fabs(theta[j]);
      if (a > best) {
        best = a;
        jstar = j;
      }
    }
    delta[jstar] = -c * y * sign_pos(theta[jstar]);
    return delta;
  }
  if (q == 2.0) {
    const double nrm = vec::norm2(theta);
    for (std::size_t j = 0; j < d; ++j) delta[j] = -c * y * theta[j] / nrm;
    return delta;
  }
  const NormEval sub = lp_norm_and_subgradient(theta, model.p());
  for (std::size_t j = 0; j < d; ++j) delta[j] = -c * y * sub.subgrad[j];
  return delta;
}

NormEval penalty(const PerturbationModel& model, std::span<const double> theta) {
  const std::size_t d = theta.size();
  switch (model.kind()) {
    case PerturbationKind::clean: {
      NormEval out;
      out.subgrad.assign(d, 0.0);
      return out;
    }
    case PerturbationKind::lq_ball: {
      NormEval out = lp_norm_and_subgradient(theta, model.p());
      out.value *= model.c();
      for (double& v : out.subgrad) v *= model.c();
      return out;
    }
    case PerturbationKind::smoothed_linf: {
      NormEval out;
      out.value = model.c() * smoothed_l1(theta, model.lambda());
      out.subgrad = smoothed_l1_grad(theta, model.lambda());
      for (double& v : out.subgrad) v *= model.c();
      return out;
    }
  }
  throw std::logic_error("penalty: unreachable");
}

double smoothed_l1(std::span<const double> theta, double lambda) {
  double s = 0.0;
  for (double t : theta) s += std::sqrt(t * t + lambda);
  return s;
}

std::vector<double> smoothed_l1_grad(std::span<const double> theta, double lambda) {
  std::vector<double> g(theta.size());
  for (std::size_t j = 0; j < theta.size(); ++j)
    g[j] = theta[j] / std::sqrt(theta[j] * theta[j] + lambda);
  return g;
}

}  // namespace mbl

#pragma once

#include <span>
#include <string>
#include <vector>

namespace mbl {

enum class PerturbationKind { clean, lq_ball, smoothed_linf };

// The adversary. LqBall is the ball {delta : ||delta||_q <= c}; SmoothedLinf
// is the box adversary whose loss contribution equals c*H_lambda(theta) with
// H_lambda(theta) = sum_j sqrt(theta_j^2 + lambda); Clean is c = 0.
class PerturbationModel {
 public:
  static PerturbationModel clean();
  static PerturbationModel lq_ball(double q, double c);  // q in [1, inf], c >= 0
  static PerturbationModel smoothed_linf(double c, double lambda);

  PerturbationKind kind() const { return kind_; }
  double q() const;       // lq_ball only
  double p() const;       // conjugate exponent of q, lq_ball only
  double c() const { return c_; }
  double lambda() const;  // smoothed_linf only
  bool is_clean() const { return kind_ == PerturbationKind::clean || c_ == 0.0; }
  std::string describe() const;

 private:
  PerturbationModel() = default;
  PerturbationKind kind_ = PerturbationKind::clean;
  double q_ = 0.0;
  double p_ = 0.0;
  double c_ = 0.0;
  double lambda_ = 0.0;
};

// 1/p + 1/q = 1 with 1/inf = 0. Throws for q < 1.
double dual_exponent(double q);

struct NormEval {
  double value = 0.0;
  std::vector<double> subgrad;
};

// ||theta||_p and one valid subgradient. Conventions: zero vector at
// theta = 0; p = 1 puts 0 at zero components; p = inf puts all mass on the
// lowest-index maximal-magnitude coordinate. Exponentials are evaluated in
// log space so q ~ 1000 (p ~ 1.001) is safe.
NormEval lp_norm_and_subgradient(std::span<const double> theta, double p);

// Closed-form minimizer of <delta, y*theta> over the lq ball of radius c.
// Returns zero at theta = 0 (clean samples at the first iterate).
std::vector<double> worst_case_perturbation(const PerturbationModel& model,
                                            std::span<const double> theta, double y);

// The additive penalty pen(theta) entering the equivalent loss form, and its
// (sub)gradient: c*||theta||_p, c*H_lambda(theta), or 0.
NormEval penalty(const PerturbationModel& model, std::span<const double> theta);

// Smoothed ell_1: H_lambda(theta) = sum_j sqrt(theta_j^2 + lambda).
double smoothed_l1(std::span<const double> theta, double lambda);
std::vector<double> smoothed_l1_grad(std::span<const double> theta, double lambda);

// ||v||_q for q in [1, inf], max-factored so huge q does not underflow.
double lq_norm(std::span<const double> v, double q);

}  // namespace mbl

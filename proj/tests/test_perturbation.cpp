#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "mbl/perturbation.hpp"
#include "mbl/vec.hpp"

using namespace mbl;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> random_theta(std::mt19937_64& rng, std::size_t d, double scale) {
  std::normal_distribution<double> gauss(0.0, scale);
  std::vector<double> v(d);
  for (double& x : v) x = gauss(rng);
  return v;
}

// Feasible point of the lq ball of radius c: uniform box sample pulled inside.
std::vector<double> random_feasible(std::mt19937_64& rng, std::size_t d, double q, double c) {
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::vector<double> v(d);
  for (double& x : v) x = unif(rng);
  const double nrm = lq_norm(v, q);
  double r = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  if (nrm > 0.0)
    for (double& x : v) x *= c * r / std::max(nrm, 1.0);
  return v;
}
}  // namespace

TEST_SUITE_BEGIN("perturbation");

TEST_CASE("dual exponent pairs") {
  CHECK(dual_exponent(2.0) == doctest::Approx(2.0));
  CHECK(dual_exponent(kInf) == doctest::Approx(1.0));
  CHECK(std::isinf(dual_exponent(1.0)));
  CHECK(dual_exponent(3.0) == doctest::Approx(1.5));
  CHECK_THROWS_AS(dual_exponent(0.5), std::invalid_argument);

  for (double q : {1.0, 1.5, 2.0, 3.0, 1000.0, kInf}) {
    const double p = dual_exponent(q);
    const double back = dual_exponent(p);
    if (std::isinf(q))
      CHECK(std::isinf(back));
    else
      CHECK(back == doctest::Approx(q).epsilon(1e-12));
  }
}

TEST_CASE("lp norm and subgradient closed forms") {
  {
    const std::vector<double> theta = {3.0, 4.0};
    const NormEval e = lp_norm_and_subgradient(theta, 2.0);
    CHECK(e.value == doctest::Approx(5.0));
    CHECK(e.subgrad[0] == doctest::Approx(0.6));
    CHECK(e.subgrad[1] == doctest::Approx(0.8));
  }
  {
    const std::vector<double> theta = {1.0, -2.0};
    const NormEval e = lp_norm_and_subgradient(theta, 1.0);
    CHECK(e.value == doctest::Approx(3.0));
    CHECK(e.subgrad[0] == doctest::Approx(1.0));
    CHECK(e.subgrad[1] == doctest::Approx(-1.0));
  }
  {
    // p = 1.5 on (1,1): value 2^(2/3), components 2^(-1/3)
    const std::vector<double> theta = {1.0, 1.0};
    const NormEval e = lp_norm_and_subgradient(theta, 1.5);
    CHECK(e.value == doctest::Approx(std::pow(2.0, 2.0 / 3.0)).epsilon(1e-12));
    CHECK(e.subgrad[0] == doctest::Approx(std::pow(2.0, -1.0 / 3.0)).epsilon(1e-12));
    // <subgrad, theta> = ||theta||_p and ||subgrad||_q = 1
    CHECK(vec::dot(e.subgrad, theta) == doctest::Approx(e.value).epsilon(1e-12));
    CHECK(lq_norm(e.subgrad, 3.0) == doctest::Approx(1.0).epsilon(1e-12));
  }
  {
    const std::vector<double> zero = {0.0, 0.0, 0.0};
    for (double p : {1.0, 1.5, 2.0, kInf}) {
      const NormEval e = lp_norm_and_subgradient(zero, p);
      CHECK(e.value == 0.0);
      for (double g : e.subgrad) CHECK(g == 0.0);
    }
  }
  {
    // p = inf tie: lowest index wins
    const std::vector<double> theta = {-2.0, 2.0};
    const NormEval e = lp_norm_and_subgradient(theta, kInf);
    CHECK(e.subgrad[0] == doctest::Approx(-1.0));
    CHECK(e.subgrad[1] == 0.0);
  }
  CHECK_THROWS_AS(lp_norm_and_subgradient(std::vector<double>{1.0}, 0.9), std::invalid_argument);
}

TEST_CASE("subgradient identity <s,theta> = ||theta||_p on random input") {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 200; ++rep) {
    const std::vector<double> theta = random_theta(rng, 1 + rep % 5, 2.0);
    for (double q : {1.0, 1.5, 2.0, 3.0, 1000.0, kInf}) {
      const double p = dual_exponent(q);
      const NormEval e = lp_norm_and_subgradient(theta, p);
      CHECK(vec::dot(e.subgrad, theta) == doctest::Approx(e.value).epsilon(1e-9));
    }
  }
}

TEST_CASE("worst-case perturbation closed forms") {
  {
    const std::vector<double> theta = {3.0, 4.0};
    const auto d = worst_case_perturbation(PerturbationModel::lq_ball(2.0, 1.0), theta, 1.0);
    CHECK(d[0] == doctest::Approx(-0.6));
    CHECK(d[1] == doctest::Approx(-0.8));
  }
  {
    const std::vector<double> theta = {10.0, -2.0};
    const auto d = worst_case_perturbation(PerturbationModel::lq_ball(kInf, 0.5), theta, 1.0);
    CHECK(d[0] == doctest::Approx(-0.5));
    CHECK(d[1] == doctest::Approx(0.5));
  }
  {
    const std::vector<double> theta = {1.0, 1.0};
    const auto d = worst_case_perturbation(PerturbationModel::lq_ball(3.0, 1.0), theta, 1.0);
    const double expect = -std::pow(2.0, -1.0 / 3.0);
    CHECK(d[0] == doctest::Approx(expect).epsilon(1e-12));
    CHECK(d[1] == doctest::Approx(expect).epsilon(1e-12));
    CHECK(lq_norm(d, 3.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(vec::dot(d, theta) ==
          doctest::Approx(-lq_norm(theta, 1.5)).epsilon(1e-12));
  }
  {
    // q = 1 puts everything on the largest coordinate, lowest index on ties
    const std::vector<double> theta = {2.0, -2.0};
    const auto d = worst_case_perturbation(PerturbationModel::lq_ball(1.0, 3.0), theta, 1.0);
    CHECK(d[0] == doctest::Approx(-3.0));
    CHECK(d[1] == 0.0);
  }
  {
    const std::vector<double> zero = {0.0, 0.0};
    const auto d = worst_case_perturbation(PerturbationModel::lq_ball(2.0, 1.0), zero, 1.0);
    CHECK(d[0] == 0.0);
    CHECK(d[1] == 0.0);
  }
  CHECK_THROWS_AS(worst_case_perturbation(PerturbationModel::smoothed_linf(1.0, 1.0),
                                          std::vector<double>{1.0}, 1.0),
                  std::invalid_argument);
}

TEST_CASE("dual-norm identity and ball feasibility over random draws") {
  std::mt19937_64 rng(20240515);
  const double qs[] = {1.0, 1.5, 2.0, 3.0, 1000.0, kInf};
  std::uniform_real_distribution<double> cdist(0.1, 2.0);
  for (int rep = 0; rep < 1000; ++rep) {
    const double q = qs[rep % 6];
    const double p = dual_exponent(q);
    const double c = cdist(rng);
    const double y = rep % 2 == 0 ? 1.0 : -1.0;
    std::vector<double> theta = random_theta(rng, 2 + rep % 4, 1.5);
    const auto delta = worst_case_perturbation(PerturbationModel::lq_ball(q, c), theta, y);
    const double lp = lq_norm(theta, p);
    double inner = 0.0;
    for (std::size_t j = 0; j < theta.size(); ++j) inner += delta[j] * y * theta[j];
    CHECK(inner == doctest::Approx(-c * lp).epsilon(1e-9));
    CHECK(lq_norm(delta, q) == doctest::Approx(c).epsilon(1e-9));
  }
}

TEST_CASE("closed-form perturbation beats sampled feasible points") {
  std::mt19937_64 rng(99);
  const double qs[] = {1.0, 1.5, 2.0, 3.0, 1000.0, kInf};
  for (int rep = 0; rep < 60; ++rep) {
    const double q = qs[rep % 6];
    const double c = 0.7;
    const double y = rep % 2 == 0 ? 1.0 : -1.0;
    const std::vector<double> theta = random_theta(rng, 3, 1.0);
    const auto delta = worst_case_perturbation(PerturbationModel::lq_ball(q, c), theta, y);
    double best = 0.0;
    for (std::size_t j = 0; j < theta.size(); ++j) best += delta[j] * y * theta[j];
    for (int s = 0; s < 2000; ++s) {
      const std::vector<double> trial = random_feasible(rng, 3, q, c);
      double v = 0.0;
      for (std::size_t j = 0; j < theta.size(); ++j) v += trial[j] * y * theta[j];
      CHECK(best <= v + 1e-12);
    }
  }
}

TEST_CASE("penalty forms") {
  {
    const std::vector<double> zero = {0.0, 0.0};
    const NormEval e = penalty(PerturbationModel::smoothed_linf(1.0, 1.0), zero);
    CHECK(e.value == doctest::Approx(2.0));
    CHECK(e.subgrad[0] == 0.0);
    CHECK(e.subgrad[1] == 0.0);
  }
  {
    const std::vector<double> theta = {1.0, -3.0};
    const NormEval e = penalty(PerturbationModel::lq_ball(kInf, 2.0), theta);
    CHECK(e.value == doctest::Approx(8.0));
    CHECK(e.subgrad[0] == doctest::Approx(2.0));
    CHECK(e.subgrad[1] == doctest::Approx(-2.0));
  }
  {
    const std::vector<double> theta = {1.0, -3.0};
    const NormEval e = penalty(PerturbationModel::smoothed_linf(1.0, 1e-6), theta);
    CHECK(std::fabs(e.value - 4.0) <= 2e-3);  // |H_l - ||.||_1| <= d*sqrt(lambda)
  }
  {
    const std::vector<double> theta = {0.3, -0.7};
    const NormEval e = penalty(PerturbationModel::clean(), theta);
    CHECK(e.value == 0.0);
    CHECK(e.subgrad[0] == 0.0);
  }
}

TEST_CASE("smoothing consistency and gradient check") {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> ldist(1e-8, 1.0);
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t d = 1 + rep % 5;
    const double lambda = ldist(rng);
    const std::vector<double> theta = random_theta(rng, d, 2.0);
    const double h = smoothed_l1(theta, lambda);
    const double l1 = vec::norm1(theta);
    CHECK(h >= l1);
    CHECK(h - l1 <= static_cast<double>(d) * std::sqrt(lambda) + 1e-12);

    const std::vector<double> g = smoothed_l1_grad(theta, lambda);
    for (std::size_t j = 0; j < d; ++j) {
      std::vector<double> hi(theta), lo(theta);
      hi[j] += 1e-6;
      lo[j] -= 1e-6;
      const double fd = (smoothed_l1(hi, lambda) - smoothed_l1(lo, lambda)) / 2e-6;
      CHECK(g[j] == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("model construction guards") {
  CHECK_THROWS_AS(PerturbationModel::lq_ball(0.5, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(PerturbationModel::lq_ball(2.0, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(PerturbationModel::smoothed_linf(1.0, 0.0), std::invalid_argument);
  const PerturbationModel m = PerturbationModel::lq_ball(1000.0, 0.5);
  CHECK(m.p() == doctest::Approx(1000.0 / 999.0).epsilon(1e-12));
  CHECK(PerturbationModel::lq_ball(2.0, 0.0).is_clean());
}

TEST_SUITE_END();

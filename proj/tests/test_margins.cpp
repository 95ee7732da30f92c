#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mbl/dataset.hpp"
#include "mbl/margins.hpp"
#include "mbl/vec.hpp"

using namespace mbl;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double angle_between(std::span<const double> a, std::span<const double> b) {
  const double c = vec::dot(a, b) / (vec::norm2(a) * vec::norm2(b));
  return std::acos(std::clamp(c, -1.0, 1.0));
}
}  // namespace

TEST_SUITE_BEGIN("margins");

TEST_CASE("paper-4pt ell_2 max margin is (0,1) with gamma 1") {
  const LabeledDataset ds = builtin_dataset("paper-4pt");
  const MarginCertificate cert = max_margin(ds, 2.0);
  CHECK(cert.gamma == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(std::fabs(cert.u[0]) < 1e-6);
  CHECK(cert.u[1] == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(cert.converged);
  CHECK(cert.residual <= 1e-8);
  // all four points attain margin 1
  REQUIRE(cert.active.size() == 4);
}

TEST_CASE("counterexample margins match the paper") {
  const LabeledDataset ds = builtin_dataset("paper-counterexample");

  const MarginCertificate c2 = max_margin(ds, 2.0);
  CHECK(c2.gamma == doctest::Approx(std::sqrt(101.0)).epsilon(1e-8));
  CHECK(c2.u[0] == doctest::Approx(10.0 / std::sqrt(101.0)).epsilon(1e-8));
  CHECK(c2.u[1] == doctest::Approx(1.0 / std::sqrt(101.0)).epsilon(1e-8));
  CHECK(c2.active.size() == 2);  // the two signed points coincide

  const MarginCertificate cinf = max_margin(ds, kInf);
  CHECK(cinf.gamma == doctest::Approx(10.0).epsilon(1e-7));
  CHECK(cinf.u[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::fabs(cinf.u[1]) < 1e-6);
}

TEST_CASE("robust mixed margin on the counterexample matches the paper") {
  const LabeledDataset ds = builtin_dataset("paper-counterexample");
  const MixedMarginCertificate cert =
      robust_mixed_margin(ds, PerturbationModel::lq_ball(kInf, 0.5));
  const double s = std::sqrt(362.0);
  CHECK(cert.u[0] == doctest::Approx(19.0 / s).epsilon(1e-6));
  CHECK(cert.u[1] == doctest::Approx(1.0 / s).epsilon(1e-6));
  CHECK(cert.gamma == doctest::Approx(181.0 / s).epsilon(1e-8));
  CHECK(vec::norm2(cert.u) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("robust margin preconditions and degenerate radii") {
  const LabeledDataset ds = builtin_dataset("paper-4pt");
  // c >= gamma_q is the supercritical regime: refused
  CHECK_THROWS_AS(robust_mixed_margin(ds, PerturbationModel::lq_ball(2.0, 1.5)),
                  std::invalid_argument);
  // c = 0 reduces to the plain ell_2 margin
  const MixedMarginCertificate zero = robust_mixed_margin(ds, PerturbationModel::lq_ball(3.0, 0.0));
  const MarginCertificate plain = max_margin(ds, 2.0);
  CHECK(zero.gamma == doctest::Approx(plain.gamma).epsilon(1e-8));
  CHECK(vec::dot(zero.u, plain.u) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("brute oracle sanity on hand values") {
  const LabeledDataset four = builtin_dataset("paper-4pt");
  const BruteMargin a = brute_margin_2d(four, 2.0, 0.0, 1000000);
  CHECK(a.gamma == doctest::Approx(1.0).epsilon(1e-8));

  const LabeledDataset ce = builtin_dataset("paper-counterexample");
  const BruteMargin b = brute_margin_2d(ce, kInf, 0.5, 100000);
  CHECK(b.gamma == doctest::Approx(181.0 / std::sqrt(362.0)).epsilon(1e-6));

  LabeledDataset one;
  one.name = "one";
  one.n = 1;
  one.d = 2;
  one.x = {1.0, 0.0};
  one.y = {1.0};
  const BruteMargin c = brute_margin_2d(one, 2.0, 0.0, 4096);
  CHECK(c.gamma == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(c.u[0] == doctest::Approx(1.0).epsilon(1e-6));

  CHECK_THROWS_AS(brute_margin_2d(generate_separable(1, 6, 3, 0.1), 2.0, 0.0, 4096),
                  std::invalid_argument);
}

TEST_CASE("solver agrees with the brute oracle across datasets and exponents") {
  std::vector<LabeledDataset> sets = {builtin_dataset("paper-4pt"),
                                      builtin_dataset("paper-counterexample")};
  for (std::uint64_t seed = 1; seed <= 20; ++seed)
    sets.push_back(generate_separable(seed, 12, 2, 0.1));

  for (const LabeledDataset& ds : sets) {
    for (double q : {1.0, 2.0, kInf}) {
      const MarginCertificate cert = max_margin(ds, q);
      const BruteMargin oracle = brute_margin_2d(ds, q, 0.0, 65536);
      CHECK(std::fabs(cert.gamma - oracle.gamma) <= 1e-4);
      if (cert.unique_direction && q == 2.0)
        CHECK(angle_between(cert.u, oracle.u) <= 1e-3);

      if (cert.gamma > 1e-6) {
        const double c = 0.5 * cert.gamma;
        const MixedMarginCertificate mixed =
            robust_mixed_margin(ds, PerturbationModel::lq_ball(q, c));
        const BruteMargin moracle = brute_margin_2d(ds, q, c, 65536);
        CHECK(std::fabs(mixed.gamma - moracle.gamma) <= 1e-4);
      }
    }
  }
}

TEST_CASE("identity gamma_{2,2}(c) = gamma_2 - c and u = u_2") {
  for (std::uint64_t seed = 30; seed < 50; ++seed) {
    const LabeledDataset ds = generate_separable(seed, 16, 2, 0.12);
    const MarginCertificate g2 = max_margin(ds, 2.0);
    for (double f : {0.1, 0.5, 0.9}) {
      const double c = f * g2.gamma;
      const MixedMarginCertificate mixed =
          robust_mixed_margin(ds, PerturbationModel::lq_ball(2.0, c));
      CHECK(mixed.gamma == doctest::Approx(g2.gamma - c).epsilon(1e-5));
      if (f == 0.5) CHECK(vec::dist2(mixed.u, g2.u) <= 1e-6);
    }
  }
}

TEST_CASE("robust margin strictly decreases in c") {
  for (std::uint64_t seed : {5u, 6u}) {
    const LabeledDataset ds = generate_separable(seed, 10, 2, 0.2);
    for (double q : {2.0, kInf}) {
      const double gq = max_margin(ds, q).gamma;
      double prev = kInf;
      for (double f : {0.0, 0.25, 0.5, 0.75}) {
        const double g = robust_mixed_margin(ds, PerturbationModel::lq_ball(q, f * gq)).gamma;
        CHECK(g < prev);
        prev = g;
      }
    }
  }
}

TEST_CASE("certificate feasibility invariants") {
  for (std::uint64_t seed : {71u, 72u, 73u}) {
    const LabeledDataset ds = generate_separable(seed, 9, 2, 0.15);
    for (double q : {1.0, 1.5, 2.0, 3.0, kInf}) {
      const MarginCertificate cert = max_margin(ds, q);
      CHECK(lq_norm(cert.u, dual_exponent(q)) == doctest::Approx(1.0).epsilon(1e-10));
      double m = kInf;
      for (std::size_t i = 0; i < ds.n; ++i) m = std::min(m, ds.signed_dot(i, cert.u));
      CHECK(std::fabs(m - cert.gamma) <= cert.residual + 1e-12);
      CHECK(cert.gamma > 0.0);  // generated data is separable
    }
  }
}

TEST_CASE("smoothed certificate approaches the exact ell_inf certificate") {
  const LabeledDataset ds = builtin_dataset("paper-counterexample");
  const MixedMarginCertificate exact =
      robust_mixed_margin(ds, PerturbationModel::lq_ball(kInf, 0.5));
  const MixedMarginCertificate smoothed =
      robust_mixed_margin(ds, PerturbationModel::smoothed_linf(0.5, 1e-6));
  CHECK(vec::dist2(smoothed.u, exact.u) <= 1e-2);
  CHECK(smoothed.gamma <= exact.gamma + 1e-9);  // H_lambda >= ||.||_1
  CHECK(smoothed.lambda.has_value());

  const BruteMargin oracle = brute_smoothed_margin_2d(ds, 0.5, 1e-6, 65536);
  CHECK(std::fabs(smoothed.gamma - oracle.gamma) <= 1e-6);
}

TEST_CASE("support vectors") {
  const LabeledDataset four = builtin_dataset("paper-4pt");
  const MarginCertificate cert = max_margin(four, 2.0);
  const auto sv = support_vectors(four, cert, 1e-6);
  REQUIRE(sv.size() == 4);

  const LabeledDataset ce = builtin_dataset("paper-counterexample");
  const auto sv2 = support_vectors(ce, max_margin(ce, 2.0), 1e-6);
  CHECK(sv2.size() == 2);

  // a strictly interior point is excluded
  LabeledDataset ds;
  ds.name = "interior";
  ds.n = 3;
  ds.d = 2;
  ds.x = {0.0, 1.0, 0.0, -1.0, 0.0, 5.0};
  ds.y = {1.0, -1.0, 1.0};
  const MarginCertificate c3 = max_margin(ds, 2.0);
  const auto sv3 = support_vectors(ds, c3, 1e-6);
  CHECK(sv3.size() == 2);
  for (std::size_t i : sv3) CHECK(i != 2);
}

TEST_CASE("alpha and K constants") {
  const LabeledDataset four = builtin_dataset("paper-4pt");
  const DiagnosticsConstants k4 = alpha_and_K(four, max_margin(four, 2.0));
  CHECK(k4.sv_spans);
  CHECK(k4.alpha_exact);
  REQUIRE(k4.alpha.has_value());
  CHECK(*k4.alpha == doctest::Approx(0.5).epsilon(1e-8));
  REQUIRE(k4.K.has_value());
  CHECK(*k4.K == doctest::Approx((1.0 + std::log(4.0)) / 0.5 + 20.0).epsilon(1e-8));

  // both signed points coincide: rank-1 SV set does not span R^2
  const LabeledDataset ce = builtin_dataset("paper-counterexample");
  const DiagnosticsConstants kce = alpha_and_K(ce, max_margin(ce, 2.0));
  CHECK_FALSE(kce.sv_spans);
  CHECK_FALSE(kce.alpha.has_value());
  CHECK_FALSE(kce.K.has_value());

  // d = 1: orthogonal complement is trivial, alpha undefined but spanning
  LabeledDataset line;
  line.name = "line";
  line.n = 2;
  line.d = 1;
  line.x = {1.0, -0.5};
  line.y = {1.0, -1.0};
  const DiagnosticsConstants k1 = alpha_and_K(line, max_margin(line, 2.0));
  CHECK(k1.sv_spans);
  CHECK_FALSE(k1.alpha.has_value());
}

TEST_CASE("alpha estimate for d = 3 upper-bounds a constructed optimum") {
  // Eight points symmetric around u_2 = e_3 with orthogonal spread b.
  const double b = 0.3, a = 0.9;
  LabeledDataset ds;
  ds.name = "d3";
  ds.n = 8;
  ds.d = 3;
  ds.x = {b,  0.0, a,  -b, 0.0, a,  0.0, b,  a,  0.0, -b, a,
          -b, 0.0, -a, b,  0.0, -a, 0.0, -b, -a, 0.0, b,  -a};
  ds.y = {1.0, 1.0, 1.0, 1.0, -1.0, -1.0, -1.0, -1.0};

  const MarginCertificate cert = max_margin(ds, 2.0);
  CHECK(cert.gamma == doctest::Approx(a).epsilon(1e-4));
  const DiagnosticsConstants k3 = alpha_and_K(ds, cert);
  CHECK(k3.sv_spans);
  CHECK_FALSE(k3.alpha_exact);
  REQUIRE(k3.alpha.has_value());
  // true alpha is b/sqrt(2) (attained at the diagonal xi); the multi-start
  // estimate is an upper bound and should land close.
  const double truth = b / std::sqrt(2.0);
  CHECK(*k3.alpha >= truth - 1e-6);
  CHECK(*k3.alpha <= truth + 0.05);
}

TEST_CASE("non-separable data yields gamma <= 0 without error") {
  LabeledDataset ds;
  ds.name = "nonsep";
  ds.n = 2;
  ds.d = 2;
  ds.x = {1.0, 0.0, 1.0, 0.0};
  ds.y = {1.0, -1.0};
  const MarginCertificate cert = max_margin(ds, 2.0);
  CHECK(cert.gamma <= 0.0);
  CHECK(cert.active.empty());
}

TEST_CASE("exponent domain errors") {
  const LabeledDataset ds = builtin_dataset("paper-4pt");
  CHECK_THROWS_AS(max_margin(ds, 0.5), std::invalid_argument);
}

TEST_SUITE_END();

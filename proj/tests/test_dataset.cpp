#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "mbl/dataset.hpp"
#include "mbl/margins.hpp"
#include "mbl/vec.hpp"

using namespace mbl;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_SUITE_BEGIN("dataset");

TEST_CASE("builtin presets") {
  const LabeledDataset four = builtin_dataset("paper-4pt");
  CHECK(four.n == 4);
  CHECK(four.d == 2);
  CHECK(four.x[0] == -0.5);
  CHECK(four.y[0] == 1.0);
  CHECK(four.x[6] == 2.0);
  // signed points: z2 = y2*x2 = (0.5, 1)
  const std::vector<double> z1 = four.signed_point(1);
  CHECK(z1[0] == 0.5);
  CHECK(z1[1] == 1.0);

  const LabeledDataset ce = builtin_dataset("paper-counterexample");
  CHECK(ce.n == 2);
  const std::vector<double> z = ce.signed_point(1);
  CHECK(z[0] == 10.0);
  CHECK(z[1] == 1.0);

  CHECK_THROWS_AS(builtin_dataset("nope"), std::invalid_argument);
  CHECK_THROWS_AS(load_dataset("no-such-file.csv"), std::invalid_argument);
}

TEST_CASE("csv parsing") {
  const std::string path = temp_path("mbl_ds_parse.csv");
  {
    std::ofstream out(path);
    out << "x1,x2,y\r\n1,0,1\r\n-0.5,2.5,-1\n";
  }
  const LabeledDataset ds = load_dataset(path);
  CHECK(ds.n == 2);
  CHECK(ds.d == 2);
  CHECK(ds.x[0] == 1.0);
  CHECK(ds.x[3] == 2.5);
  CHECK(ds.y[1] == -1.0);

  {
    std::ofstream out(path);
    out << "x1,x2,y\n1,oops,1\n";
  }
  CHECK_THROWS_WITH_AS(load_dataset_csv(path), doctest::Contains("line 2"), std::runtime_error);

  {
    std::ofstream out(path);
    out << "x1,x2,y\n1,0,2\n";
  }
  CHECK_THROWS_AS(load_dataset_csv(path), std::invalid_argument);

  {
    std::ofstream out(path);
    out << "x1,x2,y\n1,0\n";
  }
  CHECK_THROWS_AS(load_dataset_csv(path), std::runtime_error);
  std::remove(path.c_str());
}

TEST_CASE("csv round-trip is bit exact") {
  const LabeledDataset ds = generate_separable(3, 12, 3, 0.1);
  const std::string path = temp_path("mbl_ds_roundtrip.csv");
  save_dataset_csv(ds, path);
  const LabeledDataset back = load_dataset_csv(path);
  REQUIRE(back.n == ds.n);
  REQUIRE(back.d == ds.d);
  for (std::size_t k = 0; k < ds.x.size(); ++k) CHECK(back.x[k] == ds.x[k]);
  for (std::size_t i = 0; i < ds.n; ++i) CHECK(back.y[i] == ds.y[i]);
  std::remove(path.c_str());
}

TEST_CASE("generate_separable determinism and guarantees") {
  const LabeledDataset a = generate_separable(1, 10, 2, 0.1);
  const LabeledDataset b = generate_separable(1, 10, 2, 0.1);
  CHECK(a.x == b.x);
  CHECK(a.y == b.y);

  CHECK(a.max_point_norm2() <= 1.0 + 1e-12);
  const SeparabilityReport rep = check_separability(a);
  CHECK(rep.separable);
  CHECK(rep.min_margin > 1e-8);

  const LabeledDataset c = generate_separable(2, 10, 2, 0.1);
  CHECK(a.x != c.x);

  CHECK_THROWS_AS(generate_separable(1, 1, 2, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(generate_separable(1, 10, 2, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(generate_separable(1, 10, 2, -0.5), std::invalid_argument);
}

TEST_CASE("generated margin meets the target") {
  const LabeledDataset ds = generate_separable(7, 50, 5, 0.05);
  CHECK(ds.max_point_norm2() <= 1.0 + 1e-12);
  const MarginCertificate cert = max_margin(ds, 2.0);
  CHECK(cert.gamma >= 0.05);
}

TEST_CASE("separability checks") {
  const SeparabilityReport four = check_separability(builtin_dataset("paper-4pt"));
  CHECK(four.separable);
  CHECK(four.min_margin == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(std::fabs(four.witness[0]) < 1e-6);
  CHECK(four.witness[1] == doctest::Approx(1.0).epsilon(1e-8));

  const SeparabilityReport ce = check_separability(builtin_dataset("paper-counterexample"));
  CHECK(ce.separable);

  LabeledDataset coincident;
  coincident.name = "coincident";
  coincident.n = 2;
  coincident.d = 2;
  coincident.x = {1.0, 1.0, 1.0, 1.0};
  coincident.y = {1.0, -1.0};
  CHECK_FALSE(check_separability(coincident).separable);
}

TEST_CASE("rescale to unit ball") {
  const LabeledDataset four = builtin_dataset("paper-4pt");
  const auto [scaled, scale] = rescale_to_unit_ball(four);
  CHECK(scale == doctest::Approx(1.0 / std::sqrt(5.0)).epsilon(1e-15));
  CHECK(scaled.max_point_norm2() <= 1.0 + 1e-12);
  CHECK(scaled.x[6] == doctest::Approx(2.0 / std::sqrt(5.0)).epsilon(1e-15));
  CHECK(scaled.y == four.y);

  // gamma_2 scales by the same factor
  const MarginCertificate cert = max_margin(scaled, 2.0);
  CHECK(cert.gamma == doctest::Approx(1.0 / std::sqrt(5.0)).epsilon(1e-8));

  // a dataset touching the unit sphere is untouched
  LabeledDataset unit;
  unit.name = "unit";
  unit.n = 2;
  unit.d = 2;
  unit.x = {1.0, 0.0, 0.0, -1.0};
  unit.y = {1.0, -1.0};
  const auto [same, s1] = rescale_to_unit_ball(unit);
  CHECK(s1 == 1.0);
  CHECK(same.x == unit.x);

  LabeledDataset zeros;
  zeros.name = "zeros";
  zeros.n = 1;
  zeros.d = 2;
  zeros.x = {0.0, 0.0};
  zeros.y = {1.0};
  CHECK_THROWS_AS(rescale_to_unit_ball(zeros), std::invalid_argument);
}

TEST_CASE("margin scale equivariance") {
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    const LabeledDataset ds = generate_separable(seed, 14, 2, 0.15);
    LabeledDataset scaled = ds;
    const double s = 3.7;
    for (double& v : scaled.x) v *= s;
    for (double q : {1.0, 2.0, std::numeric_limits<double>::infinity()}) {
      const MarginCertificate a = max_margin(ds, q);
      const MarginCertificate b = max_margin(scaled, q);
      CHECK(b.gamma == doctest::Approx(s * a.gamma).epsilon(1e-6));
      CHECK(vec::dot(vec::unit2(a.u), vec::unit2(b.u)) == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
}

TEST_CASE("validation catches malformed data") {
  LabeledDataset bad;
  bad.name = "bad";
  bad.n = 1;
  bad.d = 1;
  bad.x = {std::numeric_limits<double>::quiet_NaN()};
  bad.y = {1.0};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad.x = {1.0};
  bad.y = {0.5};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_SUITE_END();

#include "mbl/dataset.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>

#include "mbl/csv.hpp"
#include "mbl/margins.hpp"
#include "mbl/vec.hpp"

namespace mbl {

std::vector<double> LabeledDataset::signed_point(std::size_t i) const {
  std::vector<double> zi(d);
  for (std::size_t j = 0; j < d; ++j) zi[j] = y[i] * x[i * d + j];
  return zi;
}

double LabeledDataset::signed_dot(std::size_t i, std::span<const double> theta) const {
  double s = 0.0;
  for (std::size_t j = 0; j < d; ++j) s += y[i] * x[i * d + j] * theta[j];
  return s;
}

std::vector<double> LabeledDataset::mean_signed_point() const {
  std::vector<double> m(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) m[j] += y[i] * x[i * d + j];
  for (double& v : m) v /= static_cast<double>(n);
  return m;
}

double LabeledDataset::max_point_norm2() const {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, vec::norm2(point(i)));
  return m;
}

void LabeledDataset::validate() const {
  if (n < 1) throw std::invalid_argument("dataset '" + name + "': n must be >= 1");
  if (d < 1) throw std::invalid_argument("dataset '" + name + "': d must be >= 1");
  if (x.size() != n * d || y.size() != n)
    throw std::invalid_argument("dataset '" + name + "': shape mismatch");
  for (double v : x)
    if (!std::isfinite(v))
      throw std::invalid_argument("dataset '" + name + "': non-finite feature entry");
  for (double v : y)
    if (v != 1.0 && v != -1.0)
      throw std::invalid_argument("dataset '" + name + "': label outside {-1,+1}");
}

LabeledDataset builtin_dataset(const std::string& name) {
  LabeledDataset ds;
  ds.name = name;
  if (name == "paper-4pt") {
    ds.n = 4;
    ds.d = 2;
    ds.x = {-0.5, 1.0, -0.5, -1.0, -0.75, -1.0, 2.0, 1.0};
    ds.y = {1.0, -1.0, -1.0, 1.0};
  } else if (name == "paper-counterexample") {
    ds.n = 2;
    ds.d = 2;
    ds.x = {10.0, 1.0, -10.0, -1.0};
    ds.y = {1.0, -1.0};
  } else {
    throw std::invalid_argument("unknown builtin dataset '" + name + "'");
  }
  ds.validate();
  return ds;
}

LabeledDataset load_dataset(const std::string& source) {
  if (source == "paper-4pt" || source == "paper-counterexample") return builtin_dataset(source);
  if (std::filesystem::exists(source)) return load_dataset_csv(source);
  throw std::invalid_argument("dataset source '" + source +
                              "' is neither a builtin name nor an existing file");
}

LabeledDataset load_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("dataset: cannot open '" + path + "'");
  LabeledDataset ds;
  ds.name = std::filesystem::path(path).stem().string();
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::size_t cols = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
      if (ch == ',') {
        fields.push_back(cur);
        cur.clear();
      } else
        cur.push_back(ch);
    }
    fields.push_back(cur);
    if (!header_seen) {
      cols = fields.size();
      if (cols < 2)
        throw std::runtime_error("dataset: header needs at least x1,y at line 1 of '" + path +
                                 "'");
      ds.d = cols - 1;
      header_seen = true;
      continue;
    }
    if (fields.size() != cols)
      throw std::runtime_error("dataset: expected " + std::to_string(cols) + " fields, got " +
                               std::to_string(fields.size()) + " at line " +
                               std::to_string(line_no) + " of '" + path + "'");
    for (std::size_t j = 0; j + 1 < cols; ++j) ds.x.push_back(parse_double(fields[j], line_no));
    const double label = parse_double(fields[cols - 1], line_no);
    if (label != 1.0 && label != -1.0)
      throw std::invalid_argument("dataset: label " + fields[cols - 1] +
                                  " outside {-1,+1} at line " + std::to_string(line_no) + " of '" +
                                  path + "'");
    ds.y.push_back(label);
    ++ds.n;
  }
  if (!header_seen) throw std::runtime_error("dataset: '" + path + "' has no header row");
  ds.validate();
  return ds;
}

void save_dataset_csv(const LabeledDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("dataset: cannot write '" + path + "'");
  for (std::size_t j = 0; j < ds.d; ++j) out << "x" << (j + 1) << ",";
  out << "y\n";
  for (std::size_t i = 0; i < ds.n; ++i) {
    for (std::size_t j = 0; j < ds.d; ++j) out << format_double(ds.x[i * ds.d + j]) << ",";
    out << (ds.y[i] > 0 ? "1" : "-1") << "\n";
  }
}

LabeledDataset generate_separable(std::uint64_t seed, std::size_t n, std::size_t d,
                                  double target_margin) {
  if (n < 2) throw std::invalid_argument("generate_separable: n must be >= 2");
  if (d < 1) throw std::invalid_argument("generate_separable: d must be >= 1");
  if (!(target_margin > 0.0))
    throw std::invalid_argument("generate_separable: target_margin must be > 0");
  if (target_margin >= 1.0)
    throw std::invalid_argument(
        "generate_separable: target_margin >= 1 is infeasible inside the unit ball");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<double> u(d);
  double nu = 0.0;
  while (nu < 1e-12) {
    for (double& v : u) v = gauss(rng);
    nu = vec::norm2(u);
  }
  for (double& v : u) v /= nu;

  LabeledDataset ds;
  ds.name = "generated-" + std::to_string(seed);
  ds.n = n;
  ds.d = d;
  ds.x.assign(n * d, 0.0);
  ds.y.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double label = (i % 2 == 0) ? 1.0 : -1.0;
    // Margin coordinate a in [m, 1); orthogonal radius keeps ||x|| <= 1.
    const double a = target_margin + (1.0 - target_margin) * unif(rng);
    std::vector<double> v(d, 0.0);
    if (d > 1) {
      double nv = 0.0;
      while (nv < 1e-12) {
        for (double& w : v) w = gauss(rng);
        double proj = vec::dot(v, u);
        for (std::size_t j = 0; j < d; ++j) v[j] -= proj * u[j];
        nv = vec::norm2(v);
      }
      for (double& w : v) w /= nv;
    }
    const double b = d > 1 ? std::sqrt(1.0 - a * a) * unif(rng) : 0.0;
    for (std::size_t j = 0; j < d; ++j) ds.x[i * d + j] = label * a * u[j] + b * v[j];
    ds.y[i] = label;
  }
  ds.validate();
  return ds;
}

SeparabilityReport check_separability(const LabeledDataset& ds) {
  ds.validate();
  const MarginCertificate cert = max_margin(ds, 2.0);
  SeparabilityReport report;
  report.separable = cert.gamma > kSeparabilityTol;
  report.witness = cert.u;
  double mm = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ds.n; ++i) mm = std::min(mm, ds.signed_dot(i, cert.u));
  report.min_margin = mm;
  return report;
}

std::pair<LabeledDataset, double> rescale_to_unit_ball(const LabeledDataset& ds) {
  ds.validate();
  const double m = ds.max_point_norm2();
  if (m == 0.0)
    throw std::invalid_argument("rescale_to_unit_ball: all-zero dataset is degenerate");
  const double scale = 1.0 / m;
  LabeledDataset out = ds;
  out.name = ds.name + "-rescaled";
  for (double& v : out.x) v *= scale;
  return {out, scale};
}

}  // namespace mbl

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mbl {

// Binary classification sample set. Points are stored row-major; labels are
// exactly -1 or +1. Immutable after construction by convention: every
// operation returns a new dataset.
struct LabeledDataset {
  std::string name;
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<double> x;  // n*d, row-major
  std::vector<double> y;  // entries in {-1, +1}

  std::span<const double> point(std::size_t i) const { return {x.data() + i * d, d}; }
  double z(std::size_t i, std::size_t j) const { return y[i] * x[i * d + j]; }
  // Signed point z_i = y_i * x_i, recomputed on demand.
  std::vector<double> signed_point(std::size_t i) const;
  // <z_i, theta>
  double signed_dot(std::size_t i, std::span<const double> theta) const;
  std::vector<double> mean_signed_point() const;
  double max_point_norm2() const;

  // Throws std::invalid_argument when an invariant is violated.
  void validate() const;
};

struct SeparabilityReport {
  bool separable = false;
  std::vector<double> witness;  // max-margin direction when separable
  double min_margin = 0.0;      // min_i z_i^T witness
};

// Builtin presets: "paper-4pt", "paper-counterexample".
LabeledDataset builtin_dataset(const std::string& name);

// Accepts a builtin name or a CSV path (format: header x1,...,xd,y).
LabeledDataset load_dataset(const std::string& source);
LabeledDataset load_dataset_csv(const std::string& path);
void save_dataset_csv(const LabeledDataset& ds, const std::string& path);

// Deterministic in seed. Guarantees linear separability with ell_2 margin at
// least target_margin and max_i ||x_i||_2 <= 1.
LabeledDataset generate_separable(std::uint64_t seed, std::size_t n, std::size_t d,
                                  double target_margin);

// Solves the ell_2 max-margin problem; separable iff gamma_2 > 1e-8.
SeparabilityReport check_separability(const LabeledDataset& ds);

// Returns (scaled dataset, scale) with scale = 1/max_i ||x_i||_2.
std::pair<LabeledDataset, double> rescale_to_unit_ball(const LabeledDataset& ds);

inline constexpr double kSeparabilityTol = 1e-8;

}  // namespace mbl

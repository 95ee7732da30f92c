#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "mbl/dataset.hpp"
#include "mbl/perturbation.hpp"

namespace mbl {

// Solution of max_{||u||_p = 1} min_i z_i^T u for p conjugate to q.
struct MarginCertificate {
  std::vector<double> u;
  double gamma = 0.0;
  double q = 2.0;
  std::vector<std::size_t> active;  // margin-attaining sample indices
  double residual = 0.0;            // optimality gap estimate
  bool converged = false;
  bool unique_direction = true;     // false when the 2-D oracle finds a distinct optimum
};

// Solution of max_{||u||_2 = 1} min_i (z_i^T u - c*||u||_p), or the smoothed
// variant with c*H_lambda(u).
struct MixedMarginCertificate {
  std::vector<double> u;
  double gamma = 0.0;
  double q = 2.0;
  double c = 0.0;
  std::optional<double> lambda;
  std::vector<std::size_t> active;
  double residual = 0.0;
  bool converged = false;
};

struct DiagnosticsConstants {
  std::optional<double> alpha;  // absent when SV(S) does not span R^d, or d = 1
  std::optional<double> K;      // (1 + ln n)/alpha + 20
  bool sv_spans = false;
  bool alpha_exact = false;  // exact enumeration only for d = 2
};

struct MarginSolveOptions {
  long budget = 1'000'000;        // supergradient iteration cap
  double residual_tol = 1e-8;     // converged iff residual <= this
  std::size_t brute_resolution = 32768;  // 2-D seeding grid
};

MarginCertificate max_margin(const LabeledDataset& ds, double q,
                             const MarginSolveOptions& opts = {});

// Requires c < gamma_q for LqBall (checked by solving max_margin first); for
// SmoothedLinf feasibility shows a posteriori as gamma > 0.
MixedMarginCertificate robust_mixed_margin(const LabeledDataset& ds,
                                           const PerturbationModel& model,
                                           const MarginSolveOptions& opts = {});

struct BruteMargin {
  double gamma = 0.0;
  std::vector<double> u;
};

// Independent 2-D oracle: scans `resolution` equally spaced directions
// (ell_p-normalized when c = 0, ell_2-normalized otherwise) and refines the
// best bracket by ternary search to interval width 1e-10.
BruteMargin brute_margin_2d(const LabeledDataset& ds, double q, double c,
                            std::size_t resolution);
BruteMargin brute_smoothed_margin_2d(const LabeledDataset& ds, double c, double lambda,
                                     std::size_t resolution);

std::vector<std::size_t> support_vectors(const LabeledDataset& ds,
                                         const MarginCertificate& cert, double tol);

// alpha(S) = min over unit xi orthogonal to u_2 of max over SV of <xi, z>;
// exact for d = 2, multi-start estimate (upper bound) for d > 2.
DiagnosticsConstants alpha_and_K(const LabeledDataset& ds, const MarginCertificate& cert_q2);

}  // namespace mbl

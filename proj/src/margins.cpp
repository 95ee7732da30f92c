#include "mbl/margins.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include "mbl/vec.hpp"

namespace mbl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// min_i z_i^T theta and one attaining index.
std::pair<double, std::size_t> min_signed_margin(const LabeledDataset& ds,
                                                 std::span<const double> theta) {
  double best = kInf;
  std::size_t arg = 0;
  for (std::size_t i = 0; i < ds.n; ++i) {
    const double v = ds.signed_dot(i, theta);
    if (v < best) {
      best = v;
      arg = i;
    }
  }
  return {best, arg};
}

void normalize_lp(std::vector<double>& theta, double p) {
  const double nrm = lq_norm(theta, p);
  if (nrm > 0.0)
    for (double& v : theta) v /= nrm;
}

// Euclidean projection onto the unit ell_1 ball (sorted-threshold rule).
void project_l1_ball(std::vector<double>& theta) {
  if (vec::norm1(theta) <= 1.0) return;
  std::vector<double> a(theta.size());
  for (std::size_t j = 0; j < a.size(); ++j) a[j] = std::fabs(theta[j]);
  std::sort(a.begin(), a.end(), std::greater<double>());
  double csum = 0.0, tau = 0.0;
  std::size_t k = 0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    csum += a[j];
    const double t = (csum - 1.0) / static_cast<double>(j + 1);
    if (a[j] > t) {
      tau = t;
      k = j + 1;
    }
  }
  (void)k;
  for (double& v : theta) {
    const double m = std::max(std::fabs(v) - tau, 0.0);
    v = v > 0.0 ? m : -m;
  }
}

// Projection onto the unit ell_p ball; radial scaling for p outside {1,2,inf}
// (the optimum lies on the sphere, so this preserves it).
void project_lp_ball(std::vector<double>& theta, double p) {
  if (p == 1.0) {
    project_l1_ball(theta);
    return;
  }
  if (std::isinf(p)) {
    for (double& v : theta) v = std::clamp(v, -1.0, 1.0);
    return;
  }
  const double nrm = lq_norm(theta, p);
  if (nrm > 1.0)
    for (double& v : theta) v /= nrm;
}

struct ObjectiveEval {
  double value = 0.0;
  std::vector<double> supergrad;
};

// One concave max-min margin objective; pen() distinguishes plain (0),
// mixed (c*||.||_p) and smoothed (c*H_lambda) variants.
struct MarginProblem {
  const LabeledDataset* ds = nullptr;
  double c = 0.0;
  double p = 2.0;                  // penalty exponent (mixed)
  std::optional<double> lambda;    // smoothed variant
  bool sphere_p = false;           // plain margin: iterate lives on the ell_p sphere
  double ball_p = 2.0;             // constraint ball exponent

  ObjectiveEval eval(std::span<const double> theta) const {
    ObjectiveEval out;
    auto [fmin, arg] = min_signed_margin(*ds, theta);
    out.value = fmin;
    out.supergrad = ds->signed_point(arg);
    if (c > 0.0) {
      if (lambda.has_value()) {
        out.value -= c * smoothed_l1(theta, *lambda);
        std::vector<double> g = smoothed_l1_grad(theta, *lambda);
        for (std::size_t j = 0; j < g.size(); ++j) out.supergrad[j] -= c * g[j];
      } else {
        const NormEval pen = lp_norm_and_subgradient(theta, p);
        out.value -= c * pen.value;
        for (std::size_t j = 0; j < pen.subgrad.size(); ++j)
          out.supergrad[j] -= c * pen.subgrad[j];
      }
    }
    return out;
  }

  void project(std::vector<double>& theta) const {
    if (sphere_p)
      normalize_lp(theta, ball_p);
    else
      project_lp_ball(theta, ball_p);
  }

  // Support function of the constraint ball, for the averaged-supergradient
  // upper bound F* <= mean(F_k - <g_k, th_k>) + sup_{||u|| <= 1} <mean g, u>.
  double ball_support(std::span<const double> g) const { return lq_norm(g, dual_exponent(ball_p)); }
};

struct AscentResult {
  std::vector<double> theta;
  double value = -kInf;
  double upper_bound = kInf;
  long iterations = 0;
};

// Projected supergradient ascent with Polyak-style steps against a moving
// level (best value + delta), best-iterate tracking, and doubling-window
// averaged-supergradient dual bounds.
AscentResult level_ascent(const MarginProblem& prob, std::vector<double> theta, long budget,
                          double tol) {
  prob.project(theta);
  ObjectiveEval e = prob.eval(theta);
  AscentResult best;
  best.theta = theta;
  best.value = e.value;

  const std::size_t d = theta.size();
  std::vector<double> g_full(d, 0.0), g_win(d, 0.0);
  double lin_full = 0.0, lin_win = 0.0;
  long n_full = 0, n_win = 0;

  double scale = std::max(1.0, std::fabs(best.value));
  double delta = 0.05 * scale;
  double best_at_check = best.value;
  const long check_every = 200;

  for (long k = 0; k < budget; ++k) {
    const double gnorm2 = vec::norm2_sq(e.supergrad);
    if (gnorm2 == 0.0) {
      best.upper_bound = std::min(best.upper_bound, e.value);
      break;  // interior stationary point
    }
    double step = (best.value + delta - e.value) / gnorm2;
    if (step <= 0.0) step = delta / gnorm2;
    vec::axpy(step, e.supergrad, theta);
    prob.project(theta);
    e = prob.eval(theta);
    if (e.value > best.value) {
      best.value = e.value;
      best.theta = theta;
    }

    const double lin = e.value - vec::dot(e.supergrad, theta);
    vec::axpy(1.0, e.supergrad, g_full);
    lin_full += lin;
    ++n_full;
    vec::axpy(1.0, e.supergrad, g_win);
    lin_win += lin;
    ++n_win;
    if (n_win * 2 >= n_full && n_full >= 64) {
      // restart the half window
      std::fill(g_win.begin(), g_win.end(), 0.0);
      lin_win = 0.0;
      n_win = 0;
    }

    if ((k + 1) % check_every == 0) {
      for (const bool full : {true, false}) {
        const long cnt = full ? n_full : n_win;
        if (cnt == 0) continue;
        std::vector<double> gm = vec::scaled(full ? g_full : g_win, 1.0 / cnt);
        const double ub = (full ? lin_full : lin_win) / cnt + prob.ball_support(gm);
        best.upper_bound = std::min(best.upper_bound, ub);
      }
      if (best.upper_bound - best.value <= tol) {
        best.iterations = k + 1;
        return best;
      }
      if (best.value - best_at_check < 0.25 * delta) delta *= 0.5;
      best_at_check = best.value;
      delta = std::min(delta, std::max(0.5 * (best.upper_bound - best.value), 1e-17 * scale));
      if (delta < 1e-16 * scale) {
        best.iterations = k + 1;
        return best;
      }
    }
    best.iterations = k + 1;
  }
  return best;
}

// 2-D direction parameterizations.
std::vector<double> dir_lp(double phi, double p) {
  std::vector<double> u = {std::cos(phi), std::sin(phi)};
  normalize_lp(u, p);
  return u;
}

struct Brute2dProblem {
  std::function<double(std::span<const double>)> objective;
  double norm_p = 2.0;  // direction normalization
};

BruteMargin brute_scan(const Brute2dProblem& prob, std::size_t resolution) {
  if (resolution < 8) throw std::invalid_argument("brute_margin_2d: resolution too small");
  const double two_pi = 2.0 * std::numbers::pi;
  const double h = two_pi / static_cast<double>(resolution);
  double best = -kInf;
  double best_phi = 0.0;
  for (std::size_t k = 0; k < resolution; ++k) {
    const double phi = h * static_cast<double>(k);
    const double v = prob.objective(dir_lp(phi, prob.norm_p));
    if (v > best) {
      best = v;
      best_phi = phi;
    }
  }
  // Ternary refinement on the bracketing cell; the objective restricted to it
  // is a min of concave arcs, hence unimodal there.
  double lo = best_phi - h, hi = best_phi + h;
  while (hi - lo > 1e-10) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (prob.objective(dir_lp(m1, prob.norm_p)) < prob.objective(dir_lp(m2, prob.norm_p)))
      lo = m1;
    else
      hi = m2;
  }
  const double phi = 0.5 * (lo + hi);
  BruteMargin out;
  out.u = dir_lp(phi, prob.norm_p);
  out.gamma = prob.objective(out.u);
  if (out.gamma < best) {  // keep the grid point when refinement fell off a kink
    out.u = dir_lp(best_phi, prob.norm_p);
    out.gamma = prob.objective(out.u);
  }
  return out;
}

std::vector<std::size_t> active_set(const LabeledDataset& ds, std::span<const double> u,
                                    double penalty_value, double gamma) {
  const double tol = 1e-7 * std::max(1.0, std::fabs(gamma));
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < ds.n; ++i)
    if (ds.signed_dot(i, u) - penalty_value <= gamma + tol) idx.push_back(i);
  return idx;
}

// Minimum-norm point in conv{z_i} via pairwise Frank-Wolfe; gives the exact
// dual bound gamma_2 <= ||w|| for the plain ell_2 margin.
double min_norm_point_hull(const LabeledDataset& ds) {
  const std::size_t n = ds.n, d = ds.d;
  std::vector<double> lambda(n, 0.0);
  std::size_t init = 0;
  double best = kInf;
  for (std::size_t i = 0; i < n; ++i) {
    const double nz = vec::norm2(ds.signed_point(i));
    if (nz < best) {
      best = nz;
      init = i;
    }
  }
  lambda[init] = 1.0;
  std::vector<double> w = ds.signed_point(init);
  for (long k = 0; k < 20000; ++k) {
    double gmin = kInf, gmax = -kInf;
    std::size_t s = 0, a = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double gi = ds.signed_dot(i, w);
      if (gi < gmin) {
        gmin = gi;
        s = i;
      }
      if (lambda[i] > 0.0 && gi > gmax) {
        gmax = gi;
        a = i;
      }
    }
    if (gmax - gmin <= 1e-15 * std::max(1.0, vec::norm2_sq(w))) break;
    std::vector<double> dir = vec::sub(ds.signed_point(s), ds.signed_point(a));
    const double dn2 = vec::norm2_sq(dir);
    if (dn2 == 0.0) break;
    double step = (gmax - gmin) / dn2;
    step = std::min(step, lambda[a]);
    lambda[a] -= step;
    lambda[s] += step;
    vec::axpy(step, dir, w);
  }
  return vec::norm2(w);
}

MarginSolveOptions scaled_opts(const MarginSolveOptions& opts, long cap) {
  MarginSolveOptions o = opts;
  o.budget = std::min(opts.budget, cap);
  return o;
}

}  // namespace

BruteMargin brute_margin_2d(const LabeledDataset& ds, double q, double c,
                            std::size_t resolution) {
  ds.validate();
  if (ds.d != 2) throw std::invalid_argument("brute_margin_2d: only d = 2 is supported");
  const double p = dual_exponent(q);
  Brute2dProblem prob;
  if (c == 0.0) {
    prob.norm_p = p;
    prob.objective = [&ds](std::span<const double> u) { return min_signed_margin(ds, u).first; };
  } else {
    prob.norm_p = 2.0;
    prob.objective = [&ds, c, p](std::span<const double> u) {
      return min_signed_margin(ds, u).first - c * lq_norm(u, p);
    };
  }
  return brute_scan(prob, resolution);
}

BruteMargin brute_smoothed_margin_2d(const LabeledDataset& ds, double c, double lambda,
                                     std::size_t resolution) {
  ds.validate();
  if (ds.d != 2) throw std::invalid_argument("brute_smoothed_margin_2d: only d = 2 is supported");
  Brute2dProblem prob;
  prob.norm_p = 2.0;
  prob.objective = [&ds, c, lambda](std::span<const double> u) {
    return min_signed_margin(ds, u).first - c * smoothed_l1(u, lambda);
  };
  return brute_scan(prob, resolution);
}

MarginCertificate max_margin(const LabeledDataset& ds, double q, const MarginSolveOptions& opts) {
  ds.validate();
  const double p = dual_exponent(q);

  MarginProblem prob;
  prob.ds = &ds;
  prob.sphere_p = true;
  prob.ball_p = p;

  std::vector<double> seed;
  std::optional<BruteMargin> brute;
  if (ds.d == 2) {
    brute = brute_margin_2d(ds, q, 0.0, opts.brute_resolution);
    seed = brute->u;
  } else {
    seed = ds.mean_signed_point();
    if (lq_norm(seed, p) < 1e-14) seed.assign(ds.d, 1.0);
    normalize_lp(seed, p);
  }

  const long cap = ds.d == 2 ? 20000 : 200000;
  AscentResult res = level_ascent(prob, seed, scaled_opts(opts, cap).budget, opts.residual_tol);

  MarginCertificate cert;
  cert.q = q;
  cert.u = res.theta;
  normalize_lp(cert.u, p);
  cert.gamma = min_signed_margin(ds, cert.u).first;
  cert.unique_direction = true;

  double ub = res.upper_bound;
  if (brute.has_value()) {
    if (brute->gamma > cert.gamma) {
      cert.u = brute->u;
      cert.gamma = brute->gamma;
    }
    // Refinement interval is 1e-10 wide; a crude direction-Lipschitz constant
    // turns it into a value bound.
    const double lip = 4.0 * ds.max_point_norm2();
    ub = std::min(ub, cert.gamma + lip * 1e-10);
    const double cos_angle =
        vec::dot(brute->u, cert.u) / (vec::norm2(brute->u) * vec::norm2(cert.u));
    if (std::fabs(brute->gamma - cert.gamma) <= 1e-9 * std::max(1.0, std::fabs(cert.gamma)) &&
        cos_angle < std::cos(1e-3))
      cert.unique_direction = false;
  }
  if (q == 2.0) ub = std::min(ub, min_norm_point_hull(ds));

  cert.residual = std::max(ub - cert.gamma, 1e-12);
  cert.converged = cert.residual <= opts.residual_tol;
  if (cert.gamma > kSeparabilityTol) cert.active = active_set(ds, cert.u, 0.0, cert.gamma);
  return cert;
}

MixedMarginCertificate robust_mixed_margin(const LabeledDataset& ds,
                                           const PerturbationModel& model,
                                           const MarginSolveOptions& opts) {
  ds.validate();
  MixedMarginCertificate cert;
  cert.c = model.c();

  MarginProblem prob;
  prob.ds = &ds;
  prob.sphere_p = false;
  prob.ball_p = 2.0;
  prob.c = model.c();

  std::optional<BruteMargin> brute;
  if (model.kind() == PerturbationKind::smoothed_linf) {
    cert.q = std::numeric_limits<double>::infinity();
    cert.lambda = model.lambda();
    prob.lambda = model.lambda();
    if (ds.d == 2) brute = brute_smoothed_margin_2d(ds, model.c(), model.lambda(), opts.brute_resolution);
  } else {
    const double q = model.is_clean() ? 2.0 : model.q();
    cert.q = q;
    prob.p = dual_exponent(q);
    if (model.c() > 0.0) {
      const MarginCertificate gq = max_margin(ds, q, opts);
      if (model.c() >= gq.gamma)
        throw std::invalid_argument(
            "robust_mixed_margin: c >= gamma_q puts the problem in the supercritical regime "
            "(no separating robust margin; the adversarial risk has a finite minimizer)");
    }
    if (ds.d == 2) brute = brute_margin_2d(ds, cert.q, std::max(model.c(), 0.0), opts.brute_resolution);
  }

  std::vector<double> seed;
  if (brute.has_value()) {
    seed = brute->u;
  } else {
    seed = ds.mean_signed_point();
    if (vec::norm2(seed) < 1e-14) seed.assign(ds.d, 1.0);
    seed = vec::unit2(seed);
  }

  const long cap = ds.d == 2 ? 20000 : 200000;
  AscentResult res = level_ascent(prob, seed, scaled_opts(opts, cap).budget, opts.residual_tol);

  auto objective_at = [&prob](std::span<const double> u) { return prob.eval(u).value; };

  cert.u = vec::unit2(res.theta);
  if (vec::norm2(cert.u) == 0.0) cert.u = brute.has_value() ? brute->u : res.theta;
  cert.gamma = objective_at(cert.u);
  double ub = res.upper_bound;
  if (brute.has_value()) {
    if (brute->gamma > cert.gamma) {
      cert.u = brute->u;
      cert.gamma = brute->gamma;
    }
    const double lip = 4.0 * (ds.max_point_norm2() + cert.c * std::sqrt(double(ds.d)));
    ub = std::min(ub, cert.gamma + lip * 1e-10);
  }
  cert.residual = std::max(ub - cert.gamma, 1e-12);
  cert.converged = cert.residual <= opts.residual_tol;

  const double pen_at_u = cert.lambda.has_value()
                              ? cert.c * smoothed_l1(cert.u, *cert.lambda)
                              : cert.c * lq_norm(cert.u, prob.p);
  cert.active = active_set(ds, cert.u, pen_at_u, cert.gamma);
  return cert;
}

std::vector<std::size_t> support_vectors(const LabeledDataset& ds, const MarginCertificate& cert,
                                         double tol) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < ds.n; ++i)
    if (ds.signed_dot(i, cert.u) <= cert.gamma + tol) idx.push_back(i);
  return idx;
}

namespace {

// Rank of the SV matrix by Gaussian elimination with partial pivoting.
std::size_t matrix_rank(std::vector<std::vector<double>> rows, double tol) {
  if (rows.empty()) return 0;
  const std::size_t d = rows[0].size();
  std::size_t rank = 0;
  for (std::size_t col = 0; col < d && rank < rows.size(); ++col) {
    std::size_t piv = rank;
    double best = std::fabs(rows[rank][col]);
    for (std::size_t r = rank + 1; r < rows.size(); ++r)
      if (std::fabs(rows[r][col]) > best) {
        best = std::fabs(rows[r][col]);
        piv = r;
      }
    if (best <= tol) continue;
    std::swap(rows[rank], rows[piv]);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (r == rank) continue;
      const double f = rows[r][col] / rows[rank][col];
      for (std::size_t cc = col; cc < d; ++cc) rows[r][cc] -= f * rows[rank][cc];
    }
    ++rank;
  }
  return rank;
}

}  // namespace

DiagnosticsConstants alpha_and_K(const LabeledDataset& ds, const MarginCertificate& cert_q2) {
  if (cert_q2.q != 2.0)
    throw std::invalid_argument("alpha_and_K: requires a q = 2 certificate");
  DiagnosticsConstants out;
  const std::vector<std::size_t> sv = support_vectors(ds, cert_q2, 1e-6);
  std::vector<std::vector<double>> zs;
  zs.reserve(sv.size());
  for (std::size_t i : sv) zs.push_back(ds.signed_point(i));
  out.sv_spans = matrix_rank(zs, 1e-10) == ds.d;
  if (!out.sv_spans) return out;
  if (ds.d == 1) {
    // span(u_2)^perp = {0}: the orthogonal bound is trivially 0, alpha undefined.
    out.alpha_exact = true;
    return out;
  }

  auto max_over_sv = [&](std::span<const double> xi) {
    double m = -kInf;
    for (const auto& zi : zs) m = std::max(m, vec::dot(xi, zi));
    return m;
  };

  double alpha = kInf;
  if (ds.d == 2) {
    const std::vector<double> xi = {-cert_q2.u[1], cert_q2.u[0]};
    const std::vector<double> xin = {cert_q2.u[1], -cert_q2.u[0]};
    alpha = std::min(max_over_sv(xi), max_over_sv(xin));
    out.alpha_exact = true;
  } else {
    // Multi-start projected subgradient descent on the unit sphere in
    // span(u_2)^perp; the result is an upper bound on the true alpha.
    const std::vector<double>& u = cert_q2.u;
    auto project_perp = [&u](std::vector<double>& xi) {
      const double pr = vec::dot(xi, u);
      for (std::size_t j = 0; j < xi.size(); ++j) xi[j] -= pr * u[j];
      const double nn = vec::norm2(xi);
      if (nn > 0.0)
        for (double& v : xi) v /= nn;
    };
    std::mt19937_64 rng(20240601);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int start = 0; start < 32; ++start) {
      std::vector<double> xi(ds.d);
      for (double& v : xi) v = gauss(rng);
      project_perp(xi);
      if (vec::norm2(xi) == 0.0) continue;
      for (int it = 1; it <= 2000; ++it) {
        double m = -kInf;
        std::size_t arg = 0;
        for (std::size_t k = 0; k < zs.size(); ++k) {
          const double v = vec::dot(xi, zs[k]);
          if (v > m) {
            m = v;
            arg = k;
          }
        }
        const double step = 0.5 / static_cast<double>(it);
        vec::axpy(-step, zs[arg], xi);
        project_perp(xi);
      }
      alpha = std::min(alpha, max_over_sv(xi));
    }
    out.alpha_exact = false;
  }
  out.alpha = alpha;
  if (alpha > 0.0)
    out.K = (1.0 + std::log(static_cast<double>(ds.n))) / alpha + 20.0;
  return out;
}

}  // namespace mbl

// Reconstruction of the curvilinear approximate symmetric gradient e(u) from
// slice derivatives, the corrected form e-tilde, the analytic chart gradient,
// slice-identity and parallelogram probes, integral bounds, and the rescaled
// shallow-shell gradient.
#pragma once

#include "curvislice/bv1d.hpp"

namespace curvislice {

// Central-difference derivative of the slice at t, guarded against detected
// jumps: t must sit at least two samples away from every jump.
inline double slice_derivative(const Slice1D& s, double t, const std::vector<JumpRecord>& jumps) {
  for (const auto& j : jumps)
    if (std::abs(t - j.t_jump) < 2.0 * s.h_t)
      throw DerivativeAtJumpError("slice_derivative: t inside a jump window");
  int k = static_cast<int>(std::round((t - s.t.front()) / s.h_t));
  if (k < 1 || k + 1 >= s.size() || !s.mask[k - 1] || !s.mask[k + 1])
    throw OutOfDomainError("slice_derivative: t too close to the slice boundary");
  return (s.values[k + 1] - s.values[k - 1]) / (s.t[k + 1] - s.t[k - 1]);
}

struct GradientReport {
  Vec x;
  SymMatrix e_of_u;
  double residual = 0.0;  // RMS least-squares misfit
  double cond = 1.0;      // conditioning of the direction system
  int directions_used = 0;
};

struct ReconstructOptions {
  double h_t = 0.01;            // slice sampling step (h/2 against grid fields)
  double jump_threshold = 0.3;
  int window = 3;
  double svd_cutoff = 1e-10;    // relative to sigma_max
  bool scan_jumps = true;       // run the detector on each slice through x
};

// Least squares over usable directions for the symmetric S with
// S w_k . w_k = d_k, w_k = xi_{k,phi}(x), d_k = slice derivative at t_x.
inline GradientReport reconstruct_e(const GridField& u, const Vec& x,
                                    const ProjectionFamily& family,
                                    const ReconstructOptions& opt = {}) {
  const int n = u.dim();
  const int dofs = n * (n + 1) / 2;
  std::vector<Vec> ws;
  std::vector<double> ds;
  std::vector<char> ok(family.size(), 0);
  std::vector<Vec> wcol(family.size());
  std::vector<double> dcol(family.size());
  parallel_for(family.size(), [&](int k) {
    const CurvilinearProjection& proj = family.projection(k);
    const Parametrization& par = proj.param();
    try {
      auto res = proj.invert(x);
      Slice1D s = extract_slice(u, par, res.y, opt.h_t);
      std::vector<JumpRecord> jumps;
      if (opt.scan_jumps) {
        try {
          jumps = analyze_slice(s, opt.jump_threshold, opt.window).jumps;
        } catch (const UndersampledError&) {
        }
      }
      double d = slice_derivative(s, res.t, jumps);
      Vec xx, vv;
      par.evaluate_state(res.coords, res.t, xx, vv);
      wcol[k] = vv;
      dcol[k] = d;
      ok[k] = 1;
    } catch (const Error&) {
      ok[k] = 0;  // jump-blocked or uncovered direction drops out
    }
  });
  for (int k = 0; k < family.size(); ++k)
    if (ok[k]) {
      ws.push_back(wcol[k]);
      ds.push_back(dcol[k]);
    }
  if (static_cast<int>(ws.size()) < dofs)
    throw InsufficientDataError("reconstruct_e: fewer than n(n+1)/2 usable directions");

  // rows: coefficients of the upper-triangle unknowns (off-diagonals doubled)
  const int K = static_cast<int>(ws.size());
  Mat M(K, dofs);
  Vec d(K);
  for (int r = 0; r < K; ++r) {
    const Vec& w = ws[r];
    int c = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) M(r, c++) = (i == j ? 1.0 : 2.0) * w[i] * w[j];
    d[r] = ds[r];
  }
  Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& sv = svd.singularValues();
  double smax = sv.maxCoeff();
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > opt.svd_cutoff * smax) ++rank;
  if (rank < dofs)
    throw DirectionDegenerateError("reconstruct_e: direction system is rank deficient");
  Vec sol = Vec::Zero(dofs);
  for (int i = 0; i < sv.size(); ++i) {
    if (sv[i] <= opt.svd_cutoff * smax) continue;
    sol += (svd.matrixU().col(i).dot(d) / sv[i]) * svd.matrixV().col(i);
  }

  GradientReport rep;
  rep.x = x;
  rep.e_of_u = SymMatrix(n);
  int c = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) rep.e_of_u.at(i, j) = sol[c++];
  rep.residual = std::sqrt((M * sol - d).squaredNorm() / K);
  rep.cond = smax / sv.minCoeff();
  rep.directions_used = K;
  return rep;
}

// e-tilde(u)(x) zeta.zeta := e(u)(x) zeta.zeta + u(x) . F(x, zeta)
inline double tilde_e(const GradientReport& rep, const QuadraticField& F, const Vec& u_at_x,
                      const Vec& zeta) {
  return rep.e_of_u.quad(zeta) + u_at_x.dot(F.eval(rep.x, zeta));
}

// (E(u))_ij = (d_i u_j + d_j u_i)/2 - sum_l Gamma^l_ij u_l
inline SymMatrix analytic_E(const std::function<Vec(const Vec&)>& u,
                            const std::function<Mat(const Vec&)>& du_or_null,
                            const MetricChart& chart, const Vec& x, double fd = 1e-6) {
  const int n = chart.dim();
  Mat J(n, n);  // J(i,j) = d_i u_j
  if (du_or_null) {
    Mat D = du_or_null(x);  // D(j,i) = d_i u_j as Jacobian du_j/dx_i
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) J(i, j) = D(j, i);
  } else {
    for (int i = 0; i < n; ++i) {
      Vec xp = x, xm = x;
      xp[i] += fd;
      xm[i] -= fd;
      Vec dui = (u(xp) - u(xm)) / (2 * fd);
      for (int j = 0; j < n; ++j) J(i, j) = dui[j];
    }
  }
  auto gamma = chart.christoffel(x);
  Vec ux = u(x);
  SymMatrix E(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      double v = 0.5 * (J(i, j) + J(j, i));
      for (int l = 0; l < n; ++l) v -= gamma[l](i, j) * ux[l];
      E.at(i, j) = v;
    }
  }
  return E;
}

// |d/dt u-hat^xi_y(t) - E(u)(gamma(t)) gammadot . gammadot| on a chart geodesic.
inline double slice_identity_check(const std::function<Vec(const Vec&)>& u,
                                   const std::function<Mat(const Vec&)>& du_or_null,
                                   const MetricChart& chart, const Parametrization& param,
                                   const Vec& y, double t, double h_t = 1e-3) {
  Vec c = param.coords_from_y(y);
  Trajectory tr = param.trajectory_at_coords(c, {t - h_t, t, t + h_t});
  auto uhat = [&](double tt) {
    Vec x, v;
    tr.eval(tt, x, v);
    return u(x).dot(v);
  };
  double d = (uhat(t + h_t) - uhat(t - h_t)) / (2 * h_t);
  Vec x, v;
  tr.eval(t, x, v);
  SymMatrix E = analytic_E(u, du_or_null, chart, x);
  return std::abs(d - E.quad(v));
}

// ---------------------------------------------------------------------------
// Parallelogram probe of the quadratic structure of q-tilde

// aplim-style estimator: trimmed mean over shrinking radii {r, r/2, r/4} of
// ((u(z) - u(x)) . (z - x)) / |z - x|^2 along direction zeta.
inline double estimate_qtilde(const GridField& u, const Vec& x, const Vec& zeta, double r0,
                              double trim = 0.1) {
  Vec dir = zeta.normalized();
  std::vector<double> samples;
  for (double r : {r0, r0 / 2, r0 / 4}) {
    for (double sgn : {1.0, -1.0}) {
      for (double fr : {0.9, 1.0, 1.1}) {
        Vec z = x + sgn * r * fr * dir;
        if (!u.contains(z)) continue;
        Vec dz = z - x;
        samples.push_back((u.eval(z) - u.eval(x)).dot(dz) / dz.squaredNorm());
      }
    }
  }
  if (samples.size() < 4) throw InsufficientDataError("estimate_qtilde: probe left the domain");
  return zeta.squaredNorm() * trimmed_mean(std::move(samples), trim);
}

// Max parallelogram defect of a 2-homogeneous form over probe pairs.
inline double parallelogram_defect(const std::function<double(const Vec&)>& q,
                                   const std::vector<std::pair<Vec, Vec>>& pairs) {
  double worst = 0.0;
  for (auto& [a, b] : pairs) {
    double defect = std::abs(q(a + b) + q(a - b) - 2.0 * q(a) - 2.0 * q(b));
    worst = std::max(worst, defect);
  }
  return worst;
}

inline std::vector<std::pair<Vec, Vec>> default_probe_pairs(int n, int count, uint64_t seed = 0) {
  std::vector<std::pair<Vec, Vec>> pairs;
  Rng rng(seed ^ 0x9a1ull);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      Vec a = Vec::Zero(n), b = Vec::Zero(n);
      a[i] = 1.0;
      b[j] = 1.0;
      pairs.emplace_back(a, b);
    }
  while (static_cast<int>(pairs.size()) < count)
    pairs.emplace_back(rng.unit_vector(n), rng.unit_vector(n));
  return pairs;
}

// Defect of the estimated q-tilde of u at x over probe pairs.
inline double parallelogram_residual(const GridField& u, const Vec& x,
                                     const std::vector<std::pair<Vec, Vec>>& pairs, double r0) {
  auto q = [&](const Vec& z) { return estimate_qtilde(u, x, z, r0); };
  return parallelogram_defect(q, pairs);
}

// ---------------------------------------------------------------------------
// Integral bound checks

struct BoundReport {
  double integral_e_opnorm = 0.0;     // quadrature of sup_{|z|=1} |e(u) z.z|
  double integral_e_frobenius = 0.0;
  double lambda_estimate = 0.0;       // finite-family supremum realization
  double slope_violation_rate = 0.0;  // fraction violating |grad u-hat| <= |e w.w| + tol
  int points = 0;
  bool certificate_opnorm = false;    // integral_e_opnorm <= (1+tol) lambda_estimate
};

struct BoundOptions {
  int grid_n = 6;           // reconstruction lattice per axis inside B
  SliceQuadrature quad;     // for mu^xi_u
  ReconstructOptions rec;
  double certificate_tol = 0.10;
  double slope_tol_rel = 0.02;
  double slope_tol_abs = 1e-6;
  int lip_pairs = 100;
};

inline BoundReport bound_checks(const GridField& u, const ProjectionFamily& family, const Box& B,
                                const BoundOptions& opt = {}) {
  const int n = u.dim();
  BoundReport rep;

  // lambda_estimate(B) = max_xi mu^xi_u(B) / (||phidot||_inf^2 Lip(P_xi;B)^{n-1})
  Region region = [&](const Vec& x) { return B.contains(x); };
  for (int k = 0; k < family.size(); ++k) {
    const CurvilinearProjection& proj = family.projection(k);
    double mu = mu_xi_u(u, proj, region, opt.quad);
    double lip = lipschitz_estimate(proj, B, opt.lip_pairs, 0x10c4 + k);
    // max |phidot| over slices restricted to B
    double vmax = 0.0;
    double w = 0.0;
    auto nodes = detail::perp_quadrature(proj.param(), std::max(8, opt.quad.n_y / 8), w);
    for (const auto& c : nodes) {
      try {
        Slice1D s =
            extract_slice(u, proj.param(), proj.param().y_from_coords(c), 4 * opt.quad.h_t);
        for (int i = 0; i < s.size(); ++i)
          if (s.mask[i] && B.contains(s.points[i])) vmax = std::max(vmax, s.velocities[i].norm());
      } catch (const OutOfDomainError&) {
      }
    }
    double weight = std::max(1e-12, vmax * vmax * std::pow(lip, n - 1));
    rep.lambda_estimate = std::max(rep.lambda_estimate, mu / weight);
  }

  // reconstruction lattice over B (interior midpoints)
  double cell = 1.0;
  for (int k = 0; k < n; ++k) cell *= B.extents[k] / opt.grid_n;
  std::vector<Vec> pts;
  std::vector<int> idx(n, 0);
  for (;;) {
    Vec x(n);
    for (int k = 0; k < n; ++k) x[k] = B.origin[k] + (idx[k] + 0.5) * B.extents[k] / opt.grid_n;
    pts.push_back(x);
    int k = 0;
    for (; k < n; ++k) {
      if (++idx[k] < opt.grid_n) break;
      idx[k] = 0;
    }
    if (k == n) break;
  }
  long violations = 0, slope_samples = 0;
  for (const Vec& x : pts) {
    GradientReport g;
    try {
      g = reconstruct_e(u, x, family, opt.rec);
    } catch (const Error&) {
      continue;
    }
    rep.integral_e_opnorm += g.e_of_u.quad_sup_norm() * cell;
    rep.integral_e_frobenius += g.e_of_u.frobenius() * cell;
    ++rep.points;
    // slope bound per direction at this point
    for (int k = 0; k < family.size(); ++k) {
      try {
        const CurvilinearProjection& proj = family.projection(k);
        auto res = proj.invert(x);
        Slice1D s = extract_slice(u, proj.param(), res.y, opt.rec.h_t);
        double d = slice_derivative(s, res.t, {});
        Vec xx, vv;
        proj.param().evaluate_state(res.coords, res.t, xx, vv);
        double rhs = std::abs(g.e_of_u.quad(vv));
        ++slope_samples;
        if (std::abs(d) > rhs * (1.0 + opt.slope_tol_rel) + opt.slope_tol_abs) ++violations;
      } catch (const Error&) {
      }
    }
  }
  rep.slope_violation_rate = slope_samples ? double(violations) / slope_samples : 0.0;
  rep.certificate_opnorm =
      rep.integral_e_opnorm <= (1.0 + opt.certificate_tol) * rep.lambda_estimate;
  return rep;
}

// ---------------------------------------------------------------------------
// Shallow-shell rescaled gradient (leading order: O(rho)/O(rho^2) Christoffel
// remainders set to zero)

struct ShellEGradient {
  // symmetric 3x3 matrix of components [e_{alpha beta}, e_{alpha 3}; ., e_33]
  std::function<SymMatrix(const Vec&)> at;
};

inline ShellEGradient shell_egradient(const GridField& u, double rho,
                                      std::function<Vec(const Vec&)> theta_grad,
                                      std::function<Mat(const Vec&)> theta_hess,
                                      double fd = 1e-5) {
  if (u.dim() != 3 || u.components() != 3)
    throw ConfigError("shell_egradient: needs a 3-component field on U x (-1,1)");
  auto at = [u, rho, theta_grad, theta_hess, fd](const Vec& x) {
    Mat J(3, 3);  // J(i,j) = d_i u_j by central differences of the field
    for (int i = 0; i < 3; ++i) {
      Vec xp = x, xm = x;
      xp[i] += fd;
      xm[i] -= fd;
      Vec up = u.eval(xp), um = u.eval(xm);
      for (int j = 0; j < 3; ++j) J(i, j) = (up[j] - um[j]) / (2 * fd);
    }
    Vec xp2(2);
    xp2 << x[0], x[1];
    Vec g = theta_grad(xp2);
    Mat h = theta_hess(xp2);
    double conf = std::sqrt(1.0 + rho * rho * g.squaredNorm());
    SymMatrix e(3);
    for (int a = 0; a < 2; ++a)
      for (int b = a; b < 2; ++b) {
        double gamma3 = -h(a, b) / conf;  // Gamma^3_{ab}(rho) at leading order
        e.at(a, b) = 0.5 * (J(a, b) + J(b, a)) - u.eval(x)[2] * gamma3;
      }
    for (int a = 0; a < 2; ++a) e.at(a, 2) = (0.5 * (J(2, a) + J(a, 2))) / rho;
    e.at(2, 2) = J(2, 2) / (rho * rho);
    return e;
  };
  ShellEGradient out;
  out.at = at;
  return out;
}

}  // namespace curvislice

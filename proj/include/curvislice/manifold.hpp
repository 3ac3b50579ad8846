// Chart-based Riemannian layer: one-forms, their slices along geodesics, the
// bridge to Euclidean vector fields, and the pushforward symmetric gradient.
// Manifolds are handled one chart at a time; no atlas gluing.
#pragma once

#include "curvislice/symgrad.hpp"

namespace curvislice {

struct Chart {
  std::function<Vec(const Vec&)> psi;      // manifold coords -> chart image
  std::function<Vec(const Vec&)> psi_inv;  // chart image -> manifold coords
  Box domain;                              // manifold-side box U
  MetricChart metric;                      // metric g in chart-image coordinates

  static Chart identity(const MetricChart& m) {
    Chart c;
    c.psi = [](const Vec& p) { return p; };
    c.psi_inv = [](const Vec& x) { return x; };
    c.domain = m.domain();
    c.metric = m;
    return c;
  }

  double roundtrip_residual(const Vec& p) const { return (psi_inv(psi(p)) - p).norm(); }
};

struct OneForm {
  // components omega_i on the manifold side (functions of p in U)
  std::vector<std::function<double(const Vec&)>> components;

  int dim() const { return static_cast<int>(components.size()); }

  Vec eval(const Vec& p) const {
    Vec w(dim());
    for (int i = 0; i < dim(); ++i) w[i] = components[i](p);
    return w;
  }
};

// u(x) := sum_i omega_i(psi^{-1}(x)) e_i on the chart image.
inline GridField oneform_to_field(const OneForm& omega, const Chart& chart) {
  auto psi_inv = chart.psi_inv;
  auto comps = omega.components;
  int n = omega.dim();
  return GridField::from_callback(chart.metric.domain(), n, [psi_inv, comps, n](const Vec& x) {
    Vec p = psi_inv(x);
    Vec u(n);
    for (int i = 0; i < n; ++i) u[i] = comps[i](p);
    return u;
  });
}

// omega-hat^xi_y(t) = < omega(phi(y + t xi)), phidot(y + t xi) >: the pairing
// evaluator, independent of the Euclidean delegation path. The parametrization
// must come from christoffel_field(chart.metric) so its curves are geodesics.
inline Slice1D manifold_slice_pairing(const OneForm& omega, const Chart& chart,
                                      const Parametrization& param, const Vec& y, double h_t) {
  Vec c = param.coords_from_y(y);
  if (c.norm() > param.rho() + 1e-12)
    throw OutOfDomainError("manifold_slice: y outside the base disc");
  Slice1D s;
  s.xi = param.xi();
  s.y = param.y_from_coords(c);
  s.y_coords = c;
  s.h_t = h_t;
  long m = static_cast<long>(std::floor(param.tau() / h_t));
  std::vector<double> ts;
  for (long k = -m; k <= m; ++k) ts.push_back(k * h_t);
  Trajectory tr = param.trajectory_at_coords(c, ts);
  const Box& image = chart.metric.domain();
  for (double tk : ts) {
    s.t.push_back(tk);
    if (tk < tr.t_min() - 1e-12 || tk > tr.t_max() + 1e-12) {
      s.mask.push_back(0);
      s.values.push_back(0.0);
      s.velocities.push_back(Vec::Zero(param.dim()));
      s.points.push_back(Vec::Zero(param.dim()));
      continue;
    }
    Vec x, v;
    tr.eval(tk, x, v);
    s.points.push_back(x);
    s.velocities.push_back(v);
    if (image.contains(x, 1e-12 * (1 + image.diameter()))) {
      // <omega, phidot> in chart coordinates: sum_i omega_i(p) * phidot_i
      Vec p = chart.psi_inv(x);
      s.mask.push_back(1);
      s.values.push_back(omega.eval(p).dot(v));
    } else {
      s.mask.push_back(0);
      s.values.push_back(0.0);
    }
  }
  return s;
}

// Delegation route: slice of the bridged Euclidean field.
inline Slice1D manifold_slice(const OneForm& omega, const Chart& chart,
                              const Parametrization& param, const Vec& y, double h_t) {
  GridField u = oneform_to_field(omega, chart);
  return extract_slice(u, param, y, h_t);
}

// e(omega)(p)(v) = e(u)(psi(p)) L_p(v) . L_p(v), L_p(v) reading off chart
// components of v (tangent vectors are carried in the chart basis).
inline double e_omega(const GradientReport& rep, const Vec& v_chart_components) {
  return rep.e_of_u.quad(v_chart_components);
}

// Tensor norm ||e(omega)(p)|| = sup_v e(omega)(p)(v) / |v|_p^2: the largest
// |eigenvalue| of g^{-1/2} e(u) g^{-1/2}.
inline double e_omega_norm(const GradientReport& rep, const Chart& chart, const Vec& p) {
  Mat g = chart.metric.metric(chart.psi(p));
  Eigen::SelfAdjointEigenSolver<Mat> gs(g);
  Mat ginv_half = gs.operatorInverseSqrt();
  Mat m = ginv_half * rep.e_of_u.to_matrix() * ginv_half;
  Eigen::SelfAdjointEigenSolver<Mat> es(m);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

struct ManifoldBoundReport {
  double integral_e_omega = 0.0;   // quadrature of ||e(omega)|| sqrt(det g)
  double lambda_chart = 0.0;       // Euclidean lambda_estimate on the chart image
  double lambda_pulled = 0.0;      // scaled by Lip(psi^{-1})^2 Lip(psi)^{n-1}
  double lip_psi = 1.0, lip_psi_inv = 1.0;
  int points = 0;
};

struct ManifoldBoundOptions {
  BoundOptions bound;
  int lip_probe = 200;
  uint64_t seed = 0;
};

// Quadrature of ||e(omega)(p)|| dH^n over a chart-image box vs the chart-pulled
// lambda estimate.
inline ManifoldBoundReport manifold_gradient_bound(const OneForm& omega, const Chart& chart,
                                                   const ProjectionFamily& family,
                                                   const Box& image_region,
                                                   const ManifoldBoundOptions& opt = {}) {
  const int n = omega.dim();
  GridField u = oneform_to_field(omega, chart);
  ManifoldBoundReport rep;

  // sampled Lipschitz constants of psi and psi^{-1} over the region
  Rng rng(opt.seed ^ 0xcafeull);
  for (int k = 0; k < opt.lip_probe; ++k) {
    Vec a = rng.point_in_box(image_region), b = rng.point_in_box(image_region);
    if ((a - b).norm() < 1e-9) continue;
    Vec pa = chart.psi_inv(a), pb = chart.psi_inv(b);
    if ((pa - pb).norm() > 1e-12) {
      rep.lip_psi_inv = std::max(rep.lip_psi_inv, (pa - pb).norm() / (a - b).norm());
      rep.lip_psi = std::max(rep.lip_psi, (a - b).norm() / (pa - pb).norm());
    }
  }

  BoundReport br = bound_checks(u, family, image_region, opt.bound);
  rep.lambda_chart = br.lambda_estimate;
  rep.lambda_pulled = rep.lambda_chart * std::pow(rep.lip_psi_inv, 2.0) *
                      std::pow(rep.lip_psi, double(n - 1));

  // Riemannian quadrature of the tensor norm
  int gn = opt.bound.grid_n;
  double cell = 1.0;
  for (int k = 0; k < n; ++k) cell *= image_region.extents[k] / gn;
  std::vector<int> idx(n, 0);
  for (;;) {
    Vec x(n);
    for (int k = 0; k < n; ++k)
      x[k] = image_region.origin[k] + (idx[k] + 0.5) * image_region.extents[k] / gn;
    try {
      auto g = reconstruct_e(u, x, family, opt.bound.rec);
      double norm = e_omega_norm(g, chart, chart.psi_inv(x));
      double volel = std::sqrt(chart.metric.metric(x).determinant());
      rep.integral_e_omega += norm * volel * cell;
      ++rep.points;
    } catch (const Error&) {
    }
    int k = 0;
    for (; k < n; ++k) {
      if (++idx[k] < gn) break;
      idx[k] = 0;
    }
    if (k == n) break;
  }
  return rep;
}

// Relative drift of g(gamma) gammadot . gammadot along a chart geodesic.
inline double speed_conservation_drift(const MetricChart& chart, const Trajectory& tr) {
  double g0 = 0.0;
  double worst = 0.0;
  for (int k = 0; k < tr.size(); ++k) {
    double gk = chart.metric(tr.x[k]).cwiseProduct(tr.v[k] * tr.v[k].transpose()).sum();
    if (k == 0)
      g0 = gk;
    else
      worst = std::max(worst, std::abs(gk - g0) / std::max(1e-300, std::abs(g0)));
  }
  return worst;
}

}  // namespace curvislice

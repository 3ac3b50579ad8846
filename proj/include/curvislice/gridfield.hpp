// Discretized fields on regular box grids with multilinear interpolation, and
// extraction of one-dimensional slices u-hat^xi_y along parametrized curves.
#pragma once

#include "curvislice/projections.hpp"

namespace curvislice {

// Dense lattice of samples, row-major, component-fastest, with an optional
// analytic callback bypass. Values outside the box are masked, never
// extrapolated.
class GridField {
public:
  GridField() = default;

  static GridField sample(const Box& box, double h, int components,
                          const std::function<Vec(const Vec&)>& fn) {
    GridField g;
    g.box_ = box;
    g.components_ = components;
    int n = box.dim();
    g.shape_.resize(n);
    g.spacing_ = Vec(n);
    for (int k = 0; k < n; ++k) {
      g.shape_[k] = std::max(2, static_cast<int>(std::round(box.extents[k] / h)) + 1);
      g.spacing_[k] = box.extents[k] / (g.shape_[k] - 1);
    }
    long total = g.node_count();
    g.values_.resize(total * components);
    std::vector<int> idx(n, 0);
    for (long node = 0; node < total; ++node) {
      Vec x = g.node_point(idx);
      Vec val = fn(x);
      for (int c = 0; c < components; ++c) g.values_[node * components + c] = val[c];
      g.advance(idx);
    }
    return g;
  }

  static GridField from_callback(const Box& box, int components,
                                 std::function<Vec(const Vec&)> fn) {
    GridField g;
    g.box_ = box;
    g.components_ = components;
    g.callback_ = std::move(fn);
    return g;
  }

  static GridField from_data(const Box& box, std::vector<int> shape, int components,
                             std::vector<double> values) {
    GridField g;
    g.box_ = box;
    g.components_ = components;
    g.shape_ = std::move(shape);
    int n = box.dim();
    g.spacing_ = Vec(n);
    for (int k = 0; k < n; ++k) g.spacing_[k] = box.extents[k] / (g.shape_[k] - 1);
    if (static_cast<long>(values.size()) != g.node_count() * components)
      throw ConfigError("GridField: value blob size does not match shape");
    for (double v : values)
      if (!std::isfinite(v)) throw ConfigError("GridField: non-finite sample value");
    g.values_ = std::move(values);
    return g;
  }

  const Box& box() const { return box_; }
  int dim() const { return box_.dim(); }
  int components() const { return components_; }
  const std::vector<int>& shape() const { return shape_; }
  const Vec& spacing() const { return spacing_; }
  bool has_grid() const { return !values_.empty(); }
  bool has_callback() const { return static_cast<bool>(callback_); }
  const std::vector<double>& values() const { return values_; }

  bool contains(const Vec& x) const { return box_.contains(x, 1e-12 * (1 + box_.diameter())); }

  // Multilinear interpolation (or the callback bypass).
  Vec eval(const Vec& x) const {
    if (!contains(x)) throw OutOfDomainError("GridField: point outside box");
    if (callback_ && values_.empty()) return callback_(x);
    const int n = dim();
    std::vector<int> base(n);
    Vec w(n);
    for (int k = 0; k < n; ++k) {
      double s = (x[k] - box_.origin[k]) / spacing_[k];
      int i = std::clamp(static_cast<int>(std::floor(s)), 0, shape_[k] - 2);
      base[k] = i;
      w[k] = s - i;
    }
    Vec out = Vec::Zero(components_);
    int corners = 1 << n;
    std::vector<int> idx(n);
    for (int c = 0; c < corners; ++c) {
      double weight = 1.0;
      for (int k = 0; k < n; ++k) {
        int bit = (c >> k) & 1;
        idx[k] = base[k] + bit;
        weight *= bit ? w[k] : (1.0 - w[k]);
      }
      if (weight == 0.0) continue;
      long node = flat_index(idx);
      for (int q = 0; q < components_; ++q) out[q] += weight * values_[node * components_ + q];
    }
    return out;
  }

  long node_count() const {
    long t = 1;
    for (int s : shape_) t *= s;
    return t;
  }

  Vec node_point(const std::vector<int>& idx) const {
    Vec x(dim());
    for (int k = 0; k < dim(); ++k) x[k] = box_.origin[k] + idx[k] * spacing_[k];
    return x;
  }

  long flat_index(const std::vector<int>& idx) const {
    long f = 0;
    for (int k = 0; k < dim(); ++k) f = f * shape_[k] + idx[k];
    return f;
  }

  void advance(std::vector<int>& idx) const {
    for (int k = dim() - 1; k >= 0; --k) {
      if (++idx[k] < shape_[k]) return;
      idx[k] = 0;
    }
  }

private:
  Box box_;
  Vec spacing_;
  std::vector<int> shape_;
  int components_ = 0;
  std::vector<double> values_;
  std::function<Vec(const Vec&)> callback_;
};

// ---------------------------------------------------------------------------
// Slices

struct Slice1D {
  Vec xi;
  Vec y;                        // base offset in xi-perp (R^n vector)
  Vec y_coords;                 // perp-basis coordinates
  double h_t = 0;
  std::vector<double> t;        // uniform grid
  std::vector<double> values;   // u-hat^xi_y(t_k), defined where mask is true
  std::vector<char> mask;       // t_k in Omega^xi_y
  std::vector<Vec> velocities;  // phidot_xi(y + t_k xi)
  std::vector<Vec> points;      // phi_xi(y + t_k xi)

  int size() const { return static_cast<int>(t.size()); }
};

// u-hat^xi_y(t) = u(phi_xi(y + t xi)) . phidot_xi(y + t xi), sampled on the
// uniform t-grid of step h_t over the parametrization span.
inline Slice1D extract_slice(const GridField& u, const Parametrization& param, const Vec& y,
                             double h_t) {
  Vec c = param.coords_from_y(y);
  if (c.norm() > param.rho() + 1e-12)
    throw OutOfDomainError("extract_slice: y outside the base disc");
  Slice1D s;
  s.xi = param.xi();
  s.y = param.y_from_coords(c);
  s.y_coords = c;
  s.h_t = h_t;
  long m = static_cast<long>(std::floor(param.tau() / h_t));
  std::vector<double> ts;
  for (long k = -m; k <= m; ++k) ts.push_back(k * h_t);
  Trajectory tr = param.trajectory_at_coords(c, ts);
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
    if (u.contains(x)) {
      s.mask.push_back(1);
      s.values.push_back(u.eval(x).dot(v));
    } else {
      s.mask.push_back(0);
      s.values.push_back(0.0);
    }
  }
  return s;
}

// B^xi_y = {t : phi_xi(y + t xi) in B} as maximal sub-intervals of the t-grid.
inline std::vector<std::pair<double, double>> set_slice(
    const std::function<bool(const Vec&)>& indicator, const Parametrization& param, const Vec& y,
    double h_t) {
  Vec c = param.coords_from_y(y);
  if (c.norm() > param.rho() + 1e-12) throw OutOfDomainError("set_slice: y outside the base disc");
  long m = static_cast<long>(std::floor(param.tau() / h_t));
  std::vector<double> ts;
  for (long k = -m; k <= m; ++k) ts.push_back(k * h_t);
  Trajectory tr = param.trajectory_at_coords(c, ts);
  std::vector<std::pair<double, double>> intervals;
  bool open = false;
  double start = 0;
  double last = 0;
  for (double tk : ts) {
    bool in = false;
    if (tk >= tr.t_min() - 1e-12 && tk <= tr.t_max() + 1e-12) {
      Vec x, v;
      tr.eval(tk, x, v);
      in = indicator(x);
    }
    if (in && !open) {
      open = true;
      start = tk;
    }
    if (!in && open) {
      open = false;
      intervals.emplace_back(start, last);
    }
    if (in) last = tk;
  }
  if (open) intervals.emplace_back(start, last);
  return intervals;
}

struct UXiFieldResult {
  GridField field;          // scalar
  long masked_nodes = 0;    // inversion failures / uncovered nodes
};

// u_xi(x) := u(x) . xi_phi(x) on the grid nodes of u.
inline UXiFieldResult u_xi_field(const GridField& u, const CurvilinearProjection& proj) {
  if (!u.has_grid()) throw ConfigError("u_xi_field: needs a sampled grid field");
  const int n = u.dim();
  long total = u.node_count();
  std::vector<double> vals(total, 0.0);
  std::vector<char> bad(total, 0);
  // enumerate nodes in flat order; parallel over nodes, deterministic output
  std::vector<std::vector<int>> indices(total);
  {
    std::vector<int> idx(n, 0);
    for (long node = 0; node < total; ++node) {
      indices[node] = idx;
      u.advance(idx);
    }
  }
  parallel_for(static_cast<int>(total), [&](int node) {
    Vec x = u.node_point(indices[node]);
    try {
      auto res = proj.invert(x);
      Vec xx, vv;
      proj.param().evaluate_state(res.coords, res.t, xx, vv);
      vals[node] = u.eval(x).dot(vv);
    } catch (const Error&) {
      bad[node] = 1;
    }
  });
  UXiFieldResult out;
  out.masked_nodes = std::count(bad.begin(), bad.end(), 1);
  out.field = GridField::from_data(u.box(), u.shape(), 1, std::move(vals));
  return out;
}

}  // namespace curvislice

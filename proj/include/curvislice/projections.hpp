// Parametrizations phi_xi, curvilinear projections P_xi = pi_xi o phi_xi^{-1},
// families over direction samples, rescaled maps, and the transversality and
// Lipschitz probes.
#pragma once

#include <map>
#include <memory>
#include <optional>

#include "curvislice/geodesics.hpp"
#include "curvislice/parallel.hpp"

namespace curvislice {

// phi_xi on {y + t xi : y in xi-perp cap B_rho, |t| < tau}, trajectories
// launched from x0 + y with initial velocity xi. Stored trajectories are Newton
// seeds only; evaluation at off-grid y integrates fresh.
class Parametrization {
public:
  Parametrization() = default;

  Parametrization(QuadraticField field, Vec x0, Vec xi, double rho, double tau, double h_y,
                  ODESettings settings)
      : field_(std::move(field)),
        x0_(std::move(x0)),
        xi_(xi.normalized()),
        rho_(rho),
        tau_(tau),
        h_y_(h_y),
        settings_(settings),
        basis_(orthonormal_complement(xi_)) {
    if (!(rho > 0) || !(tau > 0) || !(h_y > 0))
      throw ConfigError("build_parametrization: rho, tau, h_y must be positive");
    build_grid();
  }

  const QuadraticField& field() const { return field_; }
  const Vec& x0() const { return x0_; }
  const Vec& xi() const { return xi_; }
  double rho() const { return rho_; }
  double tau() const { return tau_; }
  double h_y() const { return h_y_; }
  const Mat& basis() const { return basis_; }  // n x (n-1), columns span xi-perp
  const ODESettings& settings() const { return settings_; }
  bool tau_reduced() const { return tau_reduced_; }

  int dim() const { return field_.dim(); }
  int grid_size() const { return static_cast<int>(grid_coords_.size()); }
  const Vec& grid_coord(int k) const { return grid_coords_[k]; }  // (n-1) coords
  const Trajectory& grid_trajectory(int k) const { return grid_trajs_[k]; }

  Vec y_from_coords(const Vec& c) const { return basis_ * c; }
  Vec coords_from_y(const Vec& y) const { return basis_.transpose() * y; }

  // Fresh trajectory through x0 + y with velocity xi over (-tau, tau), with
  // mandatory nodes where requested.
  Trajectory trajectory_at_coords(const Vec& c, const std::vector<double>& mandatory = {}) const {
    Vec start = x0_ + y_from_coords(c);
    if (!field_.in_domain(start)) throw OutOfDomainError("parametrization: launch point outside");
    return integrate(field_, start, xi_, {-tau_, tau_}, settings_, mandatory);
  }

  // phi_xi(y + t xi) for y given in perp coordinates.
  Vec evaluate(const Vec& c, double t) const {
    Vec x, v;
    evaluate_state(c, t, x, v);
    return x;
  }

  void evaluate_state(const Vec& c, double t, Vec& x, Vec& v) const {
    if (std::abs(t) > tau_ + 1e-12)
      throw OutOfDomainError("parametrization: t outside the time half-span");
    Vec start = x0_ + y_from_coords(c);
    if (!field_.in_domain(start)) throw OutOfDomainError("parametrization: launch point outside");
    // integrate only the [0, t] leg
    auto span = t >= 0 ? std::make_pair(0.0, t) : std::make_pair(t, 0.0);
    Trajectory tr = integrate(field_, start, xi_, span, settings_, {t});
    if (t > tr.t_max() + 1e-12 || t < tr.t_min() - 1e-12)
      throw OutOfDomainError("parametrization: t outside integrable span");
    tr.eval(t, x, v);
  }

  // Nearest stored node, used as the Newton seed.
  void nearest_seed(const Vec& x, Vec& c_seed, double& t_seed) const {
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < grid_size(); ++k) {
      const Trajectory& tr = grid_trajs_[k];
      for (int i = 0; i < tr.size(); ++i) {
        double d = (tr.x[i] - x).squaredNorm();
        if (d < best) {
          best = d;
          c_seed = grid_coords_[k];
          t_seed = tr.t[i];
        }
      }
    }
  }

private:
  void build_grid() {
    const int n = dim();
    const int m = n - 1;
    int half = static_cast<int>(std::floor(rho_ / h_y_));
    std::vector<Vec> coords;
    // lattice in basis coordinates, |c| <= rho
    std::vector<int> idx(m, -half);
    while (true) {
      Vec c(m);
      for (int k = 0; k < m; ++k) c[k] = idx[k] * h_y_;
      if (c.norm() <= rho_ + 1e-12) coords.push_back(c);
      int k = 0;
      for (; k < m; ++k) {
        if (++idx[k] <= half) break;
        idx[k] = -half;
      }
      if (k == m) break;
    }
    grid_coords_ = std::move(coords);
    grid_trajs_.resize(grid_coords_.size());
    std::vector<char> reduced(grid_coords_.size(), 0);
    parallel_for(static_cast<int>(grid_coords_.size()), [&](int k) {
      Vec start = x0_ + y_from_coords(grid_coords_[k]);
      if (!field_.in_domain(start)) {
        reduced[k] = 1;
        Trajectory t;
        t.t = {0.0, 1e-300};
        t.x = {start, start};
        t.v = {xi_, xi_};
        t.a = {Vec::Zero(dim()), Vec::Zero(dim())};
        grid_trajs_[k] = std::move(t);
        return;
      }
      grid_trajs_[k] = integrate(field_, start, xi_, {-tau_, tau_}, settings_);
      if (grid_trajs_[k].truncated_lo || grid_trajs_[k].truncated_hi) reduced[k] = 1;
    });
    tau_reduced_ = std::any_of(reduced.begin(), reduced.end(), [](char c) { return c != 0; });
  }

  QuadraticField field_;
  Vec x0_, xi_;
  double rho_ = 0, tau_ = 0, h_y_ = 0;
  ODESettings settings_;
  Mat basis_;
  std::vector<Vec> grid_coords_;
  std::vector<Trajectory> grid_trajs_;
  bool tau_reduced_ = false;
};

inline Parametrization build_parametrization(const QuadraticField& F, const Vec& x0, const Vec& xi,
                                             double rho, double tau, double h_y,
                                             const ODESettings& s) {
  return Parametrization(F, x0, xi, rho, tau, h_y, s);
}

struct ProjectionResult {
  Vec y;        // point of xi-perp, as an R^n vector
  Vec coords;   // the same point in the perp basis
  double t;     // t^xi_x
};

// P_xi = pi_xi o phi_xi^{-1} with cached Newton seeds.
class CurvilinearProjection {
public:
  CurvilinearProjection() = default;
  explicit CurvilinearProjection(std::shared_ptr<const Parametrization> p) : param_(std::move(p)) {}

  const Parametrization& param() const { return *param_; }
  const Vec& xi() const { return param_->xi(); }

  // Newton on (c, t) for phi(y(c) + t xi) = x. The t-column of the Jacobian is
  // the exact trajectory velocity; the c-columns use forward differences.
  ProjectionResult invert(const Vec& x, const Vec* c_seed = nullptr,
                          const double* t_seed = nullptr) const {
    const Parametrization& P = *param_;
    const int n = P.dim();
    const int m = n - 1;
    Vec c = Vec::Zero(m);
    double t = 0.0;
    if (c_seed && t_seed) {
      c = *c_seed;
      t = *t_seed;
    } else {
      P.nearest_seed(x, c, t);
    }
    double tol = std::max(P.settings().abs_tol, 1e-13 * (1.0 + x.norm()));
    Vec xc, vc;
    auto eval_ok = [&](const Vec& cc, double tt, Vec& xx, Vec& vv) -> bool {
      try {
        P.evaluate_state(cc, tt, xx, vv);
        return true;
      } catch (const Error&) {
        return false;
      }
    };
    if (!eval_ok(c, t, xc, vc)) throw InversionFailure("invert: seed not evaluable");
    Vec r = xc - x;
    for (int it = 0; it < 60; ++it) {
      if (r.norm() <= tol) {
        ProjectionResult res;
        res.coords = c;
        res.y = P.y_from_coords(c);
        res.t = t;
        return res;
      }
      Mat J(n, n);
      J.col(m) = vc;  // d phi / d t
      double fd = std::max(1e-7, 1e-7 * c.norm());
      for (int k = 0; k < m; ++k) {
        Vec cp = c;
        cp[k] += fd;
        Vec xp, vp;
        if (!eval_ok(cp, t, xp, vp)) throw InversionFailure("invert: Jacobian probe failed");
        J.col(k) = (xp - xc) / fd;
      }
      Vec step = J.partialPivLu().solve(-r);
      if (!step.allFinite()) throw InversionFailure("invert: singular Jacobian");
      double damp = 1.0;
      bool ok = false;
      for (int h = 0; h < 25; ++h) {
        Vec cn = c + damp * step.head(m);
        double tn = t + damp * step[m];
        Vec xn, vn;
        if (eval_ok(cn, tn, xn, vn) && (xn - x).norm() < r.norm()) {
          c = cn;
          t = tn;
          xc = xn;
          vc = vn;
          r = xc - x;
          ok = true;
          break;
        }
        damp *= 0.5;
      }
      if (!ok) throw InversionFailure("invert: damped Newton stalled");
    }
    throw InversionFailure("invert: iteration budget exhausted");
  }

  Vec project(const Vec& x) const { return invert(x).y; }
  double t_of(const Vec& x) const { return invert(x).t; }

private:
  std::shared_ptr<const Parametrization> param_;
};

inline ProjectionResult invert_and_project(const CurvilinearProjection& proj, const Vec& x) {
  return proj.invert(x);
}

// xi_phi(x) := phidot(P(x) + t_x xi)
inline Vec velocity_at(const Parametrization& param, const Vec& x) {
  CurvilinearProjection proj(std::make_shared<Parametrization>(param));
  auto res = proj.invert(x);
  Vec xx, vv;
  param.evaluate_state(res.coords, res.t, xx, vv);
  return vv;
}

// ---------------------------------------------------------------------------
// Families

struct FamilyDiagnostics {
  double max_roundtrip_residual = 0.0;
  int shrink_steps = 0;
};

class ProjectionFamily {
public:
  ProjectionFamily() = default;

  const Vec& x0() const { return x0_; }
  double R0() const { return R0_; }
  int size() const { return static_cast<int>(dirs_.size()); }
  const Vec& direction(int k) const { return dirs_[k]; }
  const CurvilinearProjection& projection(int k) const { return projs_[k]; }
  const QuadraticField& field() const { return field_; }
  const ODESettings& settings() const { return settings_; }
  const FamilyDiagnostics& diagnostics() const { return diag_; }

  Vec velocity(int k, const Vec& x) const {
    auto res = projs_[k].invert(x);
    Vec xx, vv;
    projs_[k].param().evaluate_state(res.coords, res.t, xx, vv);
    return vv;
  }

  friend ProjectionFamily build_family(const QuadraticField&, const Vec&, double, int,
                                       const ODESettings&, double, uint64_t);

private:
  QuadraticField field_;
  Vec x0_;
  double R0_ = 0;
  std::vector<Vec> dirs_;
  std::vector<CurvilinearProjection> projs_;
  ODESettings settings_;
  FamilyDiagnostics diag_;
};

// One curvilinear projection per sampled direction on B_{R0}(x0); R0 shrinks
// from R0_hint until every member passes the round-trip probe.
inline ProjectionFamily build_family(const QuadraticField& F, const Vec& x0, double R0_hint,
                                     int n_dirs, const ODESettings& s, double h_y = -1.0,
                                     uint64_t seed = 0) {
  const int n = F.dim();
  if (n_dirs < n * (n + 1) / 2)
    throw ConfigError("build_family: need at least n(n+1)/2 directions");
  ProjectionFamily fam;
  fam.field_ = F;
  fam.x0_ = x0;
  fam.settings_ = s;
  fam.dirs_ = sphere_directions(n, n_dirs, seed);

  double R0 = R0_hint;
  for (int attempt = 0;; ++attempt) {
    if (R0 < 1e-3 * R0_hint)
      throw FamilyConstructionFailure("build_family: R0 shrank below 1e-3 of the hint");
    double rho = 2.0 * R0;
    double tau = 2.0 * R0;
    double hy = h_y > 0 ? h_y : rho / 8.0;
    bool ok = true;
    double worst = 0.0;
    std::vector<CurvilinearProjection> projs;
    projs.reserve(fam.dirs_.size());
    for (const Vec& xi : fam.dirs_) {
      std::shared_ptr<Parametrization> par;
      try {
        par = std::make_shared<Parametrization>(F, x0, xi, rho, tau, hy, s);
      } catch (const Error&) {
        ok = false;
        break;
      }
      CurvilinearProjection proj(par);
      // round-trip probe on B_{R0}(x0); a family that cannot be probed at all
      // covers nothing and must not pass
      Rng probe(seed ^ 0xbeefull);  // same probe points for every attempt
      int probed = 0;
      for (int q = 0; q < 12 && ok; ++q) {
        Vec x = probe.point_in_ball(x0, R0);
        if (!F.in_domain(x)) continue;
        ++probed;
        try {
          auto res = proj.invert(x);
          Vec back = par->evaluate(res.coords, res.t);
          worst = std::max(worst, (back - x).norm());
          if ((back - x).norm() > 1e-8) ok = false;
        } catch (const Error&) {
          ok = false;
        }
      }
      if (probed < 6) ok = false;
      if (!ok) break;
      projs.push_back(std::move(proj));
    }
    if (ok) {
      fam.R0_ = R0;
      fam.projs_ = std::move(projs);
      fam.diag_.max_roundtrip_residual = worst;
      fam.diag_.shrink_steps = attempt;
      return fam;
    }
    R0 *= 0.7;
  }
}

// ---------------------------------------------------------------------------
// Rescaled maps phi_{xi,x0,r}(x) = (phi_{xi,x0}(r x) - x0)/r, P_r = pi_xi o phi_r^{-1}

struct RescaledMaps {
  std::function<Vec(const Vec&)> phi_r;
  std::function<Vec(const Vec&)> P_r;
  double sup_phi_dev = 0.0;  // sup_{|x|<=1} |phi_r(x) - x|
  double sup_P_dev = 0.0;    // sup_{|x|<=1} |P_r(x) - pi_xi(x)|
  bool reduced_radius = false;
};

inline RescaledMaps rescaled_family(const QuadraticField& F, const Vec& x0, double r,
                                    const Vec& xi_in, const ODESettings& s, int probe_count = 64,
                                    uint64_t seed = 0) {
  if (!(r > 0)) throw ConfigError("rescaled_family: r must be positive");
  const int n = F.dim();
  Vec xi = xi_in.normalized();
  auto par = std::make_shared<Parametrization>(F, x0, xi, 2.0 * r, 2.0 * r,
                                               std::max(r / 4.0, 1e-3), s);
  CurvilinearProjection proj(par);
  Mat basis = par->basis();

  RescaledMaps out;
  out.phi_r = [par, basis, xi, x0, r](const Vec& x) {
    // split r x = y + t xi
    double t = (r * x).dot(xi);
    Vec c = basis.transpose() * (r * x - t * xi);
    return Vec((par->evaluate(c, t) - x0) / r);
  };
  out.P_r = [par, proj, xi, x0, r](const Vec& x) {
    Vec xx = x0 + r * x;
    auto res = proj.invert(xx);
    return Vec(res.y / r);
  };

  Rng rng(seed ^ 0x5ca1ull);
  Mat pi = Mat::Identity(n, n) - xi * xi.transpose();
  for (int k = 0; k < probe_count; ++k) {
    Vec x = rng.point_in_ball(Vec::Zero(n), 1.0);
    if (!F.in_domain(x0 + r * x)) {
      out.reduced_radius = true;
      continue;
    }
    try {
      out.sup_phi_dev = std::max(out.sup_phi_dev, (out.phi_r(x) - x).norm());
      out.sup_P_dev = std::max(out.sup_P_dev, (out.P_r(x) - pi * x).norm());
    } catch (const Error&) {
      out.reduced_radius = true;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Transversality probe (H.1)-(H.3) on S_i = {|xi.e_i| >= 1/sqrt(n)}

struct TransversalityReport {
  double sup_D1_P = 0.0, sup_D2_P = 0.0;        // (H.1)
  double sup_D1_T = 0.0, sup_D2_T = 0.0;        // (H.3)
  std::vector<std::pair<double, double>> margin;  // c -> inf{|J_xi T| : |T| <= c}  (H.2)
  bool h1_pass = false, h2_pass = false, h3_pass = false;
  double h2_constant = 0.0;  // best c with margin(c) >= c
};

namespace detail {
// P^i_xi(x) as the (n-1) components of pi_{e_i} P_xi(x) with the i-th dropped.
inline Vec project_drop(const Vec& p, int i) {
  Vec out(p.size() - 1);
  int c = 0;
  for (int k = 0; k < p.size(); ++k)
    if (k != i) out[c++] = p[k];
  return out;
}
}  // namespace detail

inline TransversalityReport transversality_probe(const QuadraticField& F, const Vec& x0, double R0,
                                                 int n_pairs, const ODESettings& s,
                                                 int xi_grid = 24, uint64_t seed = 0,
                                                 double h1_threshold = 50.0,
                                                 double h3_threshold = 50.0) {
  const int n = F.dim();
  TransversalityReport rep;
  Rng rng(seed ^ 0x7abcull);

  // sample pairs in B_{R0}(x0)
  std::vector<std::pair<Vec, Vec>> pairs;
  while (static_cast<int>(pairs.size()) < n_pairs) {
    Vec a = rng.point_in_ball(x0, R0), b = rng.point_in_ball(x0, R0);
    if ((a - b).norm() < 0.05 * R0) continue;
    if (!F.in_domain(a) || !F.in_domain(b)) continue;
    pairs.emplace_back(a, b);
  }

  // cached projections per probed direction
  std::map<long, CurvilinearProjection> cache;
  auto key_of = [&](const Vec& xi) {
    long key = 0;
    for (int d = 0; d < n; ++d) key = key * 100003 + std::lround(xi[d] * 1e6);
    return key;
  };
  auto P_of = [&](const Vec& xi, const Vec& x) {
    long key = key_of(xi);
    auto it = cache.find(key);
    if (it == cache.end()) {
      auto par = std::make_shared<Parametrization>(F, x0, xi, 2.0 * R0, 2.0 * R0, R0 / 2.0, s);
      it = cache.emplace(key, CurvilinearProjection(par)).first;
    }
    return it->second.invert(x).y;
  };

  std::vector<std::pair<double, double>> t_margin_samples;  // (|T|, |J T|)
  const double dth = 1e-3;

  for (int i = 0; i < n; ++i) {
    // directions on S_i = {|xi.e_i| >= 1/sqrt(n)}
    std::vector<Vec> dirs;
    for (const Vec& xi : sphere_directions(n, xi_grid, seed))
      if (std::abs(xi[i]) >= 1.0 / std::sqrt(double(n))) dirs.push_back(xi);
    for (const Vec& xi : dirs) {
      // orthonormal tangent basis at xi for sphere derivatives
      Mat tang = orthonormal_complement(xi);
      auto xi_off = [&](int dir, double eps) {
        return Vec((xi + eps * tang.col(dir)).normalized());
      };
      for (auto& [a, b] : pairs) {
        auto Ti = [&](const Vec& ang, const Vec& x, const Vec& xp) {
          Vec d = detail::project_drop(P_of(ang, x), i) - detail::project_drop(P_of(ang, xp), i);
          return Vec(d / (x - xp).norm());
        };
        try {
          Vec Pa0 = detail::project_drop(P_of(xi, a), i);
          Vec T0 = Ti(xi, a, b);
          Mat JP(n - 1, n - 1), JT(n - 1, n - 1);
          double d2p = 0.0, d2t = 0.0;
          for (int d = 0; d < n - 1; ++d) {
            Vec Pap = detail::project_drop(P_of(xi_off(d, dth), a), i);
            Vec Pam = detail::project_drop(P_of(xi_off(d, -dth), a), i);
            JP.col(d) = (Pap - Pam) / (2 * dth);
            d2p = std::max(d2p, ((Pap - 2 * Pa0 + Pam) / (dth * dth)).norm());
            Vec Tp = Ti(xi_off(d, dth), a, b), Tm = Ti(xi_off(d, -dth), a, b);
            JT.col(d) = (Tp - Tm) / (2 * dth);
            d2t = std::max(d2t, ((Tp - 2 * T0 + Tm) / (dth * dth)).norm());
          }
          rep.sup_D1_P = std::max(rep.sup_D1_P, JP.norm());
          rep.sup_D2_P = std::max(rep.sup_D2_P, d2p);
          rep.sup_D1_T = std::max(rep.sup_D1_T, JT.norm());
          rep.sup_D2_T = std::max(rep.sup_D2_T, d2t);
          t_margin_samples.emplace_back(T0.norm(), std::abs(JT.determinant()));
        } catch (const Error&) {
          // skip probe points that leave the covered region
        }
      }
    }
  }

  // empirical margin as a function of c
  for (double c : {0.05, 0.1, 0.2, 0.3, 0.5}) {
    double inf_j = std::numeric_limits<double>::infinity();
    for (auto& [tn, j] : t_margin_samples)
      if (tn <= c) inf_j = std::min(inf_j, j);
    if (inf_j == std::numeric_limits<double>::infinity()) inf_j = 0.0;
    rep.margin.emplace_back(c, inf_j);
    if (inf_j >= c) rep.h2_constant = std::max(rep.h2_constant, c);
  }
  rep.h1_pass = rep.sup_D1_P < h1_threshold && rep.sup_D2_P < h1_threshold;
  rep.h3_pass = rep.sup_D1_T < h3_threshold && rep.sup_D2_T < h3_threshold;
  rep.h2_pass = rep.h2_constant > 0.0;
  return rep;
}

// Sampled Lipschitz estimate of P over a box: random pairs plus deterministic
// pairs along the perp-basis directions (which attain the sup for F = 0).
inline double lipschitz_estimate(const CurvilinearProjection& proj, const Box& U, int n_pairs,
                                 uint64_t seed = 0) {
  Rng rng(seed ^ 0x11f5ull);
  double lip = 0.0;
  auto try_pair = [&](const Vec& a, const Vec& b) {
    if ((a - b).norm() < 1e-9) return;
    try {
      Vec pa = proj.invert(a).y, pb = proj.invert(b).y;
      lip = std::max(lip, (pa - pb).norm() / (a - b).norm());
    } catch (const Error&) {
    }
  };
  const Mat& basis = proj.param().basis();
  Vec c = U.center();
  double half = 0.5 * U.extents.minCoeff();
  for (int j = 0; j < basis.cols(); ++j) {
    try_pair(c - half * basis.col(j), c + half * basis.col(j));
    try_pair(c, c + half * basis.col(j));
  }
  try_pair(c - half * proj.xi(), c + half * proj.xi());
  int got = 0, guard = 0;
  while (got < n_pairs && ++guard < 20 * n_pairs) {
    Vec a = rng.point_in_box(U), b = rng.point_in_box(U);
    if ((a - b).norm() < 1e-6) continue;
    try_pair(a, b);
    ++got;
  }
  return lip;
}

}  // namespace curvislice

// Second-order ODE integration for xddot = F(x, xdot): adaptive Dormand-Prince
// embedded pair (default) and fixed-step RK4 for deterministic baselines.
// Trajectories carry quintic-Hermite dense output built from (x, v, a) nodes.
#pragma once

#include <limits>

#include "curvislice/field.hpp"

namespace curvislice {

enum class OdeMethod { AdaptiveRK, FixedRK4 };

struct ODESettings {
  double rel_tol = 1e-9;
  double abs_tol = 1e-11;
  double max_step = 0.05;
  OdeMethod method = OdeMethod::AdaptiveRK;
  double fixed_step = 1e-3;
  long max_steps = 2'000'000;

  void validate() const {
    if (!(rel_tol > 0) || !(abs_tol > 0) || !(max_step > 0) || !(fixed_step > 0))
      throw ConfigError("ODESettings: tolerances and steps must be positive");
  }
};

struct Trajectory {
  std::vector<double> t;       // strictly increasing
  std::vector<Vec> x, v, a;    // positions, velocities, accelerations at nodes
  bool truncated_lo = false;   // curve left the field domain before t_span.min
  bool truncated_hi = false;

  int size() const { return static_cast<int>(t.size()); }
  double t_min() const { return t.front(); }
  double t_max() const { return t.back(); }

  // Dense state evaluation by quintic Hermite on each step (velocity is the
  // exact derivative of the position interpolant).
  void eval(double tq, Vec& xq, Vec& vq) const {
    int k = locate(tq);
    double h = t[k + 1] - t[k];
    double s = (tq - t[k]) / h;
    // quintic Hermite basis on [0,1] for values p0,p1, derivatives m0,m1, second c0,c1
    double s2 = s * s, s3 = s2 * s, s4 = s3 * s, s5 = s4 * s;
    double H0 = 1 - 10 * s3 + 15 * s4 - 6 * s5;
    double H1 = s - 6 * s3 + 8 * s4 - 3 * s5;
    double H2 = 0.5 * s2 - 1.5 * s3 + 1.5 * s4 - 0.5 * s5;
    double H3 = 0.5 * s3 - s4 + 0.5 * s5;
    double H4 = -4 * s3 + 7 * s4 - 3 * s5;
    double H5 = 10 * s3 - 15 * s4 + 6 * s5;
    xq = H0 * x[k] + H1 * (h * v[k]) + H2 * (h * h * a[k]) + H3 * (h * h * a[k + 1]) +
         H4 * (h * v[k + 1]) + H5 * x[k + 1];
    double d0 = -30 * s2 + 60 * s3 - 30 * s4;
    double d1 = 1 - 18 * s2 + 32 * s3 - 15 * s4;
    double d2 = s - 4.5 * s2 + 6 * s3 - 2.5 * s4;
    double d3 = 1.5 * s2 - 4 * s3 + 2.5 * s4;
    double d4 = -12 * s2 + 28 * s3 - 15 * s4;
    double d5 = 30 * s2 - 60 * s3 + 30 * s4;
    vq = (d0 * x[k] + d1 * (h * v[k]) + d2 * (h * h * a[k]) + d3 * (h * h * a[k + 1]) +
          d4 * (h * v[k + 1]) + d5 * x[k + 1]) /
         h;
  }

  // Acceleration of the dense interpolant (second derivative of the quintic).
  Vec accel(double tq) const {
    int k = locate(tq);
    double h = t[k + 1] - t[k];
    double s = (tq - t[k]) / h;
    double s2 = s * s, s3 = s2 * s;
    double e0 = -60 * s + 180 * s2 - 120 * s3;
    double e1 = -36 * s + 96 * s2 - 60 * s3;
    double e2 = 1 - 9 * s + 18 * s2 - 10 * s3;
    double e3 = 3 * s - 12 * s2 + 10 * s3;
    double e4 = -24 * s + 84 * s2 - 60 * s3;
    double e5 = 60 * s - 180 * s2 + 120 * s3;
    return (e0 * x[k] + e1 * (h * v[k]) + e2 * (h * h * a[k]) + e3 * (h * h * a[k + 1]) +
            e4 * (h * v[k + 1]) + e5 * x[k + 1]) /
           (h * h);
  }

  Vec position(double tq) const {
    Vec xq, vq;
    eval(tq, xq, vq);
    return xq;
  }
  Vec velocity(double tq) const {
    Vec xq, vq;
    eval(tq, xq, vq);
    return vq;
  }

  Vec end_position() const { return x.back(); }
  Vec end_velocity() const { return v.back(); }

private:
  int locate(double tq) const {
    auto it = std::upper_bound(t.begin(), t.end(), tq);
    int k = static_cast<int>(it - t.begin()) - 1;
    return std::clamp(k, 0, size() - 2);
  }
};

namespace detail {

// One Dormand-Prince RK5(4) step on the first-order system y = (x, v).
// Returns the embedded error estimate (scaled max norm).
struct DP45 {
  static constexpr double c[7] = {0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
  static constexpr double a[7][6] = {
      {},
      {1.0 / 5},
      {3.0 / 40, 9.0 / 40},
      {44.0 / 45, -56.0 / 15, 32.0 / 9},
      {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
      {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
      {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
  static constexpr double b5[7] = {35.0 / 384,      0.0,        500.0 / 1113, 125.0 / 192,
                                   -2187.0 / 6784,  11.0 / 84,  0.0};
  static constexpr double b4[7] = {5179.0 / 57600,  0.0,          7571.0 / 16695, 393.0 / 640,
                                   -92097.0 / 339200, 187.0 / 2100, 1.0 / 40};
};

struct SecondOrderRhs {
  const QuadraticField& F;
  double pad;
  // y = [x; v] -> dy = [v; F(x,v)], throws OutOfDomainError outside the field box.
  void operator()(const Vec& y, Vec& dy) const {
    int n = static_cast<int>(y.size()) / 2;
    Vec x = y.head(n), v = y.tail(n);
    dy.resize(2 * n);
    dy.head(n) = v;
    dy.tail(n) = F.eval(x, v);
  }
};

}  // namespace detail

// Integrate xddot = F(x, xdot) with x(0)=x0, xdot(0)=v0 over t_span (must
// contain 0). mandatory_ts, when given, become exact output nodes. If the
// curve exits the field's domain box the result is truncated and flagged.
inline Trajectory integrate(const QuadraticField& F, const Vec& x0, const Vec& v0,
                            std::pair<double, double> t_span, const ODESettings& settings,
                            const std::vector<double>& mandatory_ts = {}) {
  settings.validate();
  if (t_span.first > 0 || t_span.second < 0) throw ConfigError("integrate: t_span must contain 0");
  const int n = F.dim();
  if (!F.in_domain(x0)) throw OutOfDomainError("integrate: x0 outside field domain");

  // one-directional sweep helper; dir = +1 or -1, horizon >= 0
  auto sweep = [&](int dir, double horizon, Trajectory& out) -> bool {
    if (horizon <= 0) return false;
    std::vector<double> stops;  // absolute |t| stop values in (0, horizon]
    for (double tm : mandatory_ts) {
      double s = dir * tm;
      if (s > 1e-15 && s <= horizon + 1e-15) stops.push_back(std::min(s, horizon));
    }
    stops.push_back(horizon);
    std::sort(stops.begin(), stops.end());
    stops.erase(std::unique(stops.begin(), stops.end(),
                            [](double a, double b) { return std::abs(a - b) < 1e-14; }),
                stops.end());

    detail::SecondOrderRhs rhs{F, 0.0};
    Vec y(2 * n), ynew(2 * n), yerr(2 * n), k[7];
    for (auto& ki : k) ki.resize(2 * n);
    y.head(n) = x0;
    y.tail(n) = dir * v0;  // integrate in s = dir * t
    double s = 0.0;

    auto record = [&](double sv, const Vec& yv) {
      Vec xx = yv.head(n), vv = dir * yv.tail(n);
      out.t.push_back(dir * sv);
      out.x.push_back(xx);
      out.v.push_back(vv);
      out.a.push_back(F.eval(xx, vv));
    };
    record(0.0, y);

    double h = std::min(settings.max_step, stops.front());
    if (settings.method == OdeMethod::FixedRK4) h = settings.fixed_step;
    long steps = 0;
    size_t next_stop = 0;

    while (next_stop < stops.size()) {
      if (++steps > settings.max_steps) throw StiffnessError("integrate: step budget exhausted");
      double target = stops[next_stop];
      bool landing = false;
      double hs = h;
      if (s + hs >= target - 1e-14) {
        hs = target - s;
        landing = true;
      }
      if (hs < 1e-14) {
        // degenerate landing step
        if (std::abs(dir * target - out.t.back()) > 1e-15) record(target, y);
        ++next_stop;
        continue;
      }

      bool accept = true;
      try {
        if (settings.method == OdeMethod::FixedRK4) {
          // classical RK4
          Vec k1(2 * n), k2(2 * n), k3(2 * n), k4(2 * n);
          rhs(y, k1);
          rhs(y + 0.5 * hs * k1, k2);
          rhs(y + 0.5 * hs * k2, k3);
          rhs(y + hs * k3, k4);
          ynew = y + (hs / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        } else {
          rhs(y, k[0]);
          for (int i = 1; i < 7; ++i) {
            Vec yi = y;
            for (int j = 0; j < i; ++j)
              if (detail::DP45::a[i][j] != 0.0) yi += hs * detail::DP45::a[i][j] * k[j];
            rhs(yi, k[i]);
          }
          ynew = y;
          yerr.setZero();
          for (int i = 0; i < 7; ++i) {
            if (detail::DP45::b5[i] != 0.0) ynew += hs * detail::DP45::b5[i] * k[i];
            double db = detail::DP45::b5[i] - detail::DP45::b4[i];
            if (db != 0.0) yerr += hs * db * k[i];
          }
          double err = 0.0;
          for (int i = 0; i < 2 * n; ++i) {
            double sc = settings.abs_tol +
                        settings.rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            err = std::max(err, std::abs(yerr[i]) / sc);
          }
          if (err > 1.0) {
            accept = false;
            h = std::max(0.2 * hs, 0.9 * hs * std::pow(err, -0.25));
            if (h < 1e-13 * std::max(1.0, std::abs(s)))
              throw StiffnessError("integrate: step size underflow");
            continue;
          }
          double grow = err > 0 ? 0.9 * std::pow(err, -0.2) : 5.0;
          double hnew = hs * std::clamp(grow, 0.2, 5.0);
          // a clipped landing step must not collapse the working step size
          h = std::min(settings.max_step, landing ? std::max(h, hnew) : hnew);
        }
      } catch (const OutOfDomainError&) {
        // curve exits the declared domain: halt this sweep with partial result
        return true;
      }
      if (!accept) continue;
      // reject the step if the endpoint itself left the domain
      if (!F.in_domain(Vec(ynew.head(n)))) return true;
      s += hs;
      y = ynew;
      if (landing) {
        record(target, y);
        ++next_stop;
      } else {
        record(s, y);
      }
    }
    return false;
  };

  Trajectory fwd, bwd;
  bool trunc_hi = sweep(+1, t_span.second, fwd);
  bool trunc_lo = sweep(-1, -t_span.first, bwd);

  Trajectory out;
  out.truncated_hi = trunc_hi;
  out.truncated_lo = trunc_lo;
  // merge: reversed backward sweep (excluding its t=0 node) + forward sweep
  for (int i = bwd.size() - 1; i >= 1; --i) {
    out.t.push_back(bwd.t[i]);
    out.x.push_back(bwd.x[i]);
    out.v.push_back(bwd.v[i]);
    out.a.push_back(bwd.a[i]);
  }
  if (fwd.size() == 0) {  // t_span was [lo, 0]
    out.t.push_back(0.0);
    out.x.push_back(x0);
    out.v.push_back(v0);
    out.a.push_back(F.eval(x0, v0));
  } else {
    out.t.insert(out.t.end(), fwd.t.begin(), fwd.t.end());
    out.x.insert(out.x.end(), fwd.x.begin(), fwd.x.end());
    out.v.insert(out.v.end(), fwd.v.begin(), fwd.v.end());
    out.a.insert(out.a.end(), fwd.a.begin(), fwd.a.end());
  }
  if (out.size() < 2) {
    // guarantee the length >= 2 invariant even for zero-length spans
    out.t.push_back(out.t.back());
    out.x.push_back(out.x.back());
    out.v.push_back(out.v.back());
    out.a.push_back(out.a.back());
    out.t.back() += 1e-300;
  }
  return out;
}

}  // namespace curvislice

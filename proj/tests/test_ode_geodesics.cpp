#include <catch2/catch.hpp>

#include "curvislice/geodesics.hpp"

using namespace curvislice;

namespace {
Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}
Box hyp_box() {
  Vec o(2), e(2);
  o << -2.0, 0.1;
  e << 4.0, 3.9;
  return Box(o, e);
}
}  // namespace

TEST_CASE("integrate: F=0 gives straight lines to rounding") {
  auto Z = QuadraticField::zero(2, Box::cube(2, -2, 2));
  ODESettings s;
  auto tr = integrate(Z, v2(0, 0), v2(1, 0), {0.0, 1.0}, s, {0.25, 0.5, 1.0});
  REQUIRE(tr.size() >= 2);
  CHECK((tr.end_position() - v2(1, 0)).norm() <= 1e-12);
  for (double t : {0.1, 0.25, 0.37, 0.5, 0.93}) {
    CHECK((tr.position(t) - v2(t, 0)).norm() <= 1e-12);
    CHECK((tr.velocity(t) - v2(1, 0)).norm() <= 1e-12);
  }
}

TEST_CASE("integrate: hyperbolic closed-form geodesics") {
  auto H = hyperbolic_halfplane_field(hyp_box());
  ODESettings s;
  s.rel_tol = 1e-10;
  s.abs_tol = 1e-12;

  // vertical geodesic (0, e^t)
  auto tr = integrate(H, v2(0, 1), v2(0, 1), {0.0, 1.0}, s, {1.0});
  CHECK((tr.end_position() - v2(0, std::exp(1.0))).norm() <= 1e-8);
  for (double t : {0.2, 0.5, 0.8})
    CHECK((tr.position(t) - v2(0, std::exp(t))).norm() <= 1e-8);

  // unit semicircle geodesic (tanh t, sech t)
  auto tc = integrate(H, v2(0, 1), v2(1, 0), {0.0, 1.0}, s, {1.0});
  CHECK((tc.end_position() - v2(std::tanh(1.0), 1.0 / std::cosh(1.0))).norm() <= 1e-8);
}

TEST_CASE("integrate: ODE residual at collocation midpoints") {
  auto H = hyperbolic_halfplane_field(hyp_box());
  ODESettings s;
  s.rel_tol = 1e-9;
  s.max_step = 0.01;
  auto tr = integrate(H, v2(0.2, 1.0), v2(0.6, 0.8), {-0.5, 0.5}, s);
  REQUIRE(tr.t.size() == tr.x.size());
  REQUIRE(tr.x.size() == tr.v.size());
  REQUIRE(tr.size() >= 2);
  for (int k = 0; k + 1 < tr.size(); ++k) {
    double tm = 0.5 * (tr.t[k] + tr.t[k + 1]);
    Vec xm, vm;
    tr.eval(tm, xm, vm);
    Vec resid = tr.accel(tm) - H.eval(xm, vm);
    CHECK(resid.norm() <= 10.0 * s.rel_tol);
  }
}

TEST_CASE("integrate: domain exit yields a flagged truncated trajectory") {
  Vec o(2), e(2);
  o << -0.5, 0.5;
  e << 1.0, 1.0;
  auto H = hyperbolic_halfplane_field(Box(o, e));
  ODESettings s;
  auto tr = integrate(H, v2(0, 1), v2(0, 1), {0.0, 2.0}, s);  // exits at x2 = 1.5
  CHECK(tr.truncated_hi);
  CHECK(tr.t_max() < 2.0);
  CHECK(tr.t_max() > 0.1);
}

TEST_CASE("exp_map: translation, closed form, and scaling identity") {
  auto Z = QuadraticField::zero(2, Box::cube(2, -3, 3));
  ODESettings s;
  CHECK((exp_map(Z, v2(0.2, -0.4), v2(1.0, 0.5), s) - v2(1.2, 0.1)).norm() <= 1e-12);

  auto H = hyperbolic_halfplane_field(hyp_box());
  s.rel_tol = 1e-10;
  CHECK((exp_map(H, v2(0, 1), v2(0, 1), s) - v2(0, std::exp(1.0))).norm() <= 1e-8);
  // exp(s xi) = v_xi(s), per the 2-homogeneity scaling
  Vec half = exp_map(H, v2(0, 1), v2(0, 0.5), s);
  CHECK((half - v2(0, std::exp(0.5))).norm() <= 1e-8);
  auto tr = shoot(H, v2(0, 1), v2(0, 1), 0.5, s);
  CHECK((half - tr.end_position()).norm() <= 1e-8);
}

TEST_CASE("scaling identity v_{s xi}(t) = v_xi(s t) on random directions") {
  auto H = hyperbolic_halfplane_field(hyp_box());
  ODESettings set;
  set.rel_tol = 1e-10;
  Rng rng(3);
  for (int k = 0; k < 5; ++k) {
    Vec xi = rng.unit_vector(2) * rng.uniform(0.2, 0.5);
    for (double s : {0.25, 0.5, 2.0}) {
      double t = rng.uniform(0.1, 0.45);
      if (s * t > 0.9) continue;
      auto a = shoot(H, v2(0, 1), Vec(s * xi), t, set).end_position();
      auto b = shoot(H, v2(0, 1), xi, s * t, set).end_position();
      CHECK((a - b).norm() <= 1e-7);
    }
  }
}

TEST_CASE("exp_inverse: exact for F=0, closed forms for hyperbolic") {
  auto Z = QuadraticField::zero(2, Box::cube(2, -3, 3));
  ODESettings s;
  Vec x0 = v2(0.1, 0.2), x = v2(0.7, -0.5);
  CHECK((exp_inverse(Z, x0, x, s) - (x - x0)).norm() <= 1e-10);

  auto H = hyperbolic_halfplane_field(hyp_box());
  s.rel_tol = 1e-10;
  s.abs_tol = 1e-12;
  CHECK((exp_inverse(H, v2(0, 1), v2(0, std::exp(1.0)), s) - v2(0, 1)).norm() <= 1e-7);
  CHECK((exp_inverse(H, v2(0, 1), v2(std::tanh(1.0), 1.0 / std::cosh(1.0)), s) - v2(1, 0)).norm() <=
        1e-7);
}

TEST_CASE("exp differential at 0 is the identity (finite differences)") {
  auto H = hyperbolic_halfplane_field(hyp_box());
  ODESettings s;
  s.rel_tol = 1e-10;
  Mat J = exp_jacobian(H, v2(0, 1), Vec(Vec::Zero(2)), s, 1e-4);
  CHECK((J - Mat::Identity(2, 2)).norm() <= 1e-5);
}

TEST_CASE("estimate_injectivity: translation case and hyperbolic self-consistency") {
  auto Z = QuadraticField::zero(2, Box::cube(2, -1, 1));
  ODESettings s;
  Vec x0 = v2(0, 0);
  auto est = estimate_injectivity(Z, x0, s);
  CHECK(est.certified);
  CHECK(est.radius >= 0.9 * 1.0 - 1e-9);

  auto H = hyperbolic_halfplane_field(hyp_box());
  s.rel_tol = 1e-9;
  auto eh = estimate_injectivity(H, v2(0, 1), s);
  CHECK(eh.certified);
  CHECK(eh.radius > 0.0);
  Rng rng(11);
  for (int k = 0; k < 100; ++k) {
    Vec x = rng.point_in_ball(v2(0, 1), eh.radius);
    if (!H.in_domain(x)) continue;
    CHECK_NOTHROW(exp_inverse(H, v2(0, 1), x, s));
  }
}

TEST_CASE("estimate_injectivity: stable under tolerance tightening") {
  auto H = hyperbolic_halfplane_field(hyp_box());
  ODESettings a, b;
  a.abs_tol = 1e-8;
  b.abs_tol = 1e-9;
  double ra = estimate_injectivity(H, v2(0, 1), a).radius;
  double rb = estimate_injectivity(H, v2(0, 1), b).radius;
  CHECK(rb >= 0.5 * ra - 1e-12);
}

TEST_CASE("normal_maps: translation case and hyperbolic closed form") {
  auto Z = QuadraticField::zero(2, Box::cube(2, -3, 3));
  ODESettings s;
  Vec x0 = v2(0.1, -0.2), x = v2(1.1, 0.3);
  auto nm = normal_maps(Z, x0, x, s);
  CHECK((nm.phi - (x - x0).normalized()).norm() <= 1e-9);
  CHECK(nm.dist == Approx((x - x0).norm()).epsilon(1e-9));
  CHECK((nm.chi - nm.phi).norm() <= 1e-9);

  auto H = hyperbolic_halfplane_field(hyp_box());
  s.rel_tol = 1e-10;
  s.abs_tol = 1e-12;
  auto nh = normal_maps(H, v2(0, 1), v2(0, std::exp(1.0)), s);
  CHECK((nh.phi - v2(0, 1)).norm() <= 1e-7);
  CHECK(nh.dist == Approx(1.0).margin(1e-7));
  CHECK((nh.chi - v2(0, std::exp(1.0))).norm() <= 1e-6);

  CHECK_THROWS(normal_maps(H, v2(0, 1), v2(0, 1), s));
}

TEST_CASE("bvp_geodesic: straight segment and vertical hyperbolic geodesic") {
  auto Z = QuadraticField::zero(2, Box::cube(2, -3, 3));
  ODESettings s;
  Vec a = v2(0, 0), b = v2(0.6, 0.8);
  auto r = bvp_geodesic(Z, a, b, s);
  CHECK(r.t_ab == Approx(1.0).margin(1e-9));
  CHECK((r.exit_velocity - v2(0.6, 0.8)).norm() <= 1e-9);
  CHECK((r.entry_velocity - v2(0.6, 0.8)).norm() <= 1e-9);

  auto H = hyperbolic_halfplane_field(hyp_box());
  s.rel_tol = 1e-10;
  s.abs_tol = 1e-12;
  auto rh = bvp_geodesic(H, v2(0, 1), v2(0, std::exp(1.0)), s);
  CHECK((rh.exit_velocity - v2(0, 1)).norm() <= 1e-7);
  CHECK((rh.entry_velocity - v2(0, std::exp(1.0))).norm() <= 1e-6);
  CHECK(rh.t_ab == Approx(1.0).margin(1e-7));
}

TEST_CASE("bvp_geodesic: time reversal on random hyperbolic pairs") {
  auto H = hyperbolic_halfplane_field(hyp_box());
  ODESettings s;
  s.rel_tol = 1e-10;
  s.abs_tol = 1e-12;
  Rng rng(5);
  int done = 0;
  for (int k = 0; k < 40 && done < 20; ++k) {
    Vec a = v2(rng.uniform(-0.4, 0.4), rng.uniform(0.8, 1.3));
    Vec b = a + 0.35 * rng.unit_vector(2);
    if (!H.in_domain(b)) continue;
    BvpResult fwd, bwd;
    try {
      fwd = bvp_geodesic(H, a, b, s);
      bwd = bvp_geodesic(H, b, a, s);
    } catch (const BvpFailure&) {
      continue;
    }
    Vec entry_fwd = fwd.entry_velocity;             // velocity arriving at b
    Vec exit_bwd = bwd.exit_velocity * entry_fwd.norm();  // unit, rescale to compare
    CHECK((entry_fwd + exit_bwd).norm() <= 1e-6);
    ++done;
  }
  CHECK(done == 20);
}

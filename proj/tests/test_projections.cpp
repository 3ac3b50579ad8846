#include <catch2/catch.hpp>

#include "curvislice/projections.hpp"

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
ODESettings tight() {
  ODESettings s;
  s.rel_tol = 1e-10;
  s.abs_tol = 1e-12;
  return s;
}
}  // namespace

TEST_CASE("build_parametrization: F=0 is the affine map, velocities start at xi") {
  auto Z = QuadraticField::zero(2, Box::cube(2, -3, 3));
  Vec x0 = v2(0.1, 0.2), xi = v2(0, 1);
  auto par = build_parametrization(Z, x0, xi, 1.0, 1.0, 0.25, tight());
  for (int k = 0; k < par.grid_size(); ++k) {
    const Vec& c = par.grid_coord(k);
    Vec y = par.y_from_coords(c);
    for (double t : {-0.5, 0.0, 0.7}) {
      CHECK((par.evaluate(c, t) - (x0 + y + t * xi)).norm() <= 1e-12);
    }
    CHECK((par.grid_trajectory(k).velocity(0.0) - xi).norm() <= 1e-10);
  }
}

TEST_CASE("build_parametrization: hyperbolic vertical trajectories") {
  auto H = hyperbolic_halfplane_field(hyp_box());
  Vec x0 = v2(0, 1), xi = v2(0, 1);
  auto par = build_parametrization(H, x0, xi, 0.6, 0.8, 0.2, tight());
  // y = (0.2, 0) in xi-perp: trajectory (0.2, e^t)
  Vec c = par.coords_from_y(v2(0.2, 0.0));
  for (double t : {-0.5, 0.3, 0.8}) {
    CHECK((par.evaluate(c, t) - v2(0.2, std::exp(t))).norm() <= 1e-8);
  }
  // velocity at t=0 equals xi on every grid line
  for (int k = 0; k < par.grid_size(); ++k)
    CHECK((par.grid_trajectory(k).velocity(0.0) - xi).norm() <= 1e-10);
}

TEST_CASE("velocity_at: affine and hyperbolic values, small-r asymptotics") {
  auto Z = QuadraticField::zero(2, Box::cube(2, -3, 3));
  auto parz = build_parametrization(Z, v2(0, 0), v2(0, 1), 1.0, 1.0, 0.25, tight());
  CHECK((velocity_at(parz, v2(0.3, 0.4)) - v2(0, 1)).norm() <= 1e-10);

  auto H = hyperbolic_halfplane_field(hyp_box());
  auto parh = build_parametrization(H, v2(0, 1), v2(0, 1), 0.6, 0.8, 0.2, tight());
  Vec vh = velocity_at(parh, v2(0.2, std::exp(0.5)));
  CHECK((vh - v2(0, std::exp(0.5))).norm() <= 1e-7);

  // xi_phi(x0 + r x) -> xi with first-order rate: the vertical-family closed
  // form gives xi_phi - xi = (0, e^{r x.xi} - 1), so the deviation is bounded
  // by ~r|x| and halves when r halves.
  Rng rng(2);
  auto max_dev = [&](double r) {
    Rng probe(2);
    double m = 0.0;
    for (int k = 0; k < 20; ++k) {
      Vec x = probe.point_in_ball(Vec::Zero(2), 1.0);
      m = std::max(m, (velocity_at(parh, v2(0, 1) + r * x) - v2(0, 1)).norm());
    }
    return m;
  };
  double d1 = max_dev(0.05), d2 = max_dev(0.025);
  CHECK(d1 <= 1.2 * 0.05);
  CHECK(d2 <= 1.2 * 0.025);
  CHECK(d1 / d2 >= std::pow(2.0, 0.9));  // empirical order >= 0.9
}

TEST_CASE("invert_and_project: orthogonal reduction and hyperbolic closed form") {
  auto Z = QuadraticField::zero(2, Box::cube(2, -3, 3));
  Vec x0 = v2(0.1, -0.3), xi = v2(0, 1);
  auto par = std::make_shared<Parametrization>(Z, x0, xi, 1.5, 1.5, 0.25, tight());
  CurvilinearProjection proj(par);
  Rng rng(9);
  for (int k = 0; k < 50; ++k) {
    Vec x = x0 + rng.point_in_ball(Vec::Zero(2), 1.0);
    auto res = proj.invert(x);
    Vec pi_x = (x - x0) - ((x - x0).dot(xi)) * xi;
    CHECK((res.y - pi_x).norm() <= 1e-10);
    CHECK(res.t == Approx((x - x0).dot(xi)).margin(1e-10));
    // round trip
    CHECK((par->evaluate(res.coords, res.t) - x).norm() <= 1e-8);
  }

  auto H = hyperbolic_halfplane_field(hyp_box());
  auto parh = std::make_shared<Parametrization>(H, v2(0, 1), v2(0, 1), 0.6, 1.2, 0.2, tight());
  CurvilinearProjection projh(parh);
  auto res = projh.invert(v2(0.2, std::exp(1.0)));
  CHECK((res.y - v2(0.2, 0)).norm() <= 1e-7);
  CHECK(res.t == Approx(1.0).margin(1e-7));
}

TEST_CASE("invert_and_project: round trip on random hyperbolic points") {
  auto H = hyperbolic_halfplane_field(hyp_box());
  auto par = std::make_shared<Parametrization>(H, v2(0, 1), v2(1, 0), 0.8, 0.8, 0.2, tight());
  CurvilinearProjection proj(par);
  Rng rng(21);
  int checked = 0;
  for (int k = 0; k < 200; ++k) {
    Vec x = rng.point_in_ball(v2(0, 1), 0.3);
    try {
      auto res = proj.invert(x);
      CHECK((par->evaluate(res.coords, res.t) - x).norm() <= 1e-8);
      ++checked;
    } catch (const InversionFailure&) {
    }
  }
  CHECK(checked >= 190);
}

TEST_CASE("normal_maps characterization through P_phi") {
  // P_phi(x) must match P_phi(x0) (both equal 0 in perp coordinates)
  auto H = hyperbolic_halfplane_field(hyp_box());
  auto s = tight();
  Vec x0 = v2(0, 1);
  Rng rng(31);
  for (int k = 0; k < 10; ++k) {
    Vec x = rng.point_in_ball(x0, 0.25);
    auto nm = normal_maps(H, x0, x, s);
    auto par = std::make_shared<Parametrization>(H, x0, nm.phi, 0.5, 0.6, 0.1, s);
    CurvilinearProjection proj(par);
    Vec Px = proj.invert(x).y;
    Vec Px0 = proj.invert(x0).y;
    CHECK((Px - Px0).norm() <= 10.0 * 1e-8);
  }
}

TEST_CASE("build_family: F=0 members are orthogonal projections, R0 kept") {
  auto Z = QuadraticField::zero(2, Box::cube(2, -3, 3));
  auto fam = build_family(Z, v2(0, 0), 0.5, 8, tight());
  CHECK(fam.R0() == Approx(0.5));
  Rng rng(17);
  for (int k = 0; k < fam.size(); ++k) {
    const Vec xi = fam.direction(k);
    Mat pi = Mat::Identity(2, 2) - xi * xi.transpose();
    for (int q = 0; q < 10; ++q) {
      Vec x = rng.point_in_ball(Vec::Zero(2), 0.5);
      CHECK((fam.projection(k).invert(x).y - pi * x).norm() <= 1e-10);
    }
  }
}

TEST_CASE("build_family: hyperbolic round-trip residuals and injective velocity map") {
  auto H = hyperbolic_halfplane_field(hyp_box());
  auto fam = build_family(H, v2(0, 1), 0.3, 32, tight());
  CHECK(fam.diagnostics().max_roundtrip_residual <= 1e-7);

  // xi -> xi_phi(x)/|xi_phi(x)| stays injective on the sample
  Vec x = v2(0.05, 1.1);
  std::vector<Vec> imgs;
  for (int k = 0; k < fam.size(); ++k) imgs.push_back(fam.velocity(k, x).normalized());
  double min_angle = std::numeric_limits<double>::infinity();
  for (size_t a = 0; a < imgs.size(); ++a)
    for (size_t b = a + 1; b < imgs.size(); ++b)
      min_angle = std::min(min_angle, std::acos(std::clamp(imgs[a].dot(imgs[b]), -1.0, 1.0)));
  CHECK(min_angle > 0.0);
}

TEST_CASE("build_family: determinism under the fixed-step integrator") {
  auto H = hyperbolic_halfplane_field(hyp_box());
  ODESettings s;
  s.method = OdeMethod::FixedRK4;
  s.fixed_step = 5e-3;
  auto f1 = build_family(H, v2(0, 1), 0.2, 6, s);
  auto f2 = build_family(H, v2(0, 1), 0.2, 6, s);
  Vec x = v2(0.03, 1.05);
  for (int k = 0; k < f1.size(); ++k) {
    auto a = f1.projection(k).invert(x);
    auto b = f2.projection(k).invert(x);
    CHECK(a.t == b.t);  // bit-for-bit
    CHECK((a.y - b.y).norm() == 0.0);
  }
}

TEST_CASE("rescaled_family: identity for F=0 and empirical order for hyperbolic") {
  auto Z = QuadraticField::zero(2, Box::cube(2, -3, 3));
  auto rz = rescaled_family(Z, v2(0, 0), 0.3, v2(0, 1), tight());
  CHECK(rz.sup_phi_dev <= 1e-11);
  CHECK(rz.sup_P_dev <= 1e-11);

  // diagonal direction: both phi_r and P_r depart from their limits at O(r)
  auto H = hyperbolic_halfplane_field(hyp_box());
  Vec xi = v2(1, 1).normalized();
  double d1 = rescaled_family(H, v2(0, 1), 0.1, xi, tight()).sup_phi_dev;
  double d2 = rescaled_family(H, v2(0, 1), 0.05, xi, tight()).sup_phi_dev;
  CHECK(d1 > 0.0);
  CHECK(d2 <= 1.2 * 0.5 * d1);  // empirical order >= 0.9 up to slack
  double p1 = rescaled_family(H, v2(0, 1), 0.1, xi, tight()).sup_P_dev;
  double p2 = rescaled_family(H, v2(0, 1), 0.05, xi, tight()).sup_P_dev;
  CHECK(p1 > 0.0);
  CHECK(p2 <= 1.2 * 0.5 * p1);
}

TEST_CASE("transversality_probe: orthogonal family passes (H.1)-(H.3)") {
  auto Z = QuadraticField::zero(2, Box::cube(2, -3, 3));
  auto rep = transversality_probe(Z, v2(0, 0), 0.5, 6, tight(), 16);
  CHECK(rep.h1_pass);
  CHECK(rep.h2_pass);
  CHECK(rep.h3_pass);
  CHECK(rep.sup_D1_P < 10.0);

  // classical orthogonal projections annihilate pair differences parallel to xi
  Vec x = v2(0.2, 0.1);
  Vec xi = v2(1, 0);
  Vec d = x - (x.dot(xi)) * xi;
  CHECK(d[0] == Approx(0.0).margin(1e-14));
}

TEST_CASE("transversality_probe: hyperbolic family has positive margin") {
  auto H = hyperbolic_halfplane_field(hyp_box());
  auto rep = transversality_probe(H, v2(0, 1), 0.3, 6, tight(), 16);
  CHECK(rep.h1_pass);
  CHECK(rep.h2_pass);
  CHECK(rep.h3_pass);
  CHECK(rep.h2_constant > 0.0);
}

TEST_CASE("lipschitz_estimate: orthogonal projection attains 1, monotone in the box") {
  auto Z = QuadraticField::zero(2, Box::cube(2, -3, 3));
  auto par = std::make_shared<Parametrization>(Z, v2(0, 0), v2(0, 1), 2.0, 2.0, 0.5, tight());
  CurvilinearProjection proj(par);
  double l = lipschitz_estimate(proj, Box::cube(2, -0.5, 0.5), 200, 1);
  CHECK(l == Approx(1.0).epsilon(1e-6));

  auto H = hyperbolic_halfplane_field(hyp_box());
  auto parh = std::make_shared<Parametrization>(H, v2(0, 1), v2(0, 1), 0.8, 0.8, 0.2, tight());
  CurvilinearProjection projh(parh);
  Vec o(2), e(2);
  o << -0.15, 0.9;
  e << 0.3, 0.3;
  double lh = lipschitz_estimate(projh, Box(o, e), 150, 2);
  CHECK(lh >= 0.8);
  CHECK(lh <= 1.3);
  double lh2 = lipschitz_estimate(projh, Box(o, e), 150, 7);
  CHECK(lh == Approx(lh2).epsilon(0.05));

  // monotone under box growth
  Vec o2(2), e2(2);
  o2 << -0.2, 0.85;
  e2 << 0.4, 0.4;
  double lbig = lipschitz_estimate(projh, Box(o2, e2), 150, 2);
  CHECK(lbig >= lh - 1e-9);
}

TEST_CASE("parametrized-map identity: P(phi(y + t xi)) = y, unique inversion") {
  auto H = hyperbolic_halfplane_field(hyp_box());
  Vec xi = v2(0.6, 0.8);
  auto par = std::make_shared<Parametrization>(H, v2(0, 1), xi, 0.5, 0.5, 0.1, tight());
  CurvilinearProjection proj(par);
  Rng rng(23);
  for (int k = 0; k < 25; ++k) {
    Vec c(1);
    c << rng.uniform(-0.4, 0.4);
    double t = rng.uniform(-0.4, 0.4);
    Vec x = par->evaluate(c, t);
    auto res = proj.invert(x);
    // unique parameters recovered regardless of the Newton seed
    CHECK((res.coords - c).norm() <= 1e-8);
    CHECK(res.t == Approx(t).margin(1e-8));
    CHECK((res.y - par->y_from_coords(c)).norm() <= 1e-8);
  }
}

TEST_CASE("transversality_probe: three-dimensional orthogonal family") {
  auto Z = QuadraticField::zero(3, Box::cube(3, -3, 3));
  auto rep = transversality_probe(Z, Vec(Vec::Zero(3)), 0.5, 4, tight(), 24, 1);
  CHECK(rep.h1_pass);
  CHECK(rep.h2_pass);
  CHECK(rep.h3_pass);
}

TEST_CASE("build_family: base point outside the domain fails loudly") {
  auto H = hyperbolic_halfplane_field(hyp_box());
  CHECK_THROWS_AS(build_family(H, v2(0.0, 0.05), 0.3, 6, tight()), FamilyConstructionFailure);
}

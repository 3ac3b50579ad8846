// Fields F(x,v) quadratic in v: coefficient-tensor representation, Christoffel
// construction from a metric chart, shallow-shell fields, and rescalings.
#pragma once

#include <memory>
#include <utility>

#include "curvislice/core.hpp"

namespace curvislice {

// Coefficient tensor of a v-quadratic field: G[l] is the symmetric matrix with
// F_l(x,v) = v^T G[l](x) v. Symmetry in (i,j) is enforced on construction, so
// 2-homogeneity and the quadratic identity hold exactly for the representation.
using CoeffTensor = std::vector<SymMatrix>;

class QuadraticField {
public:
  QuadraticField() : dim_(0) {}

  QuadraticField(int dim, Box domain, std::function<CoeffTensor(const Vec&)> coeff,
                 std::string smoothness_hint = "smooth")
      : dim_(dim),
        domain_(std::move(domain)),
        coeff_(std::move(coeff)),
        smoothness_hint_(std::move(smoothness_hint)) {}

  int dim() const { return dim_; }
  const Box& domain() const { return domain_; }
  const std::string& smoothness_hint() const { return smoothness_hint_; }

  CoeffTensor coeff(const Vec& x) const {
    check_domain(x);
    return coeff_(x);
  }

  bool in_domain(const Vec& x, double pad = 0.0) const { return domain_.contains(x, pad); }

  Vec eval(const Vec& x, const Vec& v) const {
    check_domain(x);
    CoeffTensor g = coeff_(x);
    Vec f(dim_);
    for (int l = 0; l < dim_; ++l) f[l] = g[l].quad(v);
    return f;
  }

  bool is_zero() const { return zero_; }

  static QuadraticField zero(int dim, Box domain) {
    CoeffTensor g(dim, SymMatrix(dim));
    QuadraticField f(dim, std::move(domain), [g](const Vec&) { return g; }, "zero");
    f.zero_ = true;
    return f;
  }

private:
  void check_domain(const Vec& x) const {
    if (static_cast<int>(x.size()) != dim_) throw OutOfDomainError("field: dimension mismatch");
    if (!domain_.contains(x, 1e-12 * (1.0 + domain_.diameter())))
      throw OutOfDomainError("field: point outside declared domain box");
  }

  int dim_;
  Box domain_;
  std::function<CoeffTensor(const Vec&)> coeff_;
  std::string smoothness_hint_;
  bool zero_ = false;
};

inline Vec eval_field(const QuadraticField& f, const Vec& x, const Vec& v) { return f.eval(x, v); }

// Trilinear contraction F^q(x)(v1 (x) v2 (x) v3) = v3/2 . (F(x,v1+v2) - F(x,v1) - F(x,v2)).
inline double fq_contract(const QuadraticField& f, const Vec& x, const Vec& v1, const Vec& v2,
                          const Vec& v3) {
  Vec d = f.eval(x, v1 + v2) - f.eval(x, v1) - f.eval(x, v2);
  return 0.5 * v3.dot(d);
}

// ---------------------------------------------------------------------------
// Metric charts

enum class GammaMode { Analytic, FiniteDifference };

class MetricChart {
public:
  MetricChart() : dim_(0) {}

  // metric: x -> symmetric positive definite n x n matrix (chart coordinates).
  // metric_grad (optional, analytic mode): x -> n matrices d_k g.
  MetricChart(int dim, Box domain, std::function<Mat(const Vec&)> metric,
              std::function<std::vector<Mat>(const Vec&)> metric_grad = nullptr,
              double h_gamma = -1.0)
      : dim_(dim), domain_(std::move(domain)), metric_(std::move(metric)),
        metric_grad_(std::move(metric_grad)) {
    gamma_mode_ = metric_grad_ ? GammaMode::Analytic : GammaMode::FiniteDifference;
    h_gamma_ = h_gamma > 0 ? h_gamma : 1e-5 * domain_.diameter();
  }

  int dim() const { return dim_; }
  const Box& domain() const { return domain_; }
  GammaMode gamma_mode() const { return gamma_mode_; }
  void set_gamma_mode(GammaMode m, double h = -1.0) {
    gamma_mode_ = m;
    if (h > 0) h_gamma_ = h;
  }
  double h_gamma() const { return h_gamma_; }

  Mat metric(const Vec& x) const {
    Mat g = metric_(x);
    Eigen::LLT<Mat> llt(g);
    if (llt.info() != Eigen::Success)
      throw DegenerateMetricError("metric not positive definite at queried point");
    return g;
  }

  std::vector<Mat> metric_grad(const Vec& x) const {
    if (gamma_mode_ == GammaMode::Analytic && metric_grad_) return metric_grad_(x);
    std::vector<Mat> dg(dim_);
    for (int k = 0; k < dim_; ++k) {
      Vec xp = x, xm = x;
      xp[k] += h_gamma_;
      xm[k] -= h_gamma_;
      dg[k] = (metric_(xp) - metric_(xm)) / (2.0 * h_gamma_);
    }
    return dg;
  }

  // Christoffel symbols of the second kind:
  //   Gamma^l_ij = 1/2 g^{lm} (d_i g_mj + d_j g_mi - d_m g_ij)
  std::vector<SymMatrix> christoffel(const Vec& x) const {
    Mat g = metric(x);
    Mat ginv = g.inverse();
    std::vector<Mat> dg = metric_grad(x);
    std::vector<SymMatrix> gamma(dim_, SymMatrix(dim_));
    for (int l = 0; l < dim_; ++l) {
      for (int i = 0; i < dim_; ++i) {
        for (int j = i; j < dim_; ++j) {
          double s = 0.0;
          for (int m = 0; m < dim_; ++m)
            s += ginv(l, m) * (dg[i](m, j) + dg[j](m, i) - dg[m](i, j));
          gamma[l].at(i, j) = 0.5 * s;
        }
      }
    }
    return gamma;
  }

private:
  int dim_;
  Box domain_;
  std::function<Mat(const Vec&)> metric_;
  std::function<std::vector<Mat>(const Vec&)> metric_grad_;
  GammaMode gamma_mode_ = GammaMode::FiniteDifference;
  double h_gamma_ = 1e-5;
};

// F_l(x,v) = -sum_ij Gamma^l_ij(x) v_i v_j
inline QuadraticField christoffel_field(const MetricChart& chart) {
  return QuadraticField(
      chart.dim(), chart.domain(),
      [chart](const Vec& x) {
        std::vector<SymMatrix> gamma = chart.christoffel(x);
        CoeffTensor g(chart.dim(), SymMatrix(chart.dim()));
        for (int l = 0; l < chart.dim(); ++l) {
          for (int i = 0; i < chart.dim(); ++i)
            for (int j = i; j < chart.dim(); ++j) g[l].at(i, j) = -gamma[l].at(i, j);
        }
        return g;
      },
      "christoffel");
}

// Shallow-shell field on U x (-1,1): F_1 = F_2 = 0, F_3(x, zeta) = -hess(theta) zeta . zeta,
// with the planar Hessian embedded in the 3x3 tensor (zero third row/column).
inline QuadraticField shallow_shell_field(std::function<Mat(const Vec&)> theta_hessian,
                                          Box domain) {
  return QuadraticField(
      3, std::move(domain),
      [theta_hessian](const Vec& x) {
        Vec xp(2);
        xp << x[0], x[1];
        Mat h = theta_hessian(xp);  // 2x2
        CoeffTensor g(3, SymMatrix(3));
        for (int i = 0; i < 2; ++i)
          for (int j = i; j < 2; ++j) g[2].at(i, j) = -0.5 * (h(i, j) + h(j, i));
        return g;
      },
      "shell");
}

// F_{r,x0}(z,v) := r F(x0 + r z, v)
inline QuadraticField rescale_field(const QuadraticField& f, double r, const Vec& x0) {
  if (!(r > 0)) throw ConfigError("rescale_field: r must be positive");
  const Box& d = f.domain();
  Box dz((d.origin - x0) / r, d.extents / r);
  return QuadraticField(
      f.dim(), dz,
      [f, r, x0](const Vec& z) {
        CoeffTensor g = f.coeff(x0 + r * z);
        for (auto& gl : g) gl *= r;
        return g;
      },
      f.smoothness_hint());
}

// User fields given as a raw (possibly non-symmetric) coefficient callback:
// symmetry is enforced by averaging G[l][i][j] and G[l][j][i].
inline QuadraticField field_from_raw_tensor(
    int dim, Box domain, std::function<std::vector<Mat>(const Vec&)> raw) {
  return QuadraticField(dim, std::move(domain), [dim, raw](const Vec& x) {
    std::vector<Mat> rt = raw(x);
    CoeffTensor g;
    g.reserve(dim);
    for (int l = 0; l < dim; ++l) g.push_back(SymMatrix::from_matrix(rt[l]));
    return g;
  });
}

// ---------------------------------------------------------------------------
// Builtin charts

// Hyperbolic half-plane: g = I / x2^2 on a box strictly inside {x2 > 0}.
inline MetricChart hyperbolic_halfplane_chart(Box box = Box()) {
  if (box.dim() == 0) {
    Vec o(2), e(2);
    o << -2.0, 0.1;
    e << 4.0, 3.9;
    box = Box(o, e);
  }
  auto metric = [](const Vec& x) {
    return Mat(Mat::Identity(2, 2) / (x[1] * x[1]));
  };
  auto grad = [](const Vec& x) {
    std::vector<Mat> dg(2, Mat::Zero(2, 2));
    double c = -2.0 / (x[1] * x[1] * x[1]);
    dg[1] = c * Mat::Identity(2, 2);
    return dg;
  };
  return MetricChart(2, box, metric, grad);
}

inline QuadraticField hyperbolic_halfplane_field(Box box = Box()) {
  return christoffel_field(hyperbolic_halfplane_chart(std::move(box)));
}

// Stereographic chart of the unit sphere: g = 4/(1+|x|^2)^2 I on a planar box.
inline MetricChart sphere_chart(Box box = Box()) {
  if (box.dim() == 0) box = Box::cube(2, -1.5, 1.5);
  auto conf = [](const Vec& x) { return 2.0 / (1.0 + x.squaredNorm()); };
  auto metric = [conf](const Vec& x) {
    double c = conf(x);
    return Mat(c * c * Mat::Identity(2, 2));
  };
  auto grad = [conf](const Vec& x) {
    // d_k (c^2) = 2 c * dc/dx_k, dc/dx_k = -c^2 x_k
    double c = conf(x);
    std::vector<Mat> dg(2);
    for (int k = 0; k < 2; ++k) dg[k] = (-2.0 * c * c * c * x[k]) * Mat::Identity(2, 2);
    return dg;
  };
  return MetricChart(2, box, metric, grad);
}

inline QuadraticField sphere_chart_field(Box box = Box()) {
  return christoffel_field(sphere_chart(std::move(box)));
}

}  // namespace curvislice

// Core types shared across the library: vectors, boxes, symmetric matrices,
// deterministic RNG, and the error hierarchy.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace curvislice {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Errors

class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class OutOfDomainError : public Error {
public:
  using Error::Error;
};
class DegenerateMetricError : public Error {
public:
  using Error::Error;
};
class StiffnessError : public Error {
public:
  using Error::Error;
};
class NotDefinedError : public Error {
public:
  using Error::Error;
};
class InversionFailure : public Error {
public:
  using Error::Error;
};
class BvpFailure : public Error {
public:
  using Error::Error;
};
class FamilyConstructionFailure : public Error {
public:
  using Error::Error;
};
class UndersampledError : public Error {
public:
  using Error::Error;
};
class DerivativeAtJumpError : public Error {
public:
  using Error::Error;
};
class DirectionDegenerateError : public Error {
public:
  using Error::Error;
};
class InsufficientDataError : public Error {
public:
  using Error::Error;
};
class SkeletonFailure : public Error {
public:
  using Error::Error;
};
class ConfigError : public Error {
public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Axis-aligned box

struct Box {
  Vec origin;   // lower corner
  Vec extents;  // side lengths, all > 0

  Box() = default;
  Box(Vec o, Vec e) : origin(std::move(o)), extents(std::move(e)) {}

  static Box cube(int n, double lo, double hi) {
    return Box(Vec::Constant(n, lo), Vec::Constant(n, hi - lo));
  }

  int dim() const { return static_cast<int>(origin.size()); }

  bool contains(const Vec& x, double pad = 0.0) const {
    for (int i = 0; i < dim(); ++i) {
      if (x[i] < origin[i] - pad || x[i] > origin[i] + extents[i] + pad) return false;
    }
    return true;
  }

  Vec center() const { return origin + 0.5 * extents; }
  double diameter() const { return extents.norm(); }

  Vec upper() const { return origin + extents; }

  // Distance from x to the boundary (positive inside).
  double boundary_distance(const Vec& x) const {
    double d = std::numeric_limits<double>::infinity();
    for (int i = 0; i < dim(); ++i) {
      d = std::min(d, x[i] - origin[i]);
      d = std::min(d, origin[i] + extents[i] - x[i]);
    }
    return d;
  }
};

// ---------------------------------------------------------------------------
// Symmetric matrix stored as the upper triangle, so M == M^T holds exactly.

class SymMatrix {
public:
  SymMatrix() : n_(0) {}
  explicit SymMatrix(int n) : n_(n), tri_(n * (n + 1) / 2, 0.0) {}

  static SymMatrix from_matrix(const Mat& m) {
    SymMatrix s(static_cast<int>(m.rows()));
    for (int i = 0; i < s.n_; ++i)
      for (int j = i; j < s.n_; ++j) s.at(i, j) = 0.5 * (m(i, j) + m(j, i));
    return s;
  }

  int dim() const { return n_; }
  static int tri_size(int n) { return n * (n + 1) / 2; }

  double& at(int i, int j) { return tri_[index(i, j)]; }
  double at(int i, int j) const { return tri_[index(i, j)]; }
  double operator()(int i, int j) const { return at(i, j); }

  Mat to_matrix() const {
    Mat m(n_, n_);
    for (int i = 0; i < n_; ++i)
      for (int j = i; j < n_; ++j) m(i, j) = m(j, i) = at(i, j);
    return m;
  }

  double quad(const Vec& v) const {
    double q = 0.0;
    for (int i = 0; i < n_; ++i) {
      q += at(i, i) * v[i] * v[i];
      for (int j = i + 1; j < n_; ++j) q += 2.0 * at(i, j) * v[i] * v[j];
    }
    return q;
  }

  double frobenius() const { return to_matrix().norm(); }

  // sup_{|v|=1} |M v . v| = spectral radius for symmetric M.
  double quad_sup_norm() const {
    if (n_ == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Mat> es(to_matrix());
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }

  SymMatrix& operator+=(const SymMatrix& o) {
    for (size_t k = 0; k < tri_.size(); ++k) tri_[k] += o.tri_[k];
    return *this;
  }
  SymMatrix& operator*=(double s) {
    for (double& v : tri_) v *= s;
    return *this;
  }

  friend double max_abs_diff(const SymMatrix& a, const SymMatrix& b) {
    double d = 0.0;
    for (size_t k = 0; k < a.tri_.size(); ++k) d = std::max(d, std::abs(a.tri_[k] - b.tri_[k]));
    return d;
  }

  const std::vector<double>& triangle() const { return tri_; }

private:
  int index(int i, int j) const {
    if (i > j) std::swap(i, j);
    return i * n_ - i * (i - 1) / 2 + (j - i);
  }
  int n_;
  std::vector<double> tri_;
};

// ---------------------------------------------------------------------------
// Deterministic RNG: splitmix64-seeded xoshiro256**.

class Rng {
public:
  explicit Rng(uint64_t seed = 0) {
    uint64_t z = seed + 0x9e3779b97f4a7c15ull;
    for (auto& si : s_) {
      z += 0x9e3779b97f4a7c15ull;
      uint64_t w = z;
      w = (w ^ (w >> 30)) * 0xbf58476d1ce4e5b9ull;
      w = (w ^ (w >> 27)) * 0x94d049bb133111ebull;
      si = w ^ (w >> 31);
    }
  }

  uint64_t next_u64() {
    auto rotl = [](uint64_t x, int k) { return (x << k) | (x >> (64 - k)); };
    const uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // uniform in [0,1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  int uniform_int(int n) { return static_cast<int>(next_u64() % static_cast<uint64_t>(n)); }

  double gaussian() {
    // Box-Muller; deterministic given the stream position.
    double u1 = std::max(uniform(), 1e-300);
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  Vec unit_vector(int n) {
    Vec v(n);
    double norm = 0.0;
    do {
      for (int i = 0; i < n; ++i) v[i] = gaussian();
      norm = v.norm();
    } while (norm < 1e-12);
    return v / norm;
  }

  Vec point_in_box(const Box& b) {
    Vec x(b.dim());
    for (int i = 0; i < b.dim(); ++i) x[i] = b.origin[i] + b.extents[i] * uniform();
    return x;
  }

  Vec point_in_ball(const Vec& center, double radius) {
    int n = static_cast<int>(center.size());
    Vec d = unit_vector(n);
    double r = radius * std::pow(uniform(), 1.0 / n);
    return center + r * d;
  }

private:
  uint64_t s_[4];
};

// ---------------------------------------------------------------------------
// Deterministic quasi-uniform unit directions.

inline std::vector<Vec> sphere_directions(int n, int count, uint64_t seed = 0) {
  std::vector<Vec> dirs;
  dirs.reserve(count);
  Rng rng(seed ^ 0x5eed5eedull);
  if (n == 2) {
    double jitter = 0.0;  // reserved hook; keep directions strictly deterministic
    (void)rng;
    for (int k = 0; k < count; ++k) {
      double th = 2.0 * std::numbers::pi * ((k + 0.5) / count + jitter);
      Vec d(2);
      d << std::cos(th), std::sin(th);
      dirs.push_back(d);
    }
    return dirs;
  }
  if (n == 3) {
    // Fibonacci sphere
    const double ga = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < count; ++k) {
      double z = 1.0 - 2.0 * (k + 0.5) / count;
      double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      double th = ga * k;
      Vec d(3);
      d << r * std::cos(th), r * std::sin(th), z;
      dirs.push_back(d);
    }
    return dirs;
  }
  // generic fallback: seeded low-discrepancy-ish Gaussian draws
  for (int k = 0; k < count; ++k) dirs.push_back(rng.unit_vector(n));
  return dirs;
}

// Orthonormal basis of xi-perp as columns of an n x (n-1) matrix. Deterministic.
inline Mat orthonormal_complement(const Vec& xi) {
  int n = static_cast<int>(xi.size());
  Vec u = xi.normalized();
  Mat basis(n, n - 1);
  int skip = 0;
  u.cwiseAbs().maxCoeff(&skip);
  int col = 0;
  for (int k = 0; k < n; ++k) {
    if (k == skip) continue;
    Vec e = Vec::Zero(n);
    e[k] = 1.0;
    Vec w = e - (e.dot(u)) * u;
    for (int j = 0; j < col; ++j) w -= w.dot(basis.col(j)) * basis.col(j);
    basis.col(col++) = w.normalized();
  }
  return basis;
}

// ---------------------------------------------------------------------------
// Small statistics helpers used by the aplim-style estimators.

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  size_t m = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + m, v.end());
  double hi = v[m];
  if (v.size() % 2 == 1) return hi;
  std::nth_element(v.begin(), v.begin() + m - 1, v.end());
  return 0.5 * (v[m - 1] + hi);
}

inline double trimmed_mean(std::vector<double> v, double trim_fraction = 0.1) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  size_t cut = static_cast<size_t>(std::floor(trim_fraction * v.size()));
  if (2 * cut >= v.size()) cut = (v.size() - 1) / 2;
  double sum = 0.0;
  size_t cnt = 0;
  for (size_t i = cut; i + cut < v.size(); ++i, ++cnt) sum += v[i];
  return cnt ? sum / cnt : 0.0;
}

}  // namespace curvislice

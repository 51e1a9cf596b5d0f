// SPDX-License-Identifier: Apache-2.0
//
// twosphere - phaseless near-field scattering toolkit
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.

#pragma once

#include <cmath>
#include <vector>

#include "core.hpp"

namespace twosphere::specfun {

// Spherical Bessel j_n, y_n and their derivatives for n = 0..order_max at one real argument.
struct ModalTable {
  int order_max = 0;
  double argument = 0.0;
  std::vector<double> j, y, jp, yp;
  bool truncated = false; // some j_n underflowed to zero or y_n overflowed

  cplx h(int n) const { return {j[n], y[n]}; }
  cplx hp(int n) const { return {jp[n], yp[n]}; }
};

inline ModalTable modal_table(int n_max, double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("modal_table: argument must be positive and finite");
  if (n_max < 0) throw DomainError("modal_table: negative order");

  ModalTable t;
  t.order_max = n_max;
  t.argument = x;
  const int top = n_max + 1; // one extra order for the derivative recurrence
  std::vector<double> j(top + 1), y(top + 1);
  const double s = std::sin(x), c = std::cos(x);

  y[0] = -c / x;
  y[1] = -c / (x * x) - s / x;
  for (int n = 1; n < top; ++n) y[n + 1] = (2 * n + 1) / x * y[n] - y[n - 1];

  const double j0 = s / x, j1 = s / (x * x) - c / x;
  if (top <= x) {
    j[0] = j0;
    j[1] = j1;
    for (int n = 1; n < top; ++n) j[n + 1] = (2 * n + 1) / x * j[n] - j[n - 1];
  } else {
    // Downward recurrence carried as ratios rho_n = j_n / j_{n-1}, so nothing overflows.
    const double big = std::max(double(top), x);
    const int start = top + 20 + int(std::ceil(std::sqrt(40.0 * big)));
    std::vector<double> rho(start + 2, 0.0);
    for (int n = start; n >= 1; --n) rho[n] = 1.0 / ((2 * n + 1) / x - rho[n + 1]);
    // anchor on whichever of j0, j1 is not near a zero
    if (std::abs(j0) >= std::abs(j1)) {
      j[0] = j0;
      for (int n = 1; n <= top; ++n) j[n] = j[n - 1] * rho[n];
    } else {
      j[0] = j0;
      j[1] = j1;
      for (int n = 2; n <= top; ++n) j[n] = j[n - 1] * rho[n];
    }
  }

  t.j.assign(j.begin(), j.begin() + n_max + 1);
  t.y.assign(y.begin(), y.begin() + n_max + 1);
  t.jp.resize(n_max + 1);
  t.yp.resize(n_max + 1);
  t.jp[0] = -j[1];
  t.yp[0] = -y[1];
  for (int n = 1; n <= n_max; ++n) {
    t.jp[n] = j[n - 1] - (n + 1) / x * j[n];
    t.yp[n] = y[n - 1] - (n + 1) / x * y[n];
  }
  for (int n = 0; n <= n_max; ++n)
    if (t.j[n] == 0.0 || !std::isfinite(t.y[n]) || !std::isfinite(t.yp[n])) t.truncated = true;
  return t;
}

// Largest order <= n_max at which j_n(x) is nonzero and y_n, y_n' are finite, for all lower orders too.
inline int representable_order(int n_max, double x) {
  const auto t = modal_table(n_max, x);
  for (int n = 0; n <= n_max; ++n)
    if (t.j[n] == 0.0 || !std::isfinite(t.y[n]) || !std::isfinite(x * t.yp[n])) return n - 1;
  return n_max;
}

// Legendre polynomials P_0..P_nmax at t.
inline std::vector<double> legendre(int n_max, double t) {
  if (std::abs(t) > 1.0) throw DomainError("legendre: |t| > 1");
  if (n_max < 0) throw DomainError("legendre: negative order");
  std::vector<double> p(n_max + 1);
  p[0] = 1.0;
  if (n_max >= 1) p[1] = t;
  for (int n = 1; n < n_max; ++n) p[n + 1] = ((2 * n + 1) * t * p[n] - n * p[n - 1]) / (n + 1);
  return p;
}

// Fully normalized associated Legendre functions with Condon-Shortley phase, m >= 0,
// plus theta-derivatives and P/sin(theta) (finite at the poles).
class AlfTable {
public:
  AlfTable(int n_max, double theta) : n_max_(n_max), theta_(theta) {
    if (n_max < 0) throw DomainError("AlfTable: negative order");
    if (theta < 0.0 || theta > pi) throw DomainError("AlfTable: theta outside [0, pi]");
    const std::size_t sz = std::size_t(n_max + 1) * (n_max + 2) / 2;
    p_.assign(sz, 0.0);
    u_.assign(sz, 0.0);
    dp_.assign(sz, 0.0);
    const double t = std::cos(theta), s = std::sin(theta);

    p_[idx(0, 0)] = 1.0 / std::sqrt(4.0 * pi);
    if (n_max >= 1) p_[idx(1, 0)] = std::sqrt(3.0) * t * p_[idx(0, 0)];
    for (int n = 2; n <= n_max; ++n) {
      auto [a, b] = coeffs(n, 0);
      p_[idx(n, 0)] = a * t * p_[idx(n - 1, 0)] - b * p_[idx(n - 2, 0)];
    }
    for (int m = 1; m <= n_max; ++m) {
      if (m == 1)
        u_[idx(1, 1)] = -std::sqrt(1.5) * p_[idx(0, 0)];
      else
        u_[idx(m, m)] = -std::sqrt((2.0 * m + 1) / (2.0 * m)) * s * u_[idx(m - 1, m - 1)];
      if (m + 1 <= n_max) u_[idx(m + 1, m)] = std::sqrt(2.0 * m + 3) * t * u_[idx(m, m)];
      for (int n = m + 2; n <= n_max; ++n) {
        auto [a, b] = coeffs(n, m);
        u_[idx(n, m)] = a * t * u_[idx(n - 1, m)] - b * u_[idx(n - 2, m)];
      }
      for (int n = m; n <= n_max; ++n) p_[idx(n, m)] = s * u_[idx(n, m)];
    }
    for (int n = 1; n <= n_max; ++n) {
      dp_[idx(n, 0)] = std::sqrt(double(n) * (n + 1)) * p_[idx(n, 1)];
      for (int m = 1; m <= n; ++m) {
        double prev = (n - 1 >= m) ? u_[idx(n - 1, m)] : 0.0;
        dp_[idx(n, m)] = n * t * u_[idx(n, m)] -
                         std::sqrt((2.0 * n + 1) * (n - m) * (n + m) / (2.0 * n - 1)) * prev;
      }
    }
  }

  int order_max() const { return n_max_; }
  double theta() const { return theta_; }
  double p(int n, int m) const { return p_[idx(n, m)]; }
  double dp(int n, int m) const { return dp_[idx(n, m)]; }
  // P_n^m / sin(theta), m >= 1
  double p_over_sin(int n, int m) const { return u_[idx(n, m)]; }

private:
  static std::size_t idx(int n, int m) { return std::size_t(n) * (n + 1) / 2 + m; }
  static std::pair<double, double> coeffs(int n, int m) {
    const double nn = double(n) * n, mm = double(m) * m;
    const double a = std::sqrt((4.0 * nn - 1.0) / (nn - mm));
    const double b = std::sqrt((2.0 * n + 1) * (n - 1.0 - m) * (n - 1.0 + m) / ((2.0 * n - 3) * (nn - mm)));
    return {a, b};
  }

  int n_max_;
  double theta_;
  std::vector<double> p_, u_, dp_;
};

// Orthonormal spherical harmonic Y_n^m(theta, phi), Condon-Shortley phase.
inline cplx sph_harmonic(int n, int m, double theta, double phi) {
  if (n < 0 || std::abs(m) > n) throw DomainError("sph_harmonic: need |m| <= n");
  if (theta < 0.0 || theta > pi) throw DomainError("sph_harmonic: theta outside [0, pi]");
  AlfTable alf(n, theta);
  const int am = std::abs(m);
  cplx y = alf.p(n, am) * std::exp(I * double(am) * phi);
  if (m < 0) y = ((am % 2) ? -1.0 : 1.0) * std::conj(y);
  return y;
}

// All Y_n^m, dY/dtheta and i*m*Y/sin(theta) for n <= n_max, |m| <= n at one direction.
// Flat index n*n + n + m.
struct AngularTable {
  int n_max = 0;
  std::vector<cplx> y, dtheta, im_sin;

  static std::size_t index(int n, int m) { return std::size_t(n) * n + n + m; }
  cplx Y(int n, int m) const { return y[index(n, m)]; }
  cplx dY(int n, int m) const { return dtheta[index(n, m)]; }
  cplx imY_sin(int n, int m) const { return im_sin[index(n, m)]; }
};

inline AngularTable angular_table(int n_max, double theta, double phi) {
  AlfTable alf(n_max, theta);
  AngularTable a;
  a.n_max = n_max;
  const std::size_t sz = std::size_t(n_max + 1) * (n_max + 1);
  a.y.resize(sz);
  a.dtheta.resize(sz);
  a.im_sin.resize(sz);
  for (int m = 0; m <= n_max; ++m) {
    const cplx e = std::exp(I * double(m) * phi);
    const double sign = (m % 2) ? -1.0 : 1.0;
    for (int n = m; n <= n_max; ++n) {
      const cplx y = alf.p(n, m) * e;
      const cplx dy = alf.dp(n, m) * e;
      const cplx is = (m == 0) ? cplx(0.0) : I * double(m) * alf.p_over_sin(n, m) * e;
      a.y[AngularTable::index(n, m)] = y;
      a.dtheta[AngularTable::index(n, m)] = dy;
      a.im_sin[AngularTable::index(n, m)] = is;
      if (m > 0) {
        // Y_{n,-m} = (-1)^m conj(Y_nm); the i*m factor flips sign under m -> -m and conj
        a.y[AngularTable::index(n, -m)] = sign * std::conj(y);
        a.dtheta[AngularTable::index(n, -m)] = sign * std::conj(dy);
        a.im_sin[AngularTable::index(n, -m)] = sign * std::conj(is);
      }
    }
  }
  return a;
}

struct GaussLegendre {
  std::vector<double> nodes, weights; // nodes descending in (-1, 1)
};

inline GaussLegendre gauss_legendre(int n) {
  if (n < 1) throw DomainError("gauss_legendre: need at least one node");
  GaussLegendre g;
  g.nodes.resize(n);
  g.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 1; k < n; ++k) {
        double p2 = ((2 * k + 1) * x * p1 - k * p0) / (k + 1);
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // refresh derivative at the converged node
    double p0 = 1.0, p1 = x;
    for (int k = 1; k < n; ++k) {
      double p2 = ((2 * k + 1) * x * p1 - k * p0) / (k + 1);
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    g.nodes[i] = x;
    g.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return g;
}

} // namespace twosphere::specfun

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

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "core.hpp"
#include "specfun.hpp"

namespace twosphere::eigencheck {

enum class Kind { dirichlet, maxwell };
enum class RootKind { dirichlet, maxwell_M, maxwell_N };

inline std::string to_string(Kind k) { return k == Kind::dirichlet ? "dirichlet" : "maxwell"; }

inline Kind kind_from_string(const std::string &s) {
  if (s == "dirichlet") return Kind::dirichlet;
  if (s == "maxwell") return Kind::maxwell;
  throw DomainError("unknown eigencheck kind '" + s + "'");
}

inline int default_order_max(double k, double R2) { return int(std::ceil(k * R2)) + 10; }

struct ShellSpec {
  double R1 = 1.0, R2 = 2.0, k = 1.0;
  int n_max = -1; // -1: use the default ceil(k R2) + 10

  void validate() const {
    if (!(R1 > 0.0 && R2 > R1)) throw DomainError("ShellSpec: need 0 < R1 < R2");
    if (!(k > 0.0)) throw DomainError("ShellSpec: need k > 0");
    if (n_max >= 0 && n_max < default_order_max(k, R2))
      throw DomainError("ShellSpec: n_max below ceil(k R2) + 10");
  }
  int order_max() const { return n_max < 0 ? default_order_max(k, R2) : n_max; }
};

// Raw determinant plus an order-comparable normalized value in [0, 1].
struct ScaledDet {
  double value = 0.0, normalized = 0.0;
  double scaled() const { return normalized; }
};

namespace detail {

// Rows (f(x1), g(x1)), (f(x2), g(x2)) with f regular and g irregular. Columns are equilibrated
// by envelopes that never vanish: |g| by |f + i g|, |f| by max(|f|, P / (x |f + i g|)), which
// follows the small-argument product f g ~ P / x. The result is the sine of the angle between
// the equilibrated rows, so it is zero exactly when the determinant is.
inline ScaledDet normalized_det(double f1, double g1, double x1, double f2, double g2, double x2, double P) {
  const double M1 = std::hypot(f1, g1), M2 = std::hypot(f2, g2);
  const double e1 = std::max(std::abs(f1), P / (x1 * M1)), e2 = std::max(std::abs(f2), P / (x2 * M2));
  const double cf = 1.0 / std::max(e1, e2), cg = 1.0 / std::max(M1, M2);
  const double a = f1 * cf, b = g1 * cg, c = f2 * cf, d = g2 * cg;
  ScaledDet r;
  r.value = f1 * g2 - g1 * f2;
  r.normalized = std::abs(a * d - b * c) / (std::hypot(a, b) * std::hypot(c, d));
  return r;
}

inline ScaledDet dirichlet_det(int n, const specfun::ModalTable &t1, const specfun::ModalTable &t2) {
  return normalized_det(t1.j[n], t1.y[n], t1.argument, t2.j[n], t2.y[n], t2.argument, 1.0 / (2 * n + 1));
}

inline ScaledDet neumann_like_det(int n, const specfun::ModalTable &t1, const specfun::ModalTable &t2) {
  const double x1 = t1.argument, x2 = t2.argument;
  return normalized_det(t1.j[n] + x1 * t1.jp[n], t1.y[n] + x1 * t1.yp[n], x1, t2.j[n] + x2 * t2.jp[n],
                        t2.y[n] + x2 * t2.yp[n], x2, double(n) * (n + 1) / (2 * n + 1));
}

} // namespace detail

inline double dirichlet_determinant(int n, double k, double R1, double R2) {
  if (n < 0) throw DomainError("dirichlet_determinant: negative order");
  if (!(k > 0.0 && R1 > 0.0 && R2 > 0.0)) throw DomainError("dirichlet_determinant: need positive k, R1, R2");
  return detail::dirichlet_det(n, specfun::modal_table(n, k * R1), specfun::modal_table(n, k * R2)).value;
}

struct MaxwellDeterminants {
  double d_M = 0.0, d_N = 0.0;
};

inline MaxwellDeterminants maxwell_determinants(int n, double k, double R1, double R2) {
  if (n < 1) throw DomainError("maxwell_determinants: order must be >= 1");
  if (!(k > 0.0 && R1 > 0.0 && R2 > 0.0)) throw DomainError("maxwell_determinants: need positive k, R1, R2");
  auto t1 = specfun::modal_table(n, k * R1), t2 = specfun::modal_table(n, k * R2);
  return {detail::dirichlet_det(n, t1, t2).value, detail::neumann_like_det(n, t1, t2).value};
}

struct Certificate {
  Kind kind = Kind::dirichlet;
  double k = 0.0, R1 = 0.0, R2 = 0.0;
  int n_max = 0;
  bool free = false;
  double margin = 0.0;
  int worst_n = 0;
  bool tail_monotone = false; // raw determinant magnitudes grow over the last 5 orders

  nlohmann::json to_json() const {
    return {{"kind", to_string(kind)}, {"k", k},          {"R1", R1},           {"R2", R2},
            {"n_max", n_max},          {"free", free},    {"margin", margin},   {"worst_n", worst_n},
            {"tail_monotone", tail_monotone}};
  }
};

inline constexpr double tol_cert_default = 1e-6;

inline Certificate certify_eigenvalue_free(const ShellSpec &spec, Kind kind, double tol_cert = tol_cert_default) {
  spec.validate();
  const int N = spec.order_max();
  auto t1 = specfun::modal_table(N, spec.k * spec.R1), t2 = specfun::modal_table(N, spec.k * spec.R2);
  Certificate c;
  c.kind = kind;
  c.k = spec.k;
  c.R1 = spec.R1;
  c.R2 = spec.R2;
  c.n_max = N;
  c.margin = std::numeric_limits<double>::infinity();
  std::vector<double> raw;
  for (int n = (kind == Kind::dirichlet ? 0 : 1); n <= N; ++n) {
    auto dm = detail::dirichlet_det(n, t1, t2);
    double v = dm.scaled(), r = std::abs(dm.value);
    if (kind == Kind::maxwell) {
      auto dn = detail::neumann_like_det(n, t1, t2);
      v = std::min(v, dn.scaled());
      r = std::min(r, std::abs(dn.value));
    }
    raw.push_back(r);
    if (v < c.margin) {
      c.margin = v;
      c.worst_n = n;
    }
  }
  c.tail_monotone = true;
  for (std::size_t i = raw.size() >= 5 ? raw.size() - 5 : 1; i < raw.size(); ++i)
    if (i > 0 && !(raw[i] > raw[i - 1])) c.tail_monotone = false;
  c.free = c.margin > tol_cert && c.tail_monotone;
  return c;
}

struct Root {
  double k = 0.0;
  double residual = 0.0;   // |determinant| at k
  double derivative = 0.0; // central difference estimate
};

namespace detail {

inline double root_function(int n, double R1, double R2, RootKind kind, double k) {
  auto t1 = specfun::modal_table(n, k * R1), t2 = specfun::modal_table(n, k * R2);
  if (kind == RootKind::maxwell_N) return neumann_like_det(n, t1, t2).value;
  return dirichlet_det(n, t1, t2).value;
}

} // namespace detail

// Sign changes of the order-n determinant in [k_lo, k_hi], refined by bisection.
inline std::vector<Root> find_eigen_k(int n, double R1, double R2, RootKind kind, double k_lo, double k_hi) {
  if (n < 0 || (kind != RootKind::dirichlet && n < 1)) throw DomainError("find_eigen_k: invalid order");
  if (!(R1 > 0.0 && R2 > R1)) throw DomainError("find_eigen_k: need 0 < R1 < R2");
  std::vector<Root> roots;
  if (!(k_lo > 0.0) || !(k_hi > k_lo)) return roots;
  auto f = [&](double k) { return detail::root_function(n, R1, R2, kind, k); };
  // root spacing is about pi/(R2 - R1); sample well below it
  const double step = std::min(0.01, 0.02 / (R2 - R1));
  const int samples = std::max(2, int(std::ceil((k_hi - k_lo) / step)));
  double a = k_lo, fa = f(a);
  for (int i = 1; i <= samples; ++i) {
    double b = k_lo + (k_hi - k_lo) * i / samples, fb = f(b);
    if (fa == 0.0) {
      roots.push_back({a, 0.0, 0.0});
    } else if (fa * fb < 0.0) {
      double lo = a, hi = b, flo = fa;
      for (int it = 0; it < 200 && hi - lo > 4e-16 * hi; ++it) {
        const double mid = 0.5 * (lo + hi), fm = f(mid);
        if (fm == 0.0) {
          lo = hi = mid;
          break;
        }
        if ((fm < 0.0) == (flo < 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      const double r = 0.5 * (lo + hi);
      const double h = 1e-6 * r;
      roots.push_back({r, std::abs(f(r)), (f(r + h) - f(r - h)) / (2.0 * h)});
    }
    a = b;
    fa = fb;
  }
  if (fa == 0.0) roots.push_back({a, 0.0, 0.0});
  return roots;
}

} // namespace twosphere::eigencheck

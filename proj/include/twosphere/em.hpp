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
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "acoustic.hpp"
#include "core.hpp"
#include "geometry.hpp"
#include "specfun.hpp"

namespace twosphere::em {

// f(r) = 3/r^2 - 3ik/r - k^2
inline cplx dipole_f(double k, double r) { return 3.0 / (r * r) - 3.0 * I * k / r - k * k; }

// E^i(x, y): incident electric field of a unit dipole at y, one column per polarization.
inline CMat3 dipole_matrix(double k, const Vec3 &x, const Vec3 &y) {
  const Vec3 d = x - y;
  const double r = d.norm();
  if (r == 0.0) throw SingularityError("dipole_matrix: x = y");
  const Vec3 u = d / r;
  const cplx phi = std::exp(I * k * r) / (4.0 * pi * r);
  const cplx diag = k * k + (I * k - 1.0 / r) / r;
  CMat3 E = diag * CMat3::Identity() + dipole_f(k, r) * (u * u.transpose()).cast<cplx>();
  return (I / k) * phi * E;
}

// H^i(x, y) p = grad_x Phi x p
inline CMat3 dipole_magnetic_matrix(double k, const Vec3 &x, const Vec3 &y) {
  const CVec3 g = acoustic::fundamental_solution_gradient(k, x, y);
  CMat3 H;
  H << 0.0, -g[2], g[1], g[2], 0.0, -g[0], -g[1], g[0], 0.0;
  return H;
}

inline CVec3 plane_wave_electric(double k, const Vec3 &x, const Vec3 &d, const Vec3 &p) {
  return (I * k * std::exp(I * k * x.dot(d))) * d.cross(p).cross(d).cast<cplx>();
}

inline CVec3 plane_wave_magnetic(double k, const Vec3 &x, const Vec3 &d, const Vec3 &p) {
  // curl E / (ik)
  return (I * k * std::exp(I * k * x.dot(d))) * d.cross(d.cross(p).cross(d)).cast<cplx>();
}

struct DipoleSource {
  Vec3 y = Vec3::Zero();
  Vec3 p = Vec3::UnitZ();
  int tau = 1;

  DipoleSource deactivated() const { return {y, p, 0}; }
  nlohmann::json to_json() const {
    return {{"y", {y[0], y[1], y[2]}}, {"p", {p[0], p[1], p[2]}}, {"tau", tau}};
  }
};

struct PlaneWaveSource {
  Vec3 d = Vec3::UnitZ();
  Vec3 p = Vec3::UnitX();
};

// Angular pieces of the conjugated outgoing wave functions at a source direction, contracted with p:
// mt = conj(GradY x yhat) . p, nr = conj(Y)(yhat . p), nt = conj(GradY) . p
struct SourceAngular {
  std::vector<cplx> mt, nr, nt; // flat index n*n + n + m
};

inline SourceAngular source_angular(int N, const Vec3 &yhat, const Vec3 &p) {
  const auto sp = geometry::SpherePoint::cartesian(yhat);
  const auto fr = geometry::frame_unchecked(sp.theta, sp.phi);
  const auto A = specfun::angular_table(N, sp.theta, sp.phi);
  const double pt = fr.e_theta.dot(p), pp = fr.e_phi.dot(p), pr = fr.nu.dot(p);
  SourceAngular s;
  const std::size_t sz = std::size_t(N + 1) * (N + 1);
  s.mt.assign(sz, 0.0);
  s.nr.assign(sz, 0.0);
  s.nt.assign(sz, 0.0);
  for (int n = 1; n <= N; ++n)
    for (int m = -n; m <= n; ++m) {
      const auto q = specfun::AngularTable::index(n, m);
      const cplx dy = std::conj(A.dtheta[q]), is = std::conj(A.im_sin[q]), y = std::conj(A.y[q]);
      s.mt[q] = is * pt - dy * pp;
      s.nr[q] = y * pr;
      s.nt[q] = dy * pt + is * pp;
    }
  return s;
}

class EmField {
public:
  enum class SourceKind { dipole, plane_wave };

  double k() const { return k_; }
  double radius() const { return a_; }
  int truncation_order() const { return N_; }
  double trunc_certificate() const { return cert_; }
  SourceKind source_kind() const { return kind_; }
  const DipoleSource &dipole() const { return dipole_; }
  const PlaneWaveSource &plane_wave() const { return pw_; }
  int activation() const { return kind_ == SourceKind::dipole ? dipole_.tau : 1; }

  EmField deactivated() const {
    EmField f = *this;
    f.dipole_.tau = 0;
    return f;
  }

  CVec3 incident(const Vec3 &x) const {
    if (kind_ == SourceKind::dipole) return dipole_matrix(k_, x, dipole_.y) * dipole_.p.cast<cplx>();
    return plane_wave_electric(k_, x, pw_.d, pw_.p);
  }

  CVec3 incident_magnetic(const Vec3 &x) const {
    if (kind_ == SourceKind::dipole) return dipole_magnetic_matrix(k_, x, dipole_.y) * dipole_.p.cast<cplx>();
    return plane_wave_magnetic(k_, x, pw_.d, pw_.p);
  }

  CVec3 scattered(const Vec3 &x) const { return evaluate(x, false); }
  CVec3 scattered_magnetic(const Vec3 &x) const { return evaluate(x, true); }

  CVec3 total(const Vec3 &x) const {
    if (activation() == 0) return CVec3::Zero();
    return double(activation()) * (incident(x) + scattered(x));
  }

  // coefficient of exp(ikr)/r in E^s
  CVec3 far_field(const Vec3 &xhat_in) const {
    const auto sp = geometry::SpherePoint::cartesian(xhat_in);
    const auto fr = geometry::frame_unchecked(sp.theta, sp.phi);
    const auto A = specfun::angular_table(N_, sp.theta, sp.phi);
    const CVec3 et = fr.e_theta.cast<cplx>(), ep = fr.e_phi.cast<cplx>();
    CVec3 out = CVec3::Zero();
    cplx mi = -1.0; // (-i)^(n+1) at n = 1
    for (int n = 1; n <= N_; ++n) {
      const cplx fm = mi / (k_ * ha_[n]), fn = (mi * I) / (k_ * xia_[n]);
      for (int m = -n; m <= n; ++m) {
        const auto q = specfun::AngularTable::index(n, m);
        out += (P_[q] * fm) * (A.im_sin[q] * et - A.dtheta[q] * ep);
        out += (Q_[q] * fn) * (A.dtheta[q] * et + A.im_sin[q] * ep);
      }
      mi *= -I;
    }
    return out;
  }

  nlohmann::json to_json() const {
    auto pack = [&](const std::vector<cplx> &c) {
      nlohmann::json arr = nlohmann::json::array();
      for (int n = 1; n <= N_; ++n)
        for (int m = -n; m <= n; ++m) {
          const cplx v = c[specfun::AngularTable::index(n, m)];
          arr.push_back({n, m, v.real(), v.imag()});
        }
      return arr;
    };
    nlohmann::json src;
    if (kind_ == SourceKind::dipole) src = {{"type", "dipole"}, {"dipole", dipole_.to_json()}};
    else src = {{"type", "plane_wave"}, {"d", {pw_.d[0], pw_.d[1], pw_.d[2]}}, {"p", {pw_.p[0], pw_.p[1], pw_.p[2]}}};
    // M_coeffs multiply h_n(kr)/h_n(ka) (GradY x rhat); N_coeffs multiply the N-function over xi'_n(ka)
    return {{"k", k_}, {"a", a_}, {"source", src}, {"M_coeffs", pack(P_)}, {"N_coeffs", pack(Q_)},
            {"trunc_certificate", cert_}};
  }

private:
  friend EmField make_pec_field(double, double, SourceKind, const DipoleSource &, const PlaneWaveSource &);

  CVec3 evaluate(const Vec3 &x, bool magnetic) const {
    const double r = x.norm();
    if (r < a_ * (1.0 - 1e-12)) throw DomainError("EmField: evaluation point inside the obstacle");
    const auto sp = geometry::SpherePoint::cartesian(x);
    const auto fr = geometry::frame_unchecked(sp.theta, sp.phi);
    const auto A = specfun::angular_table(N_, sp.theta, sp.phi);
    const double rho = k_ * r;
    const auto t = specfun::modal_table(N_, rho);
    const CVec3 et = fr.e_theta.cast<cplx>(), ep = fr.e_phi.cast<cplx>(), er = fr.nu.cast<cplx>();
    CVec3 out = CVec3::Zero();
    for (int n = 1; n <= N_; ++n) {
      const double nn = double(n) * (n + 1);
      const cplx h = t.h(n), xi = h + rho * t.hp(n);
      cplx cM, cNr, cNt; // factors on (GradY x rhat), Y rhat, GradY
      if (!magnetic) {
        // E^s = sum P h/ha M-part + Q [n(n+1) h/(rho xi_a) Y rhat + xi/(rho xi_a) GradY]
        for (int m = -n; m <= n; ++m) {
          const auto q = specfun::AngularTable::index(n, m);
          cM = P_[q] * (h / ha_[n]);
          cNr = Q_[q] * (nn * h / (rho * xia_[n]));
          cNt = Q_[q] * (xi / (rho * xia_[n]));
          out += cM * (A.im_sin[q] * et - A.dtheta[q] * ep) + (cNr * A.y[q]) * er +
                 cNt * (A.dtheta[q] * et + A.im_sin[q] * ep);
        }
      } else {
        // H^s = -i sum P N(x)/ha + Q M(x)/xi_a
        for (int m = -n; m <= n; ++m) {
          const auto q = specfun::AngularTable::index(n, m);
          cM = -I * Q_[q] * (h / xia_[n]);
          cNr = -I * P_[q] * (nn * h / (rho * ha_[n]));
          cNt = -I * P_[q] * (xi / (rho * ha_[n]));
          out += cM * (A.im_sin[q] * et - A.dtheta[q] * ep) + (cNr * A.y[q]) * er +
                 cNt * (A.dtheta[q] * et + A.im_sin[q] * ep);
        }
      }
    }
    return out;
  }

  double k_ = 0.0, a_ = 0.0;
  int N_ = 0;
  double cert_ = 0.0;
  SourceKind kind_ = SourceKind::dipole;
  DipoleSource dipole_;
  PlaneWaveSource pw_;
  std::vector<cplx> P_, Q_;  // flat index n*n + n + m
  std::vector<cplx> ha_, xia_; // h_n(ka), xi'_n(ka)
};

inline constexpr double trunc_tol = 1e-12;

inline EmField make_pec_field(double k, double a, EmField::SourceKind kind, const DipoleSource &dip,
                              const PlaneWaveSource &pw) {
  if (!(k > 0.0)) throw DomainError("PEC solve: need k > 0");
  if (!(a > 0.0)) throw DomainError("PEC solve: need a > 0");
  const double rho_a = k * a;
  double r_src = a;
  Vec3 yhat, p;
  if (kind == EmField::SourceKind::dipole) {
    if (dip.tau != 1) throw DomainError("PEC solve: dipole source must be active (tau = 1)");
    if (dip.p.norm() == 0.0) throw DomainError("PEC solve: zero polarization");
    r_src = dip.y.norm();
    if (!(r_src > a)) throw DomainError("PEC solve: dipole must lie outside the obstacle");
    yhat = dip.y / r_src;
    p = dip.p;
  } else {
    if (std::abs(pw.d.norm() - 1.0) > 1e-12) throw DomainError("PEC solve: direction must be a unit vector");
    yhat = -pw.d;
    p = pw.p;
  }

  const int n_lim = specfun::representable_order(3000, rho_a);
  int N = std::min(int(std::ceil(k * std::max(a, r_src))) + 12 + int(std::ceil(4.0 * std::cbrt(rho_a))), n_lim);
  EmField f;
  f.k_ = k;
  f.a_ = a;
  f.kind_ = kind;
  f.dipole_ = dip;
  f.pw_ = pw;
  for (;;) {
    if (N < 3) throw SolverError("PEC modal series: coefficients left the double range");
    const auto ta = specfun::modal_table(N, rho_a);
    specfun::ModalTable ty;
    const double rho_y = k * r_src;
    if (kind == EmField::SourceKind::dipole) ty = specfun::modal_table(N, rho_y);
    const auto ang = source_angular(N, yhat, p);
    const std::size_t sz = std::size_t(N + 1) * (N + 1);
    f.P_.assign(sz, 0.0);
    f.Q_.assign(sz, 0.0);
    f.ha_.assign(N + 1, 0.0);
    f.xia_.assign(N + 1, 0.0);
    std::vector<double> trace(N + 1, 0.0);
    bool finite = true;
    cplx mi = -1.0; // (-i)^(n+1)
    for (int n = 1; n <= N; ++n) {
      const double nn = double(n) * (n + 1);
      f.ha_[n] = ta.h(n);
      f.xia_[n] = ta.h(n) + rho_a * ta.hp(n);
      const double psi_a = ta.j[n] + rho_a * ta.jp[n];
      // products of the small regular trace with the large source radial factor
      cplx m_rad, n_rad_r, n_rad_t;
      if (kind == EmField::SourceKind::dipole) {
        const cplx hy = ty.h(n), xiy = hy + rho_y * ty.hp(n);
        m_rad = (-ta.j[n]) * hy;
        n_rad_r = (-psi_a) * (nn * hy / rho_y);
        n_rad_t = (-psi_a) * (xiy / rho_y);
      } else {
        m_rad = (-ta.j[n]) * (4.0 * pi * mi / k);
        n_rad_r = 0.0;
        n_rad_t = (-psi_a) * (4.0 * pi * mi * I / k);
      }
      const double c = -k * k / nn;
      double t2 = 0.0;
      for (int m = -n; m <= n; ++m) {
        const auto q = specfun::AngularTable::index(n, m);
        f.P_[q] = c * m_rad * ang.mt[q];
        f.Q_[q] = c * (n_rad_r * ang.nr[q] + n_rad_t * ang.nt[q]);
        t2 += std::norm(f.P_[q]) + std::norm(f.Q_[q]);
      }
      trace[n] = std::sqrt(t2 * nn);
      if (!std::isfinite(trace[n]) || !std::isfinite(std::abs(f.ha_[n])) || !std::isfinite(std::abs(f.xia_[n])))
        finite = false;
      mi *= -I;
    }
    if (!finite) throw SolverError("PEC modal series: coefficients left the double range");
    const double peak = *std::max_element(trace.begin(), trace.end());
    const double tail = std::max({trace[N], trace[N - 1], trace[N - 2]});
    f.cert_ = peak > 0.0 ? tail / peak : 0.0;
    f.N_ = N;
    if (f.cert_ < trunc_tol) break;
    if (N >= n_lim)
      throw SolverError(n_lim >= 3000 ? "PEC modal series: truncation certificate not reached below order 3000"
                                      : "PEC modal series: coefficients leave the double range before the series converges");
    N = std::min(N + 8, n_lim);
  }
  return f;
}

inline EmField solve_pec_sphere_dipole(const acoustic::AcousticConfig &cfg, double a, const DipoleSource &src) {
  cfg.validate();
  return make_pec_field(cfg.k, a, EmField::SourceKind::dipole, src, {});
}

inline EmField solve_pec_sphere_plane_wave(const acoustic::AcousticConfig &cfg, double a, const Vec3 &d,
                                           const Vec3 &p) {
  cfg.validate();
  return make_pec_field(cfg.k, a, EmField::SourceKind::plane_wave, {}, {d, p});
}

inline CVec3 superposed_electric_total(const EmField &f1, const EmField &f2, const Vec3 &x) {
  if (f1.k() != f2.k() || f1.radius() != f2.radius())
    throw DomainError("superposed_electric_total: fields belong to different problems");
  return f1.total(x) + f2.total(x);
}

enum class Tangent { phi, theta };

inline std::string to_string(Tangent t) { return t == Tangent::phi ? "phi" : "theta"; }

inline const Vec3 &tangent_vector(const geometry::TangentFrame &fr, Tangent m) {
  return m == Tangent::phi ? fr.e_phi : fr.e_theta;
}

inline cplx tangential_measurement(const CVec3 &E, const geometry::TangentFrame &frame, Tangent m) {
  return dot(tangent_vector(frame, m), E);
}

// Singularity probes along great circles through a dipole location on a measurement sphere.
enum class ProbeKind { phi_phi, phi_theta };

struct ProbeRow {
  double angle = 0.0, r = 0.0;
  cplx measured, predicted, ratio;
  double scattered_abs = 0.0;     // |tangential component of E^s| alone
  double scaled_modulus = 0.0;    // |measured| 4 pi r^3
};

struct ProbeTable {
  ProbeKind kind = ProbeKind::phi_phi;
  std::vector<ProbeRow> rows;
  bool truncated = false;
  std::string notice;
  double slope = 0.0; // least-squares slope of log|measured| against log r
};

// obstacle_radius = 0 probes the free-space dipole field.
inline ProbeTable singularity_probe(ProbeKind kind, double k, double obstacle_radius, const geometry::SpherePoint &y,
                                    const std::vector<double> &angles) {
  if (y.is_pole()) throw PoleError("singularity_probe: source at a pole");
  const auto fy = geometry::tangent_frame(y);
  const Vec3 p = kind == ProbeKind::phi_phi ? fy.e_phi : fy.e_theta;
  const Vec3 normal = kind == ProbeKind::phi_phi ? fy.e_phi : Vec3((fy.e_phi + fy.e_theta).normalized());
  std::unique_ptr<EmField> field;
  if (obstacle_radius > 0.0)
    field = std::make_unique<EmField>(make_pec_field(k, obstacle_radius, EmField::SourceKind::dipole, {y.cart, p, 1}, {}));

  ProbeTable t;
  t.kind = kind;
  for (double ang : angles) {
    const auto x = geometry::great_circle_point(y, normal, ang);
    const double r = (x.cart - y.cart).norm();
    if (r < 1e-8 * y.r) {
      t.truncated = true;
      t.notice = "approach stopped: |x - y| below 1e-8 times the sphere radius";
      break;
    }
    const auto fx = geometry::tangent_frame(x);
    const CVec3 inc = dipole_matrix(k, x.cart, y.cart) * p.cast<cplx>();
    CVec3 sc = CVec3::Zero();
    if (field) sc = field->scattered(x.cart);
    ProbeRow row;
    row.angle = ang;
    row.r = r;
    row.measured = dot(fx.e_phi, inc + sc);
    row.scattered_abs = std::abs(dot(fx.e_phi, sc));
    const cplx phi = std::exp(I * k * r) / (4.0 * pi * r);
    if (kind == ProbeKind::phi_phi) row.predicted = (I / k) * (k * k + (I * k - 1.0 / r) / r) * phi;
    else row.predicted = -(3.0 * I / (2.0 * k)) * phi / (r * r);
    row.ratio = row.measured / row.predicted;
    row.scaled_modulus = std::abs(row.measured) * 4.0 * pi * r * r * r;
    t.rows.push_back(row);
  }
  if (t.rows.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = double(t.rows.size());
    for (const auto &r : t.rows) {
      const double lx = std::log(r.r), ly = std::log(std::abs(r.measured));
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
    }
    t.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  }
  return t;
}

} // namespace twosphere::em

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
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "core.hpp"
#include "detail/gmres.hpp"
#include "detail/toeplitz.hpp"
#include "specfun.hpp"

namespace twosphere::acoustic {

struct AcousticConfig {
  double k = 2.0;  // wavenumber, 1/length
  double R1 = 1.0; // inner measurement radius
  double R2 = 2.0; // outer measurement radius

  void validate() const {
    if (!(k > 0.0) || !std::isfinite(k)) throw DomainError("AcousticConfig: need k > 0");
    if (!(R1 > 0.0 && R2 > R1)) throw DomainError("AcousticConfig: need 0 < R1 < R2");
  }
};

enum class Boundary { sound_soft, impedance };

struct SphereScatterer {
  double radius = 0.5;
  Boundary bc = Boundary::sound_soft;
  cplx eta = 0.0; // constant impedance, Im eta >= 0

  static SphereScatterer sound_soft(double a) { return {a, Boundary::sound_soft, 0.0}; }
  static SphereScatterer impedance(double a, cplx eta) { return {a, Boundary::impedance, eta}; }

  void validate() const {
    if (!(radius > 0.0)) throw DomainError("SphereScatterer: radius must be positive");
    if (bc == Boundary::impedance && eta.imag() < 0.0) throw DomainError("SphereScatterer: need Im eta >= 0");
  }
  double support_radius() const { return radius; }
  nlohmann::json to_json() const {
    nlohmann::json j = {{"type", "sphere"}, {"radius", radius}};
    j["bc"] = bc == Boundary::sound_soft ? "sound_soft" : "impedance";
    if (bc == Boundary::impedance) j["eta"] = {eta.real(), eta.imag()};
    return j;
  }
};

// Refractive index on a uniform voxel grid covering the cube [-L, L]^3; n = 1 elsewhere.
struct MediumSample {
  int n = 32;
  double half_width = 0.5;
  std::vector<cplx> n_values; // index (i*n + j)*n + l, i along x1

  double spacing() const { return 2.0 * half_width / n; }
  std::size_t voxel_count() const { return std::size_t(n) * n * n; }
  Vec3 center(int i, int j, int l) const {
    const double h = spacing();
    return Vec3(-half_width + (i + 0.5) * h, -half_width + (j + 0.5) * h, -half_width + (l + 0.5) * h);
  }
  Vec3 center(std::size_t q) const { return center(int(q / (std::size_t(n) * n)), int((q / n) % n), int(q % n)); }

  template <class F> static MediumSample from_function(int n, double half_width, F &&index_of) {
    MediumSample m;
    m.n = n;
    m.half_width = half_width;
    m.n_values.resize(m.voxel_count());
    for (std::size_t q = 0; q < m.voxel_count(); ++q) m.n_values[q] = index_of(m.center(q));
    return m;
  }

  // homogeneous ball, voxel-center sampled
  static MediumSample ball(int n, double half_width, double radius, cplx n_inside) {
    return from_function(n, half_width, [&](const Vec3 &z) { return z.norm() < radius ? n_inside : cplx(1.0); });
  }

  void validate() const {
    if (n < 2) throw DomainError("MediumSample: need at least 2 voxels per axis");
    if (!(half_width > 0.0)) throw DomainError("MediumSample: half width must be positive");
    if (n_values.size() != voxel_count()) throw DomainError("MediumSample: n_values has wrong size");
    for (auto v : n_values)
      if (!(v.real() > 0.0) || v.imag() < 0.0) throw DomainError("MediumSample: need Re n > 0, Im n >= 0");
  }

  // radius of the smallest origin-centred ball containing every voxel with n != 1
  double support_radius() const {
    double r = 0.0;
    const double half_diag = 0.5 * std::sqrt(3.0) * spacing();
    for (std::size_t q = 0; q < voxel_count(); ++q)
      if (n_values[q] != cplx(1.0)) r = std::max(r, center(q).norm() + half_diag);
    return r;
  }

  double max_contrast() const {
    double c = 0.0;
    for (auto v : n_values) c = std::max(c, std::abs(v - 1.0));
    return c;
  }

  nlohmann::json to_json() const {
    nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
    for (auto v : n_values) {
      re.push_back(v.real());
      im.push_back(v.imag());
    }
    return {{"type", "medium"}, {"n", n}, {"half_width", half_width}, {"n_re", re}, {"n_im", im}};
  }

  static MediumSample from_json(const nlohmann::json &j) {
    MediumSample m;
    m.n = j.at("n").get<int>();
    m.half_width = j.at("half_width").get<double>();
    const auto &re = j.at("n_re");
    const auto &im = j.at("n_im");
    if (re.size() != m.voxel_count() || im.size() != m.voxel_count())
      throw DomainError("MediumSample: voxel arrays do not match n^3");
    m.n_values.resize(m.voxel_count());
    for (std::size_t q = 0; q < m.voxel_count(); ++q) m.n_values[q] = {re[q].get<double>(), im[q].get<double>()};
    return m;
  }
};

using Scatterer = std::variant<SphereScatterer, MediumSample>;

inline double support_radius(const Scatterer &s) {
  return std::visit([](const auto &v) { return v.support_radius(); }, s);
}

inline void validate_scatterer(const AcousticConfig &cfg, const Scatterer &s) {
  cfg.validate();
  std::visit([](const auto &v) { v.validate(); }, s);
  if (!(support_radius(s) < cfg.R1)) throw DomainError("scatterer does not fit strictly inside B_R1");
}

// Phi_k(x, y) = exp(ik|x-y|) / (4 pi |x-y|)
inline cplx fundamental_solution(double k, const Vec3 &x, const Vec3 &y) {
  const double r = (x - y).norm();
  if (r == 0.0) throw SingularityError("fundamental_solution: x = y");
  return std::exp(I * k * r) / (4.0 * pi * r);
}

// gradient in x
inline CVec3 fundamental_solution_gradient(double k, const Vec3 &x, const Vec3 &y) {
  const Vec3 d = x - y;
  const double r = d.norm();
  if (r == 0.0) throw SingularityError("fundamental_solution: x = y");
  const cplx phi = std::exp(I * k * r) / (4.0 * pi * r);
  return (phi * (I * k - 1.0 / r) / r) * d.cast<cplx>();
}

struct Source {
  enum class Kind { point, plane_wave };
  Kind kind = Kind::point;
  Vec3 v = Vec3::Zero(); // location y, or unit direction d

  static Source point(const Vec3 &y) { return {Kind::point, y}; }
  static Source plane_wave(const Vec3 &d) { return {Kind::plane_wave, d}; }

  nlohmann::json to_json() const {
    return {{"type", kind == Kind::point ? "point" : "plane_wave"}, {"v", {v[0], v[1], v[2]}}};
  }
};

inline cplx incident_value(double k, const Source &s, const Vec3 &x) {
  if (s.kind == Source::Kind::point) return fundamental_solution(k, x, s.v);
  return std::exp(I * k * x.dot(s.v));
}

inline CVec3 incident_gradient(double k, const Source &s, const Vec3 &x) {
  if (s.kind == Source::Kind::point) return fundamental_solution_gradient(k, x, s.v);
  return (I * k * std::exp(I * k * x.dot(s.v))) * s.v.cast<cplx>();
}

namespace detail {

struct ModalData {
  double k = 0.0, a = 0.0;
  Vec3 axis;                     // unit source direction (y/|y|, or d)
  std::vector<cplx> s, g;        // term_n = s_n h_n(k r) g_n P_n(cos gamma)
  double certificate = 0.0;
  int order = 0;
};

struct VolumeData {
  double k = 0.0;
  std::vector<Vec3> nodes;       // voxel centres with n != 1
  std::vector<cplx> density;     // k^2 (n - 1) h^3 w at those nodes
  std::vector<cplx> total_interior; // w at every voxel centre
  double residual = 0.0;         // relative discrete LS residual
  int iterations = 0;
  bool dense = false;
};

} // namespace detail

class AcousticField {
public:
  enum class Kind { modal_series, volume_potential };

  Kind kind() const { return kind_; }
  double k() const { return k_; }
  const Source &source() const { return source_; }
  double activation() const { return tau_; }
  const std::string &scatterer_id() const { return scatterer_id_; }
  double trunc_certificate() const { return modal_ ? modal_->certificate : 0.0; }
  int truncation_order() const { return modal_ ? modal_->order : 0; }
  double ls_residual() const { return volume_ ? volume_->residual : 0.0; }
  int ls_iterations() const { return volume_ ? volume_->iterations : 0; }
  const std::vector<cplx> &interior_total() const { return volume_->total_interior; }

  AcousticField deactivated() const {
    AcousticField f = *this;
    f.tau_ = 0.0;
    return f;
  }

  cplx incident(const Vec3 &x) const { return incident_value(k_, source_, x); }

  cplx scattered(const Vec3 &x) const {
    if (modal_) {
      const auto &m = *modal_;
      const double r = x.norm();
      check_exterior(r);
      const auto t = specfun::modal_table(m.order, k_ * r);
      const auto P = specfun::legendre(m.order, std::clamp(x.dot(m.axis) / r, -1.0, 1.0));
      cplx sum = 0.0;
      for (int n = 0; n <= m.order; ++n) sum += (m.s[n] * t.h(n)) * m.g[n] * P[n];
      return sum;
    }
    const auto &v = *volume_;
    cplx sum = 0.0;
    for (std::size_t q = 0; q < v.nodes.size(); ++q) sum += v.density[q] * fundamental_solution(k_, x, v.nodes[q]);
    return sum;
  }

  // activation-weighted total field tau * (w^i + w^s)
  cplx total(const Vec3 &x) const {
    if (tau_ == 0.0) return 0.0;
    return tau_ * (incident(x) + scattered(x));
  }

  cplx scattered_radial_derivative(const Vec3 &x) const {
    const double r = x.norm();
    if (modal_) {
      const auto &m = *modal_;
      check_exterior(r);
      const auto t = specfun::modal_table(m.order, k_ * r);
      const auto P = specfun::legendre(m.order, std::clamp(x.dot(m.axis) / r, -1.0, 1.0));
      cplx sum = 0.0;
      for (int n = 0; n <= m.order; ++n) sum += (m.s[n] * (k_ * t.hp(n))) * m.g[n] * P[n];
      return sum;
    }
    const auto &v = *volume_;
    const Vec3 xh = x / r;
    cplx sum = 0.0;
    for (std::size_t q = 0; q < v.nodes.size(); ++q)
      sum += v.density[q] * dot(fundamental_solution_gradient(k_, x, v.nodes[q]), xh);
    return sum;
  }

  cplx total_radial_derivative(const Vec3 &x) const {
    const Vec3 xh = x / x.norm();
    return dot(incident_gradient(k_, source_, x), xh) + scattered_radial_derivative(x);
  }

  // coefficient of exp(ikr)/r in w^s
  cplx far_field(const Vec3 &xhat_in) const {
    const Vec3 xhat = xhat_in.normalized();
    if (modal_) {
      const auto &m = *modal_;
      const auto P = specfun::legendre(m.order, std::clamp(xhat.dot(m.axis), -1.0, 1.0));
      cplx sum = 0.0;
      cplx mi = -I; // (-i)^(n+1)
      for (int n = 0; n <= m.order; ++n) {
        sum += m.s[n] * (mi / k_) * m.g[n] * P[n];
        mi *= -I;
      }
      return sum;
    }
    const auto &v = *volume_;
    cplx sum = 0.0;
    for (std::size_t q = 0; q < v.nodes.size(); ++q)
      sum += v.density[q] * std::exp(-I * k_ * xhat.dot(v.nodes[q])) / (4.0 * pi);
    return sum;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["kind"] = kind_ == Kind::modal_series ? "modal_series" : "volume_potential";
    j["k"] = k_;
    j["source"] = source_.to_json();
    j["tau"] = tau_;
    if (modal_) {
      nlohmann::json c = nlohmann::json::array();
      for (int n = 0; n <= modal_->order; ++n) {
        const cplx v = modal_->s[n] * modal_->g[n];
        c.push_back({v.real(), v.imag()});
      }
      j["coefficients"] = c; // s_n g_n; multiply by h_n(kr) P_n
      j["trunc_certificate"] = modal_->certificate;
    } else {
      nlohmann::json d = nlohmann::json::array();
      for (std::size_t q = 0; q < volume_->nodes.size(); ++q) {
        const auto &z = volume_->nodes[q];
        d.push_back({z[0], z[1], z[2], volume_->density[q].real(), volume_->density[q].imag()});
      }
      j["density"] = d;
      j["trunc_certificate"] = nullptr;
      j["ls_residual"] = volume_->residual;
    }
    return j;
  }

private:
  friend AcousticField make_modal_field(double, const SphereScatterer &, const Source &);
  friend class MediumSolver;

  void check_exterior(double r) const {
    if (r < modal_->a * (1.0 - 1e-12)) throw DomainError("AcousticField: evaluation point inside the obstacle");
  }

  Kind kind_ = Kind::modal_series;
  double k_ = 0.0;
  Source source_;
  double tau_ = 1.0;
  std::string scatterer_id_;
  std::shared_ptr<const detail::ModalData> modal_;
  std::shared_ptr<const detail::VolumeData> volume_;
};

inline constexpr double trunc_tol = 1e-12;

inline AcousticField make_modal_field(double k, const SphereScatterer &sc, const Source &src) {
  sc.validate();
  const double a = sc.radius;
  const double ka = k * a;
  double r_src = a;
  auto data = std::make_shared<detail::ModalData>();
  data->k = k;
  data->a = a;
  if (src.kind == Source::Kind::point) {
    r_src = src.v.norm();
    if (!(r_src > a)) throw DomainError("point source must lie outside the obstacle");
    data->axis = src.v / r_src;
  } else {
    if (std::abs(src.v.norm() - 1.0) > 1e-12) throw DomainError("plane-wave direction must be a unit vector");
    data->axis = src.v;
  }

  // orders past n_lim are not representable in double precision at ka
  const int n_lim = specfun::representable_order(3000, ka);
  int N = std::min(int(std::ceil(k * std::max(a, r_src))) + 12 + int(std::ceil(4.0 * std::cbrt(ka))), n_lim);
  for (;;) {
    if (N < 2) throw SolverError("modal series: coefficients left the double range");
    const auto ta = specfun::modal_table(N, ka);
    specfun::ModalTable ty;
    if (src.kind == Source::Kind::point) ty = specfun::modal_table(N, k * r_src);
    data->s.assign(N + 1, 0.0);
    data->g.assign(N + 1, 0.0);
    std::vector<double> trace(N + 1);
    cplx in = 1.0; // i^n
    bool finite = true;
    for (int n = 0; n <= N; ++n) {
      const cplx ha = ta.h(n);
      cplx s;
      if (sc.bc == Boundary::sound_soft) {
        s = -ta.j[n];
      } else {
        const cplx num = k * ta.jp[n] + sc.eta * ta.j[n];
        const cplx den_over_h = k * (ta.hp(n) / ha) + sc.eta;
        s = -num / den_over_h;
      }
      cplx src_n = (src.kind == Source::Kind::point) ? (I * k / (4.0 * pi)) * double(2 * n + 1) * ty.h(n)
                                                      : in * double(2 * n + 1);
      data->s[n] = s;
      data->g[n] = src_n / ha;
      trace[n] = std::abs(s) * std::abs(src_n);
      if (!std::isfinite(trace[n]) || !std::isfinite(std::abs(data->g[n]))) finite = false;
      in *= I;
    }
    if (!finite) throw SolverError("modal series: coefficients left the double range");
    const double peak = *std::max_element(trace.begin(), trace.end());
    const double tail = std::max({trace[N], trace[N - 1], trace[N - 2]});
    data->certificate = peak > 0.0 ? tail / peak : 0.0;
    data->order = N;
    if (data->certificate < trunc_tol) break;
    if (N >= n_lim)
      throw SolverError(n_lim >= 3000 ? "modal series: truncation certificate not reached below order 3000"
                                      : "modal series: coefficients leave the double range before the series converges");
    N = std::min(N + 8, n_lim);
  }

  AcousticField f;
  f.kind_ = AcousticField::Kind::modal_series;
  f.k_ = k;
  f.source_ = src;
  f.scatterer_id_ = sc.to_json().dump();
  f.modal_ = std::move(data);
  return f;
}

inline AcousticField solve_sphere_point_source(const AcousticConfig &cfg, const SphereScatterer &sc, const Vec3 &y) {
  cfg.validate();
  return make_modal_field(cfg.k, sc, Source::point(y));
}

inline AcousticField solve_sphere_plane_wave(const AcousticConfig &cfg, const SphereScatterer &sc, const Vec3 &d) {
  cfg.validate();
  return make_modal_field(cfg.k, sc, Source::plane_wave(d));
}

struct LsOptions {
  double rel_tol = 1e-11;
  int max_iter = 500;
  std::size_t dense_limit = 4096; // largest system solved densely
  bool offset_sources = false;    // shift sources sitting on voxel centres by half a voxel
};

// Lippmann-Schwinger solver for one medium; the convolution operator is reused across sources.
class MediumSolver {
public:
  MediumSolver(const AcousticConfig &cfg, MediumSample med, LsOptions opt = {})
      : cfg_(cfg), med_(std::move(med)), opt_(opt) {
    validate_scatterer(cfg_, med_);
    const double k = cfg_.k, h = med_.spacing();
    const int n = med_.n;
    const double rho = std::cbrt(3.0 / (4.0 * pi)) * h; // equal-volume ball radius
    self_ = ((1.0 - I * k * rho) * std::exp(I * k * rho) - 1.0) / (k * k);
    const double h3 = h * h * h;
    conv_ = std::make_shared<twosphere::detail::ToeplitzConvolution>(n, [&](int di, int dj, int dl) -> cplx {
      if (di == 0 && dj == 0 && dl == 0) return self_;
      const double r = h * std::sqrt(double(di) * di + double(dj) * dj + double(dl) * dl);
      return h3 * std::exp(I * k * r) / (4.0 * pi * r);
    });
    contrast_.resize(med_.voxel_count());
    for (std::size_t q = 0; q < contrast_.size(); ++q) contrast_[q] = k * k * (med_.n_values[q] - 1.0);
    id_ = med_.to_json().dump();
  }

  const MediumSample &medium() const { return med_; }
  const AcousticConfig &config() const { return cfg_; }

  // (I - G D) w
  twosphere::detail::CVector apply(const twosphere::detail::CVector &w) const {
    twosphere::detail::CVector dw(w.size());
    for (Eigen::Index q = 0; q < w.size(); ++q) dw[q] = contrast_[q] * w[q];
    return w - conv_->apply(dw);
  }

  AcousticField solve(const Source &src_in) const {
    Source src = src_in;
    if (src.kind == Source::Kind::point) {
      if (!(src.v.norm() > med_.support_radius()))
        throw DomainError("point source must lie outside the medium support");
      // nearest voxel centre
      const double h = med_.spacing();
      Vec3 rel = (src.v + Vec3::Constant(med_.half_width)) / h - Vec3::Constant(0.5);
      const Vec3 rounded = rel.array().round();
      bool inside = (rounded.array() >= 0).all() && (rounded.array() <= med_.n - 1).all();
      if (inside && (rel - rounded).norm() < 1e-12) {
        if (!opt_.offset_sources) throw SingularityError("point source coincides with a voxel centre");
        src.v += Vec3::Constant(0.5 * h);
      }
    }
    const std::size_t M = med_.voxel_count();
    twosphere::detail::CVector b(M);
    for (std::size_t q = 0; q < M; ++q) b[q] = incident_value(cfg_.k, src, med_.center(q));

    auto data = std::make_shared<detail::VolumeData>();
    data->k = cfg_.k;
    twosphere::detail::CVector w;
    bool done = false;
    const double contrast_size = cfg_.k * cfg_.k * med_.max_contrast() * std::pow(2.0 * med_.half_width, 2) * 3.0;
    if (contrast_size < 50.0 || M > opt_.dense_limit) {
      auto r = twosphere::detail::gmres([&](const twosphere::detail::CVector &v) { return apply(v); }, b, w,
                                         opt_.rel_tol, 40, opt_.max_iter);
      data->iterations = r.iterations;
      done = r.converged;
    }
    if (!done) {
      if (M > opt_.dense_limit) {
        std::ostringstream os;
        os << "Lippmann-Schwinger iteration did not converge: " << data->iterations << " iterations, "
           << "contrast number " << contrast_size << ", system size " << M << " exceeds the dense limit";
        throw SolverError(os.str());
      }
      w = dense_solve(b);
      data->dense = true;
    }
    const twosphere::detail::CVector res = apply(w) - b;
    data->residual = res.cwiseAbs().maxCoeff() / std::max(b.cwiseAbs().maxCoeff(), 1e-300);
    if (!(data->residual < 1e-8)) {
      std::ostringstream os;
      os << "Lippmann-Schwinger residual " << data->residual << " above 1e-8";
      throw SolverError(os.str());
    }

    const double h3 = std::pow(med_.spacing(), 3);
    data->total_interior.assign(w.data(), w.data() + M);
    for (std::size_t q = 0; q < M; ++q)
      if (contrast_[q] != cplx(0.0)) {
        data->nodes.push_back(med_.center(q));
        data->density.push_back(contrast_[q] * h3 * w[q]);
      }

    AcousticField f;
    f.kind_ = AcousticField::Kind::volume_potential;
    f.k_ = cfg_.k;
    f.source_ = src;
    f.scatterer_id_ = id_;
    f.volume_ = std::move(data);
    return f;
  }

private:
  twosphere::detail::CVector dense_solve(const twosphere::detail::CVector &b) const {
    const std::size_t M = med_.voxel_count();
    Eigen::MatrixXcd A(M, M);
    twosphere::detail::CVector e = twosphere::detail::CVector::Zero(M);
    for (std::size_t q = 0; q < M; ++q) {
      e[q] = 1.0;
      A.col(q) = apply(e);
      e[q] = 0.0;
    }
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(A);
    twosphere::detail::CVector w = lu.solve(b);
    if (!w.allFinite()) throw SolverError("dense Lippmann-Schwinger solve produced non-finite values");
    return w;
  }

  AcousticConfig cfg_;
  MediumSample med_;
  LsOptions opt_;
  cplx self_;
  std::vector<cplx> contrast_;
  std::shared_ptr<twosphere::detail::ToeplitzConvolution> conv_;
  std::string id_;
};

inline AcousticField solve_medium_ls(const AcousticConfig &cfg, const MediumSample &med, const Vec3 &y,
                                     LsOptions opt = {}) {
  return MediumSolver(cfg, med, opt).solve(Source::point(y));
}

// Single-scattering (Born) approximation on the same voxels: sum_j k^2 (n_j - 1) h^3 Phi(x, z_j) w^i(z_j).
inline cplx born_scattered(const AcousticConfig &cfg, const MediumSample &med, const Source &src, const Vec3 &x) {
  const double k = cfg.k, h3 = std::pow(med.spacing(), 3);
  cplx sum = 0.0;
  for (std::size_t q = 0; q < med.voxel_count(); ++q) {
    const cplx c = med.n_values[q] - 1.0;
    if (c == cplx(0.0)) continue;
    const Vec3 z = med.center(q);
    sum += k * k * c * h3 * fundamental_solution(k, x, z) * incident_value(k, src, z);
  }
  return sum;
}

inline cplx total_field_superposed(const AcousticField &f1, const AcousticField &f2, const Vec3 &x) {
  if (f1.k() != f2.k() || f1.scatterer_id() != f2.scatterer_id())
    throw DomainError("total_field_superposed: fields belong to different problems");
  return f1.total(x) + f2.total(x);
}

// |r (d/dr w^s - i k w^s)| at r * xhat
inline double radiation_residual(const AcousticField &f, double r, const Vec3 &xhat) {
  const Vec3 x = r * xhat.normalized();
  return std::abs(r * (f.scattered_radial_derivative(x) - I * f.k() * f.scattered(x)));
}

// Same probe for a point-source incident field Phi_k(., y).
inline double radiation_residual_point_source(double k, const Vec3 &y, double r, const Vec3 &xhat) {
  const Vec3 x = r * xhat.normalized();
  const cplx dr = dot(fundamental_solution_gradient(k, x, y), xhat.normalized());
  return std::abs(r * (dr - I * k * fundamental_solution(k, x, y)));
}

// Build a point-source field for any scatterer kind. Media reuse a solver when one is given.
class PointSourceFactory {
public:
  PointSourceFactory(const AcousticConfig &cfg, const Scatterer &sc, LsOptions opt = {}) : cfg_(cfg), sc_(sc) {
    validate_scatterer(cfg_, sc_);
    if (auto *m = std::get_if<MediumSample>(&sc_)) solver_ = std::make_shared<MediumSolver>(cfg_, *m, opt);
  }
  AcousticField operator()(const Vec3 &y) const {
    if (solver_) return solver_->solve(Source::point(y));
    return make_modal_field(cfg_.k, std::get<SphereScatterer>(sc_), Source::point(y));
  }
  AcousticField plane_wave(const Vec3 &d) const {
    if (solver_) return solver_->solve(Source::plane_wave(d));
    return make_modal_field(cfg_.k, std::get<SphereScatterer>(sc_), Source::plane_wave(d));
  }
  const AcousticConfig &config() const { return cfg_; }
  const Scatterer &scatterer() const { return sc_; }

private:
  AcousticConfig cfg_;
  Scatterer sc_;
  std::shared_ptr<MediumSolver> solver_;
};

} // namespace twosphere::acoustic

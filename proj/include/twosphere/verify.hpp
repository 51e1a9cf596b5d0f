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
#include <cstdint>
#include <functional>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "acoustic.hpp"
#include "core.hpp"
#include "detail/parallel.hpp"
#include "em.hpp"
#include "geometry.hpp"
#include "phaseless.hpp"

namespace twosphere::verify {

// Lower-bound checks (witnesses) report floor / observed against tolerance 1, so pass <=> error <= tolerance
// holds for every report.
struct CheckReport {
  std::string check_name;
  nlohmann::json config = nlohmann::json::object();
  double max_abs_error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::size_t sample_count = 0;
  nlohmann::json details = nlohmann::json::object();

  nlohmann::json to_json() const {
    auto num = [](double v) -> nlohmann::json {
      if (std::isfinite(v)) return v;
      return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
    };
    return {{"check_name", check_name}, {"config", config},          {"max_abs_error", num(max_abs_error)},
            {"tolerance", tolerance},   {"pass", pass},              {"sample_count", sample_count},
            {"details", details}};
  }
};

inline CheckReport make_report(std::string name, nlohmann::json config, double err, double tol, std::size_t count,
                               nlohmann::json details = nlohmann::json::object()) {
  CheckReport r;
  r.check_name = std::move(name);
  r.config = std::move(config);
  r.max_abs_error = err;
  r.tolerance = tol;
  r.pass = err <= tol; // false for nan
  r.sample_count = count;
  r.details = std::move(details);
  return r;
}

inline double witness_ratio(double floor, double observed) {
  if (!(observed > 0.0)) return std::numeric_limits<double>::infinity();
  return floor / observed;
}

// ---------------------------------------------------------------------------------------------
// probe points

inline double radical_inverse(std::uint64_t i, unsigned base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (i > 0) {
    r += f * double(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

// Halton points in up to 6 dimensions; the seed shifts the starting index.
class Halton {
public:
  explicit Halton(std::uint64_t seed = 0) : index_(seed + 1) {}

  std::array<double, 6> next() {
    static constexpr unsigned primes[6] = {2, 3, 5, 7, 11, 13};
    std::array<double, 6> u{};
    for (int d = 0; d < 6; ++d) u[d] = radical_inverse(index_, primes[d]);
    ++index_;
    return u;
  }

private:
  std::uint64_t index_;
};

inline Vec3 unit_from(double u, double v) {
  const double c = 2.0 * u - 1.0, s = std::sqrt(std::max(0.0, 1.0 - c * c)), ph = 2.0 * pi * v;
  return Vec3(s * std::cos(ph), s * std::sin(ph), c);
}

// point with radius in [r_lo, r_hi]
inline Vec3 shell_point(double u, double v, double w, double r_lo, double r_hi) {
  return (r_lo + (r_hi - r_lo) * w) * unit_from(u, v);
}

struct PointPair {
  Vec3 x, y;
};

inline std::vector<PointPair> probe_pairs(std::size_t count, double r_lo, double r_hi, std::uint64_t seed) {
  Halton h(seed);
  std::vector<PointPair> out;
  while (out.size() < count) {
    const auto u = h.next();
    PointPair p{shell_point(u[0], u[1], u[2], r_lo, r_hi), shell_point(u[3], u[4], u[5], r_lo, r_hi)};
    if ((p.x - p.y).norm() > 1e-3 * r_lo) out.push_back(p);
  }
  return out;
}

inline std::vector<Vec3> probe_directions(std::size_t count, std::uint64_t seed) {
  Halton h(seed);
  std::vector<Vec3> out;
  for (std::size_t i = 0; i < count; ++i) {
    const auto u = h.next();
    out.push_back(unit_from(u[0], u[1]));
  }
  return out;
}

inline std::vector<Vec3> probe_points(std::size_t count, double r_lo, double r_hi, std::uint64_t seed) {
  Halton h(seed);
  std::vector<Vec3> out;
  for (std::size_t i = 0; i < count; ++i) {
    const auto u = h.next();
    out.push_back(shell_point(u[0], u[1], u[2], r_lo, r_hi));
  }
  return out;
}

inline nlohmann::json vec_json(const Vec3 &v) { return {v[0], v[1], v[2]}; }

inline nlohmann::json scatterer_json(const acoustic::Scatterer &sc) {
  auto j = std::visit([](const auto &s) { return s.to_json(); }, sc);
  if (j.value("type", "") == "medium") { // the voxel arrays are too long for a summary
    const auto &m = std::get<acoustic::MediumSample>(sc);
    return {{"type", "medium"}, {"n", m.n}, {"half_width", m.half_width}, {"max_contrast", m.max_contrast()}};
  }
  return j;
}

inline nlohmann::json problem_json(const acoustic::AcousticConfig &cfg) {
  return {{"k", cfg.k}, {"R1", cfg.R1}, {"R2", cfg.R2}};
}

// ---------------------------------------------------------------------------------------------
// acoustic reciprocity

// max over pairs of |w^s(x, y) - w^s(y, x)| / max(|w^s(x, y)|, |w^s(y, x)|), points in R1 <= |x| <= R2
inline CheckReport check_acoustic_reciprocity(const acoustic::PointSourceFactory &factory, std::size_t pair_count,
                                              double tol, std::uint64_t seed = 0, int jobs = 1) {
  const auto &cfg = factory.config();
  const auto pairs = probe_pairs(pair_count, cfg.R1, cfg.R2, seed);
  std::vector<double> err(pairs.size(), 0.0);
  detail::parallel_for(pairs.size(), jobs, [&](std::size_t i) {
    const cplx a = factory(pairs[i].y).scattered(pairs[i].x);
    const cplx b = factory(pairs[i].x).scattered(pairs[i].y);
    const double s = std::max(std::abs(a), std::abs(b));
    err[i] = s > 0.0 ? std::abs(a - b) / s : 0.0;
  });
  const bool medium = std::holds_alternative<acoustic::MediumSample>(factory.scatterer());
  nlohmann::json c = problem_json(cfg);
  c["scatterer"] = scatterer_json(factory.scatterer());
  c["seed"] = seed;
  return make_report(medium ? "acoustic_reciprocity_ls" : "acoustic_reciprocity", c,
                     err.empty() ? 0.0 : *std::max_element(err.begin(), err.end()), tol, pairs.size());
}

// max |4 pi w^inf(-d, z) - u^s(z, d)| over directions x points
inline CheckReport check_mixed_reciprocity_acoustic(const acoustic::PointSourceFactory &factory,
                                                    std::size_t n_directions, std::size_t n_points, double tol,
                                                    std::uint64_t seed = 0, int jobs = 1) {
  const auto &cfg = factory.config();
  const auto dirs = probe_directions(n_directions, seed);
  const auto pts = probe_points(n_points, cfg.R1, cfg.R2, seed + 7919);
  std::vector<acoustic::AcousticField> plane, point;
  plane.reserve(dirs.size());
  point.reserve(pts.size());
  for (const auto &d : dirs) plane.push_back(factory.plane_wave(d));
  for (const auto &z : pts) point.push_back(factory(z));
  std::vector<double> err(dirs.size() * pts.size(), 0.0);
  double scale = 0.0;
  detail::parallel_for(err.size(), jobs, [&](std::size_t q) {
    const std::size_t i = q / pts.size(), j = q % pts.size();
    err[q] = std::abs(4.0 * pi * point[j].far_field(-dirs[i]) - plane[i].scattered(pts[j]));
  });
  for (std::size_t i = 0; i < dirs.size(); ++i)
    for (const auto &z : pts) scale = std::max(scale, std::abs(plane[i].scattered(z)));
  nlohmann::json c = problem_json(cfg);
  c["scatterer"] = scatterer_json(factory.scatterer());
  c["directions"] = dirs.size();
  c["points"] = pts.size();
  c["seed"] = seed;
  return make_report("mixed_reciprocity_acoustic", c, err.empty() ? 0.0 : *std::max_element(err.begin(), err.end()),
                     tol, err.size(), {{"max_scattered_modulus", scale}});
}

// ---------------------------------------------------------------------------------------------
// electromagnetic reciprocity

// Columns: scattered field at x of the unit dipoles e_1, e_2, e_3 at y.
inline CMat3 em_scattered_matrix(const acoustic::AcousticConfig &cfg, double a, const Vec3 &x, const Vec3 &y) {
  CMat3 m;
  for (int j = 0; j < 3; ++j) m.col(j) = em::solve_pec_sphere_dipole(cfg, a, {y, Vec3::Unit(j), 1}).scattered(x);
  return m;
}

// E^s(x, y) = E^s(y, x)^T, error relative to the largest entry seen
inline CheckReport check_em_reciprocity(const acoustic::AcousticConfig &cfg, double pec_radius, std::size_t pair_count,
                                        double tol, std::uint64_t seed = 0, int jobs = 1) {
  const auto pairs = probe_pairs(pair_count, cfg.R1, cfg.R2, seed);
  std::vector<double> diff(pairs.size(), 0.0), size(pairs.size(), 0.0);
  detail::parallel_for(pairs.size(), jobs, [&](std::size_t i) {
    const CMat3 a = em_scattered_matrix(cfg, pec_radius, pairs[i].x, pairs[i].y);
    const CMat3 b = em_scattered_matrix(cfg, pec_radius, pairs[i].y, pairs[i].x);
    diff[i] = (a - b.transpose()).cwiseAbs().maxCoeff();
    size[i] = std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
  });
  double err = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) err = std::max(err, size[i] > 0.0 ? diff[i] / size[i] : 0.0);
  nlohmann::json c = problem_json(cfg);
  c["pec_radius"] = pec_radius;
  c["seed"] = seed;
  return make_report("em_reciprocity", c, err, tol, pairs.size());
}

// 4 pi E^inf(-d, x) = E^s(x, d)^T, where column j of E^inf(xhat, x) is the far field of the dipole e_j at x
// and column q of E^s(x, d) is the scattered field at x of the plane wave with direction d and vector e_q.
inline CheckReport check_em_mixed_reciprocity(const acoustic::AcousticConfig &cfg, double pec_radius,
                                              std::size_t n_directions, std::size_t n_points, double tol,
                                              std::uint64_t seed = 0, int jobs = 1) {
  const auto dirs = probe_directions(n_directions, seed);
  const auto pts = probe_points(n_points, cfg.R1, cfg.R2, seed + 7919);
  std::vector<double> err(dirs.size() * pts.size(), 0.0);
  detail::parallel_for(err.size(), jobs, [&](std::size_t q) {
    const Vec3 &d = dirs[q / pts.size()];
    const Vec3 &x = pts[q % pts.size()];
    CMat3 far, sc;
    for (int j = 0; j < 3; ++j) {
      far.col(j) = em::solve_pec_sphere_dipole(cfg, pec_radius, {x, Vec3::Unit(j), 1}).far_field(-d);
      sc.col(j) = em::solve_pec_sphere_plane_wave(cfg, pec_radius, d, Vec3::Unit(j)).scattered(x);
    }
    err[q] = (4.0 * pi * far - sc.transpose()).cwiseAbs().maxCoeff();
  });
  nlohmann::json c = problem_json(cfg);
  c["pec_radius"] = pec_radius;
  c["directions"] = dirs.size();
  c["points"] = pts.size();
  c["seed"] = seed;
  return make_report("em_mixed_reciprocity", c, err.empty() ? 0.0 : *std::max_element(err.begin(), err.end()), tol,
                     err.size());
}

// (i/k) curl curl (p e^{ik x.d}) by central differences of the scalar Hessian
inline CVec3 curl_curl_plane_wave_fd(double k, const Vec3 &x, const Vec3 &d, const Vec3 &p, double h) {
  auto f = [&](const Vec3 &z) { return std::exp(I * k * z.dot(d)); };
  Eigen::Matrix<cplx, 3, 3> H;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const Vec3 ei = h * Vec3::Unit(i), ej = h * Vec3::Unit(j);
      H(i, j) = (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)) / (4.0 * h * h);
    }
  // curl curl (p f) = grad(p . grad f) - p lap f
  const CVec3 pc = p.cast<cplx>();
  return (I / k) * (H * pc - H.trace() * pc);
}

// Observed convergence order of the finite-difference curl curl against the closed form, from steps h and h/2.
inline CheckReport check_plane_wave_identity(double k, const Vec3 &d_in, const Vec3 &p, std::size_t n_points,
                                             double h = 1e-2, double order_tol = 0.2, std::uint64_t seed = 0) {
  const Vec3 d = d_in.normalized();
  const auto pts = probe_points(n_points, 0.5, 2.0, seed);
  double e1 = 0.0, e2 = 0.0, scale = 0.0;
  for (const auto &x : pts) {
    const CVec3 exact = em::plane_wave_electric(k, x, d, p);
    scale = std::max(scale, exact.cwiseAbs().maxCoeff());
    e1 = std::max(e1, (curl_curl_plane_wave_fd(k, x, d, p, h) - exact).cwiseAbs().maxCoeff());
    e2 = std::max(e2, (curl_curl_plane_wave_fd(k, x, d, p, 0.5 * h) - exact).cwiseAbs().maxCoeff());
  }
  nlohmann::json c = {{"k", k}, {"d", vec_json(d)}, {"p", vec_json(p)}, {"h", h}, {"seed", seed}};
  nlohmann::json det = {{"error_h", e1}, {"error_h2", e2}, {"field_scale", scale}};
  if (e1 <= 1e-12 * k * p.norm()) { // differences at rounding level: nothing to converge
    det["observed_order"] = nullptr;
    return make_report("plane_wave_identity", c, 0.0, order_tol, pts.size(), det);
  }
  const double order = std::log2(e1 / e2);
  det["observed_order"] = order;
  return make_report("plane_wave_identity", c, std::abs(order - 2.0), order_tol, pts.size(), det);
}

// ---------------------------------------------------------------------------------------------
// phase-recovery identities on a synthesized dataset

// Complex field values for the two source slots of a sample; zero for an absent source.
using ComponentFn = std::function<std::array<cplx, 2>(const phaseless::Sample &)>;

inline ComponentFn acoustic_components(const phaseless::AcousticTable &W) {
  return [&W](const phaseless::Sample &s) {
    std::array<cplx, 2> v{0.0, 0.0};
    for (int q = 0; q < 2; ++q)
      if (s.sources[q] && s.tau[q]) v[q] = W(s.x_sphere, s.x_index, s.sources[q].sphere, s.sources[q].index);
    return v;
  };
}

inline ComponentFn em_components(const phaseless::EmTable &T) {
  return [&T](const phaseless::Sample &s) {
    std::array<cplx, 2> v{0.0, 0.0};
    for (int q = 0; q < 2; ++q)
      if (s.sources[q] && s.tau[q]) v[q] = T(s.x_index, s.m, s.sources[q]);
    return v;
  };
}

// Re(w1 conj w2) recovered from moduli against the complex values, and the cosine of the phase difference.
inline std::vector<CheckReport> check_phase_recovery(const phaseless::PhaselessDataset &d, const ComponentFn &comp,
                                                     double tol_real = 1e-10, double tol_cos = 1e-9,
                                                     double min_defined_fraction = 0.8) {
  const auto recs = phaseless::phase_records(d);
  double err_rc = 0.0, scale = 0.0, err_cos = 0.0;
  std::size_t defined = 0, flagged = 0;
  for (const auto &r : recs) {
    const auto v = comp(d.samples[r.sample]);
    const double direct = std::real(v[0] * std::conj(v[1]));
    err_rc = std::max(err_rc, std::abs(r.real_cross - direct));
    scale = std::max(scale, r.r_xy * r.r_xy0);
    if (!r.defined) continue;
    ++defined;
    if (r.flagged) ++flagged;
    err_cos = std::max(err_cos, std::abs(r.cos_delta - direct / (std::abs(v[0]) * std::abs(v[1]))));
  }
  const double frac = recs.empty() ? 0.0 : double(defined) / double(recs.size());
  nlohmann::json c = problem_json(d.cfg);
  c["mode"] = phaseless::to_string(d.mode);
  c["samples"] = d.samples.size();
  std::vector<CheckReport> out;
  out.push_back(make_report("phase_recovery_real_cross", c, scale > 0.0 ? err_rc / scale : err_rc, tol_real,
                            recs.size(), {{"amplitude_product_scale", scale}}));
  out.push_back(make_report("phase_recovery_cos_delta", c, err_cos, tol_cos, defined,
                            {{"records", recs.size()}, {"defined_fraction", frac}, {"flagged", flagged}}));
  out.push_back(make_report("phase_recovery_defined_fraction", c, witness_ratio(min_defined_fraction, frac), 1.0,
                            recs.size(), {{"defined_fraction", frac}, {"floor", min_defined_fraction}}));
  return out;
}

// Moduli alone: every superposed record must satisfy |Re(w1 conj w2)| <= |w1| |w2|. Reports the largest
// excess of the recovered cosine over 1; a hard violation reports infinity.
inline CheckReport check_dataset_consistency(const phaseless::PhaselessDataset &d, double tol = 1e-9) {
  nlohmann::json c = problem_json(d.cfg);
  c["mode"] = phaseless::to_string(d.mode);
  c["samples"] = d.samples.size();
  try {
    const auto recs = phaseless::phase_records(d);
    double excess = 0.0;
    std::size_t defined = 0;
    for (const auto &r : recs) {
      if (!r.defined) continue;
      ++defined;
      excess = std::max(excess, std::abs(r.real_cross) / (r.r_xy * r.r_xy0) - 1.0);
    }
    return make_report("dataset_consistency", c, excess, tol, recs.size(),
                       {{"defined", defined}, {"degenerate_channels", d.degenerate_channels.size()}});
  } catch (const Error &e) {
    return make_report("dataset_consistency", c, HUGE_VAL, tol, d.samples.size(), {{"error", e.what()}});
  }
}

// ---------------------------------------------------------------------------------------------
// nonvanishing witnesses

// Grid metric: Chebyshev distance in (theta index, cyclic phi index).
inline int grid_distance(const geometry::SphereGrid &g, std::size_t a, std::size_t b) {
  const int dt = std::abs(g.theta_index(a) - g.theta_index(b));
  int dp = std::abs(g.phi_index(a) - g.phi_index(b));
  dp = std::min(dp, g.n_phi - dp);
  return std::max(dt, dp);
}

inline std::vector<std::size_t> grid_disc(const geometry::SphereGrid &g, std::size_t center, int radius) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (grid_distance(g, center, i) <= radius) out.push_back(i);
  return out;
}

struct DiscWitness {
  int radius = -1; // -1: none found
  std::size_t center_x = 0, center_y = 0;
  double min_modulus = 0.0;

  nlohmann::json to_json() const {
    if (radius < 0) return {{"radius", -1}};
    return {{"radius", radius}, {"center_x", center_x}, {"center_y", center_y}, {"min_modulus", min_modulus}};
  }
};

inline double min_over(const std::vector<double> &modulus, std::size_t n, const std::vector<std::size_t> &ux,
                       const std::vector<std::size_t> &uy) {
  double mn = std::numeric_limits<double>::infinity();
  for (auto x : ux)
    for (auto y : uy) mn = std::min(mn, modulus[x * n + y]);
  return mn;
}

// Largest pair of disjoint discs U_x, U_y (same radius) with |value(x, y)| > tol on all of U_x x U_y.
inline DiscWitness disc_pair_witness(const geometry::SphereGrid &g, const std::vector<double> &modulus, double tol,
                                     int max_radius) {
  const std::size_t n = g.size();
  DiscWitness best;
  for (int rho = 0; rho <= max_radius; ++rho) {
    bool found = false;
    for (std::size_t cx = 0; cx < n && !found; ++cx) {
      const auto ux = grid_disc(g, cx, rho);
      for (std::size_t cy = 0; cy < n && !found; ++cy) {
        if (grid_distance(g, cx, cy) <= 2 * rho) continue;
        const double mn = min_over(modulus, n, ux, grid_disc(g, cy, rho));
        if (mn > tol) {
          best = {rho, cx, cy, mn};
          found = true;
        }
      }
    }
    if (!found) break;
  }
  return best;
}

// Three pairwise disjoint discs U, U1, U2 of a common radius with a(x, y1) != 0 on U x U1 and b(x, y2) != 0
// on U x U2; largest radius first.
inline std::pair<DiscWitness, DiscWitness> disc_triple_witness(const geometry::SphereGrid &g,
                                                               const std::vector<double> &a,
                                                               const std::vector<double> &b, double tol,
                                                               int max_radius) {
  const std::size_t n = g.size();
  for (int rho = max_radius; rho >= 0; --rho) {
    std::vector<std::vector<std::size_t>> disc(n);
    for (std::size_t c = 0; c < n; ++c) disc[c] = grid_disc(g, c, rho);
    for (std::size_t cu = 0; cu < n; ++cu)
      for (std::size_t c1 = 0; c1 < n; ++c1) {
        if (grid_distance(g, cu, c1) <= 2 * rho) continue;
        const double m1 = min_over(a, n, disc[cu], disc[c1]);
        if (!(m1 > tol)) continue;
        for (std::size_t c2 = 0; c2 < n; ++c2) {
          if (grid_distance(g, cu, c2) <= 2 * rho || grid_distance(g, c1, c2) <= 2 * rho) continue;
          const double m2 = min_over(b, n, disc[cu], disc[c2]);
          if (m2 > tol) return {DiscWitness{rho, cu, c1, m1}, DiscWitness{rho, cu, c2, m2}};
        }
      }
  }
  return {};
}

struct NonvanishingSpec {
  double modulus_floor = 1e-3; // max modulus on R2 for the reference source
  int min_disc_radius = 1;     // grid-metric radius of every witness disc
  int max_disc_radius = 2;
};

// Acoustic: max |w(x, y0)| over R2 and a disc pair U1 x U2 on R1 with nonzero moduli.
// Em: discs U, U1, U2 on R1 with r_phiphi != 0 on U x U1 and r_phitheta != 0 on U x U2.
inline CheckReport check_nonvanishing(const phaseless::PhaselessDataset &d, const NonvanishingSpec &spec = {}) {
  using phaseless::Pol;
  using phaseless::SetId;
  const auto &g = d.grid1;
  const std::size_t n = g.size();
  const double tol = d.tol_amp();
  nlohmann::json regions = nlohmann::json::object();
  double ratio = 0.0;
  std::size_t count = 0;
  const double rfloor = std::max(spec.min_disc_radius, 0) + 1.0; // disc radius r counts as r + 1
  if (d.mode == phaseless::Mode::acoustic) {
    double r2max = 0.0;
    std::vector<double> mod(n * n, 0.0);
    for (const auto &s : d.samples) {
      if (s.set == SetId::single_R2y0) {
        r2max = std::max(r2max, s.modulus);
        ++count;
      } else if (s.set == SetId::single_R1R1) {
        mod[std::size_t(s.x_index) * n + s.sources[0].index] = s.modulus;
        ++count;
      }
    }
    regions["R2_reference_source"] = {{"max_modulus", r2max}, {"floor", spec.modulus_floor}};
    ratio = witness_ratio(spec.modulus_floor, r2max);
    const auto w = disc_pair_witness(g, mod, tol, spec.max_disc_radius);
    regions["U1xU2"] = w.to_json();
    ratio = std::max(ratio, witness_ratio(rfloor, w.radius + 1.0));
  } else {
    std::vector<double> pp(n * n, 0.0), pt(n * n, 0.0);
    for (const auto &s : d.samples) {
      if (s.set != SetId::ele_a1 || s.m != Pol::phi || s.tau[0] + s.tau[1] != 1) continue;
      ++count;
      if (s.tau[0] && s.sources[0].pol == Pol::phi) pp[std::size_t(s.x_index) * n + s.sources[0].index] = s.modulus;
      if (s.tau[1] && s.sources[1].pol == Pol::theta) pt[std::size_t(s.x_index) * n + s.sources[1].index] = s.modulus;
    }
    const auto [w1, w2] = disc_triple_witness(g, pp, pt, tol, spec.max_disc_radius);
    const int radius = w2.radius;
    regions["UxU1_phiphi"] = w1.to_json();
    regions["UxU2_phitheta"] = w2.to_json();
    double amax = 0.0;
    for (double v : pp) amax = std::max(amax, v);
    regions["phiphi_max_modulus"] = amax;
    ratio = witness_ratio(rfloor, radius + 1.0);
  }
  nlohmann::json c = problem_json(d.cfg);
  c["mode"] = phaseless::to_string(d.mode);
  c["scatterer"] = d.scatterer.value("type", "") == "medium" ? nlohmann::json("medium") : d.scatterer;
  c["min_disc_radius"] = spec.min_disc_radius;
  return make_report("nonvanishing", c, ratio, 1.0, count, {{"regions", regions}, {"tol_amp", tol}});
}

// ---------------------------------------------------------------------------------------------
// uniqueness-premise witness

// harness constant; no quantitative stability statement backs it
inline constexpr double distinctness_floor = 1e-4;

inline double dataset_difference(const phaseless::PhaselessDataset &a, const phaseless::PhaselessDataset &b) {
  if (a.samples.size() != b.samples.size()) throw DomainError("dataset_difference: sample layouts differ");
  double m = 0.0;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    const auto &s = a.samples[i], &t = b.samples[i];
    if (s.set != t.set || s.x_sphere != t.x_sphere || s.x_index != t.x_index || s.sources != t.sources || s.m != t.m)
      throw DomainError("dataset_difference: sample layouts differ");
    m = std::max(m, std::abs(s.modulus - t.modulus));
  }
  return m;
}

// Distinct scatterers must give datasets differing by at least the floor; with expect_distinct = false
// (A = B) the difference must stay below 1e-12.
inline CheckReport uniqueness_premise_witness(const acoustic::AcousticConfig &cfg, const acoustic::Scatterer &A,
                                              const acoustic::Scatterer &B, const geometry::SphereGrid &g1,
                                              const geometry::SphereGrid &g2, int y0_index = 0,
                                              bool expect_distinct = true, double floor = distinctness_floor,
                                              int jobs = 1) {
  const auto da = phaseless::synthesize_acoustic(cfg, A, g1, g2, y0_index, jobs);
  const auto db = phaseless::synthesize_acoustic(cfg, B, g1, g2, y0_index, jobs);
  const double diff = dataset_difference(da, db);
  nlohmann::json c = problem_json(cfg);
  c["scatterer_A"] = scatterer_json(A);
  c["scatterer_B"] = scatterer_json(B);
  c["expect_distinct"] = expect_distinct;
  nlohmann::json det = {{"max_modulus_difference", diff}};
  if (!expect_distinct) return make_report("uniqueness_premise_identical", c, diff, 1e-12, da.samples.size(), det);
  det["distinctness_floor"] = floor;
  return make_report("uniqueness_premise_witness", c, witness_ratio(floor, diff), 1.0, da.samples.size(), det);
}

// ---------------------------------------------------------------------------------------------
// conjugate-branch elimination

// True pair accepted, artificially conjugated pair rejected with margin above min_margin.
inline CheckReport check_conjugate_elimination(const acoustic::PointSourceFactory &factory, const Vec3 &y0,
                                               double min_margin = 10.0, int n_theta = 24, int n_phi = 48) {
  const auto &cfg = factory.config();
  const auto f = factory(y0);
  auto in = phaseless::discriminator_input(f, f, cfg, y0, n_theta, n_phi);
  const auto truth = phaseless::conjugate_discriminator(in);
  for (auto *v : {&in.w2_R1, &in.w2_R2})
    for (auto &z : *v) z = std::conj(z);
  const auto conj = phaseless::conjugate_discriminator(in);
  const bool ok = truth.verdict == phaseless::Verdict::consistent_radiating &&
                  conj.verdict == phaseless::Verdict::conjugate_branch_rejected;
  nlohmann::json c = problem_json(cfg);
  c["scatterer"] = scatterer_json(factory.scatterer());
  c["y0"] = vec_json(y0);
  return make_report("conjugate_elimination", c, ok ? witness_ratio(min_margin, conj.margin) : HUGE_VAL, 1.0,
                     in.grid1.size() + in.grid2.size(), {{"truth", truth.to_json()}, {"conjugated", conj.to_json()}});
}

// ---------------------------------------------------------------------------------------------
// suite

struct Tolerances {
  double acoustic_reciprocity = 1e-10;
  double acoustic_reciprocity_ls = 1e-6;
  double mixed_reciprocity_acoustic = 1e-8;
  double em_reciprocity = 1e-8;
  double em_mixed_reciprocity = 1e-7;
  double plane_wave_order = 0.2;
  double real_cross = 1e-10;
  double cos_delta = 1e-9;
  double defined_fraction = 0.8;
  double modulus_floor = 1e-3;
  double distinctness_floor = verify::distinctness_floor;
  double conjugate_margin = 10.0;

  // key-value access for config files and overrides
  double &at(const std::string &key) {
    if (key == "acoustic_reciprocity") return acoustic_reciprocity;
    if (key == "acoustic_reciprocity_ls") return acoustic_reciprocity_ls;
    if (key == "mixed_reciprocity_acoustic") return mixed_reciprocity_acoustic;
    if (key == "em_reciprocity") return em_reciprocity;
    if (key == "em_mixed_reciprocity") return em_mixed_reciprocity;
    if (key == "plane_wave_order") return plane_wave_order;
    if (key == "real_cross") return real_cross;
    if (key == "cos_delta") return cos_delta;
    if (key == "defined_fraction") return defined_fraction;
    if (key == "modulus_floor") return modulus_floor;
    if (key == "distinctness_floor") return distinctness_floor;
    if (key == "conjugate_margin") return conjugate_margin;
    throw ConfigError("unknown tolerance key '" + key + "'");
  }

  nlohmann::json to_json() const {
    return {{"acoustic_reciprocity", acoustic_reciprocity},
            {"acoustic_reciprocity_ls", acoustic_reciprocity_ls},
            {"mixed_reciprocity_acoustic", mixed_reciprocity_acoustic},
            {"em_reciprocity", em_reciprocity},
            {"em_mixed_reciprocity", em_mixed_reciprocity},
            {"plane_wave_order", plane_wave_order},
            {"real_cross", real_cross},
            {"cos_delta", cos_delta},
            {"defined_fraction", defined_fraction},
            {"modulus_floor", modulus_floor},
            {"distinctness_floor", distinctness_floor},
            {"conjugate_margin", conjugate_margin}};
  }
};

struct SuiteOptions {
  phaseless::Mode mode = phaseless::Mode::acoustic;
  acoustic::AcousticConfig cfg;
  acoustic::Scatterer scatterer = acoustic::SphereScatterer::sound_soft(0.5);
  geometry::SphereGrid grid1, grid2;
  int y0_index = 0;
  Tolerances tol;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::size_t sphere_pairs = 50, medium_pairs = 10, em_pairs = 50;
  std::size_t mixed_directions = 8, mixed_points = 8;
};

// Scatterer used by the uniqueness witness: radius +10% (or -10% if that leaves B_R1), a bare medium for media.
inline acoustic::Scatterer perturbed_scatterer(const acoustic::AcousticConfig &cfg, const acoustic::Scatterer &sc) {
  if (const auto *s = std::get_if<acoustic::SphereScatterer>(&sc)) {
    auto t = *s;
    t.radius = s->radius * 1.1 < cfg.R1 ? s->radius * 1.1 : s->radius * 0.9;
    return t;
  }
  auto m = std::get<acoustic::MediumSample>(sc);
  for (auto &v : m.n_values) v = 1.0;
  return m;
}

inline std::vector<CheckReport> run_suite(const SuiteOptions &o) {
  using Task = std::function<std::vector<CheckReport>()>;
  std::vector<Task> tasks;
  const auto &cfg = o.cfg;
  const auto &tol = o.tol;
  const int inner = 1; // the suite parallelizes across checks
  const auto *sphere = std::get_if<acoustic::SphereScatterer>(&o.scatterer);
  const double pec_radius = sphere ? sphere->radius : acoustic::support_radius(o.scatterer);
  auto factory = std::make_shared<acoustic::PointSourceFactory>(cfg, o.scatterer);

  tasks.push_back([&, factory] {
    return std::vector{sphere ? check_acoustic_reciprocity(*factory, o.sphere_pairs, tol.acoustic_reciprocity, o.seed, inner)
                              : check_acoustic_reciprocity(*factory, o.medium_pairs, tol.acoustic_reciprocity_ls, o.seed,
                                                           inner)};
  });
  tasks.push_back([&, factory] {
    return std::vector{check_mixed_reciprocity_acoustic(*factory, o.mixed_directions, o.mixed_points,
                                                        sphere ? tol.mixed_reciprocity_acoustic
                                                               : tol.acoustic_reciprocity_ls,
                                                        o.seed, inner)};
  });
  tasks.push_back([&] {
    return std::vector{check_em_reciprocity(cfg, pec_radius, o.em_pairs, tol.em_reciprocity, o.seed, inner)};
  });
  tasks.push_back([&] {
    return std::vector{
        check_em_mixed_reciprocity(cfg, pec_radius, o.mixed_directions, o.mixed_points, tol.em_mixed_reciprocity, o.seed,
                                   inner)};
  });
  tasks.push_back([&] {
    auto parallel = check_plane_wave_identity(cfg.k, Vec3(1, 2, 2) / 3.0, Vec3(1, 2, 2), 8, 1e-2,
                                              tol.plane_wave_order, o.seed);
    parallel.check_name = "plane_wave_identity_parallel";
    return std::vector{check_plane_wave_identity(cfg.k, Vec3(1, 2, 2) / 3.0, Vec3(0, 1, -1), 8, 1e-2,
                                                 tol.plane_wave_order, o.seed),
                       parallel};
  });
  tasks.push_back([&] {
    std::vector<CheckReport> out;
    if (o.mode == phaseless::Mode::acoustic) {
      phaseless::check_grids(cfg, o.grid1, o.grid2);
      const auto W = phaseless::acoustic_field_table(*factory, o.grid1, o.grid2, inner);
      const auto d = phaseless::dataset_from_acoustic_table(cfg, std::visit([](const auto &s) { return s.to_json(); }, o.scatterer),
                                                            o.grid1, o.grid2, o.y0_index, W);
      out = check_phase_recovery(d, acoustic_components(W), tol.real_cross, tol.cos_delta, tol.defined_fraction);
      NonvanishingSpec ns;
      ns.modulus_floor = tol.modulus_floor;
      out.push_back(check_nonvanishing(d, ns));
    } else {
      phaseless::check_grids(cfg, o.grid1, o.grid2);
      const auto T = phaseless::em_field_table(cfg, pec_radius, o.grid1, o.grid2, inner);
      const auto d = phaseless::dataset_from_em_table(cfg, {{"type", "pec_sphere"}, {"radius", pec_radius}}, o.grid1,
                                                      o.grid2, T);
      out = check_phase_recovery(d, em_components(T), tol.real_cross, tol.cos_delta, tol.defined_fraction);
      NonvanishingSpec ns;
      ns.modulus_floor = tol.modulus_floor;
      out.push_back(check_nonvanishing(d, ns));
    }
    return out;
  });
  if (o.mode == phaseless::Mode::acoustic)
    tasks.push_back([&] {
      return std::vector{uniqueness_premise_witness(cfg, o.scatterer, perturbed_scatterer(cfg, o.scatterer), o.grid1,
                                                    o.grid2, o.y0_index, true, tol.distinctness_floor, inner)};
    });
  tasks.push_back([&, factory] {
    const Vec3 y0 = o.grid1.points.at(o.y0_index).cart;
    return std::vector{check_conjugate_elimination(*factory, y0, tol.conjugate_margin)};
  });

  std::vector<std::vector<CheckReport>> results(tasks.size());
  detail::parallel_for(tasks.size(), o.jobs, [&](std::size_t i) { results[i] = tasks[i](); });
  std::vector<CheckReport> out;
  for (auto &r : results)
    for (auto &c : r) out.push_back(std::move(c));
  return out;
}

inline nlohmann::json suite_json(const std::vector<CheckReport> &reports) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto &r : reports) a.push_back(r.to_json());
  return a;
}

inline bool all_pass(const std::vector<CheckReport> &reports) {
  return std::all_of(reports.begin(), reports.end(), [](const CheckReport &r) { return r.pass; });
}

inline void print_table(std::ostream &os, const std::vector<CheckReport> &reports) {
  std::size_t w = 10;
  for (const auto &r : reports) w = std::max(w, r.check_name.size());
  std::ostringstream s;
  s << std::left << std::setw(int(w)) << "check" << "  " << std::setw(6) << "result" << "  " << std::right
    << std::setw(12) << "error" << "  " << std::setw(12) << "tolerance" << "  " << std::setw(8) << "samples" << '\n';
  for (const auto &r : reports) {
    s << std::left << std::setw(int(w)) << r.check_name << "  " << std::setw(6) << (r.pass ? "PASS" : "FAIL") << "  "
      << std::right << std::scientific << std::setprecision(3) << std::setw(12) << r.max_abs_error << "  "
      << std::setw(12) << r.tolerance << "  " << std::setw(8) << r.sample_count << '\n';
  }
  os << s.str();
}

} // namespace twosphere::verify

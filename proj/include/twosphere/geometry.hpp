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
#include <string>
#include <vector>

#include "core.hpp"
#include "specfun.hpp"

namespace twosphere::geometry {

struct SpherePoint {
  double r = 0.0, theta = 0.0, phi = 0.0;
  Vec3 cart = Vec3::Zero();

  static SpherePoint spherical(double r, double theta, double phi) {
    if (!(r > 0.0)) throw DomainError("SpherePoint: radius must be positive");
    if (theta < 0.0 || theta > pi) throw DomainError("SpherePoint: theta outside [0, pi]");
    SpherePoint p;
    p.r = r;
    p.theta = theta;
    p.phi = std::fmod(phi, 2.0 * pi);
    if (p.phi < 0.0) p.phi += 2.0 * pi;
    const double s = std::sin(theta);
    p.cart = Vec3(r * s * std::cos(p.phi), r * s * std::sin(p.phi), r * std::cos(theta));
    return p;
  }

  static SpherePoint cartesian(const Vec3 &x) {
    SpherePoint p;
    p.r = x.norm();
    if (!(p.r > 0.0)) throw DomainError("SpherePoint: origin has no spherical chart");
    p.theta = std::atan2(std::hypot(x[0], x[1]), x[2]);
    p.phi = std::atan2(x[1], x[0]);
    if (p.phi < 0.0) p.phi += 2.0 * pi;
    if (p.phi >= 2.0 * pi) p.phi = 0.0;
    p.cart = x;
    return p;
  }

  Vec3 unit() const { return cart / r; }
  bool is_pole() const { return theta == 0.0 || theta == pi || std::hypot(cart[0], cart[1]) == 0.0; }
};

// Orthonormal tangential frame; (e_theta, e_phi, nu) is right-handed: e_phi x nu = e_theta.
struct TangentFrame {
  Vec3 e_phi, e_theta, nu;
};

// Frame vectors by formula, also at the poles (used internally where phi is a chart choice).
inline TangentFrame frame_unchecked(double theta, double phi) {
  const double st = std::sin(theta), ct = std::cos(theta), sp = std::sin(phi), cp = std::cos(phi);
  return {Vec3(-sp, cp, 0.0), Vec3(ct * cp, ct * sp, -st), Vec3(st * cp, st * sp, ct)};
}

inline TangentFrame tangent_frame(const SpherePoint &p) {
  if (p.is_pole()) throw PoleError("tangent_frame: frame undefined at the poles");
  return frame_unchecked(p.theta, p.phi);
}

enum class GridScheme { gauss_legendre, uniform_offset };

inline std::string to_string(GridScheme s) {
  return s == GridScheme::gauss_legendre ? "gauss_legendre" : "uniform_offset";
}

inline GridScheme grid_scheme_from_string(const std::string &s) {
  if (s == "gauss_legendre") return GridScheme::gauss_legendre;
  if (s == "uniform_offset") return GridScheme::uniform_offset;
  throw DomainError("unknown grid scheme '" + s + "'");
}

// Points ordered theta-major: index = i_theta * n_phi + i_phi.
struct SphereGrid {
  double radius = 0.0;
  int n_theta = 0, n_phi = 0;
  GridScheme scheme = GridScheme::gauss_legendre;
  std::vector<SpherePoint> points;
  std::vector<double> weights; // empty for uniform_offset

  std::size_t size() const { return points.size(); }
  int theta_index(std::size_t i) const { return int(i) / n_phi; }
  int phi_index(std::size_t i) const { return int(i) % n_phi; }
  std::size_t index(int it, int ip) const { return std::size_t(it) * n_phi + ip; }
};

inline SphereGrid sphere_grid(double radius, int n_theta, int n_phi, GridScheme scheme) {
  if (!(radius > 0.0)) throw DomainError("sphere_grid: radius must be positive");
  if (n_theta < 2 || n_phi < 4) throw DomainError("sphere_grid: need n_theta >= 2 and n_phi >= 4");
  SphereGrid g;
  g.radius = radius;
  g.n_theta = n_theta;
  g.n_phi = n_phi;
  g.scheme = scheme;
  g.points.reserve(std::size_t(n_theta) * n_phi);
  const double dphi = 2.0 * pi / n_phi;
  if (scheme == GridScheme::gauss_legendre) {
    auto gl = specfun::gauss_legendre(n_theta);
    for (int it = 0; it < n_theta; ++it) {
      const double theta = std::acos(gl.nodes[it]);
      for (int ip = 0; ip < n_phi; ++ip) {
        g.points.push_back(SpherePoint::spherical(radius, theta, ip * dphi));
        g.weights.push_back(gl.weights[it] * dphi * radius * radius);
      }
    }
  } else {
    const double dtheta = pi / n_theta;
    for (int it = 0; it < n_theta; ++it)
      for (int ip = 0; ip < n_phi; ++ip)
        g.points.push_back(SpherePoint::spherical(radius, (it + 0.5) * dtheta, ip * dphi));
  }
  return g;
}

// Point at arc angle s from center on the great circle {x : (x - center).normal = 0}.
// Direction of travel is u = normal x nu.
inline SpherePoint great_circle_point(const SpherePoint &center, const Vec3 &normal, double angle) {
  const Vec3 nu = center.unit();
  if (std::abs(normal.norm() - 1.0) > 1e-10) throw DomainError("great_circle: normal must be a unit vector");
  if (std::abs(normal.dot(nu)) > 1e-10) throw DomainError("great_circle: normal is not tangent at the center");
  const Vec3 u = normal.cross(nu).normalized();
  return SpherePoint::cartesian(center.r * (std::cos(angle) * nu + std::sin(angle) * u));
}

inline std::vector<SpherePoint> great_circle(const SpherePoint &center, const Vec3 &normal, int n_samples,
                                             double max_angle) {
  if (n_samples < 1) throw DomainError("great_circle: need at least one sample");
  std::vector<SpherePoint> out;
  out.reserve(n_samples);
  for (int i = 1; i <= n_samples; ++i) out.push_back(great_circle_point(center, normal, max_angle * i / n_samples));
  return out;
}

} // namespace twosphere::geometry

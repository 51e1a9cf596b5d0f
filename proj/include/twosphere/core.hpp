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

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace twosphere {

using cplx = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using CVec3 = Eigen::Vector3cd;
using CMat3 = Eigen::Matrix3cd;

inline constexpr double pi = std::numbers::pi;
inline constexpr cplx I{0.0, 1.0};

// Error taxonomy. The CLI maps these onto exit codes.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DomainError : Error {
  using Error::Error;
};
struct PoleError : DomainError {
  using DomainError::DomainError;
};
struct SingularityError : DomainError {
  using DomainError::DomainError;
};
struct SolverError : Error {
  using Error::Error;
};
struct InconsistentDataError : Error {
  using Error::Error;
};
struct InsufficientDataError : Error {
  using Error::Error;
};
struct IllPosedError : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};

// bilinear products, no conjugation (Eigen's dot conjugates its left operand)
inline cplx dot(const CVec3 &a, const Vec3 &b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline cplx dot(const Vec3 &a, const CVec3 &b) { return dot(b, a); }
inline cplx dot(const CVec3 &a, const CVec3 &b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
// Eigen's cross conjugates complex operands; this one does not.
inline CVec3 cross(const CVec3 &a, const CVec3 &b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

inline void require(bool cond, const std::string &msg) {
  if (!cond) throw DomainError(msg);
}

} // namespace twosphere

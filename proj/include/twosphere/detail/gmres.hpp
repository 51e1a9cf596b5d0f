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
#include <functional>
#include <vector>

#include "../core.hpp"

namespace twosphere::detail {

using CVector = Eigen::VectorXcd;

struct GmresResult {
  bool converged = false;
  int iterations = 0;
  double relative_residual = 0.0;
};

// Restarted GMRES with Givens rotations, zero initial guess unless x is pre-sized.
template <class MatVec>
GmresResult gmres(MatVec &&apply, const CVector &b, CVector &x, double rel_tol, int restart = 40,
                  int max_iter = 600) {
  GmresResult res;
  const double bnorm = b.norm();
  if (x.size() != b.size()) x = CVector::Zero(b.size());
  if (bnorm == 0.0) {
    x.setZero();
    res.converged = true;
    return res;
  }
  const Eigen::Index n = b.size();
  std::vector<CVector> V(restart + 1);
  Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(restart + 1, restart);
  std::vector<cplx> cs(restart), sn(restart);
  CVector g(restart + 1);

  while (res.iterations < max_iter) {
    CVector r = b - apply(x);
    double beta = r.norm();
    res.relative_residual = beta / bnorm;
    if (res.relative_residual < rel_tol) {
      res.converged = true;
      return res;
    }
    V[0] = r / beta;
    g.setZero();
    g[0] = beta;
    H.setZero();
    int j = 0;
    for (; j < restart && res.iterations < max_iter; ++j, ++res.iterations) {
      CVector w = apply(V[j]);
      for (int i = 0; i <= j; ++i) { // modified Gram-Schmidt
        H(i, j) = V[i].dot(w);
        w -= H(i, j) * V[i];
      }
      const double hn = w.norm();
      H(j + 1, j) = hn;
      if (hn > 0.0) V[j + 1] = w / hn;
      else V[j + 1] = CVector::Zero(n);
      for (int i = 0; i < j; ++i) {
        const cplx t = std::conj(cs[i]) * H(i, j) + std::conj(sn[i]) * H(i + 1, j);
        H(i + 1, j) = -sn[i] * H(i, j) + cs[i] * H(i + 1, j);
        H(i, j) = t;
      }
      const double den = std::hypot(std::abs(H(j, j)), std::abs(H(j + 1, j)));
      cs[j] = den > 0.0 ? H(j, j) / den : cplx(1.0);
      sn[j] = den > 0.0 ? H(j + 1, j) / den : cplx(0.0);
      H(j, j) = den;
      H(j + 1, j) = 0.0;
      g[j + 1] = -sn[j] * g[j];
      g[j] = std::conj(cs[j]) * g[j];
      res.relative_residual = std::abs(g[j + 1]) / bnorm;
      if (res.relative_residual < rel_tol || hn == 0.0) {
        ++j;
        ++res.iterations;
        break;
      }
    }
    // back substitution on the j x j triangle
    CVector yv(j);
    for (int i = j - 1; i >= 0; --i) {
      cplx s = g[i];
      for (int l = i + 1; l < j; ++l) s -= H(i, l) * yv[l];
      yv[i] = s / H(i, i);
    }
    for (int i = 0; i < j; ++i) x += yv[i] * V[i];
  }
  CVector r = b - apply(x);
  res.relative_residual = r.norm() / bnorm;
  res.converged = res.relative_residual < rel_tol;
  return res;
}

} // namespace twosphere::detail

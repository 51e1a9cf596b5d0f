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

#include <memory>
#include <mutex>
#include <vector>

#include <fftw3.h>

#include "../core.hpp"
#include "gmres.hpp"

namespace twosphere::detail {

// fftw planning is not thread-safe; execution on distinct arrays is.
inline std::mutex &fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwBuffer {
  explicit FftwBuffer(std::size_t n) : size(n), data(fftw_alloc_complex(n)) {
    if (!data) throw SolverError("fftw allocation failed");
  }
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer &) = delete;
  FftwBuffer &operator=(const FftwBuffer &) = delete;
  cplx *c() { return reinterpret_cast<cplx *>(data); }
  std::size_t size;
  fftw_complex *data;
};

// Convolution with a translation-invariant kernel on an N^3 grid, via zero padding to (2N)^3.
class ToeplitzConvolution {
public:
  // kernel(di, dj, dl) for offsets in [-(N-1), N-1]
  template <class Kernel>
  ToeplitzConvolution(int n, Kernel &&kernel) : n_(n), m_(2 * n) {
    const std::size_t total = std::size_t(m_) * m_ * m_;
    FftwBuffer buf(total);
    {
      std::lock_guard<std::mutex> lock(fftw_planner_mutex());
      forward_ = fftw_plan_dft_3d(m_, m_, m_, buf.data, buf.data, FFTW_FORWARD, FFTW_ESTIMATE);
      backward_ = fftw_plan_dft_3d(m_, m_, m_, buf.data, buf.data, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    cplx *k = buf.c();
    for (int i = 0; i < m_; ++i)
      for (int j = 0; j < m_; ++j)
        for (int l = 0; l < m_; ++l) {
          const int di = wrap(i), dj = wrap(j), dl = wrap(l);
          k[lin(i, j, l)] = (di == n_ || dj == n_ || dl == n_) ? cplx(0.0) : kernel(di, dj, dl);
        }
    fftw_execute_dft(forward_, buf.data, buf.data);
    kernel_hat_.assign(k, k + total);
  }

  ~ToeplitzConvolution() {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }
  ToeplitzConvolution(const ToeplitzConvolution &) = delete;
  ToeplitzConvolution &operator=(const ToeplitzConvolution &) = delete;

  int n() const { return n_; }

  // out_i = sum_j K(i - j) v_j, with v and out indexed (i*N + j)*N + l
  CVector apply(const CVector &v) const {
    const std::size_t total = std::size_t(m_) * m_ * m_;
    FftwBuffer buf(total);
    cplx *b = buf.c();
    std::fill(b, b + total, cplx(0.0));
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        for (int l = 0; l < n_; ++l) b[lin(i, j, l)] = v[(std::size_t(i) * n_ + j) * n_ + l];
    fftw_execute_dft(forward_, buf.data, buf.data);
    for (std::size_t q = 0; q < total; ++q) b[q] *= kernel_hat_[q];
    fftw_execute_dft(backward_, buf.data, buf.data);
    CVector out(std::size_t(n_) * n_ * n_);
    const double scale = 1.0 / double(total);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        for (int l = 0; l < n_; ++l) out[(std::size_t(i) * n_ + j) * n_ + l] = b[lin(i, j, l)] * scale;
    return out;
  }

private:
  int wrap(int i) const { return i <= n_ ? i : i - m_; }
  std::size_t lin(int i, int j, int l) const { return (std::size_t(i) * m_ + j) * m_ + l; }

  int n_, m_;
  fftw_plan forward_ = nullptr, backward_ = nullptr;
  std::vector<cplx> kernel_hat_;
};

} // namespace twosphere::detail

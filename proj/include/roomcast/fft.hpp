/*
 * Copyright 2026 The roomcast Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "roomcast/common.hpp"

namespace roomcast::fft {

using Complex = std::complex<double>;

inline bool is_power_of_two(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

namespace detail {

/// exp(-2 pi i k / n) with the angle reduced exactly modulo n.
inline Complex twiddle(std::uint64_t k, std::uint64_t n) {
  const double angle = -2.0 * std::numbers::pi * static_cast<double>(k % n) / static_cast<double>(n);
  return {std::cos(angle), std::sin(angle)};
}

/// In-place iterative radix-2 transform; `inverse` flips the sign (no 1/n).
inline void radix2(std::vector<Complex>& a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    std::vector<Complex> w(half);
    for (std::size_t k = 0; k < half; ++k) {
      w[k] = twiddle(k, len);
      if (inverse) w[k] = std::conj(w[k]);
    }
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const Complex u = a[i + k];
        const Complex v = a[i + k + half] * w[k];
        a[i + k] = u + v;
        a[i + k + half] = u - v;
      }
    }
  }
}

/// Bluestein chirp-z: an arbitrary-length DFT as a power-of-two convolution.
inline std::vector<Complex> bluestein(std::span<const Complex> x) {
  const std::size_t n = x.size();
  std::size_t m = 1;
  while (m < 2 * n - 1) m <<= 1;
  // chirp[k] = exp(-i pi k^2 / n); k^2 is reduced modulo 2n first.
  std::vector<Complex> chirp(n);
  const std::uint64_t two_n = 2 * static_cast<std::uint64_t>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::uint64_t kk = (static_cast<std::uint64_t>(k) * k) % two_n;
    const double angle = -std::numbers::pi * static_cast<double>(kk) / static_cast<double>(n);
    chirp[k] = {std::cos(angle), std::sin(angle)};
  }
  std::vector<Complex> a(m), b(m);
  for (std::size_t k = 0; k < n; ++k) a[k] = x[k] * chirp[k];
  b[0] = std::conj(chirp[0]);
  for (std::size_t k = 1; k < n; ++k) b[k] = b[m - k] = std::conj(chirp[k]);
  radix2(a, false);
  radix2(b, false);
  for (std::size_t k = 0; k < m; ++k) a[k] *= b[k];
  radix2(a, true);
  std::vector<Complex> out(n);
  const double scale = 1.0 / static_cast<double>(m);
  for (std::size_t k = 0; k < n; ++k) out[k] = a[k] * scale * chirp[k];
  return out;
}

}  // namespace detail

/// Forward DFT F_k = sum_t x_t exp(-2 pi i k t / n). Radix-2 for powers of
/// two, Bluestein otherwise.
inline std::vector<Complex> dft(std::span<const double> series) {
  const std::size_t n = series.size();
  if (n == 0) return {};
  std::vector<Complex> x(series.begin(), series.end());
  if (is_power_of_two(n)) {
    detail::radix2(x, false);
    return x;
  }
  return detail::bluestein(x);
}

}  // namespace roomcast::fft

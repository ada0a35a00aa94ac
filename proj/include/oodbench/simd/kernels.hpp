// Copyright 2026 The oodbench Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef OODBENCH_SIMD_KERNELS_HPP_
#define OODBENCH_SIMD_KERNELS_HPP_

// Inner-loop kernels used by the detectors. Every kernel has a scalar
// reference implementation; wider variants are selected once at runtime and
// must agree with the reference to within a few ulps (see test_kernels.cpp).

#include <cstddef>
#include <string_view>

namespace oodbench::simd {

enum class Isa { kScalar, kAvx2 };

std::string_view to_string(Isa isa);

struct KernelTable {
  Isa isa;

  // max_k x[k]; n >= 1.
  double (*max)(const double* x, std::size_t n);

  // out[k] = exp((x[k] - shift) * scale); returns sum_k out[k].
  double (*exp_shifted)(const double* x, std::size_t n, double shift, double scale,
                        double* out);

  // sum_k a[k] * b[k]
  double (*dot)(const double* a, const double* b, std::size_t n);

  // sum_k (a[k] - b[k])^2
  double (*squared_distance)(const double* a, const double* b, std::size_t n);

  // y[k] += alpha * x[k]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);

  // x[k] *= alpha
  void (*scale)(double alpha, double* x, std::size_t n);

  // sum_k p[k] * ln p[k], with 0 ln 0 = 0. Inputs are probabilities (>= 0).
  double (*xlogx_sum)(const double* p, std::size_t n);
};

const KernelTable& scalar_kernels();

// nullptr when the variant was not compiled in or the CPU lacks the feature.
const KernelTable* avx2_kernels();

// The table the detectors use. Picked on first call: AVX2 when available,
// unless OODBENCH_SIMD=scalar is set in the environment.
const KernelTable& active_kernels();

// Swap the active table (tests and benchmarks). Returns the previous one.
const KernelTable& set_active_kernels(const KernelTable& table);

// RAII form of set_active_kernels.
class ScopedKernels {
 public:
  explicit ScopedKernels(const KernelTable& table) : previous_(&set_active_kernels(table)) {}
  ~ScopedKernels() { set_active_kernels(*previous_); }
  ScopedKernels(const ScopedKernels&) = delete;
  ScopedKernels& operator=(const ScopedKernels&) = delete;

 private:
  const KernelTable* previous_;
};

}  // namespace oodbench::simd

#endif  // OODBENCH_SIMD_KERNELS_HPP_

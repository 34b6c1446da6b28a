#pragma once

// Data-parallel inner loops. Every kernel has a serial reference
// implementation with identical results; tests compare the two and the
// bench target times them.

#include <cstddef>
#include <exception>
#include <limits>
#include <mutex>
#include <span>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace aesadv::kernels {

int max_threads();
void set_threads(int threads);  // <= 0 restores the runtime default

// Runs body(i) for i in [0, n). If several iterations throw, the exception
// from the lowest index is rethrown after the loop, matching serial_for.
template <typename Body>
void parallel_for(std::size_t n, Body&& body) {
  std::exception_ptr first;
  std::size_t first_index = std::numeric_limits<std::size_t>::max();
  std::mutex mu;
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (long long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard<std::mutex> lock(mu);
      if (static_cast<std::size_t>(i) < first_index) {
        first_index = static_cast<std::size_t>(i);
        first = std::current_exception();
      }
    }
  }
  if (first) std::rethrow_exception(first);
}

template <typename Body>
void serial_for(std::size_t n, Body&& body) {
  for (std::size_t i = 0; i < n; ++i) body(i);
}

template <typename Body>
void for_each_index(bool parallel, std::size_t n, Body&& body) {
  if (parallel) {
    parallel_for(n, std::forward<Body>(body));
  } else {
    serial_for(n, std::forward<Body>(body));
  }
}

// Points and centroids are row-major with `dim` columns. Writes the index of
// the nearest centroid (lowest index on ties) and the squared distance.
void assign_nearest_serial(std::span<const double> points, std::span<const double> centroids, std::size_t dim,
                           std::span<std::size_t> assignment, std::span<double> dist2);
void assign_nearest_parallel(std::span<const double> points, std::span<const double> centroids, std::size_t dim,
                             std::span<std::size_t> assignment, std::span<double> dist2);

// K x K joint histogram of (reference - offset, predicted - offset).
std::vector<std::size_t> confusion_serial(std::span<const int> reference, std::span<const int> predicted, int offset,
                                          std::size_t classes);
std::vector<std::size_t> confusion_parallel(std::span<const int> reference, std::span<const int> predicted, int offset,
                                            std::size_t classes);

// Dense layer y = tanh(W x + b) for a batch of rows.
void dense_tanh_serial(std::span<const double> inputs, std::size_t rows, std::size_t in, std::span<const double> weights,
                       std::span<const double> bias, std::span<double> out);
void dense_tanh_parallel(std::span<const double> inputs, std::size_t rows, std::size_t in,
                         std::span<const double> weights, std::span<const double> bias, std::span<double> out);

}  // namespace aesadv::kernels

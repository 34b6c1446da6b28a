#include "aesadv/kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace aesadv::kernels {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int threads) {
#ifdef _OPENMP
  static const int initial = omp_get_max_threads();
  omp_set_num_threads(threads > 0 ? threads : initial);
#else
  (void)threads;
#endif
}

namespace {

inline void assign_one(std::span<const double> points, std::span<const double> centroids, std::size_t dim,
                       std::size_t i, std::span<std::size_t> assignment, std::span<double> dist2) {
  const std::size_t k = centroids.size() / dim;
  const double* p = points.data() + i * dim;
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < k; ++c) {
    const double* q = centroids.data() + c * dim;
    double d = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      const double diff = p[j] - q[j];
      d += diff * diff;
    }
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  assignment[i] = best;
  dist2[i] = best_d;
}

void check_shapes(std::span<const double> points, std::span<const double> centroids, std::size_t dim,
                  std::span<std::size_t> assignment, std::span<double> dist2) {
  if (dim == 0 || points.size() % dim || centroids.size() % dim || centroids.empty() ||
      assignment.size() != points.size() / dim || dist2.size() != assignment.size()) {
    throw std::invalid_argument("assign_nearest: inconsistent shapes");
  }
}

}  // namespace

void assign_nearest_serial(std::span<const double> points, std::span<const double> centroids, std::size_t dim,
                           std::span<std::size_t> assignment, std::span<double> dist2) {
  check_shapes(points, centroids, dim, assignment, dist2);
  for (std::size_t i = 0; i < assignment.size(); ++i) assign_one(points, centroids, dim, i, assignment, dist2);
}

void assign_nearest_parallel(std::span<const double> points, std::span<const double> centroids, std::size_t dim,
                             std::span<std::size_t> assignment, std::span<double> dist2) {
  check_shapes(points, centroids, dim, assignment, dist2);
  const auto n = static_cast<long long>(assignment.size());
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < n; ++i) {
    assign_one(points, centroids, dim, static_cast<std::size_t>(i), assignment, dist2);
  }
}

std::vector<std::size_t> confusion_serial(std::span<const int> reference, std::span<const int> predicted, int offset,
                                          std::size_t classes) {
  if (reference.size() != predicted.size()) throw std::invalid_argument("confusion: length mismatch");
  std::vector<std::size_t> counts(classes * classes, 0);
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const auto r = static_cast<std::size_t>(reference[i] - offset);
    const auto p = static_cast<std::size_t>(predicted[i] - offset);
    if (r >= classes || p >= classes) throw std::out_of_range("confusion: score outside scale");
    ++counts[r * classes + p];
  }
  return counts;
}

std::vector<std::size_t> confusion_parallel(std::span<const int> reference, std::span<const int> predicted, int offset,
                                            std::size_t classes) {
  if (reference.size() != predicted.size()) throw std::invalid_argument("confusion: length mismatch");
  for (std::size_t i = 0; i < reference.size(); ++i) {
    if (static_cast<std::size_t>(reference[i] - offset) >= classes ||
        static_cast<std::size_t>(predicted[i] - offset) >= classes) {
      throw std::out_of_range("confusion: score outside scale");
    }
  }
  std::vector<std::size_t> counts(classes * classes, 0);
  const auto n = static_cast<long long>(reference.size());
#pragma omp parallel
  {
    std::vector<std::size_t> local(classes * classes, 0);
#pragma omp for schedule(static) nowait
    for (long long i = 0; i < n; ++i) {
      ++local[static_cast<std::size_t>(reference[i] - offset) * classes + static_cast<std::size_t>(predicted[i] - offset)];
    }
#pragma omp critical
    for (std::size_t c = 0; c < local.size(); ++c) counts[c] += local[c];
  }
  return counts;
}

namespace {

inline void dense_row(std::span<const double> inputs, std::size_t r, std::size_t in, std::span<const double> weights,
                      std::span<const double> bias, std::span<double> out) {
  const std::size_t h = bias.size();
  const double* x = inputs.data() + r * in;
  for (std::size_t j = 0; j < h; ++j) {
    const double* w = weights.data() + j * in;
    double z = bias[j];
    for (std::size_t k = 0; k < in; ++k) z += w[k] * x[k];
    out[r * h + j] = std::tanh(z);
  }
}

}  // namespace

void dense_tanh_serial(std::span<const double> inputs, std::size_t rows, std::size_t in,
                       std::span<const double> weights, std::span<const double> bias, std::span<double> out) {
  for (std::size_t r = 0; r < rows; ++r) dense_row(inputs, r, in, weights, bias, out);
}

void dense_tanh_parallel(std::span<const double> inputs, std::size_t rows, std::size_t in,
                         std::span<const double> weights, std::span<const double> bias, std::span<double> out) {
  const auto n = static_cast<long long>(rows);
#pragma omp parallel for schedule(static)
  for (long long r = 0; r < n; ++r) dense_row(inputs, static_cast<std::size_t>(r), in, weights, bias, out);
}

}  // namespace aesadv::kernels

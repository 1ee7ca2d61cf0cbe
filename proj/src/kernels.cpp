#include "patent/kernels.hpp"

#include <fmt/format.h>

#include "patent/error.hpp"

namespace patent::kernels {

namespace {

using index_t = long long;  // OpenMP loop counters

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

void check_affine(ConstMatrixView in, ConstMatrixView weights, std::size_t bias, MatrixView out) {
  if (in.cols != weights.rows || weights.cols != bias || out.rows != in.rows || out.cols != weights.cols) {
    fail(ErrorKind::shape, fmt::format("affine: in {}x{}, weights {}x{}, bias {}, out {}x{}", in.rows,
                                       in.cols, weights.rows, weights.cols, bias, out.rows, out.cols));
  }
}

}  // namespace

void affine_forward(ConstMatrixView in, ConstMatrixView weights, std::span<const double> bias,
                    MatrixView out) {
  check_affine(in, weights, bias.size(), out);
  const std::size_t n_in = in.cols;
  const std::size_t n_out = weights.cols;
#pragma omp parallel for schedule(static)
  for (index_t r = 0; r < static_cast<index_t>(in.rows); ++r) {
    double* z = out.row(static_cast<std::size_t>(r));
    const double* a = in.row(static_cast<std::size_t>(r));
    for (std::size_t o = 0; o < n_out; ++o) z[o] = bias[o];
    for (std::size_t k = 0; k < n_in; ++k) {
      const double ak = a[k];
      const double* w = weights.row(k);
      for (std::size_t o = 0; o < n_out; ++o) z[o] += ak * w[o];
    }
  }
}

void affine_weight_grad(ConstMatrixView in, ConstMatrixView grad_out, MatrixView grad_w,
                        std::span<double> grad_b) {
  if (in.rows != grad_out.rows || grad_w.rows != in.cols || grad_w.cols != grad_out.cols ||
      grad_b.size() != grad_out.cols) {
    fail(ErrorKind::shape, "affine_weight_grad: inconsistent shapes");
  }
  const std::size_t n_out = grad_out.cols;
  const std::size_t batch = in.rows;
#pragma omp parallel for schedule(static)
  for (index_t k = 0; k < static_cast<index_t>(in.cols); ++k) {
    double* gw = grad_w.row(static_cast<std::size_t>(k));
    for (std::size_t r = 0; r < batch; ++r) {
      const double a = in.row(r)[k];
      const double* g = grad_out.row(r);
      for (std::size_t o = 0; o < n_out; ++o) gw[o] += a * g[o];
    }
  }
  for (std::size_t r = 0; r < batch; ++r) {
    const double* g = grad_out.row(r);
    for (std::size_t o = 0; o < n_out; ++o) grad_b[o] += g[o];
  }
}

void affine_input_grad(ConstMatrixView grad_out, ConstMatrixView weights, MatrixView grad_in) {
  if (grad_out.cols != weights.cols || grad_in.rows != grad_out.rows || grad_in.cols != weights.rows) {
    fail(ErrorKind::shape, "affine_input_grad: inconsistent shapes");
  }
  const std::size_t n_in = weights.rows;
  const std::size_t n_out = weights.cols;
#pragma omp parallel for schedule(static)
  for (index_t r = 0; r < static_cast<index_t>(grad_out.rows); ++r) {
    const double* g = grad_out.row(static_cast<std::size_t>(r));
    double* gi = grad_in.row(static_cast<std::size_t>(r));
    for (std::size_t k = 0; k < n_in; ++k) {
      const double* w = weights.row(k);
      double s = 0.0;
      for (std::size_t o = 0; o < n_out; ++o) s += g[o] * w[o];
      gi[k] = s;
    }
  }
}

double projection_entry(std::uint64_t seed, std::uint64_t bucket, std::size_t dim) {
  std::uint64_t key = splitmix64(seed ^ splitmix64(bucket)) + static_cast<std::uint64_t>(dim);
  std::uint64_t bits = splitmix64(key) >> 11;  // 53 random bits
  return static_cast<double>(bits) * 0x1.0p-52 - 1.0;
}

void project_buckets(std::span<const std::uint64_t> buckets, std::span<const double> counts,
                     std::uint64_t seed, std::span<double> out) {
  if (buckets.size() != counts.size()) fail(ErrorKind::shape, "project_buckets: size mismatch");
#pragma omp parallel for schedule(static)
  for (index_t d = 0; d < static_cast<index_t>(out.size()); ++d) {
    double s = 0.0;
    for (std::size_t j = 0; j < buckets.size(); ++j) {
      s += counts[j] * projection_entry(seed, buckets[j], static_cast<std::size_t>(d));
    }
    out[static_cast<std::size_t>(d)] = s;
  }
}

void axpy(double alpha, std::span<const double> b, std::span<double> a) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += alpha * b[i];
}

namespace reference {

void affine_forward(ConstMatrixView in, ConstMatrixView weights, std::span<const double> bias,
                    MatrixView out) {
  for (std::size_t r = 0; r < in.rows; ++r) {
    for (std::size_t o = 0; o < weights.cols; ++o) {
      double s = bias[o];
      for (std::size_t k = 0; k < in.cols; ++k) s += in.row(r)[k] * weights.row(k)[o];
      out.row(r)[o] = s;
    }
  }
}

void affine_weight_grad(ConstMatrixView in, ConstMatrixView grad_out, MatrixView grad_w,
                        std::span<double> grad_b) {
  for (std::size_t k = 0; k < in.cols; ++k) {
    for (std::size_t o = 0; o < grad_out.cols; ++o) {
      double s = grad_w.row(k)[o];
      for (std::size_t r = 0; r < in.rows; ++r) s += in.row(r)[k] * grad_out.row(r)[o];
      grad_w.row(k)[o] = s;
    }
  }
  for (std::size_t o = 0; o < grad_out.cols; ++o) {
    double s = grad_b[o];
    for (std::size_t r = 0; r < grad_out.rows; ++r) s += grad_out.row(r)[o];
    grad_b[o] = s;
  }
}

void affine_input_grad(ConstMatrixView grad_out, ConstMatrixView weights, MatrixView grad_in) {
  for (std::size_t r = 0; r < grad_out.rows; ++r) {
    for (std::size_t k = 0; k < weights.rows; ++k) {
      double s = 0.0;
      for (std::size_t o = 0; o < weights.cols; ++o) s += grad_out.row(r)[o] * weights.row(k)[o];
      grad_in.row(r)[k] = s;
    }
  }
}

void project_buckets(std::span<const std::uint64_t> buckets, std::span<const double> counts,
                     std::uint64_t seed, std::span<double> out) {
  for (std::size_t d = 0; d < out.size(); ++d) {
    double s = 0.0;
    for (std::size_t j = 0; j < buckets.size(); ++j) s += counts[j] * projection_entry(seed, buckets[j], d);
    out[d] = s;
  }
}

}  // namespace reference

}  // namespace patent::kernels

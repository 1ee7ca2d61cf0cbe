#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "patent/matrix.hpp"

// Data-parallel inner loops. Each function in `kernels` is OpenMP-parallel
// over independent output elements, and every output element is accumulated in
// the same order as the serial version in `kernels::reference`, so both produce
// identical bits for any thread count.
namespace patent::kernels {

// out[r][o] = bias[o] + sum_k in[r][k] * weights[k][o]   (weights: in x out)
void affine_forward(ConstMatrixView in, ConstMatrixView weights, std::span<const double> bias,
                    MatrixView out);

// grad_w[k][o] += sum_r in[r][k] * grad_out[r][o];  grad_b[o] += sum_r grad_out[r][o]
void affine_weight_grad(ConstMatrixView in, ConstMatrixView grad_out, MatrixView grad_w,
                        std::span<double> grad_b);

// grad_in[r][k] = sum_o grad_out[r][o] * weights[k][o]
void affine_input_grad(ConstMatrixView grad_out, ConstMatrixView weights, MatrixView grad_in);

// Entry (dim, bucket) of the fixed pseudo-random projection, uniform in [-1, 1).
double projection_entry(std::uint64_t seed, std::uint64_t bucket, std::size_t dim);

// out[d] = sum_j counts[j] * projection_entry(seed, buckets[j], d)
void project_buckets(std::span<const std::uint64_t> buckets, std::span<const double> counts,
                     std::uint64_t seed, std::span<double> out);

// a[i] += alpha * b[i]
void axpy(double alpha, std::span<const double> b, std::span<double> a);

namespace reference {

void affine_forward(ConstMatrixView in, ConstMatrixView weights, std::span<const double> bias,
                    MatrixView out);
void affine_weight_grad(ConstMatrixView in, ConstMatrixView grad_out, MatrixView grad_w,
                        std::span<double> grad_b);
void affine_input_grad(ConstMatrixView grad_out, ConstMatrixView weights, MatrixView grad_in);
void project_buckets(std::span<const std::uint64_t> buckets, std::span<const double> counts,
                     std::uint64_t seed, std::span<double> out);

}  // namespace reference

}  // namespace patent::kernels

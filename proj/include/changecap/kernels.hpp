#pragma once

#include <cstdint>

// Dense numeric kernels behind the tensor engine.
//
// Every kernel exists twice: the serial reference under kern::serial and an
// OpenMP version in kern:: that parallelizes over independent output
// elements. Each output element is produced by exactly one thread with the
// same inner reduction order as the reference, so the two variants are
// bit-identical for any thread count. Small problems are routed to the
// serial path to avoid fork overhead; bench/kernel_bench compares the two.
namespace ccap::kern {

namespace serial {

// c(m,n) = a(m,k) * b(k,n)
void matmul(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n);
// c(m,n) = a(k,m)^T * b(k,n)
void matmul_at(const double* a, const double* b, double* c, int64_t k, int64_t m, int64_t n);
// c(m,n) = a(m,k) * b(n,k)^T
void matmul_bt(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n);

void add(const double* a, const double* b, double* y, int64_t n);
void sub(const double* a, const double* b, double* y, int64_t n);
void mul(const double* a, const double* b, double* y, int64_t n);
void scale(const double* x, double* y, double s, int64_t n);
void axpy(double alpha, const double* x, double* y, int64_t n);  // y += alpha*x
void madd(const double* a, const double* b, double* y, int64_t n);  // y += a*b

void relu(const double* x, double* y, int64_t n);
void exp(const double* x, double* y, int64_t n);
void log(const double* x, double* y, int64_t n);
void square(const double* x, double* y, int64_t n);
void sqrt(const double* x, double* y, int64_t n);

// softmax along contiguous rows, with per-row max subtraction
void softmax_rows(const double* x, double* y, int64_t rows, int64_t cols);
// gx += J_softmax^T g, given the forward output y
void softmax_rows_backward(const double* y, const double* g, double* gx, int64_t rows, int64_t cols);

// per-row normalization to zero mean, unit variance (no affine terms)
void layer_norm_rows(const double* x, double* y, int64_t rows, int64_t cols, double eps);
void layer_norm_rows_backward(const double* x, const double* g, double* gx, int64_t rows, int64_t cols, double eps);

void col_sum(const double* x, double* y, int64_t rows, int64_t cols);  // y(cols)
void row_sum(const double* x, double* y, int64_t rows, int64_t cols);  // y(rows)

}  // namespace serial

// Work threshold below which the parallel entry points run the serial path.
int64_t parallel_cutoff();

void matmul(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n);
void matmul_at(const double* a, const double* b, double* c, int64_t k, int64_t m, int64_t n);
void matmul_bt(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n);

void add(const double* a, const double* b, double* y, int64_t n);
void sub(const double* a, const double* b, double* y, int64_t n);
void mul(const double* a, const double* b, double* y, int64_t n);
void scale(const double* x, double* y, double s, int64_t n);
void axpy(double alpha, const double* x, double* y, int64_t n);
void madd(const double* a, const double* b, double* y, int64_t n);

void relu(const double* x, double* y, int64_t n);
void exp(const double* x, double* y, int64_t n);
void log(const double* x, double* y, int64_t n);
void square(const double* x, double* y, int64_t n);
void sqrt(const double* x, double* y, int64_t n);

void softmax_rows(const double* x, double* y, int64_t rows, int64_t cols);
void softmax_rows_backward(const double* y, const double* g, double* gx, int64_t rows, int64_t cols);

void layer_norm_rows(const double* x, double* y, int64_t rows, int64_t cols, double eps);
void layer_norm_rows_backward(const double* x, const double* g, double* gx, int64_t rows, int64_t cols, double eps);

void col_sum(const double* x, double* y, int64_t rows, int64_t cols);
void row_sum(const double* x, double* y, int64_t rows, int64_t cols);

}  // namespace ccap::kern

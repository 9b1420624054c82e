#include "changecap/kernels.hpp"

#include <cmath>
#include <cstring>

namespace ccap::kern {

namespace serial {

void matmul(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n) {
  std::memset(c, 0, sizeof(double) * static_cast<size_t>(m * n));
  for (int64_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    const double* ai = a + i * k;
    for (int64_t p = 0; p < k; ++p) {
      const double av = ai[p];
      const double* bp = b + p * n;
      for (int64_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

void matmul_at(const double* a, const double* b, double* c, int64_t k, int64_t m, int64_t n) {
  std::memset(c, 0, sizeof(double) * static_cast<size_t>(m * n));
  for (int64_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    for (int64_t p = 0; p < k; ++p) {
      const double av = a[p * m + i];
      const double* bp = b + p * n;
      for (int64_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

void matmul_bt(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n) {
  for (int64_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (int64_t j = 0; j < n; ++j) {
      const double* bj = b + j * k;
      double acc = 0.0;
      for (int64_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
      ci[j] = acc;
    }
  }
}

void add(const double* a, const double* b, double* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] = a[i] + b[i];
}
void sub(const double* a, const double* b, double* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] = a[i] - b[i];
}
void mul(const double* a, const double* b, double* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] = a[i] * b[i];
}
void scale(const double* x, double* y, double s, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] = s * x[i];
}
void axpy(double alpha, const double* x, double* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}
void madd(const double* a, const double* b, double* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] += a[i] * b[i];
}

void relu(const double* x, double* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}
void exp(const double* x, double* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] = std::exp(x[i]);
}
void log(const double* x, double* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] = std::log(x[i]);
}
void square(const double* x, double* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] = x[i] * x[i];
}
void sqrt(const double* x, double* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] = std::sqrt(x[i]);
}

static inline void softmax_one_row(const double* x, double* y, int64_t cols) {
  double mx = x[0];
  for (int64_t j = 1; j < cols; ++j) mx = x[j] > mx ? x[j] : mx;
  double denom = 0.0;
  for (int64_t j = 0; j < cols; ++j) {
    y[j] = std::exp(x[j] - mx);
    denom += y[j];
  }
  const double inv = 1.0 / denom;
  for (int64_t j = 0; j < cols; ++j) y[j] *= inv;
}

void softmax_rows(const double* x, double* y, int64_t rows, int64_t cols) {
  for (int64_t i = 0; i < rows; ++i) softmax_one_row(x + i * cols, y + i * cols, cols);
}

static inline void softmax_bwd_one_row(const double* y, const double* g, double* gx, int64_t cols) {
  double dot = 0.0;
  for (int64_t j = 0; j < cols; ++j) dot += g[j] * y[j];
  for (int64_t j = 0; j < cols; ++j) gx[j] += y[j] * (g[j] - dot);
}

void softmax_rows_backward(const double* y, const double* g, double* gx, int64_t rows, int64_t cols) {
  for (int64_t i = 0; i < rows; ++i)
    softmax_bwd_one_row(y + i * cols, g + i * cols, gx + i * cols, cols);
}

static inline void layer_norm_one_row(const double* x, double* y, int64_t cols, double eps) {
  double mean = 0.0;
  for (int64_t j = 0; j < cols; ++j) mean += x[j];
  mean /= static_cast<double>(cols);
  double var = 0.0;
  for (int64_t j = 0; j < cols; ++j) {
    const double d = x[j] - mean;
    var += d * d;
  }
  var /= static_cast<double>(cols);
  const double inv = 1.0 / std::sqrt(var + eps);
  for (int64_t j = 0; j < cols; ++j) y[j] = (x[j] - mean) * inv;
}

void layer_norm_rows(const double* x, double* y, int64_t rows, int64_t cols, double eps) {
  for (int64_t i = 0; i < rows; ++i) layer_norm_one_row(x + i * cols, y + i * cols, cols, eps);
}

static inline void layer_norm_bwd_one_row(const double* x, const double* g, double* gx,
                                          int64_t cols, double eps) {
  const double nc = static_cast<double>(cols);
  double mean = 0.0;
  for (int64_t j = 0; j < cols; ++j) mean += x[j];
  mean /= nc;
  double var = 0.0;
  for (int64_t j = 0; j < cols; ++j) {
    const double d = x[j] - mean;
    var += d * d;
  }
  var /= nc;
  const double inv = 1.0 / std::sqrt(var + eps);
  double gmean = 0.0, gdot = 0.0;
  for (int64_t j = 0; j < cols; ++j) {
    gmean += g[j];
    gdot += g[j] * (x[j] - mean);
  }
  gmean /= nc;
  gdot /= nc;
  const double inv3 = inv * inv * inv;
  for (int64_t j = 0; j < cols; ++j) {
    gx[j] += inv * (g[j] - gmean) - inv3 * (x[j] - mean) * gdot;
  }
}

void layer_norm_rows_backward(const double* x, const double* g, double* gx, int64_t rows,
                              int64_t cols, double eps) {
  for (int64_t i = 0; i < rows; ++i)
    layer_norm_bwd_one_row(x + i * cols, g + i * cols, gx + i * cols, cols, eps);
}

void col_sum(const double* x, double* y, int64_t rows, int64_t cols) {
  for (int64_t j = 0; j < cols; ++j) {
    double acc = 0.0;
    for (int64_t i = 0; i < rows; ++i) acc += x[i * cols + j];
    y[j] = acc;
  }
}

void row_sum(const double* x, double* y, int64_t rows, int64_t cols) {
  for (int64_t i = 0; i < rows; ++i) {
    const double* xi = x + i * cols;
    double acc = 0.0;
    for (int64_t j = 0; j < cols; ++j) acc += xi[j];
    y[i] = acc;
  }
}

}  // namespace serial

namespace {
constexpr int64_t kCutoff = 1 << 15;
}

int64_t parallel_cutoff() { return kCutoff; }

void matmul(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n) {
  if (m * k * n < kCutoff) {
    serial::matmul(a, b, c, m, k, n);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    const double* ai = a + i * k;
    for (int64_t j = 0; j < n; ++j) ci[j] = 0.0;
    for (int64_t p = 0; p < k; ++p) {
      const double av = ai[p];
      const double* bp = b + p * n;
      for (int64_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

void matmul_at(const double* a, const double* b, double* c, int64_t k, int64_t m, int64_t n) {
  if (m * k * n < kCutoff) {
    serial::matmul_at(a, b, c, k, m, n);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    for (int64_t j = 0; j < n; ++j) ci[j] = 0.0;
    for (int64_t p = 0; p < k; ++p) {
      const double av = a[p * m + i];
      const double* bp = b + p * n;
      for (int64_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

void matmul_bt(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n) {
  if (m * k * n < kCutoff) {
    serial::matmul_bt(a, b, c, m, k, n);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (int64_t j = 0; j < n; ++j) {
      const double* bj = b + j * k;
      double acc = 0.0;
      for (int64_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
      ci[j] = acc;
    }
  }
}

#define CCAP_ELEMENTWISE(expr)                    \
  if (n < kCutoff) {                              \
    for (int64_t i = 0; i < n; ++i) expr;         \
    return;                                       \
  }                                               \
  _Pragma("omp parallel for schedule(static)")    \
  for (int64_t i = 0; i < n; ++i) expr;

void add(const double* a, const double* b, double* y, int64_t n) {
  CCAP_ELEMENTWISE(y[i] = a[i] + b[i])
}
void sub(const double* a, const double* b, double* y, int64_t n) {
  CCAP_ELEMENTWISE(y[i] = a[i] - b[i])
}
void mul(const double* a, const double* b, double* y, int64_t n) {
  CCAP_ELEMENTWISE(y[i] = a[i] * b[i])
}
void scale(const double* x, double* y, double s, int64_t n) {
  CCAP_ELEMENTWISE(y[i] = s * x[i])
}
void axpy(double alpha, const double* x, double* y, int64_t n) {
  CCAP_ELEMENTWISE(y[i] += alpha * x[i])
}
void madd(const double* a, const double* b, double* y, int64_t n) {
  CCAP_ELEMENTWISE(y[i] += a[i] * b[i])
}
void relu(const double* x, double* y, int64_t n) {
  CCAP_ELEMENTWISE(y[i] = x[i] > 0.0 ? x[i] : 0.0)
}
void exp(const double* x, double* y, int64_t n) {
  CCAP_ELEMENTWISE(y[i] = std::exp(x[i]))
}
void log(const double* x, double* y, int64_t n) {
  CCAP_ELEMENTWISE(y[i] = std::log(x[i]))
}
void square(const double* x, double* y, int64_t n) {
  CCAP_ELEMENTWISE(y[i] = x[i] * x[i])
}
void sqrt(const double* x, double* y, int64_t n) {
  CCAP_ELEMENTWISE(y[i] = std::sqrt(x[i]))
}

#undef CCAP_ELEMENTWISE

void softmax_rows(const double* x, double* y, int64_t rows, int64_t cols) {
  if (rows * cols < kCutoff) {
    serial::softmax_rows(x, y, rows, cols);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < rows; ++i)
    serial::softmax_rows(x + i * cols, y + i * cols, 1, cols);
}

void softmax_rows_backward(const double* y, const double* g, double* gx, int64_t rows,
                           int64_t cols) {
  if (rows * cols < kCutoff) {
    serial::softmax_rows_backward(y, g, gx, rows, cols);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < rows; ++i)
    serial::softmax_rows_backward(y + i * cols, g + i * cols, gx + i * cols, 1, cols);
}

void layer_norm_rows(const double* x, double* y, int64_t rows, int64_t cols, double eps) {
  if (rows * cols < kCutoff) {
    serial::layer_norm_rows(x, y, rows, cols, eps);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < rows; ++i)
    serial::layer_norm_rows(x + i * cols, y + i * cols, 1, cols, eps);
}

void layer_norm_rows_backward(const double* x, const double* g, double* gx, int64_t rows,
                              int64_t cols, double eps) {
  if (rows * cols < kCutoff) {
    serial::layer_norm_rows_backward(x, g, gx, rows, cols, eps);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < rows; ++i)
    serial::layer_norm_rows_backward(x + i * cols, g + i * cols, gx + i * cols, 1, cols, eps);
}

void col_sum(const double* x, double* y, int64_t rows, int64_t cols) {
  if (rows * cols < kCutoff) {
    serial::col_sum(x, y, rows, cols);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int64_t j = 0; j < cols; ++j) {
    double acc = 0.0;
    for (int64_t i = 0; i < rows; ++i) acc += x[i * cols + j];
    y[j] = acc;
  }
}

void row_sum(const double* x, double* y, int64_t rows, int64_t cols) {
  if (rows * cols < kCutoff) {
    serial::row_sum(x, y, rows, cols);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < rows; ++i) {
    const double* xi = x + i * cols;
    double acc = 0.0;
    for (int64_t j = 0; j < cols; ++j) acc += xi[j];
    y[i] = acc;
  }
}

}  // namespace ccap::kern

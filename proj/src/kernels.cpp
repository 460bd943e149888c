#include "rolemask/kernels.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rolemask::kernels {

namespace {
int g_max_threads = 0;  // 0 = library default

// Below this element count the parallel variants are not worth the fork.
constexpr std::size_t kParallelThreshold = 4096;
}  // namespace

void set_max_threads(int n) {
  g_max_threads = n;
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#endif
}

int max_threads() {
#ifdef _OPENMP
  return g_max_threads > 0 ? g_max_threads : omp_get_max_threads();
#else
  return 1;
#endif
}

bool use_parallel(std::size_t work) {
#ifdef _OPENMP
  return max_threads() > 1 && work >= kParallelThreshold;
#else
  (void)work;
  return false;
#endif
}

void matvec_serial(std::span<const double> w, std::size_t rows, std::size_t cols,
                   std::span<const double> x, std::span<const double> b,
                   std::span<double> y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* wr = w.data() + r * cols;
    double acc = b.empty() ? 0.0 : b[r];
    for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * x[c];
    y[r] = acc;
  }
}

void matvec_omp(std::span<const double> w, std::size_t rows, std::size_t cols,
                std::span<const double> x, std::span<const double> b,
                std::span<double> y) {
#pragma omp parallel for schedule(static)
  for (long r = 0; r < static_cast<long>(rows); ++r) {
    const double* wr = w.data() + static_cast<std::size_t>(r) * cols;
    double acc = b.empty() ? 0.0 : b[r];
    for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * x[c];
    y[r] = acc;
  }
}

void matvec(std::span<const double> w, std::size_t rows, std::size_t cols,
            std::span<const double> x, std::span<const double> b,
            std::span<double> y) {
  if (use_parallel(rows * cols))
    matvec_omp(w, rows, cols, x, b, y);
  else
    matvec_serial(w, rows, cols, x, b, y);
}

void matvec_t_acc_serial(std::span<const double> w, std::size_t rows,
                         std::size_t cols, std::span<const double> dy,
                         std::span<double> dx) {
  for (std::size_t c = 0; c < cols; ++c) {
    double acc = dx[c];
    for (std::size_t r = 0; r < rows; ++r) acc += w[r * cols + c] * dy[r];
    dx[c] = acc;
  }
}

void matvec_t_acc_omp(std::span<const double> w, std::size_t rows,
                      std::size_t cols, std::span<const double> dy,
                      std::span<double> dx) {
#pragma omp parallel for schedule(static)
  for (long c = 0; c < static_cast<long>(cols); ++c) {
    double acc = dx[c];
    for (std::size_t r = 0; r < rows; ++r)
      acc += w[r * cols + static_cast<std::size_t>(c)] * dy[r];
    dx[c] = acc;
  }
}

void matvec_t_acc(std::span<const double> w, std::size_t rows, std::size_t cols,
                  std::span<const double> dy, std::span<double> dx) {
  if (use_parallel(rows * cols))
    matvec_t_acc_omp(w, rows, cols, dy, dx);
  else
    matvec_t_acc_serial(w, rows, cols, dy, dx);
}

void outer_acc_serial(std::span<double> dw, std::span<const double> dy,
                      std::span<const double> x) {
  const std::size_t cols = x.size();
  for (std::size_t r = 0; r < dy.size(); ++r) {
    double* row = dw.data() + r * cols;
    const double g = dy[r];
    for (std::size_t c = 0; c < cols; ++c) row[c] += g * x[c];
  }
}

void outer_acc_omp(std::span<double> dw, std::span<const double> dy,
                   std::span<const double> x) {
  const std::size_t cols = x.size();
#pragma omp parallel for schedule(static)
  for (long r = 0; r < static_cast<long>(dy.size()); ++r) {
    double* row = dw.data() + static_cast<std::size_t>(r) * cols;
    const double g = dy[r];
    for (std::size_t c = 0; c < cols; ++c) row[c] += g * x[c];
  }
}

void outer_acc(std::span<double> dw, std::span<const double> dy,
               std::span<const double> x) {
  if (use_parallel(dy.size() * x.size()))
    outer_acc_omp(dw, dy, x);
  else
    outer_acc_serial(dw, dy, x);
}

void matmul_serial(std::span<const double> a, std::size_t m, std::size_t k,
                   std::span<const double> b, std::size_t n, std::span<double> c) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a.data() + i * k;
    double* ci = c.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t t = 0; t < k; ++t) acc += ai[t] * b[t * n + j];
      ci[j] = acc;
    }
  }
}

void matmul_omp(std::span<const double> a, std::size_t m, std::size_t k,
                std::span<const double> b, std::size_t n, std::span<double> c) {
#pragma omp parallel for collapse(2) schedule(static)
  for (long i = 0; i < static_cast<long>(m); ++i) {
    for (long j = 0; j < static_cast<long>(n); ++j) {
      const double* ai = a.data() + static_cast<std::size_t>(i) * k;
      double acc = 0.0;
      for (std::size_t t = 0; t < k; ++t)
        acc += ai[t] * b[t * n + static_cast<std::size_t>(j)];
      c[static_cast<std::size_t>(i) * n + static_cast<std::size_t>(j)] = acc;
    }
  }
}

void matmul(std::span<const double> a, std::size_t m, std::size_t k,
            std::span<const double> b, std::size_t n, std::span<double> c) {
  if (use_parallel(m * n * k))
    matmul_omp(a, m, k, b, n, c);
  else
    matmul_serial(a, m, k, b, n, c);
}

double softmax_inplace(std::span<double> z) {
  double mx = z[0];
  for (double v : z) mx = std::max(mx, v);
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : z) v /= sum;
  return std::log(sum) + mx;
}

namespace {
inline void adam_cell(double& p, double g, double& m, double& v, long t,
                      double lr, double beta1, double beta2, double eps) {
  m = beta1 * m + (1.0 - beta1) * g;
  v = beta2 * v + (1.0 - beta2) * g * g;
  const double mhat = m / (1.0 - std::pow(beta1, static_cast<double>(t)));
  const double vhat = v / (1.0 - std::pow(beta2, static_cast<double>(t)));
  p -= lr * mhat / (std::sqrt(vhat) + eps);
}
}  // namespace

void adam_step_serial(std::span<double> param, std::span<const double> grad,
                      AdamState& state, double lr, double beta1, double beta2,
                      double eps) {
  if (state.m.empty()) {
    state.m.assign(param.size(), 0.0);
    state.v.assign(param.size(), 0.0);
  }
  ++state.step;
  for (std::size_t i = 0; i < param.size(); ++i)
    adam_cell(param[i], grad[i], state.m[i], state.v[i], state.step, lr, beta1,
              beta2, eps);
}

void adam_step_omp(std::span<double> param, std::span<const double> grad,
                   AdamState& state, double lr, double beta1, double beta2,
                   double eps) {
  if (state.m.empty()) {
    state.m.assign(param.size(), 0.0);
    state.v.assign(param.size(), 0.0);
  }
  ++state.step;
#pragma omp parallel for schedule(static)
  for (long i = 0; i < static_cast<long>(param.size()); ++i)
    adam_cell(param[i], grad[i], state.m[i], state.v[i], state.step, lr, beta1,
              beta2, eps);
}

void adam_step(std::span<double> param, std::span<const double> grad,
               AdamState& state, double lr, double beta1, double beta2,
               double eps) {
  if (use_parallel(param.size()))
    adam_step_omp(param, grad, state, lr, beta1, beta2, eps);
  else
    adam_step_serial(param, grad, state, lr, beta1, beta2, eps);
}

}  // namespace rolemask::kernels

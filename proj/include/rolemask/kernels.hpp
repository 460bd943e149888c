#ifndef ROLEMASK_KERNELS_HPP
#define ROLEMASK_KERNELS_HPP

#include <cstddef>
#include <span>
#include <vector>

// Dense numeric kernels used by the classifier backends. Each kernel has a
// serial reference implementation and an OpenMP variant. Both compute every
// output element with the same fixed-order inner loop, so their results are
// bitwise identical and independent of the thread count; the tests hold the
// pair to exact equality. kernels::set_max_threads / use_parallel pick the
// variant at runtime.
namespace rolemask::kernels {

void set_max_threads(int n);
int max_threads();
bool use_parallel(std::size_t work);

// y = W x + b, W stored row-major (rows x cols), b optional (may be empty).
void matvec_serial(std::span<const double> w, std::size_t rows, std::size_t cols,
                   std::span<const double> x, std::span<const double> b,
                   std::span<double> y);
void matvec_omp(std::span<const double> w, std::size_t rows, std::size_t cols,
                std::span<const double> x, std::span<const double> b,
                std::span<double> y);
void matvec(std::span<const double> w, std::size_t rows, std::size_t cols,
            std::span<const double> x, std::span<const double> b,
            std::span<double> y);

// dx += W^T dy
void matvec_t_acc_serial(std::span<const double> w, std::size_t rows,
                         std::size_t cols, std::span<const double> dy,
                         std::span<double> dx);
void matvec_t_acc_omp(std::span<const double> w, std::size_t rows,
                      std::size_t cols, std::span<const double> dy,
                      std::span<double> dx);
void matvec_t_acc(std::span<const double> w, std::size_t rows, std::size_t cols,
                  std::span<const double> dy, std::span<double> dx);

// dW += dy x^T
void outer_acc_serial(std::span<double> dw, std::span<const double> dy,
                      std::span<const double> x);
void outer_acc_omp(std::span<double> dw, std::span<const double> dy,
                   std::span<const double> x);
void outer_acc(std::span<double> dw, std::span<const double> dy,
               std::span<const double> x);

// C = A B with A (m x k) and B (k x n), all row-major. Used by the batched
// linear backend; each C cell is a fixed-order dot product.
void matmul_serial(std::span<const double> a, std::size_t m, std::size_t k,
                   std::span<const double> b, std::size_t n, std::span<double> c);
void matmul_omp(std::span<const double> a, std::size_t m, std::size_t k,
                std::span<const double> b, std::size_t n, std::span<double> c);
void matmul(std::span<const double> a, std::size_t m, std::size_t k,
            std::span<const double> b, std::size_t n, std::span<double> c);

// In-place softmax over a row of logits; returns log(sum exp) for loss code.
double softmax_inplace(std::span<double> z);

// One Adam step over a parameter block; elementwise, hence order-free.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;
};
void adam_step_serial(std::span<double> param, std::span<const double> grad,
                      AdamState& state, double lr, double beta1, double beta2,
                      double eps);
void adam_step_omp(std::span<double> param, std::span<const double> grad,
                   AdamState& state, double lr, double beta1, double beta2,
                   double eps);
void adam_step(std::span<double> param, std::span<const double> grad,
               AdamState& state, double lr, double beta1, double beta2,
               double eps);

}  // namespace rolemask::kernels

#endif

// Times the serial reference kernels against their OpenMP variants and
// checks the pair agrees bitwise on the benchmark inputs.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <vector>

#include "rolemask/kernels.hpp"
#include "rolemask/rng.hpp"

using namespace rolemask;
using Clock = std::chrono::steady_clock;

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

template <typename F>
double time_ms(F&& fn, int reps) {
  fn();  // warm-up
  const auto start = Clock::now();
  for (int r = 0; r < reps; ++r) fn();
  const auto stop = Clock::now();
  return std::chrono::duration<double, std::milli>(stop - start).count() /
         reps;
}

void report(const char* name, double serial_ms, double omp_ms, bool equal) {
  std::printf("%-12s  serial %8.3f ms   omp %8.3f ms   speedup %5.2fx   %s\n",
              name, serial_ms, omp_ms, serial_ms / omp_ms,
              equal ? "bitwise-equal" : "MISMATCH");
}

}  // namespace

int main() {
  Rng rng(42);
  std::printf("threads: %d\n\n", kernels::max_threads());

  {
    const std::size_t rows = 2048, cols = 1024;
    const auto w = random_vec(rows * cols, rng);
    const auto x = random_vec(cols, rng);
    const auto b = random_vec(rows, rng);
    std::vector<double> y1(rows), y2(rows);
    const double serial_ms = time_ms(
        [&] { kernels::matvec_serial(w, rows, cols, x, b, y1); }, 50);
    const double omp_ms =
        time_ms([&] { kernels::matvec_omp(w, rows, cols, x, b, y2); }, 50);
    report("matvec", serial_ms, omp_ms,
           std::memcmp(y1.data(), y2.data(), rows * sizeof(double)) == 0);
  }
  {
    const std::size_t rows = 2048, cols = 1024;
    const auto w = random_vec(rows * cols, rng);
    const auto dy = random_vec(rows, rng);
    std::vector<double> dx1(cols, 0.0), dx2(cols, 0.0);
    const double serial_ms = time_ms(
        [&] { kernels::matvec_t_acc_serial(w, rows, cols, dy, dx1); }, 50);
    const double omp_ms = time_ms(
        [&] { kernels::matvec_t_acc_omp(w, rows, cols, dy, dx2); }, 50);
    report("matvec_t_acc", serial_ms, omp_ms,
           std::memcmp(dx1.data(), dx2.data(), cols * sizeof(double)) == 0);
  }
  {
    const std::size_t rows = 2048, cols = 1024;
    const auto dy = random_vec(rows, rng);
    const auto x = random_vec(cols, rng);
    std::vector<double> dw1(rows * cols, 0.0), dw2(rows * cols, 0.0);
    const double serial_ms =
        time_ms([&] { kernels::outer_acc_serial(dw1, dy, x); }, 20);
    const double omp_ms =
        time_ms([&] { kernels::outer_acc_omp(dw2, dy, x); }, 20);
    report("outer_acc", serial_ms, omp_ms,
           std::memcmp(dw1.data(), dw2.data(),
                       rows * cols * sizeof(double)) == 0);
  }
  {
    const std::size_t m = 256, k = 512, n = 128;
    const auto a = random_vec(m * k, rng);
    const auto b = random_vec(k * n, rng);
    std::vector<double> c1(m * n), c2(m * n);
    const double serial_ms =
        time_ms([&] { kernels::matmul_serial(a, m, k, b, n, c1); }, 10);
    const double omp_ms =
        time_ms([&] { kernels::matmul_omp(a, m, k, b, n, c2); }, 10);
    report("matmul", serial_ms, omp_ms,
           std::memcmp(c1.data(), c2.data(), m * n * sizeof(double)) == 0);
  }
  {
    const std::size_t n = 1 << 20;
    auto p1 = random_vec(n, rng);
    auto p2 = p1;
    const auto g = random_vec(n, rng);
    kernels::AdamState s1, s2;
    const double serial_ms = time_ms(
        [&] { kernels::adam_step_serial(p1, g, s1, 1e-3, 0.9, 0.999, 1e-8); },
        10);
    const double omp_ms = time_ms(
        [&] { kernels::adam_step_omp(p2, g, s2, 1e-3, 0.9, 0.999, 1e-8); },
        10);
    report("adam_step", serial_ms, omp_ms,
           s1.step == s2.step &&
               std::memcmp(p1.data(), p2.data(), n * sizeof(double)) == 0);
  }
  return 0;
}

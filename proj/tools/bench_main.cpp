// Benchmark comparing the OpenMP-parallel kernels against their serial
// reference implementations. Both variants must return identical results;
// this tool reports wall-clock times, the speedup, and that agreement, so a
// regression in either the parallel scan or the reference shows up here.

#include <chrono>
#include <cstdio>
#include <random>
#include <string>

#include "sfid/linalg.hpp"
#include "sfid/oracle.hpp"
#include "sfid/supports.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace sfid;

namespace {

using Clock = std::chrono::steady_clock;

template <typename F>
double best_of(int reps, F&& f) {
  double best = 1e300;
  for (int i = 0; i < reps; ++i) {
    const auto t0 = Clock::now();
    f();
    const double ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    if (ms < best) best = ms;
  }
  return best;
}

CMat gaussian_matrix(std::mt19937& rng, int rows, int cols) {
  std::normal_distribution<double> g(0.0, 1.0);
  CMat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = cx(g(rng), g(rng));
  return m;
}

void print_row(const std::string& kernel, const std::string& size, double serial_ms,
               double parallel_ms, bool agree) {
  std::printf("%-34s %-22s %10.2f %10.2f %8.2fx   %s\n", kernel.c_str(), size.c_str(), serial_ms,
              parallel_ms, serial_ms / parallel_ms, agree ? "yes" : "NO");
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("threads: %d (OpenMP)\n", omp_get_max_threads());
#else
  std::printf("threads: 1 (OpenMP disabled at build time)\n");
#endif
  std::printf("%-34s %-22s %10s %10s %9s   %s\n", "kernel", "workload", "serial", "parallel",
              "speedup", "agree");

  std::mt19937 rng(42);
  const Tolerance tol = Tolerance::floating(1e-10);

  // Kruskal rank: the subset scan is the hot loop; a full-rank matrix forces
  // every subset of every size up to the answer to be visited.
  for (const auto& [rows, cols] : {std::pair{10, 12}, std::pair{12, 14}}) {
    const CMat m = gaussian_matrix(rng, rows, cols);
    int serial_value = 0, parallel_value = 0;
    const double s_ms = best_of(3, [&] { serial_value = kruskal_rank_serial(m, tol); });
    const double p_ms = best_of(3, [&] { parallel_value = kruskal_rank(m, tol); });
    char size[64];
    std::snprintf(size, sizeof size, "%dx%d complex", rows, cols);
    print_row("kruskal_rank", size, s_ms, p_ms, serial_value == parallel_value);
  }

  // Randomized counterexample search: an identifiable instance exhausts every
  // trial, which is the worst case and gives both variants identical work.
  {
    const int trials = 400;
    CMat x(2, 2), y(2, 2);
    x << 1, 0, 0, 1;
    y << 2, 0, 0, 3;
    const PairFamily omega = PairFamily::product(SupportFamily::column_sparse(2, 2, 1),
                                                 SupportFamily::column_sparse(2, 2, 1));
    const FactorPair p{x, y};
    std::optional<FactorPair> serial_hit, parallel_hit;
    const double s_ms = best_of(3, [&] {
      serial_hit = randomized_counterexample_search_serial(p, omega, trials, 7, tol);
    });
    const double p_ms =
        best_of(3, [&] { parallel_hit = randomized_counterexample_search(p, omega, trials, 7, tol); });
    char size[64];
    std::snprintf(size, sizeof size, "2x2 r=2, %d trials", trials);
    print_row("randomized_counterexample_search", size, s_ms, p_ms,
              serial_hit.has_value() == parallel_hit.has_value());
  }

  // The same search on an instance with counterexamples: both variants must
  // find the one with the lowest trial index.
  {
    const int trials = 400;
    CMat x(2, 2), y(3, 2);
    x << 1, 1, 1, 1;  // collinear columns leave room for alternatives
    y << 1, 0, 1, 1, 0, 1;
    const PairFamily omega = PairFamily::product(SupportFamily::global_sparse(2, 2, 4),
                                                 SupportFamily::global_sparse(3, 2, 4));
    const FactorPair p{x, y};
    std::optional<FactorPair> serial_hit, parallel_hit;
    const double s_ms = best_of(3, [&] {
      serial_hit = randomized_counterexample_search_serial(p, omega, trials, 7, tol);
    });
    const double p_ms =
        best_of(3, [&] { parallel_hit = randomized_counterexample_search(p, omega, trials, 7, tol); });
    bool agree = serial_hit.has_value() == parallel_hit.has_value();
    if (agree && serial_hit)
      agree = (serial_hit->X - parallel_hit->X).norm() == 0.0 &&
              (serial_hit->Y - parallel_hit->Y).norm() == 0.0;
    char size[64];
    std::snprintf(size, sizeof size, "2x3 r=2, %d trials", trials);
    print_row("randomized_counterexample_search", size, s_ms, p_ms, agree);
  }

  return 0;
}

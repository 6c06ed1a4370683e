// Serial vs OpenMP Bellman application, plus end-to-end solver timings.
//   bench_kernels [states] [actions] [branching] [reps]

#include <chrono>
#include <cstdio>
#include <algorithm>
#include <cstdlib>
#include <omp.h>

#include "anderson_pi/operators.hpp"
#include "anderson_pi/solver.hpp"

using namespace anderson_pi;

namespace {

template <class F>
double best_seconds(int reps, F&& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t ns = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 2000;
  const std::size_t na = argc > 2 ? std::strtoul(argv[2], nullptr, 10) : 8;
  const std::size_t br = argc > 3 ? std::strtoul(argv[3], nullptr, 10) : 32;
  const int reps = argc > 4 ? std::atoi(argv[4]) : 10;

  const TabularMdp mdp = generate_random_mdp(1, ns, na, br, 1.0, 0.95);
  QTable q(ns, na);
  for (std::size_t i = 0; i < q.size(); ++i) q.flat()[i] = static_cast<double>(i % 17) * 0.1;

  std::printf("states=%zu actions=%zu branching=%zu threads=%d\n", ns, na, br, omp_get_max_threads());
  std::printf("%-10s %12s %12s %8s %s\n", "operator", "serial_ms", "openmp_ms", "speedup", "identical");
  for (OperatorSpec op : {OperatorSpec{OperatorKind::HardMax, 0.0},
                          OperatorSpec{OperatorKind::MellowMax, 5.0},
                          OperatorSpec{OperatorKind::BoltzmannSoftmax, 5.0}}) {
    QTable a, b;
    const double ts = best_seconds(reps, [&] { a = apply_bellman_serial(mdp, q, op); });
    const double tp = best_seconds(reps, [&] { b = apply_bellman(mdp, q, op); });
    std::printf("%-10s %12.3f %12.3f %8.2f %s\n", to_string(op.kind).c_str(), ts * 1e3, tp * 1e3,
                ts / tp, a == b ? "yes" : "NO");
  }

  const TabularMdp small = generate_random_mdp(2, 200, 4, 8, 1.0, 0.99);
  std::printf("\nsolver on 200x4, gamma=0.99, mellowmax omega=5, tol=1e-10\n");
  std::printf("%-14s %8s %10s\n", "scheme", "iters", "ms");
  for (auto [scheme, eta] : {std::pair{Scheme::VanillaVI, 0.0}, std::pair{Scheme::AndersonKKT, 0.0},
                             std::pair{Scheme::StableAA, 0.1}}) {
    SolverConfig c;
    c.scheme = scheme;
    c.depth = 5;
    c.eta = eta;
    c.op = {OperatorKind::MellowMax, 5.0};
    SolverTrace t;
    const double s = best_seconds(3, [&] { t = run(small, c); });
    std::printf("%-14s %8zu %10.2f\n", to_string(scheme).c_str(), t.iterations, s * 1e3);
  }
}

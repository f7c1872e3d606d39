// cdglab-bench: times the serial reference path against the worker-pool path
// for assembly and block matrix-vector products, and checks that both produce
// bitwise identical results.
//
// Usage: cdglab-bench [--p P] [--n N] [--scheme cdg|ldg|br2] [--threads T]
//                     [--reps R] [--quick]
#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"

#include "cdglab/assembly.hpp"
#include "cdglab/basis.hpp"
#include "cdglab/block_matrix.hpp"
#include "cdglab/manufactured.hpp"
#include "cdglab/mesh.hpp"
#include "cdglab/problem.hpp"

namespace {

using namespace cdglab;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Scheme parse_scheme(const std::string& name) {
  if (name == "ldg") return Scheme::LDG;
  if (name == "br2") return Scheme::BR2;
  return Scheme::CDG;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"serial vs worker-pool timing for assembly and mat-vec"};
  int p = 3, n = 32, threads = default_threads(), reps = 5;
  std::string scheme_str = "cdg";
  bool quick = false;
  app.add_option("--p", p, "polynomial degree")->capture_default_str();
  app.add_option("--n", n, "grid resolution")->capture_default_str();
  app.add_option("--scheme", scheme_str, "cdg, ldg, br2")
      ->capture_default_str();
  app.add_option("--threads", threads, "worker threads for the parallel run")
      ->capture_default_str();
  app.add_option("--reps", reps, "timed repetitions")->capture_default_str();
  app.add_flag("--quick", quick, "small self-check configuration");
  CLI11_PARSE(app, argc, argv);

  if (quick) {
    p = 2;
    n = 8;
    reps = 2;
  }
  if (threads < 1) threads = 1;

  const Mesh mesh = build_structured_mesh(n, false);
  const NodalBasis basis(p);
  const SwitchAssignment sw =
      assign_switches(mesh, SwitchStrategy::Consistent);
  ProblemSpec problem;
  problem.f = [](double x, double y) { return manufactured::eval_f(x, y); };
  problem.g_dirichlet = [](double x, double y) {
    return manufactured::eval_u(x, y);
  };
  SchemeConfig config;
  config.scheme = parse_scheme(scheme_str);
  config.c11_boundary = 1.0;

  std::printf("mesh n=%d (%d elements), p=%d (%d dofs/element), scheme=%s\n",
              n, mesh.num_elements(), p, basis.size(), scheme_str.c_str());
  std::printf("timing %d reps; parallel path uses %d thread(s)\n\n", reps,
              threads);

  // Assembly: serial reference vs worker pool.
  double serial_best = 1e300, parallel_best = 1e300;
  AssembledSystem serial_sys, parallel_sys;
  for (int r = 0; r < reps; ++r) {
    auto t0 = Clock::now();
    serial_sys = assemble(mesh, basis, sw, problem, config, /*threads=*/0);
    serial_best = std::min(serial_best, seconds_since(t0));

    t0 = Clock::now();
    parallel_sys = assemble(mesh, basis, sw, problem, config, threads);
    parallel_best = std::min(parallel_best, seconds_since(t0));
  }

  bool identical = serial_sys.b.size() == parallel_sys.b.size() &&
                   std::memcmp(serial_sys.b.data(), parallel_sys.b.data(),
                               sizeof(double) * serial_sys.b.size()) == 0;
  for (int e = 0; identical && e < serial_sys.A.num_blocks(); ++e) {
    if (std::memcmp(serial_sys.A.diag(e).data(), parallel_sys.A.diag(e).data(),
                    sizeof(double) * serial_sys.A.diag(e).size()) != 0) {
      identical = false;
      break;
    }
    const auto& lhs = serial_sys.A.row_blocks(e);
    const auto& rhs = parallel_sys.A.row_blocks(e);
    if (lhs.size() != rhs.size()) {
      identical = false;
      break;
    }
    for (std::size_t k = 0; k < lhs.size(); ++k) {
      if (lhs[k].first != rhs[k].first ||
          std::memcmp(lhs[k].second.data(), rhs[k].second.data(),
                      sizeof(double) * lhs[k].second.size()) != 0) {
        identical = false;
        break;
      }
    }
  }
  std::printf("assembly   serial %8.4f s   parallel %8.4f s   speedup %5.2fx   %s\n",
              serial_best, parallel_best, serial_best / parallel_best,
              identical ? "bitwise identical" : "MISMATCH");

  // Mat-vec: serial vs worker pool on the assembled operator.  The product
  // accumulates each row in a fixed order, so the thread count can only
  // change timing, never bits; the check below still asserts that.
  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(
      serial_sys.b.size(), -1.0, 1.0);
  Eigen::VectorXd y_serial, y_parallel;
  double mv_serial = 1e300, mv_parallel = 1e300;
  const int mv_reps = reps * 20;
  for (int r = 0; r < mv_reps; ++r) {
#ifdef _OPENMP
    omp_set_num_threads(1);
#endif
    auto t0 = Clock::now();
    y_serial = serial_sys.A.apply(x);
    mv_serial = std::min(mv_serial, seconds_since(t0));

#ifdef _OPENMP
    omp_set_num_threads(threads);
#endif
    t0 = Clock::now();
    y_parallel = serial_sys.A.apply(x);
    mv_parallel = std::min(mv_parallel, seconds_since(t0));
  }
#ifdef _OPENMP
  omp_set_num_threads(threads);
#endif
  const bool mv_identical =
      y_serial.size() == y_parallel.size() &&
      std::memcmp(y_serial.data(), y_parallel.data(),
                  sizeof(double) * y_serial.size()) == 0;
  std::printf("mat-vec    serial %8.4f s   parallel %8.4f s   speedup %5.2fx   %s\n",
              mv_serial, mv_parallel, mv_serial / mv_parallel,
              mv_identical ? "bitwise identical" : "MISMATCH");

  if (!identical || !mv_identical) {
    std::fprintf(stderr, "error: parallel path diverged from the reference\n");
    return 1;
  }
  return 0;
}

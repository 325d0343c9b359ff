// Serial vs OpenMP throughput for the row-parallel kernels.
//
//   plada_bench [rows] [classes]

#include <chrono>
#include <cstdio>
#include <cstdlib>

#include <omp.h>

#include "plada/labeling.hpp"
#include "plada/rng.hpp"
#include "plada/scoring.hpp"
#include "plada/simbench.hpp"

using namespace plada;

namespace {

double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

template <typename Fn>
double best_of(int reps, Fn&& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const double t0 = now_s();
    fn();
    best = std::min(best, now_s() - t0);
  }
  return best;
}

void report(const char* name, double serial_s, double parallel_s, double items) {
  std::printf("%-18s %10.1f M/s serial %10.1f M/s omp   speedup %.2fx\n", name,
              items / serial_s / 1e6, items / parallel_s / 1e6,
              serial_s / parallel_s);
}

}  // namespace

int main(int argc, char** argv) {
  std::size_t n = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 200000;
  std::size_t k = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 64;
  std::printf("rows=%zu classes=%zu threads=%d\n", n, k, omp_get_max_threads());

  Rng rng(7);
  std::vector<double> values(n * k);
  for (double& v : values) v = 4.0 * rng.normal();
  const LogitMatrix m(n, k, std::move(values));
  const double cells = static_cast<double>(n) * static_cast<double>(k);

  report("energy",
         best_of(3, [&] { scoring::energy(m, 1.0, Exec::Serial); }),
         best_of(3, [&] { scoring::energy(m, 1.0, Exec::Parallel); }), cells);
  report("entropy",
         best_of(3, [&] { scoring::entropy(m, 1.0, Exec::Serial); }),
         best_of(3, [&] { scoring::entropy(m, 1.0, Exec::Parallel); }), cells);
  report("hard_labels",
         best_of(3, [&] { labeling::hard_labels(m, Exec::Serial); }),
         best_of(3, [&] { labeling::hard_labels(m, Exec::Parallel); }), cells);
  report("softmax_rows",
         best_of(3, [&] { labeling::softmax_rows(m, 1.0, Exec::Serial); }),
         best_of(3, [&] { labeling::softmax_rows(m, 1.0, Exec::Parallel); }),
         cells);

  // Duplicate scan: two sets with planted overlaps.
  const std::size_t dn = 20000, dd = 32;
  Matrix a(dn, dd), b(dn, dd);
  for (std::size_t i = 0; i < dn * dd; ++i) {
    a.data[i] = rng.uniform();
    b.data[i] = rng.uniform();
  }
  for (std::size_t i = 0; i < dn; i += 100)
    std::copy(a.row(i).begin(), a.row(i).end(), b.row(i).begin());
  report("find_duplicates",
         best_of(3, [&] { simbench::find_duplicates(a, b, 1024, 1e-5, Exec::Serial); }),
         best_of(3, [&] { simbench::find_duplicates(a, b, 1024, 1e-5, Exec::Parallel); }),
         static_cast<double>(dn));
  return 0;
}

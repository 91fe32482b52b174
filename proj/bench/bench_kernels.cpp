#include <benchmark/benchmark.h>

#include "fluxcz/composite_system.hpp"
#include "fluxcz/reference_sets.hpp"

using namespace fluxcz;

namespace {

const CompositeModel& model() {
  static const CompositeModel m(reference_set_500mhz());
  return m;
}

Block random_block(int dim, int cols) {
  Block x = Block::Random(dim, cols);
  x.colwise().normalize();
  return x;
}

void BM_Apply(benchmark::State& state, bool parallel) {
  const CompositeModel& m = model();
  const TermWeights w = m.weights(0.35, 0.02);
  const Block x = random_block(m.dimension(), static_cast<int>(state.range(0)));
  Block y(x.rows(), x.cols());
  for (auto _ : state) {
    if (parallel)
      apply_parallel(m.parts(), w, 0.0, x, y);
    else
      apply_serial(m.parts(), w, 0.0, x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * m.parts().fixed.nnz() * x.cols());
}

void BM_Expv(benchmark::State& state, bool parallel) {
  const CompositeModel& m = model();
  const TermWeights w = m.weights(0.35, 0.02);
  const Block x0 = random_block(m.dimension(), static_cast<int>(state.range(0)));
  ExpvWorkspace ws;
  int matvecs = 0;
  for (auto _ : state) {
    Block x = x0;
    matvecs += expv(m.parts(), w, 0.0015, x, ws, parallel);
    benchmark::DoNotOptimize(x.data());
  }
  state.counters["matvecs/step"] =
      benchmark::Counter(matvecs, benchmark::Counter::kAvgIterations);
}

}  // namespace

BENCHMARK_CAPTURE(BM_Apply, serial, false)->Arg(1)->Arg(4)->Arg(16);
BENCHMARK_CAPTURE(BM_Apply, parallel, true)->Arg(1)->Arg(4)->Arg(16);
BENCHMARK_CAPTURE(BM_Expv, serial, false)->Arg(4)->Arg(16);
BENCHMARK_CAPTURE(BM_Expv, parallel, true)->Arg(4)->Arg(16);

BENCHMARK_MAIN();

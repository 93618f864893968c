#include <benchmark/benchmark.h>

#include "brushrecon/bench_report.hpp"
#include "brushrecon/paint.hpp"
#include "brushrecon/smudge.hpp"

namespace {

using namespace brushrecon;

PaintStroke bench_stroke(int size, double radius) {
  PaintStroke s;
  s.geometry = bench_geometry(size, radius, false);
  s.c_start = s.c_end = {0.2, 0.4, 0.8};
  s.alpha = 0.8;
  return s;
}

void BM_PaintSequential(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Canvas canvas = bench_canvas(BenchKind::kPaint, 1024);
  const PaintStroke stroke = bench_stroke(1024, 100.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(render_paint_sequential(stroke, canvas, {n, 1.0, 2.0}));
  }
}

void BM_PaintParallel(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Canvas canvas = bench_canvas(BenchKind::kPaint, 1024);
  const PaintStroke stroke = bench_stroke(1024, 100.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(render_paint_parallel(stroke, canvas, {n, 1.0, 2.0}));
  }
}

void BM_NearestStampReference(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Canvas canvas = bench_canvas(BenchKind::kPaint, 256);
  const auto stamps = indexed_stamps(sample_stamps(bench_stroke(256, 25.0), n));
  for (auto _ : state) {
    Canvas c = canvas;
    composite_nearest_stamp_reference(c, stamps, 0.8);
    benchmark::DoNotOptimize(c);
  }
}

void BM_NearestStamp(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Canvas canvas = bench_canvas(BenchKind::kPaint, 256);
  const auto stamps = indexed_stamps(sample_stamps(bench_stroke(256, 25.0), n));
  for (auto _ : state) {
    Canvas c = canvas;
    composite_nearest_stamp(c, stamps, 0.8);
    benchmark::DoNotOptimize(c);
  }
}

void BM_SmudgeReference(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Canvas canvas = bench_canvas(BenchKind::kSmudge, 256);
  const SmudgeStroke stroke{bench_geometry(256, 25.0, false)};
  SmudgeParams p;
  p.stamps = n;
  for (auto _ : state) benchmark::DoNotOptimize(smudge_reference(stroke, canvas, p));
}

void BM_SmudgeOneShot(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Canvas canvas = bench_canvas(BenchKind::kSmudge, 256);
  const SmudgeStroke stroke{bench_geometry(256, 25.0, false)};
  SmudgeParams p;
  p.stamps = n;
  for (auto _ : state) benchmark::DoNotOptimize(smudge_oneshot(stroke, canvas, p));
}

}  // namespace

BENCHMARK(BM_PaintSequential)->Arg(10)->Arg(20)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PaintParallel)->Arg(10)->Arg(20)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NearestStampReference)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NearestStamp)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SmudgeReference)->Arg(10)->Arg(20)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SmudgeOneShot)->Arg(10)->Arg(20)->Arg(100)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

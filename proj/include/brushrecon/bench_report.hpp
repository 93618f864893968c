#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "brushrecon/geometry.hpp"
#include "brushrecon/image.hpp"

namespace brushrecon {

enum class BenchKind { kPaint, kSmudge };

BenchKind parse_bench_kind(const std::string& s);
std::string to_string(BenchKind k);

struct BenchOptions {
  BenchKind kind = BenchKind::kPaint;
  int size = 1024;                     // square canvas side
  double radius = 100.0;
  std::vector<int> stamps{10, 20, 100};
  int repeats = 5;
  int warmup = 1;
  double alpha = 1.0;                  // paint only
  int patch_res = 64;                  // smudge only
  bool curved = false;                 // trajectory shape
  std::filesystem::path diff_dir;      // when set, writes difference images
};

struct BenchRow {
  int stamps = 0;
  double baseline_ms = 0.0;  // sequential (paint) or alternating reference (smudge)
  double baseline_sd = 0.0;
  double fast_ms = 0.0;      // parallel (paint) or one-shot (smudge)
  double fast_sd = 0.0;
  double speedup = 0.0;
  double l1 = 0.0;           // mean per-pixel L1 between the two outputs
};

struct BenchReport {
  BenchOptions options;
  std::vector<BenchRow> rows;
};

/// Deterministic inputs of a benchmark case.
Canvas bench_canvas(BenchKind kind, int size);
StrokeGeometry bench_geometry(int size, double radius, bool curved);

BenchReport run_bench(const BenchOptions& opt);

std::string format_bench(const BenchReport& r);

}  // namespace brushrecon

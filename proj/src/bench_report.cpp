#include "brushrecon/bench_report.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <sstream>

#include "brushrecon/paint.hpp"
#include "brushrecon/smudge.hpp"

namespace brushrecon {

BenchKind parse_bench_kind(const std::string& s) {
  if (s == "paint") return BenchKind::kPaint;
  if (s == "smudge") return BenchKind::kSmudge;
  throw Error("unknown bench kind '" + s + "' (expected paint|smudge)");
}

std::string to_string(BenchKind k) { return k == BenchKind::kPaint ? "paint" : "smudge"; }

Canvas bench_canvas(BenchKind kind, int size) {
  if (kind == BenchKind::kPaint) return Canvas(size, size, {1.0, 1.0, 1.0});
  // Smooth colour field with enough structure for smudging to move.
  Canvas c(size, size);
  const double k = 2.0 * 3.14159265358979 / size;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      c.set_pixel(x, y,
                  {0.5 + 0.4 * std::sin(3.0 * k * x), 0.5 + 0.4 * std::cos(2.0 * k * y),
                   0.5 + 0.4 * std::sin(k * (x + y))});
    }
  }
  return c;
}

StrokeGeometry bench_geometry(int size, double radius, bool curved) {
  const double s = size;
  const Vec2 a{0.2 * s, 0.5 * s}, b{0.8 * s, 0.5 * s};
  const Vec2 mid = curved ? Vec2{0.5 * s, 0.2 * s} : Vec2{0.5 * s, 0.5 * s};
  return {a, mid, b, radius, radius};
}

namespace {

struct Timing {
  double mean_ms = 0.0;
  double sd_ms = 0.0;
};

// `reset` runs before every call and is not timed.
Timing time_it(const std::function<void()>& reset, const std::function<void()>& fn, int repeats,
               int warmup) {
  for (int i = 0; i < warmup; ++i) {
    reset();
    fn();
  }
  std::vector<double> ms;
  for (int i = 0; i < repeats; ++i) {
    reset();
    const auto t0 = std::chrono::steady_clock::now();
    fn();  // every kernel returns only after its parallel region has joined
    const auto t1 = std::chrono::steady_clock::now();
    ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  Timing t;
  for (double v : ms) t.mean_ms += v;
  t.mean_ms /= static_cast<double>(ms.size());
  for (double v : ms) t.sd_ms += (v - t.mean_ms) * (v - t.mean_ms);
  t.sd_ms = ms.size() > 1 ? std::sqrt(t.sd_ms / static_cast<double>(ms.size() - 1)) : 0.0;
  return t;
}

Canvas difference_image(const Canvas& a, const Canvas& b) {
  Canvas d(a.width(), a.height());
  const auto x = a.data(), y = b.data();
  auto o = d.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = std::min(1.0, 10.0 * std::abs(x[i] - y[i]));
  return d;
}

}  // namespace

BenchReport run_bench(const BenchOptions& opt) {
  if (opt.size < 1) throw Error("bench: size must be >= 1");
  if (opt.repeats < 1) throw Error("bench: repeats must be >= 1");
  if (opt.stamps.empty()) throw Error("bench: no stamp counts given");
  for (int n : opt.stamps)
    if (n < 1) throw Error("bench: stamp counts must be >= 1");
  BenchReport report;
  report.options = opt;
  const Canvas canvas = bench_canvas(opt.kind, opt.size);
  const StrokeGeometry geo = bench_geometry(opt.size, opt.radius, opt.curved);
  if (!opt.diff_dir.empty()) std::filesystem::create_directories(opt.diff_dir);

  for (const int n : opt.stamps) {
    BenchRow row;
    row.stamps = n;
    Canvas base_out, fast_out;
    Timing tb, tf;
    if (opt.kind == BenchKind::kPaint) {
      PaintStroke stroke;
      stroke.geometry = geo;
      stroke.c_start = stroke.c_end = {0.2, 0.4, 0.8};
      stroke.alpha = opt.alpha;
      const RenderConfig cfg{n, 1.0, 2.0};
      // Both kernels draw into a preallocated canvas reset outside the timed region.
      tb = time_it([&] { base_out = canvas; },
                   [&] { paint_sequential_inplace(base_out, stroke, cfg); }, opt.repeats,
                   opt.warmup);
      tf = time_it([&] { fast_out = canvas; },
                   [&] { paint_parallel_inplace(fast_out, stroke, cfg); }, opt.repeats,
                   opt.warmup);
    } else {
      const SmudgeStroke stroke{geo};
      SmudgeParams sp;
      sp.stamps = n;
      sp.patch_res = opt.patch_res;
      tb = time_it([] {}, [&] { base_out = smudge_reference(stroke, canvas, sp); }, opt.repeats,
                   opt.warmup);
      tf = time_it([] {}, [&] { fast_out = smudge_oneshot(stroke, canvas, sp); }, opt.repeats,
                   opt.warmup);
    }
    row.baseline_ms = tb.mean_ms;
    row.baseline_sd = tb.sd_ms;
    row.fast_ms = tf.mean_ms;
    row.fast_sd = tf.sd_ms;
    row.speedup = tf.mean_ms > 0.0 ? tb.mean_ms / tf.mean_ms : 0.0;
    row.l1 = mean_abs_diff(base_out, fast_out);
    if (!opt.diff_dir.empty()) {
      const std::string stem = to_string(opt.kind) + "_n" + std::to_string(n);
      save_image(base_out, opt.diff_dir / (stem + "_baseline.ppm"));
      save_image(fast_out, opt.diff_dir / (stem + "_fast.ppm"));
      save_image(difference_image(base_out, fast_out), opt.diff_dir / (stem + "_diff.ppm"));
    }
    report.rows.push_back(row);
  }
  return report;
}

std::string format_bench(const BenchReport& r) {
  const bool paint = r.options.kind == BenchKind::kPaint;
  std::ostringstream os;
  os << to_string(r.options.kind) << " bench: " << r.options.size << "x" << r.options.size
     << ", radius " << r.options.radius << ", " << r.options.repeats << " repeats\n";
  os << std::setw(6) << "N" << std::setw(22) << (paint ? "sequential ms" : "reference ms")
     << std::setw(22) << (paint ? "parallel ms" : "one-shot ms") << std::setw(10) << "speedup"
     << std::setw(12) << "L1" << "\n";
  os << std::fixed;
  for (const auto& row : r.rows) {
    std::ostringstream b, f;
    b << std::fixed << std::setprecision(2) << row.baseline_ms << " +- " << row.baseline_sd;
    f << std::fixed << std::setprecision(2) << row.fast_ms << " +- " << row.fast_sd;
    os << std::setw(6) << row.stamps << std::setw(22) << b.str() << std::setw(22) << f.str()
       << std::setw(9) << std::setprecision(2) << row.speedup << "x" << std::setw(12)
       << std::setprecision(6) << row.l1 << "\n";
  }
  return os.str();
}

}  // namespace brushrecon

#include "brushrecon/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "brushrecon/reconstruct.hpp"
#include "brushrecon/timeline.hpp"

namespace brushrecon {

namespace {

std::string frame_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%06zu.ppm", index);
  return buf;
}

}  // namespace

Canvas write_frames(const Timeline& t, const std::filesystem::path& dir, const Config& policy) {
  std::filesystem::create_directories(dir / "frames");
  Canvas final_canvas;
  if (t.events.empty()) {
    final_canvas = replay(t);
    save_image(final_canvas, dir / "frames" / "frame_background.ppm");
  } else {
    final_canvas = replay(t, [&](std::size_t i, const Canvas& c) {
      if (emit_frame(policy, i, t.events[i].level) || i + 1 == t.events.size()) {
        save_image(c, dir / "frames" / frame_name(i));
      }
    });
  }
  save_image(final_canvas, dir / "final.ppm");
  return final_canvas;
}

int cmd_reconstruct(const Config& cfg, std::ostream& out, std::ostream& err) {
  try {
    validate(cfg);
    if (cfg.input.empty()) throw ConfigError("config field input: required");
    if (cfg.out.empty()) throw ConfigError("config field out: required");
    const Canvas target = load_image(cfg.input);
    std::optional<LabelMap> labels;
    if (!cfg.labels.empty()) labels = load_label_map(cfg.labels);
    const ReconstructResult res =
        reconstruct(target, labels ? &*labels : nullptr, cfg.phase, nullptr,
                    [&err](const std::string& line) { err << line << "\n"; });
    std::filesystem::create_directories(cfg.out);
    const std::filesystem::path tl_path =
        cfg.timeline.empty() ? cfg.out / "timeline.json" : cfg.timeline;
    save_timeline(res.timeline, tl_path);
    {
      std::ofstream cfg_out(cfg.out / "config.toml", std::ios::binary);
      cfg_out << serialize_config(cfg);
    }
    const Canvas replayed = write_frames(res.timeline, cfg.out, cfg);
    out << "events: " << res.timeline.events.size() << "\n";
    out << "level pixel loss:";
    for (double l : res.report.level_pixel_loss) out << " " << l;
    out << "\n";
    out << "replay max deviation: " << max_abs_diff(replayed, res.canvas) << "\n";
    out << "final PSNR: " << std::fixed << std::setprecision(2) << psnr(res.canvas, target)
        << " dB\n"
        << std::defaultfloat;
    out << "timeline: " << tl_path.string() << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_replay(const std::filesystem::path& timeline, const std::filesystem::path& out_dir,
               int stride, std::ostream& out, std::ostream& err) {
  try {
    if (stride < 0) throw Error("frames stride must be >= 0");
    const Timeline t = load_timeline(timeline);
    Config policy;
    policy.frames_stride = stride;
    write_frames(t, out_dir, policy);
    out << "replayed " << t.events.size() << " events into " << out_dir.string() << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_bench(const BenchOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    out << format_bench(run_bench(opt));
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_gradcheck(const GradcheckOptions& opt, const std::vector<std::string>& components,
                  std::ostream& out, std::ostream& err) {
  try {
    const auto names = gradcheck_component_names();
    for (const auto& c : components) {
      if (std::find(names.begin(), names.end(), c) == names.end()) {
        throw Error("unknown gradcheck component '" + c + "'");
      }
    }
    const GradcheckSuiteReport r = run_gradcheck_suite(opt, components);
    out << format_report(r, opt.tolerance);
    return r.passed ? 0 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Reconstructs images as replayable paint and smudge stroke timelines"};
  app.require_subcommand(1);

  // reconstruct
  auto* rec = app.add_subcommand("reconstruct", "Optimize a stroke timeline for an image");
  std::string config_path, input, labels, out_dir, timeline, texture, texture_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> levels, strokes, stamps, frames_stride;
  rec->add_option("--config", config_path, "TOML-style config file")->check(CLI::ExistingFile);
  rec->add_option("--input", input, "Target image (binary PPM)");
  rec->add_option("--labels", labels, "Region label map (binary PGM)");
  rec->add_option("--out", out_dir, "Output directory");
  rec->add_option("--timeline", timeline, "Timeline path (default <out>/timeline.json)");
  rec->add_option("--seed", seed, "Random seed");
  rec->add_option("--levels", levels, "Number of coarse-to-fine levels");
  rec->add_option("--strokes", strokes, "Total paint stroke budget");
  rec->add_option("--stamps", stamps, "Stamps per stroke");
  rec->add_option("--texture", texture, "Texture mode")
      ->check(CLI::IsMember({"none", "procedural", "external"}));
  rec->add_option("--texture-dir", texture_dir, "Directory of <index>.ppm textures");
  rec->add_option("--frames-stride", frames_stride,
                  "Emit every k-th frame (default: all at levels <= 2, every 4th beyond)");
  std::vector<std::string> overrides;
  rec->add_option("--set", overrides, "Override a config field: section.key=value");

  auto build_config = [&]() {
    Config c;
    if (!config_path.empty()) c = load_config(config_path, c);
    for (const auto& o : overrides) {
      const auto eq = o.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects section.key=value");
      set_config_field(c, o.substr(0, eq), o.substr(eq + 1));
    }
    if (!input.empty()) c.input = input;
    if (!labels.empty()) c.labels = labels;
    if (!out_dir.empty()) c.out = out_dir;
    if (!timeline.empty()) c.timeline = timeline;
    if (seed) c.phase.seed = *seed;
    if (levels) c.phase.levels = *levels;
    if (strokes) c.phase.total_strokes = *strokes;
    if (stamps) {
      c.phase.render.stamps = *stamps;
      c.phase.smudge.stamps = *stamps;
    }
    if (!texture.empty()) c.phase.texture = parse_texture_mode(texture);
    if (!texture_dir.empty()) c.phase.texture_dir = texture_dir;
    if (frames_stride) c.frames_stride = *frames_stride;
    return c;
  };

  // config
  auto* cfg_cmd = app.add_subcommand("config", "Print the effective configuration");
  cfg_cmd->add_option("--config", config_path, "TOML-style config file")->check(CLI::ExistingFile);
  cfg_cmd->add_option("--set", overrides, "Override a config field: section.key=value");

  // replay
  auto* rep = app.add_subcommand("replay", "Re-render a timeline into frames");
  std::string rep_timeline, rep_out;
  int rep_stride = 0;
  rep->add_option("--timeline", rep_timeline, "Timeline JSON")->required();
  rep->add_option("--out", rep_out, "Output directory")->required();
  rep->add_option("--frames-stride", rep_stride, "Emit every k-th frame (0: default policy)");

  // bench
  auto* bench = app.add_subcommand("bench", "Time fast renderers against their references");
  BenchOptions bopt;
  std::string kind = "paint";
  std::string diff_dir;
  bench->add_option("--kind", kind, "paint or smudge")->check(CLI::IsMember({"paint", "smudge"}));
  bench->add_option("--size", bopt.size, "Canvas side in pixels");
  bench->add_option("--radius", bopt.radius, "Stroke radius in pixels");
  bench->add_option("--stamps", bopt.stamps, "Stamp counts");
  bench->add_option("--repeats", bopt.repeats, "Timed repeats");
  bench->add_option("--alpha", bopt.alpha, "Paint stroke opacity");
  bench->add_option("--patch-res", bopt.patch_res, "Smudge patch resolution");
  bench->add_flag("--curved", bopt.curved, "Use a curved trajectory");
  bench->add_option("--diff-dir", diff_dir, "Write outputs and difference images here");

  // gradcheck
  auto* gc = app.add_subcommand("gradcheck", "Check analytic gradients by central differences");
  GradcheckOptions gopt;
  std::vector<std::string> components;
  gc->add_option("--configs", gopt.configs, "Random configurations per component");
  gc->add_option("--tau", gopt.tau, "Soft boundary temperature");
  gc->add_option("--eps", gopt.eps, "Finite-difference step");
  gc->add_option("--seed", gopt.seed, "Random seed");
  gc->add_option("--canvas", gopt.canvas, "Canvas side in pixels");
  gc->add_option("--component", components, "Restrict to these components");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*rec) return cmd_reconstruct(build_config(), std::cout, std::cerr);
    if (*cfg_cmd) {
      const Config c = build_config();
      validate(c);
      std::cout << serialize_config(c);
      return 0;
    }
    if (*rep) return cmd_replay(rep_timeline, rep_out, rep_stride, std::cout, std::cerr);
    if (*bench) {
      bopt.kind = parse_bench_kind(kind);
      bopt.diff_dir = diff_dir;
      if (bopt.kind == BenchKind::kSmudge && bench->count("--size") == 0) bopt.size = 256;
      if (bopt.kind == BenchKind::kSmudge && bench->count("--radius") == 0) bopt.radius = 25.0;
      return cmd_bench(bopt, std::cout, std::cerr);
    }
    if (*gc) return cmd_gradcheck(gopt, components, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace brushrecon

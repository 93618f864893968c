#include "brushrecon/timeline.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace brushrecon {

using nlohmann::json;

namespace {

json vec(Vec2 v) { return json::array({v.x, v.y}); }
json rgb(Rgb c) { return json::array({c.r, c.g, c.b}); }

Vec2 read_vec(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }
Rgb read_rgb(const json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

json geometry_json(const StrokeGeometry& g) {
  return {{"x_s", vec(g.start)}, {"x_c", vec(g.control)}, {"x_e", vec(g.end)},
          {"r_s", g.r_start},    {"r_e", g.r_end}};
}

StrokeGeometry read_geometry_json(const json& j) {
  return {read_vec(j.at("x_s")), read_vec(j.at("x_c")), read_vec(j.at("x_e")),
          j.at("r_s").get<double>(), j.at("r_e").get<double>()};
}

const char* phase_name(StrokePhase p) { return p == StrokePhase::kPaint ? "paint" : "smudge"; }

}  // namespace

std::string to_json(const Timeline& t) {
  json events = json::array();
  for (const auto& e : t.events) {
    json params;
    if (e.phase == StrokePhase::kPaint) {
      params = geometry_json(e.paint.geometry);
      params["c_s"] = rgb(e.paint.c_start);
      params["c_e"] = rgb(e.paint.c_end);
      params["alpha"] = e.paint.alpha;
      params["w"] = e.paint.w;
    } else {
      params = geometry_json(e.smudge.geometry);
    }
    events.push_back({{"phase", phase_name(e.phase)},
                      {"level", e.level},
                      {"cell", e.cell},
                      {"params", params},
                      {"texture", to_string(e.texture)}});
  }
  const json j = {
      {"version", t.version},
      {"width", t.width},
      {"height", t.height},
      {"background", rgb(t.background)},
      {"render", {{"stamps", t.render.stamps}, {"tau", t.render.tau}, {"gamma", t.render.gamma}}},
      {"smudge",
       {{"alpha_c", t.smudge.alpha_c},
        {"alpha_s", t.smudge.alpha_s},
        {"a", t.smudge.a},
        {"b", t.smudge.b},
        {"stamps", t.smudge.stamps},
        {"patch_res", t.smudge.patch_res},
        {"tau", t.smudge.tau}}},
      {"texture", {{"mode", to_string(t.texture.mode)}, {"dir", t.texture.dir.string()}}},
      {"events", events}};
  return j.dump(1) + "\n";
}

Timeline timeline_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw TimelineError("timeline parse error at byte " + std::to_string(e.byte) + ": " +
                        e.what());
  }
  Timeline t;
  try {
    t.version = j.at("version").get<int>();
    if (t.version != kTimelineVersion) {
      throw TimelineError("timeline version " + std::to_string(t.version) +
                          " is not supported (expected " + std::to_string(kTimelineVersion) +
                          ")");
    }
    t.width = j.at("width").get<int>();
    t.height = j.at("height").get<int>();
    if (t.width < 1 || t.height < 1) throw TimelineError("timeline: invalid canvas size");
    t.background = read_rgb(j.at("background"));
    const json& r = j.at("render");
    t.render = {r.at("stamps").get<int>(), r.at("tau").get<double>(), r.at("gamma").get<double>()};
    const json& s = j.at("smudge");
    t.smudge.alpha_c = s.at("alpha_c").get<double>();
    t.smudge.alpha_s = s.at("alpha_s").get<double>();
    t.smudge.a = s.at("a").get<double>();
    t.smudge.b = s.at("b").get<double>();
    t.smudge.stamps = s.at("stamps").get<int>();
    t.smudge.patch_res = s.at("patch_res").get<int>();
    t.smudge.tau = s.at("tau").get<double>();
    t.texture.mode = parse_texture_mode(j.at("texture").at("mode").get<std::string>());
    t.texture.dir = j.at("texture").at("dir").get<std::string>();
    std::size_t index = 0;
    for (const json& ev : j.at("events")) {
      TimelineEvent e;
      const std::string phase = ev.at("phase").get<std::string>();
      if (phase == "paint") {
        e.phase = StrokePhase::kPaint;
      } else if (phase == "smudge") {
        e.phase = StrokePhase::kSmudge;
      } else {
        throw TimelineError("event " + std::to_string(index) + ": unknown phase '" + phase + "'");
      }
      e.level = ev.at("level").get<int>();
      e.cell = ev.at("cell").get<int>();
      if (e.level < 1 || e.cell < 0 || e.cell >= e.level * e.level) {
        throw TimelineError("event " + std::to_string(index) + ": invalid level/cell");
      }
      const json& p = ev.at("params");
      if (e.phase == StrokePhase::kPaint) {
        e.paint.geometry = read_geometry_json(p);
        e.paint.c_start = read_rgb(p.at("c_s"));
        e.paint.c_end = read_rgb(p.at("c_e"));
        e.paint.alpha = p.at("alpha").get<double>();
        const auto w = p.at("w").get<std::vector<double>>();
        if (w.size() != kTextureDim) {
          throw TimelineError("event " + std::to_string(index) + ": w must have " +
                              std::to_string(kTextureDim) + " entries");
        }
        std::copy(w.begin(), w.end(), e.paint.w.begin());
      } else {
        e.smudge.geometry = read_geometry_json(p);
      }
      e.texture = parse_texture_mode(ev.at("texture").get<std::string>());
      t.events.push_back(e);
      ++index;
    }
  } catch (const json::exception& e) {
    throw TimelineError(std::string("malformed timeline: ") + e.what());
  }
  return t;
}

void save_timeline(const Timeline& t, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write timeline " + path.string());
  out << to_json(t);
  if (!out) throw Error("failed writing timeline " + path.string());
}

Timeline load_timeline(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TimelineError("cannot open timeline " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return timeline_from_json(ss.str());
}

Rect event_window(const TimelineEvent& e, int width, int height) {
  const auto cells = partition_grid(width, height, e.level);
  if (e.cell < 0 || e.cell >= static_cast<int>(cells.size())) {
    throw TimelineError("event cell index out of range");
  }
  return cells[e.cell];
}

void apply_event_local(Canvas& window_canvas, Vec2 origin, const TimelineEvent& e,
                       std::size_t index, const Timeline& settings) {
  const Vec2 shift{-origin.x, -origin.y};
  if (e.phase == StrokePhase::kSmudge) {
    const SmudgeStroke local{translated(e.smudge.geometry, shift)};
    smudge_oneshot_inplace(window_canvas, local, settings.smudge);
    return;
  }
  PaintStroke local = e.paint;
  local.geometry = translated(e.paint.geometry, shift);
  switch (e.texture) {
    case TextureMode::kNone:
      paint_parallel_inplace(window_canvas, local, settings.render);
      break;
    case TextureMode::kProcedural: {
      const Canvas mod = procedural_texture(local, window_canvas.width(), window_canvas.height(),
                                            settings.render, origin);
      paint_parallel_inplace(window_canvas, local, settings.render, &mod);
      break;
    }
    case TextureMode::kExternal: {
      const Canvas mod =
          external_texture(settings.texture.dir, index, window_canvas.width(),
                           window_canvas.height(), origin, settings.width, settings.height);
      paint_parallel_inplace(window_canvas, local, settings.render, &mod);
      break;
    }
  }
}

void apply_event(Canvas& canvas, const TimelineEvent& e, std::size_t index,
                 const Timeline& settings) {
  const Rect win = event_window(e, canvas.width(), canvas.height());
  Canvas local = crop(canvas, win);
  apply_event_local(local, {static_cast<double>(win.x0), static_cast<double>(win.y0)}, e, index,
                    settings);
  paste(canvas, local, win);
}

Canvas replay(const Timeline& t, const std::function<void(std::size_t, const Canvas&)>& on_event) {
  Canvas canvas(t.width, t.height, t.background);
  for (std::size_t i = 0; i < t.events.size(); ++i) {
    apply_event(canvas, t.events[i], i, t);
    if (on_event) on_event(i, canvas);
  }
  return canvas;
}

}  // namespace brushrecon

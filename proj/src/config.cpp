#include "brushrecon/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace brushrecon {

namespace {

std::string format_value(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, r.ptr);
  // Keep floats recognizable as floats.
  if (std::isfinite(v) && s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}
std::string format_value(int v) { return std::to_string(v); }
std::string format_value(std::uint64_t v) { return std::to_string(v); }
std::string format_value(const std::string& v) {
  std::string out = "\"";
  for (const char ch : v) {
    if (ch == '"' || ch == '\\') out += '\\';
    out += ch;
  }
  return out + "\"";
}
std::string format_value(const std::filesystem::path& v) { return format_value(v.string()); }
std::string format_value(TextureMode v) { return format_value(to_string(v)); }
std::string format_value(const Rgb& v) {
  return "[" + format_value(v.r) + ", " + format_value(v.g) + ", " + format_value(v.b) + "]";
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& text) {
  const std::string s = trim(text);
  T v{};
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size() || s.empty()) {
    throw std::invalid_argument("expected a number, got '" + s + "'");
  }
  return v;
}

void parse_value(const std::string& s, double& v) { v = parse_number<double>(s); }
void parse_value(const std::string& s, int& v) { v = parse_number<int>(s); }
void parse_value(const std::string& s, std::uint64_t& v) { v = parse_number<std::uint64_t>(s); }
void parse_value(const std::string& text, std::string& v) {
  const std::string s = trim(text);
  if (s.size() < 2 || s.front() != '"' || s.back() != '"') {
    throw std::invalid_argument("expected a quoted string, got '" + s + "'");
  }
  v.clear();
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    if (s[i] == '\\') {
      if (i + 2 >= s.size()) throw std::invalid_argument("dangling escape in string");
      ++i;
    } else if (s[i] == '"') {
      throw std::invalid_argument("unescaped quote in string");
    }
    v += s[i];
  }
}
void parse_value(const std::string& s, std::filesystem::path& v) {
  std::string str;
  parse_value(s, str);
  v = str;
}
void parse_value(const std::string& s, TextureMode& v) {
  std::string str;
  parse_value(s, str);
  try {
    v = parse_texture_mode(str);
  } catch (const Error& e) {
    throw std::invalid_argument(e.what());
  }
}
void parse_value(const std::string& text, Rgb& v) {
  const std::string s = trim(text);
  if (s.size() < 2 || s.front() != '[' || s.back() != ']') {
    throw std::invalid_argument("expected [r, g, b], got '" + s + "'");
  }
  std::vector<double> parts;
  std::stringstream ss(s.substr(1, s.size() - 2));
  std::string item;
  while (std::getline(ss, item, ',')) parts.push_back(parse_number<double>(item));
  if (parts.size() != 3) throw std::invalid_argument("expected three colour components");
  v = {parts[0], parts[1], parts[2]};
}

struct Field {
  std::string section;  // empty for top-level keys
  std::string key;
  std::function<std::string(const Config&)> get;
  std::function<void(Config&, const std::string&)> set;

  std::string path() const { return section.empty() ? key : section + "." + key; }
};

template <class Acc>
Field field(std::string section, std::string key, Acc acc) {
  return {std::move(section), std::move(key),
          [acc](const Config& c) { return format_value(acc(const_cast<Config&>(c))); },
          [acc](Config& c, const std::string& v) { parse_value(v, acc(c)); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> all = [] {
    std::vector<Field> f;
    f.push_back(field("", "input", [](Config& c) -> auto& { return c.input; }));
    f.push_back(field("", "labels", [](Config& c) -> auto& { return c.labels; }));
    f.push_back(field("", "out", [](Config& c) -> auto& { return c.out; }));
    f.push_back(field("", "timeline", [](Config& c) -> auto& { return c.timeline; }));
    f.push_back(field("", "seed", [](Config& c) -> auto& { return c.phase.seed; }));
    f.push_back(field("", "frames_stride", [](Config& c) -> auto& { return c.frames_stride; }));
    f.push_back(field("phase", "levels", [](Config& c) -> auto& { return c.phase.levels; }));
    f.push_back(field("phase", "strokes", [](Config& c) -> auto& { return c.phase.total_strokes; }));
    f.push_back(field("phase", "smudge_strokes",
                      [](Config& c) -> auto& { return c.phase.smudge_strokes; }));
    f.push_back(field("phase", "paint_iterations",
                      [](Config& c) -> auto& { return c.phase.paint_iterations; }));
    f.push_back(field("phase", "texture_iterations",
                      [](Config& c) -> auto& { return c.phase.texture_iterations; }));
    f.push_back(field("phase", "smudge_iterations",
                      [](Config& c) -> auto& { return c.phase.smudge_iterations; }));
    f.push_back(field("phase", "background", [](Config& c) -> auto& { return c.phase.background; }));
    f.push_back(field("phase", "init_alpha", [](Config& c) -> auto& { return c.phase.init_alpha; }));
    f.push_back(field("phase", "radius_min", [](Config& c) -> auto& { return c.phase.radius_min; }));
    f.push_back(field("phase", "radius_max", [](Config& c) -> auto& { return c.phase.radius_max; }));
    f.push_back(field("phase", "paint_lr", [](Config& c) -> auto& { return c.phase.paint_lr; }));
    f.push_back(field("phase", "smudge_lr", [](Config& c) -> auto& { return c.phase.smudge_lr; }));
    f.push_back(field("phase", "texture_peak_lr",
                      [](Config& c) -> auto& { return c.phase.texture_peak_lr; }));
    f.push_back(field("render", "stamps", [](Config& c) -> auto& { return c.phase.render.stamps; }));
    f.push_back(field("render", "tau", [](Config& c) -> auto& { return c.phase.render.tau; }));
    f.push_back(field("render", "gamma", [](Config& c) -> auto& { return c.phase.render.gamma; }));
    f.push_back(field("smudge", "alpha_c", [](Config& c) -> auto& { return c.phase.smudge.alpha_c; }));
    f.push_back(field("smudge", "alpha_s", [](Config& c) -> auto& { return c.phase.smudge.alpha_s; }));
    f.push_back(field("smudge", "a", [](Config& c) -> auto& { return c.phase.smudge.a; }));
    f.push_back(field("smudge", "b", [](Config& c) -> auto& { return c.phase.smudge.b; }));
    f.push_back(field("smudge", "stamps", [](Config& c) -> auto& { return c.phase.smudge.stamps; }));
    f.push_back(
        field("smudge", "patch_res", [](Config& c) -> auto& { return c.phase.smudge.patch_res; }));
    f.push_back(field("smudge", "tau", [](Config& c) -> auto& { return c.phase.smudge.tau; }));
    f.push_back(field("weights", "pixel", [](Config& c) -> auto& { return c.phase.weights.pixel; }));
    f.push_back(field("weights", "perc", [](Config& c) -> auto& { return c.phase.weights.perc; }));
    f.push_back(field("weights", "grad", [](Config& c) -> auto& { return c.phase.weights.grad; }));
    f.push_back(field("weights", "seg", [](Config& c) -> auto& { return c.phase.weights.seg; }));
    f.push_back(field("weights", "ot", [](Config& c) -> auto& { return c.phase.weights.ot; }));
    f.push_back(field("weights", "area", [](Config& c) -> auto& { return c.phase.weights.area; }));
    f.push_back(
        field("weights", "grad_alpha", [](Config& c) -> auto& { return c.phase.weights.grad_alpha; }));
    f.push_back(
        field("weights", "grad_beta", [](Config& c) -> auto& { return c.phase.weights.grad_beta; }));
    f.push_back(field("weights", "eta", [](Config& c) -> auto& { return c.phase.weights.eta; }));
    f.push_back(field("weights", "smudge_grad_alpha_scale",
                      [](Config& c) -> auto& { return c.phase.weights.smudge_grad_alpha_scale; }));
    f.push_back(field("weights", "smudge_area_scale",
                      [](Config& c) -> auto& { return c.phase.weights.smudge_area_scale; }));
    f.push_back(field("ot", "grid", [](Config& c) -> auto& { return c.phase.ot.grid; }));
    f.push_back(field("ot", "lambda", [](Config& c) -> auto& { return c.phase.ot.lambda; }));
    f.push_back(field("ot", "iterations", [](Config& c) -> auto& { return c.phase.ot.iterations; }));
    f.push_back(field("texture", "mode", [](Config& c) -> auto& { return c.phase.texture; }));
    f.push_back(field("texture", "dir", [](Config& c) -> auto& { return c.phase.texture_dir; }));
    return f;
  }();
  return all;
}

const Field* find_field(const std::string& path) {
  for (const auto& f : fields())
    if (f.path() == path) return &f;
  return nullptr;
}

/// Drops a trailing `#` comment that is not inside a quoted string.
std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '\\' && quoted) {
      ++i;
    } else if (line[i] == '"') {
      quoted = !quoted;
    } else if (line[i] == '#' && !quoted) {
      return line.substr(0, i);
    }
  }
  return line;
}

void check(bool ok, const std::string& path, const std::string& requirement) {
  if (!ok) throw ConfigError("config field " + path + ": " + requirement);
}

}  // namespace

std::vector<std::string> config_field_paths() {
  std::vector<std::string> out;
  for (const auto& f : fields()) out.push_back(f.path());
  return out;
}

std::string serialize_config(const Config& c) {
  std::string out;
  std::string section;
  for (const auto& f : fields()) {
    if (f.section != section) {
      section = f.section;
      out += "\n[" + section + "]\n";
    }
    out += f.key + " = " + f.get(c) + "\n";
  }
  return out;
}

void set_config_field(Config& c, const std::string& path, const std::string& value) {
  const Field* f = find_field(path);
  if (!f) throw ConfigError("unknown config field " + path);
  try {
    f->set(c, value);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("config field " + path + ": " + e.what());
  }
}

Config parse_config(const std::string& text, Config base) {
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    const std::string where = "config line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string path = section.empty() ? key : section + "." + key;
    try {
      set_config_field(base, path, line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  return base;
}

Config load_config(const std::filesystem::path& path, Config base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

void validate(const Config& c) {
  const PhaseConfig& p = c.phase;
  check(c.frames_stride >= 0, "frames_stride", "must be >= 0");
  check(p.levels >= 1, "phase.levels", "must be >= 1");
  check(p.total_strokes >= 1, "phase.strokes", "must be >= 1");
  check(p.paint_iterations >= 1, "phase.paint_iterations", "must be >= 1");
  check(p.texture_iterations >= 1, "phase.texture_iterations", "must be >= 1");
  check(p.smudge_iterations >= 1, "phase.smudge_iterations", "must be >= 1");
  for (const double v : {p.background.r, p.background.g, p.background.b}) {
    check(v >= 0.0 && v <= 1.0, "phase.background", "components must lie in [0, 1]");
  }
  check(p.init_alpha > 0.0 && p.init_alpha <= 1.0, "phase.init_alpha", "must lie in (0, 1]");
  check(p.radius_min > 0.0, "phase.radius_min", "must be > 0");
  check(p.radius_max >= p.radius_min, "phase.radius_max", "must be >= phase.radius_min");
  check(p.paint_lr > 0.0, "phase.paint_lr", "must be > 0");
  check(p.smudge_lr > 0.0, "phase.smudge_lr", "must be > 0");
  check(p.texture_peak_lr > 0.0, "phase.texture_peak_lr", "must be > 0");
  check(p.render.stamps >= 1, "render.stamps", "must be >= 1");
  check(p.render.tau > 0.0, "render.tau", "must be > 0");
  check(p.render.gamma > 0.0, "render.gamma", "must be > 0");
  check(p.smudge.alpha_c >= 0.0 && p.smudge.alpha_c <= 1.0, "smudge.alpha_c", "must lie in [0, 1]");
  check(p.smudge.alpha_s >= 0.0 && p.smudge.alpha_s <= 1.0, "smudge.alpha_s", "must lie in [0, 1]");
  check(p.smudge.a > 0.0, "smudge.a", "must be > 0");
  check(p.smudge.b > 0.0, "smudge.b", "must be > 0");
  check(p.smudge.stamps >= 1, "smudge.stamps", "must be >= 1");
  check(p.smudge.patch_res >= 1, "smudge.patch_res", "must be >= 1");
  check(p.smudge.tau > 0.0, "smudge.tau", "must be > 0");
  const LossWeights& w = p.weights;
  const std::pair<const char*, double> weights[] = {
      {"weights.pixel", w.pixel},
      {"weights.perc", w.perc},
      {"weights.grad", w.grad},
      {"weights.seg", w.seg},
      {"weights.ot", w.ot},
      {"weights.area", w.area},
      {"weights.grad_alpha", w.grad_alpha},
      {"weights.grad_beta", w.grad_beta},
      {"weights.smudge_grad_alpha_scale", w.smudge_grad_alpha_scale},
      {"weights.smudge_area_scale", w.smudge_area_scale}};
  for (const auto& [name, v] : weights) check(std::isfinite(v) && v >= 0.0, name, "must be finite and >= 0");
  check(w.eta > 0.0, "weights.eta", "must be > 0");
  check(p.ot.grid >= 2, "ot.grid", "must be >= 2");
  check(p.ot.lambda > 0.0, "ot.lambda", "must be > 0");
  check(p.ot.iterations >= 1, "ot.iterations", "must be >= 1");
  check(p.texture != TextureMode::kExternal || !p.texture_dir.empty(), "texture.dir",
        "required when texture.mode is external");
}

bool emit_frame(const Config& c, std::size_t index, int level) {
  if (c.frames_stride > 0) return index % static_cast<std::size_t>(c.frames_stride) == 0;
  return level <= 2 || index % 4 == 0;
}

}  // namespace brushrecon

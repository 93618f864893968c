#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "brushrecon/geometry.hpp"
#include "brushrecon/image.hpp"
#include "brushrecon/paint.hpp"
#include "brushrecon/smudge.hpp"
#include "brushrecon/texture.hpp"

namespace brushrecon {

inline constexpr int kTimelineVersion = 1;

enum class StrokePhase { kPaint, kSmudge };

/// One committed stroke, in canvas coordinates. The stroke is rendered inside
/// the window of cell `cell` on the level x level grid.
struct TimelineEvent {
  StrokePhase phase = StrokePhase::kPaint;
  int level = 1;
  int cell = 0;
  PaintStroke paint;    // paint events
  SmudgeStroke smudge;  // smudge events
  TextureMode texture = TextureMode::kNone;

  friend bool operator==(const TimelineEvent&, const TimelineEvent&) = default;
};

struct TextureSettings {
  TextureMode mode = TextureMode::kNone;
  std::filesystem::path dir;  // external mode only
};

struct Timeline {
  int version = kTimelineVersion;
  int width = 0;
  int height = 0;
  Rgb background{1.0, 1.0, 1.0};
  RenderConfig render;
  SmudgeParams smudge;
  TextureSettings texture;
  std::vector<TimelineEvent> events;
};

/// Raised for malformed or incompatible timeline files.
class TimelineError : public Error {
 public:
  using Error::Error;
};

std::string to_json(const Timeline& t);
Timeline timeline_from_json(const std::string& text);
void save_timeline(const Timeline& t, const std::filesystem::path& path);
Timeline load_timeline(const std::filesystem::path& path);

/// Window of an event's cell.
Rect event_window(const TimelineEvent& e, int width, int height);

/// Renders one event into a crop of its window. `window_canvas` holds the
/// window's pixels, `origin` its top-left corner; `index` is the event's
/// position in the timeline (names external texture files).
void apply_event_local(Canvas& window_canvas, Vec2 origin, const TimelineEvent& e,
                       std::size_t index, const Timeline& settings);

/// crop -> apply_event_local -> paste.
void apply_event(Canvas& canvas, const TimelineEvent& e, std::size_t index,
                 const Timeline& settings);

/// Background canvas with every event applied in order. `on_event`, when set,
/// is called after each event with its index.
Canvas replay(const Timeline& t,
              const std::function<void(std::size_t, const Canvas&)>& on_event = {});

}  // namespace brushrecon

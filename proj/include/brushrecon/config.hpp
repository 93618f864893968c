#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "brushrecon/reconstruct.hpp"

namespace brushrecon {

/// Run configuration: every optimizer setting plus paths and frame output.
struct Config {
  PhaseConfig phase;
  std::filesystem::path input;
  std::filesystem::path labels;
  std::filesystem::path out;
  std::filesystem::path timeline;
  int frames_stride = 0;  // 0: every stroke at levels <= 2, every 4th beyond
};

/// Config errors name the offending field as `section.key`.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// `section.key` names of every config field, in serialization order.
std::vector<std::string> config_field_paths();

/// TOML-style text: top-level keys, then `[section]` tables of `key = value`.
/// Floats use the shortest round-trip representation.
std::string serialize_config(const Config& c);

/// Applies the keys present in `text` on top of `base`.
Config parse_config(const std::string& text, Config base = {});
Config load_config(const std::filesystem::path& path, Config base = {});

/// Sets one field from its textual value, as a flag override would.
void set_config_field(Config& c, const std::string& path, const std::string& value);

void validate(const Config& c);

/// Whether the frame after event `index` (at `level`) is emitted.
bool emit_frame(const Config& c, std::size_t index, int level);

}  // namespace brushrecon

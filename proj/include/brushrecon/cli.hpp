#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "brushrecon/bench_report.hpp"
#include "brushrecon/config.hpp"
#include "brushrecon/gradcheck_suite.hpp"

namespace brushrecon {

/// Reconstructs `input`, writes the timeline, final image and frames.
int cmd_reconstruct(const Config& cfg, std::ostream& out, std::ostream& err);

/// Replays a timeline into `out_dir`; `stride` 0 uses the default policy.
int cmd_replay(const std::filesystem::path& timeline, const std::filesystem::path& out_dir,
               int stride, std::ostream& out, std::ostream& err);

int cmd_bench(const BenchOptions& opt, std::ostream& out, std::ostream& err);

int cmd_gradcheck(const GradcheckOptions& opt, const std::vector<std::string>& components,
                  std::ostream& out, std::ostream& err);

/// Writes the frame after each selected event of `t` to `dir`, plus
/// `final.ppm`. An empty timeline yields a single background frame.
/// Returns the final canvas.
Canvas write_frames(const Timeline& t, const std::filesystem::path& dir, const Config& policy);

/// Full command line: `brushrecon <subcommand> [flags]`.
int run_cli(int argc, char** argv);

}  // namespace brushrecon

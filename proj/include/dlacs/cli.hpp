// Command-line layer: run configuration files, output writers and the
// command implementations behind the `dlacs` executable.
//
// Configuration grammar: one or more `key=value` tokens per line separated
// by whitespace; `#` starts a comment that runs to the end of the line.
// Keys may appear at most once. Every key except `graph` has a default.
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dlacs/engine.hpp"
#include "dlacs/experiments.hpp"

namespace dlacs::cli {

/// Parse or validation failure; `line` is 0 when not tied to a line.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::size_t line, const std::string& message);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

enum class GridKind { uniform, geometric };

struct RunConfig {
  SimConfig sim;
  std::string graph;
  /// Vertex count for cycle and complete graphs.
  std::uint32_t n = 0;
  /// Torus side length and dimension.
  std::uint32_t side = 0;
  std::uint32_t dim = 0;
  std::uint64_t replicas = 100;
  std::uint32_t grid = 50;
  GridKind grid_kind = GridKind::uniform;
  /// Sweep points.
  std::vector<double> p_values{0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9};
  /// Bisection settings.
  double p_lo = 0.5;
  double p_hi = 0.9;
  double tol_p = 0.025;
  std::uint64_t budget = 256;
  double window_factor = 0.01;
  double t_max = 2000.0;
  double pc_lower = 0.55;
  double pc_upper = 0.85;
  /// Observation times for `couple`; empty means {horizon}.
  std::vector<double> times;
  /// Keys given in the file, in order, with their raw values.
  std::vector<std::pair<std::string, std::string>> given;
  bool seed_given = false;
};

/// Throws ConfigError naming the line and key.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

/// One line per key with its default, for `--help`.
std::string config_reference();

struct CommonOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> replicas;
  unsigned jobs = 0;
  std::filesystem::path out = ".";
  /// Put wall-clock seconds into report.json (breaks byte identity).
  bool timing = false;
};

/// --seed, then the config file, then DLACS_SEED, then 1.
std::uint64_t resolve_seed(const CommonOptions& opts, const RunConfig* cfg);

// ---------------------------------------------------------------------------
// Writers. Every writer produces the same bytes for the same input.

/// `t,estimate,stderr,n` with a header row.
struct CurveRow {
  double t = 0.0;
  double estimate = 0.0;
  double std_error = 0.0;
  std::uint64_t n = 0;
};
void write_curve_csv(std::ostream& os, const std::vector<CurveRow>& rows);

/// Shortest round-trip decimal form used in every CSV cell.
std::string format_number(double x);

struct Report {
  std::string command;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<CheckReport> checks;
  std::vector<std::string> outputs;
  bool timing = false;

  bool pass() const;
};
/// JSON document described by schemas/report.schema.json.
std::string report_json(const Report& report);

/// Space-time raster: width = vertex count, one row per recorded time.
/// Cell codes: 0 vacant, +k A clusters of total size k, -k B of size k.
struct SpaceTimeImage {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::int32_t> cells;
  std::int32_t at(std::uint32_t row, std::uint32_t col) const { return cells[static_cast<std::size_t>(row) * width + col]; }
};

/// Vacant white, A in reds and B in blues, darker for larger total size
/// (sizes of 8 and above share the darkest shade).
std::array<std::uint8_t, 3> cell_color(std::int32_t code) noexcept;

/// Binary P6.
void write_ppm(std::ostream& os, const SpaceTimeImage& img);
/// Run-length rectangles on a grid downsampled to at most `max_pixels` per
/// side; each block takes the colour of its largest occupant.
void write_svg(std::ostream& os, const SpaceTimeImage& img, std::uint32_t max_pixels = 800);

/// One run of cfg with `rows` rows: row r is the configuration after step
/// r + 1 (discrete, rows = steps) or at time (r + 1) horizon / rows
/// (continuous).
SpaceTimeImage record_spacetime(const SimConfig& cfg, std::uint32_t rows);

// ---------------------------------------------------------------------------
// Commands. Each writes its files into opts.out and returns the exit code:
// 0 when every check in the report passes, 1 otherwise.

int cmd_simulate(const RunConfig& cfg, const CommonOptions& opts);
int cmd_sweep(const RunConfig& cfg, const CommonOptions& opts);
int cmd_pc(const RunConfig& cfg, const CommonOptions& opts);
int cmd_couple(const RunConfig& cfg, const CommonOptions& opts);
int cmd_plot(const RunConfig& cfg, const CommonOptions& opts);

struct VerifyOptions {
  /// Names from verify_check_names(); empty runs all of them.
  std::vector<std::string> checks;
  /// Adds the checks against the oracle module.
  bool oracles = false;
};

std::vector<std::string> verify_check_names(bool oracles);
/// Runs the selected checks in suite order, printing one line per check.
/// Throws std::invalid_argument for an unknown name.
std::vector<CheckReport> run_checks(const VerifyOptions& v, const CommonOptions& opts, std::ostream& log);
/// Runs the default suite. --replicas overrides every check's replica count
/// and --seed derives every check's seed.
int cmd_verify(const VerifyOptions& v, const CommonOptions& opts, std::ostream& log);

}  // namespace dlacs::cli

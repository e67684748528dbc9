#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "dlacs/cli.hpp"

namespace dlacs::cli {

ConfigError::ConfigError(std::size_t line, const std::string& message)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message : message), line_(line) {}

namespace {

struct Token {
  std::string key;
  std::string value;
  std::size_t line;
};

double parse_double(const Token& t) {
  double x = 0.0;
  const char* first = t.value.data();
  const char* last = first + t.value.size();
  const auto [ptr, ec] = std::from_chars(first, last, x);
  if (ec != std::errc() || ptr != last || !std::isfinite(x))
    throw ConfigError(t.line, t.key + ": expected a number, got '" + t.value + "'");
  return x;
}

std::uint64_t parse_uint(const Token& t) {
  std::uint64_t x = 0;
  const char* first = t.value.data();
  const char* last = first + t.value.size();
  const auto [ptr, ec] = std::from_chars(first, last, x);
  if (ec != std::errc() || ptr != last)
    throw ConfigError(t.line, t.key + ": expected a non-negative integer, got '" + t.value + "'");
  return x;
}

std::uint32_t parse_u32(const Token& t) {
  const std::uint64_t x = parse_uint(t);
  if (x > 0xffffffffULL) throw ConfigError(t.line, t.key + ": value " + t.value + " too large");
  return static_cast<std::uint32_t>(x);
}

Cap parse_cap(const Token& t) {
  if (t.value == "inf") return Cap::unlimited();
  return Cap::at(parse_u32(t));
}

std::vector<double> parse_list(const Token& t) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= t.value.size()) {
    const std::size_t comma = std::min(t.value.find(',', start), t.value.size());
    out.push_back(parse_double(Token{t.key, t.value.substr(start, comma - start), t.line}));
    start = comma + 1;
  }
  return out;
}

void require(bool ok, const Token& t, const std::string& what) {
  if (!ok) throw ConfigError(t.line, t.key + ": value " + t.value + " " + what);
}

using Handler = std::function<void(RunConfig&, const Token&)>;

struct KeySpec {
  const char* default_text;
  const char* help;
  Handler apply;
};

const std::map<std::string, KeySpec, std::less<>>& key_table() {
  static const std::map<std::string, KeySpec, std::less<>> table = {
      {"graph", {"(required)", "cycle | torus | complete", [](RunConfig& c, const Token& t) {
         require(t.value == "cycle" || t.value == "torus" || t.value == "complete", t, "is not one of cycle, torus, complete");
         c.graph = t.value;
       }}},
      {"n", {"100", "vertex count (cycle, complete)", [](RunConfig& c, const Token& t) { c.n = parse_u32(t); }}},
      {"side", {"10", "torus side length", [](RunConfig& c, const Token& t) { c.side = parse_u32(t); }}},
      {"dim", {"2", "torus dimension", [](RunConfig& c, const Token& t) { c.dim = parse_u32(t); }}},
      {"p", {"0.5", "initial A density, in [0, 1]", [](RunConfig& c, const Token& t) {
         c.sim.p = parse_double(t);
         require(c.sim.p >= 0.0 && c.sim.p <= 1.0, t, "outside [0, 1]");
       }}},
      {"lambda_A", {"1", "A jump rate, > 0", [](RunConfig& c, const Token& t) {
         c.sim.lambda_A = parse_double(t);
         require(c.sim.lambda_A > 0.0, t, "must be positive");
       }}},
      {"lambda_B", {"1", "B jump rate, >= 0 (0 in discrete mode)", [](RunConfig& c, const Token& t) {
         c.sim.lambda_B = parse_double(t);
         require(c.sim.lambda_B >= 0.0, t, "must be non-negative");
       }}},
      {"M", {"inf", "A coalescence cap: integer or inf", [](RunConfig& c, const Token& t) { c.sim.cap_M = parse_cap(t); }}},
      {"N", {"inf", "B coalescence cap: integer or inf", [](RunConfig& c, const Token& t) { c.sim.cap_N = parse_cap(t); }}},
      {"horizon", {"10", "time horizon (continuous mode), >= 0", [](RunConfig& c, const Token& t) {
         c.sim.horizon = parse_double(t);
         require(c.sim.horizon >= 0.0, t, "must be non-negative");
       }}},
      {"seed", {"DLACS_SEED or 1", "master seed", [](RunConfig& c, const Token& t) {
         c.sim.seed = parse_uint(t);
         c.seed_given = true;
       }}},
      {"mode", {"continuous", "continuous | discrete", [](RunConfig& c, const Token& t) {
         require(t.value == "continuous" || t.value == "discrete", t, "is not one of continuous, discrete");
         c.sim.mode = t.value == "discrete" ? Mode::discrete : Mode::continuous;
       }}},
      {"steps", {"100", "step count (discrete mode)", [](RunConfig& c, const Token& t) { c.sim.steps = parse_u32(t); }}},
      {"replicas", {"100", "replicas per estimate, >= 1", [](RunConfig& c, const Token& t) {
         c.replicas = parse_uint(t);
         require(c.replicas >= 1, t, "must be at least 1");
       }}},
      {"grid", {"50", "grid intervals (uniform) or levels (geometric), >= 1", [](RunConfig& c, const Token& t) {
         c.grid = parse_u32(t);
         require(c.grid >= 1, t, "must be at least 1");
       }}},
      {"grid_kind", {"uniform", "uniform | geometric", [](RunConfig& c, const Token& t) {
         require(t.value == "uniform" || t.value == "geometric", t, "is not one of uniform, geometric");
         c.grid_kind = t.value == "geometric" ? GridKind::geometric : GridKind::uniform;
       }}},
      {"p_values", {"0.5,0.55,...,0.9", "sweep densities, comma separated, each in [0, 1]", [](RunConfig& c, const Token& t) {
         c.p_values = parse_list(t);
         for (double p : c.p_values) require(p >= 0.0 && p <= 1.0, t, "has an entry outside [0, 1]");
       }}},
      {"p_lo", {"0.5", "bisection lower end, in (0, 1)", [](RunConfig& c, const Token& t) {
         c.p_lo = parse_double(t);
         require(c.p_lo > 0.0 && c.p_lo < 1.0, t, "outside (0, 1)");
       }}},
      {"p_hi", {"0.9", "bisection upper end, in (0, 1)", [](RunConfig& c, const Token& t) {
         c.p_hi = parse_double(t);
         require(c.p_hi > 0.0 && c.p_hi < 1.0, t, "outside (0, 1)");
       }}},
      {"tol_p", {"0.025", "bisection target width, > 0", [](RunConfig& c, const Token& t) {
         c.tol_p = parse_double(t);
         require(c.tol_p > 0.0, t, "must be positive");
       }}},
      {"budget", {"256", "total bisection replicas", [](RunConfig& c, const Token& t) { c.budget = parse_uint(t); }}},
      {"window_factor", {"0.01", "quiet window per vertex, > 0", [](RunConfig& c, const Token& t) {
         c.window_factor = parse_double(t);
         require(c.window_factor > 0.0, t, "must be positive");
       }}},
      {"t_max", {"2000", "time cap for quiet-stopped runs, > 0", [](RunConfig& c, const Token& t) {
         c.t_max = parse_double(t);
         require(c.t_max > 0.0, t, "must be positive");
       }}},
      {"pc_lower", {"0.55", "bracket check lower bound", [](RunConfig& c, const Token& t) { c.pc_lower = parse_double(t); }}},
      {"pc_upper", {"0.85", "bracket check upper bound", [](RunConfig& c, const Token& t) { c.pc_upper = parse_double(t); }}},
      {"times", {"horizon", "couple observation times, comma separated, in [0, horizon]", [](RunConfig& c, const Token& t) {
         c.times = parse_list(t);
         for (double x : c.times) require(x >= 0.0, t, "has a negative entry");
       }}},
  };
  return table;
}

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    ++line_no;
    if (const std::size_t hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      std::size_t j = i;
      while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
      if (j > i) {
        const std::string_view word = line.substr(i, j - i);
        const std::size_t eq = word.find('=');
        if (eq == std::string_view::npos || eq == 0)
          throw ConfigError(line_no, "expected key=value, got '" + std::string(word) + "'");
        out.push_back({std::string(word.substr(0, eq)), std::string(word.substr(eq + 1)), line_no});
      }
      i = j;
    }
    if (end == text.size()) break;
    pos = end + 1;
  }
  return out;
}

}  // namespace

RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  cfg.sim.steps = 100;
  std::map<std::string, std::size_t, std::less<>> seen;
  const auto& table = key_table();
  for (const Token& t : tokenize(text)) {
    const auto it = table.find(t.key);
    if (it == table.end()) throw ConfigError(t.line, "unknown key '" + t.key + "'");
    if (const auto prev = seen.find(t.key); prev != seen.end())
      throw ConfigError(t.line, "duplicate key '" + t.key + "' (first set on line " + std::to_string(prev->second) + ")");
    if (t.value.empty()) throw ConfigError(t.line, t.key + ": missing value");
    seen.emplace(t.key, t.line);
    it->second.apply(cfg, t);
    cfg.given.emplace_back(t.key, t.value);
  }
  auto line_of = [&](std::string_view key) {
    const auto it = seen.find(key);
    return it == seen.end() ? std::size_t{0} : it->second;
  };
  if (cfg.graph.empty()) throw ConfigError(0, "graph required");

  const bool torus = cfg.graph == "torus";
  for (const char* key : {"side", "dim"})
    if (!torus && seen.count(key)) throw ConfigError(line_of(key), std::string(key) + ": only applies to graph=torus");
  if (torus && seen.count("n")) throw ConfigError(line_of("n"), "n: does not apply to graph=torus (use side and dim)");
  if (cfg.n == 0 && !seen.count("n")) cfg.n = 100;
  if (!seen.count("side")) cfg.side = 10;
  if (!seen.count("dim")) cfg.dim = 2;
  try {
    if (cfg.graph == "cycle") cfg.sim.topology = std::make_shared<const Topology>(Topology::cycle(cfg.n));
    if (cfg.graph == "complete") cfg.sim.topology = std::make_shared<const Topology>(Topology::complete(cfg.n));
    if (torus) cfg.sim.topology = std::make_shared<const Topology>(Topology::torus(cfg.side, cfg.dim));
  } catch (const std::invalid_argument& e) {
    const std::size_t line = torus ? std::max(line_of("side"), line_of("dim")) : line_of("n");
    throw ConfigError(line ? line : line_of("graph"), std::string("graph: ") + e.what());
  }

  if (cfg.sim.mode == Mode::discrete && cfg.sim.lambda_B != 0.0)
    throw ConfigError(line_of("mode"), "mode=discrete requires lambda_B=0");
  if (!(cfg.p_lo < cfg.p_hi)) throw ConfigError(line_of("p_hi"), "p_hi: must exceed p_lo");
  if (!(cfg.pc_lower < cfg.pc_upper)) throw ConfigError(line_of("pc_upper"), "pc_upper: must exceed pc_lower");
  for (double t : cfg.times)
    if (t > cfg.sim.horizon) throw ConfigError(line_of("times"), "times: entry " + format_number(t) + " exceeds horizon");
  try {
    cfg.sim.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(0, e.what());
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(0, "cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(0, path.string() + ": " + e.what());
  }
}

std::string config_reference() {
  std::string out;
  for (const auto& [key, spec] : key_table()) {
    out += "  " + key + std::string(key.size() < 14 ? 14 - key.size() : 1, ' ') + spec.help + " [default " +
           spec.default_text + "]\n";
  }
  return out;
}

std::uint64_t resolve_seed(const CommonOptions& opts, const RunConfig* cfg) {
  if (opts.seed) return *opts.seed;
  if (cfg && cfg->seed_given) return cfg->sim.seed;
  if (const char* env = std::getenv("DLACS_SEED"); env && *env) {
    std::uint64_t x = 0;
    const char* last = env + std::char_traits<char>::length(env);
    const auto [ptr, ec] = std::from_chars(env, last, x);
    if (ec != std::errc() || ptr != last) throw ConfigError(0, std::string("DLACS_SEED: not an integer: ") + env);
    return x;
  }
  return 1;
}

}  // namespace dlacs::cli

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <ostream>

#include <json.hpp>

#include "dlacs/cli.hpp"

namespace dlacs::cli {

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (x == 0.0) return "0";
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ec == std::errc() ? ptr : buf);
}

void write_curve_csv(std::ostream& os, const std::vector<CurveRow>& rows) {
  os << "t,estimate,stderr,n\n";
  for (const auto& r : rows)
    os << format_number(r.t) << ',' << format_number(r.estimate) << ',' << format_number(r.std_error) << ',' << r.n
       << '\n';
}

bool Report::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckReport& c) { return c.pass; });
}

std::string report_json(const Report& report) {
  using json = nlohmann::ordered_json;
  json doc;
  doc["format"] = "dlacs-report";
  doc["version"] = 1;
  doc["command"] = report.command;
  doc["seed"] = report.seed;
  doc["pass"] = report.pass();
  json config = json::object();
  for (const auto& [k, v] : report.config) config[k] = v;
  doc["config"] = config;
  json checks = json::array();
  for (const auto& c : report.checks) {
    json item;
    item["name"] = c.name;
    item["pass"] = c.pass;
    item["rule"] = c.rule;
    item["replicas"] = c.replicas;
    json observed = json::object();
    for (const auto& [k, v] : c.observed) observed[k] = std::isfinite(v) ? json(v) : json(nullptr);
    item["observed"] = observed;
    json tol = json::object();
    for (const auto& [k, v] : c.tolerances) tol[k] = std::isfinite(v) ? json(v) : json(nullptr);
    item["tolerances"] = tol;
    item["notes"] = c.notes;
    if (report.timing) item["wall_seconds"] = c.wall_seconds;
    checks.push_back(std::move(item));
  }
  doc["checks"] = checks;
  doc["outputs"] = report.outputs;
  return doc.dump(2) + "\n";
}

std::array<std::uint8_t, 3> cell_color(std::int32_t code) noexcept {
  if (code == 0) return {255, 255, 255};
  const std::int32_t size = code > 0 ? code : -code;
  const double f = (std::min(size, 8) - 1) / 7.0;
  auto mix = [f](int light, int dark) { return static_cast<std::uint8_t>(std::lround(light + f * (dark - light))); };
  if (code > 0) return {mix(235, 120), mix(80, 0), mix(80, 0)};
  return {mix(80, 0), mix(110, 0), mix(235, 120)};
}

void write_ppm(std::ostream& os, const SpaceTimeImage& img) {
  os << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  std::vector<char> row(static_cast<std::size_t>(img.width) * 3);
  for (std::uint32_t r = 0; r < img.height; ++r) {
    for (std::uint32_t c = 0; c < img.width; ++c) {
      const auto rgb = cell_color(img.at(r, c));
      for (int k = 0; k < 3; ++k) row[3 * c + k] = static_cast<char>(rgb[k]);
    }
    os.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
}

void write_svg(std::ostream& os, const SpaceTimeImage& img, std::uint32_t max_pixels) {
  if (max_pixels == 0) max_pixels = 1;
  const std::uint32_t longest = std::max(img.width, img.height);
  const std::uint32_t block = std::max<std::uint32_t>(1, (longest + max_pixels - 1) / max_pixels);
  const std::uint32_t bw = (img.width + block - 1) / block;
  const std::uint32_t bh = (img.height + block - 1) / block;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << bw << "\" height=\"" << bh << "\" viewBox=\"0 0 " << bw
     << ' ' << bh << "\" shape-rendering=\"crispEdges\">\n";
  os << "<rect width=\"" << bw << "\" height=\"" << bh << "\" fill=\"#ffffff\"/>\n";
  std::vector<std::int32_t> line(bw);
  for (std::uint32_t by = 0; by < bh; ++by) {
    std::fill(line.begin(), line.end(), 0);
    for (std::uint32_t r = by * block; r < std::min(img.height, (by + 1) * block); ++r)
      for (std::uint32_t c = 0; c < img.width; ++c) {
        const std::int32_t v = img.at(r, c);
        std::int32_t& slot = line[c / block];
        if (std::abs(v) > std::abs(slot)) slot = v;
      }
    for (std::uint32_t x = 0; x < bw;) {
      std::uint32_t end = x + 1;
      while (end < bw && line[end] == line[x]) ++end;
      if (line[x] != 0) {
        const auto rgb = cell_color(line[x]);
        char fill[8];
        std::snprintf(fill, sizeof fill, "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
        os << "<rect x=\"" << x << "\" y=\"" << by << "\" width=\"" << end - x << "\" height=\"1\" fill=\"" << fill
           << "\"/>\n";
      }
      x = end;
    }
  }
  os << "</svg>\n";
}

namespace {

class RowRecorder : public Observer {
 public:
  RowRecorder(SpaceTimeImage& img, bool discrete) : img_(img), discrete_(discrete) {}
  void on_grid(const SimState& s, std::size_t index, double) override {
    // Continuous grids start with t = 0, which is not a row.
    if (!discrete_ && index == 0) return;
    const std::size_t row = index - 1;
    if (row >= img_.height) return;
    for (VertexId v = 0; v < img_.width; ++v) {
      std::int32_t code = 0;
      for (ClusterId id : s.site_index[v]) {
        const Cluster& c = s.clusters[id];
        code += c.species == Species::A ? static_cast<std::int32_t>(c.size) : -static_cast<std::int32_t>(c.size);
      }
      img_.cells[row * img_.width + v] = code;
    }
  }

 private:
  SpaceTimeImage& img_;
  bool discrete_;
};

}  // namespace

SpaceTimeImage record_spacetime(const SimConfig& cfg, std::uint32_t rows) {
  cfg.validate();
  SpaceTimeImage img;
  img.width = cfg.vertex_count();
  img.height = cfg.mode == Mode::discrete ? cfg.steps : rows;
  img.cells.assign(static_cast<std::size_t>(img.width) * img.height, 0);
  RowRecorder rec(img, cfg.mode == Mode::discrete);
  Observer* obs[] = {&rec};
  if (cfg.mode == Mode::discrete || rows == 0) {
    run(cfg, obs);
  } else {
    std::vector<double> grid(rows + 1);
    for (std::uint32_t k = 0; k <= rows; ++k) grid[k] = cfg.horizon * k / rows;
    run(cfg, obs, grid);
  }
  return img;
}

}  // namespace dlacs::cli

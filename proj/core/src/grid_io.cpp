#include "subma/grid_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include "json.hpp"
#include "subma/errors.hpp"

namespace subma {

std::string format_double(double v, bool hex) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), hex ? "%a" : "%.17g", v);
  return buf;
}

double parse_double(const std::string& text) {
  const char* begin = text.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || end != begin + text.size())
    throw ValidationError("cannot parse number '" + text + "'");
  return v;
}

void write_text_file(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot open '" + tmp.string() + "' for writing");
    out << content;
    if (!out) throw ValidationError("write to '" + tmp.string() + "' failed");
  }
  fs::rename(tmp, target);
}

void write_grid_function(const GridFunction& u, const std::string& csv_path,
                         const std::string& json_path, const GridIoOptions& opts) {
  u.validate();
  const Grid& g = *u.grid;
  const int d = g.dim();

  std::ostringstream csv;
  if (opts.seed >= 0) csv << "# seed = " << opts.seed << "\n";
  for (int a = 0; a < d; ++a) csv << "x" << (a + 1) << ",";
  csv << "value\n";
  for (Eigen::Index flat = 0; flat < g.total_nodes(); ++flat) {
    const Eigen::VectorXd x = g.point(flat);
    for (int a = 0; a < d; ++a) csv << format_double(x[a], opts.hex_floats) << ",";
    csv << format_double(u.values[flat], opts.hex_floats) << "\n";
  }
  write_text_file(csv_path, csv.str());

  nlohmann::ordered_json meta;
  meta["format"] = "subma-grid";
  meta["version"] = 1;
  meta["encoding"] = opts.hex_floats ? "hex" : "decimal";
  meta["resolution"] = g.resolution();
  std::vector<std::string> lo, hi;
  for (int a = 0; a < d; ++a) {
    lo.push_back(format_double(g.box().lo[a], opts.hex_floats));
    hi.push_back(format_double(g.box().hi[a], opts.hex_floats));
  }
  meta["box"]["lo"] = lo;
  meta["box"]["hi"] = hi;
  meta["values_file"] = std::filesystem::path(csv_path).filename().string();
  if (opts.seed >= 0) meta["seed"] = opts.seed;
  write_text_file(json_path, meta.dump(2) + "\n");
}

GridFunction read_grid_function(const std::string& json_path) {
  std::ifstream in(json_path);
  if (!in) throw ValidationError("cannot open '" + json_path + "'");
  nlohmann::json meta;
  try {
    in >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(1, std::string("invalid grid metadata: ") + e.what());
  }
  if (meta.value("format", "") != "subma-grid")
    throw ValidationError("'" + json_path + "' is not a grid metadata file");

  const auto resolution = meta.at("resolution").get<std::vector<int>>();
  const auto lo_text = meta.at("box").at("lo").get<std::vector<std::string>>();
  const auto hi_text = meta.at("box").at("hi").get<std::vector<std::string>>();
  if (lo_text.size() != resolution.size() || hi_text.size() != resolution.size())
    throw ValidationError("grid metadata box/resolution dimensions differ");
  Box box;
  box.lo.resize(static_cast<Eigen::Index>(lo_text.size()));
  box.hi.resize(static_cast<Eigen::Index>(hi_text.size()));
  for (std::size_t a = 0; a < lo_text.size(); ++a) {
    box.lo[static_cast<Eigen::Index>(a)] = parse_double(lo_text[a]);
    box.hi[static_cast<Eigen::Index>(a)] = parse_double(hi_text[a]);
  }
  auto grid = std::make_shared<Grid>(std::move(box), resolution);

  const std::filesystem::path csv_path =
      std::filesystem::path(json_path).parent_path() /
      meta.at("values_file").get<std::string>();
  std::ifstream csv(csv_path);
  if (!csv) throw ValidationError("cannot open '" + csv_path.string() + "'");

  GridFunction u;
  u.values.resize(grid->total_nodes());
  std::string line;
  int lineno = 0;
  bool header_seen = false;
  Eigen::Index row = 0;
  while (std::getline(csv, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;  // column header row
      continue;
    }
    if (row >= grid->total_nodes())
      throw ParseError(lineno, "more rows than grid nodes");
    const std::size_t comma = line.find_last_of(',');
    if (comma == std::string::npos) throw ParseError(lineno, "missing value column");
    try {
      u.values[row] = parse_double(line.substr(comma + 1));
    } catch (const ValidationError& e) {
      throw ParseError(lineno, e.what());
    }
    ++row;
  }
  if (row != grid->total_nodes())
    throw ParseError(lineno, "grid CSV has " + std::to_string(row) + " rows, expected " +
                                 std::to_string(grid->total_nodes()));
  u.grid = std::move(grid);
  return u;
}

}  // namespace subma

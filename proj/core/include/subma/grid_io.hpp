#pragma once

#include <string>

#include "subma/grid.hpp"

namespace subma {

struct GridIoOptions {
  /// Encode coordinates and values as C99 hexadecimal floats so that a
  /// write/read round trip reproduces every double bit-exactly.
  bool hex_floats = false;
  /// Recorded in the JSON metadata when nonnegative (pipelines stamp their
  /// run seed into every artifact).
  long long seed = -1;
};

/// Canonical representation of a double, "%.17g" or "%a".
std::string format_double(double v, bool hex);

/// Inverse of format_double for either encoding.
double parse_double(const std::string& text);

/// Write `u` as a CSV table (x1..xn,value per node, flat order) plus a JSON
/// metadata file describing the grid and the encoding. Both files are written
/// atomically (temp file then rename).
void write_grid_function(const GridFunction& u, const std::string& csv_path,
                         const std::string& json_path, const GridIoOptions& opts = {});

/// Read a grid function back from its JSON metadata file. The CSV path is
/// resolved relative to the metadata file's directory.
GridFunction read_grid_function(const std::string& json_path);

/// Atomic text file write used by all serialization paths.
void write_text_file(const std::string& path, const std::string& content);

}  // namespace subma

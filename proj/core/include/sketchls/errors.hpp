#pragma once

#include <stdexcept>
#include <string>

namespace sketchls {

// Malformed input files (CSV, config JSON).
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Numeric / data-shape failures (rank deficiency, threshold violations).
struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace sketchls

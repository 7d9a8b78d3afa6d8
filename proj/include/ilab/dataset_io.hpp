#pragma once

// Dataset directory format:
//
//   units.csv       unit_id,eligible[,x_1,...,x_k]
//   treatments.csv  unit_id,t,w        t in 1..T
//   outcomes.csv    unit_id,t,y        t in 0..T
//   graph.csv       treatment_unit_id,connected_unit_id,weight   (optional)
//   meta.json       {"design", "n_periods", "pre_period_end"[, "n_connected" | "connected_units"]}
//
// Rows are written sorted by unit id then time; graphs are written in
// canonical order (units and edges sorted by id).

#include "ilab/core.hpp"

#include <filesystem>
#include <string>

namespace ilab {

class ParseError : public ValidationError {
 public:
  ParseError(std::string file, std::size_t line, const std::string& what);

  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

/// Shortest decimal text that parses back to exactly `v`.
std::string format_real(double v);

/// Throws ParseError for malformed files and ValidationError when the
/// parsed dataset violates an invariant.
ExperimentDataset load_dataset(const std::filesystem::path& dir);

/// Creates `dir` if needed. Throws std::runtime_error on I/O failure and
/// ValidationError if `d` is invalid.
void save_dataset(const ExperimentDataset& d, const std::filesystem::path& dir);

}  // namespace ilab

#pragma once

// CSV, statistics and SVG helpers for experiment outputs.

#include "pmpo/em_exact.hpp"
#include "pmpo/trainer.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace pmpo {

inline constexpr const char* kRunCsvSchema = "pmpo-run-1";
inline constexpr const char* kEmCsvSchema = "pmpo-em-1";

// Columns: schema, iteration, score, metric, loss, accept_term, reject_term,
// kl_term, kl_estimate, param_norm. Wall-clock time is left out so that
// repeated runs give byte-identical files.
void write_run_csv(std::ostream& out, const std::vector<IterationRecord>& records);
// Columns: schema, iteration, expected_value, tv_change (empty on row 0).
void write_em_csv(std::ostream& out, const EmTrajectory& trajectory);

// Linear-interpolation quantile (q in [0, 1]) of a nonempty sample.
double quantile(std::vector<double> values, double q);

struct Quartiles {
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
};
Quartiles quartiles(const std::vector<double>& values);

struct SvgSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> band_low;   // optional shaded band (same length as x)
  std::vector<double> band_high;
};

struct SvgPlot {
  std::string title;
  std::string x_label = "iteration";
  std::string y_label;
  bool log_y = false;
  std::vector<SvgSeries> series;

  // Non-finite points (and non-positive ones on a log axis) are skipped.
  std::string render() const;
};

}  // namespace pmpo

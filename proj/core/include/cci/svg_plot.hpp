#pragma once

// Per-sample prediction rows and their interval plots.
//
// A plot row is a 400x60 canvas: the [0, 1] axis is split into a green
// negative region [0, 0.5) and a red positive region [0.5, 1], the interval
// is a purple band and the point prediction a blue tick.

#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cci/decision.hpp"
#include "cci/event_model.hpp"

namespace cci {

struct PredictionRow {
  std::string participant_id;
  Date date;
  double p_hat = 0.5;
  ProbInterval interval;
  Outcome outcome = Outcome::kAbstain;
  int label = 0;
};

inline constexpr std::string_view kPredictionsHeader = "participant_id,date,p_hat,lo,hi,outcome,label";

void write_predictions_csv(std::ostream& out, std::span<const PredictionRow> rows);
void write_predictions_csv(const std::filesystem::path& path, std::span<const PredictionRow> rows);

// Thrown by the readers; bad_lines holds 1-based line numbers.
class PredictionsFormatError : public std::runtime_error {
 public:
  PredictionsFormatError(const std::string& what, std::vector<std::size_t> bad_lines)
      : std::runtime_error(what), bad_lines_(std::move(bad_lines)) {}
  const std::vector<std::size_t>& bad_lines() const { return bad_lines_; }

 private:
  std::vector<std::size_t> bad_lines_;
};

std::vector<PredictionRow> read_predictions_csv(std::istream& in);
std::vector<PredictionRow> read_predictions_csv(const std::filesystem::path& path);

inline constexpr int kPlotWidth = 400;
inline constexpr int kPlotRowHeight = 60;

inline constexpr std::string_view kNegativeColor = "#2ca02c";
inline constexpr std::string_view kPositiveColor = "#d62728";
inline constexpr std::string_view kBandColor = "#9467bd";
inline constexpr std::string_view kTickColor = "#1f77b4";

std::string render_interval_svg(const PredictionRow& row);
// All rows stacked vertically, one 400x60 row each.
std::string render_strip_svg(std::span<const PredictionRow> rows);

// Writes <stem>_NNN.svg per row and <stem>_strip.svg into out_dir; returns
// the written paths in order.
std::vector<std::filesystem::path> write_interval_plots(std::span<const PredictionRow> rows,
                                                        const std::filesystem::path& out_dir,
                                                        const std::string& stem);

}  // namespace cci

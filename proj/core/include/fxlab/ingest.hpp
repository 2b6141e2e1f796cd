#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "fxlab/series.hpp"

namespace fxlab {

enum class FillPolicy { forward_fill, drop_incomplete };

FillPolicy fill_policy_from_string(const std::string& s);
std::string to_string(FillPolicy p);

// CSV with a header row; `date_column` must parse as ISO-8601, remaining
// cells as numbers (empty cell = missing). Rows come back sorted by date;
// duplicate dates are an error.
SeriesFrame load_series_csv(const std::string& path,
                            const std::string& date_column = "date",
                            const std::vector<std::string>& value_columns = {});

// Join several frames into one. drop_incomplete keeps only dates present in
// every frame with no missing cell; forward_fill takes the union of dates
// and fills gaps from the previous observation (rows before the first
// observation of some column are dropped).
SeriesFrame align_and_fill(const std::vector<SeriesFrame>& frames,
                           FillPolicy policy);

// Round-trips with load_series_csv: date column first, %.17g cells,
// missing values as empty cells.
void write_series_csv(const std::string& path, const SeriesFrame& frame,
                      const std::string& date_column = "date");

// Scaler fitted on `fit_rows` only; the transformed frame covers all rows,
// so later rows may land outside [0,1].
std::pair<SeriesFrame, MinMaxScaler> minmax_normalize(
    const SeriesFrame& frame, const std::vector<int>& fit_rows);

// Direction label per day t=2..n: 1 when close_t >= close_{t-1}, else 0.
std::vector<int> make_direction_labels(const Eigen::VectorXd& closes);

// Sliding windows for one-step-ahead training. Window k covers rows
// [k, k+timesteps); its target is `target_column` at row
// k + timesteps + horizon - 1.
struct SupervisedSet {
  std::vector<Eigen::MatrixXd> windows;  // each timesteps x features
  Eigen::VectorXd targets;
  std::vector<int> target_rows;  // row in the source frame
  std::vector<Date> target_dates;
  std::vector<std::string> feature_names;
  MinMaxScaler scaler;  // whatever scaling produced the source frame

  std::size_t size() const { return windows.size(); }
};

SupervisedSet make_supervised_windows(const SeriesFrame& frame01,
                                      const std::string& target_column,
                                      int timesteps, int horizon = 1);

// Train / context / forecast split by explicit dates. Dates that fall
// between trading days snap to the next trading date. The context window
// is the `context_days` rows immediately before the forecast start.
struct SegmentationSpec {
  Date train_start;
  Date train_end;
  int context_days = 0;
  Date forecast_start;
  Date forecast_end;
};

struct Segments {
  std::vector<int> train;
  std::vector<int> context;
  std::vector<int> forecast;
};

Segments segment(const SeriesFrame& frame, const SegmentationSpec& spec);

}  // namespace fxlab

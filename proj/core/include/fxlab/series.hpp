#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "fxlab/date.hpp"

namespace fxlab {

// Dated, aligned multivariate numeric series. Rows are dates (strictly
// increasing), columns are named series. NaN marks a missing cell.
class SeriesFrame {
 public:
  SeriesFrame() = default;
  SeriesFrame(std::vector<Date> dates, std::vector<std::string> names,
              Eigen::MatrixXd values);

  Eigen::Index rows() const { return values_.rows(); }
  Eigen::Index cols() const { return values_.cols(); }
  bool empty() const { return rows() == 0; }

  const std::vector<Date>& dates() const { return dates_; }
  const std::vector<std::string>& names() const { return names_; }
  const Eigen::MatrixXd& values() const { return values_; }

  double at(Eigen::Index row, Eigen::Index col) const {
    return values_(row, col);
  }

  // -1 when the name is unknown.
  int find_column(const std::string& name) const;
  // Throws when the name is unknown.
  int column_index(const std::string& name) const;
  Eigen::VectorXd column(const std::string& name) const;

  bool has_missing() const;

  // Appends a column; length must match rows().
  void add_column(const std::string& name, const Eigen::VectorXd& v);

  SeriesFrame select_columns(const std::vector<std::string>& names) const;
  SeriesFrame take_rows(const std::vector<int>& rows) const;

  // Index of the first date >= d (snap to next trading date); -1 if past
  // the end.
  int snap_index(Date d) const;
  // Exact match only; -1 when absent.
  int exact_index(Date d) const;

 private:
  std::vector<Date> dates_;
  std::vector<std::string> names_;
  Eigen::MatrixXd values_;
};

// Per-column (min, max) fitted on a chosen row subset. Constant columns
// map to 0.5 instead of dividing by zero.
class MinMaxScaler {
 public:
  struct ColumnScale {
    double min = 0.0;
    double max = 1.0;
    bool constant = false;
  };

  MinMaxScaler() = default;

  static MinMaxScaler fit(const SeriesFrame& frame,
                          const std::vector<int>& fit_rows);

  SeriesFrame transform(const SeriesFrame& frame) const;

  double transform_value(int col, double x) const;
  double invert_value(int col, double y) const;

  const std::vector<ColumnScale>& columns() const { return cols_; }
  const std::vector<std::string>& names() const { return names_; }
  bool fitted() const { return !cols_.empty(); }

 private:
  std::vector<ColumnScale> cols_;
  std::vector<std::string> names_;
};

}  // namespace fxlab

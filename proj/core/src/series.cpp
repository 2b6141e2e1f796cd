#include "fxlab/series.hpp"

#include <algorithm>

#include "fxlab/error.hpp"

namespace fxlab {

SeriesFrame::SeriesFrame(std::vector<Date> dates, std::vector<std::string> names,
                         Eigen::MatrixXd values)
    : dates_(std::move(dates)),
      names_(std::move(names)),
      values_(std::move(values)) {
  if (Eigen::Index(dates_.size()) != values_.rows()) {
    throw Error("SeriesFrame: date count does not match row count");
  }
  if (Eigen::Index(names_.size()) != values_.cols()) {
    throw Error("SeriesFrame: name count does not match column count");
  }
  for (std::size_t i = 1; i < dates_.size(); ++i) {
    if (!(dates_[i - 1] < dates_[i])) {
      throw Error("SeriesFrame: dates not strictly increasing at " +
                  dates_[i].to_string());
    }
  }
}

int SeriesFrame::find_column(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  return it == names_.end() ? -1 : int(it - names_.begin());
}

int SeriesFrame::column_index(const std::string& name) const {
  int idx = find_column(name);
  if (idx < 0) throw Error("unknown column '" + name + "'");
  return idx;
}

Eigen::VectorXd SeriesFrame::column(const std::string& name) const {
  return values_.col(column_index(name));
}

bool SeriesFrame::has_missing() const { return values_.hasNaN(); }

void SeriesFrame::add_column(const std::string& name, const Eigen::VectorXd& v) {
  if (v.size() != rows()) {
    throw Error("add_column '" + name + "': length mismatch");
  }
  if (find_column(name) >= 0) {
    throw Error("add_column: column '" + name + "' already exists");
  }
  values_.conservativeResize(Eigen::NoChange, values_.cols() + 1);
  values_.col(values_.cols() - 1) = v;
  names_.push_back(name);
}

SeriesFrame SeriesFrame::select_columns(
    const std::vector<std::string>& names) const {
  Eigen::MatrixXd out(rows(), Eigen::Index(names.size()));
  for (std::size_t j = 0; j < names.size(); ++j) {
    out.col(Eigen::Index(j)) = values_.col(column_index(names[j]));
  }
  return SeriesFrame(dates_, names, std::move(out));
}

SeriesFrame SeriesFrame::take_rows(const std::vector<int>& rows_idx) const {
  std::vector<Date> d;
  d.reserve(rows_idx.size());
  Eigen::MatrixXd out(Eigen::Index(rows_idx.size()), cols());
  for (std::size_t i = 0; i < rows_idx.size(); ++i) {
    int r = rows_idx[i];
    if (r < 0 || r >= rows()) throw Error("take_rows: index out of range");
    d.push_back(dates_[std::size_t(r)]);
    out.row(Eigen::Index(i)) = values_.row(r);
  }
  return SeriesFrame(std::move(d), names_, std::move(out));
}

int SeriesFrame::snap_index(Date d) const {
  auto it = std::lower_bound(dates_.begin(), dates_.end(), d);
  return it == dates_.end() ? -1 : int(it - dates_.begin());
}

int SeriesFrame::exact_index(Date d) const {
  int idx = snap_index(d);
  return (idx >= 0 && dates_[std::size_t(idx)] == d) ? idx : -1;
}

MinMaxScaler MinMaxScaler::fit(const SeriesFrame& frame,
                               const std::vector<int>& fit_rows) {
  if (fit_rows.empty()) throw Error("minmax fit: no fit rows");
  MinMaxScaler s;
  s.names_ = frame.names();
  s.cols_.resize(std::size_t(frame.cols()));
  for (Eigen::Index c = 0; c < frame.cols(); ++c) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int r : fit_rows) {
      double x = frame.at(r, c);
      if (std::isnan(x)) {
        throw Error("minmax fit: missing cell in column '" + s.names_[c] + "'");
      }
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    s.cols_[std::size_t(c)] = {lo, hi, hi <= lo};
  }
  return s;
}

SeriesFrame MinMaxScaler::transform(const SeriesFrame& frame) const {
  if (std::size_t(frame.cols()) != cols_.size()) {
    throw Error("minmax transform: column count mismatch");
  }
  Eigen::MatrixXd out(frame.rows(), frame.cols());
  for (Eigen::Index c = 0; c < frame.cols(); ++c) {
    for (Eigen::Index r = 0; r < frame.rows(); ++r) {
      out(r, c) = transform_value(int(c), frame.at(r, c));
    }
  }
  return SeriesFrame(frame.dates(), frame.names(), std::move(out));
}

double MinMaxScaler::transform_value(int col, double x) const {
  const ColumnScale& cs = cols_.at(std::size_t(col));
  if (cs.constant) return 0.5;
  return (x - cs.min) / (cs.max - cs.min);
}

double MinMaxScaler::invert_value(int col, double y) const {
  const ColumnScale& cs = cols_.at(std::size_t(col));
  if (cs.constant) return cs.min;
  return cs.min + y * (cs.max - cs.min);
}

}  // namespace fxlab

#include "fxlab/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "fxlab/error.hpp"
#include "fxlab/io.hpp"

namespace fxlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  out.push_back(std::move(field));
  return out;
}

double parse_cell(const std::string& cell, int lineno, const std::string& col) {
  if (cell.empty()) return kNaN;
  std::size_t pos = 0;
  double v;
  try {
    v = std::stod(cell, &pos);
  } catch (const std::exception&) {
    throw Error("csv line " + std::to_string(lineno) + ": column '" + col +
                "': cannot parse '" + cell + "' as number");
  }
  while (pos < cell.size() && std::isspace(static_cast<unsigned char>(cell[pos])))
    ++pos;
  if (pos != cell.size()) {
    throw Error("csv line " + std::to_string(lineno) + ": column '" + col +
                "': trailing junk in '" + cell + "'");
  }
  return v;
}

}  // namespace

FillPolicy fill_policy_from_string(const std::string& s) {
  if (s == "forward_fill") return FillPolicy::forward_fill;
  if (s == "drop_incomplete") return FillPolicy::drop_incomplete;
  throw Error("unknown fill policy '" + s + "'");
}

std::string to_string(FillPolicy p) {
  return p == FillPolicy::forward_fill ? "forward_fill" : "drop_incomplete";
}

SeriesFrame load_series_csv(const std::string& path,
                            const std::string& date_column,
                            const std::vector<std::string>& value_columns) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open series file '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw Error("'" + path + "': empty file");
  std::vector<std::string> header = split_csv_line(line);

  int date_idx = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == date_column) date_idx = int(i);
  }
  if (date_idx < 0) {
    throw Error("'" + path + "': no '" + date_column + "' column in header");
  }

  std::vector<int> value_idx;
  std::vector<std::string> names;
  if (value_columns.empty()) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (int(i) != date_idx) {
        value_idx.push_back(int(i));
        names.push_back(header[i]);
      }
    }
  } else {
    for (const auto& want : value_columns) {
      auto it = std::find(header.begin(), header.end(), want);
      if (it == header.end()) {
        throw Error("'" + path + "': no column '" + want + "' in header");
      }
      value_idx.push_back(int(it - header.begin()));
      names.push_back(want);
    }
  }
  if (names.empty()) throw Error("'" + path + "': no value columns");

  struct Row {
    Date date;
    std::vector<double> cells;
  };
  std::vector<Row> parsed;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw Error("csv line " + std::to_string(lineno) + ": expected " +
                  std::to_string(header.size()) + " fields, got " +
                  std::to_string(cells.size()));
    }
    Row row;
    try {
      row.date = Date::parse(cells[std::size_t(date_idx)]);
    } catch (const Error& e) {
      throw Error("csv line " + std::to_string(lineno) + ": " + e.what());
    }
    for (std::size_t j = 0; j < value_idx.size(); ++j) {
      row.cells.push_back(
          parse_cell(cells[std::size_t(value_idx[j])], lineno, names[j]));
    }
    parsed.push_back(std::move(row));
  }
  if (parsed.empty()) throw Error("'" + path + "': no data rows");

  std::stable_sort(parsed.begin(), parsed.end(),
                   [](const Row& a, const Row& b) { return a.date < b.date; });
  for (std::size_t i = 1; i < parsed.size(); ++i) {
    if (parsed[i].date == parsed[i - 1].date) {
      throw Error("'" + path + "': duplicate date " +
                  parsed[i].date.to_string());
    }
  }

  std::vector<Date> dates;
  Eigen::MatrixXd values(Eigen::Index(parsed.size()),
                         Eigen::Index(names.size()));
  for (std::size_t r = 0; r < parsed.size(); ++r) {
    dates.push_back(parsed[r].date);
    for (std::size_t c = 0; c < names.size(); ++c) {
      values(Eigen::Index(r), Eigen::Index(c)) = parsed[r].cells[c];
    }
  }
  return SeriesFrame(std::move(dates), std::move(names), std::move(values));
}

SeriesFrame align_and_fill(const std::vector<SeriesFrame>& frames,
                           FillPolicy policy) {
  if (frames.empty()) throw Error("align_and_fill: no input frames");

  std::vector<std::string> names;
  for (const auto& f : frames) {
    for (const auto& n : f.names()) {
      if (std::find(names.begin(), names.end(), n) != names.end()) {
        throw Error("align_and_fill: duplicate column name '" + n + "'");
      }
      names.push_back(n);
    }
  }

  std::vector<Date> dates;
  if (policy == FillPolicy::drop_incomplete) {
    std::set<Date> common(frames[0].dates().begin(), frames[0].dates().end());
    for (std::size_t i = 1; i < frames.size(); ++i) {
      std::set<Date> next;
      for (const Date& d : frames[i].dates()) {
        if (common.count(d)) next.insert(d);
      }
      common.swap(next);
    }
    dates.assign(common.begin(), common.end());
  } else {
    std::set<Date> all;
    for (const auto& f : frames) all.insert(f.dates().begin(), f.dates().end());
    dates.assign(all.begin(), all.end());
  }
  if (dates.empty()) throw Error("align_and_fill: empty date intersection");

  Eigen::MatrixXd values(Eigen::Index(dates.size()), Eigen::Index(names.size()));
  values.setConstant(kNaN);
  Eigen::Index col0 = 0;
  for (const auto& f : frames) {
    for (std::size_t r = 0; r < dates.size(); ++r) {
      int src = f.exact_index(dates[r]);
      if (src < 0) continue;
      for (Eigen::Index c = 0; c < f.cols(); ++c) {
        values(Eigen::Index(r), col0 + c) = f.at(src, c);
      }
    }
    col0 += f.cols();
  }

  if (policy == FillPolicy::forward_fill) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      double last = kNaN;
      for (Eigen::Index r = 0; r < values.rows(); ++r) {
        if (std::isnan(values(r, c))) {
          values(r, c) = last;
        } else {
          last = values(r, c);
        }
      }
    }
  }

  // Drop rows that still have holes: with forward_fill these are only the
  // leading rows before some column's first observation.
  std::vector<int> keep;
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    if (!values.row(r).hasNaN()) keep.push_back(int(r));
  }
  if (keep.empty()) throw Error("align_and_fill: empty date intersection");

  std::vector<Date> out_dates;
  Eigen::MatrixXd out(Eigen::Index(keep.size()), values.cols());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    out_dates.push_back(dates[std::size_t(keep[i])]);
    out.row(Eigen::Index(i)) = values.row(keep[i]);
  }
  return SeriesFrame(std::move(out_dates), std::move(names), std::move(out));
}

void write_series_csv(const std::string& path, const SeriesFrame& frame,
                      const std::string& date_column) {
  CsvBuilder csv;
  std::vector<std::string> header = {date_column};
  header.insert(header.end(), frame.names().begin(), frame.names().end());
  csv.row(header);
  for (Eigen::Index r = 0; r < frame.rows(); ++r) {
    std::vector<std::string> cells = {
        frame.dates()[std::size_t(r)].to_string()};
    for (Eigen::Index c = 0; c < frame.cols(); ++c) {
      double v = frame.at(r, c);
      cells.push_back(std::isnan(v) ? std::string{} : fmt_exact(v));
    }
    csv.row(cells);
  }
  csv.write(path);
}

std::pair<SeriesFrame, MinMaxScaler> minmax_normalize(
    const SeriesFrame& frame, const std::vector<int>& fit_rows) {
  MinMaxScaler scaler = MinMaxScaler::fit(frame, fit_rows);
  return {scaler.transform(frame), scaler};
}

std::vector<int> make_direction_labels(const Eigen::VectorXd& closes) {
  if (closes.size() < 2) {
    throw Error("make_direction_labels: need at least 2 observations");
  }
  std::vector<int> labels;
  labels.reserve(std::size_t(closes.size() - 1));
  for (Eigen::Index t = 1; t < closes.size(); ++t) {
    labels.push_back(closes(t) >= closes(t - 1) ? 1 : 0);
  }
  return labels;
}

SupervisedSet make_supervised_windows(const SeriesFrame& frame01,
                                      const std::string& target_column,
                                      int timesteps, int horizon) {
  if (timesteps < 1) throw Error("make_supervised_windows: timesteps < 1");
  if (horizon < 1) throw Error("make_supervised_windows: horizon < 1");
  const Eigen::Index n = frame01.rows();
  const Eigen::Index count = n - timesteps - horizon + 1;
  if (count < 1) {
    throw Error("make_supervised_windows: need at least " +
                std::to_string(timesteps + horizon) + " rows, have " +
                std::to_string(n));
  }
  int target_col = frame01.column_index(target_column);

  SupervisedSet set;
  set.feature_names = frame01.names();
  set.windows.reserve(std::size_t(count));
  set.targets.resize(count);
  for (Eigen::Index k = 0; k < count; ++k) {
    set.windows.push_back(
        frame01.values().block(k, 0, timesteps, frame01.cols()));
    Eigen::Index target_row = k + timesteps + horizon - 1;
    set.targets(k) = frame01.at(target_row, target_col);
    set.target_rows.push_back(int(target_row));
    set.target_dates.push_back(frame01.dates()[std::size_t(target_row)]);
  }
  return set;
}

Segments segment(const SeriesFrame& frame, const SegmentationSpec& spec) {
  if (!(spec.train_end < spec.forecast_start)) {
    throw Error("segment: train_end must precede forecast_start");
  }
  if (spec.context_days < 0) throw Error("segment: negative context_days");

  int train_begin = frame.snap_index(spec.train_start);
  int train_last = frame.snap_index(spec.train_end);
  int forecast_begin = frame.snap_index(spec.forecast_start);
  int forecast_last = frame.snap_index(spec.forecast_end);
  if (train_begin < 0 || forecast_begin < 0) {
    throw Error("segment: segment start beyond last frame date");
  }
  // snap_index(train_end) lands on the next trading day when train_end is
  // off-calendar; pull back inside the stated range.
  if (train_last < 0 ||
      frame.dates()[std::size_t(train_last)] > spec.train_end) {
    --train_last;
  }
  if (forecast_last < 0 ||
      frame.dates()[std::size_t(forecast_last)] > spec.forecast_end) {
    --forecast_last;
  }

  int context_begin = forecast_begin - spec.context_days;
  if (train_last >= train_begin && context_begin <= train_last) {
    throw Error("segment: context window overlaps training rows");
  }
  if (context_begin < 0) {
    throw Error("segment: context window starts before first frame row");
  }
  if (train_last < train_begin) throw Error("segment: empty training segment");
  if (forecast_last < forecast_begin) {
    throw Error("segment: empty forecast segment");
  }

  Segments seg;
  for (int r = train_begin; r <= train_last; ++r) seg.train.push_back(r);
  for (int r = context_begin; r < forecast_begin; ++r) seg.context.push_back(r);
  for (int r = forecast_begin; r <= forecast_last; ++r)
    seg.forecast.push_back(r);
  return seg;
}

}  // namespace fxlab

#include <doctest.h>

#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "fxlab/error.hpp"
#include "fxlab/ingest.hpp"
#include "fxlab/io.hpp"
#include "fxlab/rng.hpp"

using namespace fxlab;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("fxlab-ingest-" + std::to_string(::getpid()) + "-" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name, const std::string& body) {
    std::string p = (path / name).string();
    write_file_atomic(p, body);
    return p;
  }
};

SeriesFrame frame_of(const std::vector<const char*>& dates,
                     const std::vector<std::string>& names,
                     const Eigen::MatrixXd& values) {
  std::vector<Date> dd;
  for (const char* d : dates) dd.push_back(Date::parse(d));
  return SeriesFrame(dd, names, values);
}

}  // namespace

TEST_CASE("load_series_csv: identity load, sorting, errors") {
  TempDir tmp;
  std::string p = tmp.file("a.csv",
                           "date,close\n"
                           "2020-01-02,1.5\n"
                           "2020-01-03,1.6\n"
                           "2020-01-06,1.7\n");
  SeriesFrame f = load_series_csv(p);
  REQUIRE(f.rows() == 3);
  REQUIRE(f.cols() == 1);
  CHECK(f.names()[0] == "close");
  CHECK(f.at(0, 0) == doctest::Approx(1.5));
  CHECK(f.dates()[2] == Date::parse("2020-01-06"));

  // shuffled input comes back date-sorted; oracle = std::sort on the dates
  std::string q = tmp.file("b.csv",
                           "date,x\n"
                           "2020-01-06,3\n"
                           "2020-01-02,1\n"
                           "2020-01-03,2\n");
  SeriesFrame g = load_series_csv(q);
  std::vector<Date> sorted = g.dates();
  std::vector<Date> oracle = sorted;
  std::sort(oracle.begin(), oracle.end());
  CHECK(sorted == oracle);
  CHECK(g.at(0, 0) == doctest::Approx(1.0));
  CHECK(g.at(2, 0) == doctest::Approx(3.0));

  std::string dup = tmp.file("dup.csv",
                             "date,x\n2020-01-02,1\n2020-01-02,2\n");
  CHECK_THROWS_WITH_AS(load_series_csv(dup),
                       doctest::Contains("duplicate date"), Error);

  std::string bad = tmp.file("bad.csv", "date,x\n2020-01-02,1,9\n");
  CHECK_THROWS_AS(load_series_csv(bad), Error);
  CHECK_THROWS_AS(load_series_csv((tmp.path / "missing.csv").string()), Error);
}

TEST_CASE("load_series_csv: value_columns selection and missing cells") {
  TempDir tmp;
  std::string p = tmp.file("m.csv",
                           "date,a,b\n"
                           "2020-01-02,1,\n"
                           "2020-01-03,2,5\n");
  SeriesFrame f = load_series_csv(p, "date", {"b"});
  REQUIRE(f.cols() == 1);
  CHECK(std::isnan(f.at(0, 0)));
  CHECK(f.at(1, 0) == doctest::Approx(5.0));
  CHECK(f.has_missing());
}

TEST_CASE("write_series_csv round-trips") {
  TempDir tmp;
  Eigen::MatrixXd v(2, 2);
  v << 1.25, std::nan(""), -3.5, 0.125;
  SeriesFrame f =
      frame_of({"2020-01-02", "2020-01-03"}, {"a", "b"}, v);
  std::string p = (tmp.path / "rt.csv").string();
  write_series_csv(p, f);
  SeriesFrame g = load_series_csv(p);
  REQUIRE(g.rows() == 2);
  CHECK(g.at(0, 0) == 1.25);
  CHECK(std::isnan(g.at(0, 1)));
  CHECK(g.at(1, 1) == 0.125);
  CHECK(g.names() == f.names());
}

TEST_CASE("align_and_fill: identity, forward fill, disjoint ranges") {
  Eigen::MatrixXd v(3, 1);
  v << 1, 2, 3;
  SeriesFrame a =
      frame_of({"2020-01-02", "2020-01-03", "2020-01-06"}, {"x"}, v);
  SeriesFrame a2 =
      frame_of({"2020-01-02", "2020-01-03", "2020-01-06"}, {"x2"}, v);
  SeriesFrame same = align_and_fill({a, a2}, FillPolicy::drop_incomplete);
  REQUIRE(same.rows() == 3);
  CHECK(same.cols() == 2);
  CHECK(same.at(2, 0) == doctest::Approx(3.0));
  CHECK(same.at(2, 1) == doctest::Approx(3.0));
  // clashing column names are rejected outright
  CHECK_THROWS_AS(align_and_fill({a, a}, FillPolicy::drop_incomplete), Error);

  // y is missing 01-03; forward_fill carries 10 forward
  Eigen::MatrixXd w(2, 1);
  w << 10, 30;
  SeriesFrame b = frame_of({"2020-01-02", "2020-01-06"}, {"y"}, w);
  SeriesFrame filled = align_and_fill({a, b}, FillPolicy::forward_fill);
  REQUIRE(filled.rows() == 3);
  int yc = filled.column_index("y");
  CHECK(filled.at(0, yc) == doctest::Approx(10));
  CHECK(filled.at(1, yc) == doctest::Approx(10));  // filled from previous
  CHECK(filled.at(2, yc) == doctest::Approx(30));
  CHECK_FALSE(filled.has_missing());

  // drop_incomplete keeps only fully observed shared dates
  SeriesFrame dropped = align_and_fill({a, b}, FillPolicy::drop_incomplete);
  REQUIRE(dropped.rows() == 2);
  CHECK(dropped.dates()[0] == Date::parse("2020-01-02"));
  CHECK(dropped.dates()[1] == Date::parse("2020-01-06"));

  Eigen::MatrixXd z(2, 1);
  z << 5, 6;
  SeriesFrame c = frame_of({"2021-05-03", "2021-05-04"}, {"z"}, z);
  CHECK_THROWS_AS(align_and_fill({a, c}, FillPolicy::drop_incomplete), Error);
}

TEST_CASE("minmax scaler: worked examples and round trip") {
  Eigen::MatrixXd v(3, 2);
  v << 1, 5, 2, 5, 3, 5;
  SeriesFrame f =
      frame_of({"2020-01-02", "2020-01-03", "2020-01-06"}, {"a", "c"}, v);

  // fit on the first two rows only: column a maps [1,2] -> [0,1], row 3
  // extrapolates to 2; constant column maps to 0.5
  auto [f01, scaler] = minmax_normalize(f, {0, 1});
  CHECK(f01.at(0, 0) == doctest::Approx(0.0));
  CHECK(f01.at(1, 0) == doctest::Approx(1.0));
  CHECK(f01.at(2, 0) == doctest::Approx(2.0));
  CHECK(f01.at(0, 1) == doctest::Approx(0.5));
  CHECK(f01.at(2, 1) == doctest::Approx(0.5));

  // full fit maps onto [0,1]
  auto [g01, s2] = minmax_normalize(f, {0, 1, 2});
  CHECK(g01.at(0, 0) == doctest::Approx(0.0));
  CHECK(g01.at(2, 0) == doctest::Approx(1.0));

  // round trip on non-constant columns
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    double x = rng.uniform(-10, 10);
    double y = s2.transform_value(0, x);
    CHECK(std::abs(s2.invert_value(0, y) - x) <= 1e-12);
  }
}

TEST_CASE("direction labels") {
  Eigen::VectorXd closes(4);
  closes << 1.0, 1.1, 1.05, 1.05;
  std::vector<int> labels = make_direction_labels(closes);
  CHECK(labels == std::vector<int>{1, 0, 1});  // equality counts as up

  Eigen::VectorXd inc(5);
  inc << 1, 2, 3, 4, 5;
  auto all_up = make_direction_labels(inc);
  CHECK(std::count(all_up.begin(), all_up.end(), 1) == 4);

  Eigen::VectorXd dec(4);
  dec << 5, 4, 3, 2;
  auto all_down = make_direction_labels(dec);
  CHECK(std::count(all_down.begin(), all_down.end(), 0) == 3);

  Eigen::VectorXd one(1);
  one << 1;
  CHECK_THROWS_AS(make_direction_labels(one), Error);
}

TEST_CASE("supervised windows: counts and alignment") {
  const int n = 5;
  Eigen::MatrixXd v(n, 2);
  for (int i = 0; i < n; ++i) {
    v(i, 0) = i + 1;        // target 1..5
    v(i, 1) = 10 * (i + 1);  // feature
  }
  std::vector<Date> dates;
  Date d = Date::parse("2020-01-06");
  for (int i = 0; i < n; ++i) {
    dates.push_back(d);
    d = d.next_weekday();
  }
  SeriesFrame f(dates, {"close", "x"}, v);

  SupervisedSet s = make_supervised_windows(f, "close", 2, 1);
  REQUIRE(s.size() == 3);  // n - timesteps - horizon + 1
  // window k covers rows [k, k+2), target at row k+2
  for (std::size_t k = 0; k < s.size(); ++k) {
    CHECK(s.windows[k].rows() == 2);
    CHECK(s.windows[k].cols() == 2);
    CHECK(s.windows[k](0, 0) == doctest::Approx(v(int(k), 0)));
    CHECK(s.targets(Eigen::Index(k)) == doctest::Approx(v(int(k) + 2, 0)));
    CHECK(s.target_rows[k] == int(k) + 2);
    CHECK(s.target_dates[k] == dates[k + 2]);
  }

  SupervisedSet s1 = make_supervised_windows(f, "close", n - 1, 1);
  CHECK(s1.size() == 1);
  CHECK_THROWS_AS(make_supervised_windows(f, "close", n, 1), Error);
  CHECK_THROWS_AS(make_supervised_windows(f, "close", 0, 1), Error);
  CHECK_THROWS_AS(make_supervised_windows(f, "nope", 2, 1), Error);
}

TEST_CASE("segment: sizes, snapping, validation") {
  const int n = 100;
  std::vector<Date> dates;
  Date d = Date::parse("2020-01-06");
  for (int i = 0; i < n; ++i) {
    dates.push_back(d);
    d = d.next_weekday();
  }
  SeriesFrame f(dates, {"x"}, Eigen::MatrixXd::Zero(n, 1));

  SegmentationSpec spec;
  spec.train_start = dates[0];
  spec.train_end = dates[69];
  spec.context_days = 15;
  spec.forecast_start = dates[85];
  spec.forecast_end = dates[99];
  Segments seg = segment(f, spec);
  CHECK(seg.train.size() == 70);
  CHECK(seg.context.size() == 15);
  CHECK(seg.forecast.size() == 15);
  // context immediately precedes the forecast
  CHECK(seg.context.front() == 70);
  CHECK(seg.context.back() == 84);
  CHECK(seg.forecast.front() == 85);

  // weekend spec dates snap to the next trading date
  SegmentationSpec snap = spec;
  snap.train_start = Date::parse("2020-01-04");  // Saturday
  Segments seg2 = segment(f, snap);
  CHECK(seg2.train.front() == 0);

  SegmentationSpec bad = spec;
  bad.train_end = dates[90];  // train overlaps forecast
  CHECK_THROWS_AS(segment(f, bad), Error);

  SegmentationSpec empty = spec;
  empty.forecast_start = dates[99];
  empty.forecast_end = dates[85];
  CHECK_THROWS_AS(segment(f, empty), Error);
}

TEST_CASE("segment: paper-scale configuration is accepted") {
  // 1520 training days + 300 context days + 155 forecast days
  const int n = 1520 + 300 + 155;
  std::vector<Date> dates;
  Date d = Date::parse("2016-02-11");
  for (int i = 0; i < n; ++i) {
    dates.push_back(d);
    d = d.next_weekday();
  }
  SeriesFrame f(dates, {"x"}, Eigen::MatrixXd::Zero(n, 1));
  SegmentationSpec spec;
  spec.train_start = dates[0];
  spec.train_end = dates[1519];
  spec.context_days = 300;
  spec.forecast_start = dates[1820];
  spec.forecast_end = dates[size_t(n) - 1];
  Segments seg = segment(f, spec);
  CHECK(seg.train.size() == 1520);
  CHECK(seg.context.size() == 300);
  CHECK(seg.forecast.size() == 155);
}

#include <cmath>
#include <limits>

#include "doctest.h"
#include "tigh/dataprep.hpp"
#include "tigh/errors.hpp"

using namespace tigh;

TEST_SUITE_BEGIN("dataprep");

TEST_CASE("human footprint clipping") {
  auto v = clip_human_footprint({300.0, -1.0, 100.0, 0.0, 255.0, 256.0});
  CHECK(v == std::vector<double>{255.0, 1.0, 100.0, 0.0, 255.0, 255.0});

  auto w = clip_human_footprint({std::nan(""), 12.0});
  CHECK(std::isnan(w[0]));
  CHECK(w[1] == 12.0);

  CHECK(clip_human_footprint(v) == v);
}

TEST_CASE("mean imputation") {
  CHECK(impute_mean({1.0, std::nan(""), 3.0}) == std::vector<double>{1.0, 2.0, 3.0});
  CHECK_THROWS_AS(impute_mean({std::nan(""), std::nan("")}), InputError);
  CHECK(impute_mean({4.0, 5.0}) == std::vector<double>{4.0, 5.0});
}

TEST_CASE("one hot region encoding") {
  OneHotVocab v = OneHotVocab::from_values({"west", "east", "west", "north"});
  REQUIRE(v.categories.size() == 3);
  CHECK(v.index_of("east") == 0);
  CHECK(v.index_of("north") == 1);
  CHECK(v.index_of("west") == 2);
  CHECK(v.index_of("south") == -1);
  CHECK(v.encode("north") == std::vector<double>{0.0, 1.0, 0.0});
  CHECK(v.encode("south") == std::vector<double>{0.0, 0.0, 0.0});
  double s = 0.0;
  for (double x : v.encode("west")) s += x;
  CHECK(s == 1.0);
  CHECK_THROWS_AS(OneHotVocab::from_values({}), ConfigError);
}

TEST_CASE("label matrix encoding") {
  std::vector<long long> surveys = {10, 20, 30};
  std::vector<std::vector<int>> lists = {{0, 2, 0}, {}, {1}};
  LabelMatrix m = encode_labels(surveys, lists, 3);
  CHECK(std::vector<float>(m.row(0), m.row(0) + 3) == std::vector<float>{1.f, 0.f, 1.f});
  CHECK(std::vector<float>(m.row(1), m.row(1) + 3) == std::vector<float>{0.f, 0.f, 0.f});
  CHECK(std::vector<float>(m.row(2), m.row(2) + 3) == std::vector<float>{0.f, 1.f, 0.f});
  CHECK(m.species_of(0) == std::vector<int>{0, 2});
  CHECK(m.species_of(1).empty());

  CHECK_THROWS_AS(encode_labels(surveys, {{3}, {}, {}}, 3), InputError);
  CHECK_THROWS_AS(encode_labels(surveys, {{-1}, {}, {}}, 3), InputError);
  CHECK_THROWS_AS(encode_labels(surveys, {{0}, {}}, 3), InputError);
}

TEST_CASE("time series folding") {
  std::vector<std::vector<double>> series(1);
  for (int i = 0; i < 24; ++i) series[0].push_back(i);
  TemporalCube c = fold_time_series(series, 12);
  REQUIRE(c.channels == 1);
  REQUIRE(c.rows == 2);
  REQUIRE(c.cols == 12);
  CHECK(c.at(0, 0, 0) == 0.0f);
  CHECK(c.at(0, 0, 11) == 11.0f);
  CHECK(c.at(0, 1, 0) == 12.0f);
  CHECK(c.at(0, 1, 11) == 23.0f);

  series[0].push_back(99.0);
  TemporalCube t = fold_time_series(series, 12);
  CHECK(t.rows == 2);
  CHECK(t.at(0, 1, 11) == 23.0f);

  std::vector<std::vector<double>> small(1, std::vector<double>(5, 1.0));
  CHECK_THROWS_AS(fold_time_series(small, 12), InputError);

  std::vector<std::vector<double>> ragged = {{1, 2}, {1, 2, 3}};
  CHECK_THROWS_AS(fold_time_series(ragged, 2), InputError);
}

TEST_CASE("cube trimming matches encoder patch grids") {
  CubeFamily famA{4, 19, 12, 3, 3};
  CHECK(famA.trimmed_rows() == 18);
  CHECK(famA.trimmed_cols() == 12);

  TemporalCube raw(4, 19, 12);
  for (int ch = 0; ch < 4; ++ch)
    for (int r = 0; r < 19; ++r)
      for (int cc = 0; cc < 12; ++cc) raw.at(ch, r, cc) = static_cast<float>(ch * 1000 + r * 12 + cc);

  TemporalCube cut = trim_cube(raw, famA);
  CHECK(cut.rows == 18);
  CHECK(cut.cols == 12);
  CHECK(cut.at(3, 17, 11) == raw.at(3, 17, 11));

  TemporalCube again = trim_cube(cut, famA);
  CHECK(again.data == cut.data);

  CubeFamily famB{6, 4, 21, 2, 5};
  CHECK(famB.trimmed_rows() == 4);
  CHECK(famB.trimmed_cols() == 20);

  TemporalCube wrong(4, 7, 12);
  CHECK_THROWS_AS(trim_cube(wrong, famA), ConfigError);
}

TEST_CASE("cube missing values filled with tensor mean") {
  TemporalCube c(1, 2, 2);
  c.data = {0.f, 0.f, std::nanf(""), 4.f};
  TemporalCube f = fill_cube_missing(c);
  CHECK(f.data[2] == doctest::Approx(4.0 / 3.0));
  CHECK(f.data[3] == 4.f);
  CHECK(f.data[0] == 0.f);

  TemporalCube empty(1, 2, 2);
  empty.data.assign(4, std::nanf(""));
  CHECK_THROWS_AS(fill_cube_missing(empty), InputError);
}

TEST_CASE("bilinear image resize") {
  // constant image stays constant at any output size
  std::vector<float> img(3 * 10 * 10, 2.5f);
  auto out = resize_image(img, 3, 10, 10, 64, 64, false);
  REQUIRE(out.size() == 3u * 64 * 64);
  for (float v : out) CHECK(v == doctest::Approx(2.5f));

  // corner preservation under the corner-aligned convention
  std::vector<float> ramp = {0.f, 1.f, 2.f, 3.f};
  auto up = resize_image(ramp, 1, 2, 2, 5, 5, true);
  CHECK(up[0] == doctest::Approx(0.f));
  CHECK(up[4] == doctest::Approx(1.f));
  CHECK(up[20] == doctest::Approx(2.f));
  CHECK(up[24] == doctest::Approx(3.f));
  CHECK(up[12] == doctest::Approx(1.5f));

  auto same = resize_image(ramp, 1, 2, 2, 2, 2, false);
  CHECK(same == ramp);
}

TEST_CASE("column cleaning pipeline") {
  CleanOptions opt;
  opt.clip = false;
  opt.outlier_z = 2.0;

  // 1000 is far outside the z-window, so it is re-imputed with the inlier mean
  std::vector<double> col = {1.0, 2.0, 3.0, 4.0, 5.0, 1000.0, std::nan("")};
  ColumnStats st = fit_column(col, opt);
  CHECK(st.impute_mean == doctest::Approx(3.0));

  auto train = clean_column(col, st, opt);
  double mean = 0.0;
  for (double v : train) mean += v;
  mean /= train.size();
  CHECK(mean == doctest::Approx(0.0).epsilon(1e-9));
  double var = 0.0;
  for (double v : train) var += v * v;
  CHECK(std::sqrt(var / train.size()) == doctest::Approx(1.0).epsilon(1e-9));

  // infinities are treated as missing before any statistics
  ColumnStats st2 = fit_column({1.0, std::numeric_limits<double>::infinity(), 3.0}, opt);
  CHECK(st2.impute_mean == doctest::Approx(2.0));

  // test-time columns reuse training statistics instead of their own
  auto test = clean_column({std::nan(""), 3.0}, st, opt);
  CHECK(test[0] == doctest::Approx((st.impute_mean - st.mean) / st.stddev));
  CHECK(test[1] == doctest::Approx((3.0 - st.mean) / st.stddev));

  // constant columns standardize to zero, not NaN
  ColumnStats st3 = fit_column({5.0, 5.0, 5.0}, opt);
  for (double v : clean_column({5.0, 5.0, 5.0}, st3, opt)) CHECK(v == doctest::Approx(0.0));
}

TEST_CASE("clip happens before outlier statistics") {
  CleanOptions opt;
  opt.clip = true;
  opt.outlier_z = 6.0;
  ColumnStats st = fit_column({10.0, 20.0, 30.0, 5000.0}, opt);
  // 5000 clips to 255 first, so it stays a plain value rather than an outlier
  CHECK(st.impute_mean == doctest::Approx((10.0 + 20.0 + 30.0 + 255.0) / 4.0));
}

TEST_CASE("temporal cube tensor round trip") {
  TemporalCube c(2, 3, 4);
  for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] = static_cast<float>(i);
  TghTensor t = c.to_tgh();
  CHECK(t.dims == std::vector<std::uint32_t>{2, 3, 4});
  TemporalCube r = TemporalCube::from_tgh(t);
  CHECK(r.data == c.data);
  CHECK(r.rows == 3);
}

TEST_SUITE_END();

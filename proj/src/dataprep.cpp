#include "tigh/dataprep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tigh/errors.hpp"

namespace tigh {

TghTensor TemporalCube::to_tgh() const {
  TghTensor t;
  t.dims = {static_cast<std::uint32_t>(channels), static_cast<std::uint32_t>(rows),
            static_cast<std::uint32_t>(cols)};
  t.data = data;
  return t;
}

TemporalCube TemporalCube::from_tgh(const TghTensor& t) {
  if (t.dims.size() != 3) throw ShapeError("cube tensor must have rank 3");
  TemporalCube c(static_cast<int>(t.dims[0]), static_cast<int>(t.dims[1]),
                 static_cast<int>(t.dims[2]));
  c.data = t.data;
  return c;
}

std::vector<double> clip_human_footprint(const std::vector<double>& values) {
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    double v = values[i];
    if (std::isnan(v)) {
      out[i] = v;
    } else if (v > 255.0) {
      out[i] = 255.0;
    } else if (v < 0.0) {
      out[i] = 1.0;
    } else {
      out[i] = v;
    }
  }
  return out;
}

namespace {

double mean_present(const std::vector<double>& values, std::size_t* count_out = nullptr) {
  double sum = 0.0;
  std::size_t count = 0;
  for (double v : values) {
    if (std::isnan(v)) continue;
    sum += v;
    ++count;
  }
  if (count_out) *count_out = count;
  return count ? sum / static_cast<double>(count) : 0.0;
}

}  // namespace

std::vector<double> impute_mean(const std::vector<double>& values) {
  std::size_t count = 0;
  double mean = mean_present(values, &count);
  if (count == 0) throw InputError("cannot impute an all-missing column");
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    out[i] = std::isnan(values[i]) ? mean : values[i];
  return out;
}

OneHotVocab OneHotVocab::from_values(const std::vector<std::string>& training_values) {
  OneHotVocab v;
  for (const auto& s : training_values)
    if (std::find(v.categories.begin(), v.categories.end(), s) == v.categories.end())
      v.categories.push_back(s);
  std::sort(v.categories.begin(), v.categories.end());
  if (v.categories.empty()) throw ConfigError("one-hot vocabulary is empty");
  return v;
}

int OneHotVocab::index_of(const std::string& value) const {
  auto it = std::find(categories.begin(), categories.end(), value);
  return it == categories.end() ? -1 : static_cast<int>(it - categories.begin());
}

std::vector<double> OneHotVocab::encode(const std::string& value) const {
  std::vector<double> row(categories.size(), 0.0);
  int i = index_of(value);
  if (i >= 0) row[static_cast<std::size_t>(i)] = 1.0;
  return row;
}

std::vector<int> LabelMatrix::species_of(int i) const {
  std::vector<int> out;
  const float* r = row(i);
  for (int s = 0; s < n_species; ++s)
    if (r[s] != 0.0f) out.push_back(s);
  return out;
}

LabelMatrix encode_labels(const std::vector<long long>& survey_ids,
                          const std::vector<std::vector<int>>& species_lists, int n_species) {
  if (survey_ids.size() != species_lists.size())
    throw InputError("label lists and survey ids differ in length");
  LabelMatrix m;
  m.survey_ids = survey_ids;
  m.n_species = n_species;
  m.values.assign(survey_ids.size() * static_cast<std::size_t>(n_species), 0.0f);
  for (std::size_t i = 0; i < species_lists.size(); ++i)
    for (int s : species_lists[i]) {
      if (s < 0 || s >= n_species)
        throw InputError("species id " + std::to_string(s) + " outside [0," +
                         std::to_string(n_species) + ")");
      m.row(static_cast<int>(i))[s] = 1.0f;
    }
  return m;
}

TemporalCube fold_time_series(const std::vector<std::vector<double>>& channels, int period) {
  if (channels.empty()) throw InputError("no channels to fold");
  if (period <= 0) throw InputError("fold period must be positive");
  std::size_t len = channels[0].size();
  for (const auto& ch : channels)
    if (ch.size() != len) throw InputError("channels differ in length");
  if (len < static_cast<std::size_t>(period))
    throw InputError("series shorter than one period");
  int rows = static_cast<int>(len / static_cast<std::size_t>(period));
  TemporalCube cube(static_cast<int>(channels.size()), rows, period);
  for (int c = 0; c < cube.channels; ++c)
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < period; ++j)
        cube.at(c, i, j) = static_cast<float>(channels[c][static_cast<std::size_t>(i) * period + j]);
  return cube;
}

TemporalCube trim_cube(const TemporalCube& cube, const CubeFamily& family) {
  int tr = family.trimmed_rows();
  int tc = family.trimmed_cols();
  if (cube.channels != family.channels)
    throw ConfigError("cube has " + std::to_string(cube.channels) + " channels, family expects " +
                      std::to_string(family.channels));
  bool raw = cube.rows == family.rows && cube.cols == family.cols;
  bool trimmed = cube.rows == tr && cube.cols == tc;
  if (!raw && !trimmed)
    throw ConfigError("cube shape (" + std::to_string(cube.channels) + "," +
                      std::to_string(cube.rows) + "," + std::to_string(cube.cols) +
                      ") matches no configured family");
  if (trimmed) return cube;
  TemporalCube out(cube.channels, tr, tc);
  for (int c = 0; c < out.channels; ++c)
    for (int i = 0; i < tr; ++i)
      for (int j = 0; j < tc; ++j) out.at(c, i, j) = cube.at(c, i, j);
  return out;
}

TemporalCube fill_cube_missing(const TemporalCube& cube) {
  double sum = 0.0;
  std::size_t count = 0;
  for (float v : cube.data) {
    if (std::isnan(v)) continue;
    sum += static_cast<double>(v);
    ++count;
  }
  if (count == 0) throw InputError("cannot fill an all-missing cube");
  float mean = static_cast<float>(sum / static_cast<double>(count));
  TemporalCube out = cube;
  for (float& v : out.data)
    if (std::isnan(v)) v = mean;
  return out;
}

std::vector<float> resize_image(const std::vector<float>& img, int c, int h, int w, int oh, int ow,
                                bool align_corners) {
  if (c <= 0 || h <= 0 || w <= 0 || oh <= 0 || ow <= 0)
    throw InputError("resize dimensions must be positive");
  if (img.size() != static_cast<std::size_t>(c) * h * w)
    throw ShapeError("image buffer does not match dimensions");
  std::vector<float> out(static_cast<std::size_t>(c) * oh * ow);
  auto src_coord = [&](int dst, int in_size, int out_size) {
    if (align_corners)
      return out_size > 1 ? static_cast<double>(dst) * (in_size - 1) / (out_size - 1) : 0.0;
    double s = static_cast<double>(in_size) / out_size;
    return std::min(std::max((dst + 0.5) * s - 0.5, 0.0), static_cast<double>(in_size - 1));
  };
  for (int ch = 0; ch < c; ++ch) {
    const float* plane = img.data() + static_cast<std::size_t>(ch) * h * w;
    float* dst = out.data() + static_cast<std::size_t>(ch) * oh * ow;
    for (int i = 0; i < oh; ++i) {
      double sy = src_coord(i, h, oh);
      int y0 = static_cast<int>(sy);
      int y1 = std::min(y0 + 1, h - 1);
      double fy = sy - y0;
      for (int j = 0; j < ow; ++j) {
        double sx = src_coord(j, w, ow);
        int x0 = static_cast<int>(sx);
        int x1 = std::min(x0 + 1, w - 1);
        double fx = sx - x0;
        double v = (1 - fy) * ((1 - fx) * plane[y0 * w + x0] + fx * plane[y0 * w + x1]) +
                   fy * ((1 - fx) * plane[y1 * w + x0] + fx * plane[y1 * w + x1]);
        dst[i * ow + j] = static_cast<float>(v);
      }
    }
  }
  return out;
}

namespace {

std::vector<double> pre_clean(const std::vector<double>& values, const CleanOptions& opt) {
  std::vector<double> v = opt.clip ? clip_human_footprint(values) : values;
  for (double& x : v)
    if (!std::isfinite(x)) x = std::numeric_limits<double>::quiet_NaN();
  return v;
}

void apply_outlier_rule(std::vector<double>& v, const ColumnStats& st, double z) {
  if (z <= 0.0 || st.outlier_std <= 0.0) return;
  for (double& x : v)
    if (!std::isnan(x) && std::abs(x - st.outlier_mean) > z * st.outlier_std)
      x = std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

ColumnStats fit_column(const std::vector<double>& training_values, const CleanOptions& opt) {
  std::vector<double> v = pre_clean(training_values, opt);
  ColumnStats st;
  std::size_t count = 0;
  st.outlier_mean = mean_present(v, &count);
  if (count == 0) throw InputError("cannot fit an all-missing column");
  double var = 0.0;
  for (double x : v)
    if (!std::isnan(x)) var += (x - st.outlier_mean) * (x - st.outlier_mean);
  st.outlier_std = std::sqrt(var / static_cast<double>(count));
  apply_outlier_rule(v, st, opt.outlier_z);
  std::size_t inliers = 0;
  st.impute_mean = mean_present(v, &inliers);
  if (inliers == 0) throw InputError("outlier rule removed every value in a column");
  for (double& x : v)
    if (std::isnan(x)) x = st.impute_mean;
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  st.mean = m;
  st.stddev = std::sqrt(s / static_cast<double>(v.size()));
  if (st.stddev < 1e-12) st.stddev = 1.0;
  return st;
}

std::vector<double> clean_column(const std::vector<double>& values, const ColumnStats& stats,
                                 const CleanOptions& opt) {
  std::vector<double> v = pre_clean(values, opt);
  apply_outlier_rule(v, stats, opt.outlier_z);
  for (double& x : v) {
    if (std::isnan(x)) x = stats.impute_mean;
    x = (x - stats.mean) / stats.stddev;
  }
  return v;
}

}  // namespace tigh

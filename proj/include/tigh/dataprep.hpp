#pragma once

#include <string>
#include <vector>

#include "tigh/tghio.hpp"

namespace tigh {

// Folded time series, channels × rows × cols. Values are f32 like every
// on-disk tensor; the cleaning math accumulates in f64.
struct TemporalCube {
  int channels = 0, rows = 0, cols = 0;
  std::vector<float> data;

  TemporalCube() = default;
  TemporalCube(int c, int r, int k)
      : channels(c), rows(r), cols(k), data(static_cast<std::size_t>(c) * r * k, 0.0f) {}

  float& at(int c, int i, int j) {
    return data[(static_cast<std::size_t>(c) * rows + i) * cols + j];
  }
  float at(int c, int i, int j) const {
    return data[(static_cast<std::size_t>(c) * rows + i) * cols + j];
  }
  std::size_t numel() const { return data.size(); }

  TghTensor to_tgh() const;
  static TemporalCube from_tgh(const TghTensor& t);
};

// Clamps the human-footprint column: values above 255 become 255, values
// below 0 become 1; in-range values pass through.
std::vector<double> clip_human_footprint(const std::vector<double>& values);

// Replaces NaN cells with the mean of the non-missing cells. An all-missing
// column is an error: silently imputing would poison standardization.
std::vector<double> impute_mean(const std::vector<double>& values);

// Category vocabulary built from the training split only.
struct OneHotVocab {
  std::vector<std::string> categories;

  static OneHotVocab from_values(const std::vector<std::string>& training_values);
  // One column per category; unseen values encode as all zeros.
  std::vector<double> encode(const std::string& value) const;
  int index_of(const std::string& value) const;  // -1 when unseen
};

// 0/1 multi-label matrix, one row per survey in input order.
struct LabelMatrix {
  std::vector<long long> survey_ids;
  int n_species = 0;
  std::vector<float> values;  // [n × n_species]

  float* row(int i) { return values.data() + static_cast<std::size_t>(i) * n_species; }
  const float* row(int i) const { return values.data() + static_cast<std::size_t>(i) * n_species; }
  std::vector<int> species_of(int i) const;
};

LabelMatrix encode_labels(const std::vector<long long>& survey_ids,
                          const std::vector<std::vector<int>>& species_lists, int n_species);

// Row-major fold of each channel's series by its period; a tail shorter than
// one period is truncated. Element (c,i,j) = series[c][i*period + j].
TemporalCube fold_time_series(const std::vector<std::vector<double>>& channels, int period);

struct CubeFamily {
  int channels = 0, rows = 0, cols = 0;  // raw (pre-trim) shape
  int patch_rows = 1, patch_cols = 1;

  int trimmed_rows() const { return rows - rows % patch_rows; }
  int trimmed_cols() const { return cols - cols % patch_cols; }
};

// Drops the trailing slices that the patch grid cannot cover (one year slice
// for both shipped families); an already-trimmed cube passes through.
TemporalCube trim_cube(const TemporalCube& cube, const CubeFamily& family);

// Replaces NaN elements with the mean over the whole tensor's present values.
TemporalCube fill_cube_missing(const TemporalCube& cube);

// Bilinear resize of a C×H×W image. align_corners=false matches the common
// half-pixel convention; true maps corners to corners exactly.
std::vector<float> resize_image(const std::vector<float>& img, int c, int h, int w, int oh, int ow,
                                bool align_corners = false);

// Feature-column cleaning used by the prep stage: clip configured columns,
// null out non-finite values and z-score outliers, impute, then z-standardize
// with training-split statistics.
struct ColumnStats {
  double outlier_mean = 0.0;  // center/spread of the training values, for the
  double outlier_std = 0.0;   // z-score outlier rule
  double impute_mean = 0.0;
  double mean = 0.0;  // standardization statistics (post-impute)
  double stddev = 1.0;
};

struct CleanOptions {
  bool clip = false;
  double outlier_z = 6.0;  // <=0 disables the outlier rule
};

ColumnStats fit_column(const std::vector<double>& training_values, const CleanOptions& opt);
std::vector<double> clean_column(const std::vector<double>& values, const ColumnStats& stats,
                                 const CleanOptions& opt);

}  // namespace tigh

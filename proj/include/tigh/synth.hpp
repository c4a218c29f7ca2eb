#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tigh/config.hpp"

namespace tigh {

// Parameters of the synthetic survey generator. Surveys are placed in spatial
// clusters whose members share a year, a region, and a species pool, so
// nearby surveys really do have correlated species lists and the graph
// features carry signal. Auxiliary surveys draw extra species ids that never
// appear in training labels, which exercises the shortlist correction path.
struct SynthSpec {
  int n_train = 96, n_test = 24, n_aux = 160;
  int n_species = 48, n_pa_species = 40;
  int n_regions = 3, n_clusters = 8;
  double cluster_radius_km = 1.5;
  std::vector<int> years{2019, 2020, 2021};
  int pool_size = 10, pool_extra_po = 2;
  double presence_prob = 0.85, aux_presence_prob = 0.8;
  double missing_rate = 0.02;
  int env_features = 8;
  int image_size = 64, image_channels = 4;
  std::uint64_t seed = 42;

  static SynthSpec from_run(const RunConfig& rc);
  void validate() const;
};

// Writes metadata.csv, species.csv, test_truth.csv, env.csv, cubes_a.tgh,
// cubes_b.tgh, and images.tgh under out_dir. Deterministic: the same spec
// produces byte-identical files.
void generate_synthetic(const SynthSpec& spec, const std::string& out_dir);

}  // namespace tigh

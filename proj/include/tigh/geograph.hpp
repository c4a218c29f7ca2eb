#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace tigh {

enum class Split { train, test, aux };

Split split_from_string(const std::string& s);
std::string split_to_string(Split s);

struct SurveyNode {
  long long id = 0;
  double lat = 0.0, lon = 0.0;
  int year = 0;
  int region = 0;
  Split split = Split::train;
  std::vector<int> labels;  // species ids; empty for test nodes
};

struct GraphEdge {
  int i = 0, j = 0;  // node indices, i < j
  double weight = 0.0;
};

struct SurveyGraph {
  std::vector<SurveyNode> nodes;
  std::vector<GraphEdge> edges;
  std::vector<std::vector<std::pair<int, double>>> adjacency;  // sorted by neighbor index
  std::vector<int> degree;
};

// Haversine central angle between two coordinates, in radians.
double radian_distance(double lat_a, double lon_a, double lat_b, double lon_b);

// max(0, 10 - constant * rad). The shipped constant is 6731 as published;
// with it the raw weight crosses zero just inside the 10 km cutoff, hence the
// clamp. Substituting 6371 (the Earth radius in km) keeps weights positive
// across the whole admissible range.
double edge_weight(double rad, double weight_constant);

struct GraphOptions {
  double d_max_km = 10.0;
  double weight_constant = 6731.0;
  bool use_spatial_index = true;  // false = O(n²) scan, kept as the test oracle
  int threads = 1;
};

// Connects pairs that share year and region and lie within d_max (great-circle
// km = 6371 * rad). Test-test pairs never connect; aux nodes connect only to
// test nodes.
SurveyGraph build_edges(std::vector<SurveyNode> nodes, const GraphOptions& opt);

// Per-node weighted sum of neighbor label vectors, divided by sqrt(incident
// degree). Neighbors without labels (test nodes) still count toward the
// degree but contribute nothing to the sum. No global rescale here.
std::vector<std::vector<double>> compute_gfv(const SurveyGraph& g, int n_species, int threads = 1);

// Divides every entry by the global maximum; returns that maximum (0 when the
// matrix is all zero, in which case nothing changes).
double rescale_gfv(std::vector<std::vector<double>>& gfv);

struct HistogramBin {
  double lo = 0.0, hi = 0.0;
  long long count = 0;
};

struct DegreeStats {
  std::vector<HistogramBin> degree;       // unit-wide bins
  std::vector<HistogramBin> sqrt_degree;  // quarter-wide bins
};

DegreeStats degree_stats(const SurveyGraph& g);

struct ShortlistOptions {
  int top_train = 5;      // neighbors ranked by weight, ties by ascending id
  int min_train_count = 4;  // keep species present in strictly more neighbors
  int top_aux = 10;
  int min_aux_count = 8;
};

// Per test node: species that recur among its strongest train neighbors or
// its strongest aux neighbors. Returns sorted deduplicated id lists keyed by
// survey id; every test node gets an entry (possibly empty).
std::map<long long, std::vector<int>> compile_shortlists(const SurveyGraph& g,
                                                         const ShortlistOptions& opt);

}  // namespace tigh

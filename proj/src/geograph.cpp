#include "tigh/geograph.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "tigh/errors.hpp"
#include "tigh/parallel.hpp"

namespace tigh {

namespace {

constexpr double kEarthRadiusKm = 6371.0;
constexpr double kDegToRad = std::numbers::pi / 180.0;

bool pair_allowed(const SurveyNode& a, const SurveyNode& b) {
  if (a.split == Split::test && b.split == Split::test) return false;
  if (a.split == Split::aux || b.split == Split::aux) {
    // Aux nodes exist only to serve test-node shortlists.
    const SurveyNode& other = a.split == Split::aux ? b : a;
    if (a.split == Split::aux && b.split == Split::aux) return false;
    if (other.split != Split::test) return false;
  }
  return a.year == b.year && a.region == b.region;
}

}  // namespace

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "test") return Split::test;
  if (s == "aux") return Split::aux;
  throw InputError("unknown split '" + s + "'");
}

std::string split_to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::test: return "test";
    default: return "aux";
  }
}

double radian_distance(double lat_a, double lon_a, double lat_b, double lon_b) {
  double phi1 = lat_a * kDegToRad;
  double phi2 = lat_b * kDegToRad;
  double dphi = (lat_b - lat_a) * kDegToRad;
  double dlam = (lon_b - lon_a) * kDegToRad;
  double h = std::sin(dphi / 2) * std::sin(dphi / 2) +
             std::cos(phi1) * std::cos(phi2) * std::sin(dlam / 2) * std::sin(dlam / 2);
  h = std::min(1.0, std::max(0.0, h));
  return 2.0 * std::asin(std::sqrt(h));
}

double edge_weight(double rad, double weight_constant) {
  return std::max(0.0, 10.0 - weight_constant * rad);
}

SurveyGraph build_edges(std::vector<SurveyNode> nodes, const GraphOptions& opt) {
  {
    std::unordered_set<long long> seen;
    for (const auto& n : nodes)
      if (!seen.insert(n.id).second)
        throw InputError("duplicate survey id " + std::to_string(n.id));
  }
  SurveyGraph g;
  g.nodes = std::move(nodes);
  int n = static_cast<int>(g.nodes.size());

  auto try_pair = [&](int i, int j, std::vector<GraphEdge>& out) {
    const SurveyNode& a = g.nodes[i];
    const SurveyNode& b = g.nodes[j];
    if (!pair_allowed(a, b)) return;
    double rad = radian_distance(a.lat, a.lon, b.lat, b.lon);
    if (kEarthRadiusKm * rad > opt.d_max_km) return;
    out.push_back({i, j, edge_weight(rad, opt.weight_constant)});
  };

  if (!opt.use_spatial_index) {
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) try_pair(i, j, g.edges);
  } else {
    // Uniform lat/lon buckets sized so any admissible pair lands within one
    // cell of each other; the longitude width compensates for convergence at
    // the data's highest latitude. The O(n²) path above is the oracle that
    // pins this down.
    double lat_cap = 0.0;
    for (const auto& node : g.nodes) lat_cap = std::max(lat_cap, std::abs(node.lat));
    lat_cap = std::min(lat_cap, 85.0);
    double cell_lat = opt.d_max_km / 111.0;
    double cell_lon = cell_lat / std::max(std::cos(lat_cap * kDegToRad), 1e-6);
    auto cell_of = [&](const SurveyNode& node) {
      long long ci = static_cast<long long>(std::floor(node.lat / cell_lat));
      long long cj = static_cast<long long>(std::floor(node.lon / cell_lon));
      return std::make_pair(ci, cj);
    };
    std::map<std::pair<long long, long long>, std::vector<int>> buckets;
    for (int i = 0; i < n; ++i) buckets[cell_of(g.nodes[i])].push_back(i);

    std::vector<std::vector<GraphEdge>> per_node(n);
    parallel_for(n, opt.threads, [&](long long i) {
      auto [ci, cj] = cell_of(g.nodes[i]);
      for (long long di = -1; di <= 1; ++di)
        for (long long dj = -1; dj <= 1; ++dj) {
          auto it = buckets.find({ci + di, cj + dj});
          if (it == buckets.end()) continue;
          for (int j : it->second)
            if (j > i) try_pair(static_cast<int>(i), j, per_node[i]);
        }
    });
    for (auto& part : per_node)
      g.edges.insert(g.edges.end(), part.begin(), part.end());
  }

  std::sort(g.edges.begin(), g.edges.end(), [](const GraphEdge& a, const GraphEdge& b) {
    return a.i != b.i ? a.i < b.i : a.j < b.j;
  });
  g.adjacency.assign(n, {});
  g.degree.assign(n, 0);
  for (const auto& e : g.edges) {
    g.adjacency[e.i].push_back({e.j, e.weight});
    g.adjacency[e.j].push_back({e.i, e.weight});
  }
  for (auto& adj : g.adjacency)
    std::sort(adj.begin(), adj.end());
  for (int i = 0; i < n; ++i) g.degree[i] = static_cast<int>(g.adjacency[i].size());
  return g;
}

std::vector<std::vector<double>> compute_gfv(const SurveyGraph& g, int n_species, int threads) {
  int n = static_cast<int>(g.nodes.size());
  for (const auto& node : g.nodes)
    for (int s : node.labels)
      if (s < 0 || s >= n_species)
        throw InputError("node label " + std::to_string(s) + " outside species range");
  std::vector<std::vector<double>> gfv(n);
  parallel_for(n, threads, [&](long long i) {
    gfv[i].assign(n_species, 0.0);
    if (g.degree[i] == 0) return;
    for (const auto& [j, w] : g.adjacency[i])
      for (int s : g.nodes[j].labels) gfv[i][s] += w;
    double norm = std::sqrt(static_cast<double>(g.degree[i]));
    for (double& v : gfv[i]) v /= norm;
  });
  return gfv;
}

double rescale_gfv(std::vector<std::vector<double>>& gfv) {
  double mx = 0.0;
  for (const auto& row : gfv)
    for (double v : row) mx = std::max(mx, v);
  if (mx > 0.0)
    for (auto& row : gfv)
      for (double& v : row) v /= mx;
  return mx;
}

DegreeStats degree_stats(const SurveyGraph& g) {
  DegreeStats st;
  if (g.nodes.empty()) return st;
  int max_deg = 0;
  for (int d : g.degree) max_deg = std::max(max_deg, d);
  st.degree.resize(static_cast<std::size_t>(max_deg) + 1);
  for (int d = 0; d <= max_deg; ++d)
    st.degree[d] = {static_cast<double>(d), static_cast<double>(d + 1), 0};
  for (int d : g.degree) ++st.degree[d].count;

  double width = 0.25;
  int nbins = static_cast<int>(std::floor(std::sqrt(static_cast<double>(max_deg)) / width)) + 1;
  st.sqrt_degree.resize(nbins);
  for (int b = 0; b < nbins; ++b) st.sqrt_degree[b] = {b * width, (b + 1) * width, 0};
  for (int d : g.degree) {
    int b = static_cast<int>(std::sqrt(static_cast<double>(d)) / width);
    ++st.sqrt_degree[std::min(b, nbins - 1)].count;
  }
  return st;
}

namespace {

// Species present in strictly more than min_count of the top-k neighbors.
std::set<int> recurring_species(const SurveyGraph& g,
                                std::vector<std::pair<double, int>> ranked,  // (weight, idx)
                                int top_k, int min_count) {
  std::sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return g.nodes[a.second].id < g.nodes[b.second].id;
  });
  if (static_cast<int>(ranked.size()) > top_k) ranked.resize(top_k);
  std::unordered_map<int, int> counts;
  for (const auto& [w, idx] : ranked)
    for (int s : g.nodes[idx].labels) ++counts[s];
  std::set<int> keep;
  for (const auto& [s, c] : counts)
    if (c > min_count) keep.insert(s);
  return keep;
}

}  // namespace

std::map<long long, std::vector<int>> compile_shortlists(const SurveyGraph& g,
                                                         const ShortlistOptions& opt) {
  std::map<long long, std::vector<int>> out;
  for (int i = 0; i < static_cast<int>(g.nodes.size()); ++i) {
    if (g.nodes[i].split != Split::test) continue;
    std::vector<std::pair<double, int>> train_nb, aux_nb;
    for (const auto& [j, w] : g.adjacency[i]) {
      if (g.nodes[j].split == Split::train) train_nb.push_back({w, j});
      if (g.nodes[j].split == Split::aux) aux_nb.push_back({w, j});
    }
    std::set<int> species =
        recurring_species(g, std::move(train_nb), opt.top_train, opt.min_train_count);
    std::set<int> from_aux =
        recurring_species(g, std::move(aux_nb), opt.top_aux, opt.min_aux_count);
    species.insert(from_aux.begin(), from_aux.end());
    out[g.nodes[i].id] = std::vector<int>(species.begin(), species.end());
  }
  return out;
}

}  // namespace tigh

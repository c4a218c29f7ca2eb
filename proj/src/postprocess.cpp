#include "tigh/postprocess.hpp"

#include <algorithm>
#include <cmath>

#include "tigh/errors.hpp"
#include "tigh/parallel.hpp"

namespace tigh {

TopkMode topk_mode_from_string(const std::string& s) {
  if (s == "union") return TopkMode::union_mode;
  if (s == "intersection") return TopkMode::intersection_mode;
  throw ConfigError("unknown topk mode '" + s + "'");
}

std::string topk_mode_to_string(TopkMode m) {
  return m == TopkMode::union_mode ? "union" : "intersection";
}

namespace {

// Species ids ordered by descending probability, ties toward the smaller id.
std::vector<int> ranked_ids(const std::vector<double>& probs) {
  std::vector<int> order(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return probs[a] > probs[b]; });
  return order;
}

int count_above(const std::vector<double>& sorted_desc, double theta) {
  // first position with p <= theta
  int lo = 0, hi = static_cast<int>(sorted_desc.size());
  while (lo < hi) {
    int mid = (lo + hi) / 2;
    if (sorted_desc[mid] > theta)
      lo = mid + 1;
    else
      hi = mid;
  }
  return lo;
}

int prefix_len(int k, int above, int n, TopkMode mode) {
  int len = mode == TopkMode::union_mode ? std::max(k, above) : std::min(k, above);
  return std::min(len, n);
}

double f1_from_counts(int tp, int pred_size, int truth_size) {
  if (pred_size == 0 && truth_size == 0) return 1.0;
  if (pred_size + truth_size == 0) return 1.0;
  return 2.0 * tp / static_cast<double>(pred_size + truth_size);
}

}  // namespace

std::vector<int> threshold_topk(const std::vector<double>& probs, int k, double theta,
                                TopkMode mode) {
  if (k < 0) throw InputError("negative K");
  std::vector<int> order = ranked_ids(probs);
  std::vector<double> sorted_desc(probs.size());
  for (std::size_t i = 0; i < order.size(); ++i) sorted_desc[i] = probs[order[i]];
  int above = count_above(sorted_desc, theta);
  int len = prefix_len(k, above, static_cast<int>(probs.size()), mode);
  std::vector<int> out(order.begin(), order.begin() + len);
  std::sort(out.begin(), out.end());
  return out;
}

double samplewise_f1(const std::vector<std::vector<int>>& predicted,
                     const std::vector<std::vector<int>>& truth) {
  if (predicted.size() != truth.size())
    throw InputError("prediction and truth sample counts differ");
  if (predicted.empty()) throw InputError("no samples to score");
  double acc = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const auto& p = predicted[i];
    const auto& y = truth[i];
    int tp = 0;
    std::size_t a = 0, b = 0;
    while (a < p.size() && b < y.size()) {
      if (p[a] == y[b]) {
        ++tp;
        ++a;
        ++b;
      } else if (p[a] < y[b]) {
        ++a;
      } else {
        ++b;
      }
    }
    acc += f1_from_counts(tp, static_cast<int>(p.size()), static_cast<int>(y.size()));
  }
  return acc / static_cast<double>(predicted.size());
}

GridResult grid_search(const std::vector<std::vector<double>>& probs,
                       const std::vector<std::vector<int>>& truth, const GridSpec& spec,
                       TopkMode mode, int threads) {
  if (probs.size() != truth.size()) throw InputError("probability and truth sample counts differ");
  if (probs.empty()) throw InputError("grid search needs at least one sample");
  if (spec.k_min > spec.k_max || spec.theta_min > spec.theta_max || spec.theta_step <= 0.0)
    throw ConfigError("empty (K, theta) search range");

  GridResult res;
  res.sentinel_theta = mode == TopkMode::union_mode ? 1.0 : 0.0;
  std::vector<double> thetas = {res.sentinel_theta};
  int n_steps =
      static_cast<int>(std::floor((spec.theta_max - spec.theta_min) / spec.theta_step + 1e-9));
  for (int i = 0; i <= n_steps; ++i) thetas.push_back(spec.theta_min + i * spec.theta_step);

  // Per sample: probabilities sorted descending and the cumulative count of
  // true species along that ranking. Any (K, θ) cell is then a prefix length.
  std::size_t n_samples = probs.size();
  std::vector<std::vector<double>> sorted_desc(n_samples);
  std::vector<std::vector<int>> tp_prefix(n_samples);
  std::vector<int> truth_size(n_samples);
  for (std::size_t s = 0; s < n_samples; ++s) {
    std::vector<int> order = ranked_ids(probs[s]);
    sorted_desc[s].resize(order.size());
    tp_prefix[s].assign(order.size() + 1, 0);
    for (std::size_t i = 0; i < order.size(); ++i) {
      sorted_desc[s][i] = probs[s][order[i]];
      bool hit = std::binary_search(truth[s].begin(), truth[s].end(), order[i]);
      tp_prefix[s][i + 1] = tp_prefix[s][i] + (hit ? 1 : 0);
    }
    truth_size[s] = static_cast<int>(truth[s].size());
  }

  std::size_t n_thetas = thetas.size();
  std::size_t n_cells = static_cast<std::size_t>(spec.k_max - spec.k_min + 1) * n_thetas;
  res.cells.resize(n_cells);
  // counts of probabilities above each θ, shared across K
  std::vector<std::vector<int>> above(n_samples, std::vector<int>(n_thetas));
  for (std::size_t s = 0; s < n_samples; ++s)
    for (std::size_t t = 0; t < n_thetas; ++t) above[s][t] = count_above(sorted_desc[s], thetas[t]);

  parallel_for(static_cast<long long>(n_cells), threads, [&](long long cell) {
    int k = spec.k_min + static_cast<int>(cell / n_thetas);
    std::size_t t = static_cast<std::size_t>(cell % n_thetas);
    double acc = 0.0;
    for (std::size_t s = 0; s < n_samples; ++s) {
      int n = static_cast<int>(sorted_desc[s].size());
      int len = prefix_len(k, above[s][t], n, mode);
      acc += f1_from_counts(tp_prefix[s][len], len, truth_size[s]);
    }
    res.cells[cell] = {k, thetas[t], acc / static_cast<double>(n_samples)};
  });

  std::size_t best = 0;
  for (std::size_t c = 1; c < n_cells; ++c)
    if (res.cells[c].f1 > res.cells[best].f1) best = c;
  res.best_k = res.cells[best].k;
  res.best_theta = res.cells[best].theta;
  res.best_f1 = res.cells[best].f1;
  return res;
}

std::vector<int> correct_output(const std::vector<int>& predicted,
                                const std::vector<int>& shortlist) {
  std::vector<int> out;
  out.reserve(predicted.size() + shortlist.size());
  std::merge(predicted.begin(), predicted.end(), shortlist.begin(), shortlist.end(),
             std::back_inserter(out));
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace tigh

#pragma once

#include <string>
#include <vector>

namespace tigh {

enum class TopkMode { union_mode, intersection_mode };

TopkMode topk_mode_from_string(const std::string& s);
std::string topk_mode_to_string(TopkMode m);

// Species selection combining a rank cutoff with a probability threshold.
// union mode: TopK ∪ {i : p_i > θ}; intersection mode: TopK ∩ {i : p_i > θ}.
// Top-K ties break toward the smaller species id. Result is sorted.
std::vector<int> threshold_topk(const std::vector<double>& probs, int k, double theta,
                                TopkMode mode);

// Mean over samples of TP / (TP + (FP+FN)/2), which reduces to
// 2·TP / (|pred| + |truth|). Both-empty samples score 1. Sets are sorted id
// lists aligned by index.
double samplewise_f1(const std::vector<std::vector<int>>& predicted,
                     const std::vector<std::vector<int>>& truth);

struct GridSpec {
  int k_min = 1, k_max = 100;
  double theta_min = 0.10, theta_max = 0.50, theta_step = 0.01;
};

struct GridCell {
  int k = 0;
  double theta = 0.0;
  double f1 = 0.0;
};

struct GridResult {
  int best_k = 0;
  double best_theta = 0.0;
  double best_f1 = 0.0;
  double sentinel_theta = 0.0;  // 1.0 union / 0.0 intersection
  std::vector<GridCell> cells;  // enumeration order: K ascending, sentinel θ first
};

// Exhaustive (K, θ) evaluation against validation truth. The sentinel θ makes
// every K's plain Top-K score part of the grid, so the best cell can never be
// worse than plain Top-K. Ties keep the earliest cell in enumeration order:
// the smallest K, and within a K the sentinel before the ascending θ values.
GridResult grid_search(const std::vector<std::vector<double>>& probs,
                       const std::vector<std::vector<int>>& truth, const GridSpec& spec,
                       TopkMode mode, int threads = 1);

// Union with the shortlist; never removes a predicted species.
std::vector<int> correct_output(const std::vector<int>& predicted,
                                const std::vector<int>& shortlist);

}  // namespace tigh

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "tigh/model.hpp"
#include "tigh/parallel.hpp"

namespace tigh {

// Assignment of training surveys to cross-validation folds. A seeded shuffle
// followed by round-robin keeps the fold sizes within one of each other.
struct FoldPlan {
  int k = 0;
  std::vector<int> fold_of;

  static FoldPlan make(int n, int k, std::uint64_t seed) {
    if (k <= 0 || n < k) throw ConfigError("need at least one sample per fold");
    FoldPlan plan;
    plan.k = k;
    plan.fold_of.assign(n, 0);
    Rng rng = substream(seed, "data/folds");
    std::vector<int> order = rng.permutation(n);
    for (int i = 0; i < n; ++i) plan.fold_of[order[i]] = i % k;
    return plan;
  }

  std::vector<int> members(int fold) const {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(fold_of.size()); ++i)
      if (fold_of[i] == fold) out.push_back(i);
    return out;
  }

  std::vector<int> complement(int fold) const {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(fold_of.size()); ++i)
      if (fold_of[i] != fold) out.push_back(i);
    return out;
  }
};

// One row per survey across every model input stream, plus the label matrix.
// Rows are flattened exactly as the model's forward pass expects them.
template <class Real>
struct Dataset {
  std::vector<int> ids;
  Tensor<Real> cube_a, cube_b, image, tab, gfv, labels;

  int n() const { return static_cast<int>(ids.size()); }

  Dataset rows(const std::vector<int>& idx) const {
    Dataset out;
    out.ids.reserve(idx.size());
    for (int i : idx) out.ids.push_back(ids[i]);
    auto take = [&](const Tensor<Real>& src, Tensor<Real>& dst) {
      dst = Tensor<Real>(static_cast<int>(idx.size()), src.cols);
      for (std::size_t r = 0; r < idx.size(); ++r)
        for (int j = 0; j < src.cols; ++j) dst.at(static_cast<int>(r), j) = src.at(idx[r], j);
    };
    take(cube_a, out.cube_a);
    take(cube_b, out.cube_b);
    take(image, out.image);
    take(tab, out.tab);
    take(gfv, out.gfv);
    take(labels, out.labels);
    return out;
  }
};

template <class Real>
Tensor<Real> tensor_row(const Tensor<Real>& m, int r) {
  Tensor<Real> out(1, m.cols);
  for (int j = 0; j < m.cols; ++j) out.at(0, j) = m.at(r, j);
  return out;
}

// Convex combination of a batch with a shuffled copy of itself: every input
// stream and the label matrix use the same lambda and the same permutation.
template <class Real>
Dataset<Real> mixup_batch(const Dataset<Real>& batch, double lambda,
                          const std::vector<int>& perm) {
  if (lambda < 0.0 || lambda > 1.0) throw InputError("mixup lambda outside [0,1]");
  if (static_cast<int>(perm.size()) != batch.n())
    throw InputError("mixup permutation size mismatch");
  Dataset<Real> out = batch;
  auto mix = [&](const Tensor<Real>& src, Tensor<Real>& dst) {
    for (int r = 0; r < src.rows; ++r)
      for (int j = 0; j < src.cols; ++j)
        dst.at(r, j) = static_cast<Real>(lambda * static_cast<double>(src.at(r, j)) +
                                         (1.0 - lambda) * static_cast<double>(src.at(perm[r], j)));
  };
  mix(batch.cube_a, out.cube_a);
  mix(batch.cube_b, out.cube_b);
  mix(batch.image, out.image);
  mix(batch.tab, out.tab);
  mix(batch.gfv, out.gfv);
  mix(batch.labels, out.labels);
  return out;
}

struct TrainSettings {
  double lr = 1e-3;
  int batch = 16;
  int max_epochs = 24;
  int patience = 5;
  double mixup_alpha = 0.4;
  int finetune_epochs = 3;
  std::uint64_t seed = 42;
  int threads = 1;

  static TrainSettings from_run(const RunConfig& rc) {
    TrainSettings s;
    s.lr = rc.num("train.lr");
    s.batch = static_cast<int>(rc.integer("train.batch"));
    s.max_epochs = static_cast<int>(rc.integer("train.max_epochs"));
    s.patience = static_cast<int>(rc.integer("train.patience"));
    s.mixup_alpha = rc.num("train.mixup_alpha");
    s.finetune_epochs = static_cast<int>(rc.integer("train.finetune_epochs"));
    s.seed = static_cast<std::uint64_t>(rc.integer("seed"));
    s.threads = static_cast<int>(rc.integer("threads"));
    if (s.lr <= 0 || s.batch <= 0 || s.max_epochs <= 0 || s.mixup_alpha <= 0)
      throw ConfigError("training settings must be positive");
    if (s.patience < 0 || s.patience >= s.max_epochs)
      throw ConfigError("patience must be in [0, max_epochs)");
    return s;
  }
};

struct EpochLog {
  int fold = 0;
  int epoch = 0;
  double train_bce = 0.0;
  double val_bce = 0.0;
  double seconds = 0.0;
};

struct FoldResult {
  int fold = 0;
  std::string init_checksum, final_checksum;
  double best_val_bce = 0.0;
  int best_epoch = 0;
  int epochs_run = 0;
  std::vector<EpochLog> log;
  std::vector<float> best_params;
};

// Mean BCE of the model over the given rows, in f64, without gradients.
template <class Real>
double evaluate_bce(const TighModel<Real>& model, const Dataset<Real>& data,
                    const std::vector<int>& idx) {
  if (idx.empty()) throw InputError("evaluation set is empty");
  double total = 0.0;
  for (int i : idx) {
    Tape<Real> t;
    int p = model.forward(t, t.input(tensor_row(data.cube_a, i)),
                          t.input(tensor_row(data.cube_b, i)),
                          t.input(tensor_row(data.image, i)), t.input(tensor_row(data.tab, i)),
                          t.input(tensor_row(data.gfv, i)));
    int loss = t.bce(p, tensor_row(data.labels, i));
    total += static_cast<double>(t.val(loss).at(0, 0));
  }
  return total / static_cast<double>(idx.size());
}

namespace detail {

// One optimization epoch over the given rows; returns the mean train BCE.
template <class Real>
double run_epoch(TighModel<Real>& model, const Dataset<Real>& data,
                 const std::vector<int>& train_idx, const TrainSettings& s, Adam<Real>& opt,
                 Rng& shuffle_rng, Rng& mixup_rng, int fold, int epoch) {
  std::vector<int> order = shuffle_rng.permutation(static_cast<int>(train_idx.size()));
  double loss_sum = 0.0;
  int seen = 0;
  for (std::size_t start = 0; start < order.size(); start += s.batch) {
    std::size_t stop = std::min(order.size(), start + s.batch);
    std::vector<int> rows;
    for (std::size_t i = start; i < stop; ++i) rows.push_back(train_idx[order[i]]);
    Dataset<Real> batch = data.rows(rows);
    double lambda = mixup_rng.beta(s.mixup_alpha, s.mixup_alpha);
    Dataset<Real> mixed = mixup_batch(batch, lambda, mixup_rng.permutation(batch.n()));

    Tape<Real> t;
    std::vector<int> losses;
    for (int r = 0; r < mixed.n(); ++r) {
      int p = model.forward(t, t.input(tensor_row(mixed.cube_a, r)),
                            t.input(tensor_row(mixed.cube_b, r)),
                            t.input(tensor_row(mixed.image, r)),
                            t.input(tensor_row(mixed.tab, r)),
                            t.input(tensor_row(mixed.gfv, r)));
      losses.push_back(t.bce(p, tensor_row(mixed.labels, r)));
    }
    int total = t.mean_scalars(losses);
    double batch_loss = static_cast<double>(t.val(total).at(0, 0));
    if (!std::isfinite(batch_loss))
      throw DivergenceError("training loss became non-finite at fold " + std::to_string(fold) +
                            " epoch " + std::to_string(epoch) + " batch " +
                            std::to_string(start / s.batch));
    model.params().zero_grads();
    t.backward(total);
    opt.step(model.params());
    loss_sum += batch_loss * static_cast<double>(mixed.n());
    seen += mixed.n();
  }
  return loss_sum / static_cast<double>(seen);
}

}  // namespace detail

// Trains from the model's current (freshly initialized) parameters, keeping
// the snapshot with the lowest validation BCE. Stops once `patience` epochs
// in a row fail to improve; patience 0 therefore runs exactly one epoch.
template <class Real>
FoldResult train_fold_one(TighModel<Real>& model, const Dataset<Real>& data,
                          const std::vector<int>& train_idx, const std::vector<int>& val_idx,
                          const TrainSettings& s, int fold) {
  FoldResult res;
  res.fold = fold;
  res.init_checksum = model.checksum();
  Adam<Real> opt(s.lr);
  Rng shuffle_rng = substream(s.seed, "shuffle/fold" + std::to_string(fold));
  Rng mixup_rng = substream(s.seed, "mixup/fold" + std::to_string(fold));

  double best = std::numeric_limits<double>::infinity();
  int streak = 0;
  for (int epoch = 0; epoch < s.max_epochs; ++epoch) {
    auto t0 = std::chrono::steady_clock::now();
    double train_bce = detail::run_epoch(model, data, train_idx, s, opt, shuffle_rng, mixup_rng,
                                         fold, epoch);
    double val_bce = evaluate_bce(model, data, val_idx);
    if (!std::isfinite(val_bce))
      throw DivergenceError("validation loss became non-finite at fold " + std::to_string(fold) +
                            " epoch " + std::to_string(epoch));
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.log.push_back({fold, epoch, train_bce, val_bce, secs});
    ++res.epochs_run;
    if (val_bce < best) {
      best = val_bce;
      res.best_epoch = epoch;
      res.best_params = model.params().snapshot();
      streak = 0;
    } else {
      ++streak;
    }
    if (streak >= s.patience) break;
  }
  model.params().restore(res.best_params);
  res.best_val_bce = best;
  res.final_checksum = model.checksum();
  return res;
}

// Fine-tunes a clone of the base model for a fixed number of epochs and keeps
// whichever state (including the untouched base) validated best, so cloning
// never makes a fold worse than the base model on its own validation split.
template <class Real>
FoldResult finetune_fold(TighModel<Real>& model, const Dataset<Real>& data,
                         const std::vector<int>& train_idx, const std::vector<int>& val_idx,
                         const TrainSettings& s, int fold) {
  FoldResult res;
  res.fold = fold;
  res.init_checksum = model.checksum();
  res.best_params = model.params().snapshot();
  res.best_val_bce = evaluate_bce(model, data, val_idx);
  res.best_epoch = -1;

  Adam<Real> opt(s.lr);
  Rng shuffle_rng = substream(s.seed, "shuffle/fold" + std::to_string(fold));
  Rng mixup_rng = substream(s.seed, "mixup/fold" + std::to_string(fold));
  for (int epoch = 0; epoch < s.finetune_epochs; ++epoch) {
    auto t0 = std::chrono::steady_clock::now();
    double train_bce = detail::run_epoch(model, data, train_idx, s, opt, shuffle_rng, mixup_rng,
                                         fold, epoch);
    double val_bce = evaluate_bce(model, data, val_idx);
    if (!std::isfinite(val_bce))
      throw DivergenceError("validation loss became non-finite at fold " + std::to_string(fold) +
                            " epoch " + std::to_string(epoch));
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.log.push_back({fold, epoch, train_bce, val_bce, secs});
    ++res.epochs_run;
    if (val_bce < res.best_val_bce) {
      res.best_val_bce = val_bce;
      res.best_epoch = epoch;
      res.best_params = model.params().snapshot();
    }
  }
  model.params().restore(res.best_params);
  res.final_checksum = model.checksum();
  return res;
}

struct CrossFusionResult {
  FoldPlan plan;
  std::vector<FoldResult> folds;  // fold 1 first
  std::vector<EpochLog> log;      // concatenated in fold order
};

// The cross-fusion schedule: train fold 1 from scratch, then clone its best
// parameters into every remaining fold and fine-tune each on its own split.
// Folds 2..k are independent and may run on separate threads; fold order in
// the result is fixed, so the outcome does not depend on scheduling.
template <class Real>
CrossFusionResult cross_fusion(const ModelConfig& cfg, const Dataset<Real>& data,
                               const TrainSettings& s, int k) {
  CrossFusionResult out;
  out.plan = FoldPlan::make(data.n(), k, s.seed);
  out.folds.resize(k);

  TighModel<Real> first(cfg);
  out.folds[0] = train_fold_one(first, data, out.plan.complement(0), out.plan.members(0), s, 1);
  const std::vector<float>& base = out.folds[0].best_params;

  parallel_for(k - 1, s.threads, [&](long long j) {
    int fold = static_cast<int>(j) + 1;  // fold index in the plan; reported as fold+1
    TighModel<Real> clone(cfg);
    clone.params().restore(base);
    out.folds[fold] = finetune_fold(clone, data, out.plan.complement(fold),
                                    out.plan.members(fold), s, fold + 1);
  });

  for (const auto& f : out.folds)
    for (const auto& row : f.log) out.log.push_back(row);
  return out;
}

// Elementwise arithmetic mean of per-model probability vectors, in f64.
inline std::vector<double> average_logits(const std::vector<std::vector<double>>& probs) {
  if (probs.empty()) throw InputError("no model outputs to average");
  std::size_t width = probs.front().size();
  std::vector<double> mean(width, 0.0);
  for (const auto& p : probs) {
    if (p.size() != width) throw InputError("model output widths differ");
    for (std::size_t j = 0; j < width; ++j) mean[j] += p[j];
  }
  for (double& v : mean) v /= static_cast<double>(probs.size());
  return mean;
}

}  // namespace tigh

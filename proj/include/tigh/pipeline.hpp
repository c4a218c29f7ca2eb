#pragma once

#include <string>

#include "tigh/config.hpp"
#include "tigh/postprocess.hpp"

namespace tigh {

// Artifact locations, all under run.dir. Every stage reads the outputs of
// earlier stages from these fixed paths and writes only into its own
// directory, so a deleted stage directory can always be rebuilt in place.
struct StagePaths {
  std::string raw, prep, graph, train, predict, tune, score, report;

  static StagePaths from_run(const RunConfig& rc);
};

// Pipeline stages, in order. Each validates that its inputs exist (IoError
// naming the stage and file otherwise) and writes its artifacts atomically
// enough for the purpose: a rerun overwrites, never appends.

// raw/: metadata.csv, species.csv, test_truth.csv, env.csv, cubes_*.tgh, images.tgh
void run_synth(const RunConfig& rc);

// prep/: features.tgh, ids.csv, labels.tgh, cubes_a.tgh, cubes_b.tgh,
// images.tgh, column_stats.csv. Cleaning statistics fit on the train split
// only; cubes arrive trimmed to the patch grid with missing cells filled.
void run_prep(const RunConfig& rc);

// graph/: edges.csv, gfv.tgh, gfv_ids.csv, shortlists.csv. With
// graph.enabled=0 the stage still writes every file: no edges, all-zero
// vectors, empty shortlists, so downstream stages are oblivious.
void run_graph(const RunConfig& rc);

// train/: fold<i>.ckpt for i in 1..folds, log.csv, checksums.csv.
void run_train(const RunConfig& rc);

// predict/: val_probs.tgh + val_ids.csv (out-of-fold: each training survey
// predicted by the one fold model that held it out) and test_probs.tgh +
// test_ids.csv (mean probability over all fold models).
void run_predict(const RunConfig& rc);

// tune/: heatmap.csv, best.csv. Returns the chosen cell for display.
GridResult run_tune(const RunConfig& rc);

// score/: score.csv. Returns the validation F1 at the tuned operating point.
double run_score(const RunConfig& rc);

// report/: submission.csv, heatmap.csv, loss_curves.csv, degree_hist.csv,
// summary.csv.
void run_report(const RunConfig& rc);

}  // namespace tigh

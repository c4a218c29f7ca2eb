#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "doctest.h"
#include "tigh/csv.hpp"
#include "tigh/errors.hpp"
#include "tigh/pipeline.hpp"
#include "tigh/postprocess.hpp"
#include "tigh/tghio.hpp"

using namespace tigh;

namespace {

namespace fs = std::filesystem;

fs::path temp_dir(const std::string& tag) {
  fs::path d = fs::temp_directory_path() /
               ("tigh_pipe_" + std::to_string(::getpid()) + "_" + tag);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

// Every stream shrunk to the smallest shapes the encoders accept, so the
// whole pipeline runs in a couple of seconds.
RunConfig tiny_config(const std::string& run_dir) {
  RunConfig rc = RunConfig::defaults();
  rc.set("run.dir", run_dir);
  rc.set("synth.n_train", "30");
  rc.set("synth.n_test", "8");
  rc.set("synth.n_aux", "20");
  rc.set("synth.n_species", "12");
  rc.set("synth.n_pa_species", "9");
  rc.set("synth.n_regions", "2");
  rc.set("synth.n_clusters", "3");
  rc.set("synth.years", "2019,2020");
  rc.set("synth.pool_size", "4");
  rc.set("synth.pool_extra_po", "1");
  rc.set("synth.env_features", "4");
  rc.set("synth.image_size", "16");
  rc.set("synth.image_channels", "2");
  rc.set("temporal.embed_dim", "8");
  rc.set("temporal.depths", "1,1");
  rc.set("temporal.heads", "2,4");
  rc.set("image.size", "8");
  rc.set("image.channels", "2");
  rc.set("image.patch", "8");
  rc.set("image.depths", "1,1");
  rc.set("image.heads", "2,4");
  rc.set("image.tokens", "1");
  rc.set("fusion.width", "16");
  rc.set("tabular.hidden", "16");
  rc.set("tabular.tokens", "2");
  rc.set("gfv.tokens", "2");
  rc.set("hcam.heads_ca", "2");
  rc.set("hcam.heads_mhca", "2");
  rc.set("train.folds", "3");
  rc.set("train.lr", "0.01");
  rc.set("train.batch", "8");
  rc.set("train.max_epochs", "2");
  rc.set("train.patience", "1");
  rc.set("train.finetune_epochs", "1");
  rc.set("topk.k_max", "12");
  return rc;
}

void run_all(const RunConfig& rc) {
  run_synth(rc);
  run_prep(rc);
  run_graph(rc);
  run_train(rc);
  run_predict(rc);
  run_tune(rc);
  run_score(rc);
  run_report(rc);
}

std::vector<int> parse_id_list(const std::string& cell) {
  std::vector<int> out;
  std::string cur;
  for (char c : cell + " ") {
    if (c == ' ') {
      if (!cur.empty()) out.push_back(static_cast<int>(cell_to_int(cur)));
      cur.clear();
    } else {
      cur += c;
    }
  }
  return out;
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("tiny run produces a full artifact tree") {
    fs::path dir = temp_dir("full");
    RunConfig rc = tiny_config(dir.string());
    run_all(rc);
    StagePaths p = StagePaths::from_run(rc);

    for (const std::string& f :
         {p.prep + "/features.tgh", p.prep + "/labels.tgh", p.prep + "/column_stats.csv",
          p.graph + "/edges.csv", p.graph + "/gfv.tgh", p.graph + "/shortlists.csv",
          p.train + "/fold1.ckpt", p.train + "/fold3.ckpt", p.train + "/log.csv",
          p.train + "/checksums.csv", p.predict + "/val_probs.tgh", p.predict + "/test_probs.tgh",
          p.tune + "/heatmap.csv", p.tune + "/best.csv", p.score + "/score.csv",
          p.report + "/submission.csv", p.report + "/degree_hist.csv", p.report + "/summary.csv"})
      CHECK(fs::exists(f));

    // images resampled from the raw 16x16 down to the model's 8x8
    TghTensor img = read_tgh(p.prep + "/images.tgh");
    REQUIRE(img.dims == std::vector<std::uint32_t>{38, 2, 8, 8});

    // one submission row per test survey, every id inside the label space
    TghTensor labels = read_tgh(p.prep + "/labels.tgh");
    int n_species = static_cast<int>(labels.dims[1]);
    CsvTable sub = read_csv(p.report + "/submission.csv");
    REQUIRE(sub.rows.size() == 8);
    int c_id = sub.col_required("surveyId");
    int c_pred = sub.col_required("predictions");
    for (const auto& row : sub.rows) {
      long long id = cell_to_int(row[c_id]);
      CHECK(id >= 2000);
      CHECK(id < 3000);
      std::vector<int> ids = parse_id_list(row[c_pred]);
      for (std::size_t i = 0; i < ids.size(); ++i) {
        CHECK(ids[i] >= 0);
        CHECK(ids[i] < n_species);
        if (i) CHECK(ids[i] > ids[i - 1]);
      }
    }

    // submission row = threshold_topk at the tuned cell, unioned with the
    // survey's shortlist
    CsvTable best = read_csv(p.tune + "/best.csv");
    int k = static_cast<int>(cell_to_int(best.rows[0][best.col_required("K")]));
    double theta = cell_to_double(best.rows[0][best.col_required("theta")]);
    TghTensor probs = read_tgh(p.predict + "/test_probs.tgh");
    CsvTable shorts = read_csv(p.graph + "/shortlists.csv");
    std::map<long long, std::vector<int>> shortlist;
    for (const auto& row : shorts.rows)
      shortlist[cell_to_int(row[shorts.col_required("survey_id")])] =
          parse_id_list(row[shorts.col_required("species_ids")]);
    TopkMode mode = topk_mode_from_string(rc.str("topk.mode"));
    for (std::size_t r = 0; r < sub.rows.size(); ++r) {
      std::vector<double> row(probs.data.begin() + static_cast<std::ptrdiff_t>(r) * n_species,
                              probs.data.begin() + static_cast<std::ptrdiff_t>(r + 1) * n_species);
      std::vector<int> expect =
          correct_output(threshold_topk(row, k, theta, mode),
                         shortlist[cell_to_int(sub.rows[r][c_id])]);
      CHECK(parse_id_list(sub.rows[r][c_pred]) == expect);
    }

    // the tuned F1 is the heatmap's maximum and score reproduces it on the
    // same validation rows
    double best_f1 = cell_to_double(best.rows[0][best.col_required("f1")]);
    CsvTable heat = read_csv(p.tune + "/heatmap.csv");
    double max_f1 = 0.0;
    for (const auto& row : heat.rows)
      max_f1 = std::max(max_f1, cell_to_double(row[heat.col_required("f1")]));
    CHECK(best_f1 == doctest::Approx(max_f1).epsilon(1e-9));
    CsvTable sc = read_csv(p.score + "/score.csv");
    CHECK(cell_to_double(sc.rows[0][sc.col_required("f1")]) ==
          doctest::Approx(best_f1).epsilon(1e-9));
  }

  TEST_CASE("missing upstream artifacts name the failing stage") {
    fs::path dir = temp_dir("missing");
    RunConfig rc = tiny_config(dir.string());
    CHECK_THROWS_WITH_AS(run_prep(rc), doctest::Contains("stage prep"), IoError);
    run_synth(rc);
    run_prep(rc);
    CHECK_THROWS_WITH_AS(run_train(rc), doctest::Contains("stage train"), IoError);
    run_graph(rc);
    CHECK_THROWS_WITH_AS(run_predict(rc), doctest::Contains("stage predict"), IoError);
    CHECK_THROWS_WITH_AS(run_tune(rc), doctest::Contains("stage tune"), IoError);
    CHECK_THROWS_WITH_AS(run_report(rc), doctest::Contains("stage report"), IoError);
  }

  TEST_CASE("disabling the graph zeroes its artifacts but keeps the schema") {
    fs::path dir = temp_dir("nograph");
    RunConfig rc = tiny_config(dir.string());
    rc.set("graph.enabled", "0");
    run_synth(rc);
    run_prep(rc);
    run_graph(rc);
    StagePaths p = StagePaths::from_run(rc);

    CsvTable edges = read_csv(p.graph + "/edges.csv");
    CHECK(edges.rows.empty());
    TghTensor gfv = read_tgh(p.graph + "/gfv.tgh");
    REQUIRE(gfv.dims.size() == 2);
    CHECK(gfv.dims[0] == 38);
    for (float v : gfv.data) CHECK(v == 0.0f);
    CsvTable shorts = read_csv(p.graph + "/shortlists.csv");
    REQUIRE(shorts.rows.size() == 8);  // one entry per test survey, all empty
    for (const auto& row : shorts.rows)
      CHECK(row[shorts.col_required("species_ids")].empty());
  }

  TEST_CASE("without aux surveys shortlists still cover every test node") {
    fs::path dir = temp_dir("noaux");
    RunConfig rc = tiny_config(dir.string());
    rc.set("synth.n_aux", "0");
    run_synth(rc);
    run_graph(rc);
    StagePaths p = StagePaths::from_run(rc);

    CsvTable meta = read_csv(p.raw + "/metadata.csv");
    CHECK(meta.rows.size() == 38);  // no aux rows at all
    CsvTable shorts = read_csv(p.graph + "/shortlists.csv");
    CHECK(shorts.rows.size() == 8);
    // train-branch shortlists only; presence-only ids can no longer appear
    for (const auto& row : shorts.rows)
      for (int id : parse_id_list(row[shorts.col_required("species_ids")]))
        CHECK(id < 9);
  }

  TEST_CASE("prep rejects streams that contradict the config") {
    fs::path dir = temp_dir("shape");
    RunConfig rc = tiny_config(dir.string());
    run_synth(rc);
    RunConfig bad = tiny_config(dir.string());
    bad.set("image.channels", "3");
    CHECK_THROWS_AS(run_prep(bad), InputError);
    bad = tiny_config(dir.string());
    bad.set("temporal.familyA.shape", "4x20x12");
    CHECK_THROWS_AS(run_prep(bad), InputError);
  }
}

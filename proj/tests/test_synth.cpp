#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "tigh/csv.hpp"
#include "tigh/digest.hpp"
#include "tigh/errors.hpp"
#include "tigh/geograph.hpp"
#include "tigh/synth.hpp"
#include "tigh/tghio.hpp"

using namespace tigh;

namespace {

namespace fs = std::filesystem;

fs::path temp_dir() {
  fs::path d = fs::temp_directory_path() / ("tigh_synth_" + std::to_string(::getpid()));
  fs::create_directories(d);
  return d;
}

SynthSpec small_spec() {
  SynthSpec s;
  s.n_train = 40;
  s.n_test = 12;
  s.n_aux = 30;
  s.n_species = 20;
  s.n_pa_species = 14;
  s.n_regions = 2;
  s.n_clusters = 4;
  s.cluster_radius_km = 1.0;
  s.years = {2019, 2020};
  s.pool_size = 6;
  s.pool_extra_po = 2;
  s.presence_prob = 0.9;
  s.aux_presence_prob = 0.8;
  s.missing_rate = 0.05;
  s.env_features = 5;
  s.image_size = 8;
  s.image_channels = 2;
  s.seed = 7;
  return s;
}

const std::vector<std::string> kFiles = {"metadata.csv", "species.csv", "test_truth.csv",
                                         "env.csv",      "cubes_a.tgh", "cubes_b.tgh",
                                         "images.tgh"};

}  // namespace

TEST_SUITE("synth") {
  TEST_CASE("same seed reproduces every file byte for byte") {
    SynthSpec s = small_spec();
    fs::path a = temp_dir() / "run_a";
    fs::path b = temp_dir() / "run_b";
    generate_synthetic(s, a.string());
    generate_synthetic(s, b.string());
    for (const auto& f : kFiles) {
      std::string da = read_binary_file((a / f).string());
      std::string db = read_binary_file((b / f).string());
      CHECK(sha256_hex(da) == sha256_hex(db));
      CHECK(!da.empty());
    }

    SynthSpec s2 = small_spec();
    s2.seed = 8;
    fs::path c = temp_dir() / "run_c";
    generate_synthetic(s2, c.string());
    CHECK(read_binary_file((a / "metadata.csv").string()) !=
          read_binary_file((c / "metadata.csv").string()));
  }

  TEST_CASE("survey roster and tensor shapes line up") {
    SynthSpec s = small_spec();
    fs::path dir = temp_dir() / "roster";
    generate_synthetic(s, dir.string());

    CsvTable meta = read_csv((dir / "metadata.csv").string());
    REQUIRE(meta.rows.size() == static_cast<std::size_t>(s.n_train + s.n_test + s.n_aux));
    int c_split = meta.col_required("split");
    int c_year = meta.col_required("year");
    int c_region = meta.col_required("region");
    int n_train = 0, n_test = 0, n_aux = 0;
    for (const auto& row : meta.rows) {
      if (row[c_split] == "train") ++n_train;
      else if (row[c_split] == "test") ++n_test;
      else if (row[c_split] == "aux") ++n_aux;
      CHECK((row[c_year] == "2019" || row[c_year] == "2020"));
      CHECK((row[c_region] == "R0" || row[c_region] == "R1"));
    }
    CHECK(n_train == s.n_train);
    CHECK(n_test == s.n_test);
    CHECK(n_aux == s.n_aux);

    int n_inputs = s.n_train + s.n_test;
    TghTensor ca = read_tgh((dir / "cubes_a.tgh").string());
    REQUIRE(ca.dims == std::vector<std::uint32_t>{static_cast<std::uint32_t>(n_inputs), 4, 19, 12});
    TghTensor cb = read_tgh((dir / "cubes_b.tgh").string());
    REQUIRE(cb.dims == std::vector<std::uint32_t>{static_cast<std::uint32_t>(n_inputs), 6, 4, 21});
    TghTensor im = read_tgh((dir / "images.tgh").string());
    REQUIRE(im.dims == std::vector<std::uint32_t>{static_cast<std::uint32_t>(n_inputs), 2, 8, 8});

    CsvTable env = read_csv((dir / "env.csv").string());
    CHECK(env.rows.size() == static_cast<std::size_t>(n_inputs));
    CHECK(env.header.size() == static_cast<std::size_t>(1 + s.env_features));
    CHECK(env.header[1] == "human_footprint");
  }

  TEST_CASE("dirty raw data is actually planted") {
    SynthSpec s = small_spec();
    s.n_train = 400;  // enough rows for the rare plants to land
    fs::path dir = temp_dir() / "dirty";
    generate_synthetic(s, dir.string());

    CsvTable env = read_csv((dir / "env.csv").string());
    int c_hf = env.col_required("human_footprint");
    bool has_over = false, has_under = false, has_missing = false, has_inf = false;
    bool has_outlier = false;
    for (const auto& row : env.rows) {
      const std::string& v = row[c_hf];
      if (v.empty()) {
        has_missing = true;
      } else {
        double x = cell_to_double(v);
        if (x > 255.0) has_over = true;
        if (x < 0.0) has_under = true;
      }
      for (int f = 1; f < s.env_features; ++f) {
        const std::string& w = row[env.col_required("env" + std::to_string(f))];
        if (w.empty()) {
          has_missing = true;
          continue;
        }
        double x = cell_to_double(w);
        if (std::isinf(x)) has_inf = true;
        else if (std::abs(x) > 100.0) has_outlier = true;
      }
    }
    CHECK(has_over);
    CHECK(has_under);
    CHECK(has_missing);
    CHECK(has_inf);
    CHECK(has_outlier);

    TghTensor ca = read_tgh((dir / "cubes_a.tgh").string());
    int nan_count = 0;
    for (float x : ca.data)
      if (std::isnan(x)) ++nan_count;
    CHECK(nan_count > 0);
    CHECK(nan_count < static_cast<int>(ca.data.size()) / 5);
  }

  TEST_CASE("presence-only species appear only through aux surveys") {
    SynthSpec s = small_spec();
    fs::path dir = temp_dir() / "species";
    generate_synthetic(s, dir.string());

    CsvTable sp = read_csv((dir / "species.csv").string());
    int c_sid = sp.col_required("survey_id");
    int c_species = sp.col_required("species_id");
    bool aux_has_po = false;
    for (const auto& row : sp.rows) {
      long long survey = cell_to_int(row[c_sid]);
      int id = static_cast<int>(cell_to_int(row[c_species]));
      CHECK(id >= 0);
      CHECK(id < s.n_species);
      if (survey < 3000) CHECK(id < s.n_pa_species);
      if (survey >= 3000 && id >= s.n_pa_species) aux_has_po = true;
    }
    CHECK(aux_has_po);

    CsvTable truth = read_csv((dir / "test_truth.csv").string());
    int t_sid = truth.col_required("survey_id");
    int t_species = truth.col_required("species_id");
    for (const auto& row : truth.rows) {
      CHECK(cell_to_int(row[t_species]) < s.n_pa_species);
      long long id = cell_to_int(row[t_sid]);
      CHECK(id >= 2000);
      CHECK(id < 3000);
    }
  }

  TEST_CASE("clusters are tight enough to form graph edges") {
    SynthSpec s = small_spec();
    fs::path dir = temp_dir() / "geo";
    generate_synthetic(s, dir.string());

    CsvTable meta = read_csv((dir / "metadata.csv").string());
    int c_sid = meta.col_required("survey_id");
    int c_lat = meta.col_required("lat");
    int c_lon = meta.col_required("lon");
    int c_year = meta.col_required("year");
    int c_region = meta.col_required("region");
    int c_split = meta.col_required("split");
    std::vector<SurveyNode> nodes;
    for (const auto& row : meta.rows) {
      SurveyNode n;
      n.id = cell_to_int(row[c_sid]);
      n.lat = cell_to_double(row[c_lat]);
      n.lon = cell_to_double(row[c_lon]);
      n.year = static_cast<int>(cell_to_int(row[c_year]));
      n.region = static_cast<int>(cell_to_int(row[c_region].substr(1)));
      n.split = split_from_string(row[c_split]);
      nodes.push_back(n);
    }

    SurveyGraph g = build_edges(nodes, GraphOptions{});
    CHECK(!g.edges.empty());

    long long degree_sum = 0;
    int isolated = 0;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
      degree_sum += g.degree[i];
      if (g.degree[i] == 0) ++isolated;
    }
    CHECK(degree_sum > static_cast<long long>(g.nodes.size()));
    // same-cluster surveys share year and region and sit a couple of km apart,
    // so isolation should be the rare exception (test-test pairs never connect)
    CHECK(isolated < static_cast<int>(g.nodes.size()) / 4);
  }

  TEST_CASE("spec validation rejects broken settings") {
    SynthSpec bad = small_spec();
    bad.n_train = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = small_spec();
    bad.n_pa_species = bad.n_species + 1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = small_spec();
    bad.pool_size = bad.n_pa_species + 1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = small_spec();
    bad.pool_extra_po = bad.n_species - bad.n_pa_species + 1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = small_spec();
    bad.years.clear();
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = small_spec();
    bad.cluster_radius_km = 25.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = small_spec();
    bad.missing_rate = 1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
  }
}

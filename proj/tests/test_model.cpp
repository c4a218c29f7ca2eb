#include <cmath>
#include <filesystem>
#include <unistd.h>

#include "doctest.h"
#include "tigh/model.hpp"

namespace fs = std::filesystem;
using namespace tigh;

namespace {

fs::path temp_dir() {
  auto d = fs::temp_directory_path() / ("tigh_model_" + std::to_string(::getpid()));
  fs::create_directories(d);
  return d;
}

Tensor<float> random_row(int n, std::uint64_t seed) {
  Tensor<float> t(1, n);
  Rng rng(seed);
  for (auto& v : t.data) v = static_cast<float>(rng.normal(0.0, 1.0));
  return t;
}

}  // namespace

TEST_SUITE_BEGIN("model");

TEST_CASE("model config resolves trimmed cube dimensions from the run config") {
  RunConfig rc = RunConfig::defaults();
  ModelConfig c = ModelConfig::from_run(rc, 11, 40);
  CHECK(c.famA_c == 4);
  CHECK(c.famA_h == 18);  // 19 rows, 3-row patches
  CHECK(c.famA_w == 12);
  CHECK(c.famB_c == 6);
  CHECK(c.famB_h == 4);
  CHECK(c.famB_w == 20);  // 21 cols, 5-col patches
  CHECK(c.temporal_embed == 48);
  CHECK(c.fusion_width == 96);
  CHECK(c.image_size == 64);
  CHECK(c.tabular_features == 11);
  CHECK(c.n_species == 40);
  CHECK(c.hcam_enabled);
}

TEST_CASE("architecture hash ignores the seed but tracks every dimension") {
  RunConfig rc = RunConfig::defaults();
  ModelConfig a = ModelConfig::from_run(rc, 11, 40);
  ModelConfig b = a;
  CHECK(a.hash() == b.hash());

  b.seed = 999;
  CHECK(a.hash() == b.hash());

  ModelConfig c = a;
  c.n_species = 41;
  CHECK(a.hash() != c.hash());

  ModelConfig d = a;
  d.hcam_enabled = false;
  CHECK(a.hash() != d.hash());

  ModelConfig e = a;
  e.tabular_features = 12;
  CHECK(a.hash() != e.hash());
}

TEST_CASE("assembled model wires all five streams to species probabilities") {
  RunConfig rc = RunConfig::defaults();
  ModelConfig c = ModelConfig::from_run(rc, 11, 40);
  TighModel<float> model(c);
  CHECK(model.family_a().final_tokens == 6);
  CHECK(model.family_b().final_tokens == 2);
  CHECK(model.temporal_tokens() == 8);
  CHECK(model.image_encoder().final_tokens == 16);
  CHECK(model.image_encoder().out_dim == 96);

  Tape<float> t;
  int p = model.forward(t, t.input(random_row(4 * 18 * 12, 1)),
                        t.input(random_row(6 * 4 * 20, 2)),
                        t.input(random_row(4 * 64 * 64, 3)), t.input(random_row(11, 4)),
                        t.input(random_row(40, 5)));
  REQUIRE(t.val(p).rows == 1);
  REQUIRE(t.val(p).cols == 40);
  for (float v : t.val(p).data) {
    CHECK(std::isfinite(v));
    CHECK(v > 0.0f);
    CHECK(v < 1.0f);
  }
}

TEST_CASE("same config gives identical fresh parameters, and checkpoints restore them") {
  RunConfig rc = RunConfig::defaults();
  ModelConfig c = ModelConfig::from_run(rc, 7, 12);
  TighModel<float> m1(c), m2(c);
  CHECK(m1.checksum() == m2.checksum());

  auto path = (temp_dir() / "model.ckpt").string();
  // perturb m1, save, load into m2
  m1.params().at("hcam/out/b").value.at(0, 3) = 0.25f;
  CHECK(m1.checksum() != m2.checksum());
  m1.save(path);
  m2.load(path);
  CHECK(m1.checksum() == m2.checksum());

  SUBCASE("a checkpoint from a different architecture is rejected") {
    ModelConfig other = c;
    other.n_species = 13;
    TighModel<float> m3(other);
    CHECK_THROWS_AS(m3.load(path), InputError);
  }
}

TEST_CASE("baseline head replaces the fusion head when disabled") {
  RunConfig rc = RunConfig::defaults();
  ModelConfig c = ModelConfig::from_run(rc, 7, 12);
  c.hcam_enabled = false;
  TighModel<float> model(c);
  CHECK_THROWS_AS(model.params().at("hcam/out/w"), Error);
  model.params().at("head/out/w");  // present

  Tape<float> t;
  int p = model.forward(t, t.input(random_row(4 * 18 * 12, 11)),
                        t.input(random_row(6 * 4 * 20, 12)),
                        t.input(random_row(4 * 64 * 64, 13)), t.input(random_row(7, 14)),
                        t.input(random_row(12, 15)));
  CHECK(t.val(p).cols == 12);
  for (float v : t.val(p).data) CHECK(std::isfinite(v));
}

TEST_CASE("mismatched stream widths are rejected") {
  RunConfig rc = RunConfig::defaults();
  ModelConfig c = ModelConfig::from_run(rc, 7, 12);
  c.image_tokens = 9;  // encoder actually yields 16
  CHECK_THROWS_AS(TighModel<float>{c}, ConfigError);

  ModelConfig c2 = ModelConfig::from_run(rc, 7, 12);
  c2.temporal_embed = 24;  // temporal width 48 != fusion width 96
  c2.temporal_heads = {12, 24};
  CHECK_THROWS_AS(TighModel<float>{c2}, ConfigError);
}

TEST_SUITE_END();

#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "tigh/config.hpp"
#include "tigh/digest.hpp"
#include "tigh/encoders.hpp"
#include "tigh/hcam.hpp"
#include "tigh/swin.hpp"

namespace tigh {

// Everything that determines parameter shapes, resolved from the run config.
// Two checkpoints are interchangeable exactly when their ModelConfig hashes
// match; training hyperparameters deliberately stay out of the hash.
struct ModelConfig {
  // temporal cube families, post-trim dims
  int famA_c = 4, famA_h = 18, famA_w = 12;
  std::pair<int, int> famA_patch{3, 3}, famA_window{3, 2};
  int famB_c = 6, famB_h = 4, famB_w = 20;
  std::pair<int, int> famB_patch{2, 5}, famB_window{2, 3};
  std::vector<int> temporal_depths{2, 6}, temporal_heads{12, 24};
  int temporal_embed = 48;

  int image_channels = 4, image_size = 64, image_patch = 8;
  std::pair<int, int> image_window{4, 4};
  std::vector<int> image_depths{2, 2}, image_heads{6, 12};
  int image_tokens = 16;

  int fusion_width = 96;
  int tabular_features = 0;  // resolved from the prepared feature matrix
  int tabular_hidden = 256, tabular_tokens = 4;
  int gfv_tokens = 4;
  int n_species = 0;
  int heads_ca = 4, heads_mhca = 4;
  bool hcam_enabled = true;
  std::uint64_t seed = 42;

  static ModelConfig from_run(const RunConfig& rc, int tabular_features, int n_species) {
    ModelConfig c;
    auto shape_a = rc.dims("temporal.familyA.shape");
    auto shape_b = rc.dims("temporal.familyB.shape");
    if (shape_a.size() != 3 || shape_b.size() != 3)
      throw ConfigError("cube family shapes must have three dims");
    c.famA_patch = rc.dims2("temporal.familyA.patch");
    c.famA_window = rc.dims2("temporal.familyA.window");
    c.famB_patch = rc.dims2("temporal.familyB.patch");
    c.famB_window = rc.dims2("temporal.familyB.window");
    c.famA_c = shape_a[0];
    c.famA_h = shape_a[1] - shape_a[1] % c.famA_patch.first;
    c.famA_w = shape_a[2] - shape_a[2] % c.famA_patch.second;
    c.famB_c = shape_b[0];
    c.famB_h = shape_b[1] - shape_b[1] % c.famB_patch.first;
    c.famB_w = shape_b[2] - shape_b[2] % c.famB_patch.second;
    c.temporal_depths = rc.int_list("temporal.depths");
    c.temporal_heads = rc.int_list("temporal.heads");
    c.temporal_embed = rc.integer("temporal.embed_dim");
    c.image_channels = rc.integer("image.channels");
    c.image_size = rc.integer("image.size");
    c.image_patch = rc.integer("image.patch");
    c.image_window = rc.dims2("image.window");
    c.image_depths = rc.int_list("image.depths");
    c.image_heads = rc.int_list("image.heads");
    c.image_tokens = rc.integer("image.tokens");
    c.fusion_width = rc.integer("fusion.width");
    c.tabular_features = tabular_features;
    c.tabular_hidden = rc.integer("tabular.hidden");
    c.tabular_tokens = rc.integer("tabular.tokens");
    c.gfv_tokens = rc.integer("gfv.tokens");
    c.n_species = n_species;
    c.heads_ca = rc.integer("hcam.heads_ca");
    c.heads_mhca = rc.integer("hcam.heads_mhca");
    c.hcam_enabled = rc.flag("hcam.enabled");
    c.seed = static_cast<std::uint64_t>(rc.integer("seed"));
    return c;
  }

  std::string canonical() const {
    auto pair_s = [](std::pair<int, int> p) {
      return std::to_string(p.first) + "x" + std::to_string(p.second);
    };
    auto list_s = [](const std::vector<int>& v) {
      std::string s;
      for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
      return s;
    };
    std::string s;
    s += "famA=" + std::to_string(famA_c) + "x" + std::to_string(famA_h) + "x" +
         std::to_string(famA_w) + "/" + pair_s(famA_patch) + "/" + pair_s(famA_window);
    s += ";famB=" + std::to_string(famB_c) + "x" + std::to_string(famB_h) + "x" +
         std::to_string(famB_w) + "/" + pair_s(famB_patch) + "/" + pair_s(famB_window);
    s += ";temporal=" + list_s(temporal_depths) + "/" + list_s(temporal_heads) + "/" +
         std::to_string(temporal_embed);
    s += ";image=" + std::to_string(image_channels) + "x" + std::to_string(image_size) + "/" +
         std::to_string(image_patch) + "/" + pair_s(image_window) + "/" + list_s(image_depths) +
         "/" + list_s(image_heads) + "/" + std::to_string(image_tokens);
    s += ";fusion=" + std::to_string(fusion_width);
    s += ";tabular=" + std::to_string(tabular_features) + "/" + std::to_string(tabular_hidden) +
         "/" + std::to_string(tabular_tokens);
    s += ";gfv=" + std::to_string(gfv_tokens);
    s += ";species=" + std::to_string(n_species);
    s += ";head=" + std::string(hcam_enabled ? "hcam" : "concat") + "/" +
         std::to_string(heads_ca) + "/" + std::to_string(heads_mhca);
    return s;
  }

  std::array<std::uint8_t, 32> hash() const {
    std::string s = canonical();
    return sha256(s.data(), s.size());
  }
};

// The full fusion model: two temporal encoders, the image encoder, the tabular
// and graph-vector encoders, and either the cross-attention head or the
// concatenation baseline. Owns every parameter; layers hold raw pointers into
// the store, so the model is pinned in place once built.
template <class Real>
class TighModel {
 public:
  explicit TighModel(const ModelConfig& c) : cfg_(c) {
    fam_a_ = TwoStageEncoder<Real>::create(params_, "temporalA", c.famA_c, c.famA_h, c.famA_w,
                                           c.famA_patch, c.famA_window, c.temporal_depths,
                                           c.temporal_heads, c.temporal_embed, c.seed);
    fam_b_ = TwoStageEncoder<Real>::create(params_, "temporalB", c.famB_c, c.famB_h, c.famB_w,
                                           c.famB_patch, c.famB_window, c.temporal_depths,
                                           c.temporal_heads, c.temporal_embed, c.seed);
    if (c.fusion_width % 2 != 0) throw ConfigError("fusion width must be even");
    int image_embed = c.fusion_width / 2;
    image_ = TwoStageEncoder<Real>::create(params_, "image", c.image_channels, c.image_size,
                                           c.image_size, {c.image_patch, c.image_patch},
                                           c.image_window, c.image_depths, c.image_heads,
                                           image_embed, c.seed);
    if (fam_a_.out_dim != c.fusion_width || fam_b_.out_dim != c.fusion_width)
      throw ConfigError("temporal encoder width " + std::to_string(fam_a_.out_dim) +
                        " does not match fusion width " + std::to_string(c.fusion_width));
    if (image_.final_tokens != c.image_tokens)
      throw ConfigError("image encoder yields " + std::to_string(image_.final_tokens) +
                        " tokens, config expects " + std::to_string(c.image_tokens));
    tabular_ = TabularEncoder<Real>::create(params_, "tabular", c.tabular_features,
                                            c.tabular_hidden, c.tabular_tokens, c.fusion_width,
                                            c.seed);
    gfv_ = GfvCompress<Real>::create(params_, "gfv", c.n_species, c.gfv_tokens, c.fusion_width,
                                     c.seed);
    if (c.hcam_enabled)
      hcam_ = HcamHead<Real>::create(params_, "hcam", c.fusion_width, c.heads_ca, c.heads_mhca,
                                     c.n_species, c.seed);
    else
      baseline_ = ConcatBaselineHead<Real>::create(params_, "head", c.fusion_width, c.n_species,
                                                   c.seed);
  }

  TighModel(const TighModel&) = delete;
  TighModel& operator=(const TighModel&) = delete;

  // All inputs are flattened rows: cube_a [1×c·h·w], cube_b likewise, image
  // [1×c·s·s], tab [1×features], gfv [1×n_species]. Returns the probability
  // node [1×n_species].
  int forward(Tape<Real>& t, int cube_a, int cube_b, int image, int tab, int gfv) const {
    int ta = fam_a_.apply(t, cube_a);
    int tb = fam_b_.apply(t, cube_b);
    int tokens_t = t.concat_rows({ta, tb});
    int tokens_s = image_.apply(t, image);
    int tokens_f = tabular_.apply(t, tab);
    int tokens_g = gfv_.apply(t, gfv);
    if (cfg_.hcam_enabled) return hcam_.apply(t, tokens_t, tokens_s, tokens_f, tokens_g);
    return baseline_.apply(t, tokens_t, tokens_s, tokens_f, tokens_g);
  }

  int temporal_tokens() const { return fam_a_.final_tokens + fam_b_.final_tokens; }
  const TwoStageEncoder<Real>& family_a() const { return fam_a_; }
  const TwoStageEncoder<Real>& family_b() const { return fam_b_; }
  const TwoStageEncoder<Real>& image_encoder() const { return image_; }

  ParamStore<Real>& params() { return params_; }
  const ModelConfig& config() const { return cfg_; }

  void save(const std::string& path) const { params_.save_checkpoint(path, cfg_.hash()); }
  void load(const std::string& path) { params_.load_checkpoint(path, cfg_.hash()); }
  std::string checksum() const { return params_.checksum(); }

 private:
  ModelConfig cfg_;
  ParamStore<Real> params_;
  TwoStageEncoder<Real> fam_a_, fam_b_, image_;
  TabularEncoder<Real> tabular_;
  GfvCompress<Real> gfv_;
  HcamHead<Real> hcam_;
  ConcatBaselineHead<Real> baseline_;
};

}  // namespace tigh

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "tigh/params.hpp"
#include "tigh/tape.hpp"

namespace tigh {

template <class Real>
struct LinearLayer {
  Parameter<Real>* w = nullptr;
  Parameter<Real>* b = nullptr;

  static LinearLayer create(ParamStore<Real>& ps, const std::string& name, int in, int out,
                            std::uint64_t seed, bool bias = true) {
    LinearLayer l;
    l.w = &ps.add(name + "/w", in, out);
    init_linear(*l.w, seed);
    if (bias) l.b = &ps.add(name + "/b", 1, out);
    return l;
  }

  int apply(Tape<Real>& t, int x) const {
    return t.linear(x, t.param(*w), b ? t.param(*b) : -1);
  }
};

template <class Real>
struct LayerNormLayer {
  Parameter<Real>* g = nullptr;
  Parameter<Real>* b = nullptr;

  static LayerNormLayer create(ParamStore<Real>& ps, const std::string& name, int dim) {
    LayerNormLayer n;
    n.g = &ps.add(name + "/g", 1, dim);
    init_const(*n.g, Real(1));
    n.b = &ps.add(name + "/b", 1, dim);
    return n;
  }

  int apply(Tape<Real>& t, int x) const { return t.layer_norm(x, t.param(*g), t.param(*b)); }
};

// Precomputed geometry for windowed attention over a gh×gw token grid:
// the grid is padded to window multiples, optionally cyclically shifted, and
// partitioned window-major. part maps each canvas slot to its source token
// (-1 = padding); region ids reproduce the classic shifted-window mask bands,
// with padding in its own region so real tokens never attend it.
struct WindowLayout {
  int gh = 0, gw = 0;
  int wh = 0, ww = 0;    // clipped to the grid
  int ph_ = 0, pw_ = 0;  // padded canvas
  int sh = 0, sw = 0;
  int nwin = 0, wsize = 0;
  std::shared_ptr<const std::vector<int>> part;       // canvas slot -> token row
  std::shared_ptr<const std::vector<int>> rel_index;  // wsize*wsize bias offsets
  std::vector<std::shared_ptr<const std::vector<int>>> win_region;
};

inline WindowLayout make_window_layout(int gh, int gw, int wh, int ww, bool shifted) {
  WindowLayout L;
  L.gh = gh;
  L.gw = gw;
  L.wh = std::min(wh, gh);
  L.ww = std::min(ww, gw);
  L.ph_ = ((gh + L.wh - 1) / L.wh) * L.wh;
  L.pw_ = ((gw + L.ww - 1) / L.ww) * L.ww;
  L.sh = (shifted && gh > L.wh) ? L.wh / 2 : 0;
  L.sw = (shifted && gw > L.ww) ? L.ww / 2 : 0;
  L.wsize = L.wh * L.ww;
  L.nwin = (L.ph_ / L.wh) * (L.pw_ / L.ww);

  auto region_of = [&](int r, int c) {
    if (r >= gh || c >= gw) return 9;  // padding
    int hb = r < L.ph_ - L.wh ? 0 : (r < L.ph_ - L.sh ? 1 : 2);
    int wb = c < L.pw_ - L.ww ? 0 : (c < L.pw_ - L.sw ? 1 : 2);
    return hb * 3 + wb;
  };

  auto part = std::make_shared<std::vector<int>>();
  part->reserve(static_cast<std::size_t>(L.nwin) * L.wsize);
  for (int wr = 0; wr < L.ph_ / L.wh; ++wr)
    for (int wc = 0; wc < L.pw_ / L.ww; ++wc) {
      auto reg = std::make_shared<std::vector<int>>();
      reg->reserve(L.wsize);
      for (int i = 0; i < L.wh; ++i)
        for (int j = 0; j < L.ww; ++j) {
          int r = (wr * L.wh + i + L.sh) % L.ph_;
          int c = (wc * L.ww + j + L.sw) % L.pw_;
          part->push_back(r < gh && c < gw ? r * gw + c : -1);
          reg->push_back(region_of(r, c));
        }
      L.win_region.push_back(std::move(reg));
    }
  L.part = std::move(part);

  auto rel = std::make_shared<std::vector<int>>(static_cast<std::size_t>(L.wsize) * L.wsize);
  for (int q = 0; q < L.wsize; ++q)
    for (int k = 0; k < L.wsize; ++k)
      (*rel)[static_cast<std::size_t>(q) * L.wsize + k] = q - k + (L.wsize - 1);
  L.rel_index = std::move(rel);
  return L;
}

// Expands a row map to a flat element map for a given feature width.
inline std::shared_ptr<const std::vector<int>> expand_rows(
    const std::vector<int>& row_map, int dim) {
  auto out = std::make_shared<std::vector<int>>(row_map.size() * dim);
  for (std::size_t r = 0; r < row_map.size(); ++r)
    for (int e = 0; e < dim; ++e)
      (*out)[r * dim + e] = row_map[r] < 0 ? -1 : row_map[r] * dim + e;
  return out;
}

// Multi-head self-attention within windows, with a learned bias table indexed
// by the flattened in-window position difference. Projections are bias-free
// and there is no output projection.
template <class Real>
struct WindowAttention {
  int dim = 0, heads = 0;
  WindowLayout layout;
  LinearLayer<Real> wq, wk, wv;
  Parameter<Real>* bias_table = nullptr;
  std::shared_ptr<const std::vector<int>> part_elem, unpart_elem;

  static WindowAttention create(ParamStore<Real>& ps, const std::string& name, int dim, int heads,
                                WindowLayout layout, std::uint64_t seed) {
    WindowAttention a;
    a.dim = dim;
    a.heads = heads;
    a.layout = std::move(layout);
    a.wq = LinearLayer<Real>::create(ps, name + "/wq", dim, dim, seed, false);
    a.wk = LinearLayer<Real>::create(ps, name + "/wk", dim, dim, seed, false);
    a.wv = LinearLayer<Real>::create(ps, name + "/wv", dim, dim, seed, false);
    a.bias_table = &ps.add(name + "/bias", heads, 2 * a.layout.wsize - 1);
    init_normal(*a.bias_table, seed, 0.02);
    a.part_elem = expand_rows(*a.layout.part, dim);
    std::vector<int> unpart(static_cast<std::size_t>(a.layout.gh) * a.layout.gw, -1);
    for (std::size_t slot = 0; slot < a.layout.part->size(); ++slot) {
      int tok = (*a.layout.part)[slot];
      if (tok >= 0) unpart[tok] = static_cast<int>(slot);
    }
    a.unpart_elem = expand_rows(unpart, dim);
    return a;
  }

  int apply(Tape<Real>& t, int x) const {
    int q = t.gather(wq.apply(t, x), part_elem, layout.nwin * layout.wsize, dim);
    int k = t.gather(wk.apply(t, x), part_elem, layout.nwin * layout.wsize, dim);
    int v = t.gather(wv.apply(t, x), part_elem, layout.nwin * layout.wsize, dim);
    int table = t.param(*bias_table);
    std::vector<int> outs;
    outs.reserve(layout.nwin);
    for (int w = 0; w < layout.nwin; ++w) {
      typename Tape<Real>::MhaOptions opt;
      opt.bias_table = table;
      opt.rel_index = layout.rel_index;
      opt.q_region = layout.win_region[w];
      opt.k_region = layout.win_region[w];
      int qs = t.slice_rows(q, w * layout.wsize, layout.wsize);
      int ks = t.slice_rows(k, w * layout.wsize, layout.wsize);
      int vs = t.slice_rows(v, w * layout.wsize, layout.wsize);
      outs.push_back(t.mha(qs, ks, vs, heads, opt));
    }
    int cat = t.concat_rows(outs);
    return t.gather(cat, unpart_elem, layout.gh * layout.gw, dim);
  }
};

// One transformer block: attention with residual, then layer-norm + MLP with a
// residual that skips over the norm (all-zero parameters give the identity).
template <class Real>
struct SwinBlock {
  WindowAttention<Real> attn;
  LayerNormLayer<Real> norm;
  LinearLayer<Real> mlp1, mlp2;

  static SwinBlock create(ParamStore<Real>& ps, const std::string& name, int dim, int heads,
                          int gh, int gw, int wh, int ww, bool shifted, std::uint64_t seed,
                          int mlp_ratio = 4) {
    SwinBlock b;
    b.attn = WindowAttention<Real>::create(ps, name + "/attn", dim, heads,
                                           make_window_layout(gh, gw, wh, ww, shifted), seed);
    b.norm = LayerNormLayer<Real>::create(ps, name + "/norm", dim);
    b.mlp1 = LinearLayer<Real>::create(ps, name + "/mlp1", dim, mlp_ratio * dim, seed);
    b.mlp2 = LinearLayer<Real>::create(ps, name + "/mlp2", mlp_ratio * dim, dim, seed);
    return b;
  }

  int apply(Tape<Real>& t, int x) const {
    int r = t.add(x, attn.apply(t, x));
    int m = mlp2.apply(t, t.gelu(mlp1.apply(t, norm.apply(t, r))));
    return t.add(r, m);
  }
};

// Non-overlapping patch extraction + linear projection to embed_dim.
template <class Real>
struct PatchEmbed {
  int channels = 0, rows = 0, cols = 0;
  int gh = 0, gw = 0, patch_len = 0, dim = 0;
  std::shared_ptr<const std::vector<int>> elem;
  LinearLayer<Real> proj;

  static PatchEmbed create(ParamStore<Real>& ps, const std::string& name, int c, int h, int w,
                           int ph, int pw, int dim, std::uint64_t seed) {
    if (h % ph != 0 || w % pw != 0)
      throw ShapeError(name + ": input " + std::to_string(h) + "x" + std::to_string(w) +
                       " not divisible by patch " + std::to_string(ph) + "x" + std::to_string(pw));
    PatchEmbed e;
    e.channels = c;
    e.rows = h;
    e.cols = w;
    e.gh = h / ph;
    e.gw = w / pw;
    e.patch_len = c * ph * pw;
    e.dim = dim;
    auto map = std::make_shared<std::vector<int>>();
    map->reserve(static_cast<std::size_t>(e.gh) * e.gw * e.patch_len);
    for (int tr = 0; tr < e.gh; ++tr)
      for (int tc = 0; tc < e.gw; ++tc)
        for (int ch = 0; ch < c; ++ch)
          for (int i = 0; i < ph; ++i)
            for (int j = 0; j < pw; ++j)
              map->push_back(ch * h * w + (tr * ph + i) * w + (tc * pw + j));
    e.elem = std::move(map);
    e.proj = LinearLayer<Real>::create(ps, name + "/proj", e.patch_len, dim, seed);
    return e;
  }

  // x: [1 × channels*rows*cols] flattened input
  int apply(Tape<Real>& t, int x) const {
    return proj.apply(t, t.gather(x, elem, gh * gw, patch_len));
  }
};

// 2×2 neighborhood concatenation (edge-replicated when odd) + linear 4d→2d.
template <class Real>
struct PatchMerge {
  int gh = 0, gw = 0, dim = 0;
  int oh = 0, ow = 0;
  std::shared_ptr<const std::vector<int>> elem;
  LinearLayer<Real> reduce;

  static PatchMerge create(ParamStore<Real>& ps, const std::string& name, int gh, int gw, int dim,
                           std::uint64_t seed) {
    PatchMerge m;
    m.gh = gh;
    m.gw = gw;
    m.dim = dim;
    m.oh = (gh + 1) / 2;
    m.ow = (gw + 1) / 2;
    std::vector<int> rows;
    rows.reserve(static_cast<std::size_t>(m.oh) * m.ow * 4);
    for (int r = 0; r < m.oh; ++r)
      for (int c = 0; c < m.ow; ++c)
        for (int dj = 0; dj < 2; ++dj)
          for (int di = 0; di < 2; ++di)
            rows.push_back(std::min(2 * r + di, gh - 1) * gw + std::min(2 * c + dj, gw - 1));
    m.elem = expand_rows(rows, dim);  // [oh*ow × 4*dim] element map
    m.reduce = LinearLayer<Real>::create(ps, name + "/reduce", 4 * dim, 2 * dim, seed);
    return m;
  }

  int apply(Tape<Real>& t, int tokens) const {
    return reduce.apply(t, t.gather(tokens, elem, oh * ow, 4 * dim));
  }
};

// Patch embed → stage 1 → patch merge → stage 2, with shifted windows on
// odd-indexed blocks where the grid allows a shift.
template <class Real>
struct TwoStageEncoder {
  PatchEmbed<Real> embed;
  std::vector<SwinBlock<Real>> stage1, stage2;
  PatchMerge<Real> merge;
  int tokens_stage1 = 0, final_tokens = 0, out_dim = 0;

  static TwoStageEncoder create(ParamStore<Real>& ps, const std::string& name, int c, int h, int w,
                                std::pair<int, int> patch, std::pair<int, int> window,
                                std::vector<int> depths, std::vector<int> heads, int embed_dim,
                                std::uint64_t seed) {
    if (depths.size() != 2 || heads.size() != 2)
      throw ConfigError(name + ": expected two stage depths and head counts");
    if (embed_dim % heads[0] != 0 || (2 * embed_dim) % heads[1] != 0)
      throw ConfigError(name + ": head counts must divide stage widths");
    TwoStageEncoder enc;
    enc.embed = PatchEmbed<Real>::create(ps, name + "/embed", c, h, w, patch.first, patch.second,
                                         embed_dim, seed);
    int g1h = enc.embed.gh, g1w = enc.embed.gw;
    for (int i = 0; i < depths[0]; ++i)
      enc.stage1.push_back(SwinBlock<Real>::create(ps, name + "/s1b" + std::to_string(i),
                                                   embed_dim, heads[0], g1h, g1w, window.first,
                                                   window.second, i % 2 == 1, seed));
    enc.merge = PatchMerge<Real>::create(ps, name + "/merge", g1h, g1w, embed_dim, seed);
    int g2h = enc.merge.oh, g2w = enc.merge.ow;
    for (int i = 0; i < depths[1]; ++i)
      enc.stage2.push_back(SwinBlock<Real>::create(ps, name + "/s2b" + std::to_string(i),
                                                   2 * embed_dim, heads[1], g2h, g2w, window.first,
                                                   window.second, i % 2 == 1, seed));
    enc.tokens_stage1 = g1h * g1w;
    enc.final_tokens = g2h * g2w;
    enc.out_dim = 2 * embed_dim;
    return enc;
  }

  // x: [1 × c*h*w] -> [final_tokens × out_dim]
  int apply(Tape<Real>& t, int x) const {
    int h = embed.apply(t, x);
    for (const auto& b : stage1) h = b.apply(t, h);
    h = merge.apply(t, h);
    for (const auto& b : stage2) h = b.apply(t, h);
    return h;
  }
};

}  // namespace tigh

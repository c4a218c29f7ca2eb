#pragma once

#include <string>

#include "tigh/swin.hpp"

namespace tigh {

// Tri-modal cross-attention with residual cutoff. Temporal tokens query the
// image tokens through one head group, tabular tokens through a parallel one;
// the pooled attention outputs are concatenated and a linear map of the pooled
// raw streams is added on top.
template <class Real>
struct TriModalCa {
  int width = 0, heads = 0;
  LinearLayer<Real> w_qt, w_qf, w_k1, w_v1, w_k2, w_v2;
  LinearLayer<Real> cutoff;  // 3d -> 2d

  static TriModalCa create(ParamStore<Real>& ps, const std::string& name, int width, int heads,
                           std::uint64_t seed) {
    TriModalCa m;
    m.width = width;
    m.heads = heads;
    m.w_qt = LinearLayer<Real>::create(ps, name + "/wqt", width, width, seed, false);
    m.w_qf = LinearLayer<Real>::create(ps, name + "/wqf", width, width, seed, false);
    m.w_k1 = LinearLayer<Real>::create(ps, name + "/wk1", width, width, seed, false);
    m.w_v1 = LinearLayer<Real>::create(ps, name + "/wv1", width, width, seed, false);
    m.w_k2 = LinearLayer<Real>::create(ps, name + "/wk2", width, width, seed, false);
    m.w_v2 = LinearLayer<Real>::create(ps, name + "/wv2", width, width, seed, false);
    m.cutoff = LinearLayer<Real>::create(ps, name + "/cutoff", 3 * width, 2 * width, seed);
    return m;
  }

  // tT:[tT×d], tF:[m×d], tS:[s×d] -> [1×2d]
  int apply(Tape<Real>& t, int tT, int tF, int tS) const {
    int a1 = t.mha(w_qt.apply(t, tT), w_k1.apply(t, tS), w_v1.apply(t, tS), heads);
    int a2 = t.mha(w_qf.apply(t, tF), w_k2.apply(t, tS), w_v2.apply(t, tS), heads);
    int o = t.concat_cols({t.mean_rows(a1), t.mean_rows(a2)});
    int o2 = t.concat_cols({t.mean_rows(tT), t.mean_rows(tF), t.mean_rows(tS)});
    return t.add(o, cutoff.apply(t, o2));
  }
};

// Multi-head cross-attention of the pooled-modality queries against the
// compressed graph tokens, mean-pooled to a single width-d vector.
template <class Real>
struct GraphMhca {
  int width = 0, heads = 0;
  LinearLayer<Real> w_q, w_k, w_v;

  static GraphMhca create(ParamStore<Real>& ps, const std::string& name, int width, int heads,
                          std::uint64_t seed) {
    GraphMhca m;
    m.width = width;
    m.heads = heads;
    m.w_q = LinearLayer<Real>::create(ps, name + "/wq", width, width, seed, false);
    m.w_k = LinearLayer<Real>::create(ps, name + "/wk", width, width, seed, false);
    m.w_v = LinearLayer<Real>::create(ps, name + "/wv", width, width, seed, false);
    return m;
  }

  // tF,tS,tT token streams; tG:[g×d] -> [1×d]
  int apply(Tape<Real>& t, int tF, int tS, int tT, int tG) const {
    int c = t.concat_rows({t.mean_rows(tF), t.mean_rows(tS), t.mean_rows(tT)});
    int a = t.mha(w_q.apply(t, c), w_k.apply(t, tG), w_v.apply(t, tG), heads);
    return t.mean_rows(a);
  }
};

// Full fusion head: [O_MHCA | O_CA] -> species probabilities.
template <class Real>
struct HcamHead {
  TriModalCa<Real> ca;
  GraphMhca<Real> mhca;
  LinearLayer<Real> out;

  static HcamHead create(ParamStore<Real>& ps, const std::string& name, int width, int heads_ca,
                         int heads_mhca, int n_species, std::uint64_t seed) {
    HcamHead h;
    h.ca = TriModalCa<Real>::create(ps, name + "/ca", width, heads_ca, seed);
    h.mhca = GraphMhca<Real>::create(ps, name + "/mhca", width, heads_mhca, seed);
    h.out = LinearLayer<Real>::create(ps, name + "/out", 3 * width, n_species, seed);
    return h;
  }

  int apply(Tape<Real>& t, int tT, int tS, int tF, int tG) const {
    int oca = ca.apply(t, tT, tF, tS);
    int omh = mhca.apply(t, tF, tS, tT, tG);
    return t.sigmoid(out.apply(t, t.concat_cols({omh, oca})));
  }
};

// Ablation control: mean-pool every stream, concatenate, linear head, sigmoid.
template <class Real>
struct ConcatBaselineHead {
  LinearLayer<Real> out;

  static ConcatBaselineHead create(ParamStore<Real>& ps, const std::string& name, int width,
                                   int n_species, std::uint64_t seed) {
    ConcatBaselineHead h;
    h.out = LinearLayer<Real>::create(ps, name + "/out", 4 * width, n_species, seed);
    return h;
  }

  int apply(Tape<Real>& t, int tT, int tS, int tF, int tG) const {
    int c = t.concat_cols({t.mean_rows(tT), t.mean_rows(tS), t.mean_rows(tF), t.mean_rows(tG)});
    return t.sigmoid(out.apply(t, c));
  }
};

}  // namespace tigh

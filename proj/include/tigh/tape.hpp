#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <vector>

#include "tigh/params.hpp"
#include "tigh/tensor.hpp"

namespace tigh {

// Reverse-mode autodiff over an explicit record of operations. Each op appends
// a node holding its forward value and a closure that scatters the incoming
// gradient to its inputs; backward() walks the record once in reverse. A tape
// is built per training step and is strictly single-threaded.
//
// Values are rank-2 throughout. Index maps for patch extraction, window
// partition and merge are plain element permutations applied with gather().
template <class Real>
class Tape {
 public:
  using BackFn = std::function<void(Tape&, int)>;
  using IndexMap = std::shared_ptr<const std::vector<int>>;

  // ---- leaves ----

  int input(Tensor<Real> v) { return push(std::move(v), false, nullptr); }

  // Differentiable non-parameter leaf; grad readable via grad_of after backward.
  int leaf(Tensor<Real> v) { return push(std::move(v), true, nullptr); }

  int param(Parameter<Real>& p) {
    for (const auto& [ptr, id] : param_nodes_)
      if (ptr == &p) return id;
    int id = push(p.value, true, nullptr);
    nodes_[id].leaf_param = &p;
    param_nodes_.push_back({&p, id});
    return id;
  }

  // ---- arithmetic ----

  int matmul(int a, int b) {
    Tensor<Real> y(val(a).rows, val(b).cols);
    mat_mul(val(a), val(b), y, false);
    return push(std::move(y), needs(a) || needs(b), [a, b](Tape& t, int self) {
      if (t.needs(a)) mat_mul_nt(t.grad(self), t.val(b), t.grad(a), true);
      if (t.needs(b)) mat_mul_tn(t.val(a), t.grad(self), t.grad(b), true);
    });
  }

  int matmul_nt(int a, int b) {
    Tensor<Real> y(val(a).rows, val(b).rows);
    mat_mul_nt(val(a), val(b), y, false);
    return push(std::move(y), needs(a) || needs(b), [a, b](Tape& t, int self) {
      if (t.needs(a)) mat_mul(t.grad(self), t.val(b), t.grad(a), true);
      if (t.needs(b)) mat_mul_tn(t.grad(self), t.val(a), t.grad(b), true);
    });
  }

  // y = xW + b. Pass b = -1 for a bias-free projection.
  int linear(int x, int w, int b) {
    const Tensor<Real>& xv = val(x);
    const Tensor<Real>& wv = val(w);
    Tensor<Real> y(xv.rows, wv.cols);
    mat_mul(xv, wv, y, false);
    if (b >= 0) {
      const Tensor<Real>& bv = val(b);
      if (bv.rows != 1 || bv.cols != y.cols) throw ShapeError("linear bias " + bv.shape_str());
      for (int i = 0; i < y.rows; ++i)
        for (int j = 0; j < y.cols; ++j) y.at(i, j) += bv.at(0, j);
    }
    bool ng = needs(x) || needs(w) || (b >= 0 && needs(b));
    return push(std::move(y), ng, [x, w, b](Tape& t, int self) {
      if (t.needs(x)) mat_mul_nt(t.grad(self), t.val(w), t.grad(x), true);
      if (t.needs(w)) mat_mul_tn(t.val(x), t.grad(self), t.grad(w), true);
      if (b >= 0 && t.needs(b)) {
        const Tensor<Real>& g = t.grad(self);
        Tensor<Real>& gb = t.grad(b);
        for (int j = 0; j < g.cols; ++j) {
          double s = 0.0;
          for (int i = 0; i < g.rows; ++i) s += static_cast<double>(g.at(i, j));
          gb.at(0, j) += static_cast<Real>(s);
        }
      }
    });
  }

  int add(int a, int b) {
    const Tensor<Real>& av = val(a);
    const Tensor<Real>& bv = val(b);
    if (!av.same_shape(bv)) throw ShapeError("add " + av.shape_str() + " vs " + bv.shape_str());
    Tensor<Real> y = av;
    for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] += bv.data[i];
    return push(std::move(y), needs(a) || needs(b), [a, b](Tape& t, int self) {
      const Tensor<Real>& g = t.grad(self);
      if (t.needs(a))
        for (std::size_t i = 0; i < g.data.size(); ++i) t.grad(a).data[i] += g.data[i];
      if (t.needs(b))
        for (std::size_t i = 0; i < g.data.size(); ++i) t.grad(b).data[i] += g.data[i];
    });
  }

  int scale(int x, double s) {
    Tensor<Real> y = val(x);
    for (auto& v : y.data) v = static_cast<Real>(s * static_cast<double>(v));
    return push(std::move(y), needs(x), [x, s](Tape& t, int self) {
      if (!t.needs(x)) return;
      const Tensor<Real>& g = t.grad(self);
      for (std::size_t i = 0; i < g.data.size(); ++i)
        t.grad(x).data[i] += static_cast<Real>(s * static_cast<double>(g.data[i]));
    });
  }

  // Adds a constant matrix (e.g. an attention mask); no gradient to the bias.
  int add_const(int x, const Tensor<Real>& c) {
    const Tensor<Real>& xv = val(x);
    if (!xv.same_shape(c)) throw ShapeError("add_const shape");
    Tensor<Real> y = xv;
    for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] += c.data[i];
    return push(std::move(y), needs(x), [x](Tape& t, int self) {
      if (!t.needs(x)) return;
      const Tensor<Real>& g = t.grad(self);
      for (std::size_t i = 0; i < g.data.size(); ++i) t.grad(x).data[i] += g.data[i];
    });
  }

  // ---- nonlinearities ----

  int softmax_rows(int x) {
    const Tensor<Real>& xv = val(x);
    Tensor<Real> y(xv.rows, xv.cols);
    for (int i = 0; i < xv.rows; ++i) {
      double mx = -1e300;
      for (int j = 0; j < xv.cols; ++j) mx = std::max(mx, static_cast<double>(xv.at(i, j)));
      double sum = 0.0;
      for (int j = 0; j < xv.cols; ++j) sum += std::exp(static_cast<double>(xv.at(i, j)) - mx);
      for (int j = 0; j < xv.cols; ++j)
        y.at(i, j) = static_cast<Real>(std::exp(static_cast<double>(xv.at(i, j)) - mx) / sum);
    }
    return push(std::move(y), needs(x), [x](Tape& t, int self) {
      if (!t.needs(x)) return;
      const Tensor<Real>& y = t.val(self);
      const Tensor<Real>& g = t.grad(self);
      for (int i = 0; i < y.rows; ++i) {
        double dot = 0.0;
        for (int j = 0; j < y.cols; ++j)
          dot += static_cast<double>(g.at(i, j)) * static_cast<double>(y.at(i, j));
        for (int j = 0; j < y.cols; ++j)
          t.grad(x).at(i, j) += static_cast<Real>(
              (static_cast<double>(g.at(i, j)) - dot) * static_cast<double>(y.at(i, j)));
      }
    });
  }

  int sigmoid(int x) {
    Tensor<Real> y = val(x);
    for (auto& v : y.data) {
      double z = static_cast<double>(v);
      v = static_cast<Real>(z >= 0.0 ? 1.0 / (1.0 + std::exp(-z))
                                     : std::exp(z) / (1.0 + std::exp(z)));
    }
    return push(std::move(y), needs(x), [x](Tape& t, int self) {
      if (!t.needs(x)) return;
      const Tensor<Real>& y = t.val(self);
      const Tensor<Real>& g = t.grad(self);
      for (std::size_t i = 0; i < y.data.size(); ++i) {
        double s = static_cast<double>(y.data[i]);
        t.grad(x).data[i] += static_cast<Real>(static_cast<double>(g.data[i]) * s * (1.0 - s));
      }
    });
  }

  int gelu(int x) {
    Tensor<Real> y = val(x);
    for (auto& v : y.data) {
      double z = static_cast<double>(v);
      v = static_cast<Real>(z * 0.5 * std::erfc(-z / std::numbers::sqrt2));
    }
    return push(std::move(y), needs(x), [x](Tape& t, int self) {
      if (!t.needs(x)) return;
      const Tensor<Real>& xv = t.val(x);
      const Tensor<Real>& g = t.grad(self);
      for (std::size_t i = 0; i < xv.data.size(); ++i) {
        double z = static_cast<double>(xv.data[i]);
        double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
        double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
        t.grad(x).data[i] += static_cast<Real>(static_cast<double>(g.data[i]) * (cdf + z * pdf));
      }
    });
  }

  // Normalization over the last axis with learnable scale g and shift b.
  int layer_norm(int x, int gparam, int bparam, double eps = 1e-5) {
    const Tensor<Real>& xv = val(x);
    const Tensor<Real>& gv = val(gparam);
    if (gv.rows != 1 || gv.cols != xv.cols) throw ShapeError("layer_norm scale shape");
    auto xhat = std::make_shared<Tensor<Real>>(xv.rows, xv.cols);
    auto inv = std::make_shared<std::vector<double>>(xv.rows);
    Tensor<Real> y(xv.rows, xv.cols);
    const Tensor<Real>& bv = val(bparam);
    for (int i = 0; i < xv.rows; ++i) {
      double mu = 0.0;
      for (int j = 0; j < xv.cols; ++j) mu += static_cast<double>(xv.at(i, j));
      mu /= xv.cols;
      double var = 0.0;
      for (int j = 0; j < xv.cols; ++j) {
        double d = static_cast<double>(xv.at(i, j)) - mu;
        var += d * d;
      }
      var /= xv.cols;
      double is = 1.0 / std::sqrt(var + eps);
      (*inv)[i] = is;
      for (int j = 0; j < xv.cols; ++j) {
        double xh = (static_cast<double>(xv.at(i, j)) - mu) * is;
        xhat->at(i, j) = static_cast<Real>(xh);
        y.at(i, j) = static_cast<Real>(xh * static_cast<double>(gv.at(0, j)) +
                                       static_cast<double>(bv.at(0, j)));
      }
    }
    bool ng = needs(x) || needs(gparam) || needs(bparam);
    return push(std::move(y), ng, [x, gparam, bparam, xhat, inv](Tape& t, int self) {
      const Tensor<Real>& g = t.grad(self);
      const Tensor<Real>& gv = t.val(gparam);
      int cols = g.cols;
      for (int i = 0; i < g.rows; ++i) {
        double m1 = 0.0, m2 = 0.0;
        std::vector<double> dxh(cols);
        for (int j = 0; j < cols; ++j) {
          dxh[j] = static_cast<double>(g.at(i, j)) * static_cast<double>(gv.at(0, j));
          m1 += dxh[j];
          m2 += dxh[j] * static_cast<double>(xhat->at(i, j));
        }
        m1 /= cols;
        m2 /= cols;
        if (t.needs(x))
          for (int j = 0; j < cols; ++j)
            t.grad(x).at(i, j) += static_cast<Real>(
                (*inv)[i] * (dxh[j] - m1 - static_cast<double>(xhat->at(i, j)) * m2));
        if (t.needs(gparam))
          for (int j = 0; j < cols; ++j)
            t.grad(gparam).at(0, j) += static_cast<Real>(static_cast<double>(g.at(i, j)) *
                                                         static_cast<double>(xhat->at(i, j)));
        if (t.needs(bparam))
          for (int j = 0; j < cols; ++j) t.grad(bparam).at(0, j) += g.at(i, j);
      }
    });
  }

  // ---- structure ----

  int concat_rows(const std::vector<int>& xs) {
    int cols = val(xs.at(0)).cols;
    int rows = 0;
    bool ng = false;
    for (int x : xs) {
      if (val(x).cols != cols) throw ShapeError("concat_rows column mismatch");
      rows += val(x).rows;
      ng = ng || needs(x);
    }
    Tensor<Real> y(rows, cols);
    int r = 0;
    for (int x : xs) {
      const Tensor<Real>& xv = val(x);
      std::copy(xv.data.begin(), xv.data.end(), y.data.begin() + static_cast<std::size_t>(r) * cols);
      r += xv.rows;
    }
    auto parts = std::make_shared<const std::vector<int>>(xs);
    return push(std::move(y), ng, [parts](Tape& t, int self) {
      const Tensor<Real>& g = t.grad(self);
      int r = 0;
      for (int x : *parts) {
        Tensor<Real>& gx = t.grad(x);
        if (t.needs(x))
          for (std::size_t i = 0; i < gx.data.size(); ++i)
            gx.data[i] += g.data[static_cast<std::size_t>(r) * g.cols + i];
        r += t.val(x).rows;
      }
    });
  }

  int concat_cols(const std::vector<int>& xs) {
    int rows = val(xs.at(0)).rows;
    int cols = 0;
    bool ng = false;
    for (int x : xs) {
      if (val(x).rows != rows) throw ShapeError("concat_cols row mismatch");
      cols += val(x).cols;
      ng = ng || needs(x);
    }
    Tensor<Real> y(rows, cols);
    int c0 = 0;
    for (int x : xs) {
      const Tensor<Real>& xv = val(x);
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < xv.cols; ++j) y.at(i, c0 + j) = xv.at(i, j);
      c0 += xv.cols;
    }
    auto parts = std::make_shared<const std::vector<int>>(xs);
    return push(std::move(y), ng, [parts](Tape& t, int self) {
      const Tensor<Real>& g = t.grad(self);
      int c0 = 0;
      for (int x : *parts) {
        const Tensor<Real>& xv = t.val(x);
        if (t.needs(x))
          for (int i = 0; i < xv.rows; ++i)
            for (int j = 0; j < xv.cols; ++j) t.grad(x).at(i, j) += g.at(i, c0 + j);
        c0 += xv.cols;
      }
    });
  }

  int slice_rows(int x, int r0, int n) {
    const Tensor<Real>& xv = val(x);
    if (r0 < 0 || r0 + n > xv.rows) throw ShapeError("slice_rows out of range");
    Tensor<Real> y(n, xv.cols);
    std::copy(xv.data.begin() + static_cast<std::size_t>(r0) * xv.cols,
              xv.data.begin() + static_cast<std::size_t>(r0 + n) * xv.cols, y.data.begin());
    return push(std::move(y), needs(x), [x, r0](Tape& t, int self) {
      if (!t.needs(x)) return;
      const Tensor<Real>& g = t.grad(self);
      Tensor<Real>& gx = t.grad(x);
      std::size_t off = static_cast<std::size_t>(r0) * g.cols;
      for (std::size_t i = 0; i < g.data.size(); ++i) gx.data[off + i] += g.data[i];
    });
  }

  int mean_rows(int x) {
    const Tensor<Real>& xv = val(x);
    Tensor<Real> y(1, xv.cols);
    for (int j = 0; j < xv.cols; ++j) {
      double s = 0.0;
      for (int i = 0; i < xv.rows; ++i) s += static_cast<double>(xv.at(i, j));
      y.at(0, j) = static_cast<Real>(s / xv.rows);
    }
    return push(std::move(y), needs(x), [x](Tape& t, int self) {
      if (!t.needs(x)) return;
      const Tensor<Real>& g = t.grad(self);
      Tensor<Real>& gx = t.grad(x);
      for (int i = 0; i < gx.rows; ++i)
        for (int j = 0; j < gx.cols; ++j)
          gx.at(i, j) += static_cast<Real>(static_cast<double>(g.at(0, j)) / gx.rows);
    });
  }

  int reshape(int x, int r, int c) {
    const Tensor<Real>& xv = val(x);
    if (static_cast<std::size_t>(r) * c != xv.numel()) throw ShapeError("reshape numel mismatch");
    Tensor<Real> y(r, c);
    y.data = xv.data;
    return push(std::move(y), needs(x), [x](Tape& t, int self) {
      if (!t.needs(x)) return;
      const Tensor<Real>& g = t.grad(self);
      Tensor<Real>& gx = t.grad(x);
      for (std::size_t i = 0; i < g.data.size(); ++i) gx.data[i] += g.data[i];
    });
  }

  // Element permutation by flat index; -1 fills zero (padding). Maps are
  // precomputed per layout and shared across samples.
  int gather(int x, IndexMap idx, int r, int c) {
    const Tensor<Real>& xv = val(x);
    if (idx->size() != static_cast<std::size_t>(r) * c) throw ShapeError("gather map size");
    Tensor<Real> y(r, c);
    for (std::size_t o = 0; o < idx->size(); ++o) {
      int s = (*idx)[o];
      y.data[o] = s < 0 ? Real(0) : xv.data[static_cast<std::size_t>(s)];
    }
    return push(std::move(y), needs(x), [x, idx](Tape& t, int self) {
      if (!t.needs(x)) return;
      const Tensor<Real>& g = t.grad(self);
      Tensor<Real>& gx = t.grad(x);
      for (std::size_t o = 0; o < idx->size(); ++o) {
        int s = (*idx)[o];
        if (s >= 0) gx.data[static_cast<std::size_t>(s)] += g.data[o];
      }
    });
  }

  // ---- attention ----

  struct MhaOptions {
    int bias_table = -1;  // node id of a [heads × n_offsets] table, or -1
    IndexMap rel_index;   // [tq*tk] offsets into the table row
    IndexMap q_region;    // per-token region ids; pairs from different regions
    IndexMap k_region;    // are masked out. Empty means no mask.
  };

  // Multi-head scaled dot-product attention. q:[tq×d], k:[tk×d], v:[tk×dv];
  // per-head scores optionally get a learned relative-position bias and a
  // region mask (shifted-window attention). Heads are concatenated; any output
  // projection is the caller's business.
  int mha(int q, int k, int v, int heads, const MhaOptions& opt = {}) {
    const Tensor<Real>& qv = val(q);
    const Tensor<Real>& kv = val(k);
    const Tensor<Real>& vv = val(v);
    int tq = qv.rows, tk = kv.rows, d = qv.cols, dv = vv.cols;
    if (kv.cols != d || vv.rows != tk) throw ShapeError("mha input shapes");
    if (d % heads != 0 || dv % heads != 0) throw ShapeError("mha heads must divide widths");
    int hd = d / heads, hv = dv / heads;
    double scl = 1.0 / std::sqrt(static_cast<double>(hd));
    const Tensor<Real>* table = opt.bias_table >= 0 ? &val(opt.bias_table) : nullptr;
    if (table && (!opt.rel_index || opt.rel_index->size() != static_cast<std::size_t>(tq) * tk))
      throw ShapeError("mha relative index size");
    bool masked = opt.q_region && !opt.q_region->empty();

    auto probs = std::make_shared<std::vector<Tensor<double>>>();
    probs->reserve(heads);
    Tensor<Real> out(tq, dv);
    for (int a = 0; a < heads; ++a) {
      Tensor<double> s(tq, tk);
      for (int i = 0; i < tq; ++i) {
        for (int j = 0; j < tk; ++j) {
          double dot = 0.0;
          for (int e = 0; e < hd; ++e)
            dot += static_cast<double>(qv.at(i, a * hd + e)) *
                   static_cast<double>(kv.at(j, a * hd + e));
          double sc = dot * scl;
          if (table) sc += static_cast<double>(table->at(a, (*opt.rel_index)[static_cast<std::size_t>(i) * tk + j]));
          if (masked && (*opt.q_region)[i] != (*opt.k_region)[j]) sc = -1e9;
          s.at(i, j) = sc;
        }
        double mx = -1e300;
        for (int j = 0; j < tk; ++j) mx = std::max(mx, s.at(i, j));
        double sum = 0.0;
        for (int j = 0; j < tk; ++j) sum += std::exp(s.at(i, j) - mx);
        for (int j = 0; j < tk; ++j) s.at(i, j) = std::exp(s.at(i, j) - mx) / sum;
      }
      for (int i = 0; i < tq; ++i)
        for (int e = 0; e < hv; ++e) {
          double acc = 0.0;
          for (int j = 0; j < tk; ++j) acc += s.at(i, j) * static_cast<double>(vv.at(j, a * hv + e));
          out.at(i, a * hv + e) = static_cast<Real>(acc);
        }
      probs->push_back(std::move(s));
    }

    bool ng = needs(q) || needs(k) || needs(v) || (opt.bias_table >= 0 && needs(opt.bias_table));
    MhaOptions o = opt;
    return push(std::move(out), ng, [q, k, v, heads, hd, hv, scl, o, probs](Tape& t, int self) {
      const Tensor<Real>& g = t.grad(self);
      const Tensor<Real>& qv = t.val(q);
      const Tensor<Real>& kv = t.val(k);
      const Tensor<Real>& vv = t.val(v);
      int tq = qv.rows, tk = kv.rows;
      for (int a = 0; a < heads; ++a) {
        const Tensor<double>& p = (*probs)[a];
        Tensor<double> gs(tq, tk);
        for (int i = 0; i < tq; ++i) {
          // dP then softmax backward within the row
          double dot = 0.0;
          for (int j = 0; j < tk; ++j) {
            double gp = 0.0;
            for (int e = 0; e < hv; ++e)
              gp += static_cast<double>(g.at(i, a * hv + e)) *
                    static_cast<double>(vv.at(j, a * hv + e));
            gs.at(i, j) = gp;
            dot += gp * p.at(i, j);
          }
          for (int j = 0; j < tk; ++j) gs.at(i, j) = (gs.at(i, j) - dot) * p.at(i, j);
        }
        if (t.needs(v)) {
          Tensor<Real>& gv = t.grad(v);
          for (int j = 0; j < tk; ++j)
            for (int e = 0; e < hv; ++e) {
              double acc = 0.0;
              for (int i = 0; i < tq; ++i)
                acc += p.at(i, j) * static_cast<double>(g.at(i, a * hv + e));
              gv.at(j, a * hv + e) += static_cast<Real>(acc);
            }
        }
        if (t.needs(q)) {
          Tensor<Real>& gq = t.grad(q);
          for (int i = 0; i < tq; ++i)
            for (int e = 0; e < hd; ++e) {
              double acc = 0.0;
              for (int j = 0; j < tk; ++j)
                acc += gs.at(i, j) * static_cast<double>(kv.at(j, a * hd + e));
              gq.at(i, a * hd + e) += static_cast<Real>(acc * scl);
            }
        }
        if (t.needs(k)) {
          Tensor<Real>& gk = t.grad(k);
          for (int j = 0; j < tk; ++j)
            for (int e = 0; e < hd; ++e) {
              double acc = 0.0;
              for (int i = 0; i < tq; ++i)
                acc += gs.at(i, j) * static_cast<double>(qv.at(i, a * hd + e));
              gk.at(j, a * hd + e) += static_cast<Real>(acc * scl);
            }
        }
        if (o.bias_table >= 0 && t.needs(o.bias_table)) {
          Tensor<Real>& gt = t.grad(o.bias_table);
          for (int i = 0; i < tq; ++i)
            for (int j = 0; j < tk; ++j)
              gt.at(a, (*o.rel_index)[static_cast<std::size_t>(i) * tk + j]) +=
                  static_cast<Real>(gs.at(i, j));
        }
      }
    });
  }

  // ---- losses ----

  // Mean binary cross-entropy over all entries, with probabilities clamped to
  // [eps, 1-eps] before the logs. Targets may be soft (mixup).
  int bce(int probs, Tensor<Real> targets, double eps = 1e-7) {
    const Tensor<Real>& f = val(probs);
    if (!f.same_shape(targets)) throw ShapeError("bce target shape");
    auto tg = std::make_shared<const Tensor<Real>>(std::move(targets));
    double acc = 0.0;
    for (std::size_t i = 0; i < f.data.size(); ++i) {
      double fi = std::min(std::max(static_cast<double>(f.data[i]), eps), 1.0 - eps);
      double yi = static_cast<double>(tg->data[i]);
      acc -= yi * std::log(fi) + (1.0 - yi) * std::log(1.0 - fi);
    }
    Tensor<Real> y(1, 1);
    y.at(0, 0) = static_cast<Real>(acc / static_cast<double>(f.data.size()));
    return push(std::move(y), needs(probs), [probs, tg, eps](Tape& t, int self) {
      if (!t.needs(probs)) return;
      const Tensor<Real>& f = t.val(probs);
      double g = static_cast<double>(t.grad(self).at(0, 0)) / static_cast<double>(f.data.size());
      for (std::size_t i = 0; i < f.data.size(); ++i) {
        double fi = static_cast<double>(f.data[i]);
        if (fi <= eps || fi >= 1.0 - eps) continue;
        double yi = static_cast<double>(tg->data[i]);
        t.grad(probs).data[i] += static_cast<Real>(g * (fi - yi) / (fi * (1.0 - fi)));
      }
    });
  }

  int mean_scalars(const std::vector<int>& xs) {
    double acc = 0.0;
    bool ng = false;
    for (int x : xs) {
      const Tensor<Real>& xv = val(x);
      if (xv.rows != 1 || xv.cols != 1) throw ShapeError("mean_scalars expects scalars");
      acc += static_cast<double>(xv.at(0, 0));
      ng = ng || needs(x);
    }
    Tensor<Real> y(1, 1);
    y.at(0, 0) = static_cast<Real>(acc / xs.size());
    auto parts = std::make_shared<const std::vector<int>>(xs);
    return push(std::move(y), ng, [parts](Tape& t, int self) {
      double g = static_cast<double>(t.grad(self).at(0, 0)) / parts->size();
      for (int x : *parts)
        if (t.needs(x)) t.grad(x).at(0, 0) += static_cast<Real>(g);
    });
  }

  // ---- access / backward ----

  const Tensor<Real>& val(int id) const { return nodes_[id].val; }
  bool needs(int id) const { return nodes_[id].needs_grad; }
  std::size_t size() const { return nodes_.size(); }

  Tensor<Real>& grad(int id) {
    Tensor<Real>& g = grads_[id];
    if (g.rows == 0) g = Tensor<Real>::zeros(nodes_[id].val.rows, nodes_[id].val.cols);
    return g;
  }

  // Accumulates parameter gradients into their stores.
  void backward(int loss_id) {
    const Tensor<Real>& l = nodes_[loss_id].val;
    if (l.rows != 1 || l.cols != 1) throw ShapeError("backward expects a scalar loss");
    grads_.assign(nodes_.size(), Tensor<Real>());
    grad(loss_id).at(0, 0) = Real(1);
    for (int i = loss_id; i >= 0; --i)
      if (nodes_[i].back && nodes_[i].needs_grad && grads_[i].rows != 0) nodes_[i].back(*this, i);
    for (auto& [p, id] : param_nodes_) {
      if (grads_[id].rows == 0) continue;
      for (std::size_t j = 0; j < p->grad.data.size(); ++j) p->grad.data[j] += grads_[id].data[j];
    }
  }

  const Tensor<Real>& grad_of(int id) { return grad(id); }

 private:
  struct Node {
    Tensor<Real> val;
    BackFn back;
    bool needs_grad = false;
    Parameter<Real>* leaf_param = nullptr;
  };

  int push(Tensor<Real> v, bool needs_grad, BackFn back) {
    nodes_.push_back(Node{std::move(v), std::move(back), needs_grad, nullptr});
    return static_cast<int>(nodes_.size()) - 1;
  }

  std::vector<Node> nodes_;
  std::vector<Tensor<Real>> grads_;
  std::vector<std::pair<Parameter<Real>*, int>> param_nodes_;
};

// Single-head attention with an additive bias node; the composite reference
// form built from primitive ops (used to cross-check the fused mha path).
template <class Real>
int attention(Tape<Real>& t, int q, int k, int v, int bias) {
  int d = t.val(q).cols;
  int s = t.matmul_nt(q, k);
  s = t.scale(s, 1.0 / std::sqrt(static_cast<double>(d)));
  if (bias >= 0) s = t.add(s, bias);
  int p = t.softmax_rows(s);
  return t.matmul(p, v);
}

}  // namespace tigh

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <string>
#include <unordered_map>
#include <vector>

#include "tigh/csv.hpp"
#include "tigh/digest.hpp"
#include "tigh/rng.hpp"
#include "tigh/tensor.hpp"
#include "tigh/tghio.hpp"

namespace tigh {

template <class Real>
struct Parameter {
  std::string name;
  Tensor<Real> value;
  Tensor<Real> grad;
};

// Owns every trainable tensor of a model, in creation order. Addresses stay
// stable (deque) because tape nodes hold raw pointers into the store.
template <class Real>
class ParamStore {
 public:
  Parameter<Real>& add(const std::string& name, int rows, int cols) {
    if (index_.count(name)) throw Error("duplicate parameter '" + name + "'");
    index_[name] = params_.size();
    params_.push_back({name, Tensor<Real>(rows, cols), Tensor<Real>(rows, cols)});
    return params_.back();
  }

  Parameter<Real>& at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw Error("unknown parameter '" + name + "'");
    return params_[it->second];
  }

  std::size_t size() const { return params_.size(); }
  Parameter<Real>& operator[](std::size_t i) { return params_[i]; }
  const Parameter<Real>& operator[](std::size_t i) const { return params_[i]; }

  void zero_grads() {
    for (auto& p : params_)
      for (auto& g : p.grad.data) g = Real(0);
  }

  std::size_t total_numel() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.numel();
    return n;
  }

  // Flat f32 snapshot in creation order; cheap enough to keep per fold.
  std::vector<float> snapshot() const {
    std::vector<float> out;
    out.reserve(total_numel());
    for (const auto& p : params_)
      for (Real v : p.value.data) out.push_back(static_cast<float>(v));
    return out;
  }

  void restore(const std::vector<float>& snap) {
    if (snap.size() != total_numel()) throw ShapeError("snapshot size mismatch");
    std::size_t k = 0;
    for (auto& p : params_)
      for (auto& v : p.value.data) v = static_cast<Real>(snap[k++]);
  }

  // Serialized parameter block: per parameter, name length + name + rank +
  // dims + f32 payload. Shared by the checkpoint file and the checksum so a
  // checkpoint's identity is exactly its content hash.
  std::string serialize() const {
    std::string out;
    for (const auto& p : params_) {
      put_u32(out, static_cast<std::uint32_t>(p.name.size()));
      out += p.name;
      put_u32(out, 2);
      put_u32(out, static_cast<std::uint32_t>(p.value.rows));
      put_u32(out, static_cast<std::uint32_t>(p.value.cols));
      for (Real v : p.value.data) put_f32(out, static_cast<float>(v));
    }
    return out;
  }

  std::string checksum() const {
    std::string blob = serialize();
    return hex_digest(sha256(blob.data(), blob.size()));
  }

  void save_checkpoint(const std::string& path, const std::array<std::uint8_t, 32>& config_hash) const {
    std::string out = "TGHCKPT1";
    out.append(reinterpret_cast<const char*>(config_hash.data()), 32);
    put_u32(out, static_cast<std::uint32_t>(params_.size()));
    out += serialize();
    write_text_file(path, out);
  }

  void load_checkpoint(const std::string& path, const std::array<std::uint8_t, 32>& expect_hash) {
    std::string buf = read_binary_file(path);
    if (buf.size() < 44 || buf.compare(0, 8, "TGHCKPT1") != 0)
      throw IoError(path + ": not a TGHCKPT1 file");
    std::size_t off = 8;
    std::array<std::uint8_t, 32> h{};
    for (auto& b : h) b = static_cast<std::uint8_t>(buf[off++]);
    if (h != expect_hash) throw InputError(path + ": checkpoint was written by a different model config");
    std::uint32_t count = get_u32(buf, off);
    if (count != params_.size()) throw InputError(path + ": parameter count mismatch");
    for (auto& p : params_) {
      std::uint32_t nlen = get_u32(buf, off);
      if (off + nlen > buf.size()) throw IoError(path + ": truncated");
      std::string name = buf.substr(off, nlen);
      off += nlen;
      if (name != p.name) throw InputError(path + ": parameter order mismatch at '" + name + "'");
      std::uint32_t rank = get_u32(buf, off);
      if (rank != 2) throw InputError(path + ": unsupported rank");
      std::uint32_t r = get_u32(buf, off);
      std::uint32_t c = get_u32(buf, off);
      if (static_cast<int>(r) != p.value.rows || static_cast<int>(c) != p.value.cols)
        throw InputError(path + ": shape mismatch for '" + name + "'");
      for (auto& v : p.value.data) v = static_cast<Real>(get_f32(buf, off));
    }
    if (off != buf.size()) throw IoError(path + ": trailing bytes");
  }

 private:
  std::deque<Parameter<Real>> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Glorot-uniform weight init, seeded per parameter name so the result does not
// depend on construction order.
template <class Real>
void init_linear(Parameter<Real>& w, std::uint64_t seed) {
  Rng rng = substream(seed, "init/" + w.name);
  double fan_in = w.value.rows;
  double fan_out = w.value.cols;
  double bound = std::sqrt(6.0 / (fan_in + fan_out));
  for (auto& v : w.value.data) v = static_cast<Real>(rng.uniform(-bound, bound));
}

template <class Real>
void init_normal(Parameter<Real>& w, std::uint64_t seed, double stddev) {
  Rng rng = substream(seed, "init/" + w.name);
  for (auto& v : w.value.data) v = static_cast<Real>(rng.normal(0.0, stddev));
}

template <class Real>
void init_const(Parameter<Real>& w, Real value) {
  for (auto& v : w.value.data) v = value;
}

// Adam with f64 moment state; the update itself is computed in f64 and cast
// back to Real so float32 training still steps deterministically.
template <class Real>
class Adam {
 public:
  Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {}

  void step(ParamStore<Real>& store) {
    if (m_.empty()) {
      m_.resize(store.size());
      v_.resize(store.size());
      for (std::size_t i = 0; i < store.size(); ++i) {
        m_[i].assign(store[i].value.numel(), 0.0);
        v_[i].assign(store[i].value.numel(), 0.0);
      }
    }
    ++t_;
    double c1 = 1.0 - std::pow(b1_, t_);
    double c2 = 1.0 - std::pow(b2_, t_);
    for (std::size_t i = 0; i < store.size(); ++i) {
      auto& p = store[i];
      for (std::size_t j = 0; j < p.value.numel(); ++j) {
        double g = static_cast<double>(p.grad.data[j]);
        m_[i][j] = b1_ * m_[i][j] + (1.0 - b1_) * g;
        v_[i][j] = b2_ * v_[i][j] + (1.0 - b2_) * g * g;
        double mhat = m_[i][j] / c1;
        double vhat = v_[i][j] / c2;
        p.value.data[j] = static_cast<Real>(static_cast<double>(p.value.data[j]) -
                                            lr_ * mhat / (std::sqrt(vhat) + eps_));
      }
    }
  }

 private:
  double lr_, b1_, b2_, eps_;
  long long t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace tigh

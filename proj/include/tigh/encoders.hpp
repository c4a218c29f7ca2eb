#pragma once

#include <string>

#include "tigh/swin.hpp"

namespace tigh {

// Environmental feature row -> m tokens of fusion width, via a 2-layer MLP.
template <class Real>
struct TabularEncoder {
  LinearLayer<Real> fc1, fc2;
  int tokens = 0, width = 0;

  static TabularEncoder create(ParamStore<Real>& ps, const std::string& name, int in_features,
                               int hidden, int tokens, int width, std::uint64_t seed) {
    TabularEncoder e;
    e.tokens = tokens;
    e.width = width;
    e.fc1 = LinearLayer<Real>::create(ps, name + "/fc1", in_features, hidden, seed);
    e.fc2 = LinearLayer<Real>::create(ps, name + "/fc2", hidden, tokens * width, seed);
    return e;
  }

  // x: [1 × in_features] -> [tokens × width]
  int apply(Tape<Real>& t, int x) const {
    int h = t.gelu(fc1.apply(t, x));
    return t.reshape(fc2.apply(t, h), tokens, width);
  }
};

// Graph feature vector -> g tokens of fusion width, single linear map.
template <class Real>
struct GfvCompress {
  LinearLayer<Real> proj;
  int tokens = 0, width = 0;

  static GfvCompress create(ParamStore<Real>& ps, const std::string& name, int n_species,
                            int tokens, int width, std::uint64_t seed) {
    GfvCompress e;
    e.tokens = tokens;
    e.width = width;
    e.proj = LinearLayer<Real>::create(ps, name + "/proj", n_species, tokens * width, seed);
    return e;
  }

  // x: [1 × n_species] -> [tokens × width]
  int apply(Tape<Real>& t, int x) const {
    return t.reshape(proj.apply(t, x), tokens, width);
  }
};

}  // namespace tigh

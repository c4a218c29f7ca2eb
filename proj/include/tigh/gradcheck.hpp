#pragma once

#include <algorithm>
#include <functional>
#include <vector>

#include "tigh/params.hpp"
#include "tigh/tape.hpp"

namespace tigh {

struct GradCheckOptions {
  double eps = 1e-3;
  // 0 checks every coordinate; otherwise this many per parameter, sampled
  // deterministically (keeps the large composites inside the time budget).
  int coords_per_param = 0;
  std::uint64_t coord_seed = 7;
};

// Compares reverse-mode gradients against central finite differences, all in
// f64. The builder constructs a fresh graph from the store's current values
// and returns the scalar loss node. Inputs whose gradient should be checked
// are simply registered as parameters by the test.
//
// Reported value: max over checked coordinates of
//   |analytic - numeric| / max(|analytic| + |numeric|, 1e-2).
template <class Build>
double grad_check(ParamStore<double>& store, Build build, GradCheckOptions opt = {}) {
  auto eval = [&]() {
    Tape<double> t;
    int loss = build(t);
    return static_cast<double>(t.val(loss).at(0, 0));
  };

  store.zero_grads();
  {
    Tape<double> t;
    int loss = build(t);
    t.backward(loss);
  }
  std::vector<std::vector<double>> analytic(store.size());
  for (std::size_t p = 0; p < store.size(); ++p) {
    analytic[p].assign(store[p].grad.data.begin(), store[p].grad.data.end());
  }

  double worst = 0.0;
  for (std::size_t p = 0; p < store.size(); ++p) {
    auto& value = store[p].value.data;
    std::vector<std::size_t> coords;
    if (opt.coords_per_param <= 0 ||
        value.size() <= static_cast<std::size_t>(opt.coords_per_param)) {
      coords.resize(value.size());
      for (std::size_t i = 0; i < value.size(); ++i) coords[i] = i;
    } else {
      Rng rng = substream(opt.coord_seed, "gradcheck/" + store[p].name);
      for (int i = 0; i < opt.coords_per_param; ++i)
        coords.push_back(static_cast<std::size_t>(rng.uniform_int(static_cast<int>(value.size()))));
    }
    for (std::size_t c : coords) {
      double saved = value[c];
      value[c] = saved + opt.eps;
      double f_plus = eval();
      value[c] = saved - opt.eps;
      double f_minus = eval();
      value[c] = saved;
      double numeric = (f_plus - f_minus) / (2.0 * opt.eps);
      double a = analytic[p][c];
      double rel = std::abs(a - numeric) / std::max(std::abs(a) + std::abs(numeric), 1e-2);
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

}  // namespace tigh

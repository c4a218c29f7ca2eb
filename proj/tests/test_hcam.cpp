#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "tigh/encoders.hpp"
#include "tigh/gradcheck.hpp"
#include "tigh/hcam.hpp"

using namespace tigh;

namespace {

Tensor<double> random_tensor(int r, int c, std::uint64_t seed) {
  Tensor<double> t(r, c);
  Rng rng(seed);
  for (auto& v : t.data) v = rng.normal(0.0, 1.0);
  return t;
}

void zero_weights(ParamStore<double>& ps, const std::string& name) {
  for (auto& v : ps.at(name).value.data) v = 0.0;
}

}  // namespace

TEST_SUITE_BEGIN("hcam");

TEST_CASE("tabular encoder produces the token grid") {
  ParamStore<double> ps;
  auto enc = TabularEncoder<double>::create(ps, "tab", 11, 16, 4, 8, 3);
  Tape<double> t;
  int y = enc.apply(t, t.input(random_tensor(1, 11, 7)));
  CHECK(t.val(y).rows == 4);
  CHECK(t.val(y).cols == 8);
  for (double v : t.val(y).data) CHECK(std::isfinite(v));

  SUBCASE("gradients") {
    auto& x = ps.add("x", 1, 11);
    init_normal(x, 70, 1.0);
    Tensor<double> targets = Tensor<double>::from_rows({{1, 0, 1, 0, 1, 1, 0, 1}});
    double err = grad_check(ps, [&](Tape<double>& t2) {
      int tokens = enc.apply(t2, t2.param(x));
      return t2.bce(t2.sigmoid(t2.mean_rows(tokens)), targets);
    });
    CHECK(err < 1e-4);
  }
}

TEST_CASE("graph vector compression reshapes a single projection") {
  ParamStore<double> ps;
  auto enc = GfvCompress<double>::create(ps, "gfv", 40, 4, 8, 3);
  Tape<double> t;
  int y = enc.apply(t, t.input(random_tensor(1, 40, 8)));
  CHECK(t.val(y).rows == 4);
  CHECK(t.val(y).cols == 8);

  SUBCASE("row r holds output features r*width .. r*width+width-1") {
    ParamStore<double> ps2;
    auto e2 = GfvCompress<double>::create(ps2, "g", 2, 2, 3, 3);
    auto& w = ps2.at("g/proj/w").value;
    for (auto& v : w.data) v = 0.0;
    w.at(0, 4) = 1.0;  // feature 4 = token 1, column 1
    for (auto& v : ps2.at("g/proj/b").value.data) v = 0.0;
    Tape<double> t2;
    int y2 = e2.apply(t2, t2.input(Tensor<double>::from_rows({{5.0, 0.0}})));
    CHECK(t2.val(y2).at(1, 1) == doctest::Approx(5.0));
    CHECK(t2.val(y2).at(0, 0) == doctest::Approx(0.0));
  }

  SUBCASE("gradients") {
    auto& x = ps.add("x", 1, 40);
    init_normal(x, 71, 1.0);
    Tensor<double> targets = Tensor<double>::from_rows({{0, 1, 0, 1, 0, 0, 1, 1}});
    double err = grad_check(ps, [&](Tape<double>& t2) {
      int tokens = enc.apply(t2, t2.param(x));
      return t2.bce(t2.sigmoid(t2.mean_rows(tokens)), targets);
    });
    CHECK(err < 1e-4);
  }
}

TEST_CASE("tri-modal attention collapses to its cutoff path when values vanish") {
  ParamStore<double> ps;
  auto ca = TriModalCa<double>::create(ps, "ca", 8, 2, 5);
  zero_weights(ps, "ca/wv1/w");
  zero_weights(ps, "ca/wv2/w");
  Tensor<double> tT = random_tensor(3, 8, 11), tF = random_tensor(2, 8, 12),
                 tS = random_tensor(4, 8, 13);

  Tape<double> t;
  int got = ca.apply(t, t.input(tT), t.input(tF), t.input(tS));

  Tape<double> ref;
  int pooled = ref.concat_cols({ref.mean_rows(ref.input(tT)), ref.mean_rows(ref.input(tF)),
                                ref.mean_rows(ref.input(tS))});
  int want = ca.cutoff.apply(ref, pooled);

  REQUIRE(t.val(got).cols == 16);
  for (int j = 0; j < 16; ++j) CHECK(t.val(got).at(0, j) == ref.val(want).at(0, j));
}

TEST_CASE("a single image token makes attention a value lookup") {
  ParamStore<double> ps;
  auto ca = TriModalCa<double>::create(ps, "ca", 8, 2, 6);
  zero_weights(ps, "ca/cutoff/w");
  zero_weights(ps, "ca/cutoff/b");
  Tensor<double> tT = random_tensor(3, 8, 21), tF = random_tensor(2, 8, 22),
                 tS = random_tensor(1, 8, 23);

  Tape<double> t;
  int got = ca.apply(t, t.input(tT), t.input(tF), t.input(tS));

  // softmax over one key is 1, so both attention branches emit W_v * s0
  Tape<double> ref;
  int s = ref.input(tS);
  int v1 = ca.w_v1.apply(ref, s);
  int v2 = ca.w_v2.apply(ref, s);
  for (int j = 0; j < 8; ++j) {
    CHECK(t.val(got).at(0, j) == doctest::Approx(ref.val(v1).at(0, j)).epsilon(1e-12));
    CHECK(t.val(got).at(0, 8 + j) == doctest::Approx(ref.val(v2).at(0, j)).epsilon(1e-12));
  }
}

TEST_CASE("graph attention with identical tokens ignores the scores") {
  ParamStore<double> ps;
  auto mh = GraphMhca<double>::create(ps, "mh", 8, 2, 7);
  Tensor<double> row = random_tensor(1, 8, 31);
  Tensor<double> tG(3, 8);
  for (int r = 0; r < 3; ++r)
    for (int j = 0; j < 8; ++j) tG.at(r, j) = row.at(0, j);
  Tensor<double> tF = random_tensor(2, 8, 32), tS = random_tensor(4, 8, 33),
                 tT = random_tensor(3, 8, 34);

  Tape<double> t;
  int got = mh.apply(t, t.input(tF), t.input(tS), t.input(tT), t.input(tG));

  Tape<double> ref;
  int want = mh.w_v.apply(ref, ref.input(row));
  for (int j = 0; j < 8; ++j)
    CHECK(t.val(got).at(0, j) == doctest::Approx(ref.val(want).at(0, j)).epsilon(1e-12));
}

TEST_CASE("head output is invariant to image token order") {
  ParamStore<double> ps;
  auto head = HcamHead<double>::create(ps, "h", 8, 2, 2, 6, 9);
  Tensor<double> tT = random_tensor(3, 8, 41), tS = random_tensor(5, 8, 42),
                 tF = random_tensor(2, 8, 43), tG = random_tensor(2, 8, 44);

  Tape<double> t1;
  int p1 = head.apply(t1, t1.input(tT), t1.input(tS), t1.input(tF), t1.input(tG));

  Tensor<double> perm(5, 8);
  std::vector<int> order{3, 0, 4, 2, 1};
  for (int r = 0; r < 5; ++r)
    for (int j = 0; j < 8; ++j) perm.at(r, j) = tS.at(order[r], j);
  Tape<double> t2;
  int p2 = head.apply(t2, t2.input(tT), t2.input(perm), t2.input(tF), t2.input(tG));

  for (int j = 0; j < 6; ++j)
    CHECK(std::abs(t1.val(p1).at(0, j) - t2.val(p2).at(0, j)) < 1e-6);
}

TEST_CASE("zero output weights predict one half everywhere") {
  ParamStore<double> ps;
  auto head = HcamHead<double>::create(ps, "h", 8, 2, 2, 5, 9);
  zero_weights(ps, "h/out/w");
  zero_weights(ps, "h/out/b");
  Tape<double> t;
  int p = head.apply(t, t.input(random_tensor(3, 8, 51)), t.input(random_tensor(4, 8, 52)),
                     t.input(random_tensor(2, 8, 53)), t.input(random_tensor(2, 8, 54)));
  REQUIRE(t.val(p).cols == 5);
  for (int j = 0; j < 5; ++j) CHECK(t.val(p).at(0, j) == 0.5);

  ParamStore<double> ps2;
  auto base = ConcatBaselineHead<double>::create(ps2, "b", 8, 5, 9);
  zero_weights(ps2, "b/out/w");
  zero_weights(ps2, "b/out/b");
  Tape<double> t2;
  int p2 = base.apply(t2, t2.input(random_tensor(3, 8, 55)), t2.input(random_tensor(4, 8, 56)),
                      t2.input(random_tensor(2, 8, 57)), t2.input(random_tensor(2, 8, 58)));
  for (int j = 0; j < 5; ++j) CHECK(t2.val(p2).at(0, j) == 0.5);
}

TEST_CASE("fusion head gradients match finite differences") {
  ParamStore<double> ps;
  auto head = HcamHead<double>::create(ps, "h", 6, 2, 2, 5, 15);
  auto& xT = ps.add("xT", 3, 6);
  auto& xS = ps.add("xS", 4, 6);
  auto& xF = ps.add("xF", 2, 6);
  auto& xG = ps.add("xG", 2, 6);
  init_normal(xT, 61, 1.0);
  init_normal(xS, 62, 1.0);
  init_normal(xF, 63, 1.0);
  init_normal(xG, 64, 1.0);
  Tensor<double> targets = Tensor<double>::from_rows({{1, 0, 1, 1, 0}});

  double err = grad_check(ps, [&](Tape<double>& t) {
    int p = head.apply(t, t.param(xT), t.param(xS), t.param(xF), t.param(xG));
    return t.bce(p, targets);
  });
  CHECK(err < 1e-3);
}

TEST_CASE("concatenation baseline gradients") {
  ParamStore<double> ps;
  auto head = ConcatBaselineHead<double>::create(ps, "b", 6, 4, 15);
  auto& xT = ps.add("xT", 3, 6);
  auto& xS = ps.add("xS", 4, 6);
  auto& xF = ps.add("xF", 2, 6);
  auto& xG = ps.add("xG", 2, 6);
  init_normal(xT, 65, 1.0);
  init_normal(xS, 66, 1.0);
  init_normal(xF, 67, 1.0);
  init_normal(xG, 68, 1.0);
  Tensor<double> targets = Tensor<double>::from_rows({{0, 1, 1, 0}});

  double err = grad_check(ps, [&](Tape<double>& t) {
    int p = head.apply(t, t.param(xT), t.param(xS), t.param(xF), t.param(xG));
    return t.bce(p, targets);
  });
  CHECK(err < 1e-4);
}

TEST_CASE("the head learns a small fixed-stream task") {
  // eight samples with fixed random token streams, five species; twenty
  // epochs of full-batch Adam must at least halve the starting loss
  const int n = 8, d = 8, species = 5;
  ParamStore<double> ps;
  auto head = HcamHead<double>::create(ps, "h", d, 2, 2, species, 23);
  std::vector<Tensor<double>> sT, sS, sF, sG;
  Tensor<double> labels(n, species);
  Rng rng(77);
  for (int i = 0; i < n; ++i) {
    sT.push_back(random_tensor(3, d, 1000 + i));
    sS.push_back(random_tensor(4, d, 2000 + i));
    sF.push_back(random_tensor(2, d, 3000 + i));
    sG.push_back(random_tensor(2, d, 4000 + i));
    for (int j = 0; j < species; ++j) labels.at(i, j) = rng.uniform() < 0.4 ? 1.0 : 0.0;
  }

  auto epoch_loss = [&](bool update) {
    Tape<double> t;
    std::vector<int> losses;
    for (int i = 0; i < n; ++i) {
      int p = head.apply(t, t.input(sT[i]), t.input(sS[i]), t.input(sF[i]), t.input(sG[i]));
      Tensor<double> row(1, species);
      for (int j = 0; j < species; ++j) row.at(0, j) = labels.at(i, j);
      losses.push_back(t.bce(p, row));
    }
    int total = t.mean_scalars(losses);
    if (update) {
      ps.zero_grads();
      t.backward(total);
    }
    return t.val(total).at(0, 0);
  };

  Adam<double> opt(0.01);
  double first = 0.0, last = 0.0;
  for (int e = 0; e < 20; ++e) {
    double loss = epoch_loss(true);
    opt.step(ps);
    if (e == 0) first = loss;
    last = loss;
  }
  CHECK(std::isfinite(last));
  CHECK(last < 0.5 * first);
}

TEST_SUITE_END();

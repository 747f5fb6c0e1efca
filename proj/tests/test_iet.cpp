#include <doctest.h>

#include <cmath>

#include "tbill/errors.hpp"
#include "tbill/iet.hpp"
#include "tbill/rng.hpp"

using namespace tbill;

namespace {

// First return of T to [0, b) by brute force.
double first_return(const Iet& T, double x, double b) {
  for (int k = 0; k < 100000; ++k) {
    x = T.eval(x);
    if (x < b) return x;
  }
  FAIL("no return");
  return 0.0;
}

Iet random_reversal(SplitMix64& rng, int d) { return Iet::reversal(rng.simplex(d)); }

}  // namespace

TEST_CASE("two-interval reversal is a rotation") {
  Iet T = Iet::reversal({0.3, 0.7});
  CHECK(T.eval(0.1) == doctest::Approx(0.8));
  CHECK(T.eval(0.5) == doctest::Approx(0.2));
  CHECK(T.interval_of(0.29) == 0);
  CHECK(T.interval_of(0.31) == 1);
}

TEST_CASE("orbit points on a breakpoint are refused") {
  Iet T = Iet::reversal({0.25, 0.25, 0.5});
  CHECK_THROWS_AS(T.eval(0.25), Error);
  try {
    T.eval(0.5, 17);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::HitDiscontinuity);
    CHECK(e.step() == 17);
  }
  CHECK(T.eval(0.0) == doctest::Approx(0.75));
}

TEST_CASE("reversal is a bijection preserving order within intervals") {
  SplitMix64 rng(11);
  Iet T = random_reversal(rng, 5);
  for (int i = 0; i < 200; ++i) {
    double x = rng.uniform(0.0, 1.0);
    double y = x + 1e-9;
    Label a = T.interval_of(x);
    if (T.interval_of(y) != a) continue;
    CHECK(T.eval(y) - T.eval(x) == doctest::Approx(1e-9).epsilon(1e-3));
    CHECK(T.eval(x) - T.bottom_start(a) == doctest::Approx(x - T.top_start(a)));
  }
}

TEST_CASE("irreducibility and the Rauzy moves") {
  CHECK(is_irreducible(reversal(4)));
  CHECK_FALSE(is_irreducible(from_bottom_order({0, 2, 1})));
  CHECK(is_irreducible(from_bottom_order({2, 0, 1})));

  Permutation p = reversal(4);
  Permutation top = rauzy_move(p, RauzyType::Top);
  CHECK(top.top == std::vector<Label>{0, 1, 2, 3});
  CHECK(top.bottom == std::vector<Label>{3, 0, 2, 1});
  Permutation bottom = rauzy_move(p, RauzyType::Bottom);
  CHECK(bottom.top == std::vector<Label>{0, 3, 1, 2});
  CHECK(bottom.bottom == std::vector<Label>{3, 2, 1, 0});
}

TEST_CASE("flipped billiard map agrees with its closed form") {
  CyclicPolygon P = build_polygon({0.15, 0.2, 0.25, 0.4, 1.8});
  FlippedIet phi = make_phi(P, 1.3);
  CHECK(phi.size() == 6);
  CHECK(phi.permutation().bottom == std::vector<Label>{4, 0, 1, 2, 3, 5});
  SplitMix64 rng(5);
  for (int i = 0; i < 500; ++i) {
    double x = rng.uniform(0.0, P.circumference());
    CHECK(phi.eval(x) == doctest::Approx(phi_closed_form(P, 1.3, x)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(make_phi(P, 0.9), Error);
  CHECK_THROWS_AS(make_phi(P, 1.8), Error);
}

TEST_CASE("square of the billiard map on [0, 1) is the reversal") {
  CyclicPolygon P = build_polygon({0.3, 0.1, 0.35, 0.25, 2.2});
  FlippedIet phi = make_phi(P, 1.7);
  Iet T = square_restrict(phi);
  CHECK(T.permutation() == reversal(4));
  SplitMix64 rng(9);
  for (int i = 0; i < 300; ++i) {
    double x = rng.uniform(0.0, 1.0);
    CHECK(T.eval(x) == doctest::Approx(phi.eval(phi.eval(x))).epsilon(1e-12));
  }
}

TEST_CASE("one Rauzy step is the first return map") {
  SplitMix64 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    Iet T = random_reversal(rng, 4 + trial % 3);
    auto [S, rec] = rauzy_step(T);
    CHECK(rec.count == 1);
    for (int i = 0; i < 100; ++i) {
      double x = rng.uniform(0.0, S.total());
      CHECK(S.eval(x) == doctest::Approx(first_return(T, x, S.total())).epsilon(1e-12));
    }
  }
}

TEST_CASE("Rauzy step matrix and substitution agree") {
  Iet T = Iet::reversal({0.1, 0.1, 0.5, 0.4});
  auto [S, rec] = rauzy_step(T);
  CHECK(rec.type == RauzyType::Top);
  CHECK(rec.substitution.matrix() == rec.matrix);
  CHECK(S.total() == doctest::Approx(1.0));
  CHECK(S.lengths()[3] == doctest::Approx(0.3));
  auto [R, rec2] = rauzy_step(T, true);
  CHECK(R.total() == doctest::Approx(1.0));
}

TEST_CASE("tied lengths are a degenerate step") {
  Iet T = Iet::reversal({0.3, 0.4, 0.3});
  CHECK_THROWS_AS(rauzy_step(T), Error);
}

TEST_CASE("five-step fixture matrix") {
  Iet T = Iet::reversal({0.1, 0.1, 0.5, 0.4});
  IntMatrix M = IntMatrix::Identity(4, 4);
  std::vector<RauzyType> types;
  for (int k = 0; k < 5; ++k) {
    auto [S, rec] = rauzy_step(T);
    types.push_back(rec.type);
    M = M * rec.matrix;
    T = S;
  }
  using R = RauzyType;
  CHECK(types == std::vector<R>{R::Top, R::Top, R::Bottom, R::Bottom, R::Top});
  IntMatrix expected(4, 4);
  expected << 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 3, 2, 1, 1, 1, 1;
  CHECK(M == expected);
  CHECK(T.permutation() == reversal(4));
}

TEST_CASE("a Zorich block is a maximal run of Rauzy steps") {
  SplitMix64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    Iet T = random_reversal(rng, 4);
    auto [Z, zrec] = zorich_step(T);
    Iet cur = T;
    IntMatrix M = IntMatrix::Identity(4, 4);
    for (int k = 0; k < zrec.count; ++k) {
      auto [S, rec] = rauzy_step(cur);
      CHECK(rec.type == zrec.type);
      M = M * rec.matrix;
      cur = S;
    }
    CHECK(M == zrec.matrix);
    CHECK(rauzy_step(cur).second.type != zrec.type);
    for (int i = 0; i < 4; ++i) CHECK(cur.lengths()[i] == doctest::Approx(Z.lengths()[i]));
  }
}

TEST_CASE("substitution composition") {
  Substitution a{{{0, 1}, {1}}};
  Substitution b{{{0}, {1, 0}}};
  Substitution ab = a.compose(b);
  CHECK(ab.images[1] == Word{1, 0, 1});
  CHECK(ab.matrix() == IntMatrix(a.matrix() * b.matrix()));
  CHECK(ab.apply({0, 1}) == Word{0, 1, 1, 0, 1});
}

TEST_CASE("cocycle moves to big integers exactly on overflow") {
  IntMatrix step(2, 2);
  step << 1, 1, 1, 2;
  Cocycle c(2);
  BigInt a = 1, b = 0, cc = 0, d = 1;
  for (int k = 0; k < 60; ++k) {
    c.right_multiply(step);
    BigInt na = a + b, nb = a + 2 * b, nc = cc + d, nd = cc + 2 * d;
    a = na;
    b = nb;
    cc = nc;
    d = nd;
  }
  CHECK(c.is_big());
  CHECK(c.at(0, 0) == a);
  CHECK(c.at(0, 1) == b);
  CHECK(c.at(1, 0) == cc);
  CHECK(c.at(1, 1) == d);
  CHECK(c.column_sum(1) == b + d);
  CHECK_THROWS_AS(c.small(), Error);
}

TEST_CASE("Rokhlin towers: heights, Kac identity and tower words") {
  SplitMix64 rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    Iet T = random_reversal(rng, 4 + trial % 2);
    RokhlinTowers tw = rokhlin_towers(T, 20);
    double covered = 0.0;
    for (int j = 0; j < T.size(); ++j) {
      BigInt h = tw.height(j);
      CHECK(h == BigInt(tw.substitution.images[j].size()));
      covered += static_cast<double>(h) * tw.base.lengths()[j];
      double x = tw.base.top_start(j) + 0.5 * tw.base.lengths()[j];
      CHECK(symbolic_coding(T, x, static_cast<std::int64_t>(h)) == tw.substitution.images[j]);
    }
    CHECK(covered == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("Birkhoff sums") {
  Iet T = Iet::reversal({0.3, 0.7});
  double x = 0.05;
  double s = birkhoff_sum(T, std::vector<double>{1.0, 0.0}, x, 1000);
  CHECK(s / 1000.0 == doctest::Approx(0.3).epsilon(0.01));
  auto z = birkhoff_sum(T, std::vector<std::complex<double>>{{1.0, 1.0}, {0.0, 0.0}}, x, 10);
  CHECK(z.real() == z.imag());
}

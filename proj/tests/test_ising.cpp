#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "isingep/ising.hpp"
#include "isingep/rng.hpp"
#include "testutil.hpp"

using namespace isingep;

TEST_CASE("energy: hand-checked values and the +J sign convention") {
  IsingProblem one(1);
  one.biases[0] = 1.0;
  CHECK(energy(one, {1}) == doctest::Approx(1.0));

  IsingProblem pair(2);
  pair.set_coupling(1, 0, 1.0);
  CHECK(energy(pair, {1, -1}) == doctest::Approx(-1.0));  // +J: antiparallel is lower

  IsingProblem three(3);
  three.set_coupling(1, 0, 0.5);
  three.set_coupling(2, 1, -0.5);
  three.biases = {0.1, 0.0, -0.1};
  CHECK(energy(three, {1, 1, 1}) == doctest::Approx(0.0));
}

TEST_CASE("energy: state length mismatch is an error") {
  IsingProblem p(3);
  CHECK_THROWS_AS(energy(p, {1, 1}), std::invalid_argument);
}

TEST_CASE("energy: global spin flip is a symmetry when h = 0") {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + rng.below(15);  // up to 16 spins
    IsingProblem p = testutil::random_dense_problem(n, rng);
    p.biases.assign(static_cast<size_t>(n), 0.0);
    SpinState s(static_cast<size_t>(n)), flipped(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      s[static_cast<size_t>(i)] = rng.spin();
      flipped[static_cast<size_t>(i)] = static_cast<Spin>(-s[static_cast<size_t>(i)]);
    }
    CHECK(energy(p, s) == doctest::Approx(energy(p, flipped)).epsilon(1e-12));
  }
}

TEST_CASE("set_coupling rejects self-couplings and bad indices") {
  IsingProblem p(4);
  CHECK_THROWS_AS(p.set_coupling(2, 2, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(p.set_coupling(0, 4, 1.0), std::out_of_range);
  p.set_coupling(0, 3, 0.25);  // order normalized to (3, 0)
  CHECK(p.coupling(3, 0) == doctest::Approx(0.25));
  CHECK(p.coupling(0, 3) == doctest::Approx(0.25));
  CHECK(p.couplings.size() == 1);
}

TEST_CASE("apply_nudge shifts output biases by -beta*target and nothing else") {
  IsingProblem p(3);
  p.biases = {0.5, 0.2, -0.3};
  p.set_coupling(1, 0, 0.7);
  IsingProblem nudged = apply_nudge(p, {0}, {1}, 2.0);
  CHECK(nudged.biases[0] == doctest::Approx(-1.5));  // 0.5 - 2*1
  CHECK(nudged.biases[1] == doctest::Approx(0.2));
  CHECK(nudged.biases[2] == doctest::Approx(-0.3));
  CHECK(nudged.coupling(1, 0) == doctest::Approx(0.7));

  // nudge biases may leave h_range: they are a force, not a learned parameter
  IsingProblem small(1, {-2.0, 2.0}, {-1.0, 1.0});
  small.biases[0] = 0.9;
  IsingProblem pushed = apply_nudge(small, {0}, {1}, 5.0);
  CHECK(pushed.biases[0] == doctest::Approx(-4.1));
}

TEST_CASE("apply_nudge argument validation") {
  IsingProblem p(2);
  CHECK_THROWS_AS(apply_nudge(p, {0}, {1}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(apply_nudge(p, {2}, {1}, 1.0), std::out_of_range);
  CHECK_THROWS_AS(apply_nudge(p, {0}, {0}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(apply_nudge(p, {0, 1}, {1}, 1.0), std::invalid_argument);
}

TEST_CASE("apply_nudge: beta -> 0+ leaves the ground state unchanged") {
  Rng rng(21);
  IsingProblem p = testutil::random_dense_problem(8, rng);
  Sample plain = ground_state_bruteforce(p);
  Sample nudged = ground_state_bruteforce(apply_nudge(p, {0, 1}, {1, -1}, 1e-12));
  CHECK(plain.state == nudged.state);
}

TEST_CASE("nudge equivalence on a 4-spin chain: bias form == explicit cost form") {
  // E + (beta/2) * sum_Y (s - target)^2 and the nudged-bias problem must have
  // the same minimizer; their energies differ by exactly beta * |Y|.
  IsingProblem chain(4);
  chain.set_coupling(1, 0, 0.8);
  chain.set_coupling(2, 1, -0.6);
  chain.set_coupling(3, 2, 0.4);
  chain.biases = {0.1, -0.2, 0.3, -0.4};
  const std::vector<int> outputs{2, 3};
  const SpinState targets{1, -1};
  for (double beta : {0.5, 1.0, 2.0}) {
    Sample via_cost = testutil::enumerate_min_with_cost(chain, outputs, targets, beta);
    Sample via_bias = ground_state_bruteforce(apply_nudge(chain, outputs, targets, beta));
    CHECK(via_cost.state == via_bias.state);
    CHECK(via_cost.energy == doctest::Approx(via_bias.energy + beta * 2.0).epsilon(1e-12));
  }
}

TEST_CASE("ground_state_bruteforce: trivial cases and tie-breaking") {
  IsingProblem one(1);
  one.biases[0] = 2.0;
  Sample s1 = ground_state_bruteforce(one);
  CHECK(s1.state == SpinState{-1});
  CHECK(s1.energy == doctest::Approx(-2.0));

  // ferromagnetic pair (negative J aligns); both aligned states tie at -1,
  // the lexicographic rule picks all-down
  IsingProblem ferro(2);
  ferro.set_coupling(1, 0, -1.0);
  Sample s2 = ground_state_bruteforce(ferro);
  CHECK(s2.state == SpinState{-1, -1});
  CHECK(s2.energy == doctest::Approx(-1.0));

  // antiferromagnetic pair: [-1,+1] and [+1,-1] tie, lex picks [-1,+1]
  IsingProblem anti(2);
  anti.set_coupling(1, 0, 1.0);
  CHECK(ground_state_bruteforce(anti).state == SpinState{-1, 1});

  IsingProblem too_big(25);
  CHECK_THROWS_AS(ground_state_bruteforce(too_big), std::invalid_argument);
}

TEST_CASE("ground_state_bruteforce agrees with the independent bit-loop oracle") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + rng.below(11);  // up to 12 spins
    IsingProblem p = testutil::random_dense_problem(n, rng);
    Sample fast = ground_state_bruteforce(p);
    Sample slow = testutil::enumerate_min_with_cost(p);
    CHECK(fast.state == slow.state);
    CHECK(fast.energy == doctest::Approx(slow.energy).epsilon(1e-12));
    CHECK(fast.energy == doctest::Approx(energy(p, fast.state)).epsilon(1e-12));
  }
}

TEST_CASE("clip_parameters clamps into range and is idempotent") {
  IsingProblem p(2, {-2.0, 2.0}, {-4.0, 4.0});
  p.set_coupling(1, 0, 2.5);
  p.biases = {-5.0, 0.3};
  IsingProblem c = clip_parameters(p);
  CHECK(c.coupling(1, 0) == doctest::Approx(2.0));
  CHECK(c.biases[0] == doctest::Approx(-4.0));
  CHECK(c.biases[1] == doctest::Approx(0.3));

  IsingProblem cc = clip_parameters(c);
  CHECK(cc.couplings == c.couplings);
  CHECK(cc.biases == c.biases);

  // already in range -> identity
  IsingProblem ok(2);
  ok.set_coupling(1, 0, 1.0);
  ok.biases = {0.5, -0.5};
  IsingProblem same = clip_parameters(ok);
  CHECK(same.couplings == ok.couplings);
  CHECK(same.biases == ok.biases);
}

TEST_CASE("text serialization round-trips exactly") {
  Rng rng(3);
  IsingProblem p = testutil::random_dense_problem(6, rng);
  IsingProblem q = problem_from_text(to_text(p));
  CHECK(q.n_spins == p.n_spins);
  CHECK(q.couplings == p.couplings);  // exact double equality via %.17g
  CHECK(q.biases == p.biases);
}

TEST_CASE("text parser rejects malformed input") {
  CHECK_THROWS(problem_from_text("nonsense 3"));
  CHECK_THROWS(problem_from_text("ising 2\nQ 1 0 0.5"));
  CHECK_THROWS(problem_from_text("ising 2\nh 5 0.5"));
  CHECK_THROWS(problem_from_text("ising 2\nJ 1 1 0.5"));
}

TEST_CASE("lex_less orders -1 before +1, index 0 most significant") {
  CHECK(lex_less({-1, 1}, {1, -1}));
  CHECK_FALSE(lex_less({1, -1}, {-1, 1}));
  CHECK_FALSE(lex_less({-1, 1}, {-1, 1}));
  CHECK(lex_less({-1, -1}, {-1, 1}));
}

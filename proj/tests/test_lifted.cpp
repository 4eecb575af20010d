#include <doctest.h>

#include "idivnmf/lifted.hpp"
#include "test_support.hpp"

using namespace idivnmf;
using namespace idivnmf::testing;

namespace {

const FactorPair kRowPair(NonnegMatrix{{0.5}, {0.5}}, NonnegMatrix{{0.4, 0.6}});
const ProbMatrix kP(NonnegMatrix{{0.3, 0.2}, {0.1, 0.4}});

}  // namespace

TEST_CASE("tensor_from_pair and collapse on a rank-one pair") {
  const LiftedTensor t = tensor_from_pair(kRowPair);
  CHECK(t.k() == 1);
  CHECK(t(0, 0, 0) == doctest::Approx(0.2));
  CHECK(t(0, 0, 1) == doctest::Approx(0.3));
  CHECK(t(1, 0, 0) == doctest::Approx(0.2));
  CHECK(t(1, 0, 1) == doctest::Approx(0.3));
  CHECK(t.sum() == doctest::Approx(1.0));
  const NonnegMatrix c = collapse(t);
  CHECK(max_abs_diff(c.values(), t.values()) == 0.0);
}

TEST_CASE("diagonal pair gives a tensor supported on diagonal slices") {
  const FactorPair diag(NonnegMatrix{{0.3, 0.0}, {0.0, 0.7}}, NonnegMatrix{{1.0, 0.0}, {0.0, 1.0}});
  const LiftedTensor t = tensor_from_pair(diag);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t l = 0; l < 2; ++l)
      for (std::size_t j = 0; j < 2; ++j) {
        if (i == l && l == j) {
          CHECK(t(i, l, j) > 0.0);
        } else {
          CHECK(t(i, l, j) == 0.0);
        }
      }
}

TEST_CASE("collapse of a product tensor equals the matrix product") {
  Rng rng(21);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t m = uniform_int(rng, 1, 6), n = uniform_int(rng, 1, 6);
    const std::size_t k = uniform_int(rng, 1, std::min(m, n));
    const FactorPair pair = random_pair(rng, m, k, n, 0.0);
    CHECK(max_abs_diff(collapse(tensor_from_pair(pair)), pair.product()) <= 1e-14);
  }
}

TEST_CASE("best_p_tensor examples") {
  Rng rng(2);
  const FactorPair pair = random_pair(rng, 3, 2, 4);
  const LiftedTensor q = tensor_from_pair(pair);
  const ProbMatrix consistent(collapse(q));
  CHECK(max_abs_diff(best_p_tensor(consistent, q).values(), q.values()) <= 1e-15);

  const LiftedTensor q1 = tensor_from_pair(kRowPair);
  const LiftedTensor p1 = best_p_tensor(kP, q1);
  CHECK(max_abs_diff(p1.values(), kP.inner().values()) <= 1e-16);

  CHECK_THROWS_AS(best_p_tensor(kP, LiftedTensor(3, 1, 2)), DimensionError);
}

TEST_CASE("best_p_tensor zeroes fibers over zero collapsed entries") {
  const FactorPair pair(NonnegMatrix{{0.5, 0.0}, {0.0, 0.5}}, NonnegMatrix{{1.0, 0.0}, {0.0, 1.0}});
  const LiftedTensor out = best_p_tensor(kP, tensor_from_pair(pair));
  for (std::size_t l = 0; l < 2; ++l) {
    CHECK(out(0, l, 1) == 0.0);
    CHECK(out(1, l, 0) == 0.0);
  }
  CHECK_FALSE(is_member_P(out, kP).member);
}

TEST_CASE("best_p_tensor preserves the marginal and beats random members of the marginal set") {
  Rng rng(7);
  const ProbMatrix p = random_prob(rng, 2, 2);
  const LiftedTensor q = tensor_from_pair(random_pair(rng, 2, 2, 2));
  const LiftedTensor best = best_p_tensor(p, q);
  CHECK(is_member_P(best, p, 1e-12).member);
  const double d_best = oracle_divergence(best.values(), q.values());
  double d_min_random = INFINITY;
  for (int rep = 0; rep < 100000; ++rep) {
    const LiftedTensor t = random_member_P(rng, p, 2);
    d_min_random = std::min(d_min_random, oracle_divergence(t.values(), q.values()));
  }
  CHECK(d_best <= d_min_random + 1e-12);
}

TEST_CASE("best_q_pair examples") {
  Rng rng(4);
  const FactorPair pair = random_pair(rng, 3, 2, 3);
  const FactorPair back = best_q_pair(tensor_from_pair(pair));
  CHECK(pair_distance(back, pair) <= 1e-14);

  const LiftedTensor uniform(2, 2, 2, std::vector<double>(8, 0.125));
  const FactorPair u = best_q_pair(uniform);
  for (double x : u.qminus().values()) CHECK(x == doctest::Approx(0.25));
  for (double x : u.qplus().values()) CHECK(x == doctest::Approx(0.5));

  CHECK_THROWS_AS(best_q_pair(LiftedTensor(2, 1, 2, {0.1, 0.1, 0.1, 0.1})), DomainError);
}

TEST_CASE("best_q_pair fills empty slices with the uniform row") {
  const LiftedTensor t(2, 2, 3, {0.1, 0.2, 0.1, 0.0, 0.0, 0.0, 0.3, 0.1, 0.2, 0.0, 0.0, 0.0});
  const FactorPair pair = best_q_pair(t);
  for (std::size_t j = 0; j < 3; ++j) CHECK(pair.qplus()(1, j) == doctest::Approx(1.0 / 3.0));
  CHECK(pair.qminus()(0, 1) == 0.0);
  CHECK(pair.qminus()(1, 1) == 0.0);
}

TEST_CASE("best_q_pair beats random product tensors") {
  Rng rng(8);
  const LiftedTensor t = random_prob_tensor(rng, 2, 2, 2);
  const FactorPair best = best_q_pair(t);
  const double d_best = oracle_divergence(t.values(), tensor_from_pair(best).values());
  double d_min_random = INFINITY;
  for (int rep = 0; rep < 100000; ++rep) {
    const LiftedTensor q = tensor_from_pair(random_pair(rng, 2, 2, 2, 0.0));
    d_min_random = std::min(d_min_random, oracle_divergence(t.values(), q.values()));
  }
  CHECK(d_best <= d_min_random + 1e-12);
}

TEST_CASE("is_member_P") {
  Rng rng(9);
  const ProbMatrix p = random_prob(rng, 3, 3);
  const LiftedTensor q = tensor_from_pair(random_pair(rng, 3, 2, 3));
  const LiftedTensor best = best_p_tensor(p, q);
  CHECK(is_member_P(best, p, 1e-12).member);
  CHECK_FALSE(is_member_P(q, p, 1e-6).member);

  std::vector<double> bumped(best.values().begin(), best.values().end());
  bumped[4] += 1e-6;
  const LiftedTensor off(3, 2, 3, bumped);
  CHECK_FALSE(is_member_P(off, p, 1e-9).member);
  CHECK(is_member_P(off, p, 1e-5).member);
  CHECK(is_member_P(off, p, 1e-5).max_deviation == doctest::Approx(1e-6).epsilon(1e-6));

  CHECK_THROWS_AS(is_member_P(best, random_prob(rng, 2, 3)), DimensionError);
}

TEST_CASE("is_member_Q") {
  Rng rng(10);
  const FactorPair pair = random_pair(rng, 2, 2, 2);
  CHECK(is_member_Q(tensor_from_pair(pair), 1e-12).member);

  const ProbMatrix p = random_prob(rng, 2, 2);
  const LiftedTensor mixed = best_p_tensor(p, tensor_from_pair(random_pair(rng, 2, 2, 2)));
  const MembershipReport r = is_member_Q(mixed, 1e-9);
  CHECK_FALSE(r.member);
  CHECK(r.max_deviation > 1e-9);

  // k = 1 tensors always factor
  const ProbMatrix rank_one(NonnegMatrix{{0.12, 0.18}, {0.28, 0.42}});
  const LiftedTensor t1 = best_p_tensor(rank_one, tensor_from_pair(kRowPair));
  CHECK(is_member_P(t1, rank_one, 1e-12).member);
  CHECK(is_member_Q(t1, 1e-12).member);
}

TEST_CASE("exactly factorable P has a tensor in both sets") {
  Rng rng(12);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t m = uniform_int(rng, 2, 6), n = uniform_int(rng, 2, 6);
    const std::size_t k = uniform_int(rng, 1, std::min<std::size_t>(3, std::min(m, n)));
    const FactorPair pair = random_pair(rng, m, k, n);
    const ProbMatrix p(pair.product());
    const LiftedTensor t = tensor_from_pair(pair);
    CHECK(is_member_P(t, p, 1e-12).member);
    CHECK(is_member_Q(t, 1e-12).member);
  }
}

TEST_CASE("Pythagorean rule for the marginal set") {
  Rng rng(13);
  const ProbMatrix p = random_prob(rng, 2, 2);
  const LiftedTensor q = tensor_from_pair(random_pair(rng, 2, 2, 2));
  const LiftedTensor pstar = best_p_tensor(p, q);

  const PythagoreanCheck at_star = check_pythagorean_P(p, pstar, q);
  CHECK(at_star.first == 0.0);
  CHECK(at_star.residual <= 1e-15);

  const LiftedTensor tp = random_member_P(rng, p, 2);
  const PythagoreanCheck c = check_pythagorean_P(p, tp, q);
  CHECK(c.status == IdentityStatus::holds);
  CHECK(c.residual <= 1e-12);
  CHECK(c.collapse_residual <= 1e-12);

  const FactorPair exact = random_pair(rng, 2, 2, 2);
  const ProbMatrix pe(exact.product());
  const LiftedTensor te = tensor_from_pair(exact);
  const PythagoreanCheck both = check_pythagorean_P(pe, te, te);
  CHECK(both.lhs == 0.0);
  CHECK(both.first <= 1e-15);
  CHECK(both.second <= 1e-15);

  CHECK_THROWS_AS(check_pythagorean_P(p, q, q), DomainError);
}

TEST_CASE("Pythagorean rule for the product set") {
  Rng rng(14);
  const FactorPair pair = random_pair(rng, 2, 2, 2);
  const LiftedTensor in_q = tensor_from_pair(pair);
  const LiftedTensor q = tensor_from_pair(random_pair(rng, 2, 2, 2));
  const PythagoreanCheck fixed = check_pythagorean_Q(in_q, q);
  CHECK(fixed.first <= 1e-15);
  CHECK(fixed.residual <= 1e-15);

  const PythagoreanCheck c = check_pythagorean_Q(random_prob_tensor(rng, 2, 2, 2), q);
  CHECK(c.status == IdentityStatus::holds);
  CHECK(c.residual <= 1e-12);

  // slice l = 1 carries no mass
  const LiftedTensor zero_slice(2, 2, 2, {0.1, 0.2, 0.0, 0.0, 0.3, 0.4, 0.0, 0.0});
  const PythagoreanCheck z = check_pythagorean_Q(zero_slice, q);
  CHECK(z.status == IdentityStatus::holds);
  CHECK(z.residual <= 1e-12);
}

TEST_CASE("Pythagorean rules on random lifted instances") {
  Rng rng(15);
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t m = uniform_int(rng, 1, 6), n = uniform_int(rng, 1, 6);
    const std::size_t k = uniform_int(rng, 1, std::min<std::size_t>(3, std::min(m, n)));
    const ProbMatrix p = random_prob(rng, m, n, 0.0);
    const LiftedTensor q = tensor_from_pair(random_pair(rng, m, k, n, 0.01));
    const LiftedTensor tp = random_member_P(rng, p, k);
    const PythagoreanCheck a = check_pythagorean_P(p, tp, q);
    const PythagoreanCheck b = check_pythagorean_Q(tp, q);
    CHECK(a.residual <= kPythagoreanRelTol * std::max(1.0, a.lhs));
    CHECK(b.residual <= kPythagoreanRelTol * std::max(1.0, b.lhs));
  }
}

TEST_CASE("support mismatch is reported, not thrown") {
  // Q vanishes on the fiber (0,1) where P is positive.
  const FactorPair pair(NonnegMatrix{{0.5, 0.0}, {0.0, 0.5}}, NonnegMatrix{{1.0, 0.0}, {0.0, 1.0}});
  const LiftedTensor q = tensor_from_pair(pair);
  Rng rng(16);
  const LiftedTensor tp = random_member_P(rng, kP, 2);
  const PythagoreanCheck c = check_pythagorean_P(kP, tp, q);
  CHECK(c.status != IdentityStatus::holds);
  CHECK(c.status != IdentityStatus::violated);
}

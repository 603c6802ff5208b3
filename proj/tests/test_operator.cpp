#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <stdexcept>

#include "common.hpp"
#include "twistdec/models.hpp"
#include "twistdec/operator.hpp"

using namespace twistdec;

TEST_CASE("coordinate shift is a weighted permutation with unit raise") {
  SpaceSpec s(1, {{4, 1}});
  GradedOperator v = mz(s, 1);
  CHECK(v.raise == std::vector<int>{1});
  CHECK(v.lower == std::vector<int>{0});
  CHECK(v.word_len == 1);
  CHECK(v.weighted_permutation);
  oracle::Space os = mirror_space(s);
  CHECK(max_abs_diff(v.mat, oracle::matrix_of(os, oracle::mz(os, 1))) < 1e-15);
}

TEST_CASE("budgets sum under composition and swap under adjoints") {
  SpaceSpec s(2, {{4, 1}});
  GradedOperator a = mz(s, 1), b = mz(s, 2);
  GradedOperator w = compose({a, b, a});
  CHECK(w.raise == std::vector<int>{2, 1});
  CHECK(w.lower == std::vector<int>{0, 0});
  CHECK(w.word_len == 3);
  GradedOperator ws = adjoint(w);
  CHECK(ws.raise == std::vector<int>{0, 0});
  CHECK(ws.lower == std::vector<int>{2, 1});
  CHECK(max_abs_diff(ws.mat, w.mat.adjoint()) == 0.0);

  oracle::Space os = mirror_space(s);
  oracle::Op ow =
      oracle::compose({oracle::mz(os, 1), oracle::mz(os, 2), oracle::mz(os, 1)});
  CHECK(max_abs_diff(w.mat, oracle::matrix_of(os, ow)) < 1e-15);
}

TEST_CASE("compose validates its factor list") {
  SpaceSpec s(1, {{2, 1}}), t(1, {{3, 1}});
  CHECK_THROWS_AS(compose({mz(s, 1), mz(t, 1)}), std::invalid_argument);
  CHECK_THROWS_AS(compose(std::vector<GradedOperator>{}), std::invalid_argument);
}

TEST_CASE("certified region tracks the raise budget") {
  SpaceSpec s(1, {{4, 1}, {0, 2}});
  std::vector<int> raise{1};
  std::vector<char> mask = certified_basis_mask(s, raise);
  long certified = 0;
  for (char c : mask) certified += c;
  CHECK(certified == 4 + 2);  // degrees 0..3 plus the fiber block
  CHECK(certified_degrees(s, raise) == std::vector<int>{3, 0});

  Vector top = Vector::Zero(s.total_dim());
  top[index_of(s, {0, {4}, 0})] = 1.0;
  CHECK(!application_exact(s, support_profile(s, top), raise));
  Vector low = Vector::Zero(s.total_dim());
  low[index_of(s, {0, {3}, 0})] = 1.0;
  CHECK(application_exact(s, support_profile(s, low), raise));
}

TEST_CASE("apply tracks exactness through the state flag") {
  SpaceSpec s(1, {{4, 1}});
  GradedOperator v = mz(s, 1);
  StateVector x;
  x.coeffs = Vector::Zero(s.total_dim());
  x.coeffs[index_of(s, {0, {3}, 0})] = 1.0;
  StateVector y = apply(v, x);
  CHECK(y.certified);
  CHECK(y.coeffs[index_of(s, {0, {4}, 0})] == Complex(1.0, 0.0));
  CHECK(!apply(v, y).certified);  // support at the cap, raise would escape

  StateVector wrong;
  wrong.coeffs = Vector::Zero(2);
  CHECK_THROWS_AS(apply(v, wrong), std::invalid_argument);
}

TEST_CASE("isometry check runs over certified columns only") {
  SpaceSpec s(1, {{4, 1}});
  IsometryCheck c = is_isometry_certified(mz(s, 1));
  CHECK(c.ok);
  CHECK(c.checked == 4);  // the top column escapes and is not charged
  CHECK(c.residual < 1e-14);
  CHECK(c.certified_degree == std::vector<int>{3});

  GradedOperator half = literal_op(s, 0.5 * Matrix::Identity(5, 5));
  IsometryCheck h = is_isometry_certified(half);
  CHECK(!h.ok);
  CHECK(h.residual == doctest::Approx(0.5));
}

TEST_CASE("literal operators derive budgets from their sparsity") {
  SpaceSpec s(1, {{3, 1}});
  oracle::Space os = mirror_space(s);
  Matrix m = oracle::matrix_of(os, oracle::mz(os, 1));
  GradedOperator v = literal_op(s, m);
  CHECK(v.raise == std::vector<int>{1});
  CHECK(v.lower == std::vector<int>{0});
  GradedOperator w = literal_op(s, m.adjoint());
  CHECK(w.raise == std::vector<int>{0});
  CHECK(w.lower == std::vector<int>{1});
  GradedOperator e = literal_op(s, m, {2}, {0});  // explicit bounds win
  CHECK(e.raise == std::vector<int>{2});
}

TEST_CASE("powers compose the word") {
  SpaceSpec s(1, {{5, 1}});
  GradedOperator v = mz(s, 1);
  GradedOperator v3 = operator_power(v, 3);
  CHECK(v3.raise == std::vector<int>{3});
  CHECK(v3.word_len == 3);
  CHECK(max_abs_diff(v3.mat, v.mat * v.mat * v.mat) < 1e-15);
  CHECK(max_abs_diff(operator_power(v, 0).mat, Matrix::Identity(6, 6)) == 0.0);
  CHECK_THROWS_AS(operator_power(v, -1), std::invalid_argument);
}

TEST_CASE("weighted permutation detection") {
  Matrix two = Matrix::Zero(3, 3);
  two(0, 0) = 1.0;
  two(1, 0) = 0.5;
  CHECK(!detect_weighted_permutation(two));
  Matrix perm = Matrix::Zero(3, 3);
  perm(1, 0) = Complex(0.0, 1.0);
  perm(2, 1) = 1.0;
  perm(0, 2) = -1.0;
  CHECK(detect_weighted_permutation(perm));
}

TEST_CASE("make_operator validates shapes") {
  SpaceSpec s(1, {{2, 1}});
  CHECK_THROWS_AS(make_operator(s, Matrix::Identity(2, 2), {0}, {0}, 1, nullptr),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      make_operator(s, Matrix::Identity(3, 3), {}, {}, 1, nullptr),
      std::invalid_argument);
}

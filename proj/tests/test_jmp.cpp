#include <algorithm>
#include <numeric>

#include "doctest.h"
#include "oracles.hpp"
#include "pslp/jmp.hpp"

using namespace pslp;
using namespace pslp::jmp;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected pslp::Error");
  return ErrorCode::kIo;
}

Matrix two_node_L() {
  Matrix L(2, 2);
  L << 0, 1, 1, 0;
  return L;
}

double mean_within_distance(const Matrix& X, const std::vector<int>& y) {
  double sum = 0.0;
  int count = 0;
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = i + 1; j < X.rows(); ++j)
      if (y[i] == y[j]) {
        sum += (X.row(i) - X.row(j)).norm();
        ++count;
      }
  return sum / count;
}

double rayleigh(const Matrix& L, const Matrix& X) {
  const Matrix I = Matrix::Identity(L.rows(), L.rows());
  return (X.transpose() * (I - L) * X).trace() / X.squaredNorm();
}

}  // namespace

TEST_SUITE("jmp") {
  TEST_CASE("concat of one row each") {
    Matrix s(1, 2), q(1, 2);
    s << 1, 2;
    q << 3, 4;
    Matrix expected(2, 2);
    expected << 1, 2, 3, 4;
    CHECK(concat_features(s, q) == expected);
  }

  TEST_CASE("concat with no queries returns the support") {
    const Matrix s = Matrix::Random(3, 4);
    CHECK(concat_features(s, Matrix(0, 4)) == s);
  }

  TEST_CASE("concat block layout") {
    oracle::Stream st(1);
    const Matrix s = oracle::random_matrix(st, 5, 3);
    const Matrix q = oracle::random_matrix(st, 75, 3);
    const Matrix X = concat_features(s, q);
    REQUIRE(X.rows() == 80);
    for (int i = 0; i < 5; ++i) CHECK(X.row(i) == s.row(i));
    for (int i = 0; i < 75; ++i) CHECK(X.row(5 + i) == q.row(i));
  }

  TEST_CASE("concat dimension mismatch") {
    CHECK(code_of([] { concat_features(Matrix::Zero(1, 2), Matrix::Zero(1, 3)); }) ==
          ErrorCode::kDimensionMismatch);
  }

  TEST_CASE("filter power k = 0 is the identity") {
    const Matrix X = Matrix::Random(2, 3);
    CHECK(filter_power(two_node_L(), 0, X) == X);
  }

  TEST_CASE("two-node filter averages and is idempotent") {
    Matrix X(2, 1);
    X << 1, 0;
    Matrix half(2, 1);
    half << 0.5, 0.5;
    CHECK(filter_power(two_node_L(), 1, X) == half);
    CHECK(filter_power(two_node_L(), 2, X) == half);
  }

  TEST_CASE("filter power equals the explicit matrix power") {
    oracle::Stream s(2);
    const Matrix L = oracle::graph_L(oracle::random_unit_rows(s, 15, 4), 10.0, 4);
    const Matrix X = oracle::random_matrix(s, 15, 3);
    const Matrix H = (Matrix::Identity(15, 15) + L) / 2.0;
    Matrix expected = X;
    for (int i = 0; i < 4; ++i) expected = oracle::matmul(H, expected);
    CHECK(oracle::max_abs_diff(filter_power(L, 4, X), expected) < 1e-12);
  }

  TEST_CASE("refinement with k = 0 leaves features and rebuilds the graph once") {
    oracle::Stream s(3);
    const Matrix X0 = oracle::random_unit_rows(s, 12, 4);
    JmpConfig cfg;
    cfg.k = 0;
    cfg.B = 3;
    const auto r = jmp_refine(X0, cfg);
    CHECK(r.features == X0);
    CHECK(r.graph.normalized == graph::build_graph(X0, cfg.gamma, cfg.B).normalized);
  }

  TEST_CASE("refinement shrinks within-cluster distances") {
    oracle::Stream s(4);
    Matrix X(16, 3);
    std::vector<int> y;
    for (int i = 0; i < 16; ++i) {
      const int c = i < 8 ? 0 : 1;
      y.push_back(c);
      X(i, 0) = c == 0 ? 1.0 : -1.0;
      X(i, 1) = 0.2 * s.normal();
      X(i, 2) = 0.2 * s.normal();
    }
    for (int B : {4, 7}) {
      JmpConfig cfg;
      cfg.B = B;
      const auto r = jmp_refine(X, cfg);
      CHECK(mean_within_distance(r.features, y) / mean_within_distance(X, y) < 1.0);
    }
  }

  TEST_CASE("refinement is permutation equivariant") {
    oracle::Stream s(5);
    const Matrix X0 = oracle::random_unit_rows(s, 18, 4);
    std::vector<int> perm(18);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), s.engine());
    Matrix Xp(18, 4);
    for (int i = 0; i < 18; ++i) Xp.row(i) = X0.row(perm[i]);
    const auto r = jmp_refine(X0, JmpConfig{});
    const auto rp = jmp_refine(Xp, JmpConfig{});
    for (int i = 0; i < 18; ++i) CHECK((rp.features.row(i) - r.features.row(perm[i])).norm() < 1e-12);
  }

  TEST_CASE("dense first graph changes the smoothing input only") {
    oracle::Stream s(6);
    const Matrix X0 = oracle::random_unit_rows(s, 12, 4);
    JmpConfig cfg;
    cfg.B = 3;
    cfg.dense_first_graph = true;
    const auto r = jmp_refine(X0, cfg);
    Matrix dense = graph::gaussian_affinity(X0, cfg.gamma);
    dense.diagonal().setZero();
    const Matrix expected = filter_power(graph::normalized_adjacency(dense).normalized, cfg.k, X0);
    CHECK(oracle::max_abs_diff(r.features, expected) < 1e-12);
    CHECK(r.graph.normalized == graph::build_graph(expected, cfg.gamma, 3).normalized);
  }

  TEST_CASE("config validation and size errors") {
    JmpConfig bad;
    bad.k = -1;
    CHECK(code_of([&] { bad.validate(); }) == ErrorCode::kConfig);
    bad = {};
    bad.t_jmp = 0;
    CHECK(code_of([&] { bad.validate(); }) == ErrorCode::kConfig);
    CHECK(code_of([] { jmp_refine(Matrix::Zero(1, 3), JmpConfig{}); }) == ErrorCode::kDimensionError);
  }
}

TEST_SUITE("jmp properties") {
  TEST_CASE("filter is linear") {
    oracle::Stream s(7);
    const Matrix L = oracle::graph_L(oracle::random_unit_rows(s, 20, 4), 10.0, 5);
    const Matrix X = oracle::random_matrix(s, 20, 3), Y = oracle::random_matrix(s, 20, 3);
    const double a = 1.7, b = -0.4;
    for (int k : {1, 2, 4, 7})
      CHECK(oracle::max_abs_diff(filter_power(L, k, a * X + b * Y),
                                 a * filter_power(L, k, X) + b * filter_power(L, k, Y)) < 1e-10);
  }

  TEST_CASE("filter never grows the Frobenius norm") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      oracle::Stream s(seed);
      const int T = s.integer(3, 40);
      const Matrix L = oracle::graph_L(oracle::random_unit_rows(s, T, 3), s.uniform(0.5, 15), std::min(5, T - 1));
      const Matrix X = oracle::random_matrix(s, T, 4);
      for (int k = 0; k <= 6; ++k) CHECK(filter_power(L, k, X).norm() <= X.norm() + 1e-9);
    }
  }

  TEST_CASE("smoothing lowers the Rayleigh quotient as k grows") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      oracle::Stream s(seed + 30);
      const int T = s.integer(6, 32);
      // B = T-1 keeps the graph connected.
      const Matrix L = oracle::graph_L(oracle::random_unit_rows(s, T, 3), 2.0, T - 1);
      const Matrix X = oracle::random_matrix(s, T, 3);
      double previous = rayleigh(L, X);
      for (int k = 1; k <= 8; ++k) {
        const double r = rayleigh(L, filter_power(L, k, X));
        CHECK(r <= previous + 1e-12);
        previous = r;
      }
    }
  }

  TEST_CASE("k = 0 refinement is bit identical") {
    oracle::Stream s(9);
    const Matrix X0 = oracle::random_matrix(s, 10, 6);
    JmpConfig cfg;
    cfg.k = 0;
    cfg.t_jmp = 3;
    CHECK(jmp_refine(X0, cfg).features == X0);
  }
}

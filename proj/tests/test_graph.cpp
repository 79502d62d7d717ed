#include <algorithm>
#include <numeric>

#include "doctest.h"
#include "oracles.hpp"
#include "pslp/graph.hpp"

using namespace pslp;
using namespace pslp::graph;

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

double spectral_radius(const Matrix& L) {
  return Eigen::SelfAdjointEigenSolver<Matrix>(L, Eigen::EigenvaluesOnly).eigenvalues().cwiseAbs().maxCoeff();
}

Matrix random_symmetric_nonneg(oracle::Stream& s, int T) {
  Matrix A(T, T);
  for (int i = 0; i < T; ++i)
    for (int j = i; j < T; ++j) A(i, j) = A(j, i) = s.uniform();
  return A;
}

Matrix permute_rows(const Matrix& X, const std::vector<int>& perm) {
  Matrix out(X.rows(), X.cols());
  for (std::size_t i = 0; i < perm.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = X.row(perm[i]);
  return out;
}

}  // namespace

TEST_SUITE("graph") {
  TEST_CASE("pairwise distances: identical points") {
    Matrix X(2, 1);
    X << 0, 0;
    CHECK(pairwise_sq_dist(X) == Matrix::Zero(2, 2));
  }

  TEST_CASE("pairwise distances: two scalars") {
    Matrix X(2, 1);
    X << 0, 3;
    const Matrix D = pairwise_sq_dist(X);
    CHECK(D(0, 1) == 9.0);
    CHECK(D(1, 0) == 9.0);
    CHECK(D(0, 0) == 0.0);
  }

  TEST_CASE("pairwise distances match a triple loop") {
    oracle::Stream s(11);
    const Matrix X = oracle::random_matrix(s, 6, 4);
    const Matrix D = pairwise_sq_dist(X);
    CHECK(oracle::max_abs_diff(D, oracle::sq_dist(X)) < 1e-10);
    CHECK(D(0, 1) == doctest::Approx(3.543137678982522).epsilon(1e-12));
    CHECK(D(2, 5) == doctest::Approx(11.599774384013989).epsilon(1e-12));
    CHECK(D.sum() == doctest::Approx(216.59186514852652).epsilon(1e-12));
  }

  TEST_CASE("gaussian affinity: identical points are all ones") {
    const Matrix X = Matrix::Constant(3, 2, 0.7);
    CHECK(gaussian_affinity(X, 4.0) == Matrix::Ones(3, 3));
  }

  TEST_CASE("gaussian affinity: unit distance") {
    Matrix X(2, 1);
    X << 0, 1;
    const Matrix A = gaussian_affinity(X, 1.0);
    CHECK(A(0, 1) == doctest::Approx(0.36787944117144233).epsilon(1e-12));
    CHECK(A(0, 0) == 1.0);
  }

  TEST_CASE("gaussian affinity matches the composed oracle") {
    oracle::Stream s(12);
    const Matrix X = oracle::random_unit_rows(s, 5, 3) * 0.3;
    const Matrix A = gaussian_affinity(X, 10.0);
    CHECK(oracle::max_abs_diff(A, oracle::gaussian(X, 10.0)) < 1e-12);
    CHECK(A(0, 1) == doctest::Approx(0.030295845135082936).epsilon(1e-10));
    CHECK(A(3, 4) == doctest::Approx(0.045011629453193661).epsilon(1e-10));
  }

  TEST_CASE("knn keeps row maxima after removing the diagonal") {
    Matrix A(3, 3);
    A << 1, .9, .1, .9, 1, .5, .1, .5, 1;
    Matrix expected(3, 3);
    expected << 0, .9, 0, .9, 0, 0, 0, .5, 0;
    CHECK(knn_sparsify(A, 1) == expected);
  }

  TEST_CASE("knn with B = T-1 only zeroes the diagonal") {
    oracle::Stream s(31);
    const Matrix A = random_symmetric_nonneg(s, 6);
    Matrix expected = A;
    expected.diagonal().setZero();
    CHECK(knn_sparsify(A, 5) == expected);
  }

  TEST_CASE("knn matches a per-row sort oracle") {
    oracle::Stream s(32);
    const Matrix A = random_symmetric_nonneg(s, 10);
    const Matrix S = knn_sparsify(A, 3);
    CHECK(S == oracle::knn(A, 3));
    for (Eigen::Index i = 0; i < 10; ++i) {
      int nonzero = 0;
      double smallest_kept = 2.0, largest_dropped = -1.0;
      for (Eigen::Index j = 0; j < 10; ++j) {
        if (i == j) continue;
        if (S(i, j) != 0.0) {
          ++nonzero;
          smallest_kept = std::min(smallest_kept, S(i, j));
        } else {
          largest_dropped = std::max(largest_dropped, A(i, j));
        }
      }
      CHECK(nonzero == 3);
      CHECK(smallest_kept >= largest_dropped);
    }
  }

  TEST_CASE("knn ties go to the lowest column") {
    Matrix A = Matrix::Constant(4, 4, 0.5);
    const Matrix S = knn_sparsify(A, 2);
    CHECK(S(0, 1) == 0.5);
    CHECK(S(0, 2) == 0.5);
    CHECK(S(0, 3) == 0.0);
    CHECK(S(3, 0) == 0.5);
    CHECK(S(3, 1) == 0.5);
    CHECK(S(3, 2) == 0.0);
  }

  TEST_CASE("knn neighbour count errors") {
    const Matrix A = Matrix::Ones(4, 4);
    CHECK(code_of([&] { knn_sparsify(A, 0); }) == ErrorCode::kBadNeighborCount);
    CHECK(code_of([&] { knn_sparsify(A, 4); }) == ErrorCode::kBadNeighborCount);
    CHECK(code_of([&] { knn_sparsify(A, -1); }) == ErrorCode::kBadNeighborCount);
  }

  TEST_CASE("symmetrize by max") {
    Matrix A(2, 2);
    A << 0, .5, 0, 0;
    Matrix expected(2, 2);
    expected << 0, .5, .5, 0;
    CHECK(symmetrize_max(A) == expected);
    CHECK(symmetrize_max(expected) == expected);
    oracle::Stream s(33);
    const Matrix S = symmetrize_max(knn_sparsify(random_symmetric_nonneg(s, 8), 2));
    CHECK(S - S.transpose() == Matrix::Zero(8, 8));
  }

  TEST_CASE("normalized adjacency of a unit edge") {
    Matrix A(2, 2);
    A << 0, 1, 1, 0;
    const auto r = normalized_adjacency(A);
    CHECK(r.degrees == Vector::Ones(2));
    CHECK(r.normalized == A);
  }

  TEST_CASE("normalized adjacency cancels edge weight on two nodes") {
    for (double w : {1e-6, 0.3, 7.0}) {
      Matrix A(2, 2);
      A << 0, w, w, 0;
      const Matrix L = normalized_adjacency(A).normalized;
      CHECK(L(0, 1) == doctest::Approx(1.0).epsilon(1e-14));
      CHECK(L(1, 0) == doctest::Approx(1.0).epsilon(1e-14));
      CHECK(L(0, 0) == 0.0);
    }
  }

  TEST_CASE("normalized adjacency spectrum of random symmetric graphs") {
    oracle::Stream s(34);
    Matrix A = random_symmetric_nonneg(s, 12);
    A.diagonal().setZero();
    const auto r = normalized_adjacency(A);
    CHECK(oracle::max_abs_diff(r.normalized, oracle::normalized(A)) < 1e-14);
    const Vector eig = Eigen::SelfAdjointEigenSolver<Matrix>(r.normalized).eigenvalues();
    CHECK(eig.minCoeff() >= -1.0 - 1e-9);
    CHECK(eig.maxCoeff() <= 1.0 + 1e-9);
  }

  TEST_CASE("isolated nodes get the degree floor") {
    Matrix A = Matrix::Zero(3, 3);
    A(0, 1) = A(1, 0) = 1.0;
    const auto r = normalized_adjacency(A);
    CHECK(r.degrees(2) == kDegreeFloor);
    CHECK(r.normalized.row(2).isZero());
    CHECK(r.normalized.allFinite());
  }

  TEST_CASE("two separated pairs give two unit edges") {
    Matrix X(4, 2);
    X << 0, 0, 0, 0, 50, 50, 50, 50;
    const auto g = build_graph(X, 10.0, 1);
    Matrix expected = Matrix::Zero(4, 4);
    expected(0, 1) = expected(1, 0) = expected(2, 3) = expected(3, 2) = 1.0;
    CHECK(g.affinity == expected);
  }

  TEST_CASE("build_graph with B = T-1 is the dense symmetrized kernel") {
    oracle::Stream s(35);
    const Matrix X = oracle::random_unit_rows(s, 7, 3);
    const auto g = build_graph(X, 2.0, 6);
    Matrix dense = gaussian_affinity(X, 2.0);
    dense.diagonal().setZero();
    CHECK(oracle::max_abs_diff(g.affinity, dense) < 1e-15);
  }

  TEST_CASE("build_graph matches the composed oracle") {
    oracle::Stream s(36);
    const Matrix X = oracle::random_unit_rows(s, 20, 5);
    CHECK(oracle::max_abs_diff(build_graph(X, 10.0, 4).normalized, oracle::graph_L(X, 10.0, 4)) < 1e-12);
  }
}

TEST_SUITE("graph properties") {
  TEST_CASE("built graphs satisfy the structural invariants") {
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
      oracle::Stream s(seed);
      const int T = s.integer(3, 64);
      const int B = s.integer(1, std::min(10, T - 1));
      const double gamma = s.uniform(0.5, 20.0);
      const auto g = build_graph(oracle::random_unit_rows(s, T, s.integer(2, 10)), gamma, B);
      CHECK(g.affinity == g.affinity.transpose());
      CHECK(g.affinity.diagonal().isZero(0.0));
      CHECK(g.affinity.minCoeff() >= 0.0);
      CHECK(g.normalized == g.normalized.transpose());
      CHECK(g.degrees.minCoeff() > 0.0);
      CHECK(spectral_radius(g.normalized) <= 1.0 + 1e-9);
      // Each directed neighbour pick adds at most two symmetric entries.
      CHECK((g.affinity.array() > 0).count() <= 2 * B * T);
    }
  }

  TEST_CASE("affinity is monotone in distance") {
    oracle::Stream s(41);
    const Matrix X = oracle::random_unit_rows(s, 15, 4);
    const Matrix D = pairwise_sq_dist(X);
    const Matrix A = gaussian_affinity(X, 5.0);
    for (Eigen::Index i = 0; i < 15; ++i)
      for (Eigen::Index j = 0; j < 15; ++j)
        for (Eigen::Index k = 0; k < 15; ++k)
          if (D(i, j) < D(i, k)) CHECK(A(i, j) >= A(i, k));
  }

  TEST_CASE("knn never invents values") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      oracle::Stream s(seed + 50);
      const Matrix A = random_symmetric_nonneg(s, 12);
      const Matrix S = knn_sparsify(A, s.integer(1, 11));
      for (Eigen::Index i = 0; i < 12; ++i)
        for (Eigen::Index j = 0; j < 12; ++j) CHECK((S(i, j) == 0.0 || S(i, j) == A(i, j)));
    }
  }

  TEST_CASE("build_graph is permutation equivariant") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      oracle::Stream s(seed + 60);
      const int T = s.integer(4, 20);
      const Matrix X = oracle::random_unit_rows(s, T, 4);
      std::vector<int> perm(static_cast<std::size_t>(T));
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), s.engine());
      const int B = std::min(3, T - 1);
      const auto g = build_graph(X, 10.0, B);
      const auto gp = build_graph(permute_rows(X, perm), 10.0, B);
      for (int i = 0; i < T; ++i)
        for (int j = 0; j < T; ++j) CHECK(gp.normalized(i, j) == doctest::Approx(g.normalized(perm[i], perm[j])));
    }
  }
}

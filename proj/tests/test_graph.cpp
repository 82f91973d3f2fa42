#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gnes/graph.hpp"
#include "gnes/io.hpp"

#include <algorithm>
#include <numeric>

using namespace gnes;

namespace {

Mat path3() {
  Mat w = Mat::Zero(3, 3);
  w(0, 1) = w(1, 0) = 1.0;
  w(1, 2) = w(2, 1) = 1.0;
  return w;
}

Mat complete(int n, double weight = 1.0) {
  Mat w = Mat::Constant(n, n, weight);
  w.diagonal().setZero();
  return w;
}

// Random connected graph on n nodes: random spanning tree plus extra edges.
Mat random_connected(Rng& rng, int n) {
  Mat w = Mat::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i)));
    const double wt = rng.uniform(0.5, 2.0);
    w(i, j) = w(j, i) = wt;
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (w(i, j) == 0.0 && rng.bernoulli(0.3)) {
        const double wt = rng.uniform(0.5, 2.0);
        w(i, j) = w(j, i) = wt;
      }
    }
  }
  return w;
}

}  // namespace

TEST_CASE("build_graph: path P3, degrees and edge enumeration") {
  const CommGraph g = CommGraph::build(path3());
  CHECK(g.num_agents() == 3);
  CHECK(g.num_edges() == 2);
  CHECK(g.degree(0) == doctest::Approx(1.0));
  CHECK(g.degree(1) == doctest::Approx(2.0));
  CHECK(g.degree(2) == doctest::Approx(1.0));
  // Lexicographic edges, output = smaller index.
  CHECK(g.edges()[0].out == 0);
  CHECK(g.edges()[0].in == 1);
  CHECK(g.edges()[1].out == 1);
  CHECK(g.edges()[1].in == 2);
  CHECK(g.edge_index(0, 1) == 0);
  CHECK(g.edge_index(1, 0) == 0);
  CHECK(g.edge_index(2, 1) == 1);
}

TEST_CASE("build_graph: K3 unit weights") {
  const CommGraph g = CommGraph::build(complete(3));
  CHECK(g.num_edges() == 3);
  for (int i = 0; i < 3; ++i) CHECK(g.degree(i) == doctest::Approx(2.0));
}

TEST_CASE("build_graph: rejections") {
  Mat disconnected = Mat::Zero(2, 2);
  CHECK_THROWS_AS(CommGraph::build(disconnected), Error);
  try {
    CommGraph::build(disconnected);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::Disconnected);
  }

  Mat asym = path3();
  asym(0, 1) = 2.0;  // breaks symmetry
  CHECK_THROWS_AS(CommGraph::build(asym), Error);

  Mat neg = path3();
  neg(0, 1) = neg(1, 0) = -1.0;
  CHECK_THROWS_AS(CommGraph::build(neg), Error);

  Mat diag = path3();
  diag(1, 1) = 0.5;
  CHECK_THROWS_AS(CommGraph::build(diag), Error);
}

TEST_CASE("laplacian: hand examples") {
  const Mat l3 = CommGraph::build(path3()).laplacian();
  Mat want(3, 3);
  want << 1, -1, 0, -1, 2, -1, 0, -1, 1;
  CHECK((l3 - want).cwiseAbs().maxCoeff() == doctest::Approx(0.0));

  const Mat lk2 = CommGraph::build(complete(2)).laplacian();
  Mat want2(2, 2);
  want2 << 1, -1, -1, 1;
  CHECK((lk2 - want2).cwiseAbs().maxCoeff() == doctest::Approx(0.0));

  const Mat lw = CommGraph::build(complete(2, 2.0)).laplacian();
  Mat want3(2, 2);
  want3 << 2, -2, -2, 2;
  CHECK((lw - want3).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("incidence: K2 and structural identities") {
  const CommGraph g = CommGraph::build(complete(2));
  const Mat v = g.incidence();
  REQUIRE(v.rows() == 1);
  CHECK(v(0, 0) == doctest::Approx(1.0));
  CHECK(v(0, 1) == doctest::Approx(-1.0));
}

TEST_CASE("incidence: V^T V = L and V 1 = 0 on random connected graphs") {
  Rng rng(42);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(11));  // N <= 12
    const CommGraph g = CommGraph::build(random_connected(rng, n));
    const Mat v = g.incidence();
    CHECK((v.transpose() * v - g.laplacian()).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((v * Vec::Ones(n)).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("laplacian spectrum: PSD with null vector 1") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 3 + static_cast<int>(rng.below(8));
    const CommGraph g = CommGraph::build(random_connected(rng, n));
    const Mat l = g.laplacian();
    CHECK((l - l.transpose()).cwiseAbs().maxCoeff() <= 1e-14);
    Eigen::SelfAdjointEigenSolver<Mat> es(l, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10);
    CHECK(std::abs(es.eigenvalues()[0]) <= 1e-10);
    CHECK((l * Vec::Ones(n)).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("algebraic_connectivity: closed-form spectra") {
  CHECK(CommGraph::build(complete(4)).algebraic_connectivity() == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(CommGraph::build(path3()).algebraic_connectivity() == doctest::Approx(1.0).epsilon(1e-9));

  // Star on 5 nodes, center 0.
  Mat star = Mat::Zero(5, 5);
  for (int i = 1; i < 5; ++i) star(0, i) = star(i, 0) = 1.0;
  CHECK(CommGraph::build(star).algebraic_connectivity() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("algebraic_connectivity: permutation invariance") {
  Rng rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 4 + static_cast<int>(rng.below(6));
    const Mat w = random_connected(rng, n);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = n - 1; i > 0; --i) {
      std::swap(perm[i], perm[static_cast<int>(rng.below(static_cast<std::uint64_t>(i + 1)))]);
    }
    Mat wp(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) wp(perm[i], perm[j]) = w(i, j);
    }
    const double a = CommGraph::build(w).algebraic_connectivity();
    const double b = CommGraph::build(wp).algebraic_connectivity();
    CHECK(a == doctest::Approx(b).epsilon(1e-9));
  }
}

TEST_CASE("graph JSON round trip") {
  Rng rng(5);
  const Mat w = random_connected(rng, 6);
  const CommGraph g = CommGraph::build(w);
  const CommGraph h = graph_from_json(graph_to_json(g));
  CHECK((g.weights() - h.weights()).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  CHECK(g.num_edges() == h.num_edges());
  CHECK(g.algebraic_connectivity() == doctest::Approx(h.algebraic_connectivity()));
}

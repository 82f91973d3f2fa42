#include "gnes/graph.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace gnes {

CommGraph CommGraph::build(const Mat& weights, double connectivity_tol) {
  const auto n = weights.rows();
  require(n == weights.cols(), Errc::NotSymmetric, "weight matrix must be square");
  for (Eigen::Index i = 0; i < n; ++i) {
    require(weights(i, i) == 0.0, Errc::NotSymmetric, "weight matrix must have zero diagonal");
    for (Eigen::Index j = 0; j < n; ++j) {
      require(weights(i, j) == weights(j, i), Errc::NotSymmetric, "weight matrix must be symmetric");
      require(weights(i, j) >= 0.0, Errc::NegativeWeight, "edge weights must be nonnegative");
    }
  }

  CommGraph g;
  g.weights_ = weights;
  g.degrees_.assign(n, 0.0);
  g.neighbors_.assign(n, {});
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (weights(i, j) > 0.0) {
        g.degrees_[i] += weights(i, j);
        g.neighbors_[i].push_back(static_cast<int>(j));
      }
    }
  }
  g.edge_index_ = Eigen::MatrixXi::Constant(n, n, -1);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (weights(i, j) > 0.0) {
        g.edge_index_(i, j) = g.edge_index_(j, i) = static_cast<int>(g.edges_.size());
        g.edges_.push_back({static_cast<int>(i), static_cast<int>(j), weights(i, j)});
      }
    }
  }

  Eigen::SelfAdjointEigenSolver<Mat> es(g.laplacian(), Eigen::EigenvaluesOnly);
  g.lambda2_ = n >= 2 ? es.eigenvalues()(1) : 0.0;
  require(g.lambda2_ > connectivity_tol, Errc::Disconnected, "communication graph must be connected");
  return g;
}

int CommGraph::edge_index(int i, int j) const {
  const int l = edge_index_(i, j);
  require(l >= 0, Errc::DimensionMismatch, "edge_index: agents are not neighbors");
  return l;
}

Mat CommGraph::laplacian() const {
  const int n = num_agents();
  Mat lap = -weights_;
  for (int i = 0; i < n; ++i) lap(i, i) = degrees_[i];
  return lap;
}

Mat CommGraph::incidence() const {
  Mat v = Mat::Zero(num_edges(), num_agents());
  for (int l = 0; l < num_edges(); ++l) {
    const double s = std::sqrt(edges_[l].w);
    v(l, edges_[l].out) = s;
    v(l, edges_[l].in) = -s;
  }
  return v;
}

}  // namespace gnes

#pragma once

#include "gnes/types.hpp"

#include <utility>
#include <vector>

namespace gnes {

/// Weighted undirected communication topology. Immutable after
/// construction; safe to share read-only across threads.
class CommGraph {
 public:
  struct Edge {
    int out;  // smaller index by convention (output vertex)
    int in;   // larger index (input vertex)
    double w;
  };

  /// Validates symmetry, nonnegativity, zero diagonal and connectivity.
  /// Edges are enumerated lexicographically by (min(i,j), max(i,j)).
  static CommGraph build(const Mat& weights, double connectivity_tol = 1e-10);

  int num_agents() const { return static_cast<int>(weights_.rows()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  const Mat& weights() const { return weights_; }
  double weight(int i, int j) const { return weights_(i, j); }
  double degree(int i) const { return degrees_[i]; }
  const std::vector<double>& degrees() const { return degrees_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<std::vector<int>>& neighbors() const { return neighbors_; }
  /// Edge-list index of the (unordered) pair {i, j}; requires w_ij > 0.
  int edge_index(int i, int j) const;

  Mat laplacian() const;
  /// Weighted incidence V (E x N): +sqrt(w) at the output vertex,
  /// -sqrt(w) at the input vertex. V^T V equals the Laplacian.
  Mat incidence() const;
  /// Second-smallest Laplacian eigenvalue; throws Disconnected below tol.
  double algebraic_connectivity() const { return lambda2_; }

 private:
  CommGraph() = default;

  Mat weights_;
  Eigen::MatrixXi edge_index_;
  std::vector<double> degrees_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> neighbors_;
  double lambda2_ = 0.0;
};

}  // namespace gnes

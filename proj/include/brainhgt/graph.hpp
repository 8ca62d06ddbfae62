#pragma once

#include "brainhgt/common.hpp"

#include <vector>

namespace brainhgt::graph {

// ---------------------------------------------------------------------------
// Topology-optimized brain graph construction: Pearson correlation, inverse
// weighted graph, orthogonal MST extraction, cost-efficiency sparsification,
// and a percentage-thresholding baseline. All functions are pure.
// ---------------------------------------------------------------------------

/// ROI x timepoint series. Construction rejects constant rows and T < 2.
struct TimeSeries {
  Matrix values;  // N x T

  int roi_count() const { return static_cast<int>(values.rows()); }
  int length() const { return static_cast<int>(values.cols()); }

  static TimeSeries from_matrix(Matrix m);
};

/// Symmetric correlation matrix with unit diagonal, entries in [-1, 1].
struct CorrelationMatrix {
  Matrix r;  // N x N

  int size() const { return static_cast<int>(r.rows()); }

  /// Validates and canonicalizes an externally loaded matrix: square,
  /// near-symmetric, entries within [-1,1] up to rounding. Symmetry is made
  /// exact and values clamped.
  static CorrelationMatrix from_matrix(Matrix m);
};

/// Undirected edge, canonical i < j, weight meaning depends on context.
struct Edge {
  int i = 0;
  int j = 0;
  double w = 0.0;
};

/// Inverse weighted graph: d_ij = 1/|r_ij| for r_ij != 0. Since |r| <= 1 all
/// present weights are >= 1, so 0 marks an absent edge.
struct InverseWeightedGraph {
  Matrix d;  // N x N, 0 = absent

  int size() const { return static_cast<int>(d.rows()); }
  std::vector<Edge> edges() const;  // i < j, present only
};

/// Ordered sequence of edge-disjoint minimum spanning forests.
struct MstSequence {
  std::vector<std::vector<Edge>> trees;  // weights are inverse distances

  size_t total_edges() const;
};

/// Sparsified graph plus its hop-count shortest-path matrix. Unreachable
/// pairs hold the sentinel value N in spl.
struct SparseBrainGraph {
  Eigen::MatrixXi adjacency;  // binary, symmetric, zero diagonal
  std::vector<Edge> edge_weights;  // kept edges with |r_ij| weights
  Eigen::MatrixXi spl;        // hop counts, sentinel N for unreachable
  double density = 0.0;       // |E| / (N(N-1)/2)
  double ge = 0.0;
  double cost = 0.0;
  double objective = 0.0;     // ge - cost

  int size() const { return static_cast<int>(adjacency.rows()); }
};

CorrelationMatrix pearson_correlation(const TimeSeries& ts);

InverseWeightedGraph inverse_distance_graph(const CorrelationMatrix& R);

/// Iterated Kruskal: extract a minimum spanning forest, remove its edges,
/// repeat. Equal weights are ordered by (i, j) so sequences are reproducible.
/// Later rounds may yield forests with fewer than N-1 edges.
MstSequence orthogonal_msts(const InverseWeightedGraph& D, int max_trees);

/// Upper bound on the number of edge-disjoint spanning structures.
int default_max_trees(int n_edges, int n_nodes);

/// Mean inverse shortest path length over ordered pairs, hop-count metric;
/// unreachable pairs contribute 0. In [0, 1].
double global_efficiency(const Eigen::MatrixXi& adjacency);

/// Sum of |r_ij| over kept edges normalized by the total over all i < j.
double wiring_cost(const std::vector<Edge>& kept, const CorrelationMatrix& R);

/// All-pairs hop counts by BFS; unreachable pairs get the sentinel N.
Eigen::MatrixXi bfs_hop_matrix(const Eigen::MatrixXi& adjacency);

/// OMST sparsification: aggregate extracted MST edges one by one in
/// extraction order and keep the prefix maximizing GE - Cost (ties toward
/// the sparser prefix).
SparseBrainGraph omst_sparsify(const CorrelationMatrix& R);

/// Baseline: keep the ceil(density * N(N-1)/2) strongest-|r| edges, ties by
/// lexicographic (i, j).
SparseBrainGraph threshold_sparsify(const CorrelationMatrix& R, double density);

}  // namespace brainhgt::graph

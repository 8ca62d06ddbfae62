#include "brainhgt/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

namespace brainhgt::graph {

namespace {

// union-find with path halving
struct DisjointSet {
  std::vector<int> parent;
  explicit DisjointSet(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[b] = a;
    return true;
  }
};

bool edge_less(const Edge& a, const Edge& b) {
  if (a.w != b.w) return a.w < b.w;
  if (a.i != b.i) return a.i < b.i;
  return a.j < b.j;
}

Eigen::MatrixXi adjacency_from_edges(int n, const std::vector<Edge>& edges) {
  Eigen::MatrixXi adj = Eigen::MatrixXi::Zero(n, n);
  for (const Edge& e : edges) {
    adj(e.i, e.j) = 1;
    adj(e.j, e.i) = 1;
  }
  return adj;
}

SparseBrainGraph finalize_graph(const CorrelationMatrix& R, const std::vector<Edge>& kept) {
  const int n = R.size();
  SparseBrainGraph g;
  g.adjacency = adjacency_from_edges(n, kept);
  g.edge_weights = kept;
  for (Edge& e : g.edge_weights) e.w = std::abs(R.r(e.i, e.j));
  g.spl = bfs_hop_matrix(g.adjacency);
  g.density = n > 1 ? static_cast<double>(kept.size()) / (0.5 * n * (n - 1)) : 0.0;
  g.ge = global_efficiency(g.adjacency);
  g.cost = wiring_cost(g.edge_weights, R);
  g.objective = g.ge - g.cost;
  return g;
}

}  // namespace

TimeSeries TimeSeries::from_matrix(Matrix m) {
  if (m.rows() < 1 || m.cols() < 2)
    fail(Errc::bad_shape, "time series needs N >= 1 rois and T >= 2 timepoints");
  for (int i = 0; i < m.rows(); ++i) {
    const double mean = m.row(i).mean();
    if ((m.row(i).array() - mean).abs().maxCoeff() == 0.0)
      fail(Errc::constant_row, "roi " + std::to_string(i) + " has zero variance");
  }
  return TimeSeries{std::move(m)};
}

CorrelationMatrix CorrelationMatrix::from_matrix(Matrix m) {
  if (m.rows() != m.cols() || m.rows() < 1)
    fail(Errc::bad_shape, "correlation matrix must be square");
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-9) fail(Errc::bad_shape, "correlation matrix asymmetric beyond tolerance");
  if ((m.cwiseAbs().maxCoeff()) > 1.0 + 1e-9)
    fail(Errc::bad_shape, "correlation entries outside [-1, 1]");
  Matrix r = 0.5 * (m + m.transpose());
  r = r.cwiseMax(-1.0).cwiseMin(1.0);
  r.diagonal().setOnes();
  return CorrelationMatrix{std::move(r)};
}

CorrelationMatrix pearson_correlation(const TimeSeries& ts) {
  const int n = ts.roi_count();
  Matrix centered = ts.values;
  Vector sd(n);
  for (int i = 0; i < n; ++i) {
    centered.row(i).array() -= centered.row(i).mean();
    sd(i) = centered.row(i).norm();
    if (sd(i) == 0.0) fail(Errc::constant_row, "roi " + std::to_string(i) + " has zero variance");
  }
  Matrix r = Matrix::Identity(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double v = centered.row(i).dot(centered.row(j)) / (sd(i) * sd(j));
      v = std::clamp(v, -1.0, 1.0);
      r(i, j) = v;
      r(j, i) = v;
    }
  }
  return CorrelationMatrix{std::move(r)};
}

InverseWeightedGraph inverse_distance_graph(const CorrelationMatrix& R) {
  const int n = R.size();
  Matrix d = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (R.r(i, j) != 0.0) {
        d(i, j) = 1.0 / std::abs(R.r(i, j));
        d(j, i) = d(i, j);
      }
  return InverseWeightedGraph{std::move(d)};
}

std::vector<Edge> InverseWeightedGraph::edges() const {
  std::vector<Edge> out;
  const int n = size();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (d(i, j) != 0.0) out.push_back({i, j, d(i, j)});
  return out;
}

size_t MstSequence::total_edges() const {
  size_t s = 0;
  for (const auto& t : trees) s += t.size();
  return s;
}

int default_max_trees(int n_edges, int n_nodes) {
  if (n_nodes < 2) return 1;
  return n_edges / (n_nodes - 1) + 1;
}

MstSequence orthogonal_msts(const InverseWeightedGraph& D, int max_trees) {
  const int n = D.size();
  if (n < 2) fail(Errc::bad_shape, "graph needs at least 2 nodes");
  std::vector<Edge> remaining = D.edges();
  if (remaining.empty()) fail(Errc::empty_graph, "inverse weighted graph has no edges");
  std::sort(remaining.begin(), remaining.end(), edge_less);

  MstSequence seq;
  for (int round = 0; round < max_trees && !remaining.empty(); ++round) {
    DisjointSet ds(n);
    std::vector<Edge> tree;
    std::vector<Edge> rest;
    rest.reserve(remaining.size());
    for (const Edge& e : remaining) {
      if (ds.unite(e.i, e.j))
        tree.push_back(e);  // Kruskal acceptance order = extraction order
      else
        rest.push_back(e);
    }
    seq.trees.push_back(std::move(tree));
    remaining = std::move(rest);
  }
  return seq;
}

Eigen::MatrixXi bfs_hop_matrix(const Eigen::MatrixXi& adjacency) {
  const int n = static_cast<int>(adjacency.rows());
  std::vector<std::vector<int>> nbr(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (adjacency(i, j) != 0 && i != j) nbr[i].push_back(j);

  Eigen::MatrixXi spl = Eigen::MatrixXi::Constant(n, n, n);  // sentinel N
  std::vector<int> dist(n);
  std::deque<int> queue;
  for (int s = 0; s < n; ++s) {
    std::fill(dist.begin(), dist.end(), -1);
    dist[s] = 0;
    queue.clear();
    queue.push_back(s);
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop_front();
      for (int v : nbr[u])
        if (dist[v] < 0) {
          dist[v] = dist[u] + 1;
          queue.push_back(v);
        }
    }
    for (int v = 0; v < n; ++v)
      if (dist[v] >= 0) spl(s, v) = dist[v];
  }
  return spl;
}

double global_efficiency(const Eigen::MatrixXi& adjacency) {
  const int n = static_cast<int>(adjacency.rows());
  if (n < 2) return 0.0;
  const Eigen::MatrixXi spl = bfs_hop_matrix(adjacency);
  double acc = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && spl(i, j) < n) acc += 1.0 / spl(i, j);
  return acc / (static_cast<double>(n) * (n - 1));
}

double wiring_cost(const std::vector<Edge>& kept, const CorrelationMatrix& R) {
  const int n = R.size();
  double denom = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) denom += std::abs(R.r(i, j));
  if (denom == 0.0) fail(Errc::dense_weight_zero, "dense graph has zero total weight");
  double num = 0.0;
  for (const Edge& e : kept) num += std::abs(R.r(e.i, e.j));
  return num / denom;
}

SparseBrainGraph omst_sparsify(const CorrelationMatrix& R) {
  const int n = R.size();
  const InverseWeightedGraph D = inverse_distance_graph(R);
  const auto all_edges = D.edges();
  if (all_edges.empty()) fail(Errc::empty_graph, "correlation matrix has no nonzero entries");
  const MstSequence seq =
      orthogonal_msts(D, default_max_trees(static_cast<int>(all_edges.size()), n));
  if (static_cast<int>(seq.trees.front().size()) != n - 1)
    fail(Errc::disconnected_input, "dense graph is disconnected, MST_1 cannot span all nodes");

  std::vector<Edge> order;
  order.reserve(seq.total_edges());
  for (const auto& tree : seq.trees)
    for (const Edge& e : tree) order.push_back(e);

  // Per-edge prefix scan of GE - Cost; strict improvement keeps the earliest
  // (sparsest) maximizer.
  double dense_total = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) dense_total += std::abs(R.r(i, j));
  if (dense_total == 0.0) fail(Errc::dense_weight_zero, "dense graph has zero total weight");

  Eigen::MatrixXi adj = Eigen::MatrixXi::Zero(n, n);
  double kept_weight = 0.0;
  double best_objective = -std::numeric_limits<double>::infinity();
  size_t best_prefix = 0;
  for (size_t k = 0; k < order.size(); ++k) {
    const Edge& e = order[k];
    adj(e.i, e.j) = 1;
    adj(e.j, e.i) = 1;
    kept_weight += std::abs(R.r(e.i, e.j));
    const double objective = global_efficiency(adj) - kept_weight / dense_total;
    if (objective > best_objective) {
      best_objective = objective;
      best_prefix = k + 1;
    }
  }
  const std::vector<Edge> kept(order.begin(), order.begin() + best_prefix);
  return finalize_graph(R, kept);
}

SparseBrainGraph threshold_sparsify(const CorrelationMatrix& R, double density) {
  const int n = R.size();
  if (!(density > 0.0) || density > 1.0)
    fail(Errc::bad_config, "threshold density must be in (0, 1]");
  std::vector<Edge> candidates;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (R.r(i, j) != 0.0) candidates.push_back({i, j, std::abs(R.r(i, j))});
  // strongest first, ties broken by lexicographic (i, j)
  std::sort(candidates.begin(), candidates.end(), [](const Edge& a, const Edge& b) {
    if (a.w != b.w) return a.w > b.w;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });
  const auto want = static_cast<size_t>(std::ceil(density * 0.5 * n * (n - 1)));
  if (candidates.size() > want) candidates.resize(want);
  return finalize_graph(R, candidates);
}

}  // namespace brainhgt::graph

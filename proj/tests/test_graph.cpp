#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "brainhgt/graph.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

using namespace brainhgt;
using namespace brainhgt::graph;

namespace {

using EdgeSet = std::set<std::pair<int, int>>;

EdgeSet edge_set(const std::vector<Edge>& edges) {
  EdgeSet s;
  for (const Edge& e : edges) s.insert({e.i, e.j});
  return s;
}

EdgeSet adjacency_set(const Eigen::MatrixXi& adj) {
  EdgeSet s;
  for (int i = 0; i < adj.rows(); ++i)
    for (int j = i + 1; j < adj.cols(); ++j)
      if (adj(i, j)) s.insert({i, j});
  return s;
}

// hop-count Floyd-Warshall, independent of the BFS implementation
Eigen::MatrixXi floyd_warshall_hops(const Eigen::MatrixXi& adj) {
  const int n = static_cast<int>(adj.rows());
  const int inf = 1 << 20;
  Eigen::MatrixXi d = Eigen::MatrixXi::Constant(n, n, inf);
  for (int i = 0; i < n; ++i) d(i, i) = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && adj(i, j)) d(i, j) = 1;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        d(i, j) = std::min(d(i, j), d(i, k) + d(k, j));
  return d;
}

double ge_oracle(const Eigen::MatrixXi& adj) {
  const int n = static_cast<int>(adj.rows());
  const auto d = floyd_warshall_hops(adj);
  double acc = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && d(i, j) < (1 << 20)) acc += 1.0 / d(i, j);
  return acc / (double(n) * (n - 1));
}

double cost_oracle(const EdgeSet& kept, const Matrix& r) {
  double num = 0.0, denom = 0.0;
  for (int i = 0; i < r.rows(); ++i)
    for (int j = i + 1; j < r.cols(); ++j) {
      denom += std::abs(r(i, j));
      if (kept.count({i, j})) num += std::abs(r(i, j));
    }
  return num / denom;
}

// plain Kruskal-with-exclusion, re-derived for the oracle
std::vector<std::vector<std::pair<int, int>>> omst_oracle_trees(const Matrix& d, int rounds) {
  const int n = static_cast<int>(d.rows());
  std::set<std::pair<int, int>> used;
  std::vector<std::vector<std::pair<int, int>>> out;
  for (int round = 0; round < rounds; ++round) {
    std::vector<Edge> avail;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (d(i, j) != 0.0 && !used.count({i, j})) avail.push_back({i, j, d(i, j)});
    if (avail.empty()) break;
    std::sort(avail.begin(), avail.end(), [](const Edge& a, const Edge& b) {
      return std::tie(a.w, a.i, a.j) < std::tie(b.w, b.i, b.j);
    });
    std::vector<int> comp(n);
    for (int i = 0; i < n; ++i) comp[i] = i;
    std::vector<std::pair<int, int>> tree;
    for (const Edge& e : avail) {
      if (comp[e.i] == comp[e.j]) continue;
      const int from = comp[e.j], to = comp[e.i];
      for (int& c : comp)
        if (c == from) c = to;
      tree.push_back({e.i, e.j});
      used.insert({e.i, e.j});
    }
    out.push_back(std::move(tree));
  }
  return out;
}

// brute-force prefix argmax of GE - Cost over the oracle extraction order
EdgeSet omst_prefix_oracle(const Matrix& r) {
  const int n = static_cast<int>(r.rows());
  Matrix d = Matrix::Zero(n, n);
  int n_edges = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (r(i, j) != 0.0) {
        d(i, j) = 1.0 / std::abs(r(i, j));
        ++n_edges;
      }
  const int rounds = n_edges / (n - 1) + 1;
  auto trees = omst_oracle_trees(d, rounds);
  std::vector<std::pair<int, int>> order;
  for (const auto& t : trees)
    for (const auto& e : t) order.push_back(e);

  Eigen::MatrixXi adj = Eigen::MatrixXi::Zero(n, n);
  EdgeSet kept, best;
  double best_obj = -1e300;
  for (const auto& [i, j] : order) {
    adj(i, j) = adj(j, i) = 1;
    kept.insert({i, j});
    const double obj = ge_oracle(adj) - cost_oracle(kept, r);
    if (obj > best_obj) {
      best_obj = obj;
      best = kept;
    }
  }
  return best;
}

Matrix random_correlation(int n, Rng& rng, double zero_prob = 0.0) {
  Matrix r = Matrix::Identity(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double v = rng.uniform(-0.95, 0.95);
      if (rng.uniform01() < zero_prob) v = 0.0;
      r(i, j) = r(j, i) = v;
    }
  return r;
}

bool dense_connected(const Matrix& r) {
  const int n = static_cast<int>(r.rows());
  Eigen::MatrixXi adj = Eigen::MatrixXi::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && r(i, j) != 0.0) adj(i, j) = 1;
  const auto d = floyd_warshall_hops(adj);
  return d.maxCoeff() < (1 << 20);
}

}  // namespace

TEST_CASE("pearson correlation basics") {
  Matrix ts(3, 4);
  ts << 1, 2, 3, 4,
        4, 3, 2, 1,
        1, 2, 3, 4;
  const auto R = pearson_correlation(TimeSeries::from_matrix(ts));
  CHECK(R.r(0, 2) == doctest::Approx(1.0));   // identical series
  CHECK(R.r(0, 1) == doctest::Approx(-1.0));  // sign flip
  CHECK(R.r(0, 0) == 1.0);
  CHECK(R.r == R.r.transpose().eval());
}

TEST_CASE("pearson correlation hand-computed value") {
  Matrix ts(2, 4);
  ts << 1, 2, 3, 4,
        1, 3, 2, 4;
  const auto R = pearson_correlation(TimeSeries::from_matrix(ts));
  // direct summation oracle
  double sx = 0, sy = 0, sxy = 0, sxx = 0, syy = 0;
  for (int t = 0; t < 4; ++t) {
    sx += ts(0, t);
    sy += ts(1, t);
    sxy += ts(0, t) * ts(1, t);
    sxx += ts(0, t) * ts(0, t);
    syy += ts(1, t) * ts(1, t);
  }
  const double oracle = (4 * sxy - sx * sy) /
                        (std::sqrt(4 * sxx - sx * sx) * std::sqrt(4 * syy - sy * sy));
  CHECK(oracle == doctest::Approx(0.8));
  CHECK(R.r(0, 1) == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("pearson rejects constant rows") {
  Matrix ts(2, 3);
  ts << 1, 1, 1,
        1, 2, 3;
  CHECK_THROWS_AS((void)TimeSeries::from_matrix(ts), Error);
  try {
    (void)TimeSeries::from_matrix(ts);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::constant_row);
  }
}

TEST_CASE("inverse distance graph") {
  Matrix r = Matrix::Identity(3, 3);
  r(0, 1) = r(1, 0) = 0.5;
  r(0, 2) = r(2, 0) = -0.25;
  // r(1,2) stays 0: absent edge
  const auto D = inverse_distance_graph(CorrelationMatrix{r});
  CHECK(D.d(0, 1) == doctest::Approx(2.0));
  CHECK(D.d(0, 2) == doctest::Approx(4.0));
  CHECK(D.d(1, 2) == 0.0);
  CHECK(D.edges().size() == 2);
}

TEST_CASE("orthogonal msts on a weighted triangle") {
  Matrix d = Matrix::Zero(3, 3);
  d(0, 1) = d(1, 0) = 1.0;
  d(0, 2) = d(2, 0) = 2.0;
  d(1, 2) = d(2, 1) = 3.0;
  const auto seq = orthogonal_msts(InverseWeightedGraph{d}, 10);
  REQUIRE(seq.trees.size() == 2);
  CHECK(edge_set(seq.trees[0]) == EdgeSet{{0, 1}, {0, 2}});
  CHECK(edge_set(seq.trees[1]) == EdgeSet{{1, 2}});
}

TEST_CASE("a tree is its own unique mst") {
  Matrix d = Matrix::Zero(4, 4);
  d(0, 1) = d(1, 0) = 1.5;
  d(1, 2) = d(2, 1) = 2.5;
  d(2, 3) = d(3, 2) = 0.5;
  const auto seq = orthogonal_msts(InverseWeightedGraph{d}, 10);
  REQUIRE(seq.trees.size() == 1);
  CHECK(seq.trees[0].size() == 3);
}

TEST_CASE("empty graph is rejected") {
  Matrix d = Matrix::Zero(3, 3);
  CHECK_THROWS_AS((void)orthogonal_msts(InverseWeightedGraph{d}, 1), Error);
}

TEST_CASE("k4 extraction matches kruskal-with-exclusion oracle") {
  Rng rng(42);
  for (int rep = 0; rep < 50; ++rep) {
    Matrix d = Matrix::Zero(4, 4);
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) d(i, j) = d(j, i) = rng.uniform(0.5, 5.0);
    const auto seq = orthogonal_msts(InverseWeightedGraph{d}, 2);
    const auto oracle = omst_oracle_trees(d, 2);
    REQUIRE(seq.trees.size() == oracle.size());
    for (size_t t = 0; t < oracle.size(); ++t) {
      EdgeSet mine = edge_set(seq.trees[t]);
      EdgeSet ref(oracle[t].begin(), oracle[t].end());
      CHECK(mine == ref);
    }
  }
}

TEST_CASE("mst sequences are pairwise edge-disjoint") {
  Rng rng(7);
  for (int rep = 0; rep < 200; ++rep) {
    const int n = 3 + static_cast<int>(rng.below(6));
    Matrix r = random_correlation(n, rng, 0.2);
    const auto D = inverse_distance_graph(CorrelationMatrix{r});
    if (D.edges().empty()) continue;
    const auto seq = orthogonal_msts(D, default_max_trees((int)D.edges().size(), n));
    EdgeSet all;
    size_t total = 0;
    for (const auto& tree : seq.trees) {
      for (const Edge& e : tree) all.insert({e.i, e.j});
      total += tree.size();
    }
    CHECK(all.size() == total);  // no overlap between trees
  }
}

TEST_CASE("global efficiency closed forms") {
  Eigen::MatrixXi complete = Eigen::MatrixXi::Ones(5, 5);
  complete.diagonal().setZero();
  CHECK(global_efficiency(complete) == doctest::Approx(1.0));

  Eigen::MatrixXi empty = Eigen::MatrixXi::Zero(4, 4);
  CHECK(global_efficiency(empty) == 0.0);

  Eigen::MatrixXi path = Eigen::MatrixXi::Zero(3, 3);
  path(0, 1) = path(1, 0) = 1;
  path(1, 2) = path(2, 1) = 1;
  CHECK(global_efficiency(path) == doctest::Approx(5.0 / 6.0));
  CHECK(global_efficiency(path) == doctest::Approx(ge_oracle(path)));
}

TEST_CASE("ge matches floyd-warshall oracle and is monotone under edge addition") {
  Rng rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 4 + static_cast<int>(rng.below(4));
    Eigen::MatrixXi adj = Eigen::MatrixXi::Zero(n, n);
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) pairs.push_back({i, j});
    rng.shuffle(pairs);
    double prev = 0.0;
    for (const auto& [i, j] : pairs) {
      adj(i, j) = adj(j, i) = 1;
      const double ge = global_efficiency(adj);
      CHECK(ge == doctest::Approx(ge_oracle(adj)).epsilon(1e-12));
      CHECK(ge >= prev - 1e-12);
      CHECK(ge <= 1.0 + 1e-12);
      CHECK(ge >= 0.0);
      prev = ge;
    }
    CHECK(prev == doctest::Approx(1.0));  // complete graph
  }
}

TEST_CASE("wiring cost closed forms") {
  Matrix r = Matrix::Identity(3, 3);
  r(0, 1) = r(1, 0) = 0.5;
  r(0, 2) = r(2, 0) = 0.3;
  r(1, 2) = r(2, 1) = 0.2;
  const CorrelationMatrix R{r};

  std::vector<Edge> all = {{0, 1, 0.5}, {0, 2, 0.3}, {1, 2, 0.2}};
  CHECK(wiring_cost(all, R) == doctest::Approx(1.0));
  CHECK(wiring_cost({}, R) == 0.0);
  CHECK(wiring_cost({{0, 1, 0.5}}, R) == doctest::Approx(0.5));

  Matrix zero = Matrix::Identity(2, 2);
  CHECK_THROWS_AS((void)wiring_cost({}, CorrelationMatrix{zero}), Error);
}

TEST_CASE("cost is monotone and bounded") {
  Rng rng(11);
  Matrix r = random_correlation(6, rng);
  const CorrelationMatrix R{r};
  std::vector<Edge> kept;
  double prev = 0.0;
  for (int i = 0; i < 6; ++i)
    for (int j = i + 1; j < 6; ++j) {
      kept.push_back({i, j, 0.0});
      const double c = wiring_cost(kept, R);
      CHECK(c >= prev - 1e-12);
      CHECK(c >= 0.0);
      CHECK(c <= 1.0 + 1e-12);
      prev = c;
    }
  CHECK(prev == doctest::Approx(1.0));
}

TEST_CASE("omst matches brute-force prefix oracle on random connected graphs") {
  Rng rng(2024);
  int done = 0;
  while (done < 60) {
    const int n = 4 + static_cast<int>(rng.below(5));  // 4..8
    Matrix r = random_correlation(n, rng, 0.25);
    if (!dense_connected(r)) continue;
    ++done;
    const auto g = omst_sparsify(CorrelationMatrix{r});
    CHECK(adjacency_set(g.adjacency) == omst_prefix_oracle(r));
    CHECK(g.objective == doctest::Approx(g.ge - g.cost));
  }
}

TEST_CASE("omst keeps a tree when extra correlations are weak") {
  // Star backbone of strong correlations plus weak leaf-leaf edges. A
  // shortcut between two leaves gains only 1/(N(N-1)) efficiency, so its
  // cost share dominates and the tree prefix stays optimal.
  const int n = 10;
  Matrix r = Matrix::Identity(n, n);
  EdgeSet star;
  for (int j = 1; j < n; ++j) {
    r(0, j) = r(j, 0) = 0.9 - 0.001 * j;
    star.insert({0, j});
  }
  r(1, 2) = r(2, 1) = 0.20;
  r(3, 4) = r(4, 3) = 0.19;
  const auto g = omst_sparsify(CorrelationMatrix{r});
  CHECK(adjacency_set(g.adjacency) == star);
  CHECK(adjacency_set(g.adjacency) == omst_prefix_oracle(r));
}

TEST_CASE("omst surfaces disconnected input") {
  Matrix r = Matrix::Identity(4, 4);
  r(0, 1) = r(1, 0) = 0.8;
  r(2, 3) = r(3, 2) = 0.7;
  CHECK_THROWS_AS((void)omst_sparsify(CorrelationMatrix{r}), Error);
  try {
    (void)omst_sparsify(CorrelationMatrix{r});
  } catch (const Error& e) {
    CHECK(e.code() == Errc::disconnected_input);
  }
}

TEST_CASE("threshold sparsifier keeps the strongest edges") {
  Rng rng(5);
  Matrix r = random_correlation(6, rng);
  const CorrelationMatrix R{r};

  const auto complete = threshold_sparsify(R, 1.0);
  CHECK(complete.edge_weights.size() == 15);
  CHECK(complete.density == doctest::Approx(1.0));

  const auto top1 = threshold_sparsify(R, 1e-9);
  REQUIRE(top1.edge_weights.size() == 1);
  double best = 0.0;
  for (int i = 0; i < 6; ++i)
    for (int j = i + 1; j < 6; ++j) best = std::max(best, std::abs(r(i, j)));
  CHECK(top1.edge_weights[0].w == doctest::Approx(best));
}

TEST_CASE("spl matrix properties on produced graphs") {
  Rng rng(17);
  int done = 0;
  while (done < 30) {
    const int n = 4 + static_cast<int>(rng.below(5));
    Matrix r = random_correlation(n, rng, 0.3);
    if (!dense_connected(r)) continue;
    ++done;
    const auto g = (done % 2) ? omst_sparsify(CorrelationMatrix{r})
                              : threshold_sparsify(CorrelationMatrix{r}, 0.4);
    const auto& s = g.spl;
    for (int i = 0; i < n; ++i) {
      CHECK(s(i, i) == 0);
      for (int j = 0; j < n; ++j) {
        CHECK(s(i, j) == s(j, i));
        CHECK(s(i, j) >= 0);
        for (int k = 0; k < n; ++k)
          if (s(i, j) < n && s(j, k) < n) CHECK(s(i, k) <= s(i, j) + s(j, k));
      }
    }
    // adjacency/edge_weights agree
    CHECK(adjacency_set(g.adjacency) == edge_set(g.edge_weights));
    // sidecar values recompute
    CHECK(g.ge == doctest::Approx(ge_oracle(g.adjacency)).epsilon(1e-12));
  }
}

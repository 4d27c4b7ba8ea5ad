#include "rdv/digraph.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>
#include <string>

namespace rdv {

SensorDigraph::SensorDigraph(std::size_t n, std::vector<Edge> edges)
    : n_(n), edges_(std::move(edges)), out_(n), in_(n) {
  if (n_ < 1) throw std::invalid_argument("digraph needs at least one vehicle");
  std::sort(edges_.begin(), edges_.end());
  if (std::adjacent_find(edges_.begin(), edges_.end()) != edges_.end()) {
    throw std::invalid_argument("digraph has duplicate edges");
  }
  for (const auto& [i, j] : edges_) {
    if (i >= n_ || j >= n_) {
      throw std::invalid_argument("edge (" + std::to_string(i + 1) + ", " + std::to_string(j + 1) +
                                  ") references a vehicle outside 1.." + std::to_string(n_));
    }
    if (i == j) throw std::invalid_argument("self-loop on vehicle " + std::to_string(i + 1));
    out_[i].push_back(j);
    in_[j].push_back(i);
  }
}

bool SensorDigraph::has_edge(std::size_t i, std::size_t j) const {
  return std::binary_search(edges_.begin(), edges_.end(), Edge{i, j});
}

const std::vector<std::size_t>& SensorDigraph::neighbors(std::size_t i) const {
  if (i >= n_) throw std::out_of_range("vehicle index " + std::to_string(i) + " out of range");
  return out_[i];
}

std::optional<std::size_t> SensorDigraph::globally_reachable_node() const {
  // A candidate is globally reachable iff a BFS over reversed edges from it
  // visits every node.
  std::vector<char> seen(n_);
  std::deque<std::size_t> queue;
  for (std::size_t c = 0; c < n_; ++c) {
    std::fill(seen.begin(), seen.end(), 0);
    seen[c] = 1;
    queue.assign(1, c);
    std::size_t visited = 1;
    while (!queue.empty()) {
      const std::size_t k = queue.front();
      queue.pop_front();
      for (std::size_t p : in_[k]) {
        if (!seen[p]) {
          seen[p] = 1;
          ++visited;
          queue.push_back(p);
        }
      }
    }
    if (visited == n_) return c;
  }
  return std::nullopt;
}

SensorDigraph SensorDigraph::relabeled(const std::vector<std::size_t>& perm) const {
  if (perm.size() != n_) throw std::invalid_argument("permutation size mismatch");
  std::vector<Edge> e;
  e.reserve(edges_.size());
  for (const auto& [i, j] : edges_) e.emplace_back(perm.at(i), perm.at(j));
  return SensorDigraph(n_, std::move(e));
}

SensorDigraph reference_digraph() {
  return SensorDigraph(5, {{0, 2}, {1, 2}, {2, 3}, {2, 4}, {3, 0}, {4, 1}});
}

}  // namespace rdv

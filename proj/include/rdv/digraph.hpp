#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

namespace rdv {

/// Fixed sensor digraph. An edge (i, j) means vehicle i senses vehicle j.
/// Vehicles are indexed 0..n-1 in code; configuration files use 1..n.
class SensorDigraph {
 public:
  using Edge = std::pair<std::size_t, std::size_t>;

  /// Throws std::invalid_argument on n < 1, self-loops, duplicate edges or
  /// indices out of range.
  SensorDigraph(std::size_t n, std::vector<Edge> edges);

  std::size_t size() const { return n_; }
  const std::vector<Edge>& edges() const { return edges_; }
  bool has_edge(std::size_t i, std::size_t j) const;

  /// Sorted neighbor list of vehicle i. Throws std::out_of_range.
  const std::vector<std::size_t>& neighbors(std::size_t i) const;

  /// Lowest-index node reachable from every other node, if any.
  std::optional<std::size_t> globally_reachable_node() const;
  bool has_globally_reachable_node() const { return globally_reachable_node().has_value(); }

  /// Relabels node k as perm[k].
  SensorDigraph relabeled(const std::vector<std::size_t>& perm) const;

  friend bool operator==(const SensorDigraph& a, const SensorDigraph& b) {
    return a.n_ == b.n_ && a.edges_ == b.edges_;
  }

 private:
  std::size_t n_;
  std::vector<Edge> edges_;  // sorted
  std::vector<std::vector<std::size_t>> out_;
  std::vector<std::vector<std::size_t>> in_;
};

/// Digraph used in the reference five-vehicle experiment:
/// 1->3, 2->3, 3->4, 3->5, 4->1, 5->2 (1-based).
SensorDigraph reference_digraph();

}  // namespace rdv

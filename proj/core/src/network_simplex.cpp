#include "network_simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "sot/error.hpp"

namespace sot::detail {
namespace {

// Arcs 0 .. m*n-1 are the cells (i -> m + j); arc m*n + v joins node v to
// the root, oriented v -> root for row nodes (supplies) and root -> v for
// column nodes (demands).
class TransportationSimplex {
 public:
  TransportationSimplex(const Eigen::MatrixXd& cost, const Eigen::VectorXd& a, const Eigen::VectorXd& b)
      : cost_(cost),
        m_(cost.rows()),
        n_(cost.cols()),
        nodes_(m_ + n_ + 1),
        root_(m_ + n_),
        cells_(m_ * n_),
        flow_(static_cast<std::size_t>(cells_ + m_ + n_), 0.0),
        in_tree_(static_cast<std::size_t>(cells_ + m_ + n_), 0),
        adjacency_(static_cast<std::size_t>(nodes_)),
        potential_(static_cast<std::size_t>(nodes_), 0.0),
        parent_(static_cast<std::size_t>(nodes_), -1),
        parent_arc_(static_cast<std::size_t>(nodes_), -1),
        depth_(static_cast<std::size_t>(nodes_), 0) {
    double max_cost = 0.0;
    for (Eigen::Index k = 0; k < cells_; ++k) max_cost = std::max(max_cost, std::abs(cost_.data()[k]));
    artificial_cost_ = (max_cost + 1.0) * static_cast<double>(nodes_);
    epsilon_ = 1e-12 * std::max(max_cost, std::numeric_limits<double>::min());

    for (Eigen::Index i = 0; i < m_; ++i) add_tree_arc(cells_ + i, a(i));
    for (Eigen::Index j = 0; j < n_; ++j) add_tree_arc(cells_ + m_ + j, b(j));
    block_ = std::max<Eigen::Index>(static_cast<Eigen::Index>(std::sqrt(static_cast<double>(cells_))), 10);
  }

  int run() {
    const long long limit = 100LL * (cells_ + nodes_) + 10000;
    int pivots = 0;
    rebuild_tree();
    for (;;) {
      const Eigen::Index entering = find_entering();
      if (entering < 0) break;
      pivot(entering);
      rebuild_tree();
      if (++pivots > limit) {
        throw Error(ErrorCode::numeric_failure, "network simplex exceeded its pivot limit");
      }
    }
    return pivots;
  }

  Eigen::MatrixXd flow_matrix() const {
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m_, n_);
    for (Eigen::Index i = 0; i < m_; ++i) {
      for (Eigen::Index j = 0; j < n_; ++j) t(i, j) = flow_[static_cast<std::size_t>(i * n_ + j)];
    }
    return t;
  }

 private:
  Eigen::Index source(Eigen::Index arc) const {
    if (arc < cells_) return arc / n_;
    const Eigen::Index v = arc - cells_;
    return v < m_ ? v : root_;
  }
  Eigen::Index target(Eigen::Index arc) const {
    if (arc < cells_) return m_ + arc % n_;
    const Eigen::Index v = arc - cells_;
    return v < m_ ? root_ : v;
  }
  double arc_cost(Eigen::Index arc) const {
    if (arc < cells_) return cost_(arc / n_, arc % n_);
    return artificial_cost_;
  }
  double reduced_cost(Eigen::Index arc) const {
    return arc_cost(arc) + potential_[static_cast<std::size_t>(source(arc))] -
           potential_[static_cast<std::size_t>(target(arc))];
  }

  void add_tree_arc(Eigen::Index arc, double flow) {
    flow_[static_cast<std::size_t>(arc)] = flow;
    in_tree_[static_cast<std::size_t>(arc)] = 1;
    adjacency_[static_cast<std::size_t>(source(arc))].push_back(arc);
    adjacency_[static_cast<std::size_t>(target(arc))].push_back(arc);
  }

  void remove_tree_arc(Eigen::Index arc) {
    in_tree_[static_cast<std::size_t>(arc)] = 0;
    for (Eigen::Index v : {source(arc), target(arc)}) {
      auto& adj = adjacency_[static_cast<std::size_t>(v)];
      adj.erase(std::find(adj.begin(), adj.end(), arc));
    }
  }

  // Potentials with reduced cost zero on every tree arc, plus parent
  // pointers and depths for cycle search. pi(root) = 0.
  void rebuild_tree() {
    std::fill(parent_.begin(), parent_.end(), -1);
    queue_.clear();
    queue_.push_back(root_);
    parent_[static_cast<std::size_t>(root_)] = root_;
    parent_arc_[static_cast<std::size_t>(root_)] = -1;
    depth_[static_cast<std::size_t>(root_)] = 0;
    potential_[static_cast<std::size_t>(root_)] = 0.0;
    for (std::size_t head = 0; head < queue_.size(); ++head) {
      const Eigen::Index u = queue_[head];
      for (Eigen::Index arc : adjacency_[static_cast<std::size_t>(u)]) {
        const Eigen::Index s = source(arc);
        const Eigen::Index t = target(arc);
        const Eigen::Index w = s == u ? t : s;
        if (parent_[static_cast<std::size_t>(w)] != -1) continue;
        parent_[static_cast<std::size_t>(w)] = u;
        parent_arc_[static_cast<std::size_t>(w)] = arc;
        depth_[static_cast<std::size_t>(w)] = depth_[static_cast<std::size_t>(u)] + 1;
        // c + pi(s) - pi(t) = 0
        potential_[static_cast<std::size_t>(w)] = w == t ? potential_[static_cast<std::size_t>(u)] + arc_cost(arc)
                                                         : potential_[static_cast<std::size_t>(u)] - arc_cost(arc);
        queue_.push_back(w);
      }
    }
    if (static_cast<Eigen::Index>(queue_.size()) != nodes_) {
      throw Error(ErrorCode::numeric_failure, "network simplex basis is not a spanning tree");
    }
  }

  // Block search over the cells: returns the most negative reduced cost of
  // the first block that contains one, or -1 at optimality.
  Eigen::Index find_entering() {
    Eigen::Index best = -1;
    double best_value = -epsilon_;
    Eigen::Index scanned_in_block = 0;
    for (Eigen::Index step = 0; step < cells_; ++step) {
      const Eigen::Index arc = next_arc_;
      next_arc_ = next_arc_ + 1 == cells_ ? 0 : next_arc_ + 1;
      if (!in_tree_[static_cast<std::size_t>(arc)]) {
        const double rc = reduced_cost(arc);
        if (rc < best_value) {
          best_value = rc;
          best = arc;
        }
      }
      if (++scanned_in_block == block_) {
        if (best >= 0) return best;
        scanned_in_block = 0;
      }
    }
    return best;
  }

  void pivot(Eigen::Index entering) {
    const Eigen::Index s = source(entering);
    const Eigen::Index t = target(entering);

    // Tree path from each endpoint up to their common ancestor.
    std::vector<Eigen::Index>& up_s = path_s_;
    std::vector<Eigen::Index>& up_t = path_t_;
    up_s.clear();
    up_t.clear();
    Eigen::Index x = s;
    Eigen::Index y = t;
    while (depth_[static_cast<std::size_t>(x)] > depth_[static_cast<std::size_t>(y)]) {
      up_s.push_back(x);
      x = parent_[static_cast<std::size_t>(x)];
    }
    while (depth_[static_cast<std::size_t>(y)] > depth_[static_cast<std::size_t>(x)]) {
      up_t.push_back(y);
      y = parent_[static_cast<std::size_t>(y)];
    }
    while (x != y) {
      up_s.push_back(x);
      up_t.push_back(y);
      x = parent_[static_cast<std::size_t>(x)];
      y = parent_[static_cast<std::size_t>(y)];
    }

    // Flow is pushed apex -> s, across the entering arc, then t -> apex.
    // An arc blocks when traversed against its orientation. Among the
    // tightest blocking arcs the last one in that order leaves, which keeps
    // the tree strongly feasible.
    double theta = std::numeric_limits<double>::infinity();
    Eigen::Index leaving = -1;
    for (auto it = up_s.rbegin(); it != up_s.rend(); ++it) {
      const Eigen::Index arc = parent_arc_[static_cast<std::size_t>(*it)];
      if (target(arc) == *it) continue;  // parent -> node: forward
      const double f = flow_[static_cast<std::size_t>(arc)];
      if (f <= theta) {
        theta = f;
        leaving = arc;
      }
    }
    for (Eigen::Index node : up_t) {
      const Eigen::Index arc = parent_arc_[static_cast<std::size_t>(node)];
      if (source(arc) == node) continue;  // node -> parent: forward
      const double f = flow_[static_cast<std::size_t>(arc)];
      if (f <= theta) {
        theta = f;
        leaving = arc;
      }
    }
    if (leaving < 0) throw Error(ErrorCode::numeric_failure, "transportation problem is unbounded");

    for (Eigen::Index node : up_s) {
      const Eigen::Index arc = parent_arc_[static_cast<std::size_t>(node)];
      flow_[static_cast<std::size_t>(arc)] += target(arc) == node ? theta : -theta;
    }
    for (Eigen::Index node : up_t) {
      const Eigen::Index arc = parent_arc_[static_cast<std::size_t>(node)];
      flow_[static_cast<std::size_t>(arc)] += source(arc) == node ? theta : -theta;
    }
    flow_[static_cast<std::size_t>(leaving)] = 0.0;
    remove_tree_arc(leaving);
    add_tree_arc(entering, theta);
  }

  const Eigen::MatrixXd& cost_;
  Eigen::Index m_;
  Eigen::Index n_;
  Eigen::Index nodes_;
  Eigen::Index root_;
  Eigen::Index cells_;
  double artificial_cost_ = 0.0;
  double epsilon_ = 0.0;
  Eigen::Index block_ = 10;
  Eigen::Index next_arc_ = 0;

  std::vector<double> flow_;
  std::vector<char> in_tree_;
  std::vector<std::vector<Eigen::Index>> adjacency_;
  std::vector<double> potential_;
  std::vector<Eigen::Index> parent_;
  std::vector<Eigen::Index> parent_arc_;
  std::vector<Eigen::Index> depth_;
  std::vector<Eigen::Index> queue_;
  std::vector<Eigen::Index> path_s_;
  std::vector<Eigen::Index> path_t_;
};

}  // namespace

NetworkSimplexResult solve_transportation(const Eigen::MatrixXd& cost, const Eigen::VectorXd& a,
                                          const Eigen::VectorXd& b) {
  TransportationSimplex solver(cost, a, b);
  NetworkSimplexResult result;
  result.pivots = solver.run();
  result.flow = solver.flow_matrix();
  return result;
}

}  // namespace sot::detail

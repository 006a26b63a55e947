#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rfsearch/feedback.hpp"
#include "rfsearch/types.hpp"

namespace rfsearch {

enum class NodeStatus { pending, evaluated, failed };

std::string_view to_string(NodeStatus status);
std::optional<NodeStatus> node_status_from_string(std::string_view text);

/// One node of the search tree: the candidate, its evaluation and the
/// bandit statistics used by selection.
struct NodeState {
    NodeId id;
    std::optional<NodeId> parent;
    std::vector<NodeId> children;
    int depth = 0;
    CandidateProgram candidate;
    std::optional<double> score;
    std::optional<TrainingFeedback> feedback;
    double q_value = 0.0;
    int visit_count = 0;
    double self_verify = 0.0;
    NodeStatus status = NodeStatus::pending;
    ActionKind action_tag = ActionKind::init;
    /// Last execution error, kept for failed nodes.
    std::string traceback;

    bool operator==(const NodeState&) const = default;
};

/// Node storage rooted at a virtual node with id 0. Nodes are appended with
/// dense ids and never removed.
class SearchTree {
public:
    SearchTree();

    const NodeState& root() const { return nodes_.front(); }
    const NodeState& node(NodeId id) const;
    NodeState& node(NodeId id);
    std::span<const NodeState> nodes() const { return nodes_; }
    std::size_t size() const { return nodes_.size(); }
    NodeId next_id() const { return NodeId{static_cast<std::uint32_t>(nodes_.size())}; }

    /// Appends `state` under `parent`, assigning id, parent link and depth.
    /// Evaluated nodes start with Q = F and N = 1; failed nodes with N = 1.
    NodeId attach(NodeId parent, NodeState state);

    bool is_root(NodeId id) const { return id == kRootId; }
    std::vector<NodeId> evaluated_children(NodeId id) const;
    /// No evaluated children. Failed children do not make a node internal.
    bool is_leaf(NodeId id) const;
    bool is_ancestor(NodeId ancestor, NodeId of) const;

    /// Q used by selection and backup: failed nodes read the current global
    /// minimum over evaluated nodes.
    double effective_q(NodeId id) const;

    std::vector<NodeId> evaluated_nodes() const;
    std::optional<NodeId> best_node() const;

    /// Rebuilds a tree from stored nodes (checkpoint load). Validates links.
    static SearchTree from_nodes(std::vector<NodeState> nodes);

    bool operator==(const SearchTree&) const = default;

private:
    std::vector<NodeState> nodes_;
};

/// Normalized-Q exploitation plus lambda-weighted exploration and
/// self-verify prior:
///   (Q - Qmin)/(Qmax - Qmin) + lambda * (sqrt(2 ln(N_parent + 1) / N_child) + softmax(v)[child])
/// The softmax runs over `sibling_verify`, which must include the child's own
/// value. A flat tree (Qmax == Qmin) normalizes to 0.5.
double uct_score(const NodeState& child, const NodeState& parent, double lambda, double q_min, double q_max,
                 std::span<const double> sibling_verify);

/// Global (min, max) of Q over evaluated nodes. Throws EmptyTree.
std::pair<double, double> q_bounds(const SearchTree& tree);

/// Descends from the root by maximal UCT over evaluated children until a
/// node without evaluated children. Ties go to the lowest child index.
NodeId select_leaf(const SearchTree& tree, double lambda);

/// Eta-smoothed backup from `leaf`'s parent up to (excluding) the root:
///   Q(s) <- (1 - eta) Q(s) + eta * max_child Q,  N(s) <- sum_child N.
/// The root only receives the visit-count sum.
void backup(SearchTree& tree, NodeId leaf, double eta);

enum class SelectionPolicy { uct, dfs, bfs, greedy };

std::string_view to_string(SelectionPolicy policy);
std::optional<SelectionPolicy> selection_policy_from_string(std::string_view text);

/// Policy dispatch. dfs picks the deepest leaf, bfs the shallowest, greedy
/// the best-scoring evaluated node; ties go to the lowest id.
NodeId select_node(const SearchTree& tree, SelectionPolicy policy, double lambda);

/// Recomputes every internal node's visit sum and reports the first node
/// that disagrees with its stored N. Used by invariant checks.
std::optional<NodeId> find_visit_sum_violation(const SearchTree& tree);

}  // namespace rfsearch

#include "rfsearch/search_tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "rfsearch/errors.hpp"

namespace rfsearch {

std::string_view to_string(NodeStatus status) {
    switch (status) {
        case NodeStatus::pending: return "pending";
        case NodeStatus::evaluated: return "evaluated";
        case NodeStatus::failed: return "failed";
    }
    return "unknown";
}

std::optional<NodeStatus> node_status_from_string(std::string_view text) {
    if (text == "pending") return NodeStatus::pending;
    if (text == "evaluated") return NodeStatus::evaluated;
    if (text == "failed") return NodeStatus::failed;
    return std::nullopt;
}

SearchTree::SearchTree() {
    NodeState root;
    root.id = kRootId;
    root.status = NodeStatus::pending;
    nodes_.push_back(std::move(root));
}

const NodeState& SearchTree::node(NodeId id) const {
    if (id.value >= nodes_.size()) throw Error(fmt::format("unknown node id {}", id.value));
    return nodes_[id.value];
}

NodeState& SearchTree::node(NodeId id) {
    if (id.value >= nodes_.size()) throw Error(fmt::format("unknown node id {}", id.value));
    return nodes_[id.value];
}

NodeId SearchTree::attach(NodeId parent, NodeState state) {
    const NodeId id = next_id();
    NodeState& p = node(parent);
    state.id = id;
    state.parent = parent;
    state.depth = p.depth + 1;
    state.children.clear();
    if (state.status == NodeStatus::evaluated) {
        if (!state.score) throw Error("evaluated node attached without a score");
        state.q_value = *state.score;
        state.visit_count = 1;
    } else if (state.status == NodeStatus::failed) {
        state.score.reset();
        state.q_value = 0.0;
        state.visit_count = 1;
    }
    state.self_verify = std::clamp(state.self_verify, -1.0, 1.0);
    p.children.push_back(id);
    nodes_.push_back(std::move(state));
    return id;
}

std::vector<NodeId> SearchTree::evaluated_children(NodeId id) const {
    std::vector<NodeId> out;
    for (NodeId c : node(id).children)
        if (node(c).status == NodeStatus::evaluated) out.push_back(c);
    return out;
}

bool SearchTree::is_leaf(NodeId id) const {
    const auto& kids = node(id).children;
    return std::none_of(kids.begin(), kids.end(),
                        [&](NodeId c) { return node(c).status == NodeStatus::evaluated; });
}

bool SearchTree::is_ancestor(NodeId ancestor, NodeId of) const {
    std::optional<NodeId> cur = node(of).parent;
    while (cur) {
        if (*cur == ancestor) return true;
        cur = node(*cur).parent;
    }
    return false;
}

double SearchTree::effective_q(NodeId id) const {
    const NodeState& n = node(id);
    if (n.status != NodeStatus::failed) return n.q_value;
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& other : nodes_)
        if (other.status == NodeStatus::evaluated && other.id != kRootId) lo = std::min(lo, other.q_value);
    return std::isfinite(lo) ? lo : 0.0;
}

std::vector<NodeId> SearchTree::evaluated_nodes() const {
    std::vector<NodeId> out;
    for (const auto& n : nodes_)
        if (n.id != kRootId && n.status == NodeStatus::evaluated) out.push_back(n.id);
    return out;
}

std::optional<NodeId> SearchTree::best_node() const {
    std::optional<NodeId> best;
    double best_score = -std::numeric_limits<double>::infinity();
    for (const auto& n : nodes_) {
        if (n.id == kRootId || n.status != NodeStatus::evaluated || !n.score) continue;
        if (!best || *n.score > best_score) {
            best = n.id;
            best_score = *n.score;
        }
    }
    return best;
}

SearchTree SearchTree::from_nodes(std::vector<NodeState> nodes) {
    if (nodes.empty()) throw Error("tree has no root");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const NodeState& n = nodes[i];
        if (n.id.value != i) throw Error(fmt::format("node ids are not dense at index {}", i));
        if (i == 0) {
            if (n.parent) throw Error("root has a parent");
            continue;
        }
        if (!n.parent || n.parent->value >= i)
            throw Error(fmt::format("node {} has an invalid parent", i));
        const auto& siblings = nodes[n.parent->value].children;
        if (std::find(siblings.begin(), siblings.end(), n.id) == siblings.end())
            throw Error(fmt::format("node {} missing from its parent's children", i));
    }
    SearchTree tree;
    tree.nodes_ = std::move(nodes);
    return tree;
}

double uct_score(const NodeState& child, const NodeState& parent, double lambda, double q_min, double q_max,
                 std::span<const double> sibling_verify) {
    const double normalized = q_max == q_min ? 0.5 : (child.q_value - q_min) / (q_max - q_min);

    const double n_parent = static_cast<double>(parent.visit_count);
    const double n_child = static_cast<double>(std::max(child.visit_count, 1));
    const double exploration = std::sqrt(2.0 * std::log(n_parent + 1.0) / n_child);

    double prior = 1.0;
    if (!sibling_verify.empty()) {
        const double peak = *std::max_element(sibling_verify.begin(), sibling_verify.end());
        double denom = 0.0;
        for (double v : sibling_verify) denom += std::exp(v - peak);
        prior = std::exp(child.self_verify - peak) / denom;
    }
    return normalized + lambda * (exploration + prior);
}

std::pair<double, double> q_bounds(const SearchTree& tree) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (const auto& n : tree.nodes()) {
        if (n.id == kRootId || n.status != NodeStatus::evaluated) continue;
        lo = std::min(lo, n.q_value);
        hi = std::max(hi, n.q_value);
        any = true;
    }
    if (!any) throw EmptyTree("no evaluated nodes");
    return {lo, hi};
}

NodeId select_leaf(const SearchTree& tree, double lambda) {
    NodeId current = kRootId;
    if (tree.evaluated_children(current).empty()) throw EmptyTree("root has no evaluated children");
    const auto [q_min, q_max] = q_bounds(tree);
    for (;;) {
        const auto kids = tree.evaluated_children(current);
        if (kids.empty()) return current;
        std::vector<double> verify;
        verify.reserve(kids.size());
        for (NodeId k : kids) verify.push_back(tree.node(k).self_verify);
        const NodeState& parent = tree.node(current);
        NodeId best = kids.front();
        double best_value = -std::numeric_limits<double>::infinity();
        for (NodeId k : kids) {
            const double value = uct_score(tree.node(k), parent, lambda, q_min, q_max, verify);
            if (value > best_value) {
                best_value = value;
                best = k;
            }
        }
        current = best;
    }
}

void backup(SearchTree& tree, NodeId leaf, double eta) {
    std::optional<NodeId> cur = tree.node(leaf).parent;
    while (cur && !tree.is_root(*cur)) {
        NodeState& s = tree.node(*cur);
        double best = -std::numeric_limits<double>::infinity();
        int visits = 0;
        for (NodeId c : s.children) {
            best = std::max(best, tree.effective_q(c));
            visits += tree.node(c).visit_count;
        }
        if (!s.children.empty()) {
            s.q_value = (1.0 - eta) * s.q_value + eta * best;
            s.visit_count = visits;
        }
        cur = s.parent;
    }
    NodeState& root = tree.node(kRootId);
    int visits = 0;
    for (NodeId c : root.children) visits += tree.node(c).visit_count;
    root.visit_count = visits;
}

std::string_view to_string(SelectionPolicy policy) {
    switch (policy) {
        case SelectionPolicy::uct: return "uct";
        case SelectionPolicy::dfs: return "dfs";
        case SelectionPolicy::bfs: return "bfs";
        case SelectionPolicy::greedy: return "greedy";
    }
    return "unknown";
}

std::optional<SelectionPolicy> selection_policy_from_string(std::string_view text) {
    if (text == "uct") return SelectionPolicy::uct;
    if (text == "dfs") return SelectionPolicy::dfs;
    if (text == "bfs") return SelectionPolicy::bfs;
    if (text == "greedy") return SelectionPolicy::greedy;
    return std::nullopt;
}

NodeId select_node(const SearchTree& tree, SelectionPolicy policy, double lambda) {
    if (policy == SelectionPolicy::uct) return select_leaf(tree, lambda);
    if (policy == SelectionPolicy::greedy) {
        auto best = tree.best_node();
        if (!best) throw EmptyTree("no evaluated nodes");
        return *best;
    }
    std::optional<NodeId> chosen;
    for (NodeId id : tree.evaluated_nodes()) {
        if (!tree.is_leaf(id)) continue;
        if (!chosen) {
            chosen = id;
            continue;
        }
        const int d = tree.node(id).depth;
        const int best_d = tree.node(*chosen).depth;
        if ((policy == SelectionPolicy::dfs && d > best_d) || (policy == SelectionPolicy::bfs && d < best_d))
            chosen = id;
    }
    if (!chosen) throw EmptyTree("no evaluated leaves");
    return *chosen;
}

std::optional<NodeId> find_visit_sum_violation(const SearchTree& tree) {
    for (const auto& n : tree.nodes()) {
        if (n.children.empty()) continue;
        int sum = 0;
        for (NodeId c : n.children) sum += tree.node(c).visit_count;
        if (sum != n.visit_count) return n.id;
    }
    return std::nullopt;
}

}  // namespace rfsearch

#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "oracles.hpp"
#include "rfsearch/errors.hpp"
#include "rfsearch/rng.hpp"
#include "rfsearch/search_tree.hpp"

using namespace rfsearch;
using testutil::add;
using testutil::add_failed;

TEST_CASE("attach sets id, depth and initial statistics") {
    SearchTree tree;
    const NodeId a = add(tree, kRootId, 0.4, 3.0);
    const NodeId b = add(tree, a, 0.7);
    CHECK(a.value == 1);
    CHECK(b.value == 2);
    CHECK(tree.node(b).depth == 2);
    CHECK(tree.node(a).q_value == 0.4);
    CHECK(tree.node(a).visit_count == 1);
    CHECK(tree.node(a).self_verify == 1.0);
    CHECK(tree.is_ancestor(a, b));
    CHECK_FALSE(tree.is_ancestor(b, a));
}

TEST_CASE("uct matches the long double oracle") {
    Rng rng(11);
    for (int trial = 0; trial < 1000; ++trial) {
        NodeState parent, child;
        parent.visit_count = 1 + static_cast<int>(rng.below(500));
        child.visit_count = 1 + static_cast<int>(rng.below(50));
        const double q_min = rng.uniform(-5, 5);
        const double q_max = rng.below(10) == 0 ? q_min : q_min + rng.uniform(0, 5);
        child.q_value = q_max == q_min ? q_min : rng.uniform(q_min, q_max);
        const double lambda = rng.uniform(0, 1);
        const std::size_t n = 1 + rng.below(8);
        std::vector<double> verify(n);
        std::vector<long double> verify_ld(n);
        for (std::size_t i = 0; i < n; ++i) verify_ld[i] = verify[i] = rng.uniform(-1, 1);
        const std::size_t self = rng.below(n);
        child.self_verify = verify[self];

        const double got = uct_score(child, parent, lambda, q_min, q_max, verify);
        const long double want = oracle::uct(child.q_value, q_min, q_max, parent.visit_count, child.visit_count,
                                             lambda, verify_ld, self);
        REQUIRE(std::abs(static_cast<long double>(got) - want) <= 1e-12L);
    }
}

TEST_CASE("uct examples") {
    NodeState parent, child;
    parent.visit_count = 8;
    child.visit_count = 1;
    child.q_value = 1.0;
    const double v[] = {0.0};
    // q at the top of the range, lambda 0: pure exploitation.
    CHECK(uct_score(child, parent, 0.0, 0.0, 1.0, v) == 1.0);
    // flat tree: 0.5 exploitation
    CHECK(uct_score(child, parent, 0.0, 1.0, 1.0, v) == 0.5);
}

TEST_CASE("select_leaf on an empty tree throws") {
    SearchTree tree;
    CHECK_THROWS_AS(select_leaf(tree, 0.4), EmptyTree);
    CHECK_THROWS_AS(q_bounds(tree), EmptyTree);
}

TEST_CASE("select_leaf descends to a leaf and breaks ties by index") {
    SearchTree tree;
    const NodeId a = add(tree, kRootId, 0.5);
    add(tree, kRootId, 0.5);
    backup(tree, a, 0.7);
    // Identical children: the first wins.
    CHECK(select_leaf(tree, 0.4) == a);

    const NodeId a1 = add(tree, a, 0.9);
    add(tree, a, 0.1);
    backup(tree, a1, 0.7);
    CHECK(select_leaf(tree, 0.0) == a1);
}

TEST_CASE("failed children do not make a node internal") {
    SearchTree tree;
    const NodeId a = add(tree, kRootId, 0.5);
    add_failed(tree, a);
    backup(tree, NodeId{2}, 0.7);
    CHECK(tree.is_leaf(a));
    CHECK(select_leaf(tree, 0.4) == a);
    CHECK(tree.node(a).visit_count == 1);
}

TEST_CASE("failed nodes read the global minimum Q") {
    SearchTree tree;
    add(tree, kRootId, 0.2);
    add(tree, kRootId, 0.9);
    const NodeId f = add_failed(tree, kRootId);
    CHECK(tree.effective_q(f) == 0.2);
}

TEST_CASE("backup converges geometrically to the best child") {
    SearchTree tree;
    const NodeId s = add(tree, kRootId, 0.0);
    const NodeId c1 = add(tree, s, 1.0);
    add(tree, s, 0.3);
    for (int n = 1; n <= 20; ++n) {
        backup(tree, c1, 0.7);
        const long double want = oracle::smoothed(0.0L, 1.0L, 0.7L, n);
        REQUIRE(std::abs(tree.node(s).q_value - static_cast<double>(want)) < 1e-12);
    }
    CHECK(std::abs(tree.node(s).q_value - 1.0) < 1e-9);
    CHECK(tree.node(s).visit_count == 2);
    CHECK(tree.root().visit_count == 2);
    CHECK_FALSE(find_visit_sum_violation(tree));
}

TEST_CASE("backup stops below the root and keeps the sum rule") {
    SearchTree tree;
    const NodeId a = add(tree, kRootId, 0.5);
    const NodeId b = add(tree, kRootId, 0.1);
    const NodeId a1 = add(tree, a, 0.8);
    const NodeId a2 = add_failed(tree, a);
    backup(tree, a1, 0.7);
    CHECK(tree.node(a).visit_count == 2);
    CHECK(tree.node(a).q_value == doctest::Approx(0.3 * 0.5 + 0.7 * 0.8));
    CHECK(tree.root().visit_count == 3);
    CHECK(tree.root().q_value == 0.0);
    const NodeId a11 = add(tree, a1, 0.2);
    backup(tree, a11, 0.7);
    CHECK(tree.node(a1).visit_count == 1);
    CHECK(tree.node(a).visit_count == 2);
    CHECK_FALSE(find_visit_sum_violation(tree));
    (void)b;
    (void)a2;
}

TEST_CASE("ablation selection policies") {
    SearchTree tree;
    const NodeId a = add(tree, kRootId, 0.5);
    const NodeId b = add(tree, kRootId, 0.95);
    const NodeId c = add(tree, kRootId, 0.4);
    const NodeId a1 = add(tree, a, 0.6);
    const NodeId a2 = add(tree, a, 0.7);
    const NodeId a11 = add(tree, a1, 0.1);
    backup(tree, a11, 0.7);
    backup(tree, a2, 0.7);

    CHECK(select_node(tree, SelectionPolicy::dfs, 0.4) == a11);
    CHECK(select_node(tree, SelectionPolicy::bfs, 0.4) == b);
    CHECK(select_node(tree, SelectionPolicy::greedy, 0.4) == b);
    (void)c;
}

TEST_CASE("policy names round-trip") {
    for (auto p : {SelectionPolicy::uct, SelectionPolicy::dfs, SelectionPolicy::bfs, SelectionPolicy::greedy})
        CHECK(selection_policy_from_string(to_string(p)) == p);
    CHECK_FALSE(selection_policy_from_string("random"));
}

TEST_CASE("from_nodes rejects broken links") {
    SearchTree tree;
    const NodeId a = add(tree, kRootId, 0.5);
    add(tree, a, 0.6);
    auto nodes = std::vector<NodeState>(tree.nodes().begin(), tree.nodes().end());
    CHECK(SearchTree::from_nodes(nodes) == tree);
    nodes[2].parent = kRootId;
    CHECK_THROWS(SearchTree::from_nodes(nodes));
}

#pragma once

#include <filesystem>
#include <string>

#include "rfsearch/search_tree.hpp"

namespace testutil {

inline rfsearch::NodeId add(rfsearch::SearchTree& tree, rfsearch::NodeId parent, double score, double verify = 0.0) {
    rfsearch::NodeState n;
    n.status = rfsearch::NodeStatus::evaluated;
    n.score = score;
    n.self_verify = verify;
    n.candidate.source_text = "genome 0";
    return tree.attach(parent, n);
}

inline rfsearch::NodeId add_failed(rfsearch::SearchTree& tree, rfsearch::NodeId parent) {
    rfsearch::NodeState n;
    n.status = rfsearch::NodeStatus::failed;
    n.traceback = "boom";
    return tree.attach(parent, n);
}

inline std::filesystem::path fixtures() { return RFSEARCH_FIXTURES; }

/// Fresh empty directory under the build tree.
inline std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::path(RFSEARCH_TEST_TMP) / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace testutil

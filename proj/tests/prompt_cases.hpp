#pragma once

#include <string>

#include "ant_feedback.hpp"
#include "helpers.hpp"
#include "rfsearch/prompts.hpp"

namespace testutil::prompts {

using namespace rfsearch;

// Same substitutions as tests/fixtures/prompts/generate.py.
inline TaskInfo ant_task() {
    return {"Ant. You need to make the ant run forward as fast as possible.",
            "class Ant(VecTask):\n"
            "    def compute_observations(self):\n"
            "        self.torso_position = self.root_states[:, 0:3]\n"
            "        self.velocity = self.root_states[:, 7:10]"};
}

inline CandidateProgram candidate(int i) {
    static const char* thoughts[] = {"Reward forward velocity and add a small alive bonus.",
                                     "Exponentiate the forward speed with a temperature.",
                                     "Combine {speed} with an upright term."};
    static const char* codes[] = {
        "def compute_reward(velocity):\n    forward = velocity[:, 0]\n    return forward + 0.5, {\"forward\": forward}",
        "def compute_reward(velocity):\n    t = 2.0\n    forward = torch.exp(velocity[:, 0] / t)\n    return forward, "
        "{\"forward\": forward}",
        "def compute_reward(velocity, up_vec):\n    up = up_vec[:, 2]\n    return velocity[:, 0] + 0.1 * up, {\"up\": up}"};
    CandidateProgram c;
    c.design_thought = thoughts[i];
    c.source_text = codes[i];
    return c;
}

inline NodeState node(int i) {
    NodeState n;
    n.id = NodeId{static_cast<std::uint32_t>(i + 1)};
    n.status = NodeStatus::evaluated;
    n.candidate = candidate(i);
    n.feedback = testutil::ant_feedback();
    n.score = n.feedback->final_score;
    return n;
}

inline std::string golden(const std::string& name) {
    return read_text((fixtures() / "prompts" / (name + ".txt")).string());
}

inline constexpr int kEpochFreq = 10;

}  // namespace testutil::prompts

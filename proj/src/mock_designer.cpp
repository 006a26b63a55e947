#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "rfsearch/designer.hpp"
#include "rfsearch/dsl.hpp"
#include "rfsearch/errors.hpp"
#include "rfsearch/evaluation.hpp"

namespace rfsearch {

namespace {

std::string reply(const std::string& thought, const std::string& code, const char* lang) {
    return fmt::format("{{{}}}\n```{}\n{}\n```", thought, lang, code);
}

// ------------------------------------------------------------ genome actions

std::vector<double> salvage_genome(const std::string& text, std::size_t dim, const MockDesignerConfig& cfg, Rng& rng) {
    std::vector<double> out;
    std::istringstream in(text);
    std::string token;
    while (in >> token) {
        double v = 0.0;
        std::istringstream num(token);
        if (num >> v && num.eof() && std::isfinite(v)) out.push_back(v);
    }
    while (out.size() < dim) out.push_back(rng.uniform(cfg.init_low, cfg.init_high));
    out.resize(dim);
    return out;
}

std::vector<double> context_genome(const PromptContext& c, std::size_t dim, const MockDesignerConfig& cfg, Rng& rng) {
    try {
        auto g = parse_genome(c.source_text);
        if (g.size() == dim) return g;
    } catch (const Error&) {
    }
    return salvage_genome(c.source_text, dim, cfg, rng);
}

// Per-coordinate component values from the feedback, when the prompt
// carried them.
std::optional<std::vector<double>> component_finals(const PromptContext& c, std::size_t dim) {
    if (!c.feedback || c.feedback->components.size() != dim) return std::nullopt;
    std::vector<double> out;
    for (const auto& [name, series] : c.feedback->components) out.push_back(series.values.back());
    return out;
}

double clamp_coord(double x, const MockDesignerConfig& cfg) {
    const double margin = 0.5 * (cfg.init_high - cfg.init_low);
    return std::clamp(x, cfg.init_low - margin, cfg.init_high + margin);
}

// ------------------------------------------------------------ dsl actions

struct Term {
    const char* name;
    const char* body;  // multiplied by a coefficient
    bool dense;
};

// Building blocks the mock combines. Coefficients are sampled per use.
constexpr Term kTerms[] = {
    {"progress", "(prev_dist - dist)", true},
    {"distance", "dist", true},
    {"proximity", "exp(-5.0 * dist)", true},
    {"success", "indicator(dist < 0.05)", false},
    {"effort", "action_mag", false},
    {"speed", "abs(vel_x)", false},
    {"shaped", "tanh(3.0 * dist)", true},
    {"near", "indicator(dist < 0.2)", false},
};

double term_coefficient(const Term& t, Rng& rng) {
    const std::string name = t.name;
    const double mag = std::exp(rng.normal() * 0.5);
    if (name == "progress") return 10.0 * mag;
    if (name == "distance" || name == "shaped") return -1.0 * mag;
    if (name == "effort" || name == "speed") return -0.1 * mag;
    return 1.0 * mag;
}

double round4(double v) { return std::round(v * 1e4) / 1e4; }

dsl::Component make_term(const Term& t, Rng& rng) {
    const std::string src =
        fmt::format("component {} = {} * {};", t.name, dsl::format_constant(round4(term_coefficient(t, rng))), t.body);
    return dsl::parse(src).components.front();
}

const Term* find_term(const std::string& name) {
    for (const auto& t : kTerms)
        if (name == t.name) return &t;
    return nullptr;
}

dsl::ExprPtr map_constants(const dsl::ExprPtr& e, const std::function<double(double)>& f) {
    using namespace dsl;
    return std::visit(
        [&](const auto& n) -> ExprPtr {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Constant>) return make_constant(f(n.value));
            if constexpr (std::is_same_v<T, Variable>) return e;
            if constexpr (std::is_same_v<T, Norm>) return e;
            if constexpr (std::is_same_v<T, Unary>) return make_unary(n.op, map_constants(n.operand, f));
            if constexpr (std::is_same_v<T, Binary>)
                return make_binary(n.op, map_constants(n.lhs, f), map_constants(n.rhs, f));
            if constexpr (std::is_same_v<T, Gate>)
                return make_gate(n.op, map_constants(n.lhs, f), map_constants(n.rhs, f));
        },
        e->node);
}

std::vector<double> collect_constants(const dsl::ExprPtr& e) {
    std::vector<double> out;
    map_constants(e, [&](double v) {
        out.push_back(v);
        return v;
    });
    return out;
}

bool has_component(const dsl::RewardExpr& r, const std::string& name) {
    return std::any_of(r.components.begin(), r.components.end(), [&](const auto& c) { return c.name == name; });
}

std::vector<const Term*> absent_terms(const dsl::RewardExpr& r) {
    std::vector<const Term*> out;
    for (const auto& t : kTerms)
        if (!has_component(r, t.name)) out.push_back(&t);
    return out;
}

dsl::RewardExpr random_program(Rng& rng, std::size_t max_terms, const std::set<std::string>& avoid = {}) {
    std::vector<const Term*> pool;
    for (const auto& t : kTerms)
        if (!avoid.count(t.name)) pool.push_back(&t);
    if (pool.empty())
        for (const auto& t : kTerms) pool.push_back(&t);
    dsl::RewardExpr out;
    const std::size_t n = 1 + rng.below(std::min(max_terms, pool.size()));
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t pick = rng.below(pool.size());
        out.components.push_back(make_term(*pool[pick], rng));
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
    }
    return out;
}

// Parses what it can of a program; statements that fail are dropped.
dsl::RewardExpr salvage_program(const std::string& source) {
    dsl::RewardExpr out;
    std::string statement;
    std::istringstream in(source);
    while (std::getline(in, statement, ';')) {
        try {
            auto part = dsl::parse(statement + ";", toy_vocabulary());
            for (auto& c : part.components)
                if (!has_component(out, c.name)) out.components.push_back(std::move(c));
        } catch (const Error&) {
        }
    }
    return out;
}

dsl::RewardExpr context_program(const PromptContext& c) {
    try {
        return dsl::parse(c.source_text, toy_vocabulary());
    } catch (const Error&) {
        return salvage_program(c.source_text);
    }
}

dsl::RewardExpr perturb_constants(const dsl::RewardExpr& r, double sigma, Rng& rng) {
    dsl::RewardExpr out;
    for (const auto& c : r.components)
        out.components.push_back({c.name, map_constants(c.expr, [&](double v) {
                                      return round4(v * std::exp(rng.normal() * sigma));
                                  })});
    return out;
}

std::string describe(const dsl::RewardExpr& r) {
    std::vector<std::string> names;
    for (const auto& c : r.components) names.push_back(c.name);
    return fmt::format("The reward sums {} term(s): {}.", names.size(), fmt::join(names, ", "));
}

}  // namespace

MockDesigner::MockDesigner(MockDesignerConfig config) : config_(std::move(config)) {
    if (config_.dimension == 0) throw ConfigError("mock designer dimension must be positive");
    if (!(config_.init_low < config_.init_high)) throw ConfigError("mock designer init range is empty");
    if (config_.error_rate < 0.0 || config_.error_rate > 1.0) throw ConfigError("error_rate must lie in [0, 1]");
    if (config_.script) {
        std::ifstream in(*config_.script);
        if (!in) throw ConfigError(fmt::format("cannot open mock script '{}'", config_.script->string()));
        try {
            const auto doc = nlohmann::json::parse(in);
            for (const auto& [key, replies] : doc.items()) {
                auto kind = action_kind_from_string(key);
                if (!kind) throw ConfigError(fmt::format("mock script: unknown action '{}'", key));
                script_[std::string(short_name(*kind))] = replies.get<std::vector<std::string>>();
            }
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(fmt::format("mock script '{}': {}", config_.script->string(), e.what()));
        }
    }
}

std::optional<std::string> MockDesigner::next_scripted(ActionKind kind) {
    std::lock_guard lock(mutex_);
    const std::string key(short_name(kind));
    auto it = script_.find(key);
    if (it == script_.end()) return std::nullopt;
    std::size_t& cursor = cursor_[key];
    if (cursor >= it->second.size()) return std::nullopt;
    ++used_;
    return it->second[cursor++];
}

std::size_t MockDesigner::scripted_replies_used() const {
    std::lock_guard lock(mutex_);
    return used_;
}

std::string MockDesigner::complete(const PromptBundle& prompt, Rng& rng) {
    if (auto scripted = next_scripted(prompt.kind)) return *scripted;
    return config_.mode == MockDesignerConfig::Mode::genome ? genome_reply(prompt, rng) : dsl_reply(prompt, rng);
}

std::string MockDesigner::genome_reply(const PromptBundle& prompt, Rng& rng) const {
    const std::size_t dim = config_.dimension;
    auto fresh = [&] {
        std::vector<double> g(dim);
        for (auto& v : g) v = rng.uniform(config_.init_low, config_.init_high);
        return g;
    };
    auto ctx = [&](std::size_t i) { return context_genome(prompt.context.at(i), dim, config_, rng); };
    auto mean_of = [](const std::vector<double>& g) {
        double s = 0.0;
        for (double v : g) s += v;
        return g.empty() ? 0.0 : s / static_cast<double>(g.size());
    };

    std::vector<double> g;
    std::string thought;
    switch (prompt.kind) {
        case ActionKind::init:
        case ActionKind::d5_different_thought:
            g = fresh();
            thought = prompt.kind == ActionKind::init ? "Start from a random point of the search space."
                                                      : "Explore a region unrelated to the given candidates.";
            break;
        case ActionKind::m1_mutation_structure: {
            g = ctx(0);
            std::size_t i = rng.below(dim);
            // Half the time work on the weakest reported component.
            if (auto comps = component_finals(prompt.context[0], dim); comps && rng.uniform() < 0.5)
                i = static_cast<std::size_t>(std::min_element(comps->begin(), comps->end()) - comps->begin());
            g[i] = clamp_coord(g[i] + 0.5 * rng.normal(), config_);
            thought = fmt::format("Restructure coordinate {}.", i);
            break;
        }
        case ActionKind::m2_mutation_params: {
            g = ctx(0);
            for (auto& v : g) v = clamp_coord(v + 0.1 * rng.normal(), config_);
            thought = "Fine-tune every coordinate slightly.";
            break;
        }
        case ActionKind::basic: {
            g = ctx(0);
            for (auto& v : g) v = clamp_coord(v + 0.3 * rng.normal(), config_);
            thought = "Adjust the candidate to raise its score.";
            break;
        }
        case ActionKind::c3_crossover: {
            std::vector<std::vector<double>> parents;
            std::vector<std::optional<std::vector<double>>> comps;
            for (std::size_t i = 0; i < prompt.context.size(); ++i) {
                parents.push_back(ctx(i));
                comps.push_back(component_finals(prompt.context[i], dim));
            }
            g.resize(dim);
            for (std::size_t d = 0; d < dim; ++d) {
                // Usually keep the parent whose component scored best here.
                std::size_t pick = rng.below(parents.size());
                if (rng.uniform() < 0.8) {
                    double best = -std::numeric_limits<double>::infinity();
                    for (std::size_t p = 0; p < parents.size(); ++p)
                        if (comps[p] && (*comps[p])[d] > best) {
                            best = (*comps[p])[d];
                            pick = p;
                        }
                }
                g[d] = parents[pick][d];
            }
            thought = fmt::format("Combine coordinates from {} candidates.", parents.size());
            break;
        }
        case ActionKind::r4_path_reasoning: {
            // Context is oldest first; continue the last step of the path.
            const std::size_t n = prompt.context.size();
            g = ctx(n - 1);
            if (n >= 2) {
                const auto prev = ctx(n - 2);
                for (std::size_t d = 0; d < dim; ++d)
                    g[d] = clamp_coord(g[d] + 0.5 * (g[d] - prev[d]) + 0.05 * rng.normal(), config_);
                thought = "Continue the direction of the last improvement.";
            } else {
                for (auto& v : g) v = clamp_coord(v + 0.1 * rng.normal(), config_);
                thought = "Refine the only step on the path.";
            }
            break;
        }
        case ActionKind::repair: {
            g = salvage_genome(prompt.context.at(0).source_text, dim, config_, rng);
            thought = prompt.context.at(0).design_thought;
            break;
        }
        case ActionKind::align: {
            const auto cur = ctx(0);
            return fmt::format("{{A genome whose coordinates average {:.3f}.}}", mean_of(cur));
        }
        case ActionKind::verify: {
            const auto cur = ctx(0);
            const double v = std::clamp(0.5 * mean_of(cur) + 0.1 * rng.normal(), -1.0, 1.0);
            return fmt::format("The candidate looks plausible. [{:.2f}]", v);
        }
    }

    std::string code = format_genome(g);
    if (prompt.kind != ActionKind::repair && rng.uniform() < config_.error_rate) code += " oops";
    return reply(thought, code, "");
}

std::string MockDesigner::dsl_reply(const PromptBundle& prompt, Rng& rng) const {
    dsl::RewardExpr r;
    std::string thought;
    switch (prompt.kind) {
        case ActionKind::init:
            r = random_program(rng, 3);
            thought = "Combine a few signals about the distance to the target.";
            break;
        case ActionKind::m1_mutation_structure: {
            r = context_program(prompt.context.at(0));
            const auto absent = absent_terms(r);
            const bool remove = r.components.size() > 1 && (absent.empty() || rng.uniform() < 0.4);
            if (remove) {
                const std::size_t i = rng.below(r.components.size());
                thought = fmt::format("Drop the {} term.", r.components[i].name);
                r.components.erase(r.components.begin() + static_cast<std::ptrdiff_t>(i));
            } else if (!absent.empty()) {
                const Term* t = absent[rng.below(absent.size())];
                r.components.push_back(make_term(*t, rng));
                thought = fmt::format("Add a {} term.", t->name);
            }
            if (r.components.empty()) r = random_program(rng, 2);
            break;
        }
        case ActionKind::m2_mutation_params:
            r = perturb_constants(context_program(prompt.context.at(0)), 0.3, rng);
            thought = "Rescale the existing terms.";
            break;
        case ActionKind::basic:
            r = context_program(prompt.context.at(0));
            r = rng.uniform() < 0.5 ? perturb_constants(r, 0.5, rng) : random_program(rng, 3);
            thought = "Revise the reward to raise the task score.";
            break;
        case ActionKind::c3_crossover: {
            std::vector<dsl::Component> pool;
            for (const auto& c : prompt.context)
                for (auto& comp : context_program(c).components) pool.push_back(comp);
            while (!pool.empty() && r.components.size() < 4) {
                const std::size_t i = rng.below(pool.size());
                if (!has_component(r, pool[i].name) && (r.components.empty() || rng.uniform() < 0.6))
                    r.components.push_back(pool[i]);
                pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(i));
            }
            if (r.components.empty()) r = random_program(rng, 3);
            thought = fmt::format("Merge terms from {} rewards.", prompt.context.size());
            break;
        }
        case ActionKind::r4_path_reasoning: {
            const std::size_t n = prompt.context.size();
            r = context_program(prompt.context[n - 1]);
            if (n >= 2) {
                const auto prev = context_program(prompt.context[n - 2]);
                bool changed = false;
                for (auto& comp : r.components) {
                    auto it = std::find_if(prev.components.begin(), prev.components.end(),
                                           [&](const auto& p) { return p.name == comp.name; });
                    if (it == prev.components.end()) continue;
                    const auto before = collect_constants(it->expr);
                    const auto after = collect_constants(comp.expr);
                    if (before.size() != after.size()) continue;
                    std::size_t k = 0;
                    comp.expr = map_constants(comp.expr, [&](double v) {
                        const double b = before[k++];
                        if (b == 0.0 || b == v || (b > 0) != (v > 0)) return v;
                        changed = true;
                        return round4(v * std::clamp(v / b, 0.5, 2.0));
                    });
                }
                if (!changed) {
                    const auto absent = absent_terms(r);
                    if (!absent.empty()) r.components.push_back(make_term(*absent[rng.below(absent.size())], rng));
                }
                thought = "Keep moving along the path of recent edits.";
            } else {
                r = perturb_constants(r, 0.2, rng);
                thought = "Refine the only reward on the path.";
            }
            break;
        }
        case ActionKind::d5_different_thought: {
            std::set<std::string> used;
            for (const auto& c : prompt.context)
                for (const auto& comp : context_program(c).components) used.insert(comp.name);
            r = random_program(rng, 3, used);
            thought = "Try signals none of the previous rewards used.";
            break;
        }
        case ActionKind::repair:
            r = salvage_program(prompt.context.at(0).source_text);
            if (r.components.empty()) r = random_program(rng, 2);
            thought = prompt.context.at(0).design_thought;
            break;
        case ActionKind::align:
            return fmt::format("{{{}}}", describe(context_program(prompt.context.at(0))));
        case ActionKind::verify: {
            const auto cur = context_program(prompt.context.at(0));
            double v = -0.3;
            for (const auto& comp : cur.components)
                if (const Term* t = find_term(comp.name); t && t->dense) v = 0.4;
            if (has_component(cur, "success")) v += 0.2;
            v = std::clamp(v + 0.1 * rng.normal(), -1.0, 1.0);
            return fmt::format("Judging by the terms used. [{:.2f}]", v);
        }
    }

    std::string code = dsl::pretty_print(r);
    if (prompt.kind != ActionKind::repair && rng.uniform() < config_.error_rate)
        code += rng.uniform() < 0.5 ? "\ncomponent broken = dist * ;" : "\ncomponent bonus = speed;";
    return reply(thought, code, "python");
}

}  // namespace rfsearch

#include "rfsearch/designer.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include <fmt/format.h>

#include "rfsearch/errors.hpp"

namespace rfsearch {

namespace {

std::string trim(std::string_view s) {
    auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return std::string(s);
}

}  // namespace

DesignerResponse parse_designer_response(std::string_view raw) {
    DesignerResponse out;
    out.raw_text = std::string(raw);

    // Fence spans [open, close_end) blank out brace search.
    std::vector<std::pair<std::size_t, std::size_t>> fences;
    std::size_t pos = 0;
    while (true) {
        const std::size_t open = raw.find("```", pos);
        if (open == std::string_view::npos) break;
        std::size_t body = raw.find('\n', open + 3);
        if (body == std::string_view::npos) {
            fences.emplace_back(open, raw.size());
            break;
        }
        ++body;
        const std::size_t close = raw.find("```", body);
        const std::size_t end = close == std::string_view::npos ? raw.size() : close + 3;
        if (!out.parsed_code && close != std::string_view::npos)
            out.parsed_code = trim(raw.substr(body, close - body));
        fences.emplace_back(open, end);
        pos = end;
    }

    auto in_fence = [&](std::size_t i) {
        return std::any_of(fences.begin(), fences.end(), [i](auto f) { return i >= f.first && i < f.second; });
    };
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] != '{' || in_fence(i)) continue;
        int depth = 0;
        for (std::size_t j = i; j < raw.size(); ++j) {
            if (in_fence(j)) break;
            if (raw[j] == '{') ++depth;
            if (raw[j] == '}' && --depth == 0) {
                out.parsed_thought = trim(raw.substr(i + 1, j - i - 1));
                break;
            }
        }
        if (out.parsed_thought) break;
    }
    return out;
}

std::optional<double> parse_self_verify(std::string_view raw) {
    std::optional<double> last;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] != '[') continue;
        const std::size_t close = raw.find(']', i + 1);
        if (close == std::string_view::npos) break;
        const std::string inner = trim(raw.substr(i + 1, close - i - 1));
        // A plain decimal: optional sign, digits, optional fraction.
        std::size_t k = 0;
        if (k < inner.size() && (inner[k] == '-' || inner[k] == '+')) ++k;
        std::size_t digits = 0;
        bool dot = false;
        bool ok = k < inner.size();
        for (; k < inner.size(); ++k) {
            if (std::isdigit(static_cast<unsigned char>(inner[k]))) {
                ++digits;
            } else if (inner[k] == '.' && !dot) {
                dot = true;
            } else {
                ok = false;
                break;
            }
        }
        if (ok && digits > 0) {
            const char* first = inner.data() + (inner[0] == '+' ? 1 : 0);
            double value = 0.0;
            auto [ptr, ec] = std::from_chars(first, inner.data() + inner.size(), value);
            if (ec == std::errc() && ptr == inner.data() + inner.size()) last = std::clamp(value, -1.0, 1.0);
        }
    }
    return last;
}

Designer::Designer(std::shared_ptr<DesignerBackend> backend, DesignerOptions options)
    : backend_(std::move(backend)), options_(options) {
    if (!backend_) throw ConfigError("designer needs a backend");
    if (options_.retry_limit < 0) throw ConfigError("retry_limit must be non-negative");
}

DesignerResponse Designer::generate(const PromptBundle& prompt, Rng& rng) const {
    DesignerResponse response = parse_designer_response(backend_->complete(prompt, rng));
    if (!response.parsed_code || response.parsed_code->empty())
        throw ParseError("designer reply contains no fenced code block");
    return response;
}

CandidateProgram Designer::repair(const CandidateProgram& candidate, std::string_view traceback, const TaskInfo& task,
                                  Rng& rng) const {
    if (candidate.revision >= options_.retry_limit)
        throw RetryExhausted(fmt::format("candidate still failing after {} repairs", candidate.revision));
    const DesignerResponse response = generate(assemble_repair_prompt(candidate, traceback, task), rng);
    CandidateProgram fixed = candidate;
    fixed.source_text = *response.parsed_code;
    fixed.lineage_kind = ActionKind::repair;
    fixed.revision = candidate.revision + 1;
    return fixed;
}

std::string Designer::align_thought(const CandidateProgram& candidate, const TaskInfo& task, Rng& rng) const {
    if (!options_.thought_align) return candidate.design_thought;
    try {
        const std::string reply = backend_->complete(assemble_align_prompt(candidate, task), rng);
        const DesignerResponse parsed = parse_designer_response(reply);
        std::string thought = parsed.parsed_thought ? *parsed.parsed_thought : trim(reply);
        return thought.empty() ? candidate.design_thought : thought;
    } catch (const TransportError&) {
        return candidate.design_thought;
    }
}

double Designer::self_verify(const CandidateProgram& candidate, const TaskInfo& task, Rng& rng) const {
    if (!options_.self_verify) return 0.0;
    try {
        return parse_self_verify(backend_->complete(assemble_verify_prompt(candidate, task), rng)).value_or(0.0);
    } catch (const TransportError&) {
        return 0.0;
    }
}

}  // namespace rfsearch

#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rfsearch/prompts.hpp"
#include "rfsearch/rng.hpp"
#include "rfsearch/types.hpp"

namespace rfsearch {

struct DesignerResponse {
    std::string raw_text;
    std::optional<std::string> parsed_thought;
    std::optional<std::string> parsed_code;
};

/// Code is the body of the first ``` fence (the info string after the
/// opening fence is skipped); thought is the first balanced {...} span
/// outside fences. Both are whitespace-trimmed.
DesignerResponse parse_designer_response(std::string_view raw);

/// Last [decimal] in `raw`, clamped to [-1, 1]; nullopt when there is none.
std::optional<double> parse_self_verify(std::string_view raw);

/// Something that answers prompts. Implementations must accept concurrent
/// calls; `rng` is private to the call.
class DesignerBackend {
public:
    virtual ~DesignerBackend() = default;
    virtual std::string complete(const PromptBundle& prompt, Rng& rng) = 0;
};

struct DesignerOptions {
    int retry_limit = 3;
    bool thought_align = true;
    bool self_verify = true;
};

/// The generation, repair, align and verify exchanges on top of a backend.
class Designer {
public:
    Designer(std::shared_ptr<DesignerBackend> backend, DesignerOptions options);

    /// Throws TransportError, or ParseError when the reply has no code block.
    DesignerResponse generate(const PromptBundle& prompt, Rng& rng) const;

    /// New candidate with revision + 1 and lineage `repair`; the thought is
    /// carried over. Throws RetryExhausted once revision reaches the limit,
    /// ParseError when the reply has no code block.
    CandidateProgram repair(const CandidateProgram& candidate, std::string_view traceback, const TaskInfo& task,
                            Rng& rng) const;

    /// Regenerated design thought, or the original when alignment is
    /// disabled, the exchange fails or the reply is empty.
    std::string align_thought(const CandidateProgram& candidate, const TaskInfo& task, Rng& rng) const;

    /// v_self in [-1, 1]; 0 when disabled, unparseable or the exchange fails.
    double self_verify(const CandidateProgram& candidate, const TaskInfo& task, Rng& rng) const;

    const DesignerOptions& options() const { return options_; }

private:
    std::shared_ptr<DesignerBackend> backend_;
    DesignerOptions options_;
};

// ---------------------------------------------------------------- mock

struct MockDesignerConfig {
    enum class Mode { genome, dsl };
    Mode mode = Mode::genome;
    std::size_t dimension = 8;
    double init_low = -2.0;
    double init_high = 2.0;
    /// Chance that a generated candidate carries a deliberate defect.
    double error_rate = 0.0;
    /// Optional JSON object mapping action names to lists of canned replies,
    /// consumed in call order before falling back to generated replies.
    std::optional<std::filesystem::path> script;
};

/// Offline designer. Replies depend only on the prompt and the call's rng:
/// genome text for the synthetic evaluator or DSL programs for the toy task,
/// each action transforming its context candidates in its own way.
class MockDesigner final : public DesignerBackend {
public:
    explicit MockDesigner(MockDesignerConfig config);
    std::string complete(const PromptBundle& prompt, Rng& rng) override;

    std::size_t scripted_replies_used() const;

private:
    std::optional<std::string> next_scripted(ActionKind kind);
    std::string genome_reply(const PromptBundle& prompt, Rng& rng) const;
    std::string dsl_reply(const PromptBundle& prompt, Rng& rng) const;

    MockDesignerConfig config_;
    std::map<std::string, std::vector<std::string>> script_;
    mutable std::mutex mutex_;
    std::map<std::string, std::size_t> cursor_;
    std::size_t used_ = 0;
};

// ---------------------------------------------------------------- http

struct HttpDesignerConfig {
    /// Base URL, e.g. https://api.openai.com
    std::string endpoint;
    std::string path = "/v1/chat/completions";
    std::string model;
    double temperature = 1.0;
    std::chrono::milliseconds timeout{std::chrono::seconds(120)};
    int transport_retries = 2;
    /// Read from RFSEARCH_API_KEY when empty.
    std::string api_key;
};

/// Chat-completion client: posts {model, messages, temperature} and returns
/// choices[0].message.content.
class HttpDesigner final : public DesignerBackend {
public:
    explicit HttpDesigner(HttpDesignerConfig config);
    std::string complete(const PromptBundle& prompt, Rng& rng) override;

private:
    HttpDesignerConfig config_;
};

/// Request body for one exchange.
std::string chat_request_body(const PromptBundle& prompt, const std::string& model, double temperature);

/// choices[0].message.content of a chat-completion reply. Throws ParseError.
std::string chat_response_content(const std::string& body);

}  // namespace rfsearch

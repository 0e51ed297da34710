#pragma once

#include "factfin/retrieval.hpp"
#include "factfin/strategy.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace factfin {

enum class TemplateMode { Generate, Modify };

// Placeholders: {Prices} {Factors} {News} {Examples} {CurrentStrategy}
struct PromptTemplate {
    std::string id;
    std::string text;
    TemplateMode mode = TemplateMode::Generate;
};

// Deterministic substitution; factor and news sections serialize in
// canonical name order. Unresolvable placeholders throw TemplateError.
std::string render_prompt(const PromptTemplate& tmpl, const StructuredState& state,
                          const StrategyAst* current = nullptr);

// Market-condition template variants keyed by the trailing 20-bar
// close-to-close volatility tercile of the price window.
enum class VolatilityRegime { Low, Mid, High };
VolatilityRegime classify_regime(const MarketState& state);
const PromptTemplate& registry_template(TemplateMode mode, VolatilityRegime regime);

struct GeneratorRequest {
    std::string prompt;
    TemplateMode mode = TemplateMode::Generate;
    double temperature = 0.7;
    int timeout_ms = 30000;
    int attempt = 1;
};

struct GeneratorResponse {
    std::string raw_text;
    std::string extracted_source;
    bool parse_ok = false;
    std::string parse_diagnostics;
};

// First fenced ``` block, or the whole text when no fence is present.
std::string extract_strategy_block(const std::string& text);

class GeneratorBackend {
public:
    virtual ~GeneratorBackend() = default;
    virtual std::string name() const = 0;
    // Returns raw completion text; throws TransportError on failure.
    virtual std::string complete(const GeneratorRequest& request) = 0;
};

// Deterministic backend: fills a parameterized strategy skeleton from state
// statistics; never needs retries.
class TemplateBackend final : public GeneratorBackend {
public:
    std::string name() const override { return "template"; }
    std::string complete(const GeneratorRequest& request) override;

    // The skeleton is built from the state, not the prompt; keep the state
    // alongside the request when driving this backend directly.
    std::string complete_for_state(const StructuredState& state) const;
};

struct GatewayConfig {
    std::string url;        // e.g. http://host:port
    std::string path = "/v1/chat/completions";
    std::string model = "gpt-4o";
    std::string api_key_env = "FACTFIN_LLM_KEY";
    int max_retries = 3;
    int backoff_initial_ms = 200; // doubles per retry
    int timeout_ms = 30000;
    std::string transcript_path; // JSONL; empty disables logging
};

// Chat-completion-shaped HTTP client with bounded retries and a replayable
// transcript.
class GatewayBackend final : public GeneratorBackend {
public:
    explicit GatewayBackend(GatewayConfig config);
    std::string name() const override { return "gateway"; }
    std::string complete(const GeneratorRequest& request) override;

private:
    GatewayConfig config_;
};

// Replays a recorded transcript offline, in order.
class ReplayBackend final : public GeneratorBackend {
public:
    explicit ReplayBackend(const std::string& transcript_path);
    std::string name() const override { return "replay"; }
    std::string complete(const GeneratorRequest& request) override;

private:
    std::vector<std::string> responses_;
    std::size_t next_ = 0;
};

// Render prompt, call backend, extract + parse; on parse failure retry with
// an error-annotated prompt up to 3 attempts.
StrategyAst generate_strategy(const PromptTemplate& tmpl, const StructuredState& state,
                              GeneratorBackend& backend,
                              const FeatureCatalog& catalog = FeatureCatalog::defaults(),
                              const StrategyAst* current = nullptr,
                              int* attempts_out = nullptr);

} // namespace factfin

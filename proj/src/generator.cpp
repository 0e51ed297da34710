#include "factfin/generator.hpp"

#include "factfin/errors.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

namespace factfin {

namespace {

std::string prices_section(const MarketState& state) {
    std::ostringstream out;
    out.precision(6);
    for (const auto& bar : state.window)
        out << format_date(bar.date) << " close=" << bar.close << '\n';
    return out.str();
}

std::string factors_section(const MarketState& state) {
    std::ostringstream out;
    out.precision(6);
    for (const auto& [name, value] : state.factors) { // std::map: canonical order
        out << name << '=';
        if (value) out << *value;
        else out << "n/a";
        out << '\n';
    }
    return out.str();
}

std::string news_section(const StructuredState& s) {
    std::ostringstream out;
    out.precision(4);
    out << "sentiment=" << s.state.news.sentiment << '\n';
    for (std::size_t k = 0; k < kTopicCount; ++k)
        out << "topic." << kTopicCatalog[k] << '=' << s.state.news.topics[k] << '\n';
    for (const auto& flag : s.state.news.event_flags) out << "event=" << flag << '\n';
    for (const auto& snip : s.context)
        out << "context: " << snip.snippet.text << '\n';
    return out.str();
}

const char* kExampleStrategies =
    "when rsi(14) < 30 then buy\n"
    "when rsi(14) > 70 then sell\n"
    "else hold\n";

bool replace_all_placeholder(std::string& text, const std::string& key,
                             const std::string& value) {
    bool found = false;
    std::size_t pos = 0;
    while ((pos = text.find(key, pos)) != std::string::npos) {
        text.replace(pos, key.size(), value);
        pos += value.size();
        found = true;
    }
    return found;
}

} // namespace

std::string render_prompt(const PromptTemplate& tmpl, const StructuredState& state,
                          const StrategyAst* current) {
    std::string out = tmpl.text;
    replace_all_placeholder(out, "{Prices}", prices_section(state.state));
    replace_all_placeholder(out, "{Factors}", factors_section(state.state));
    replace_all_placeholder(out, "{News}", news_section(state));
    replace_all_placeholder(out, "{Examples}", kExampleStrategies);
    if (out.find("{CurrentStrategy}") != std::string::npos) {
        if (!current)
            throw TemplateError("template '" + tmpl.id +
                                "' needs {CurrentStrategy} but none was given");
        replace_all_placeholder(out, "{CurrentStrategy}", render_strategy(*current));
    }
    // any leftover {Word} placeholder is a template bug
    std::size_t open = out.find('{');
    while (open != std::string::npos) {
        const std::size_t close = out.find('}', open);
        if (close != std::string::npos && close - open > 1 && close - open < 32) {
            const std::string inner = out.substr(open + 1, close - open - 1);
            if (!inner.empty() && std::isupper(static_cast<unsigned char>(inner[0])) &&
                inner.find(' ') == std::string::npos)
                throw TemplateError("unresolvable placeholder {" + inner + "}");
        }
        open = out.find('{', open + 1);
    }
    return out;
}

VolatilityRegime classify_regime(const MarketState& state) {
    // trailing close-to-close vol over up to 20 window bars
    const auto& w = state.window;
    if (w.size() < 3) return VolatilityRegime::Mid;
    const std::size_t n = std::min<std::size_t>(w.size(), 21);
    std::vector<double> lr;
    for (std::size_t i = w.size() - n + 1; i < w.size(); ++i)
        lr.push_back(std::log(w[i].close / w[i - 1].close));
    double mean = 0;
    for (double r : lr) mean += r;
    mean /= double(lr.size());
    double var = 0;
    for (double r : lr) var += (r - mean) * (r - mean);
    var /= double(lr.size() - 1);
    const double vol = std::sqrt(var);
    // tercile cuts calibrated to daily equity vol (roughly 16%/32% annualized)
    if (vol < 0.010) return VolatilityRegime::Low;
    if (vol < 0.020) return VolatilityRegime::Mid;
    return VolatilityRegime::High;
}

namespace {

PromptTemplate make_template(const char* id, TemplateMode mode, const char* lead) {
    PromptTemplate t;
    t.id = id;
    t.mode = mode;
    t.text = std::string(lead) +
             "\n\nMarket prices:\n{Prices}\nFactors:\n{Factors}\nNews:\n{News}\n" +
             (mode == TemplateMode::Modify ? "Current strategy:\n{CurrentStrategy}\n" : "") +
             "Respond with a strategy in this language only, e.g.:\n```\n{Examples}```\n";
    return t;
}

} // namespace

const PromptTemplate& registry_template(TemplateMode mode, VolatilityRegime regime) {
    static const PromptTemplate generate_low = make_template(
        "generate-low-vol", TemplateMode::Generate,
        "The market is calm. Write a trading strategy that captures slow trends "
        "using only the inputs below.");
    static const PromptTemplate generate_mid = make_template(
        "generate-mid-vol", TemplateMode::Generate,
        "Write a trading strategy balancing momentum and mean reversion using "
        "only the inputs below.");
    static const PromptTemplate generate_high = make_template(
        "generate-high-vol", TemplateMode::Generate,
        "The market is volatile. Write a defensive trading strategy using only "
        "the inputs below.");
    static const PromptTemplate modify_low = make_template(
        "modify-low-vol", TemplateMode::Modify,
        "The market is calm. Improve the current strategy; prefer fewer, "
        "longer-horizon rules.");
    static const PromptTemplate modify_mid = make_template(
        "modify-mid-vol", TemplateMode::Modify,
        "Improve the current strategy using only the inputs below.");
    static const PromptTemplate modify_high = make_template(
        "modify-high-vol", TemplateMode::Modify,
        "The market is volatile. Improve the current strategy; prefer tighter "
        "thresholds.");
    if (mode == TemplateMode::Generate) {
        switch (regime) {
        case VolatilityRegime::Low: return generate_low;
        case VolatilityRegime::Mid: return generate_mid;
        case VolatilityRegime::High: return generate_high;
        }
    }
    switch (regime) {
    case VolatilityRegime::Low: return modify_low;
    case VolatilityRegime::Mid: return modify_mid;
    case VolatilityRegime::High: return modify_high;
    }
    return generate_mid;
}

std::string extract_strategy_block(const std::string& text) {
    const std::size_t open = text.find("```");
    if (open == std::string::npos) return text;
    std::size_t start = text.find('\n', open);
    if (start == std::string::npos) return text;
    ++start;
    const std::size_t close = text.find("```", start);
    if (close == std::string::npos) return text.substr(start);
    return text.substr(start, close - start);
}

std::string TemplateBackend::complete(const GeneratorRequest& request) {
    // prompt-only entry point: emit the fixed mid-regime skeleton
    (void)request;
    return std::string("```\n") + kExampleStrategies + "```\n";
}

std::string TemplateBackend::complete_for_state(const StructuredState& s) const {
    const VolatilityRegime regime = classify_regime(s.state);
    // thresholds widen with volatility; sentiment gate added when news leans
    double lo = 30, hi = 70;
    if (regime == VolatilityRegime::Low) { lo = 35; hi = 65; }
    if (regime == VolatilityRegime::High) { lo = 25; hi = 75; }
    std::ostringstream out;
    out << "```\n";
    out << "when rsi(14) < " << lo << " then buy\n";
    out << "when rsi(14) > " << hi << " then sell\n";
    if (s.state.news.sentiment < -0.3)
        out << "when sentiment < -0.3 then sell\n";
    out << "else hold\n```\n";
    return out.str();
}

GatewayBackend::GatewayBackend(GatewayConfig config) : config_(std::move(config)) {
    if (config_.url.empty()) throw ConfigError("gateway url not configured");
}

std::string GatewayBackend::complete(const GeneratorRequest& request) {
    const char* key = std::getenv(config_.api_key_env.c_str());

    nlohmann::json body;
    body["model"] = config_.model;
    body["temperature"] = request.temperature;
    body["messages"] = {{{"role", "user"}, {"content", request.prompt}}};
    const std::string payload = body.dump();

    std::ofstream transcript;
    if (!config_.transcript_path.empty())
        transcript.open(config_.transcript_path, std::ios::app);

    std::string last_error;
    int backoff = config_.backoff_initial_ms;
    for (int attempt = 1; attempt <= config_.max_retries; ++attempt) {
        httplib::Client client(config_.url);
        client.set_connection_timeout(0, config_.timeout_ms * 1000);
        client.set_read_timeout(config_.timeout_ms / 1000, (config_.timeout_ms % 1000) * 1000);
        httplib::Headers headers;
        if (key) headers.emplace("Authorization", std::string("Bearer ") + key);

        auto res = client.Post(config_.path, headers, payload, "application/json");
        std::string response_text;
        bool ok = false;
        if (!res) {
            last_error = "transport failure: " + httplib::to_string(res.error());
        } else if (res->status < 200 || res->status >= 300) {
            last_error = "http status " + std::to_string(res->status);
        } else {
            try {
                const auto j = nlohmann::json::parse(res->body);
                response_text =
                    j.at("choices").at(0).at("message").at("content").get<std::string>();
                ok = true;
            } catch (const nlohmann::json::exception& e) {
                last_error = std::string("contract violation: ") + e.what();
            }
        }
        if (transcript.is_open()) {
            nlohmann::json rec;
            rec["attempt"] = attempt;
            rec["timestamp"] = std::chrono::duration_cast<std::chrono::milliseconds>(
                                   std::chrono::system_clock::now().time_since_epoch())
                                   .count();
            rec["request"] = body;
            rec["response"] = ok ? nlohmann::json(response_text) : nlohmann::json();
            rec["error"] = ok ? nlohmann::json() : nlohmann::json(last_error);
            transcript << rec.dump() << '\n';
            transcript.flush();
        }
        if (ok) return response_text;
        if (attempt < config_.max_retries) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
            backoff *= 2;
        }
    }
    throw TransportError("gateway failed after " + std::to_string(config_.max_retries) +
                         " attempts: " + last_error);
}

ReplayBackend::ReplayBackend(const std::string& transcript_path) {
    std::ifstream in(transcript_path);
    if (!in) throw ConfigError("cannot open transcript " + transcript_path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto rec = nlohmann::json::parse(line);
        if (rec.contains("response") && rec["response"].is_string())
            responses_.push_back(rec["response"].get<std::string>());
    }
}

std::string ReplayBackend::complete(const GeneratorRequest& request) {
    (void)request;
    if (next_ >= responses_.size())
        throw TransportError("replay transcript exhausted");
    return responses_[next_++];
}

StrategyAst generate_strategy(const PromptTemplate& tmpl, const StructuredState& state,
                              GeneratorBackend& backend, const FeatureCatalog& catalog,
                              const StrategyAst* current, int* attempts_out) {
    std::string prompt = render_prompt(tmpl, state, current);
    std::string last_diag;
    for (int attempt = 1; attempt <= 3; ++attempt) {
        GeneratorRequest req;
        req.prompt = prompt;
        req.mode = tmpl.mode;
        req.attempt = attempt;
        std::string raw;
        if (auto* tb = dynamic_cast<TemplateBackend*>(&backend))
            raw = tb->complete_for_state(state);
        else
            raw = backend.complete(req);
        const std::string source = extract_strategy_block(raw);
        try {
            StrategyAst ast = parse_strategy(source, catalog);
            if (attempts_out) *attempts_out = attempt;
            return ast;
        } catch (const std::exception& e) {
            last_diag = e.what();
            prompt += "\n\nYour previous answer failed to parse (" + last_diag +
                      "). Emit only valid strategy code.";
        }
    }
    throw GenerationError("generation failed after 3 attempts: " + last_diag);
}

} // namespace factfin

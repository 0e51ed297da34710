#include "factfin/errors.hpp"
#include "factfin/generator.hpp"

#include "test_util.hpp"

#include <httplib.h>

#include <doctest.h>

#include <atomic>
#include <set>
#include <thread>

using namespace factfin;
using namespace testutil;

namespace {

StructuredState structured_state(std::uint64_t seed = 3, std::size_t n = 60) {
    const DatasetBundle bundle = random_bundle(n, seed);
    SnippetIndex index(build_corpus(bundle));
    return retrieve_context(bundle.state_at(n - 1), index, 5);
}

// Scripted backend replaying a fixed list of completions.
class ScriptedBackend final : public GeneratorBackend {
public:
    explicit ScriptedBackend(std::vector<std::string> replies)
        : replies_(std::move(replies)) {}
    std::string name() const override { return "scripted"; }
    std::string complete(const GeneratorRequest& request) override {
        last_prompt = request.prompt;
        ++calls;
        if (calls > int(replies_.size())) throw TransportError("script exhausted");
        return replies_[calls - 1];
    }
    int calls = 0;
    std::string last_prompt;

private:
    std::vector<std::string> replies_;
};

} // namespace

TEST_CASE("template with no placeholders renders verbatim") {
    PromptTemplate t;
    t.id = "plain";
    t.text = "Describe the market regime in one word.";
    CHECK(render_prompt(t, structured_state()) == t.text);
}

TEST_CASE("factor placeholder serializes factors in canonical name order") {
    PromptTemplate t;
    t.id = "factors";
    t.text = "{Factors}";
    const std::string out = render_prompt(t, structured_state());
    const std::size_t kdj = out.find("kdj_k=");
    const std::size_t macd = out.find("macd_hist=");
    const std::size_t rsi = out.find("rsi_14=");
    const std::size_t sma = out.find("sma_50=");
    REQUIRE(kdj != std::string::npos);
    REQUIRE(macd != std::string::npos);
    REQUIRE(rsi != std::string::npos);
    REQUIRE(sma != std::string::npos);
    CHECK(kdj < macd);
    CHECK(macd < rsi);
    CHECK(rsi < sma);
}

TEST_CASE("modify-mode template substitutes the rendered current strategy") {
    PromptTemplate t;
    t.id = "mod";
    t.mode = TemplateMode::Modify;
    t.text = "Improve:\n{CurrentStrategy}";
    const StrategyAst current = parse_strategy("when rsi(14) < 30 then buy\nelse hold");
    const std::string out = render_prompt(t, structured_state(), &current);
    CHECK(out == "Improve:\n" + render_strategy(current));
    // Missing the current strategy is a template error.
    CHECK_THROWS_AS(render_prompt(t, structured_state()), TemplateError);
}

TEST_CASE("unresolvable placeholders raise template errors") {
    PromptTemplate t;
    t.id = "bad";
    t.text = "Use {Wormhole} data.";
    CHECK_THROWS_AS(render_prompt(t, structured_state()), TemplateError);
}

TEST_CASE("prompt rendering is deterministic") {
    const StructuredState s = structured_state(9);
    const PromptTemplate& t =
        registry_template(TemplateMode::Generate, VolatilityRegime::Mid);
    CHECK(render_prompt(t, s) == render_prompt(t, s));
}

TEST_CASE("volatility regime classifier orders calm below volatile markets") {
    std::vector<double> calm, wild;
    double p = 100, q = 100;
    for (int i = 0; i < 40; ++i) {
        p *= (i % 2 == 0) ? 1.001 : 0.999;
        q *= (i % 2 == 0) ? 1.05 : 0.952;
        calm.push_back(p);
        wild.push_back(q);
    }
    CHECK(classify_regime(bundle_from_closes(calm).state_at(39)) ==
          VolatilityRegime::Low);
    CHECK(classify_regime(bundle_from_closes(wild).state_at(39)) ==
          VolatilityRegime::High);
    // Too little history defaults to Mid.
    CHECK(classify_regime(bundle_from_closes({100, 101}).state_at(1)) ==
          VolatilityRegime::Mid);
}

TEST_CASE("registry provides distinct templates per mode and regime") {
    std::set<std::string> ids;
    for (TemplateMode m : {TemplateMode::Generate, TemplateMode::Modify})
        for (VolatilityRegime r :
             {VolatilityRegime::Low, VolatilityRegime::Mid, VolatilityRegime::High}) {
            const PromptTemplate& t = registry_template(m, r);
            CHECK(t.mode == m);
            ids.insert(t.id);
        }
    CHECK(ids.size() == 6);
}

TEST_CASE("extract_strategy_block pulls the first fenced block") {
    CHECK(extract_strategy_block("pre\n```\nelse hold\n```\npost") == "else hold\n");
    CHECK(extract_strategy_block("no fences at all") == "no fences at all");
    CHECK(extract_strategy_block("```\nfirst\n```\n```\nsecond\n```") == "first\n");
}

TEST_CASE("template backend produces a valid AST on the first attempt") {
    const StructuredState s = structured_state(21);
    TemplateBackend backend;
    int attempts = 0;
    const StrategyAst ast =
        generate_strategy(registry_template(TemplateMode::Generate, classify_regime(s.state)),
                          s, backend, FeatureCatalog::defaults(), nullptr, &attempts);
    CHECK(attempts == 1);
    CHECK(!ast.rules.empty());
    CHECK(parse_strategy(render_strategy(ast)) == ast);

    // Fully deterministic: same state, same AST.
    const StrategyAst again = generate_strategy(
        registry_template(TemplateMode::Generate, classify_regime(s.state)), s, backend);
    CHECK(again == ast);
}

TEST_CASE("stub backend returning 'else hold' yields the zero-rule AST") {
    ScriptedBackend backend({"else hold"});
    const StrategyAst ast = generate_strategy(
        registry_template(TemplateMode::Generate, VolatilityRegime::Mid),
        structured_state(), backend);
    CHECK(ast.rules.empty());
    CHECK(ast.default_action == Action::Hold);
}

TEST_CASE("malformed then valid completion succeeds with attempt count 2") {
    ScriptedBackend backend(
        {"I think you should just buy the dip!",
         "```\nwhen rsi(14) < 30 then buy\nelse hold\n```"});
    int attempts = 0;
    const StrategyAst ast = generate_strategy(
        registry_template(TemplateMode::Generate, VolatilityRegime::Mid),
        structured_state(), backend, FeatureCatalog::defaults(), nullptr, &attempts);
    CHECK(attempts == 2);
    CHECK(ast.rules.size() == 1);
    // The retry prompt is annotated with the parse failure.
    CHECK(backend.last_prompt.find("failed to parse") != std::string::npos);
}

TEST_CASE("three malformed completions raise a generation error") {
    ScriptedBackend backend({"junk", "more junk", "when x then y"});
    CHECK_THROWS_AS(
        generate_strategy(registry_template(TemplateMode::Generate, VolatilityRegime::Mid),
                          structured_state(), backend),
        GenerationError);
    CHECK(backend.calls == 3);
}

TEST_CASE("replay backend replays transcript responses in order") {
    TempDir tmp;
    write_file(tmp.path("t.jsonl"),
               R"({"attempt":1,"timestamp":0,"request":{},"response":"```\nelse buy\n```","error":null})"
               "\n"
               R"({"attempt":1,"timestamp":0,"request":{},"response":"```\nelse sell\n```","error":null})"
               "\n"
               R"({"attempt":2,"timestamp":0,"request":{},"response":null,"error":"http status 500"})"
               "\n");
    ReplayBackend backend(tmp.path("t.jsonl"));
    GeneratorRequest req;
    CHECK(extract_strategy_block(backend.complete(req)) == "else buy\n");
    CHECK(extract_strategy_block(backend.complete(req)) == "else sell\n");
    CHECK_THROWS_AS(backend.complete(req), TransportError); // exhausted
}

TEST_CASE("unreachable gateway raises a transport error after bounded retries") {
    GatewayConfig cfg;
    cfg.url = "http://127.0.0.1:9"; // discard port: nothing listens here
    cfg.max_retries = 2;
    cfg.backoff_initial_ms = 1;
    cfg.timeout_ms = 500;
    GatewayBackend backend(cfg);
    GeneratorRequest req;
    req.prompt = "hello";
    CHECK_THROWS_AS(backend.complete(req), TransportError);
}

TEST_CASE("gateway echoes a canned completion from a stub server") {
    httplib::Server server;
    std::atomic<int> hits{0};
    server.Post("/v1/chat/completions",
                [&](const httplib::Request&, httplib::Response& res) {
                    ++hits;
                    res.set_content(
                        R"({"choices":[{"message":{"content":"```\nelse hold\n```"}}]})",
                        "application/json");
                });
    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread worker([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    TempDir tmp;
    GatewayConfig cfg;
    cfg.url = "http://127.0.0.1:" + std::to_string(port);
    cfg.max_retries = 3;
    cfg.backoff_initial_ms = 1;
    cfg.transcript_path = tmp.path("transcript.jsonl");
    GatewayBackend backend(cfg);
    GeneratorRequest req;
    req.prompt = "generate";
    CHECK(backend.complete(req) == "```\nelse hold\n```");
    CHECK(hits == 1);

    // The transcript is sufficient to replay the generation offline.
    ReplayBackend replay(cfg.transcript_path);
    CHECK(replay.complete(req) == "```\nelse hold\n```");

    server.stop();
    worker.join();
}

TEST_CASE("gateway retries through two 500s and succeeds on the third attempt") {
    httplib::Server server;
    std::atomic<int> hits{0};
    server.Post("/v1/chat/completions",
                [&](const httplib::Request&, httplib::Response& res) {
                    const int n = ++hits;
                    if (n <= 2) {
                        res.status = 500;
                        res.set_content("overloaded", "text/plain");
                    } else {
                        res.set_content(
                            R"({"choices":[{"message":{"content":"ok body"}}]})",
                            "application/json");
                    }
                });
    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread worker([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    GatewayConfig cfg;
    cfg.url = "http://127.0.0.1:" + std::to_string(port);
    cfg.max_retries = 3;
    cfg.backoff_initial_ms = 1;
    GatewayBackend backend(cfg);
    GeneratorRequest req;
    CHECK(backend.complete(req) == "ok body");
    CHECK(hits == 3);

    server.stop();
    worker.join();
}

// factfin: command-line front end for the strategy evolution pipeline.
//
// Commands: ingest, backtest, perturb, leakage, evolve, score-bench, audit,
// report. Every command is deterministic given (inputs, config, seed) with
// the template backend; outputs embed the seed and a config content hash.
// Exit codes: 0 success, 2 input/validation error, 3 gateway failure.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "factfin/audit.hpp"
#include "factfin/backtest.hpp"
#include "factfin/errors.hpp"
#include "factfin/generator.hpp"
#include "factfin/leakage.hpp"
#include "factfin/market_data.hpp"
#include "factfin/perturb.hpp"
#include "factfin/retrieval.hpp"
#include "factfin/rng.hpp"
#include "factfin/search.hpp"
#include "factfin/state.hpp"
#include "factfin/strategy.hpp"

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------- config ---

struct RunConfig {
    std::map<std::string, std::string> kv;
    std::string path;
    std::string hash; // content hash of the resolved file

    bool has(const std::string& key) const { return kv.count(key) > 0; }

    std::string get(const std::string& key, const std::string& fallback = "") const {
        auto it = kv.find(key);
        return it == kv.end() ? fallback : it->second;
    }

    double get_num(const std::string& key, double fallback) const {
        auto it = kv.find(key);
        if (it == kv.end()) return fallback;
        try {
            std::size_t pos = 0;
            const double v = std::stod(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw factfin::ConfigError("config key '" + key + "' is not a number: '" +
                                       it->second + "'");
        }
    }

    std::string require(const std::string& key) const {
        auto it = kv.find(key);
        if (it == kv.end())
            throw factfin::ConfigError("config key '" + key + "' is required");
        return it->second;
    }
};

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw factfin::ConfigError("cannot open config file " + path);
    RunConfig cfg;
    cfg.path = path;
    std::string line, all;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        all += line;
        all += '\n';
        const std::size_t hashpos = line.find('#');
        if (hashpos != std::string::npos) line.erase(hashpos);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw factfin::ConfigError(path + ":" + std::to_string(line_no) +
                                       ": expected 'key = value'");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            throw factfin::ConfigError(path + ":" + std::to_string(line_no) +
                                       ": empty key");
        cfg.kv[key] = value;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  (unsigned long long)factfin::fnv1a64(all.data(), all.size()));
    cfg.hash = buf;
    return cfg;
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const std::string t = trim(item);
        if (!t.empty()) out.push_back(t);
    }
    return out;
}

// Paths in the config resolve relative to the config file's directory.
std::string resolve_path(const RunConfig& cfg, const std::string& p) {
    fs::path candidate(p);
    if (candidate.is_absolute() || fs::exists(candidate)) return p;
    const fs::path rel = fs::path(cfg.path).parent_path() / candidate;
    if (fs::exists(rel)) return rel.string();
    return p;
}

// --------------------------------------------------------------- loading ---

factfin::DatasetBundle load_dataset(const RunConfig& cfg) {
    const std::string asset = cfg.get("asset", "ASSET");
    factfin::PriceSeries series =
        factfin::load_ohlcv(resolve_path(cfg, cfg.require("prices")), asset);

    std::vector<factfin::NewsItem> news;
    if (cfg.has("news"))
        news = factfin::load_news_jsonl(resolve_path(cfg, cfg.get("news")));

    factfin::Lexicon lexicon = cfg.has("lexicon")
                                   ? factfin::Lexicon::load(resolve_path(cfg, cfg.get("lexicon")))
                                   : factfin::Lexicon::builtin();

    auto specs = factfin::default_factor_specs();
    auto bundle = factfin::make_bundle(std::move(series), std::move(specs),
                                       std::move(news), std::move(lexicon));
    if (cfg.has("factors")) {
        const auto supplied =
            factfin::load_supplied_factors(resolve_path(cfg, cfg.get("factors")));
        factfin::merge_supplied_factors(bundle.factors, bundle.series, supplied);
    }
    bundle.corpus = factfin::build_corpus(bundle);
    return bundle;
}

std::vector<factfin::PerturbationSpec> scenario_specs(const RunConfig& cfg,
                                                      const factfin::DatasetBundle& bundle) {
    std::vector<factfin::PerturbationSpec> specs;
    const auto kinds = split_csv(cfg.get("scenario_kinds", "price-noise"));
    for (const auto& kind : kinds) {
        factfin::PerturbationSpec spec;
        spec.kind = factfin::perturbation_kind_from_name(kind);
        spec.delta = cfg.get_num("noise_delta", 0.02);
        spec.sigma = cfg.get_num("noise_sigma", 1.0);
        // default targets for the non-price kinds: the whole news set / the
        // sector snippets, with neutral replacements
        switch (spec.kind) {
        case factfin::PerturbationKind::NewsRemove:
            for (std::size_t i = 0; i < bundle.news.size(); ++i)
                spec.news_ids.push_back(i);
            if (spec.news_ids.empty())
                throw factfin::ConfigError("news-remove scenarios need news items");
            break;
        case factfin::PerturbationKind::NewsReplace:
            for (std::size_t i = 0; i < bundle.news.size(); ++i)
                spec.replacement_headlines[i] = "No notable company news.";
            if (spec.replacement_headlines.empty())
                throw factfin::ConfigError("news-replace scenarios need news items");
            break;
        case factfin::PerturbationKind::SectorOverride:
            spec.sector_snippets.push_back(
                {"sector:neutral", "Sector performance mixed, no clear direction.",
                 "sector"});
            break;
        default:
            break;
        }
        specs.push_back(spec);
    }
    return specs;
}

factfin::CostModel cost_model(const RunConfig& cfg) {
    factfin::CostModel cost;
    cost.transaction_cost = cfg.get_num("transaction_cost", cost.transaction_cost);
    cost.slippage = cfg.get_num("slippage", cost.slippage);
    cost.risk_free_rate = cfg.get_num("risk_free_rate", cost.risk_free_rate);
    cost.periods_per_year = cfg.get_num("periods_per_year", cost.periods_per_year);
    cost.annualization = std::sqrt(cost.periods_per_year);
    cost.validate();
    return cost;
}

factfin::SearchConfig search_config(const RunConfig& cfg, std::uint64_t seed) {
    factfin::SearchConfig sc;
    sc.exploration_c = cfg.get_num("exploration_c", 0.5);
    sc.max_depth = (int)cfg.get_num("max_depth", 10);
    sc.budget = (std::size_t)cfg.get_num("budget", 200);
    sc.expansion_width = (int)cfg.get_num("expansion_width", 3);
    sc.eval_points_per_scenario = (std::size_t)cfg.get_num("eval_points", 30);
    sc.tau = cfg.get_num("tau", 1.0);
    sc.weights.alpha = cfg.get_num("alpha", 1.0);
    sc.weights.beta = cfg.get_num("beta", 1.0);
    sc.weights.gamma = cfg.get_num("gamma", 1.0);
    sc.cost = cost_model(cfg);
    sc.initial_capital = cfg.get_num("initial_capital", 100000.0);
    sc.seed = seed;
    return sc;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw factfin::ValidationError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw factfin::ValidationError("cannot write " + path.string());
    out << content;
}

std::string file_hash(const std::string& path) {
    const std::string bytes = read_file(path);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  (unsigned long long)factfin::fnv1a64(bytes.data(), bytes.size()));
    return buf;
}

json run_stamp(const RunConfig& cfg, std::uint64_t seed) {
    return json{{"config_hash", cfg.hash}, {"seed", seed}};
}

// ------------------------------------------------------------------- svg ---

std::string fmt(double v, int precision = 2) {
    std::ostringstream ss;
    ss.setf(std::ios::fixed);
    ss.precision(precision);
    ss << v;
    return ss.str();
}

// Self-contained equity-curve SVG. All numbers formatted at fixed precision
// so identical inputs give byte-identical files.
std::string equity_svg(const std::vector<double>& equity,
                       const std::vector<factfin::Date>& dates,
                       const std::string& title) {
    const int width = 900, height = 420;
    const int ml = 70, mr = 20, mt = 40, mb = 40;
    double lo = equity.empty() ? 0.0 : equity.front();
    double hi = lo;
    for (double v : equity) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi == lo) hi = lo + 1.0;
    const double plot_w = width - ml - mr, plot_h = height - mt - mb;
    auto x_at = [&](std::size_t i) {
        return ml + (equity.size() < 2 ? 0.0
                                       : plot_w * double(i) / double(equity.size() - 1));
    };
    auto y_at = [&](double v) { return mt + plot_h * (1.0 - (v - lo) / (hi - lo)); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
        << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' ' << height
        << "\">\n";
    svg << "<rect width=\"" << width << "\" height=\"" << height
        << "\" fill=\"white\"/>\n";
    svg << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"16\">" << title << "</text>\n";
    // axes
    svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
        << mt + (int)plot_h << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << ml << "\" y1=\"" << mt + (int)plot_h << "\" x2=\""
        << width - mr << "\" y2=\"" << mt + (int)plot_h << "\" stroke=\"black\"/>\n";
    // y gridlines + labels
    for (int g = 0; g <= 4; ++g) {
        const double v = lo + (hi - lo) * g / 4.0;
        const double y = y_at(v);
        svg << "<line x1=\"" << ml << "\" y1=\"" << fmt(y) << "\" x2=\"" << width - mr
            << "\" y2=\"" << fmt(y) << "\" stroke=\"#dddddd\"/>\n";
        svg << "<text x=\"" << ml - 6 << "\" y=\"" << fmt(y + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
            << fmt(v) << "</text>\n";
    }
    // x labels: first and last date
    if (!dates.empty()) {
        svg << "<text x=\"" << ml << "\" y=\"" << height - 12
            << "\" font-family=\"sans-serif\" font-size=\"11\">"
            << factfin::format_date(dates.front()) << "</text>\n";
        svg << "<text x=\"" << width - mr << "\" y=\"" << height - 12
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
            << factfin::format_date(dates.back()) << "</text>\n";
    }
    svg << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < equity.size(); ++i) {
        if (i) svg << ' ';
        svg << fmt(x_at(i)) << ',' << fmt(y_at(equity[i]));
    }
    svg << "\"/>\n</svg>\n";
    return svg.str();
}

// -------------------------------------------------------------- commands ---

int cmd_ingest(const RunConfig& cfg, const std::string& out_dir, std::uint64_t seed) {
    const auto bundle = load_dataset(cfg);
    const fs::path out(out_dir);
    fs::create_directories(out);

    factfin::save_ohlcv(bundle.series, (out / "prices.csv").string());
    factfin::save_news_jsonl(bundle.news, (out / "news.jsonl").string());

    json manifest;
    manifest["schema"] = "factfin.dataset_manifest.v1";
    manifest["asset"] = bundle.series.asset;
    manifest["rows"] = bundle.series.size();
    manifest["news_items"] = bundle.news.size();
    manifest["corpus_snippets"] = bundle.corpus.size();
    manifest["first_date"] = factfin::format_date(bundle.series.bars.front().date);
    manifest["last_date"] = factfin::format_date(bundle.series.bars.back().date);
    manifest["hashes"] = {
        {"prices", file_hash((out / "prices.csv").string())},
        {"news", file_hash((out / "news.jsonl").string())},
    };
    json factors = json::array();
    for (const auto& [name, _] : bundle.factors.values)
        factors.push_back({{"name", name},
                           {"provenance", bundle.factors.provenance.at(name)}});
    manifest["factors"] = factors;
    manifest["run"] = run_stamp(cfg, seed);
    write_file(out / "dataset_manifest.json", manifest.dump(2) + "\n");
    std::cout << "ingested " << bundle.series.size() << " bars, " << bundle.news.size()
              << " news items -> " << out_dir << "\n";
    return 0;
}

int cmd_backtest(const RunConfig& cfg, const std::string& strategy_path,
                 const std::string& out_dir, std::uint64_t seed) {
    const auto bundle = load_dataset(cfg);
    const auto ast = factfin::parse_strategy(read_file(strategy_path));
    const auto cost = cost_model(cfg);
    const auto result =
        factfin::run_backtest(ast, bundle, cost, cfg.get_num("initial_capital", 100000.0));

    std::vector<factfin::Date> dates;
    for (const auto& bar : bundle.series.bars) dates.push_back(bar.date);

    const fs::path out(out_dir);
    json report = json::parse(factfin::backtest_result_to_json(result, dates));
    report["strategy_id"] = ast.id();
    report["run"] = run_stamp(cfg, seed);
    write_file(out / "backtest_result.json", report.dump(2) + "\n");
    write_file(out / "equity.csv", factfin::equity_curve_csv(result, dates));
    write_file(out / "equity.svg",
               equity_svg(result.equity, dates,
                          bundle.series.asset + " cumulative equity"));
    std::cout << "TR " << result.total_return << "  MDD " << result.max_drawdown;
    if (result.sharpe_defined) std::cout << "  SR " << result.sharpe;
    std::cout << "\n";
    return 0;
}

int cmd_perturb(const RunConfig& cfg, const std::string& out_dir, std::uint64_t seed) {
    const auto bundle = load_dataset(cfg);
    const auto specs = scenario_specs(cfg, bundle);
    const std::size_t n_per = (std::size_t)cfg.get_num("scenarios_per_kind", 50);
    const auto set = factfin::make_scenario_set(bundle, specs, n_per, seed);

    const fs::path out(out_dir);
    json manifest = json::parse(factfin::scenario_manifest_json(set, seed));
    manifest["run"] = run_stamp(cfg, seed);
    write_file(out / "scenario_manifest.json", manifest.dump(2) + "\n");

    json stats = json::array();
    for (const auto& sc : set.scenarios) {
        const auto report = factfin::verify_statistics(bundle, sc.dataset, {},
                                                       sc.spec.t_begin, sc.spec.t_end);
        json entry;
        entry["scenario"] = sc.id;
        entry["all_pass"] = report.all_pass();
        json rows = json::array();
        for (const auto& e : report.entries)
            rows.push_back({{"statistic", e.statistic},
                            {"original", e.original},
                            {"counterfactual", e.counterfactual},
                            {"relative_deviation", e.relative_deviation},
                            {"tolerance", e.tolerance},
                            {"pass", e.pass}});
        entry["entries"] = rows;
        stats.push_back(entry);
    }
    write_file(out / "stat_reports.json",
               json{{"schema", "factfin.stat_reports.v1"},
                    {"run", run_stamp(cfg, seed)},
                    {"reports", stats}}
                       .dump(2) +
                   "\n");
    std::cout << set.scenarios.size() << " scenarios -> " << out_dir << "\n";
    return 0;
}

int cmd_leakage(const RunConfig& cfg, const std::string& strategy_path,
                const std::string& out_dir, std::uint64_t seed) {
    const auto bundle = load_dataset(cfg);
    const auto ast = factfin::parse_strategy(read_file(strategy_path),
                                             factfin::FeatureCatalog::with_calendar());
    const auto specs = scenario_specs(cfg, bundle);
    const std::size_t n_per = (std::size_t)cfg.get_num("scenarios_per_kind", 50);
    const auto set = factfin::make_scenario_set(bundle, specs, n_per, seed);

    const auto sc = search_config(cfg, seed);
    const auto points = factfin::stratified_eval_points(
        bundle.size(), sc.eval_points_per_scenario, bundle.price_window);
    const auto pairs = factfin::paired_evaluate(ast, set, points, sc.tau);
    const auto report = factfin::make_leakage_report(pairs, sc.weights);

    const fs::path out(out_dir);
    json j = json::parse(factfin::leakage_report_to_json(report));
    j["strategy_id"] = ast.id();
    j["run"] = run_stamp(cfg, seed);
    write_file(out / "leakage_report.json", j.dump(2) + "\n");
    write_file(out / "leakage_report.csv",
               "strategy_id,scenario_set,pc,ci,ids,n,m,objective\n" +
                   factfin::leakage_report_csv_row(ast.id(), "generated", report) + "\n");
    std::cout << "PC " << report.pc << "  IDS " << report.ids << "  objective "
              << report.objective << "\n";
    return 0;
}

int cmd_evolve(const RunConfig& cfg, const std::string& strategy_path,
               const std::string& backend, const std::string& out_dir,
               std::uint64_t seed) {
    const auto bundle = load_dataset(cfg);

    factfin::StrategyAst initial;
    if (!strategy_path.empty()) {
        initial = factfin::parse_strategy(read_file(strategy_path));
    } else if (backend == "template") {
        // seed the search from the deterministic generator
        factfin::SnippetIndex index(bundle.corpus);
        const auto state = factfin::retrieve_context(
            bundle.state_at(bundle.size() - 1), index);
        factfin::TemplateBackend tb;
        initial = factfin::generate_strategy(
            factfin::registry_template(factfin::TemplateMode::Generate,
                                       factfin::classify_regime(state.state)),
            state, tb);
    } else {
        throw factfin::ConfigError(
            "backend '" + backend + "' requires an explicit --strategy seed file");
    }

    const auto specs = scenario_specs(cfg, bundle);
    const std::size_t n_per = (std::size_t)cfg.get_num("scenarios_per_kind", 50);
    const auto set = factfin::make_scenario_set(bundle, specs, n_per, seed);

    const auto sc = search_config(cfg, seed);
    const auto result = factfin::evolve(initial, bundle, set, sc);

    const fs::path out(out_dir);
    json j = json::parse(factfin::evolution_result_to_json(result, sc));
    j["run"] = run_stamp(cfg, seed);
    write_file(out / "evolution_result.json", j.dump(2) + "\n");
    write_file(out / "best.strat", factfin::render_strategy(result.best));
    if (result.leakage)
        write_file(out / "leakage_report.json",
                   factfin::leakage_report_to_json(*result.leakage) + "\n");

    // summary table: TR / SR / MDD / PC / CI / IDS
    std::ostringstream table;
    table.precision(17);
    table << "strategy_id,tr,sr,mdd,pc,ci,ids\n";
    table << result.best.id() << ',' << result.best_backtest.total_return << ',';
    if (result.best_backtest.sharpe_defined) table << result.best_backtest.sharpe;
    table << ',' << result.best_backtest.max_drawdown << ',';
    if (result.leakage) {
        table << result.leakage->pc << ',';
        if (result.leakage->ci) table << *result.leakage->ci;
        table << ',' << result.leakage->ids;
    } else {
        table << ",,";
    }
    table << '\n';
    write_file(out / "summary.csv", table.str());
    std::cout << "best " << result.best.id() << " reward " << result.best_reward
              << " (root " << result.root_reward << ")\n";
    return 0;
}

int cmd_score_bench(const std::string& items_path, const std::string& answers_path,
                    const std::string& out_dir) {
    const auto items = factfin::load_qa_items(items_path);
    const auto answers = factfin::load_answers_jsonl(answers_path);
    const auto report = factfin::bench_accuracy(items, answers);

    const fs::path out(out_dir);
    write_file(out / "bench_report.json", factfin::bench_report_to_json(report) + "\n");
    write_file(out / "bench_categories.csv", factfin::bench_report_category_csv(report));
    std::cout << "accuracy " << report.accuracy << " over " << report.item_count
              << " items (" << report.unanswered.size() << " unanswered)\n";
    return 0;
}

int cmd_audit(const std::string& inputs_path, const std::string& out_dir) {
    json j;
    {
        std::ifstream in(inputs_path);
        if (!in) throw factfin::ValidationError("cannot open " + inputs_path);
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw factfin::ParseError(inputs_path + ": " + e.what());
        }
    }
    json report;
    report["schema"] = "factfin.audit_report.v1";
    if (j.contains("f_train") && j.contains("p_score"))
        report["bias"] = factfin::bias_score(j["f_train"].get<std::vector<double>>(),
                                             j["p_score"].get<std::vector<double>>());
    if (j.contains("model_vectors") && j.contains("hist_vectors"))
        report["memory"] = factfin::memory_score(
            j["model_vectors"].get<std::vector<std::vector<double>>>(),
            j["hist_vectors"].get<std::vector<std::vector<double>>>());
    if (j.contains("acc_pre") && j.contains("acc_post"))
        report["generalization_change_pct"] = factfin::generalization_change(
            j["acc_pre"].get<double>(), j["acc_post"].get<double>());
    write_file(fs::path(out_dir) / "audit_report.json", report.dump(2) + "\n");
    std::cout << report.dump(2) << "\n";
    return 0;
}

int cmd_report(const std::string& run_dir, const std::string& out_dir) {
    // fold whatever artifacts the run directory holds into one summary
    json summary;
    summary["schema"] = "factfin.run_summary.v1";
    const fs::path run(run_dir);
    for (const char* name : {"backtest_result.json", "leakage_report.json",
                             "evolution_result.json", "bench_report.json",
                             "audit_report.json", "dataset_manifest.json"}) {
        const fs::path p = run / name;
        if (!fs::exists(p)) continue;
        std::ifstream in(p);
        json j;
        in >> j;
        std::string key = name;
        key.erase(key.find(".json"));
        summary[key] = j;
    }
    if (summary.size() == 1)
        throw factfin::ValidationError("no report artifacts found in " + run_dir);
    write_file(fs::path(out_dir) / "run_summary.json", summary.dump(2) + "\n");
    std::cout << "summary written to " << out_dir << "/run_summary.json\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"factfin: counterfactual strategy evolution toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", backend = "template";
    std::uint64_t seed = 0;
    app.add_option("--config", config_path, "run configuration file (key = value)");
    app.add_option("--seed", seed, "master RNG seed");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--backend", backend, "strategy generator backend")
        ->check(CLI::IsMember({"template", "gateway", "replay"}));

    std::string strategy_path, items_path, answers_path, inputs_path, run_dir;

    auto* ingest = app.add_subcommand("ingest", "validate and stage a dataset");
    auto* backtest = app.add_subcommand("backtest", "run a strategy backtest");
    backtest->add_option("--strategy", strategy_path, "strategy .strat file")->required();
    auto* perturb = app.add_subcommand("perturb", "generate counterfactual scenarios");
    auto* leakage = app.add_subcommand("leakage", "score a strategy's leakage metrics");
    leakage->add_option("--strategy", strategy_path, "strategy .strat file")->required();
    auto* evolve = app.add_subcommand("evolve", "MCTS strategy evolution");
    evolve->add_option("--strategy", strategy_path, "initial strategy (optional)");
    auto* score = app.add_subcommand("score-bench", "score QA benchmark answers");
    score->add_option("--items", items_path, "QA items JSON")->required();
    score->add_option("--answers", answers_path, "answers JSONL")->required();
    auto* audit = app.add_subcommand("audit", "bias/memory/generalization metrics");
    audit->add_option("--inputs", inputs_path, "audit inputs JSON")->required();
    auto* report = app.add_subcommand("report", "fold run artifacts into a summary");
    report->add_option("--run", run_dir, "directory with run artifacts")->required();

    // let the global --config/--seed/--out/--backend appear after the subcommand
    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        auto need_config = [&]() -> RunConfig {
            if (config_path.empty())
                throw factfin::ConfigError("--config is required for this command");
            return load_config(config_path);
        };
        if (ingest->parsed()) return cmd_ingest(need_config(), out_dir, seed);
        if (backtest->parsed())
            return cmd_backtest(need_config(), strategy_path, out_dir, seed);
        if (perturb->parsed()) return cmd_perturb(need_config(), out_dir, seed);
        if (leakage->parsed())
            return cmd_leakage(need_config(), strategy_path, out_dir, seed);
        if (evolve->parsed())
            return cmd_evolve(need_config(), strategy_path, backend, out_dir, seed);
        if (score->parsed()) return cmd_score_bench(items_path, answers_path, out_dir);
        if (audit->parsed()) return cmd_audit(inputs_path, out_dir);
        if (report->parsed()) return cmd_report(run_dir, out_dir);
    } catch (const factfin::TransportError& e) {
        std::cerr << "gateway error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

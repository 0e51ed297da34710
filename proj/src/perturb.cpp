#include "factfin/perturb.hpp"

#include "factfin/errors.hpp"
#include "factfin/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace factfin {

const char* perturbation_kind_name(PerturbationKind k) {
    switch (k) {
    case PerturbationKind::PriceNoise: return "price-noise";
    case PerturbationKind::PriceRandomWalk: return "price-random-walk";
    case PerturbationKind::PriceHistoricalAverage: return "price-historical-average";
    case PerturbationKind::IndicatorOverride: return "indicator-override";
    case PerturbationKind::NewsRemove: return "news-remove";
    case PerturbationKind::NewsReplace: return "news-replace";
    case PerturbationKind::SectorOverride: return "sector-override";
    }
    return "?";
}

PerturbationKind perturbation_kind_from_name(const std::string& name) {
    for (int i = 0; i <= static_cast<int>(PerturbationKind::SectorOverride); ++i) {
        const auto k = static_cast<PerturbationKind>(i);
        if (name == perturbation_kind_name(k)) return k;
    }
    throw ConfigError("unknown perturbation kind '" + name + "'");
}

namespace {

// All price fields scale together so bar-shape invariants survive.
void scale_bar(PriceBar& bar, double factor) {
    if (!(factor > 0))
        throw ValidationError("price perturbation factor non-positive at " +
                              format_date(bar.date) + " (unrepairable bar)");
    bar.open *= factor;
    bar.high *= factor;
    bar.low *= factor;
    bar.close *= factor;
    bar.adj_close *= factor;
}

std::pair<std::size_t, std::size_t> resolve_range(const PerturbationSpec& spec,
                                                  std::size_t n) {
    const std::size_t begin = spec.t_begin.value_or(0);
    const std::size_t end = spec.t_end.value_or(n > 0 ? n - 1 : 0);
    if (n == 0 || begin > end || end >= n)
        throw EmptyTargetError("perturbation time range resolves to nothing");
    return {begin, end};
}

// Sample std (n-1) of log returns over closes[begin..end].
double segment_log_vol(const std::vector<PriceBar>& bars, std::size_t begin,
                       std::size_t end) {
    std::vector<double> lr;
    for (std::size_t t = begin + 1; t <= end; ++t)
        lr.push_back(std::log(bars[t].close / bars[t - 1].close));
    if (lr.size() < 2) return 0.0;
    double mean = 0;
    for (double r : lr) mean += r;
    mean /= double(lr.size());
    double var = 0;
    for (double r : lr) var += (r - mean) * (r - mean);
    var /= double(lr.size() - 1);
    return std::sqrt(var);
}

} // namespace

DatasetBundle perturb(const DatasetBundle& dataset, const PerturbationSpec& spec) {
    DatasetBundle out = dataset;
    if (spec.delta < 0 || spec.sigma < 0)
        throw ConfigError("delta and sigma must be >= 0");
    if (spec.delta == 0.0) return out; // zero perturbation is the identity, all kinds

    switch (spec.kind) {
    case PerturbationKind::PriceNoise: {
        const auto [begin, end] = resolve_range(spec, out.series.bars.size());
        CounterRng rng(spec.seed);
        for (std::size_t t = begin; t <= end; ++t) {
            const double eps = rng.next_normal() * spec.sigma;
            scale_bar(out.series.bars[t], 1.0 + spec.delta * eps);
        }
        validate_series(out.series);
        recompute_factors(out);
        break;
    }
    case PerturbationKind::PriceRandomWalk: {
        const auto [begin, end] = resolve_range(spec, out.series.bars.size());
        const double vol = segment_log_vol(dataset.series.bars, begin, end);
        CounterRng rng(spec.seed);
        double prev = dataset.series.bars[begin].close; // anchored start
        for (std::size_t t = begin + 1; t <= end; ++t) {
            const double next = prev * std::exp(vol * rng.next_normal());
            scale_bar(out.series.bars[t], next / dataset.series.bars[t].close);
            prev = next;
        }
        validate_series(out.series);
        recompute_factors(out);
        break;
    }
    case PerturbationKind::PriceHistoricalAverage: {
        const auto [begin, end] = resolve_range(spec, out.series.bars.size());
        const std::size_t w = std::max<std::size_t>(1, spec.trailing_window);
        for (std::size_t t = begin; t <= end; ++t) {
            const std::size_t lo = t + 1 >= w ? t + 1 - w : 0;
            double mean = 0;
            for (std::size_t u = lo; u <= t; ++u) mean += dataset.series.bars[u].close;
            mean /= double(t - lo + 1);
            scale_bar(out.series.bars[t], mean / dataset.series.bars[t].close);
        }
        validate_series(out.series);
        recompute_factors(out);
        break;
    }
    case PerturbationKind::IndicatorOverride: {
        if (spec.overrides.empty())
            throw EmptyTargetError("indicator-override with no override payload");
        for (const auto& [name, points] : spec.overrides) {
            auto it = out.factors.values.find(name);
            if (it == out.factors.values.end())
                throw EmptyTargetError("indicator-override target '" + name +
                                       "' not in dataset");
            for (const auto& [t, value] : points) {
                if (t >= it->second.size())
                    throw EmptyTargetError("indicator-override index out of range for '" +
                                           name + "'");
                it->second[t] = value;
            }
            out.factors.provenance[name] = "supplied";
        }
        break;
    }
    case PerturbationKind::NewsRemove: {
        if (spec.news_ids.empty())
            throw EmptyTargetError("news-remove with no target ids");
        std::vector<NewsItem> kept;
        for (std::size_t i = 0; i < out.news.size(); ++i)
            if (std::find(spec.news_ids.begin(), spec.news_ids.end(), i) ==
                spec.news_ids.end())
                kept.push_back(out.news[i]);
        if (kept.size() == out.news.size())
            throw EmptyTargetError("news-remove ids resolve to nothing");
        out.news = std::move(kept);
        break;
    }
    case PerturbationKind::NewsReplace: {
        if (spec.replacement_headlines.empty())
            throw EmptyTargetError("news-replace with no replacement payload");
        for (const auto& [idx, headline] : spec.replacement_headlines) {
            if (idx >= out.news.size())
                throw EmptyTargetError("news-replace id out of range");
            out.news[idx].headline = headline;
            out.news[idx].body.clear();
        }
        break;
    }
    case PerturbationKind::SectorOverride: {
        if (spec.sector_snippets.empty())
            throw EmptyTargetError("sector-override with no snippets");
        std::erase_if(out.corpus, [](const Snippet& s) { return s.kind == "sector"; });
        for (const auto& s : spec.sector_snippets) out.corpus.push_back(s);
        break;
    }
    }
    return out;
}

ScenarioSet make_scenario_set(const DatasetBundle& dataset,
                              const std::vector<PerturbationSpec>& specs,
                              std::size_t n_per_spec, std::uint64_t master_seed) {
    if (n_per_spec < 1) throw ConfigError("n_per_spec must be >= 1");
    ScenarioSet set;
    set.original = &dataset;
    std::map<std::string, std::size_t> kind_counter;
    std::uint64_t stream = 0;
    for (const auto& base_spec : specs) {
        for (std::size_t i = 0; i < n_per_spec; ++i) {
            PerturbationSpec spec = base_spec;
            spec.seed = derive_seed(master_seed, stream++);
            const std::string kind = perturbation_kind_name(spec.kind);
            Scenario sc;
            sc.id = kind + "-" + std::to_string(kind_counter[kind]++);
            sc.spec = spec;
            sc.dataset = perturb(dataset, spec);
            sc.provenance = "generated";
            set.scenarios.push_back(std::move(sc));
        }
    }
    return set;
}

// --- authored scenarios ----------------------------------------------------

namespace {

const std::vector<std::string> kElementNames = {"market_news", "price_data",
                                                "technical_indicators",
                                                "sector_performance"};

void check_keys(const nlohmann::json& obj, const std::vector<std::string>& allowed,
                const std::string& where) {
    for (const auto& [key, _] : obj.items())
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ValidationError("unknown field '" + key + "' in " + where);
}

AuthoredElement parse_element(const std::string& name, const nlohmann::json& j) {
    check_keys(j, {"original", "counterfactual"}, "element '" + name + "'");
    if (!j.contains("original") || !j.contains("counterfactual"))
        throw ValidationError("element '" + name +
                              "' must have 'original' and 'counterfactual'");
    AuthoredElement e;
    const auto& o = j.at("original");
    const auto& c = j.at("counterfactual");
    if (name == "price_data") {
        e.original_prices = o.get<std::vector<double>>();
        e.counterfactual_prices = c.get<std::vector<double>>();
        if (e.original_prices.size() != e.counterfactual_prices.size())
            throw ValidationError("price_data original/counterfactual length mismatch");
    } else if (name == "technical_indicators") {
        for (const auto& [k, v] : o.items()) e.original_indicators[k] = v.get<double>();
        for (const auto& [k, v] : c.items()) e.counterfactual_indicators[k] = v.get<double>();
    } else {
        e.original_text = o.get<std::string>();
        e.counterfactual_text = c.get<std::string>();
    }
    return e;
}

nlohmann::json element_to_json(const std::string& name, const AuthoredElement& e) {
    nlohmann::json j;
    if (name == "price_data") {
        j["original"] = e.original_prices;
        j["counterfactual"] = e.counterfactual_prices;
    } else if (name == "technical_indicators") {
        j["original"] = e.original_indicators;
        j["counterfactual"] = e.counterfactual_indicators;
    } else {
        j["original"] = e.original_text;
        j["counterfactual"] = e.counterfactual_text;
    }
    return j;
}

} // namespace

AuthoredScenarioFile load_authored_scenarios(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path + ": " + e.what());
    }
    check_keys(j, {"schema", "scenarios"}, "scenario file");
    AuthoredScenarioFile file;
    file.schema_version = j.at("schema").get<std::string>();
    if (file.schema_version != "factfin.scenarios.v1")
        throw ValidationError("unsupported schema '" + file.schema_version + "'");
    for (const auto& js : j.at("scenarios")) {
        check_keys(js, {"id", "asset", "date", "elements"}, "scenario");
        AuthoredScenario sc;
        sc.id = js.at("id").get<std::string>();
        sc.asset = js.at("asset").get<std::string>();
        sc.date = parse_date(js.at("date").get<std::string>());
        check_keys(js.at("elements"), kElementNames, "scenario '" + sc.id + "' elements");
        for (const auto& [name, je] : js.at("elements").items())
            sc.elements[name] = parse_element(name, je);
        file.scenarios.push_back(std::move(sc));
    }
    return file;
}

std::string authored_scenarios_to_json(const AuthoredScenarioFile& file) {
    nlohmann::json j;
    j["schema"] = file.schema_version;
    j["scenarios"] = nlohmann::json::array();
    for (const auto& sc : file.scenarios) {
        nlohmann::json js;
        js["id"] = sc.id;
        js["asset"] = sc.asset;
        js["date"] = format_date(sc.date);
        nlohmann::json elements;
        for (const auto& [name, e] : sc.elements) elements[name] = element_to_json(name, e);
        js["elements"] = elements;
        j["scenarios"].push_back(js);
    }
    return j.dump(2);
}

void save_authored_scenarios(const AuthoredScenarioFile& file, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path);
    out << authored_scenarios_to_json(file) << '\n';
}

ScenarioSet materialize_scenarios(const AuthoredScenarioFile& file,
                                  const DatasetBundle& base) {
    ScenarioSet set;
    set.original = &base;
    for (const auto& sc : file.scenarios) {
        auto it = std::lower_bound(
            base.series.bars.begin(), base.series.bars.end(), sc.date,
            [](const PriceBar& b, Date d) { return b.date < d; });
        if (it == base.series.bars.end() || !(it->date == sc.date))
            throw RangeError("scenario '" + sc.id + "' date " + format_date(sc.date) +
                             " not in base dataset");
        const std::size_t t = static_cast<std::size_t>(it - base.series.bars.begin());

        DatasetBundle variant = base;
        bool prices_changed = false;
        for (const auto& [name, e] : sc.elements) {
            if (name == "price_data") {
                const std::size_t n = e.counterfactual_prices.size();
                if (t + 1 < n)
                    throw RangeError("scenario '" + sc.id +
                                     "' price window precedes dataset start");
                for (std::size_t i = 0; i < n; ++i) {
                    const std::size_t u = t + 1 - n + i;
                    scale_bar(variant.series.bars[u],
                              e.counterfactual_prices[i] / base.series.bars[u].close);
                }
                prices_changed = true;
            } else if (name == "technical_indicators") {
                for (const auto& [factor, value] : e.counterfactual_indicators) {
                    auto& col = variant.factors.values[factor];
                    if (col.size() != variant.series.bars.size())
                        col.assign(variant.series.bars.size(), std::nullopt);
                    col[t] = value;
                    variant.factors.provenance[factor] = "supplied";
                }
            } else if (name == "market_news") {
                NewsItem item;
                item.date = sc.date;
                item.asset = sc.asset;
                item.headline = e.counterfactual_text;
                item.source = "scenario:" + sc.id;
                std::erase_if(variant.news, [&](const NewsItem& n) {
                    return n.date == sc.date && n.asset == sc.asset;
                });
                variant.news.push_back(std::move(item));
            } else if (name == "sector_performance") {
                std::erase_if(variant.corpus,
                              [](const Snippet& s) { return s.kind == "sector"; });
                variant.corpus.push_back(
                    {"sector:" + sc.id, e.counterfactual_text, "sector"});
            }
        }
        if (prices_changed) {
            validate_series(variant.series);
            // keep authored indicator overrides: apply them after recompute
            auto saved = variant.factors;
            recompute_factors(variant);
            if (auto el = sc.elements.find("technical_indicators"); el != sc.elements.end())
                for (const auto& [factor, value] : el->second.counterfactual_indicators) {
                    auto& col = variant.factors.values[factor];
                    if (col.size() != variant.series.bars.size())
                        col.assign(variant.series.bars.size(), std::nullopt);
                    col[t] = value;
                    variant.factors.provenance[factor] = "supplied";
                }
        }
        Scenario scenario;
        scenario.id = sc.id;
        scenario.spec.kind = PerturbationKind::IndicatorOverride; // literal overrides
        scenario.spec.delta = 1.0;
        scenario.dataset = std::move(variant);
        scenario.provenance = "authored";
        set.scenarios.push_back(std::move(scenario));
    }
    return set;
}

std::string scenario_manifest_json(const ScenarioSet& set, std::uint64_t master_seed) {
    nlohmann::json j;
    j["schema"] = "factfin.scenario_manifest.v1";
    j["master_seed"] = master_seed;
    j["scenarios"] = nlohmann::json::array();
    for (const auto& sc : set.scenarios) {
        nlohmann::json js;
        js["id"] = sc.id;
        js["kind"] = perturbation_kind_name(sc.spec.kind);
        js["delta"] = sc.spec.delta;
        js["sigma"] = sc.spec.sigma;
        js["seed"] = sc.spec.seed;
        js["provenance"] = sc.provenance;
        if (sc.spec.t_begin) js["t_begin"] = *sc.spec.t_begin;
        if (sc.spec.t_end) js["t_end"] = *sc.spec.t_end;
        j["scenarios"].push_back(js);
    }
    return j.dump(2);
}

// --- statistics -------------------------------------------------------------

bool StatReport::all_pass() const {
    return std::all_of(entries.begin(), entries.end(),
                       [](const StatEntry& e) { return e.pass; });
}

StatReport verify_statistics(const DatasetBundle& original, const DatasetBundle& perturbed,
                             const StatTolerances& tolerances,
                             std::optional<std::size_t> t_begin,
                             std::optional<std::size_t> t_end) {
    const auto& ob = original.series.bars;
    const auto& pb = perturbed.series.bars;
    if (ob.size() != pb.size())
        throw ValidationError("datasets not aligned for statistics check");
    const std::size_t begin = t_begin.value_or(0);
    const std::size_t end = t_end.value_or(ob.size() - 1);
    if (begin > end || end >= ob.size())
        throw RangeError("statistics range out of bounds");

    auto mean_close = [&](const std::vector<PriceBar>& bars) {
        double m = 0;
        for (std::size_t t = begin; t <= end; ++t) m += bars[t].close;
        return m / double(end - begin + 1);
    };
    auto rel_dev = [](double orig, double cf) {
        const double denom = std::max(std::abs(orig), 1e-12);
        return std::abs(cf - orig) / denom;
    };

    StatReport report;
    {
        StatEntry e;
        e.statistic = "segment_mean";
        e.original = mean_close(ob);
        e.counterfactual = mean_close(pb);
        e.relative_deviation = rel_dev(e.original, e.counterfactual);
        e.tolerance = tolerances.mean;
        e.pass = e.relative_deviation <= e.tolerance;
        report.entries.push_back(e);
    }
    {
        StatEntry e;
        e.statistic = "per_step_volatility";
        e.original = segment_log_vol(ob, begin, end);
        e.counterfactual = segment_log_vol(pb, begin, end);
        e.relative_deviation = rel_dev(e.original, e.counterfactual);
        e.tolerance = tolerances.volatility;
        e.pass = e.relative_deviation <= e.tolerance;
        report.entries.push_back(e);
    }
    {
        StatEntry e;
        e.statistic = "anchor_price";
        e.original = ob[begin].close;
        e.counterfactual = pb[begin].close;
        e.relative_deviation = rel_dev(e.original, e.counterfactual);
        e.tolerance = tolerances.anchor;
        e.pass = e.relative_deviation <= e.tolerance;
        report.entries.push_back(e);
    }
    return report;
}

} // namespace factfin

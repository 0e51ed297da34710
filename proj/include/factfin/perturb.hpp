#pragma once

#include "factfin/state.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace factfin {

enum class PerturbationKind {
    PriceNoise,          // close *= 1 + delta * eps_t, eps ~ N(0, sigma^2)
    PriceRandomWalk,     // segment replaced by seeded walk, volatility matched
    PriceHistoricalAverage, // segment replaced by trailing-mean path
    IndicatorOverride,   // named factors set to supplied literals
    NewsRemove,
    NewsReplace,
    SectorOverride       // sector snippets in the retrieval corpus replaced
};

const char* perturbation_kind_name(PerturbationKind k);
PerturbationKind perturbation_kind_from_name(const std::string& name);

struct PerturbationSpec {
    PerturbationKind kind = PerturbationKind::PriceNoise;
    double delta = 0.0; // magnitude, semantics per kind (see docs/schemas.md)
    double sigma = 1.0; // noise scale for price-noise
    std::uint64_t seed = 0;

    // target selectors
    std::optional<std::size_t> t_begin, t_end; // bar range [t_begin, t_end], inclusive
    std::vector<std::string> factor_names;     // indicator-override targets
    std::vector<std::size_t> news_ids;         // news-remove/replace targets

    // indicator-override payload: factor -> [(bar index, value)]
    std::map<std::string, std::vector<std::pair<std::size_t, double>>> overrides;
    // news-replace payload: news id -> replacement headline
    std::map<std::size_t, std::string> replacement_headlines;
    // sector-override payload
    std::vector<Snippet> sector_snippets;

    // trailing-mean window for price-historical-average
    std::size_t trailing_window = 5;
};

DatasetBundle perturb(const DatasetBundle& dataset, const PerturbationSpec& spec);

struct Scenario {
    std::string id;
    PerturbationSpec spec;
    DatasetBundle dataset;
    std::string provenance; // "generated" | "authored"
};

struct ScenarioSet {
    const DatasetBundle* original = nullptr; // non-owning
    std::vector<Scenario> scenarios;
};

// n_per_spec seeded scenarios per spec; ids "{kind}-{index}"; per-scenario
// seeds derived via splitmix from the master seed.
ScenarioSet make_scenario_set(const DatasetBundle& dataset,
                              const std::vector<PerturbationSpec>& specs,
                              std::size_t n_per_spec, std::uint64_t master_seed);

// Authored scenarios: original/counterfactual element pairs
// (market_news, price_data, technical_indicators, sector_performance).
struct AuthoredElement {
    std::string original_text, counterfactual_text;       // news / sector
    std::vector<double> original_prices, counterfactual_prices; // 5-day closes
    std::map<std::string, double> original_indicators, counterfactual_indicators;
};

struct AuthoredScenario {
    std::string id;
    std::string asset;
    Date date;
    std::map<std::string, AuthoredElement> elements; // keyed by element name
};

struct AuthoredScenarioFile {
    std::string schema_version;
    std::vector<AuthoredScenario> scenarios;
};

// Strict schema: unknown fields are errors naming the field.
AuthoredScenarioFile load_authored_scenarios(const std::string& path);
void save_authored_scenarios(const AuthoredScenarioFile& file, const std::string& path);
std::string authored_scenarios_to_json(const AuthoredScenarioFile& file);

// Materialize authored scenarios as literal overrides on the base dataset.
// price_data closes apply to the 5 bars ending at the scenario date.
ScenarioSet materialize_scenarios(const AuthoredScenarioFile& file,
                                  const DatasetBundle& base);

// Generated-set manifest (specs + derived seeds; datasets are regenerable).
std::string scenario_manifest_json(const ScenarioSet& set, std::uint64_t master_seed);

struct StatEntry {
    std::string statistic;
    double original = 0;
    double counterfactual = 0;
    double relative_deviation = 0;
    double tolerance = 0;
    bool pass = false;
};

struct StatReport {
    std::vector<StatEntry> entries;
    bool all_pass() const;
};

struct StatTolerances {
    double mean = 0.05;
    double volatility = 0.10;
    double anchor = 1e-12; // first value of the perturbed segment
};

// Compares segment mean, per-step log-return volatility, and anchor price
// over [t_begin, t_end] (whole series when the spec has no range).
StatReport verify_statistics(const DatasetBundle& original, const DatasetBundle& perturbed,
                             const StatTolerances& tolerances,
                             std::optional<std::size_t> t_begin = std::nullopt,
                             std::optional<std::size_t> t_end = std::nullopt);

} // namespace factfin

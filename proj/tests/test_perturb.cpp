#include "factfin/errors.hpp"
#include "factfin/perturb.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace factfin;
using namespace testutil;

namespace {

void check_bundles_identical(const DatasetBundle& a, const DatasetBundle& b) {
    REQUIRE(a.series.bars.size() == b.series.bars.size());
    for (std::size_t i = 0; i < a.series.bars.size(); ++i) {
        CHECK(a.series.bars[i].date == b.series.bars[i].date);
        CHECK(a.series.bars[i].open == b.series.bars[i].open);
        CHECK(a.series.bars[i].high == b.series.bars[i].high);
        CHECK(a.series.bars[i].low == b.series.bars[i].low);
        CHECK(a.series.bars[i].close == b.series.bars[i].close);
        CHECK(a.series.bars[i].volume == b.series.bars[i].volume);
    }
    REQUIRE(a.news.size() == b.news.size());
    for (std::size_t i = 0; i < a.news.size(); ++i)
        CHECK(a.news[i].headline == b.news[i].headline);
    for (const auto& [name, col] : a.factors.values) {
        const auto& other = b.factors.values.at(name);
        REQUIRE(col.size() == other.size());
        for (std::size_t t = 0; t < col.size(); ++t) {
            CHECK(col[t].has_value() == other[t].has_value());
            if (col[t]) CHECK(*col[t] == *other[t]);
        }
    }
    REQUIRE(a.corpus.size() == b.corpus.size());
    for (std::size_t i = 0; i < a.corpus.size(); ++i)
        CHECK(a.corpus[i].text == b.corpus[i].text);
}

DatasetBundle news_bundle(std::uint64_t seed) {
    std::vector<NewsItem> news = {
        {day(5), "TEST", "earnings beat expectations", "", "wire"},
        {day(15), "TEST", "regulatory probe opened", "", "wire"},
        {day(25), "TEST", "chip launch announced", "", "wire"}};
    return bundle_from_closes(walk_closes(60, seed), news);
}

} // namespace

TEST_CASE("delta = 0 is a bit-exact identity for every perturbation kind") {
    const DatasetBundle d = news_bundle(3);
    for (PerturbationKind kind :
         {PerturbationKind::PriceNoise, PerturbationKind::PriceRandomWalk,
          PerturbationKind::PriceHistoricalAverage, PerturbationKind::IndicatorOverride,
          PerturbationKind::NewsRemove, PerturbationKind::NewsReplace,
          PerturbationKind::SectorOverride}) {
        PerturbationSpec spec;
        spec.kind = kind;
        spec.delta = 0.0;
        spec.seed = 42;
        const DatasetBundle out = perturb(d, spec);
        INFO("kind = " << perturbation_kind_name(kind));
        check_bundles_identical(d, out);
    }
}

TEST_CASE("kind names round-trip and use the documented hyphenated spelling") {
    const PerturbationKind kinds[] = {
        PerturbationKind::PriceNoise,        PerturbationKind::PriceRandomWalk,
        PerturbationKind::PriceHistoricalAverage, PerturbationKind::IndicatorOverride,
        PerturbationKind::NewsRemove,        PerturbationKind::NewsReplace,
        PerturbationKind::SectorOverride};
    for (PerturbationKind k : kinds)
        CHECK(perturbation_kind_from_name(perturbation_kind_name(k)) == k);
    CHECK(std::string(perturbation_kind_name(PerturbationKind::PriceNoise)) ==
          "price-noise");
    CHECK_THROWS_AS(perturbation_kind_from_name("price_noise"), ConfigError);
}

TEST_CASE("price-noise is deterministic and scales whole bars by one factor") {
    const DatasetBundle d = news_bundle(7);
    PerturbationSpec spec;
    spec.kind = PerturbationKind::PriceNoise;
    spec.delta = 0.01;
    spec.sigma = 1.0;
    spec.seed = 42;
    const DatasetBundle a = perturb(d, spec);
    const DatasetBundle b = perturb(d, spec);
    check_bundles_identical(a, b);

    bool any_changed = false;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double f = a.series.bars[i].close / d.series.bars[i].close;
        if (std::abs(f - 1.0) > 1e-12) any_changed = true;
        CHECK(a.series.bars[i].open ==
              doctest::Approx(d.series.bars[i].open * f).epsilon(1e-12));
        CHECK(a.series.bars[i].high ==
              doctest::Approx(d.series.bars[i].high * f).epsilon(1e-12));
        CHECK(a.series.bars[i].low ==
              doctest::Approx(d.series.bars[i].low * f).epsilon(1e-12));
        validate_bar(a.series.bars[i]);
    }
    CHECK(any_changed);

    PerturbationSpec other = spec;
    other.seed = 43;
    const DatasetBundle c = perturb(d, other);
    CHECK(c.series.bars[10].close != a.series.bars[10].close);
}

TEST_CASE("price perturbations are local to the target range") {
    const DatasetBundle d = news_bundle(11);
    for (PerturbationKind kind :
         {PerturbationKind::PriceNoise, PerturbationKind::PriceRandomWalk,
          PerturbationKind::PriceHistoricalAverage}) {
        PerturbationSpec spec;
        spec.kind = kind;
        spec.delta = 0.05;
        spec.seed = 5;
        spec.t_begin = 20;
        spec.t_end = 30;
        spec.trailing_window = 5;
        const DatasetBundle out = perturb(d, spec);
        INFO("kind = " << perturbation_kind_name(kind));
        for (std::size_t i = 0; i < d.size(); ++i) {
            if (i < 20 || i > 30) {
                CHECK(out.series.bars[i].close == d.series.bars[i].close);
                CHECK(out.series.bars[i].open == d.series.bars[i].open);
            }
        }
    }
}

TEST_CASE("random-walk replacement is anchored at the segment start") {
    const DatasetBundle d = news_bundle(13);
    PerturbationSpec spec;
    spec.kind = PerturbationKind::PriceRandomWalk;
    spec.delta = 1.0;
    spec.seed = 17;
    spec.t_begin = 10;
    spec.t_end = 40;
    const DatasetBundle out = perturb(d, spec);
    CHECK(out.series.bars[10].close == d.series.bars[10].close);
    bool changed = false;
    for (std::size_t i = 11; i <= 40; ++i)
        if (out.series.bars[i].close != d.series.bars[i].close) changed = true;
    CHECK(changed);
}

TEST_CASE("historical-average replacement uses trailing means of the original closes") {
    const DatasetBundle d = news_bundle(19);
    PerturbationSpec spec;
    spec.kind = PerturbationKind::PriceHistoricalAverage;
    spec.delta = 1.0;
    spec.t_begin = 20;
    spec.t_end = 25;
    spec.trailing_window = 5;
    const DatasetBundle out = perturb(d, spec);
    for (std::size_t t = 20; t <= 25; ++t) {
        // Trailing window of 5 original closes ending at and including t.
        double mean = 0;
        for (std::size_t j = t - 4; j <= t; ++j) mean += d.series.bars[j].close;
        mean /= 5.0;
        CHECK(out.series.bars[t].close == doctest::Approx(mean).epsilon(1e-12));
    }
}

TEST_CASE("computed factors are recomputed after a price perturbation") {
    const DatasetBundle d = news_bundle(23);
    PerturbationSpec spec;
    spec.kind = PerturbationKind::PriceRandomWalk;
    spec.delta = 1.0;
    spec.seed = 29;
    spec.t_begin = 5;
    spec.t_end = 55;
    const DatasetBundle out = perturb(d, spec);
    const FactorSet fresh = compute_factors(out.series, out.factor_specs);
    const auto& got = out.factors.values.at("rsi_14");
    const auto& want = fresh.values.at("rsi_14");
    for (std::size_t t = 0; t < got.size(); ++t) {
        CHECK(got[t].has_value() == want[t].has_value());
        if (got[t]) CHECK(*got[t] == *want[t]);
    }
}

TEST_CASE("indicator-override sets literals and flips provenance to supplied") {
    const DatasetBundle d = news_bundle(31);
    PerturbationSpec spec;
    spec.kind = PerturbationKind::IndicatorOverride;
    spec.delta = 1.0;
    spec.factor_names = {"rsi_14"};
    spec.overrides["rsi_14"] = {{30, 12.5}, {31, 87.5}};
    const DatasetBundle out = perturb(d, spec);
    CHECK(*out.factors.at("rsi_14", 30) == 12.5);
    CHECK(*out.factors.at("rsi_14", 31) == 87.5);
    CHECK(out.factors.provenance.at("rsi_14") == "supplied");
    // Untouched bars keep their computed values.
    CHECK(*out.factors.at("rsi_14", 40) == *d.factors.at("rsi_14", 40));
}

TEST_CASE("news-remove drops targets and refreshes the corpus") {
    const DatasetBundle d = news_bundle(37);
    PerturbationSpec spec;
    spec.kind = PerturbationKind::NewsRemove;
    spec.delta = 1.0;
    spec.news_ids = {1};
    const DatasetBundle out = perturb(d, spec);
    REQUIRE(out.news.size() == d.news.size() - 1);
    for (const auto& n : out.news) CHECK(n.headline != "regulatory probe opened");
}

TEST_CASE("news-replace substitutes targeted headlines") {
    const DatasetBundle d = news_bundle(41);
    PerturbationSpec spec;
    spec.kind = PerturbationKind::NewsReplace;
    spec.delta = 1.0;
    spec.news_ids = {0};
    spec.replacement_headlines[0] = "No notable company news.";
    const DatasetBundle out = perturb(d, spec);
    REQUIRE(out.news.size() == d.news.size());
    CHECK(out.news[0].headline == "No notable company news.");
    CHECK(out.news[1].headline == d.news[1].headline);
}

TEST_CASE("empty target selectors raise an empty-target error") {
    const DatasetBundle d = news_bundle(43);
    PerturbationSpec spec;
    spec.kind = PerturbationKind::NewsRemove;
    spec.delta = 1.0;
    CHECK_THROWS_AS(perturb(d, spec), EmptyTargetError);

    PerturbationSpec ov;
    ov.kind = PerturbationKind::IndicatorOverride;
    ov.delta = 1.0;
    CHECK_THROWS_AS(perturb(d, ov), EmptyTargetError);
}

TEST_CASE("make_scenario_set derives ids, seeds, and is reproducible") {
    const DatasetBundle d = news_bundle(47);
    PerturbationSpec spec;
    spec.kind = PerturbationKind::PriceNoise;
    spec.delta = 0.02;
    spec.sigma = 1.0;

    const ScenarioSet a = make_scenario_set(d, {spec}, 50, 999);
    REQUIRE(a.scenarios.size() == 50);
    std::set<std::string> ids;
    for (const auto& s : a.scenarios) ids.insert(s.id);
    CHECK(ids.size() == 50);
    CHECK(a.scenarios[0].id == "price-noise-0");

    const ScenarioSet b = make_scenario_set(d, {spec}, 50, 999);
    for (std::size_t i = 0; i < 50; ++i) {
        CHECK(a.scenarios[i].spec.seed == b.scenarios[i].spec.seed);
        CHECK(a.scenarios[i].dataset.series.bars[30].close ==
              b.scenarios[i].dataset.series.bars[30].close);
    }

    // n=1 with delta 0 equals the original.
    PerturbationSpec zero = spec;
    zero.delta = 0.0;
    const ScenarioSet z = make_scenario_set(d, {zero}, 1, 1);
    REQUIRE(z.scenarios.size() == 1);
    check_bundles_identical(d, z.scenarios[0].dataset);
}

TEST_CASE("verify_statistics passes trivially on identical datasets") {
    const DatasetBundle d = news_bundle(53);
    const StatReport rep = verify_statistics(d, d, StatTolerances{});
    CHECK(rep.all_pass());
    for (const auto& e : rep.entries) CHECK(e.relative_deviation == 0.0);
}

TEST_CASE("authored fixture scenarios load with the published TSLA and NVDA payloads") {
    const AuthoredScenarioFile file =
        load_authored_scenarios(data_dir() + "/scenarios/table_scenarios.json");
    CHECK(file.schema_version == "factfin.scenarios.v1");
    REQUIRE(file.scenarios.size() >= 3);

    const AuthoredScenario* tsla = nullptr;
    const AuthoredScenario* nvda = nullptr;
    for (const auto& s : file.scenarios) {
        if (s.asset == "TSLA") tsla = &s;
        if (s.asset == "NVDA") nvda = &s;
    }
    REQUIRE(tsla != nullptr);
    REQUIRE(nvda != nullptr);

    const auto& price = tsla->elements.at("price_data");
    CHECK(price.original_prices ==
          std::vector<double>{221.72, 204.99, 219.35, 220.19, 222.04});
    CHECK(price.counterfactual_prices ==
          std::vector<double>{239.09, 232.83, 226.11, 229.56, 226.62});
    CHECK(format_date(tsla->date) == "2022-10-19");

    const auto& news = nvda->elements.at("market_news");
    CHECK(news.counterfactual_text.find("$7.64B") != std::string::npos);
    CHECK(news.counterfactual_text.find("below expectations") != std::string::npos);
    CHECK(nvda->elements.count("price_data") == 0); // price data untouched
}

TEST_CASE("authored scenarios save/load round-trip bit-exact") {
    const std::string src = data_dir() + "/scenarios/table_scenarios.json";
    const AuthoredScenarioFile file = load_authored_scenarios(src);
    TempDir tmp;
    save_authored_scenarios(file, tmp.path("rt.json"));
    const AuthoredScenarioFile back = load_authored_scenarios(tmp.path("rt.json"));
    CHECK(authored_scenarios_to_json(back) == authored_scenarios_to_json(file));
}

TEST_CASE("unknown fields in a scenario file are schema errors naming the field") {
    TempDir tmp;
    write_file(tmp.path("bad.json"), R"({
      "schema": "factfin.scenarios.v1",
      "scenarios": [{
        "id": "x", "asset": "A", "date": "2022-01-03",
        "mystery_field": 1,
        "elements": {}
      }]
    })");
    try {
        load_authored_scenarios(tmp.path("bad.json"));
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("mystery_field") != std::string::npos);
    }
}

TEST_CASE("materialized authored scenarios override the closes ending at the date") {
    // Base dataset spanning the TSLA fixture date.
    PriceSeries s;
    s.asset = "TSLA";
    const Date end = parse_date("2022-10-19");
    for (int i = 0; i < 30; ++i) {
        PriceBar b;
        b.date = Date{end.serial - (29 - i)};
        b.open = b.high = b.low = b.close = b.adj_close = 220.0;
        b.high *= 1.01;
        b.low *= 0.99;
        b.volume = 1;
        b.turnover = 220;
        s.bars.push_back(b);
    }
    DatasetBundle base =
        make_bundle(std::move(s), default_factor_specs(), {}, Lexicon::builtin());

    const AuthoredScenarioFile file =
        load_authored_scenarios(data_dir() + "/scenarios/table_scenarios.json");
    AuthoredScenarioFile only_tsla;
    only_tsla.schema_version = file.schema_version;
    for (const auto& sc : file.scenarios)
        if (sc.asset == "TSLA") only_tsla.scenarios.push_back(sc);

    const ScenarioSet set = materialize_scenarios(only_tsla, base);
    REQUIRE(set.scenarios.size() == 1);
    const auto& bars = set.scenarios[0].dataset.series.bars;
    const std::vector<double> cf = {239.09, 232.83, 226.11, 229.56, 226.62};
    for (int i = 0; i < 5; ++i)
        CHECK(bars[bars.size() - 5 + i].close == doctest::Approx(cf[i]).epsilon(1e-12));
    CHECK(set.scenarios[0].provenance == "authored");
}

TEST_CASE("scenario manifest JSON embeds the master seed and per-scenario seeds") {
    const DatasetBundle d = news_bundle(61);
    PerturbationSpec spec;
    spec.kind = PerturbationKind::PriceNoise;
    spec.delta = 0.01;
    const ScenarioSet set = make_scenario_set(d, {spec}, 3, 321);
    const std::string j = scenario_manifest_json(set, 321);
    CHECK(j.find("321") != std::string::npos);
    CHECK(j.find("price-noise-2") != std::string::npos);
}

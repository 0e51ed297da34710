#include "factfin/state.hpp"

#include "factfin/errors.hpp"

namespace factfin {

MarketState build_state(const PriceSeries& series, const FactorSet& factors,
                        const NewsFactors& news, std::size_t t, std::size_t window) {
    if (t >= series.bars.size())
        throw RangeError("state index " + std::to_string(t) + " out of range (series size " +
                         std::to_string(series.bars.size()) + ")");
    MarketState state;
    state.asset = series.asset;
    state.t = t;
    state.date = series.bars[t].date;
    const std::size_t begin = t + 1 >= window ? t + 1 - window : 0;
    state.window.assign(series.bars.begin() + begin, series.bars.begin() + t + 1);
    for (const auto& [name, col] : factors.values)
        state.factors[name] = t < col.size() ? col[t] : std::nullopt;
    state.news = news;
    return state;
}

MarketState DatasetBundle::state_at(std::size_t t) const {
    if (t >= series.bars.size())
        throw RangeError("state index " + std::to_string(t) + " out of range");
    const NewsFactors nf = factorize_news(news, series.bars[t].date, lexicon);
    return build_state(series, factors, nf, t, price_window);
}

DatasetBundle make_bundle(PriceSeries series, std::vector<FactorSpec> specs,
                          std::vector<NewsItem> news, Lexicon lexicon,
                          std::size_t window) {
    DatasetBundle bundle;
    bundle.series = std::move(series);
    bundle.factor_specs = std::move(specs);
    bundle.news = std::move(news);
    bundle.lexicon = std::move(lexicon);
    bundle.price_window = window;
    bundle.factors = compute_factors(bundle.series, bundle.factor_specs);
    return bundle;
}

void recompute_factors(DatasetBundle& bundle) {
    FactorSet fresh = compute_factors(bundle.series, bundle.factor_specs);
    // carry supplied columns over unchanged
    for (auto& [name, col] : bundle.factors.values) {
        auto prov = bundle.factors.provenance.find(name);
        if (prov != bundle.factors.provenance.end() && prov->second == "supplied") {
            fresh.values[name] = col;
            fresh.provenance[name] = "supplied";
        }
    }
    fresh.length = bundle.series.bars.size();
    bundle.factors = std::move(fresh);
}

} // namespace factfin

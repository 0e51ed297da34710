#pragma once

#include "factfin/indicators.hpp"
#include "factfin/market_data.hpp"
#include "factfin/news.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace factfin {

inline constexpr std::size_t kDefaultPriceWindow = 30;

// Everything a strategy can read at time t: trailing price window, factor
// slice, news factors. All components share the same t.
struct MarketState {
    std::string asset;
    std::size_t t = 0;
    Date date;
    std::vector<PriceBar> window;                          // <= W bars, ends at t
    std::map<std::string, std::optional<double>> factors;  // slice at t
    NewsFactors news;
};

MarketState build_state(const PriceSeries& series, const FactorSet& factors,
                        const NewsFactors& news, std::size_t t,
                        std::size_t window = kDefaultPriceWindow);

// A retrievable corpus entry (news digest, factor summary, or sector note).
struct Snippet {
    std::string id;
    std::string text;
    std::string kind; // "factor_summary" | "news_digest" | "sector"
};

// Immutable, aligned dataset: prices + factors + raw news + a retrieval
// corpus. The unit the backtester, perturber, and leakage evaluator share.
struct DatasetBundle {
    PriceSeries series;
    std::vector<FactorSpec> factor_specs;
    FactorSet factors;
    std::vector<NewsItem> news;
    Lexicon lexicon;
    std::vector<Snippet> corpus;
    std::size_t price_window = kDefaultPriceWindow;

    std::size_t size() const { return series.bars.size(); }
    MarketState state_at(std::size_t t) const;
};

DatasetBundle make_bundle(PriceSeries series, std::vector<FactorSpec> specs,
                          std::vector<NewsItem> news, Lexicon lexicon,
                          std::size_t window = kDefaultPriceWindow);

// Recompute the computed factor columns from the (possibly perturbed) price
// series, keeping supplied columns untouched.
void recompute_factors(DatasetBundle& bundle);

} // namespace factfin

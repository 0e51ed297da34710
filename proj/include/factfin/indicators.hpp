#pragma once

#include "factfin/market_data.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace factfin {

enum class FactorKind { Rsi, Sma, MacdHist, KdjK, KdjD, KdjJ, Supplied };

// Parsed from names like "rsi_14", "sma_50", "macd_hist", "kdj_k", "pe".
// Unrecognized technical names throw ConfigError; anything not matching a
// technical pattern is treated as a supplied column.
struct FactorSpec {
    std::string name;
    FactorKind kind = FactorKind::Supplied;
    int period = 0; // rsi/sma lookback; macd/kdj use fixed 12/26/9 and 9/3/3
};

FactorSpec parse_factor_spec(const std::string& name);

// Column-oriented factor values aligned to a PriceSeries. Missing values at
// the series head (warmup) stay unset rather than zero-filled.
struct FactorSet {
    std::size_t length = 0;
    std::map<std::string, std::vector<std::optional<double>>> values;
    std::map<std::string, std::string> provenance; // "computed" | "supplied"

    std::optional<double> at(const std::string& name, std::size_t t) const {
        auto it = values.find(name);
        if (it == values.end() || t >= it->second.size()) return std::nullopt;
        return it->second[t];
    }
    bool has(const std::string& name) const { return values.count(name) > 0; }
};

// Every value at index t depends only on bars[0..t]. Supplied specs are left
// out (merge them with merge_supplied_factors).
FactorSet compute_factors(const PriceSeries& series, const std::vector<FactorSpec>& specs);

void merge_supplied_factors(FactorSet& set, const PriceSeries& series,
                            const SuppliedFactors& supplied);

std::vector<FactorSpec> default_factor_specs(); // rsi_14, macd_hist, kdj_k/d/j, sma_50, sma_200

} // namespace factfin

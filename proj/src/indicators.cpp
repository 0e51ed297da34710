#include "factfin/indicators.hpp"

#include "factfin/errors.hpp"

#include <algorithm>
#include <cmath>

namespace factfin {

namespace {

using Column = std::vector<std::optional<double>>;

Column rsi_wilder(const std::vector<PriceBar>& bars, int period) {
    Column out(bars.size());
    if (static_cast<int>(bars.size()) <= period) return out;
    double avg_gain = 0, avg_loss = 0;
    for (int i = 1; i <= period; ++i) {
        const double d = bars[i].close - bars[i - 1].close;
        if (d > 0) avg_gain += d; else avg_loss -= d;
    }
    avg_gain /= period;
    avg_loss /= period;
    auto rsi_of = [](double g, double l) {
        if (g == 0 && l == 0) return 50.0; // flat series convention
        if (l == 0) return 100.0;
        return 100.0 - 100.0 / (1.0 + g / l);
    };
    out[period] = rsi_of(avg_gain, avg_loss);
    for (std::size_t i = period + 1; i < bars.size(); ++i) {
        const double d = bars[i].close - bars[i - 1].close;
        const double gain = d > 0 ? d : 0.0;
        const double loss = d < 0 ? -d : 0.0;
        avg_gain = (avg_gain * (period - 1) + gain) / period;
        avg_loss = (avg_loss * (period - 1) + loss) / period;
        out[i] = rsi_of(avg_gain, avg_loss);
    }
    return out;
}

Column sma(const std::vector<PriceBar>& bars, int period) {
    Column out(bars.size());
    double sum = 0;
    for (std::size_t i = 0; i < bars.size(); ++i) {
        sum += bars[i].close;
        if (static_cast<int>(i) >= period) sum -= bars[i - period].close;
        if (static_cast<int>(i) >= period - 1) out[i] = sum / period;
    }
    return out;
}

// MACD 12/26/9, EMAs seeded at the first close; histogram defined once the
// signal EMA has its full warmup (index 26 - 1 + 9 - 1).
Column macd_hist(const std::vector<PriceBar>& bars) {
    Column out(bars.size());
    if (bars.empty()) return out;
    const int fast = 12, slow = 26, sig = 9;
    const double kf = 2.0 / (fast + 1), ks = 2.0 / (slow + 1), kg = 2.0 / (sig + 1);
    double ema_f = bars[0].close, ema_s = bars[0].close;
    double signal = 0;
    bool signal_init = false;
    int macd_count = 0;
    for (std::size_t i = 1; i < bars.size(); ++i) {
        ema_f += kf * (bars[i].close - ema_f);
        ema_s += ks * (bars[i].close - ema_s);
        if (static_cast<int>(i) >= slow - 1) {
            const double line = ema_f - ema_s;
            if (!signal_init) {
                signal = line;
                signal_init = true;
            } else {
                signal += kg * (line - signal);
            }
            ++macd_count;
            if (macd_count >= sig) out[i] = line - signal;
        }
    }
    return out;
}

// KDJ 9/3/3: RSV over a 9-bar high/low channel, K/D smoothed 2/3-1/3,
// J = 3K - 2D. K and D seed at 50.
void kdj(const std::vector<PriceBar>& bars, Column& k_out, Column& d_out, Column& j_out) {
    const int n = 9;
    k_out.assign(bars.size(), std::nullopt);
    d_out.assign(bars.size(), std::nullopt);
    j_out.assign(bars.size(), std::nullopt);
    double k = 50.0, d = 50.0;
    for (std::size_t i = 0; i < bars.size(); ++i) {
        if (static_cast<int>(i) < n - 1) continue;
        double hi = bars[i].high, lo = bars[i].low;
        for (std::size_t j = i - (n - 1); j < i; ++j) {
            hi = std::max(hi, bars[j].high);
            lo = std::min(lo, bars[j].low);
        }
        const double rsv = hi > lo ? (bars[i].close - lo) / (hi - lo) * 100.0 : 50.0;
        k = (2.0 / 3.0) * k + (1.0 / 3.0) * rsv;
        d = (2.0 / 3.0) * d + (1.0 / 3.0) * k;
        k_out[i] = k;
        d_out[i] = d;
        j_out[i] = 3.0 * k - 2.0 * d;
    }
}

bool parse_suffix_int(const std::string& s, const std::string& prefix, int& out) {
    if (s.rfind(prefix, 0) != 0) return false;
    const std::string rest = s.substr(prefix.size());
    if (rest.empty() || rest.find_first_not_of("0123456789") != std::string::npos)
        return false;
    out = std::stoi(rest);
    return out > 0;
}

} // namespace

FactorSpec parse_factor_spec(const std::string& name) {
    FactorSpec spec;
    spec.name = name;
    int p = 0;
    if (parse_suffix_int(name, "rsi_", p)) {
        spec.kind = FactorKind::Rsi;
        spec.period = p;
    } else if (parse_suffix_int(name, "sma_", p)) {
        spec.kind = FactorKind::Sma;
        spec.period = p;
    } else if (name == "macd_hist") {
        spec.kind = FactorKind::MacdHist;
    } else if (name == "kdj_k") {
        spec.kind = FactorKind::KdjK;
    } else if (name == "kdj_d") {
        spec.kind = FactorKind::KdjD;
    } else if (name == "kdj_j") {
        spec.kind = FactorKind::KdjJ;
    } else if (name.rfind("rsi_", 0) == 0 || name.rfind("sma_", 0) == 0 ||
               name.rfind("macd", 0) == 0 || name.rfind("kdj", 0) == 0) {
        throw ConfigError("unknown factor name '" + name + "'");
    } else {
        spec.kind = FactorKind::Supplied;
    }
    return spec;
}

FactorSet compute_factors(const PriceSeries& series, const std::vector<FactorSpec>& specs) {
    FactorSet set;
    set.length = series.bars.size();
    Column kdj_k, kdj_d, kdj_j;
    bool kdj_done = false;
    auto ensure_kdj = [&] {
        if (!kdj_done) {
            kdj(series.bars, kdj_k, kdj_d, kdj_j);
            kdj_done = true;
        }
    };
    for (const auto& spec : specs) {
        switch (spec.kind) {
        case FactorKind::Rsi:
            set.values[spec.name] = rsi_wilder(series.bars, spec.period);
            break;
        case FactorKind::Sma:
            set.values[spec.name] = sma(series.bars, spec.period);
            break;
        case FactorKind::MacdHist:
            set.values[spec.name] = macd_hist(series.bars);
            break;
        case FactorKind::KdjK:
            ensure_kdj();
            set.values[spec.name] = kdj_k;
            break;
        case FactorKind::KdjD:
            ensure_kdj();
            set.values[spec.name] = kdj_d;
            break;
        case FactorKind::KdjJ:
            ensure_kdj();
            set.values[spec.name] = kdj_j;
            break;
        case FactorKind::Supplied:
            continue; // merged separately from supplied columns
        }
        set.provenance[spec.name] = "computed";
    }
    return set;
}

void merge_supplied_factors(FactorSet& set, const PriceSeries& series,
                            const SuppliedFactors& supplied) {
    for (std::size_t j = 0; j < supplied.names.size(); ++j) {
        auto& col = set.values[supplied.names[j]];
        col.assign(series.bars.size(), std::nullopt);
        set.provenance[supplied.names[j]] = "supplied";
    }
    set.length = series.bars.size();
    for (std::size_t i = 0; i < supplied.dates.size(); ++i) {
        const auto it = std::lower_bound(
            series.bars.begin(), series.bars.end(), supplied.dates[i],
            [](const PriceBar& b, Date d) { return b.date < d; });
        if (it == series.bars.end() || !(it->date == supplied.dates[i])) continue;
        const auto t = static_cast<std::size_t>(it - series.bars.begin());
        for (std::size_t j = 0; j < supplied.names.size(); ++j)
            set.values[supplied.names[j]][t] = supplied.rows[i][j];
    }
}

std::vector<FactorSpec> default_factor_specs() {
    std::vector<FactorSpec> specs;
    for (const char* n : {"rsi_14", "macd_hist", "kdj_k", "kdj_d", "kdj_j",
                          "sma_50", "sma_200"})
        specs.push_back(parse_factor_spec(n));
    return specs;
}

} // namespace factfin

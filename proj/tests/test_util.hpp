#pragma once

// Shared fixtures for the unit and acceptance tests: synthetic price series,
// dataset bundles, and temp-file helpers.

#include "factfin/state.hpp"
#include "factfin/strategy.hpp"

#include <cstdint>
#include <cstdio>
#include <unistd.h>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace testutil {

inline std::string data_dir() {
#ifdef FACTFIN_DATA_DIR
    return FACTFIN_DATA_DIR;
#else
    return "data";
#endif
}

// Deterministic LCG so fixtures are identical across platforms.
struct Lcg {
    std::uint64_t s;
    explicit Lcg(std::uint64_t seed) : s(seed) {}
    double next01() {
        s = s * 6364136223846793005ULL + 1442695040888963407ULL;
        return double(s >> 11) / 9007199254740992.0;
    }
};

inline factfin::Date day(int offset) {
    return factfin::Date{factfin::parse_date("2022-01-03").serial + offset};
}

// n-bar series with given closes; open/high/low derived so bar invariants hold.
inline factfin::PriceSeries series_from_closes(const std::vector<double>& closes,
                                               const std::string& asset = "TEST") {
    factfin::PriceSeries s;
    s.asset = asset;
    for (std::size_t i = 0; i < closes.size(); ++i) {
        factfin::PriceBar b;
        b.date = day(int(i));
        b.close = closes[i];
        b.open = i == 0 ? closes[0] : closes[i - 1];
        b.high = std::max(b.open, b.close) * 1.01;
        b.low = std::min(b.open, b.close) * 0.99;
        b.adj_close = b.close;
        b.volume = 1000 + double(i);
        b.turnover = b.volume * b.close;
        validate_bar(b);
        s.bars.push_back(b);
    }
    validate_series(s);
    return s;
}

// Random-walk closes, positive, seeded.
inline std::vector<double> walk_closes(std::size_t n, std::uint64_t seed,
                                       double start = 100.0, double step = 0.01) {
    Lcg rng(seed);
    std::vector<double> closes;
    closes.reserve(n);
    double p = start;
    for (std::size_t i = 0; i < n; ++i) {
        p *= 1.0 + step * (rng.next01() - 0.5) * 2.0;
        closes.push_back(p);
    }
    return closes;
}

inline factfin::DatasetBundle bundle_from_closes(const std::vector<double>& closes,
                                                 std::vector<factfin::NewsItem> news = {}) {
    return factfin::make_bundle(series_from_closes(closes),
                                factfin::default_factor_specs(), std::move(news),
                                factfin::Lexicon::builtin());
}

inline factfin::DatasetBundle random_bundle(std::size_t n, std::uint64_t seed) {
    return bundle_from_closes(walk_closes(n, seed));
}

class TempDir {
public:
    TempDir() {
        base_ = std::filesystem::temp_directory_path() /
                ("factfin_test_" + std::to_string(counter_++) + "_" +
                 std::to_string(std::uint64_t(::getpid())));
        std::filesystem::create_directories(base_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(base_, ec);
    }
    std::string path(const std::string& name) const { return (base_ / name).string(); }
    std::string str() const { return base_.string(); }

private:
    std::filesystem::path base_;
    static inline int counter_ = 0;
};

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

} // namespace testutil

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace factfin {

// Calendar date, UTC. Stored as days since 1970-01-01 so comparisons and
// arithmetic are integer ops; ISO-8601 text at the edges.
struct Date {
    std::int32_t serial = 0;

    auto operator<=>(const Date&) const = default;
};

Date parse_date(const std::string& iso);    // "YYYY-MM-DD"
std::string format_date(Date d);
int date_year(Date d);
int date_month(Date d);
int date_day(Date d);

struct PriceBar {
    Date date;
    double open = 0;
    double high = 0;
    double low = 0;
    double close = 0;
    double adj_close = 0;
    double volume = 0;
    double turnover = 0;
};

// Throws ValidationError naming the date when bar invariants fail
// (low <= min(open, close), high >= max(open, close), prices > 0, ...).
void validate_bar(const PriceBar& bar);

struct PriceSeries {
    std::string asset;
    std::vector<PriceBar> bars; // strictly increasing dates

    std::size_t size() const { return bars.size(); }
};

void validate_series(const PriceSeries& series);

// CSV header: date,open,high,low,close,adj_close,volume,turnover
PriceSeries load_ohlcv(const std::string& path, const std::string& asset_id);
void save_ohlcv(const PriceSeries& series, const std::string& path);

struct NewsItem {
    Date date;
    std::string asset;
    std::string headline;
    std::string body;   // optional, may be empty
    std::string source;
};

// JSONL, one object per line: {"timestamp","asset","headline","body","source"}
std::vector<NewsItem> load_news_jsonl(const std::string& path);
void save_news_jsonl(const std::vector<NewsItem>& items, const std::string& path);

// Supplied (fundamental) factor columns, e.g. pe/pb/roe. CSV: date,<name>,...
// Values are keyed by bar index after alignment against a PriceSeries.
struct SuppliedFactors {
    std::vector<std::string> names;
    std::vector<Date> dates;
    std::vector<std::vector<double>> rows; // rows[i][j] = value of names[j] at dates[i]
};

SuppliedFactors load_supplied_factors(const std::string& path);

} // namespace factfin

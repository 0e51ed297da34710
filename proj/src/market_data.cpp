#include "factfin/market_data.hpp"

#include "factfin/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

namespace factfin {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double_field(const std::string& s, const std::string& what, int line_no) {
    double v;
    const char* b = s.data();
    const char* e = b + s.size();
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc{} || p != e)
        throw ParseError("line " + std::to_string(line_no) + ": bad " + what +
                         " value '" + s + "'");
    return v;
}

} // namespace

Date parse_date(const std::string& iso) {
    int y, m, d;
    char dash1, dash2;
    std::istringstream ss(iso);
    if (!(ss >> y >> dash1 >> m >> dash2 >> d) || dash1 != '-' || dash2 != '-' ||
        m < 1 || m > 12 || d < 1 || d > 31)
        throw ParseError("bad ISO-8601 date '" + iso + "'");
    const std::chrono::year_month_day ymd{std::chrono::year{y},
                                          std::chrono::month{unsigned(m)},
                                          std::chrono::day{unsigned(d)}};
    if (!ymd.ok()) throw ParseError("invalid calendar date '" + iso + "'");
    const auto days = std::chrono::sys_days{ymd}.time_since_epoch().count();
    return Date{static_cast<std::int32_t>(days)};
}

std::string format_date(Date d) {
    const std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{d.serial}}};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", int(ymd.year()),
                  unsigned(ymd.month()), unsigned(ymd.day()));
    return buf;
}

int date_year(Date d) {
    return int(std::chrono::year_month_day{std::chrono::sys_days{std::chrono::days{d.serial}}}.year());
}
int date_month(Date d) {
    return int(unsigned(std::chrono::year_month_day{std::chrono::sys_days{std::chrono::days{d.serial}}}.month()));
}
int date_day(Date d) {
    return int(unsigned(std::chrono::year_month_day{std::chrono::sys_days{std::chrono::days{d.serial}}}.day()));
}

void validate_bar(const PriceBar& bar) {
    const std::string when = format_date(bar.date);
    if (!(bar.open > 0 && bar.high > 0 && bar.low > 0 && bar.close > 0 &&
          bar.adj_close > 0))
        throw ValidationError("non-positive price at " + when);
    if (bar.low > std::min(bar.open, bar.close))
        throw ValidationError("low above min(open, close) at " + when);
    if (bar.high < std::max(bar.open, bar.close))
        throw ValidationError("high below max(open, close) at " + when);
    if (bar.low > bar.high)
        throw ValidationError("low above high at " + when);
    if (bar.volume < 0) throw ValidationError("negative volume at " + when);
    if (bar.turnover < 0) throw ValidationError("negative turnover at " + when);
    for (double v : {bar.open, bar.high, bar.low, bar.close, bar.adj_close,
                     bar.volume, bar.turnover})
        if (!std::isfinite(v))
            throw ValidationError("non-finite field at " + when);
}

void validate_series(const PriceSeries& series) {
    for (std::size_t i = 0; i < series.bars.size(); ++i) {
        validate_bar(series.bars[i]);
        if (i > 0) {
            if (series.bars[i].date == series.bars[i - 1].date)
                throw ValidationError("duplicate timestamp " +
                                      format_date(series.bars[i].date));
            if (series.bars[i].date < series.bars[i - 1].date)
                throw ValidationError("timestamps not increasing at " +
                                      format_date(series.bars[i].date));
        }
    }
}

PriceSeries load_ohlcv(const std::string& path, const std::string& asset_id) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string expected = "date,open,high,low,close,adj_close,volume,turnover";
    if (line != expected)
        throw ParseError(path + ": header mismatch, expected '" + expected + "'");

    PriceSeries series;
    series.asset = asset_id;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 8)
            throw ParseError("line " + std::to_string(line_no) + ": expected 8 fields, got " +
                             std::to_string(fields.size()));
        PriceBar bar;
        try {
            bar.date = parse_date(fields[0]);
        } catch (const ParseError& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
        }
        bar.open = parse_double_field(fields[1], "open", line_no);
        bar.high = parse_double_field(fields[2], "high", line_no);
        bar.low = parse_double_field(fields[3], "low", line_no);
        bar.close = parse_double_field(fields[4], "close", line_no);
        bar.adj_close = parse_double_field(fields[5], "adj_close", line_no);
        bar.volume = parse_double_field(fields[6], "volume", line_no);
        bar.turnover = parse_double_field(fields[7], "turnover", line_no);
        series.bars.push_back(bar);
    }
    std::stable_sort(series.bars.begin(), series.bars.end(),
                     [](const PriceBar& a, const PriceBar& b) { return a.date < b.date; });
    validate_series(series);
    return series;
}

void save_ohlcv(const PriceSeries& series, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path);
    out << "date,open,high,low,close,adj_close,volume,turnover\n";
    out.precision(17);
    for (const auto& b : series.bars)
        out << format_date(b.date) << ',' << b.open << ',' << b.high << ',' << b.low
            << ',' << b.close << ',' << b.adj_close << ',' << b.volume << ','
            << b.turnover << '\n';
}

std::vector<NewsItem> load_news_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::vector<NewsItem> items;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path + " line " + std::to_string(line_no) + ": " + e.what());
        }
        NewsItem item;
        try {
            item.date = parse_date(j.at("timestamp").get<std::string>());
            item.asset = j.at("asset").get<std::string>();
            item.headline = j.at("headline").get<std::string>();
            item.body = j.value("body", std::string{});
            item.source = j.value("source", std::string{});
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path + " line " + std::to_string(line_no) + ": " + e.what());
        }
        items.push_back(std::move(item));
    }
    return items;
}

void save_news_jsonl(const std::vector<NewsItem>& items, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path);
    for (const auto& item : items) {
        nlohmann::json j{{"timestamp", format_date(item.date)},
                         {"asset", item.asset},
                         {"headline", item.headline},
                         {"body", item.body},
                         {"source", item.source}};
        out << j.dump() << '\n';
    }
}

SuppliedFactors load_supplied_factors(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = split_csv_line(line);
    if (header.empty() || header[0] != "date")
        throw ParseError(path + ": first column must be 'date'");

    SuppliedFactors out;
    out.names.assign(header.begin() + 1, header.end());
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw ParseError("line " + std::to_string(line_no) + ": field count mismatch");
        out.dates.push_back(parse_date(fields[0]));
        std::vector<double> row;
        for (std::size_t j = 1; j < fields.size(); ++j)
            row.push_back(parse_double_field(fields[j], out.names[j - 1], line_no));
        out.rows.push_back(std::move(row));
    }
    return out;
}

} // namespace factfin

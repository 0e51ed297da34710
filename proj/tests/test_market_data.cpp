#include "factfin/errors.hpp"
#include "factfin/market_data.hpp"

#include "test_util.hpp"

#include <doctest.h>

using namespace factfin;
using namespace testutil;

namespace {

const char* kHeader = "date,open,high,low,close,adj_close,volume,turnover\n";

std::string three_rows() {
    return std::string(kHeader) +
           "2022-01-05,10,11,9,10.5,10.5,100,1050\n"
           "2022-01-03,10,11,9,10,10,100,1000\n"
           "2022-01-04,10,12,9.5,11,11,200,2200\n";
}

} // namespace

TEST_CASE("date parse/format round-trips and matches the epoch convention") {
    CHECK(parse_date("1970-01-01").serial == 0);
    CHECK(parse_date("1970-01-02").serial == 1);
    CHECK(format_date(parse_date("2022-10-19")) == "2022-10-19");
    const Date d = parse_date("2023-03-10");
    CHECK(date_year(d) == 2023);
    CHECK(date_month(d) == 3);
    CHECK(date_day(d) == 10);
    // Leap handling around 2024-02-29.
    CHECK(parse_date("2024-03-01").serial - parse_date("2024-02-28").serial == 2);
    CHECK_THROWS_AS(parse_date("2022-13-01"), ParseError);
    CHECK_THROWS_AS(parse_date("not-a-date"), ParseError);
}

TEST_CASE("load_ohlcv loads and sorts valid rows") {
    TempDir tmp;
    write_file(tmp.path("p.csv"), three_rows());
    const PriceSeries s = load_ohlcv(tmp.path("p.csv"), "ABC");
    CHECK(s.asset == "ABC");
    REQUIRE(s.bars.size() == 3);
    CHECK(format_date(s.bars[0].date) == "2022-01-03");
    CHECK(format_date(s.bars[1].date) == "2022-01-04");
    CHECK(format_date(s.bars[2].date) == "2022-01-05");
    CHECK(s.bars[1].close == 11.0);
}

TEST_CASE("load_ohlcv rejects high < low naming the date") {
    TempDir tmp;
    write_file(tmp.path("p.csv"),
               std::string(kHeader) + "2022-02-01,10,9,11,10,10,100,1000\n");
    try {
        load_ohlcv(tmp.path("p.csv"), "X");
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("2022-02-01") != std::string::npos);
    }
}

TEST_CASE("load_ohlcv rejects duplicate timestamps") {
    TempDir tmp;
    write_file(tmp.path("p.csv"), std::string(kHeader) +
                                      "2022-02-01,10,11,9,10,10,100,1000\n"
                                      "2022-02-01,10,11,9,10,10,100,1000\n");
    try {
        load_ohlcv(tmp.path("p.csv"), "X");
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("duplicate") != std::string::npos);
    }
}

TEST_CASE("load_ohlcv reports malformed rows with the line number") {
    TempDir tmp;
    write_file(tmp.path("p.csv"), std::string(kHeader) +
                                      "2022-02-01,10,11,9,10,10,100,1000\n"
                                      "2022-02-02,10,11,nine,10,10,100,1000\n");
    try {
        load_ohlcv(tmp.path("p.csv"), "X");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("3") != std::string::npos); // header is line 1
    }
}

TEST_CASE("load_ohlcv rejects a wrong header") {
    TempDir tmp;
    write_file(tmp.path("p.csv"), "date,open,close\n2022-01-03,1,2\n");
    CHECK_THROWS_AS(load_ohlcv(tmp.path("p.csv"), "X"), ParseError);
}

TEST_CASE("save_ohlcv then load_ohlcv is bit-exact") {
    const PriceSeries s = series_from_closes(walk_closes(40, 5));
    TempDir tmp;
    save_ohlcv(s, tmp.path("rt.csv"));
    const PriceSeries back = load_ohlcv(tmp.path("rt.csv"), s.asset);
    REQUIRE(back.bars.size() == s.bars.size());
    for (std::size_t i = 0; i < s.bars.size(); ++i) {
        CHECK(back.bars[i].date == s.bars[i].date);
        CHECK(back.bars[i].open == s.bars[i].open);
        CHECK(back.bars[i].high == s.bars[i].high);
        CHECK(back.bars[i].low == s.bars[i].low);
        CHECK(back.bars[i].close == s.bars[i].close);
        CHECK(back.bars[i].adj_close == s.bars[i].adj_close);
        CHECK(back.bars[i].volume == s.bars[i].volume);
        CHECK(back.bars[i].turnover == s.bars[i].turnover);
    }
}

TEST_CASE("validate_bar enforces positivity") {
    PriceBar b;
    b.date = day(0);
    b.open = b.high = b.low = b.close = b.adj_close = 10;
    b.volume = -1;
    CHECK_THROWS_AS(validate_bar(b), ValidationError);
    b.volume = 0;
    CHECK_NOTHROW(validate_bar(b));
    b.close = 0;
    CHECK_THROWS_AS(validate_bar(b), ValidationError);
}

TEST_CASE("news JSONL round-trips") {
    std::vector<NewsItem> items;
    items.push_back({parse_date("2022-03-01"), "AAPL", "Strong earnings beat",
                     "Quarterly results exceed guidance.", "wire"});
    items.push_back({parse_date("2022-03-02"), "AAPL", "Regulatory probe opened", "",
                     "wire"});
    TempDir tmp;
    save_news_jsonl(items, tmp.path("n.jsonl"));
    const auto back = load_news_jsonl(tmp.path("n.jsonl"));
    REQUIRE(back.size() == 2);
    CHECK(back[0].date == items[0].date);
    CHECK(back[0].headline == items[0].headline);
    CHECK(back[0].body == items[0].body);
    CHECK(back[1].body.empty());
    CHECK(back[1].source == "wire");
}

TEST_CASE("supplied factor CSV loads name columns by date") {
    TempDir tmp;
    write_file(tmp.path("f.csv"), "date,pe,pb\n2022-01-03,15.5,2.5\n2022-01-04,16,2.6\n");
    const SuppliedFactors f = load_supplied_factors(tmp.path("f.csv"));
    REQUIRE(f.names.size() == 2);
    CHECK(f.names[0] == "pe");
    CHECK(f.names[1] == "pb");
    REQUIRE(f.rows.size() == 2);
    CHECK(f.rows[0][0] == 15.5);
    CHECK(f.rows[1][1] == 2.6);
}

#include "factfin/backtest.hpp"
#include "factfin/errors.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <cmath>

using namespace factfin;
using namespace testutil;

namespace {

StrategyAst always(Action a) {
    StrategyAst ast;
    ast.default_action = a;
    return ast;
}

CostModel costs(double c, double s, double rf = 0.0) {
    CostModel m;
    m.transaction_cost = c;
    m.slippage = s;
    m.risk_free_rate = rf;
    return m;
}

} // namespace

TEST_CASE("always-hold yields constant equity, TR 0, MDD 0 under any cost model") {
    const DatasetBundle d = random_bundle(40, 1);
    for (const CostModel& cm : {costs(0, 0), costs(0.005, 0.002)}) {
        const BacktestResult r = run_backtest(always(Action::Hold), d, cm, 100000);
        CHECK(r.total_return == 0.0);
        CHECK(r.max_drawdown == 0.0);
        for (double e : r.equity) CHECK(e == 100000.0);
        CHECK(!r.sharpe_defined); // constant equity has degenerate volatility
    }
}

TEST_CASE("buy-and-hold with zero costs equals the price ratio minus 1") {
    // Fill happens at bar 1's open; equity marks to closes afterwards.
    const DatasetBundle d = bundle_from_closes({100, 100, 120, 150});
    const BacktestResult r = run_backtest(always(Action::Buy), d, costs(0, 0), 1000);
    const double open1 = d.series.bars[1].open;
    const double expected = 150.0 / open1 - 1.0;
    CHECK(r.total_return == doctest::Approx(expected).epsilon(1e-12));
    CHECK(r.equity.front() == 1000.0);
}

TEST_CASE("buy-and-hold TR matches the closed-form fill arithmetic with costs") {
    const DatasetBundle d = bundle_from_closes(walk_closes(30, 9));
    const double c = 0.001, s = 0.0005, P0 = 50000;
    const BacktestResult r = run_backtest(always(Action::Buy), d, costs(c, s), P0);

    // Closed form: one buy at bar 1's open with adverse slippage and a
    // proportional cost on the notional; no further trades.
    const double fill = d.series.bars[1].open * (1.0 + s);
    const double shares = P0 * (1.0 - c) / fill;
    const double final_equity = shares * d.series.bars.back().close;
    CHECK(r.equity.back() == doctest::Approx(final_equity).epsilon(1e-12));
    CHECK(r.total_return ==
          doctest::Approx((final_equity - P0) / P0).epsilon(1e-12));
}

TEST_CASE("sell after buy books the position at the open minus slippage") {
    // Buy signal at bar 0 (fills at bar 1 open), sell signal from bar 1
    // (fills at bar 2 open), flat afterwards.
    const StrategyAst ast = parse_strategy(
        "when date_serial <= " + std::to_string(day(0).serial) +
            " then buy\nelse sell",
        FeatureCatalog::with_calendar());
    const DatasetBundle d = bundle_from_closes({100, 104, 110, 120});
    const double c = 0.002, s = 0.001, P0 = 10000;
    const BacktestResult r = run_backtest(ast, d, costs(c, s), P0);

    const double buy_fill = d.series.bars[1].open * (1.0 + s);
    const double shares = P0 * (1.0 - c) / buy_fill;
    const double sell_fill = d.series.bars[2].open * (1.0 - s);
    const double cash = shares * sell_fill * (1.0 - c);
    CHECK(r.equity.back() == doctest::Approx(cash).epsilon(1e-12));
    CHECK(r.equity[1] == doctest::Approx(shares * d.series.bars[1].close).epsilon(1e-12));
}

TEST_CASE("TR is consistent with the returned equity curve to 1e-12") {
    const DatasetBundle d = random_bundle(60, 21);
    const StrategyAst ast = parse_strategy(
        "when rsi(14) < 45 then buy\nwhen rsi(14) > 55 then sell\nelse hold");
    const BacktestResult r = run_backtest(ast, d, costs(0.001, 0.0005), 100000);
    CHECK(r.total_return ==
          doctest::Approx(total_return(r.equity)).epsilon(1e-12));
    CHECK(r.returns.size() == r.equity.size() - 1);
    for (std::size_t i = 1; i < r.equity.size(); ++i)
        CHECK(r.returns[i - 1] ==
              doctest::Approx(r.equity[i] / r.equity[i - 1] - 1.0).epsilon(1e-12));
}

TEST_CASE("raising proportional costs never raises TR for a fixed action log") {
    const DatasetBundle d = random_bundle(80, 33);
    const StrategyAst ast = parse_strategy(
        "when rsi(14) < 45 then buy\nwhen rsi(14) > 55 then sell\nelse hold");
    double prev_tr = 1e300;
    for (double c : {0.0, 0.001, 0.005, 0.02}) {
        const BacktestResult r = run_backtest(ast, d, costs(c, 0.0005), 100000);
        CHECK(r.total_return <= prev_tr + 1e-15);
        prev_tr = r.total_return;
    }
}

TEST_CASE("dataset shorter than 2 bars is rejected") {
    const DatasetBundle d = bundle_from_closes({100});
    CHECK_THROWS_AS(run_backtest(always(Action::Hold), d, costs(0, 0), 1000),
                    InsufficientDataError);
}

TEST_CASE("cost model validation rejects out-of-range fractions") {
    CHECK_THROWS_AS(run_backtest(always(Action::Hold), random_bundle(10, 2),
                                 costs(0.5, 0), 1000),
                    ConfigError);
    CHECK_THROWS_AS(run_backtest(always(Action::Hold), random_bundle(10, 2),
                                 costs(0, 0), -5),
                    ConfigError);
}

TEST_CASE("total_return endpoint arithmetic") {
    CHECK(total_return({100, 113.79}) == doctest::Approx(0.1379).epsilon(1e-12));
    CHECK(total_return({100, 100, 100}) == 0.0);
    CHECK(total_return({100, 110, 105}) == doctest::Approx(0.05).epsilon(1e-12));
    CHECK_THROWS_AS(total_return({}), InsufficientDataError);
}

TEST_CASE("sharpe examples") {
    CHECK(sharpe_ratio({0.01, -0.01}, 0.0, 1.0, 252.0) == 0.0);
    CHECK_THROWS_AS(sharpe_ratio({0.01, 0.01, 0.01}, 0.0, 1.0, 252.0),
                    DegenerateVolatilityError);
    // mean 0.01, sample std 0.01 -> SR = 1 at annualization factor 1.
    CHECK(sharpe_ratio({0.02, 0.00, 0.01}, 0.0, 1.0, 252.0) ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(sharpe_ratio({0.01}, 0.0, 1.0, 252.0), InsufficientDataError);

    // Risk-free rate is converted to a per-period excess before averaging.
    const double rf = 0.0252;
    const double got = sharpe_ratio({0.02, 0.00, 0.01}, rf, 1.0, 252.0);
    const double excess = 0.01 - rf / 252.0;
    CHECK(got == doctest::Approx(excess / 0.01).epsilon(1e-12));
}

TEST_CASE("max drawdown examples and invariants") {
    CHECK(max_drawdown({1, 2, 3, 4}) == 0.0);
    CHECK(max_drawdown({100, 110, 105, 120, 90}) ==
          doctest::Approx(0.25).epsilon(1e-12));
    CHECK(max_drawdown({42}) == 0.0);

    // Brute-force oracle over a random curve.
    const std::vector<double> eq = walk_closes(100, 55);
    double expected = 0;
    for (std::size_t i = 0; i < eq.size(); ++i)
        for (std::size_t j = 0; j <= i; ++j)
            expected = std::max(expected, (eq[j] - eq[i]) / eq[j]);
    CHECK(max_drawdown(eq) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(max_drawdown(eq) >= 0.0);
    CHECK(max_drawdown(eq) < 1.0);
}

TEST_CASE("decay rate examples") {
    CHECK(decay_rate(3.0, 3.0) == 0.0);
    CHECK(decay_rate(2.0, 1.0) == doctest::Approx(50.0).epsilon(1e-12));
    CHECK(decay_rate(1.0, -0.5) == doctest::Approx(150.0).epsilon(1e-12));
    CHECK_THROWS_AS(decay_rate(0.0, 1.0), UndefinedBaselineError);
}

TEST_CASE("backtest JSON embeds the curve and null sharpe when degenerate") {
    const DatasetBundle d = bundle_from_closes({100, 101, 102});
    const BacktestResult r = run_backtest(always(Action::Hold), d, costs(0, 0), 1000);
    std::vector<Date> dates;
    for (const auto& b : d.series.bars) dates.push_back(b.date);
    const std::string json = backtest_result_to_json(r, dates);
    CHECK(json.find("\"sharpe\": null") != std::string::npos);
    CHECK(json.find("2022-01-03") != std::string::npos);
    const std::string csv = equity_curve_csv(r, dates);
    CHECK(csv.rfind("date,equity\n", 0) == 0);
}

#pragma once

#include "factfin/state.hpp"
#include "factfin/strategy.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace factfin {

struct CostModel {
    double transaction_cost = 0.001; // fraction of trade notional
    double slippage = 0.0005;        // adverse fraction of fill price
    double risk_free_rate = 0.0;     // annualized
    double annualization = std::sqrt(252.0);
    double periods_per_year = 252.0;

    void validate() const; // all fractions >= 0 and < 0.1
};

struct BacktestResult {
    std::vector<double> equity;   // one value per bar, starts at initial capital
    std::vector<double> returns;  // per-period, length = equity length - 1
    std::vector<Action> actions;  // signal emitted at each bar
    double total_return = 0;
    double sharpe = 0;            // 0 when volatility degenerate (see flag)
    bool sharpe_defined = false;
    double max_drawdown = 0;
};

// Signals at bar t fill at bar t+1's open (buy pays +slippage, sell receives
// -slippage); all-in/all-out single-asset position; equity marks at each
// close.
BacktestResult run_backtest(const StrategyAst& ast, const DatasetBundle& dataset,
                            const CostModel& cost, double initial_capital = 100000.0);

double total_return(const std::vector<double>& equity);

// Mean excess per-period return over sample std (n-1), times the
// annualization factor. Throws DegenerateVolatilityError when sigma == 0.
double sharpe_ratio(const std::vector<double>& returns, double risk_free_annual,
                    double annualization = std::sqrt(252.0),
                    double periods_per_year = 252.0);

double max_drawdown(const std::vector<double>& equity);

// (x_pre - x_post) / x_pre * 100
double decay_rate(double x_pre, double x_post);

std::string backtest_result_to_json(const BacktestResult& result,
                                    const std::vector<Date>& dates);
std::string equity_curve_csv(const BacktestResult& result, const std::vector<Date>& dates);

} // namespace factfin

#include "factfin/backtest.hpp"

#include "factfin/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace factfin {

void CostModel::validate() const {
    for (double f : {transaction_cost, slippage}) {
        if (f < 0 || f >= 0.1)
            throw ConfigError("cost fraction out of [0, 0.1)");
    }
    if (risk_free_rate < 0 || risk_free_rate >= 0.1)
        throw ConfigError("risk-free rate out of [0, 0.1)");
}

BacktestResult run_backtest(const StrategyAst& ast, const DatasetBundle& dataset,
                            const CostModel& cost, double initial_capital) {
    cost.validate();
    if (initial_capital <= 0) throw ConfigError("initial capital must be positive");
    const auto& bars = dataset.series.bars;
    if (bars.size() < 2) throw InsufficientDataError("dataset shorter than 2 bars");

    BacktestResult result;
    result.equity.reserve(bars.size());
    result.actions.reserve(bars.size());

    double cash = initial_capital;
    double shares = 0;
    Action pending = Action::Hold; // signal from the previous bar, fills at this open

    for (std::size_t t = 0; t < bars.size(); ++t) {
        if (t > 0) {
            if (pending == Action::Buy && shares == 0) {
                const double fill = bars[t].open * (1.0 + cost.slippage);
                shares = cash * (1.0 - cost.transaction_cost) / fill;
                cash = 0;
            } else if (pending == Action::Sell && shares > 0) {
                const double fill = bars[t].open * (1.0 - cost.slippage);
                cash = shares * fill * (1.0 - cost.transaction_cost);
                shares = 0;
            }
        }
        const EvalResult ev = evaluate_strategy(ast, dataset.state_at(t));
        result.actions.push_back(ev.action);
        pending = ev.action;
        result.equity.push_back(cash + shares * bars[t].close);
    }

    result.returns.reserve(result.equity.size() - 1);
    for (std::size_t i = 1; i < result.equity.size(); ++i)
        result.returns.push_back(result.equity[i] / result.equity[i - 1] - 1.0);

    result.total_return = total_return(result.equity);
    result.max_drawdown = max_drawdown(result.equity);
    try {
        result.sharpe = sharpe_ratio(result.returns, cost.risk_free_rate,
                                     cost.annualization, cost.periods_per_year);
        result.sharpe_defined = true;
    } catch (const DegenerateVolatilityError&) {
        result.sharpe = 0;
        result.sharpe_defined = false;
    }
    return result;
}

double total_return(const std::vector<double>& equity) {
    if (equity.empty()) throw InsufficientDataError("empty equity curve");
    if (equity.front() <= 0) throw ConfigError("initial equity must be positive");
    return (equity.back() - equity.front()) / equity.front();
}

double sharpe_ratio(const std::vector<double>& returns, double risk_free_annual,
                    double annualization, double periods_per_year) {
    if (returns.size() < 2)
        throw InsufficientDataError("sharpe requires at least 2 returns");
    const double rf_per_period = risk_free_annual / periods_per_year;
    double mean = 0;
    for (double r : returns) mean += r - rf_per_period;
    mean /= double(returns.size());
    double var = 0;
    for (double r : returns) {
        const double d = (r - rf_per_period) - mean;
        var += d * d;
    }
    var /= double(returns.size() - 1);
    const double sd = std::sqrt(var);
    if (sd == 0) throw DegenerateVolatilityError("zero return volatility");
    return mean / sd * annualization;
}

double max_drawdown(const std::vector<double>& equity) {
    if (equity.empty()) throw InsufficientDataError("empty equity curve");
    double peak = equity.front();
    double mdd = 0;
    for (double v : equity) {
        peak = std::max(peak, v);
        mdd = std::max(mdd, (peak - v) / peak);
    }
    return mdd;
}

double decay_rate(double x_pre, double x_post) {
    if (x_pre == 0) throw UndefinedBaselineError("decay rate undefined for zero baseline");
    return (x_pre - x_post) / x_pre * 100.0;
}

std::string backtest_result_to_json(const BacktestResult& result,
                                    const std::vector<Date>& dates) {
    nlohmann::json j;
    j["schema"] = "factfin.backtest_result.v1";
    j["total_return"] = result.total_return;
    j["sharpe"] = result.sharpe_defined ? nlohmann::json(result.sharpe) : nlohmann::json();
    j["max_drawdown"] = result.max_drawdown;
    nlohmann::json curve = nlohmann::json::array();
    for (std::size_t i = 0; i < result.equity.size(); ++i) {
        nlohmann::json point;
        if (i < dates.size()) point["date"] = format_date(dates[i]);
        point["equity"] = result.equity[i];
        point["action"] = action_name(result.actions[i]);
        curve.push_back(point);
    }
    j["curve"] = curve;
    return j.dump(2);
}

std::string equity_curve_csv(const BacktestResult& result, const std::vector<Date>& dates) {
    std::ostringstream out;
    out.precision(17);
    out << "date,equity\n";
    for (std::size_t i = 0; i < result.equity.size(); ++i)
        out << (i < dates.size() ? format_date(dates[i]) : std::to_string(i)) << ','
            << result.equity[i] << '\n';
    return out.str();
}

} // namespace factfin

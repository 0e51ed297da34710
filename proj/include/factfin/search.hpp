#pragma once

#include "factfin/backtest.hpp"
#include "factfin/leakage.hpp"
#include "factfin/rng.hpp"
#include "factfin/strategy.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace factfin {

// Eq-style UCB: w/n + c*sqrt(ln(N)/n). Callers handle n == 0 via the
// unvisited-first convention.
double ucb_value(double total_reward, std::size_t visits, std::size_t parent_visits,
                 double c);

// Bounded reward for tree statistics: logistic of the Sharpe ratio.
// Degenerate-volatility backtests count as SR = 0, reward exactly 0.5.
double logistic_reward(double sharpe);

struct SearchNode {
    StrategyAst strategy;
    double total_reward = 0;  // w(s)
    std::size_t visits = 0;   // n(s)
    int parent = -1;
    std::vector<int> children;
    int depth = 0;
    bool terminal = false; // expansion exhausted (duplicates / depth cap)
};

class SearchTree {
public:
    explicit SearchTree(StrategyAst root);

    const SearchNode& node(int i) const { return nodes_[i]; }
    SearchNode& node(int i) { return nodes_[i]; }
    std::size_t size() const { return nodes_.size(); }

    // -1 when the strategy hash is already in the tree.
    int add_child(int parent, StrategyAst strategy);

    // Unvisited children first (insertion order), then UCB argmax
    // (ties by insertion order).
    int select_child(int parent, double c) const;

    // Descend from the root until a node without children.
    int select_leaf(double c) const;

    void backpropagate(int leaf, double reward);

private:
    std::vector<SearchNode> nodes_;
    std::vector<std::string> seen_ids_;
};

using ChildGenerator =
    std::function<std::optional<StrategyAst>(const StrategyAst& parent, CounterRng& rng)>;

ChildGenerator rule_based_generator(FeatureCatalog catalog = FeatureCatalog::defaults(),
                                    double magnitude = 0.2);

struct SearchConfig {
    double exploration_c = 0.5;
    int max_depth = 10;
    std::size_t budget = 200; // iterations B
    int expansion_width = 3;
    int max_expand_attempts = 12; // duplicate-retry bound per expansion
    LeakageWeights weights;
    std::size_t frontier_size = 8;
    std::size_t eval_points_per_scenario = 30;
    double tau = 1.0;
    CostModel cost;
    double initial_capital = 100000.0;
    std::uint64_t seed = 0;
};

struct IterationTrace {
    int node = 0;
    double reward = 0;
};

struct EvolutionResult {
    StrategyAst best;
    double best_reward = 0; // logistic-SR of the best strategy
    double root_reward = 0;
    BacktestResult best_backtest;
    std::optional<LeakageReport> leakage;
    std::vector<IterationTrace> trace;
    std::size_t total_simulations = 0;
};

double simulate_strategy(const StrategyAst& ast, const DatasetBundle& dataset,
                         const CostModel& cost, double initial_capital);

// select / expand / simulate / backpropagate for config.budget iterations,
// then pick the best strategy among the top-F frontier (mean reward >= the
// root strategy's own reward) by minimum leakage objective; ties break by
// strategy id. Falls back to the root strategy when the frontier is empty.
EvolutionResult evolve(const StrategyAst& initial, const DatasetBundle& dataset,
                       const ScenarioSet& scenarios, const SearchConfig& config,
                       ChildGenerator generator = {});

std::string evolution_result_to_json(const EvolutionResult& result,
                                     const SearchConfig& config);

} // namespace factfin

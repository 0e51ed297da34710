#include "factfin/search.hpp"

#include "factfin/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

namespace factfin {

double ucb_value(double total_reward, std::size_t visits, std::size_t parent_visits,
                 double c) {
    if (visits == 0 || parent_visits == 0)
        throw ConfigError("ucb_value requires positive visit counts");
    return total_reward / double(visits) +
           c * std::sqrt(std::log(double(parent_visits)) / double(visits));
}

double logistic_reward(double sharpe) { return 1.0 / (1.0 + std::exp(-sharpe)); }

SearchTree::SearchTree(StrategyAst root) {
    SearchNode n;
    n.strategy = std::move(root);
    seen_ids_.push_back(n.strategy.id());
    nodes_.push_back(std::move(n));
}

int SearchTree::add_child(int parent, StrategyAst strategy) {
    const std::string id = strategy.id();
    if (std::find(seen_ids_.begin(), seen_ids_.end(), id) != seen_ids_.end())
        return -1;
    SearchNode n;
    n.strategy = std::move(strategy);
    n.parent = parent;
    n.depth = nodes_[parent].depth + 1;
    const int idx = static_cast<int>(nodes_.size());
    nodes_.push_back(std::move(n));
    nodes_[parent].children.push_back(idx);
    seen_ids_.push_back(id);
    return idx;
}

int SearchTree::select_child(int parent, double c) const {
    const SearchNode& p = nodes_[parent];
    if (p.children.empty()) throw ConfigError("select_child on childless node");
    for (int child : p.children)
        if (nodes_[child].visits == 0) return child; // unvisited-first convention
    int best = p.children.front();
    double best_value = ucb_value(nodes_[best].total_reward, nodes_[best].visits,
                                  p.visits, c);
    for (std::size_t i = 1; i < p.children.size(); ++i) {
        const int child = p.children[i];
        const double v =
            ucb_value(nodes_[child].total_reward, nodes_[child].visits, p.visits, c);
        if (v > best_value) {
            best = child;
            best_value = v;
        }
    }
    return best;
}

int SearchTree::select_leaf(double c) const {
    int node = 0;
    while (!nodes_[node].children.empty()) node = select_child(node, c);
    return node;
}

void SearchTree::backpropagate(int leaf, double reward) {
    for (int node = leaf; node != -1; node = nodes_[node].parent) {
        nodes_[node].total_reward += reward;
        nodes_[node].visits += 1;
    }
}

ChildGenerator rule_based_generator(FeatureCatalog catalog, double magnitude) {
    return [catalog, magnitude](const StrategyAst& parent,
                                CounterRng& rng) -> std::optional<StrategyAst> {
        MutationSpec spec;
        spec.kind = static_cast<MutationKind>(rng.next_below(6));
        spec.magnitude = magnitude;
        spec.seed = rng.next_u64();
        const MutationResult r = mutate_strategy(parent, spec, catalog);
        if (!r.applied) return std::nullopt;
        return r.ast;
    };
}

double simulate_strategy(const StrategyAst& ast, const DatasetBundle& dataset,
                         const CostModel& cost, double initial_capital) {
    const BacktestResult result = run_backtest(ast, dataset, cost, initial_capital);
    return logistic_reward(result.sharpe_defined ? result.sharpe : 0.0);
}

namespace {

// Create up to `width` unique children; bounded retries against duplicate or
// inapplicable generations. Marks the node terminal when nothing new emerges.
void expand_node(SearchTree& tree, int node_idx, const ChildGenerator& generate,
                 int width, int max_attempts, CounterRng& rng) {
    int created = 0;
    int attempts = 0;
    while (created < width && attempts < max_attempts) {
        ++attempts;
        auto child = generate(tree.node(node_idx).strategy, rng);
        if (!child) continue;
        if (tree.add_child(node_idx, std::move(*child)) >= 0) ++created;
    }
    if (created == 0) tree.node(node_idx).terminal = true;
}

} // namespace

EvolutionResult evolve(const StrategyAst& initial, const DatasetBundle& dataset,
                       const ScenarioSet& scenarios, const SearchConfig& config,
                       ChildGenerator generator) {
    if (!generator) generator = rule_based_generator();
    if (config.max_depth < 1 || config.exploration_c < 0)
        throw ConfigError("invalid search config");

    SearchTree tree(initial);
    CounterRng rng(config.seed);
    EvolutionResult result;
    result.root_reward =
        simulate_strategy(initial, dataset, config.cost, config.initial_capital);

    for (std::size_t iter = 0; iter < config.budget; ++iter) {
        int node = tree.select_leaf(config.exploration_c);
        if (!tree.node(node).terminal && tree.node(node).depth < config.max_depth) {
            expand_node(tree, node, generator, config.expansion_width,
                        config.max_expand_attempts, rng);
            if (!tree.node(node).children.empty())
                node = tree.select_child(node, config.exploration_c);
        }
        const double reward = simulate_strategy(tree.node(node).strategy, dataset,
                                                config.cost, config.initial_capital);
        tree.backpropagate(node, reward);
        result.trace.push_back({node, reward});
    }
    result.total_simulations = result.trace.size();

    // frontier: top-F visited non-root nodes by mean reward, at or above the
    // root strategy's own reward
    struct Candidate {
        int node;
        double mean;
    };
    std::vector<Candidate> candidates;
    for (std::size_t i = 1; i < tree.size(); ++i) {
        const SearchNode& n = tree.node(static_cast<int>(i));
        if (n.visits == 0) continue;
        const double mean = n.total_reward / double(n.visits);
        if (mean >= result.root_reward)
            candidates.push_back({static_cast<int>(i), mean});
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) { return a.mean > b.mean; });
    if (candidates.size() > config.frontier_size)
        candidates.resize(config.frontier_size);

    int best_node = 0;
    std::optional<LeakageReport> best_report;
    if (!candidates.empty() && !scenarios.scenarios.empty()) {
        const auto points = stratified_eval_points(
            dataset.size(), config.eval_points_per_scenario, dataset.price_window);
        double best_objective = 0;
        std::string best_id;
        for (const auto& cand : candidates) {
            const auto pairs = paired_evaluate(tree.node(cand.node).strategy, scenarios,
                                               points, config.tau);
            const LeakageReport report = make_leakage_report(pairs, config.weights);
            const std::string id = tree.node(cand.node).strategy.id();
            const bool better =
                !best_report || report.objective < best_objective ||
                (report.objective == best_objective && id < best_id);
            if (better) {
                best_node = cand.node;
                best_report = report;
                best_objective = report.objective;
                best_id = id;
            }
        }
    } else if (!candidates.empty()) {
        // no scenarios: fall back to best mean reward
        best_node = candidates.front().node;
    }

    result.best = tree.node(best_node).strategy;
    result.best_backtest =
        run_backtest(result.best, dataset, config.cost, config.initial_capital);
    result.best_reward = logistic_reward(
        result.best_backtest.sharpe_defined ? result.best_backtest.sharpe : 0.0);
    result.leakage = best_report;
    if (!best_report && !scenarios.scenarios.empty()) {
        const auto points = stratified_eval_points(
            dataset.size(), config.eval_points_per_scenario, dataset.price_window);
        const auto pairs = paired_evaluate(result.best, scenarios, points, config.tau);
        result.leakage = make_leakage_report(pairs, config.weights);
    }
    return result;
}

std::string evolution_result_to_json(const EvolutionResult& result,
                                     const SearchConfig& config) {
    nlohmann::json j;
    j["schema"] = "factfin.evolution_result.v1";
    j["best_strategy"] = render_strategy(result.best);
    j["best_strategy_id"] = result.best.id();
    j["best_reward"] = result.best_reward;
    j["root_reward"] = result.root_reward;
    j["total_simulations"] = result.total_simulations;
    j["backtest"] = {{"total_return", result.best_backtest.total_return},
                     {"sharpe", result.best_backtest.sharpe_defined
                                    ? nlohmann::json(result.best_backtest.sharpe)
                                    : nlohmann::json()},
                     {"max_drawdown", result.best_backtest.max_drawdown}};
    if (result.leakage) {
        j["leakage"] = {{"pc", result.leakage->pc},
                        {"ci", result.leakage->ci ? nlohmann::json(*result.leakage->ci)
                                                  : nlohmann::json()},
                        {"ids", result.leakage->ids},
                        {"objective", result.leakage->objective}};
    }
    j["config"] = {{"exploration_c", config.exploration_c},
                   {"max_depth", config.max_depth},
                   {"budget", config.budget},
                   {"expansion_width", config.expansion_width},
                   {"seed", config.seed}};
    nlohmann::json trace = nlohmann::json::array();
    for (const auto& t : result.trace)
        trace.push_back({{"node", t.node}, {"reward", t.reward}});
    j["trace"] = trace;
    return j.dump(2);
}

} // namespace factfin

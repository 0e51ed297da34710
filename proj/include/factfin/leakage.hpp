#pragma once

#include "factfin/perturb.hpp"
#include "factfin/strategy.hpp"

#include <optional>
#include <string>
#include <vector>

namespace factfin {

inline constexpr double kKlFloor = 1e-6;

struct PairedPrediction {
    std::string scenario_id;
    std::size_t t = 0;
    Action original_action = Action::Hold;
    double original_confidence = 0;
    ActionDistribution original_distribution;
    Action counterfactual_action = Action::Hold;
    double counterfactual_confidence = 0;
    ActionDistribution counterfactual_distribution;

    bool consistent() const { return original_action == counterfactual_action; }
};

struct LeakageWeights {
    double alpha = 1.0, beta = 1.0, gamma = 1.0;
};

struct LeakageReport {
    double pc = 0;
    std::optional<double> ci; // absent when no consistent pairs exist
    double ids = 0;
    std::size_t sample_count = 0;     // N
    std::size_t consistent_count = 0; // M
    LeakageWeights weights;
    double objective = 0;
};

// Fraction of pairs whose actions match.
double prediction_consistency(const std::vector<PairedPrediction>& pairs);

// 1 - mean |confidence gap| over consistent pairs; absent when none are.
std::optional<double> confidence_invariance(const std::vector<PairedPrediction>& pairs);

// Mean KL(P_orig || P_cf) in nats after flooring both distributions at
// eps_floor and renormalizing.
double input_dependency(const std::vector<PairedPrediction>& pairs,
                        double eps_floor = kKlFloor);

double kl_divergence_floored(const ActionDistribution& p, const ActionDistribution& q,
                             double eps_floor = kKlFloor);

// alpha*PC + beta*CI - gamma*IDS; absent CI drops the beta term.
double leakage_objective(double pc, std::optional<double> ci, double ids,
                         const LeakageWeights& weights);

LeakageReport make_leakage_report(const std::vector<PairedPrediction>& pairs,
                                  const LeakageWeights& weights = {});

// Evaluate the strategy on original vs counterfactual states at the given
// bar indices across all scenarios.
std::vector<PairedPrediction> paired_evaluate(const StrategyAst& ast,
                                              const ScenarioSet& scenarios,
                                              const std::vector<std::size_t>& eval_points,
                                              double tau = 1.0);

// Evenly spaced sample of count points over [warmup, size).
std::vector<std::size_t> stratified_eval_points(std::size_t size, std::size_t count,
                                                std::size_t warmup = 0);

std::string leakage_report_to_json(const LeakageReport& report);
std::string leakage_report_csv_row(const std::string& strategy_id,
                                   const std::string& scenario_set_id,
                                   const LeakageReport& report);

} // namespace factfin

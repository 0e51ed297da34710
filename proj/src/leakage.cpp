#include "factfin/leakage.hpp"

#include "factfin/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace factfin {

double prediction_consistency(const std::vector<PairedPrediction>& pairs) {
    if (pairs.empty()) throw InsufficientDataError("prediction_consistency on empty set");
    std::size_t m = 0;
    for (const auto& p : pairs)
        if (p.consistent()) ++m;
    return double(m) / double(pairs.size());
}

std::optional<double> confidence_invariance(const std::vector<PairedPrediction>& pairs) {
    double gap_sum = 0;
    std::size_t m = 0;
    for (const auto& p : pairs) {
        if (!p.consistent()) continue;
        gap_sum += std::abs(p.original_confidence - p.counterfactual_confidence);
        ++m;
    }
    if (m == 0) return std::nullopt;
    return 1.0 - gap_sum / double(m);
}

double kl_divergence_floored(const ActionDistribution& p, const ActionDistribution& q,
                             double eps_floor) {
    std::array<double, 3> pf{}, qf{};
    double ps = 0, qs = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        pf[i] = std::max(p.p[i], eps_floor);
        qf[i] = std::max(q.p[i], eps_floor);
        ps += pf[i];
        qs += qf[i];
    }
    double kl = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        pf[i] /= ps;
        qf[i] /= qs;
        kl += pf[i] * std::log(pf[i] / qf[i]);
    }
    return kl;
}

double input_dependency(const std::vector<PairedPrediction>& pairs, double eps_floor) {
    if (pairs.empty()) throw InsufficientDataError("input_dependency on empty set");
    double sum = 0;
    for (const auto& p : pairs)
        sum += kl_divergence_floored(p.original_distribution,
                                     p.counterfactual_distribution, eps_floor);
    return sum / double(pairs.size());
}

double leakage_objective(double pc, std::optional<double> ci, double ids,
                         const LeakageWeights& weights) {
    if (weights.alpha < 0 || weights.beta < 0 || weights.gamma < 0)
        throw ConfigError("leakage weights must be >= 0");
    double obj = weights.alpha * pc - weights.gamma * ids;
    if (ci) obj += weights.beta * *ci;
    return obj;
}

LeakageReport make_leakage_report(const std::vector<PairedPrediction>& pairs,
                                  const LeakageWeights& weights) {
    LeakageReport report;
    report.weights = weights;
    report.sample_count = pairs.size();
    report.consistent_count =
        std::count_if(pairs.begin(), pairs.end(),
                      [](const PairedPrediction& p) { return p.consistent(); });
    report.pc = prediction_consistency(pairs);
    report.ci = confidence_invariance(pairs);
    report.ids = input_dependency(pairs);
    report.objective = leakage_objective(report.pc, report.ci, report.ids, weights);
    return report;
}

std::vector<PairedPrediction> paired_evaluate(const StrategyAst& ast,
                                              const ScenarioSet& scenarios,
                                              const std::vector<std::size_t>& eval_points,
                                              double tau) {
    if (!scenarios.original) throw ConfigError("scenario set has no original dataset");
    const DatasetBundle& original = *scenarios.original;
    std::vector<PairedPrediction> pairs;
    pairs.reserve(scenarios.scenarios.size() * eval_points.size());
    for (const auto& scenario : scenarios.scenarios) {
        for (std::size_t t : eval_points) {
            if (t >= original.size() || t >= scenario.dataset.size())
                throw RangeError("eval point " + std::to_string(t) + " out of range");
            const EvalResult orig = evaluate_strategy(ast, original.state_at(t), tau);
            const EvalResult cf = evaluate_strategy(ast, scenario.dataset.state_at(t), tau);
            PairedPrediction pp;
            pp.scenario_id = scenario.id;
            pp.t = t;
            pp.original_action = orig.action;
            pp.original_confidence = orig.distribution.confidence();
            pp.original_distribution = orig.distribution;
            pp.counterfactual_action = cf.action;
            pp.counterfactual_confidence = cf.distribution.confidence();
            pp.counterfactual_distribution = cf.distribution;
            pairs.push_back(std::move(pp));
        }
    }
    return pairs;
}

std::vector<std::size_t> stratified_eval_points(std::size_t size, std::size_t count,
                                                std::size_t warmup) {
    std::vector<std::size_t> points;
    if (size == 0 || warmup >= size || count == 0) return points;
    const std::size_t span = size - warmup;
    const std::size_t n = std::min(count, span);
    for (std::size_t i = 0; i < n; ++i)
        points.push_back(warmup + (i * span) / n);
    points.erase(std::unique(points.begin(), points.end()), points.end());
    return points;
}

std::string leakage_report_to_json(const LeakageReport& report) {
    nlohmann::json j;
    j["schema"] = "factfin.leakage_report.v1";
    j["pc"] = report.pc;
    j["ci"] = report.ci ? nlohmann::json(*report.ci) : nlohmann::json();
    j["ids"] = report.ids;
    j["sample_count"] = report.sample_count;
    j["consistent_count"] = report.consistent_count;
    j["weights"] = {{"alpha", report.weights.alpha},
                    {"beta", report.weights.beta},
                    {"gamma", report.weights.gamma}};
    j["objective"] = report.objective;
    return j.dump(2);
}

std::string leakage_report_csv_row(const std::string& strategy_id,
                                   const std::string& scenario_set_id,
                                   const LeakageReport& report) {
    std::ostringstream out;
    out.precision(17);
    out << strategy_id << ',' << scenario_set_id << ',' << report.pc << ',';
    if (report.ci) out << *report.ci;
    out << ',' << report.ids << ',' << report.sample_count << ','
        << report.consistent_count << ',' << report.objective;
    return out.str();
}

} // namespace factfin

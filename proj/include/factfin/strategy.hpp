#pragma once

#include "factfin/state.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace factfin {

// Tie-break order is the enum order: buy < sell < hold.
enum class Action { Buy, Sell, Hold };

const char* action_name(Action a);
std::optional<Action> action_from_name(const std::string& name);

struct ActionDistribution {
    std::array<double, 3> p{}; // indexed by Action

    double operator[](Action a) const { return p[static_cast<std::size_t>(a)]; }
    double& operator[](Action a) { return p[static_cast<std::size_t>(a)]; }
    Action argmax() const; // ties broken by action order
    double confidence() const; // max probability
};

enum class CmpOp { Lt, Le, Gt, Ge };

struct Operand {
    enum class Kind { Factor, Number };
    Kind kind = Kind::Number;
    std::string factor; // canonical name, e.g. "rsi_14"
    double number = 0;

    bool operator==(const Operand&) const = default;
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
    enum class Kind { Cmp, And, Or, Not };
    Kind kind = Kind::Cmp;
    // Cmp
    Operand lhs, rhs;
    CmpOp op = CmpOp::Lt;
    // And/Or use a,b; Not uses a
    ExprPtr a, b;
};

bool expr_equal(const ExprPtr& x, const ExprPtr& y);

struct Rule {
    ExprPtr condition;
    Action action = Action::Hold;
};

inline constexpr int kMaxRules = 16;

// Which factor references the grammar accepts; the calendar flag gates the
// date-reading names (date_serial/day/month/year).
struct FeatureCatalog {
    bool calendar = false;
    bool allows(const std::string& canonical) const;
    static FeatureCatalog defaults();
    static FeatureCatalog with_calendar();
};

struct StrategyAst {
    std::vector<Rule> rules; // at most kMaxRules
    Action default_action = Action::Hold;

    bool operator==(const StrategyAst& other) const;
    std::string id() const; // hex content hash of the canonical rendering
};

// `when <expr> then <action>` lines terminated by `else <action>`.
StrategyAst parse_strategy(const std::string& source,
                           const FeatureCatalog& catalog = FeatureCatalog::defaults());

// Canonical formatting; parse(render(ast)) is structurally equal to ast.
std::string render_strategy(const StrategyAst& ast);

struct EvalResult {
    Action action = Action::Hold;
    ActionDistribution distribution;
    bool ready = true; // false when a referenced factor is missing (maps to hold)
};

// First true rule fires; distribution is softmax over per-action activation
// margins at temperature tau. Margin of `x < theta` is (theta-x)/max(1,|theta|);
// `and` takes min, `or` max, `not` negates. Actions never referenced by any
// rule (nor the default) get probability exactly 0.
EvalResult evaluate_strategy(const StrategyAst& ast, const MarketState& state,
                             double tau = 1.0);

enum class MutationKind {
    ThresholdJitter,
    OperatorSwap,
    RuleInsert,
    RuleDelete,
    ActionFlip,
    FactorSubstitute
};

const char* mutation_kind_name(MutationKind k);

struct MutationSpec {
    MutationKind kind = MutationKind::ThresholdJitter;
    double magnitude = 0.1; // threshold-jitter relative scale, in [0, 1]
    std::uint64_t seed = 0;
};

struct MutationResult {
    StrategyAst ast;
    bool applied = false; // false: mutation inapplicable, ast == input
};

// Exactly one mutation, deterministic in (ast, spec).
MutationResult mutate_strategy(const StrategyAst& ast, const MutationSpec& spec,
                               const FeatureCatalog& catalog = FeatureCatalog::defaults());

} // namespace factfin

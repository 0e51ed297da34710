#include "factfin/strategy.hpp"

#include "factfin/errors.hpp"
#include "factfin/rng.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

namespace factfin {

const char* action_name(Action a) {
    switch (a) {
    case Action::Buy: return "buy";
    case Action::Sell: return "sell";
    case Action::Hold: return "hold";
    }
    return "hold";
}

std::optional<Action> action_from_name(const std::string& name) {
    if (name == "buy") return Action::Buy;
    if (name == "sell") return Action::Sell;
    if (name == "hold") return Action::Hold;
    return std::nullopt;
}

Action ActionDistribution::argmax() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < p.size(); ++i)
        if (p[i] > p[best]) best = i;
    return static_cast<Action>(best);
}

double ActionDistribution::confidence() const {
    return *std::max_element(p.begin(), p.end());
}

bool expr_equal(const ExprPtr& x, const ExprPtr& y) {
    if (!x || !y) return !x && !y;
    if (x->kind != y->kind) return false;
    switch (x->kind) {
    case Expr::Kind::Cmp:
        return x->op == y->op && x->lhs == y->lhs && x->rhs == y->rhs;
    case Expr::Kind::Not:
        return expr_equal(x->a, y->a);
    case Expr::Kind::And:
    case Expr::Kind::Or:
        return expr_equal(x->a, y->a) && expr_equal(x->b, y->b);
    }
    return false;
}

bool StrategyAst::operator==(const StrategyAst& other) const {
    if (default_action != other.default_action || rules.size() != other.rules.size())
        return false;
    for (std::size_t i = 0; i < rules.size(); ++i)
        if (rules[i].action != other.rules[i].action ||
            !expr_equal(rules[i].condition, other.rules[i].condition))
            return false;
    return true;
}

std::string StrategyAst::id() const {
    const std::string text = render_strategy(*this);
    const std::uint64_t h = fnv1a64(text.data(), text.size());
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// --- feature catalog ---------------------------------------------------

namespace {

const std::vector<std::string> kFixedNames = {
    "macd_hist", "kdj_k", "kdj_d", "kdj_j", "close", "open", "high", "low",
    "volume", "sentiment", "pe", "pb", "roe"};

const std::vector<std::string> kCalendarNames = {"date_serial", "day", "month", "year"};

bool is_parametric(const std::string& name) {
    for (const char* prefix : {"rsi_", "sma_"}) {
        const std::string p = prefix;
        if (name.rfind(p, 0) == 0) {
            const std::string rest = name.substr(p.size());
            if (rest.empty() || rest.size() > 3 ||
                rest.find_first_not_of("0123456789") != std::string::npos)
                return false;
            const int n = std::stoi(rest);
            return n >= 1 && n <= 500;
        }
    }
    return false;
}

} // namespace

bool FeatureCatalog::allows(const std::string& canonical) const {
    if (is_parametric(canonical)) return true;
    if (std::find(kFixedNames.begin(), kFixedNames.end(), canonical) != kFixedNames.end())
        return true;
    if (calendar &&
        std::find(kCalendarNames.begin(), kCalendarNames.end(), canonical) !=
            kCalendarNames.end())
        return true;
    return false;
}

FeatureCatalog FeatureCatalog::defaults() { return FeatureCatalog{}; }
FeatureCatalog FeatureCatalog::with_calendar() { return FeatureCatalog{true}; }

// --- parser -------------------------------------------------------------

namespace {

struct Token {
    enum class Type { Ident, Number, Punct, End };
    Type type = Type::End;
    std::string text;
    double number = 0;
    int line = 1, col = 1;
};

class Lexer {
public:
    explicit Lexer(const std::string& src) : src_(src) { advance(); }

    const Token& peek() const { return current_; }

    Token take() {
        Token t = current_;
        advance();
        return t;
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError("syntax error at line " + std::to_string(current_.line) +
                         ", column " + std::to_string(current_.col) + ": " + msg);
    }

private:
    void advance() {
        while (pos_ < src_.size() &&
               (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\r' ||
                src_[pos_] == '\n' || src_[pos_] == '#')) {
            if (src_[pos_] == '#') { // comment to end of line
                while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
                continue;
            }
            if (src_[pos_] == '\n') {
                ++line_;
                col_ = 1;
            } else {
                ++col_;
            }
            ++pos_;
        }
        current_ = Token{};
        current_.line = line_;
        current_.col = col_;
        if (pos_ >= src_.size()) {
            current_.type = Token::Type::End;
            return;
        }
        const char c = src_[pos_];
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
                ++pos_;
            current_.type = Token::Type::Ident;
            current_.text = src_.substr(start, pos_ - start);
        } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '.') {
            std::size_t start = pos_;
            if (src_[pos_] == '-') ++pos_;
            while (pos_ < src_.size() &&
                   (std::isdigit(static_cast<unsigned char>(src_[pos_])) ||
                    src_[pos_] == '.' || src_[pos_] == 'e' || src_[pos_] == 'E' ||
                    ((src_[pos_] == '+' || src_[pos_] == '-') &&
                     (src_[pos_ - 1] == 'e' || src_[pos_ - 1] == 'E'))))
                ++pos_;
            const std::string text = src_.substr(start, pos_ - start);
            double v;
            auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
            if (ec != std::errc{} || p != text.data() + text.size())
                throw ParseError("syntax error at line " + std::to_string(line_) +
                                 ", column " + std::to_string(col_) + ": bad number '" +
                                 text + "'");
            current_.type = Token::Type::Number;
            current_.text = text;
            current_.number = v;
        } else if (c == '(' || c == ')') {
            current_.type = Token::Type::Punct;
            current_.text = std::string(1, c);
            ++pos_;
        } else if (c == '<' || c == '>') {
            std::string t(1, c);
            ++pos_;
            if (pos_ < src_.size() && src_[pos_] == '=') {
                t += '=';
                ++pos_;
            }
            current_.type = Token::Type::Punct;
            current_.text = t;
        } else {
            throw ParseError("syntax error at line " + std::to_string(line_) +
                             ", column " + std::to_string(col_) +
                             ": unexpected character '" + std::string(1, c) + "'");
        }
        col_ = current_.col + static_cast<int>(std::max<std::size_t>(current_.text.size(), 1));
    }

    const std::string& src_;
    std::size_t pos_ = 0;
    int line_ = 1, col_ = 1;
    Token current_;
};

class Parser {
public:
    Parser(const std::string& src, const FeatureCatalog& catalog)
        : lex_(src), catalog_(catalog) {}

    StrategyAst parse() {
        StrategyAst ast;
        while (true) {
            const Token& t = lex_.peek();
            if (t.type == Token::Type::End)
                lex_.fail("missing 'else' clause");
            if (t.type != Token::Type::Ident) lex_.fail("expected 'when' or 'else'");
            if (t.text == "when") {
                lex_.take();
                Rule rule;
                rule.condition = parse_expr();
                expect_ident("then");
                rule.action = parse_action();
                ast.rules.push_back(std::move(rule));
                if (static_cast<int>(ast.rules.size()) > kMaxRules)
                    throw ValidationError("strategy exceeds " + std::to_string(kMaxRules) +
                                          " rules");
            } else if (t.text == "else") {
                lex_.take();
                ast.default_action = parse_action();
                if (lex_.peek().type != Token::Type::End)
                    lex_.fail("trailing input after 'else' clause");
                return ast;
            } else {
                lex_.fail("expected 'when' or 'else', got '" + t.text + "'");
            }
        }
    }

private:
    void expect_ident(const std::string& word) {
        const Token t = lex_.take();
        if (t.type != Token::Type::Ident || t.text != word)
            lex_.fail("expected '" + word + "'");
    }

    Action parse_action() {
        const Token t = lex_.take();
        if (t.type == Token::Type::Ident) {
            if (auto a = action_from_name(t.text)) return *a;
        }
        lex_.fail("expected action (buy/sell/hold)");
    }

    ExprPtr parse_expr() { return parse_or(); }

    ExprPtr parse_or() {
        ExprPtr left = parse_and();
        while (lex_.peek().type == Token::Type::Ident && lex_.peek().text == "or") {
            lex_.take();
            auto node = std::make_shared<Expr>();
            node->kind = Expr::Kind::Or;
            node->a = left;
            node->b = parse_and();
            left = node;
        }
        return left;
    }

    ExprPtr parse_and() {
        ExprPtr left = parse_not();
        while (lex_.peek().type == Token::Type::Ident && lex_.peek().text == "and") {
            lex_.take();
            auto node = std::make_shared<Expr>();
            node->kind = Expr::Kind::And;
            node->a = left;
            node->b = parse_not();
            left = node;
        }
        return left;
    }

    ExprPtr parse_not() {
        if (lex_.peek().type == Token::Type::Ident && lex_.peek().text == "not") {
            lex_.take();
            auto node = std::make_shared<Expr>();
            node->kind = Expr::Kind::Not;
            node->a = parse_not();
            return node;
        }
        return parse_primary();
    }

    ExprPtr parse_primary() {
        if (lex_.peek().type == Token::Type::Punct && lex_.peek().text == "(") {
            lex_.take();
            ExprPtr inner = parse_expr();
            const Token t = lex_.take();
            if (t.type != Token::Type::Punct || t.text != ")")
                lex_.fail("expected ')'");
            return inner;
        }
        return parse_comparison();
    }

    ExprPtr parse_comparison() {
        auto node = std::make_shared<Expr>();
        node->kind = Expr::Kind::Cmp;
        node->lhs = parse_operand();
        const Token t = lex_.take();
        if (t.type != Token::Type::Punct)
            lex_.fail("expected comparison operator");
        if (t.text == "<") node->op = CmpOp::Lt;
        else if (t.text == "<=") node->op = CmpOp::Le;
        else if (t.text == ">") node->op = CmpOp::Gt;
        else if (t.text == ">=") node->op = CmpOp::Ge;
        else lex_.fail("expected comparison operator, got '" + t.text + "'");
        node->rhs = parse_operand();
        return node;
    }

    Operand parse_operand() {
        const Token t = lex_.take();
        Operand op;
        if (t.type == Token::Type::Number) {
            if (!std::isfinite(t.number)) lex_.fail("non-finite numeric literal");
            op.kind = Operand::Kind::Number;
            op.number = t.number;
            return op;
        }
        if (t.type != Token::Type::Ident)
            lex_.fail("expected factor reference or number");
        std::string name = t.text;
        if (lex_.peek().type == Token::Type::Punct && lex_.peek().text == "(") {
            lex_.take();
            const Token arg = lex_.take();
            if (arg.type != Token::Type::Number || arg.number != std::floor(arg.number) ||
                arg.number < 1)
                lex_.fail("expected positive integer argument to '" + name + "'");
            const Token close = lex_.take();
            if (close.type != Token::Type::Punct || close.text != ")")
                lex_.fail("expected ')'");
            name += "_" + std::to_string(static_cast<long long>(arg.number));
        }
        if (!catalog_.allows(name))
            throw ParseError("unknown factor name '" + name + "' at line " +
                             std::to_string(t.line));
        op.kind = Operand::Kind::Factor;
        op.factor = name;
        return op;
    }

    Lexer lex_;
    const FeatureCatalog& catalog_;
};

std::string format_number(double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, p);
}

std::string render_operand(const Operand& op) {
    if (op.kind == Operand::Kind::Number) return format_number(op.number);
    // parametric names render in call form: rsi_14 -> rsi(14)
    for (const char* prefix : {"rsi_", "sma_"}) {
        const std::string p = prefix;
        if (op.factor.rfind(p, 0) == 0 && is_parametric(op.factor))
            return op.factor.substr(0, p.size() - 1) + "(" + op.factor.substr(p.size()) + ")";
    }
    return op.factor;
}

const char* cmp_text(CmpOp op) {
    switch (op) {
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Gt: return ">";
    case CmpOp::Ge: return ">=";
    }
    return "<";
}

int precedence(const ExprPtr& e) {
    switch (e->kind) {
    case Expr::Kind::Or: return 1;
    case Expr::Kind::And: return 2;
    case Expr::Kind::Not: return 3;
    case Expr::Kind::Cmp: return 4;
    }
    return 4;
}

std::string render_expr(const ExprPtr& e, int parent_prec) {
    std::string out;
    switch (e->kind) {
    case Expr::Kind::Cmp:
        out = render_operand(e->lhs) + " " + cmp_text(e->op) + " " + render_operand(e->rhs);
        break;
    case Expr::Kind::Not:
        out = "not " + render_expr(e->a, precedence(e));
        break;
    case Expr::Kind::And:
        out = render_expr(e->a, precedence(e)) + " and " + render_expr(e->b, precedence(e) + 1);
        break;
    case Expr::Kind::Or:
        out = render_expr(e->a, precedence(e)) + " or " + render_expr(e->b, precedence(e) + 1);
        break;
    }
    if (precedence(e) < parent_prec) return "(" + out + ")";
    return out;
}

} // namespace

StrategyAst parse_strategy(const std::string& source, const FeatureCatalog& catalog) {
    return Parser(source, catalog).parse();
}

std::string render_strategy(const StrategyAst& ast) {
    std::ostringstream out;
    for (const auto& rule : ast.rules)
        out << "when " << render_expr(rule.condition, 0) << " then "
            << action_name(rule.action) << '\n';
    out << "else " << action_name(ast.default_action) << '\n';
    return out.str();
}

// --- evaluation ----------------------------------------------------------

namespace {

std::optional<double> resolve_operand(const Operand& op, const MarketState& state) {
    if (op.kind == Operand::Kind::Number) return op.number;
    const std::string& name = op.factor;
    if (!state.window.empty()) {
        const PriceBar& bar = state.window.back();
        if (name == "close") return bar.close;
        if (name == "open") return bar.open;
        if (name == "high") return bar.high;
        if (name == "low") return bar.low;
        if (name == "volume") return bar.volume;
    }
    if (name == "sentiment") return state.news.sentiment;
    if (name == "date_serial") return double(state.date.serial);
    if (name == "day") return double(date_day(state.date));
    if (name == "month") return double(date_month(state.date));
    if (name == "year") return double(date_year(state.date));
    auto it = state.factors.find(name);
    if (it != state.factors.end()) return it->second;
    return std::nullopt; // not in the state: behaves like a missing value
}

struct CondEval {
    bool truth = false;
    double margin = 0;
};

// nullopt means a referenced value is missing ("not ready").
std::optional<CondEval> eval_expr(const ExprPtr& e, const MarketState& state) {
    switch (e->kind) {
    case Expr::Kind::Cmp: {
        const auto x = resolve_operand(e->lhs, state);
        const auto y = resolve_operand(e->rhs, state);
        if (!x || !y) return std::nullopt;
        const double norm = std::max(1.0, std::abs(*y));
        CondEval r;
        switch (e->op) {
        case CmpOp::Lt:
            r.truth = *x < *y;
            r.margin = (*y - *x) / norm;
            break;
        case CmpOp::Le:
            r.truth = *x <= *y;
            r.margin = (*y - *x) / norm;
            break;
        case CmpOp::Gt:
            r.truth = *x > *y;
            r.margin = (*x - *y) / norm;
            break;
        case CmpOp::Ge:
            r.truth = *x >= *y;
            r.margin = (*x - *y) / norm;
            break;
        }
        return r;
    }
    case Expr::Kind::Not: {
        auto inner = eval_expr(e->a, state);
        if (!inner) return std::nullopt;
        return CondEval{!inner->truth, -inner->margin};
    }
    case Expr::Kind::And: {
        auto a = eval_expr(e->a, state);
        auto b = eval_expr(e->b, state);
        if (!a || !b) return std::nullopt;
        return CondEval{a->truth && b->truth, std::min(a->margin, b->margin)};
    }
    case Expr::Kind::Or: {
        auto a = eval_expr(e->a, state);
        auto b = eval_expr(e->b, state);
        if (!a || !b) return std::nullopt;
        return CondEval{a->truth || b->truth, std::max(a->margin, b->margin)};
    }
    }
    return std::nullopt;
}

} // namespace

EvalResult evaluate_strategy(const StrategyAst& ast, const MarketState& state, double tau) {
    EvalResult result;

    std::array<std::optional<double>, 3> action_margin;
    Action fired = ast.default_action;
    bool fired_set = false;

    for (const auto& rule : ast.rules) {
        const auto cond = eval_expr(rule.condition, state);
        if (!cond) {
            // missing input anywhere: not ready, hold with full confidence
            result.action = Action::Hold;
            result.ready = false;
            result.distribution[Action::Hold] = 1.0;
            return result;
        }
        if (cond->truth && !fired_set) {
            fired = rule.action;
            fired_set = true;
        }
        auto& slot = action_margin[static_cast<std::size_t>(rule.action)];
        if (!slot || cond->margin > *slot) slot = cond->margin;
    }
    // default clause participates with margin 0
    auto& dslot = action_margin[static_cast<std::size_t>(ast.default_action)];
    if (!dslot || 0.0 > *dslot) dslot = 0.0;

    result.action = fired;

    // softmax over the referenced actions only; others get exactly 0
    double max_m = -1e300;
    for (const auto& m : action_margin)
        if (m) max_m = std::max(max_m, *m);
    double z = 0;
    std::array<double, 3> expo{};
    for (std::size_t i = 0; i < 3; ++i) {
        if (action_margin[i]) {
            expo[i] = std::exp((*action_margin[i] - max_m) / tau);
            z += expo[i];
        }
    }
    for (std::size_t i = 0; i < 3; ++i)
        result.distribution.p[i] = action_margin[i] ? expo[i] / z : 0.0;
    return result;
}

// --- mutation -------------------------------------------------------------

const char* mutation_kind_name(MutationKind k) {
    switch (k) {
    case MutationKind::ThresholdJitter: return "threshold-jitter";
    case MutationKind::OperatorSwap: return "operator-swap";
    case MutationKind::RuleInsert: return "rule-insert";
    case MutationKind::RuleDelete: return "rule-delete";
    case MutationKind::ActionFlip: return "action-flip";
    case MutationKind::FactorSubstitute: return "factor-substitute";
    }
    return "?";
}

namespace {

struct InsertableFactor {
    const char* name;
    double lo, hi;
};

// Factors rule-insert and factor-substitute draw from, with plausible
// threshold ranges.
constexpr InsertableFactor kInsertable[] = {
    {"rsi_14", 5.0, 95.0},
    {"kdj_k", 5.0, 95.0},
    {"sentiment", -1.0, 1.0},
    {"macd_hist", -5.0, 5.0},
};

template <typename Fn>
ExprPtr rebuild(const ExprPtr& e, Fn&& fn) {
    ExprPtr replaced = fn(e);
    if (replaced) return replaced;
    switch (e->kind) {
    case Expr::Kind::Cmp:
        return e;
    case Expr::Kind::Not: {
        ExprPtr a = rebuild(e->a, fn);
        if (a == e->a) return e;
        auto node = std::make_shared<Expr>(*e);
        node->a = a;
        return node;
    }
    case Expr::Kind::And:
    case Expr::Kind::Or: {
        ExprPtr a = rebuild(e->a, fn);
        ExprPtr b = rebuild(e->b, fn);
        if (a == e->a && b == e->b) return e;
        auto node = std::make_shared<Expr>(*e);
        node->a = a;
        node->b = b;
        return node;
    }
    }
    return e;
}

template <typename Fn>
void visit(const ExprPtr& e, Fn&& fn) {
    fn(e);
    if (e->kind == Expr::Kind::Not) {
        visit(e->a, fn);
    } else if (e->kind == Expr::Kind::And || e->kind == Expr::Kind::Or) {
        visit(e->a, fn);
        visit(e->b, fn);
    }
}

double round4(double v) { return std::round(v * 1e4) / 1e4; }

} // namespace

MutationResult mutate_strategy(const StrategyAst& ast, const MutationSpec& spec,
                               const FeatureCatalog& catalog) {
    (void)catalog;
    if (spec.magnitude < 0 || spec.magnitude > 1)
        throw ConfigError("mutation magnitude out of [0, 1]");
    CounterRng rng(spec.seed);
    MutationResult result;
    result.ast = ast;

    switch (spec.kind) {
    case MutationKind::ThresholdJitter: {
        // count numeric operands over all rule conditions
        int count = 0;
        for (const auto& rule : ast.rules)
            visit(rule.condition, [&](const ExprPtr& e) {
                if (e->kind != Expr::Kind::Cmp) return;
                if (e->lhs.kind == Operand::Kind::Number) ++count;
                if (e->rhs.kind == Operand::Kind::Number) ++count;
            });
        if (count == 0) return result;
        const int target = static_cast<int>(rng.next_below(count));
        const double shift = spec.magnitude * (2.0 * rng.next_uniform() - 1.0);
        int idx = 0;
        for (auto& rule : result.ast.rules) {
            rule.condition = rebuild(rule.condition, [&](const ExprPtr& e) -> ExprPtr {
                if (e->kind != Expr::Kind::Cmp) return nullptr;
                auto node = std::make_shared<Expr>(*e);
                bool hit = false;
                for (Operand* op : {&node->lhs, &node->rhs}) {
                    if (op->kind != Operand::Kind::Number) continue;
                    if (idx++ == target) {
                        const double scale = std::max(1.0, std::abs(op->number));
                        op->number = round4(op->number + shift * scale);
                        hit = true;
                    }
                }
                return hit ? ExprPtr(node) : nullptr;
            });
        }
        result.applied = true;
        return result;
    }
    case MutationKind::OperatorSwap: {
        int count = 0;
        for (const auto& rule : ast.rules)
            visit(rule.condition, [&](const ExprPtr& e) {
                if (e->kind != Expr::Kind::Not) ++count;
            });
        if (count == 0) return result;
        const int target = static_cast<int>(rng.next_below(count));
        int idx = 0;
        for (auto& rule : result.ast.rules) {
            rule.condition = rebuild(rule.condition, [&](const ExprPtr& e) -> ExprPtr {
                if (e->kind == Expr::Kind::Not) return nullptr;
                if (idx++ != target) return nullptr;
                auto node = std::make_shared<Expr>(*e);
                switch (e->kind) {
                case Expr::Kind::Cmp:
                    node->op = e->op == CmpOp::Lt   ? CmpOp::Gt
                               : e->op == CmpOp::Gt ? CmpOp::Lt
                               : e->op == CmpOp::Le ? CmpOp::Ge
                                                    : CmpOp::Le;
                    break;
                case Expr::Kind::And:
                    node->kind = Expr::Kind::Or;
                    break;
                case Expr::Kind::Or:
                    node->kind = Expr::Kind::And;
                    break;
                default:
                    break;
                }
                return node;
            });
        }
        result.applied = true;
        return result;
    }
    case MutationKind::RuleInsert: {
        if (static_cast<int>(ast.rules.size()) >= kMaxRules) return result;
        const auto& f = kInsertable[rng.next_below(std::size(kInsertable))];
        auto cmp = std::make_shared<Expr>();
        cmp->kind = Expr::Kind::Cmp;
        cmp->lhs = Operand{Operand::Kind::Factor, f.name, 0};
        cmp->op = rng.next_below(2) == 0 ? CmpOp::Lt : CmpOp::Gt;
        cmp->rhs = Operand{Operand::Kind::Number, "", round4(rng.next_uniform(f.lo, f.hi))};
        Rule rule;
        rule.condition = cmp;
        rule.action = static_cast<Action>(rng.next_below(3));
        const std::size_t pos = rng.next_below(ast.rules.size() + 1);
        result.ast.rules.insert(result.ast.rules.begin() + pos, std::move(rule));
        result.applied = true;
        return result;
    }
    case MutationKind::RuleDelete: {
        if (ast.rules.empty()) return result;
        const std::size_t pos = rng.next_below(ast.rules.size());
        result.ast.rules.erase(result.ast.rules.begin() + pos);
        result.applied = true;
        return result;
    }
    case MutationKind::ActionFlip: {
        const std::size_t slots = ast.rules.size() + 1; // +1 for the default clause
        const std::size_t pos = rng.next_below(slots);
        Action& target = pos < ast.rules.size() ? result.ast.rules[pos].action
                                                : result.ast.default_action;
        const int step = 1 + static_cast<int>(rng.next_below(2));
        target = static_cast<Action>((static_cast<int>(target) + step) % 3);
        result.applied = true;
        return result;
    }
    case MutationKind::FactorSubstitute: {
        int count = 0;
        for (const auto& rule : ast.rules)
            visit(rule.condition, [&](const ExprPtr& e) {
                if (e->kind != Expr::Kind::Cmp) return;
                if (e->lhs.kind == Operand::Kind::Factor) ++count;
                if (e->rhs.kind == Operand::Kind::Factor) ++count;
            });
        if (count == 0) return result;
        const int target = static_cast<int>(rng.next_below(count));
        const std::uint64_t pick = rng.next_u64();
        int idx = 0;
        for (auto& rule : result.ast.rules) {
            rule.condition = rebuild(rule.condition, [&](const ExprPtr& e) -> ExprPtr {
                if (e->kind != Expr::Kind::Cmp) return nullptr;
                auto node = std::make_shared<Expr>(*e);
                bool hit = false;
                for (Operand* op : {&node->lhs, &node->rhs}) {
                    if (op->kind != Operand::Kind::Factor) continue;
                    if (idx++ == target) {
                        // replace with a different insertable factor
                        std::vector<const char*> candidates;
                        for (const auto& f : kInsertable)
                            if (op->factor != f.name) candidates.push_back(f.name);
                        op->factor = candidates[pick % candidates.size()];
                        hit = true;
                    }
                }
                return hit ? ExprPtr(node) : nullptr;
            });
        }
        result.applied = true;
        return result;
    }
    }
    return result;
}

} // namespace factfin

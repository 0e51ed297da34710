#include "factfin/audit.hpp"

#include "factfin/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace factfin {

std::string qa_category_name(QaCategory c) {
    switch (c) {
    case QaCategory::Price: return "price";
    case QaCategory::Trend: return "trend";
    case QaCategory::Event: return "event";
    case QaCategory::Market: return "market";
    }
    return "price";
}

QaCategory parse_qa_category(const std::string& name) {
    if (name == "price") return QaCategory::Price;
    if (name == "trend") return QaCategory::Trend;
    if (name == "event") return QaCategory::Event;
    if (name == "market") return QaCategory::Market;
    throw ValidationError("unknown QA category '" + name + "'");
}

namespace {

double round2(double v) { return std::round(v * 100.0) / 100.0; }

std::vector<std::string> answer_tokens(const std::string& text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char ch : text) {
        const unsigned char u = static_cast<unsigned char>(ch);
        if (std::isalnum(u)) {
            cur.push_back(static_cast<char>(std::tolower(u)));
        } else if (!cur.empty()) {
            tokens.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(cur);
    return tokens;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return s;
}

// a concept matches when any alternative stem is a prefix of some token
bool concept_matches(const ConceptSet& concept_set,
                     const std::vector<std::string>& tokens) {
    for (const std::string& stem : concept_set) {
        const std::string s = lower(stem);
        for (const std::string& tok : tokens)
            if (tok.rfind(s, 0) == 0) return true;
    }
    return false;
}

bool all_concepts_match(const std::vector<ConceptSet>& concepts,
                        const std::vector<std::string>& tokens) {
    if (concepts.empty()) return false;
    for (const auto& c : concepts)
        if (!concept_matches(c, tokens)) return false;
    return true;
}

double score_bands(const QaItem& item, double value) {
    if (!item.full_band || !item.half_band)
        throw ScoringError("item " + item.id + " has no scoring bands");
    if (item.full_band->contains(value)) return 1.0;
    if (item.half_band->contains(value)) return 0.5;
    return 0.0;
}

} // namespace

PriceBands make_price_bands(double truth) {
    PriceBands b;
    b.full = {round2(truth * 0.99), round2(truth * 1.01)};
    b.half = {round2(truth * 0.97), round2(truth * 1.03)};
    return b;
}

double score_answer(const QaItem& item, const AnswerRecord& answer) {
    switch (item.category) {
    case QaCategory::Price: {
        if (answer.kind != AnswerKind::Number)
            throw ScoringError("price item " + item.id + " needs a numeric answer");
        return score_bands(item, answer.number);
    }
    case QaCategory::Trend: {
        if (answer.kind != AnswerKind::Trend)
            throw ScoringError("trend item " + item.id + " needs a trend answer");
        if (!item.trend_magnitude)
            throw ScoringError("trend item " + item.id + " has no ground-truth magnitude");
        double points = 0;
        if (lower(answer.trend_direction) == lower(item.trend_direction)) {
            points += 0.5;
            if (std::abs(answer.trend_magnitude - *item.trend_magnitude) <=
                item.magnitude_tolerance)
                points += 0.5;
        }
        return points;
    }
    case QaCategory::Event: {
        if (answer.kind != AnswerKind::Text)
            throw ScoringError("event item " + item.id + " needs a text answer");
        const auto tokens = answer_tokens(answer.text);
        if (all_concepts_match(item.required_concepts, tokens)) return 1.0;
        if (all_concepts_match(item.partial_concepts, tokens)) return 0.5;
        return 0.0;
    }
    case QaCategory::Market: {
        if (answer.kind == AnswerKind::Number) return score_bands(item, answer.number);
        if (answer.kind != AnswerKind::Symbol)
            throw ScoringError("market item " + item.id +
                               " needs a symbol or numeric answer");
        const std::string sym = lower(answer.text);
        for (const auto& s : item.full_symbols)
            if (lower(s) == sym) return 1.0;
        for (const auto& s : item.half_symbols)
            if (lower(s) == sym) return 0.5;
        return 0.0;
    }
    }
    throw ScoringError("unreachable category");
}

BenchReport bench_accuracy(const std::vector<QaItem>& items,
                           const std::vector<AnswerRecord>& answers) {
    std::map<std::string, const AnswerRecord*> by_id;
    for (const auto& a : answers) {
        if (!by_id.emplace(a.item_id, &a).second)
            throw ValidationError("duplicate answer for item " + a.item_id);
    }
    std::map<std::string, bool> known;
    for (const auto& item : items) known[item.id] = true;
    for (const auto& a : answers)
        if (!known.count(a.item_id))
            throw ValidationError("answer references unknown item " + a.item_id);

    BenchReport report;
    report.item_count = items.size();
    double weighted_sum = 0;
    std::map<std::string, double> cat_sum;
    for (const auto& item : items) {
        ItemScore score;
        score.item_id = item.id;
        score.category = item.category;
        score.weight = item.weight;
        const auto it = by_id.find(item.id);
        if (it != by_id.end()) {
            score.answered = true;
            score.points = score_answer(item, *it->second);
            ++report.answered_count;
        } else {
            report.unanswered.push_back(item.id);
        }
        weighted_sum += score.points * score.weight;
        const std::string cat = qa_category_name(item.category);
        cat_sum[cat] += score.points * score.weight;
        report.category_counts[cat] += 1;
        report.items.push_back(std::move(score));
    }
    report.accuracy = items.empty() ? 0.0 : weighted_sum / double(items.size());
    for (const auto& [cat, sum] : cat_sum)
        report.category_accuracy[cat] = sum / double(report.category_counts[cat]);
    return report;
}

double bias_score(const std::vector<double>& f_train, const std::vector<double>& p_score) {
    if (f_train.empty() || f_train.size() != p_score.size())
        throw ValidationError("bias_score needs matched nonempty frequency/score vectors");
    double total = 0;
    for (double f : f_train) {
        if (f < 0) throw ValidationError("training frequencies must be >= 0");
        total += f;
    }
    if (total <= 0) throw ValidationError("total training frequency must be positive");
    const double S = double(f_train.size());
    double weighted = 0;
    for (std::size_t s = 0; s < f_train.size(); ++s)
        weighted += f_train[s] * p_score[s] / total;
    return weighted / S - 1.0 / S;
}

double memory_score(const std::vector<std::vector<double>>& model_vectors,
                    const std::vector<std::vector<double>>& hist_vectors) {
    if (model_vectors.empty() || model_vectors.size() != hist_vectors.size())
        throw ValidationError("memory_score needs matched nonempty vector sequences");
    double sum = 0;
    for (std::size_t t = 0; t < model_vectors.size(); ++t) {
        const auto& a = model_vectors[t];
        const auto& b = hist_vectors[t];
        if (a.size() != b.size())
            throw ValidationError("vector dimension mismatch at t=" + std::to_string(t));
        double dot = 0, na = 0, nb = 0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            dot += a[i] * b[i];
            na += a[i] * a[i];
            nb += b[i] * b[i];
        }
        if (na == 0 || nb == 0)
            throw ValidationError("zero vector at t=" + std::to_string(t));
        sum += dot / (std::sqrt(na) * std::sqrt(nb));
    }
    return sum / double(model_vectors.size());
}

double generalization_change(double acc_pre, double acc_post) {
    if (acc_pre <= 0)
        throw UndefinedBaselineError("generalization change undefined for acc_pre <= 0");
    return (acc_post - acc_pre) / acc_pre * 100.0;
}

namespace {

Band band_from_json(const nlohmann::json& j) {
    Band b{j.at(0).get<double>(), j.at(1).get<double>()};
    if (b.lo > b.hi) throw ValidationError("band lower bound exceeds upper bound");
    return b;
}

std::vector<ConceptSet> concepts_from_json(const nlohmann::json& j) {
    std::vector<ConceptSet> out;
    for (const auto& set : j) out.push_back(set.get<ConceptSet>());
    return out;
}

} // namespace

std::vector<QaItem> load_qa_items(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open QA items file " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    if (!doc.is_array()) throw ValidationError(path + ": expected a JSON array");
    std::vector<QaItem> items;
    for (const auto& j : doc) {
        QaItem item;
        item.id = j.at("id").get<std::string>();
        item.category = parse_qa_category(j.at("category").get<std::string>());
        item.question = j.value("question", std::string{});
        item.weight = j.value("weight", 1.0);
        if (j.contains("truth_value")) item.truth_value = j["truth_value"].get<double>();
        if (j.contains("full_band")) item.full_band = band_from_json(j["full_band"]);
        if (j.contains("half_band")) item.half_band = band_from_json(j["half_band"]);
        if (item.truth_value && !item.full_band) {
            const PriceBands bands = make_price_bands(*item.truth_value);
            item.full_band = bands.full;
            item.half_band = bands.half;
        }
        if (item.full_band && item.half_band) {
            // full band must nest inside the half band
            if (item.full_band->lo < item.half_band->lo ||
                item.full_band->hi > item.half_band->hi)
                throw ValidationError("item " + item.id + ": full band not inside half band");
        }
        item.trend_direction = j.value("trend_direction", std::string{});
        if (j.contains("trend_magnitude"))
            item.trend_magnitude = j["trend_magnitude"].get<double>();
        item.magnitude_tolerance = j.value("magnitude_tolerance", 5.0);
        if (j.contains("required_concepts"))
            item.required_concepts = concepts_from_json(j["required_concepts"]);
        if (j.contains("partial_concepts"))
            item.partial_concepts = concepts_from_json(j["partial_concepts"]);
        if (j.contains("full_symbols"))
            item.full_symbols = j["full_symbols"].get<std::vector<std::string>>();
        if (j.contains("half_symbols"))
            item.half_symbols = j["half_symbols"].get<std::vector<std::string>>();
        for (const auto& f : item.full_symbols)
            for (const auto& h : item.half_symbols)
                if (f == h)
                    throw ValidationError("item " + item.id + ": symbol " + f +
                                          " in both credit sets");
        items.push_back(std::move(item));
    }
    return items;
}

std::vector<AnswerRecord> load_answers_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open answers file " + path);
    std::vector<AnswerRecord> answers;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        AnswerRecord a;
        a.item_id = j.at("item_id").get<std::string>();
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "number") {
            a.kind = AnswerKind::Number;
            a.number = j.at("value").get<double>();
        } else if (kind == "trend") {
            a.kind = AnswerKind::Trend;
            a.trend_direction = j.at("direction").get<std::string>();
            a.trend_magnitude = j.at("magnitude").get<double>();
        } else if (kind == "text") {
            a.kind = AnswerKind::Text;
            a.text = j.at("text").get<std::string>();
        } else if (kind == "symbol") {
            a.kind = AnswerKind::Symbol;
            a.text = j.at("symbol").get<std::string>();
        } else {
            throw ValidationError(path + ":" + std::to_string(line_no) +
                                  ": unknown answer kind '" + kind + "'");
        }
        answers.push_back(std::move(a));
    }
    return answers;
}

std::string bench_report_to_json(const BenchReport& report) {
    nlohmann::json j;
    j["schema"] = "factfin.bench_report.v1";
    j["accuracy"] = report.accuracy;
    j["item_count"] = report.item_count;
    j["answered_count"] = report.answered_count;
    j["category_accuracy"] = report.category_accuracy;
    j["unanswered"] = report.unanswered;
    nlohmann::json items = nlohmann::json::array();
    for (const auto& s : report.items)
        items.push_back({{"item_id", s.item_id},
                         {"category", qa_category_name(s.category)},
                         {"points", s.points},
                         {"weight", s.weight},
                         {"answered", s.answered}});
    j["items"] = items;
    return j.dump(2);
}

std::string bench_report_category_csv(const BenchReport& report) {
    std::ostringstream out;
    out.precision(17);
    out << "category,count,accuracy\n";
    for (const auto& [cat, acc] : report.category_accuracy)
        out << cat << ',' << report.category_counts.at(cat) << ',' << acc << '\n';
    return out.str();
}

} // namespace factfin

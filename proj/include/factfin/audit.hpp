#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace factfin {

enum class QaCategory { Price, Trend, Event, Market };

std::string qa_category_name(QaCategory c);
QaCategory parse_qa_category(const std::string& name);

struct Band {
    double lo = 0;
    double hi = 0;
    bool contains(double v) const { return v >= lo && v <= hi; }
};

// Full/half price bands from a truth value: +/-1% and +/-3%, each endpoint
// rounded to two decimals (the precision the rubric tables print).
struct PriceBands {
    Band full;
    Band half;
};
PriceBands make_price_bands(double truth);

// One scoring concept: matched when any of its alternative keyword stems
// prefix-matches a token of the answer text (case-insensitive).
using ConceptSet = std::vector<std::string>;

struct QaItem {
    std::string id;
    QaCategory category = QaCategory::Price;
    std::string question;
    double weight = 1.0;

    // price (and band-scored market items)
    std::optional<double> truth_value;
    std::optional<Band> full_band;
    std::optional<Band> half_band;

    // trend
    std::string trend_direction;          // "up" or "down"
    std::optional<double> trend_magnitude; // cumulative move, percent, >= 0
    double magnitude_tolerance = 5.0;      // percentage points

    // event: every required concept must match for 1; partial set for 0.5
    std::vector<ConceptSet> required_concepts;
    std::vector<ConceptSet> partial_concepts;

    // market (rank-scored)
    std::vector<std::string> full_symbols;
    std::vector<std::string> half_symbols;
};

enum class AnswerKind { Number, Trend, Text, Symbol };

struct AnswerRecord {
    std::string item_id;
    AnswerKind kind = AnswerKind::Number;
    double number = 0;             // Number
    std::string trend_direction;   // Trend
    double trend_magnitude = 0;    // Trend, percent
    std::string text;              // Text / Symbol
};

// Graded rubric score in {0, 0.5, 1}. Throws ScoringError when the answer
// payload type does not fit the item category.
double score_answer(const QaItem& item, const AnswerRecord& answer);

struct ItemScore {
    std::string item_id;
    QaCategory category = QaCategory::Price;
    double points = 0;
    double weight = 1.0;
    bool answered = false;
};

struct BenchReport {
    double accuracy = 0; // (1/N) sum points_i * w_i
    std::size_t item_count = 0;
    std::size_t answered_count = 0;
    std::map<std::string, double> category_accuracy;
    std::map<std::string, std::size_t> category_counts;
    std::vector<ItemScore> items;
    std::vector<std::string> unanswered;
};

// Order-invariant; unanswered items score 0 and are listed. Answers without a
// matching item are an error.
BenchReport bench_accuracy(const std::vector<QaItem>& items,
                           const std::vector<AnswerRecord>& answers);

// Eq-style bias: weighted mean of p_score under normalized training
// frequencies, minus the uniform baseline 1/S.
double bias_score(const std::vector<double>& f_train, const std::vector<double>& p_score);

// Mean cosine similarity across time-aligned vector pairs.
double memory_score(const std::vector<std::vector<double>>& model_vectors,
                    const std::vector<std::vector<double>>& hist_vectors);

// Relative accuracy change on unseen data, in percent.
double generalization_change(double acc_pre, double acc_post);

std::vector<QaItem> load_qa_items(const std::string& path);
std::vector<AnswerRecord> load_answers_jsonl(const std::string& path);
std::string bench_report_to_json(const BenchReport& report);
std::string bench_report_category_csv(const BenchReport& report);

} // namespace factfin

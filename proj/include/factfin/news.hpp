#pragma once

#include "factfin/market_data.hpp"

#include <array>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace factfin {

// Fixed topic catalog; "other" absorbs unmatched text.
inline constexpr std::array<const char*, 6> kTopicCatalog = {
    "earnings", "macro", "product", "regulation", "market", "other"};
inline constexpr std::size_t kTopicCount = kTopicCatalog.size();
inline constexpr std::size_t kTopicOther = 5;

struct NewsFactors {
    double sentiment = 0.0;                       // in [-1, 1]
    std::array<double, kTopicCount> topics{};     // >= 0, sums to 1
    std::set<std::string> event_flags;            // "earnings" | "regulatory" | "macro"
};

// Versioned word-score + topic-keyword fixture. Matching is on lowercased
// alphanumeric tokens; topic keywords may be multi-token phrases matched as
// substrings of the normalized text.
struct Lexicon {
    std::string version;
    std::map<std::string, double> word_scores;                 // token -> score
    std::map<std::string, std::vector<std::string>> topic_keywords;
    std::map<std::string, std::vector<std::string>> event_keywords;

    static Lexicon load(const std::string& path);
    static Lexicon builtin(); // compiled-in copy of the shipped fixture
};

std::vector<std::string> tokenize_lower(const std::string& text);

// psi: items with date <= t_date fold into sentiment (clipped signed mean of
// matched word scores), topic distribution (normalized keyword-bucket
// counts), and event flags. Empty input is legal.
NewsFactors factorize_news(const std::vector<NewsItem>& items, Date t_date,
                           const Lexicon& lexicon);

} // namespace factfin

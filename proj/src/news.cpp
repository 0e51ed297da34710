#include "factfin/news.hpp"

#include "factfin/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>

namespace factfin {

namespace {

// Shipped fixture, duplicated here so the library works without a data path.
// Keep in sync with data/lexicon/sentiment_lexicon.json (version field).
const char* kBuiltinLexiconJson = R"JSON({
  "version": "1.0",
  "word_scores": {
    "beat": 0.8, "beats": 0.8, "strong": 0.6, "growth": 0.5, "record": 0.6,
    "surge": 0.7, "surged": 0.7, "rally": 0.6, "gain": 0.5, "gains": 0.5,
    "up": 0.3, "rise": 0.4, "rose": 0.4, "upgrade": 0.7, "optimism": 0.6,
    "profit": 0.5, "outperform": 0.7, "rebound": 0.5, "bullish": 0.7,
    "exceed": 0.6, "exceeds": 0.6, "positive": 0.5,
    "miss": -0.8, "missed": -0.8, "weak": -0.6, "decline": -0.5,
    "drop": -0.6, "dropped": -0.6, "fall": -0.5, "fell": -0.5, "down": -0.3,
    "plunge": -0.8, "plunged": -0.8, "downgrade": -0.7, "probe": -0.6,
    "lawsuit": -0.6, "fine": -0.5, "loss": -0.6, "losses": -0.6,
    "bearish": -0.7, "concern": -0.4, "concerns": -0.4, "warning": -0.6,
    "recall": -0.5, "negative": -0.5, "slowing": -0.4, "cautious": -0.3
  },
  "topic_keywords": {
    "earnings": ["earnings", "revenue", "profit", "eps", "quarterly", "guidance", "outlook", "beat", "miss"],
    "macro": ["fed", "inflation", "rates", "gdp", "unemployment", "tariff", "macro", "economy", "recession"],
    "product": ["launch", "product", "chip", "iphone", "model", "device", "release", "unveil"],
    "regulation": ["regulatory", "regulation", "antitrust", "probe", "lawsuit", "sec", "ftc", "fine", "compliance"],
    "market": ["index", "nasdaq", "sector", "s&p", "dow", "market", "stocks", "rally", "selloff"]
  },
  "event_keywords": {
    "earnings": ["earnings", "revenue", "quarterly results", "eps"],
    "regulatory": ["regulatory", "antitrust", "probe", "lawsuit", "sec", "ftc"],
    "macro": ["fed", "inflation", "rates", "gdp", "recession", "tariff"]
  }
})JSON";

Lexicon from_json(const nlohmann::json& j) {
    Lexicon lex;
    lex.version = j.at("version").get<std::string>();
    for (const auto& [word, score] : j.at("word_scores").items())
        lex.word_scores[word] = score.get<double>();
    for (const auto& [topic, words] : j.at("topic_keywords").items())
        lex.topic_keywords[topic] = words.get<std::vector<std::string>>();
    for (const auto& [flag, words] : j.at("event_keywords").items())
        lex.event_keywords[flag] = words.get<std::vector<std::string>>();
    for (const auto& [topic, _] : lex.topic_keywords) {
        if (std::find(kTopicCatalog.begin(), kTopicCatalog.end(), topic) ==
            kTopicCatalog.end())
            throw ConfigError("lexicon topic '" + topic + "' not in catalog");
    }
    return lex;
}

std::string normalize(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    for (unsigned char c : text)
        out.push_back(std::isalnum(c) || c == '&' ? char(std::tolower(c)) : ' ');
    return out;
}

bool contains_word(const std::string& normalized, const std::string& phrase) {
    // whole-token phrase match inside space-normalized text
    const std::string padded = " " + normalized + " ";
    return padded.find(" " + phrase + " ") != std::string::npos;
}

} // namespace

Lexicon Lexicon::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open lexicon " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return from_json(j);
}

Lexicon Lexicon::builtin() {
    return from_json(nlohmann::json::parse(kBuiltinLexiconJson));
}

std::vector<std::string> tokenize_lower(const std::string& text) {
    std::vector<std::string> tokens;
    const std::string norm = normalize(text);
    std::size_t i = 0;
    while (i < norm.size()) {
        while (i < norm.size() && norm[i] == ' ') ++i;
        std::size_t j = i;
        while (j < norm.size() && norm[j] != ' ') ++j;
        if (j > i) tokens.push_back(norm.substr(i, j - i));
        i = j;
    }
    return tokens;
}

NewsFactors factorize_news(const std::vector<NewsItem>& items, Date t_date,
                           const Lexicon& lexicon) {
    NewsFactors nf;
    double score_sum = 0;
    std::size_t score_count = 0;
    std::array<double, kTopicCount> bucket_counts{};
    double total_hits = 0;

    for (const auto& item : items) {
        if (item.date > t_date) continue;
        const std::string text = normalize(item.headline + " " + item.body);
        for (const auto& token : tokenize_lower(text)) {
            auto it = lexicon.word_scores.find(token);
            if (it != lexicon.word_scores.end()) {
                score_sum += it->second;
                ++score_count;
            }
        }
        for (std::size_t k = 0; k < kTopicCount; ++k) {
            auto it = lexicon.topic_keywords.find(kTopicCatalog[k]);
            if (it == lexicon.topic_keywords.end()) continue;
            for (const auto& kw : it->second)
                if (contains_word(text, kw)) {
                    bucket_counts[k] += 1;
                    total_hits += 1;
                }
        }
        for (const auto& [flag, keywords] : lexicon.event_keywords)
            for (const auto& kw : keywords)
                if (contains_word(text, kw)) {
                    nf.event_flags.insert(flag);
                    break;
                }
    }

    if (score_count > 0)
        nf.sentiment = std::clamp(score_sum / double(score_count), -1.0, 1.0);

    if (total_hits > 0) {
        for (std::size_t k = 0; k < kTopicCount; ++k)
            nf.topics[k] = bucket_counts[k] / total_hits;
    } else {
        nf.topics[kTopicOther] = 1.0; // nothing matched: all mass on "other"
    }
    return nf;
}

} // namespace factfin

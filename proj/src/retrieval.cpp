#include "factfin/retrieval.hpp"

#include "factfin/errors.hpp"
#include "factfin/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace factfin {

Embedding hash_embed(const std::string& text) {
    Embedding v{};
    for (const auto& token : tokenize_lower(text)) {
        const std::uint64_t h = fnv1a64(token.data(), token.size());
        v[h % kEmbeddingDim] += 1.0;
    }
    return v;
}

double cosine_similarity(const Embedding& a, const Embedding& b) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < kEmbeddingDim; ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0 || nb == 0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

SnippetIndex::SnippetIndex(std::vector<Snippet> snippets, EmbedFn embedder)
    : snippets_(std::move(snippets)) {
    embeddings_.reserve(snippets_.size());
    for (const auto& s : snippets_) {
        Embedding e;
        if (embedder) {
            try {
                e = embedder(s.text);
            } catch (const std::exception& ex) {
                std::fprintf(stderr,
                             "warning: external embedder failed (%s); falling back "
                             "to deterministic embedder\n",
                             ex.what());
                embedder = {};
                e = hash_embed(s.text);
            }
        } else {
            e = hash_embed(s.text);
        }
        embeddings_.push_back(e);
    }
}

std::vector<ScoredSnippet> SnippetIndex::top_k(const std::string& query, int k) const {
    if (k < 1) throw ConfigError("top_k requires k >= 1");
    const Embedding q = hash_embed(query);
    std::vector<std::size_t> order(snippets_.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> scores(snippets_.size());
    for (std::size_t i = 0; i < snippets_.size(); ++i)
        scores[i] = cosine_similarity(q, embeddings_[i]);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    const std::size_t n = std::min<std::size_t>(k, snippets_.size());
    std::vector<ScoredSnippet> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        out.push_back({snippets_[order[i]], scores[order[i]]});
    return out;
}

std::string state_query(const MarketState& state) {
    std::ostringstream q;
    q << state.asset;
    // dominant factors: named descriptors keep the query text stable
    for (const auto& [name, value] : state.factors) {
        if (!value) continue;
        q << ' ' << name;
        if (name.rfind("rsi_", 0) == 0) {
            if (*value < 30) q << " oversold";
            else if (*value > 70) q << " overbought";
        } else if (name == "macd_hist") {
            q << (*value >= 0 ? " bullish" : " bearish");
        }
    }
    if (state.news.sentiment > 0.1) q << " positive sentiment";
    else if (state.news.sentiment < -0.1) q << " negative sentiment";
    for (const auto& flag : state.news.event_flags) q << ' ' << flag;
    return q.str();
}

StructuredState retrieve_context(const MarketState& state, const SnippetIndex& index, int k) {
    if (k < 1) throw ConfigError("retrieve_context requires k >= 1");
    StructuredState out;
    out.state = state;
    if (index.size() == 0) return out; // empty corpus -> empty context
    out.context = index.top_k(state_query(state), k);
    return out;
}

std::vector<Snippet> build_corpus(const DatasetBundle& bundle) {
    std::vector<Snippet> corpus;
    for (std::size_t i = 0; i < bundle.news.size(); ++i) {
        const auto& item = bundle.news[i];
        corpus.push_back({"news-" + std::to_string(i),
                          format_date(item.date) + " " + item.asset + " " + item.headline,
                          "news_digest"});
    }
    // factor summaries every 20 bars once indicators have warmed up
    for (std::size_t t = 0; t < bundle.size(); t += 20) {
        std::ostringstream text;
        text << format_date(bundle.series.bars[t].date) << ' ' << bundle.series.asset;
        bool any = false;
        for (const auto& [name, col] : bundle.factors.values) {
            if (t < col.size() && col[t]) {
                text << ' ' << name << ' ' << *col[t];
                any = true;
            }
        }
        if (any)
            corpus.push_back({"factors-" + std::to_string(t), text.str(), "factor_summary"});
    }
    return corpus;
}

} // namespace factfin

#pragma once

#include "factfin/state.hpp"

#include <array>
#include <functional>
#include <string>
#include <vector>

namespace factfin {

inline constexpr std::size_t kEmbeddingDim = 128;
inline constexpr int kDefaultTopK = 5;

using Embedding = std::array<double, kEmbeddingDim>;

// Deterministic feature-hash bag-of-words embedding. Reproducible across
// platforms; the default stand-in for external embedding services.
Embedding hash_embed(const std::string& text);
double cosine_similarity(const Embedding& a, const Embedding& b);

struct ScoredSnippet {
    Snippet snippet;
    double score = 0;
};

// External embedders plug in here; a failing embedder falls back to
// hash_embed with a warning on stderr.
using EmbedFn = std::function<Embedding(const std::string&)>;

class SnippetIndex {
public:
    SnippetIndex() = default;
    explicit SnippetIndex(std::vector<Snippet> snippets, EmbedFn embedder = {});

    std::size_t size() const { return snippets_.size(); }
    const std::vector<Snippet>& snippets() const { return snippets_; }

    // Top-k by descending cosine similarity; ties broken by corpus order.
    std::vector<ScoredSnippet> top_k(const std::string& query, int k) const;

private:
    std::vector<Snippet> snippets_;
    std::vector<Embedding> embeddings_;
};

struct StructuredState {
    MarketState state;
    std::vector<ScoredSnippet> context; // min(k, corpus) snippets, score-desc
};

// Canonical query text: asset id + dominant factor descriptors + event flags.
std::string state_query(const MarketState& state);

StructuredState retrieve_context(const MarketState& state, const SnippetIndex& index,
                                 int k = kDefaultTopK);

// Default corpus construction for a bundle: per-bar news digests plus factor
// summaries at a coarse stride.
std::vector<Snippet> build_corpus(const DatasetBundle& bundle);

} // namespace factfin

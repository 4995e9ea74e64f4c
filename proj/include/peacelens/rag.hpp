#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "peacelens/embedding.hpp"
#include "peacelens/provider.hpp"
#include "peacelens/vector_store.hpp"

namespace peacelens {

inline constexpr std::string_view kKnowledgeCollection = "knowledge";
inline constexpr std::string_view kArticlesCollection = "articles";

inline constexpr std::string_view kDefaultPromptTemplate =
    "Analyze intergroup reciprocity in the media articles below, using the social science "
    "context as grounding. Identify positive intergroup reciprocity (tolerance, respect, "
    "kindness, help, support) and negative intergroup reciprocity (intolerance, disrespect, "
    "aggression, obstruction, hindrance), and explain how each relates to the query.\n"
    "\n"
    "QUERY:\n"
    "{query}\n"
    "\n"
    "SOCIAL SCIENCE CONTEXT:\n"
    "{knowledge}\n"
    "\n"
    "MEDIA ARTICLES:\n"
    "{articles}\n";

inline constexpr std::string_view kFallbackPrefix = "EXTRACTIVE SUMMARY:";

struct RagConfig {
    std::size_t k_knowledge = 5;
    std::size_t k_articles = 10;
    // Weight of the raw query against the knowledge centroid when building
    // the article search vector.
    double alpha = 0.5;
    std::string prompt_template = std::string(kDefaultPromptTemplate);
    std::optional<ProviderConfig> llm;

    void validate() const;
};

enum class Generator { Llm, ExtractiveFallback };

std::string_view to_string(Generator g) noexcept;
Generator parse_generator(std::string_view text);

struct RagResponse {
    std::string query;
    std::vector<SearchHit> knowledge_hits;
    std::vector<SearchHit> article_hits;
    std::string augmented_prompt;
    std::string generated_text;
    Generator generator = Generator::ExtractiveFallback;

    bool operator==(const RagResponse&) const = default;
};

nlohmann::json to_json(const SearchHit& hit);
nlohmann::json to_json(const RagResponse& response);
RagResponse rag_response_from_json(const nlohmann::json& j);

// Knowledge stage. Only the raw query reaches this function; it has no access
// to the article collection.
std::vector<SearchHit> knowledge_search(const EmbeddingVector& query_vec, const RagConfig& cfg,
                                        const Collection& knowledge);
std::vector<SearchHit> knowledge_search(std::string_view query, const RagConfig& cfg,
                                        const Collection& knowledge, const Embedder& embedder);

// normalize(alpha * query + (1 - alpha) * centroid(context)). Returns the query
// unchanged when context is empty or alpha == 1, and the plain centroid when
// alpha == 0.
EmbeddingVector combine_query(const EmbeddingVector& query_vec, std::span<const EmbeddingVector> context_vecs,
                              double alpha);

std::vector<SearchHit> article_search(const EmbeddingVector& query_vec,
                                      std::span<const EmbeddingVector> context_vecs, const RagConfig& cfg,
                                      const Collection& articles);

// Template must contain {query}, {knowledge} and {articles}. Hits render as
// numbered excerpts in rank order.
std::string augment(std::string_view query, std::span<const SearchHit> knowledge_hits,
                    std::span<const SearchHit> article_hits, std::string_view tmpl);

std::string render_hits(std::span<const SearchHit> hits);

struct Generation {
    std::string text;
    Generator generator;
};

// Top-3 article excerpts under kFallbackPrefix.
std::string extractive_summary(std::span<const SearchHit> article_hits);

// Calls the chat-completions endpoint when cfg.llm is set. Falls back to the
// extractive summary (with a warning) when no LLM is configured or it keeps
// failing. A 2xx reply that cannot be parsed is an error.
Generation generate(std::string_view prompt, std::span<const SearchHit> article_hits, const RagConfig& cfg,
                    HttpTransport& transport);
Generation generate(std::string_view prompt, std::span<const SearchHit> article_hits, const RagConfig& cfg);

// knowledge search -> article search with the knowledge hits' vectors as
// context -> augment -> generate. Stage failures surface as StageError.
RagResponse run_pipeline(std::string_view query, const RagConfig& cfg, const Collection& knowledge,
                         const Collection& articles, const Embedder& embedder,
                         std::shared_ptr<HttpTransport> llm_transport = nullptr);

}  // namespace peacelens

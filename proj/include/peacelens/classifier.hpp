#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "peacelens/embedding.hpp"
#include "peacelens/vector_store.hpp"

namespace peacelens {

inline constexpr std::string_view kPirDefinition = "Intergroup tolerance, respect, kindness, help, or support.";
inline constexpr std::string_view kNirDefinition =
    "Intergroup intolerance, disrespect, aggression, obstruction, or hindrance.";

// Embedded positive (PIR) and negative (NIR) intergroup reciprocity definitions.
struct AnchorPair {
    std::string pir_text;
    std::string nir_text;
    EmbeddingVector pir_vec;
    EmbeddingVector nir_vec;
    std::string model_id;

    bool operator==(const AnchorPair&) const = default;
};

// Embeds both definitions with the same embedder used for the articles.
// Throws Error "anchors must differ" when the two texts are identical.
AnchorPair build_anchors(const Embedder& embedder, std::string_view pir_text = kPirDefinition,
                         std::string_view nir_text = kNirDefinition);

enum class Alignment { Pir, Nir, Tie };

std::string_view to_string(Alignment a) noexcept;

// Pir when the article is strictly closer (by cosine) to the PIR anchor,
// Nir when strictly closer to NIR, Tie on exact equality.
Alignment classify_article(const EmbeddingVector& article_vec, const AnchorPair& anchors);

struct CountryFraction {
    std::size_t n_pir = 0;
    std::size_t n_nir = 0;
    std::size_t n_tie = 0;
    std::size_t n_classified = 0;
    std::size_t available = 0;
    bool shortfall = false;
    // n_pir / n_classified; ties count in the denominator only.
    double raw_fraction = 0.0;

    bool operator==(const CountryFraction&) const = default;
};

// Classifies a seeded sample of min(n, available) records per country (the
// `country` metadata key). Records without a country are skipped.
std::map<std::string, CountryFraction> country_fractions(const Collection& articles, const AnchorPair& anchors,
                                                         std::size_t n, std::uint64_t seed);

// 100 * (x - min) / (max - min). Throws DegenerateRangeError for fewer than
// two countries or when every fraction is equal.
std::map<std::string, double> normalize_scores(const std::map<std::string, double>& fractions);

struct CountryScore {
    std::string country;
    std::size_t n_classified = 0;
    std::size_t n_pir = 0;
    std::size_t n_tie = 0;
    double raw_fraction = 0.0;
    std::optional<double> normalized_pct;  // empty in raw-only reports
    bool shortfall = false;

    bool operator==(const CountryScore&) const = default;
};

using ScoreTable = std::map<std::string, CountryScore>;

// Raw-only scores (no normalization applied).
ScoreTable raw_scores(const std::map<std::string, CountryFraction>& fractions);
// Raw scores plus min-max normalized percentages; propagates DegenerateRangeError.
ScoreTable normalized_scores(const std::map<std::string, CountryFraction>& fractions);

// Sorted by normalized_pct descending (raw_fraction when not normalized),
// ties by country code ascending.
std::vector<CountryScore> report_rows(const ScoreTable& scores);

// Header row plus one row per country: Country, Raw fraction, Normalized %.
std::string render_report_tsv(const ScoreTable& scores);
// Column-aligned table with a footer describing the normalization.
std::string render_report_text(const ScoreTable& scores);

nlohmann::json to_json(const ScoreTable& scores);
ScoreTable score_table_from_json(const nlohmann::json& j);

}  // namespace peacelens

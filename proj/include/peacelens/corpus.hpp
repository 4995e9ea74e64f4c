#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace peacelens {

enum class PeaceLevel { High, Low, Untagged };

std::string_view to_string(PeaceLevel level) noexcept;
// Accepts HIGH/LOW/UNTAGGED in any case; throws Error otherwise.
PeaceLevel parse_peace_level(std::string_view text);

struct Article {
    std::string id;
    std::string country;
    PeaceLevel peace_level = PeaceLevel::Untagged;
    std::optional<std::string> title;
    std::string body;
    std::optional<std::string> source;
    std::optional<std::string> date;
    // Unrecognised input fields, carried through serialization untouched.
    nlohmann::json extra = nlohmann::json::object();

    bool operator==(const Article&) const = default;
};

// Validates and converts one JSON object. Throws ParseError tagged with line_no.
Article article_from_json(const nlohmann::json& obj, std::size_t line_no = 0);
nlohmann::json to_json(const Article& article);
std::string to_json_line(const Article& article);

// Streams JSONL, calling sink for each article in line order. Blank lines are
// skipped. Ids are checked for uniqueness across the whole stream.
void read_corpus(std::istream& in, const std::function<void(Article&&)>& sink);
std::vector<Article> parse_corpus(std::istream& in);

// Reference documents for the knowledge collection: id and body required,
// title/source optional, no country.
struct KnowledgeDoc {
    std::string id;
    std::optional<std::string> title;
    std::string body;
    std::optional<std::string> source;

    bool operator==(const KnowledgeDoc&) const = default;
};

std::vector<KnowledgeDoc> parse_knowledge(std::istream& in);

// ---------------------------------------------------------------------------
// Statistics

std::size_t count_words(std::string_view text) noexcept;

struct CountryTotals {
    std::uint64_t article_count = 0;
    std::uint64_t word_count = 0;

    bool operator==(const CountryTotals&) const = default;
};

// Means and standard deviations are taken over the countries present. The
// standard deviations are population values (divide by the number of countries).
struct CorpusStats {
    std::map<std::string, CountryTotals> per_country;
    std::uint64_t total_articles = 0;
    std::uint64_t total_words = 0;
    double mean_articles = 0.0;
    double std_articles = 0.0;
    double mean_words = 0.0;
    double std_words = 0.0;
};

class CorpusStatsBuilder {
public:
    void add(const Article& article);
    void add(const std::string& country, std::uint64_t words);
    CorpusStats finish() const;

private:
    std::map<std::string, CountryTotals> per_country_;
};

CorpusStats corpus_stats(std::span<const Article> articles);
nlohmann::json to_json(const CorpusStats& stats);

// ---------------------------------------------------------------------------
// Sampling

// Seed for one country's draw. Mixing the country in keeps each country's
// sample independent of which other countries are present.
std::uint64_t country_seed(std::uint64_t seed, std::string_view country) noexcept;

// min(n, population) distinct indices in ascending order, drawn uniformly
// without replacement by a portable generator.
std::vector<std::size_t> sample_indices(std::size_t population, std::size_t n, std::uint64_t seed);

struct CountrySample {
    std::vector<Article> articles;
    std::size_t available = 0;
    bool shortfall = false;  // fewer than n articles were available
};

std::map<std::string, CountrySample> sample_per_country(std::span<const Article> articles,
                                                        std::size_t n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Enrichment

inline constexpr std::string_view kDefaultEnrichmentTemplate =
    "[country={country}] [peace={peace_level}] {body}";

// Throws Error naming the first placeholder outside {country, peace_level, title, body}.
void validate_enrichment_template(std::string_view tmpl);
std::string enrich_text(const Article& article,
                        std::string_view tmpl = kDefaultEnrichmentTemplate);

}  // namespace peacelens

#include "peacelens/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <regex>
#include <unordered_set>

#include "peacelens/errors.hpp"
#include "peacelens/hash.hpp"
#include "peacelens/text_template.hpp"

namespace peacelens {

using nlohmann::json;

std::string_view to_string(PeaceLevel level) noexcept {
    switch (level) {
        case PeaceLevel::High: return "HIGH";
        case PeaceLevel::Low: return "LOW";
        case PeaceLevel::Untagged: break;
    }
    return "UNTAGGED";
}

PeaceLevel parse_peace_level(std::string_view text) {
    std::string upper(text);
    std::transform(upper.begin(), upper.end(), upper.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    if (upper == "HIGH") return PeaceLevel::High;
    if (upper == "LOW") return PeaceLevel::Low;
    if (upper == "UNTAGGED") return PeaceLevel::Untagged;
    throw Error("peace_level must be HIGH, LOW or UNTAGGED, got '" + std::string(text) + "'");
}

namespace {

bool has_non_space(std::string_view s) {
    return std::any_of(s.begin(), s.end(), [](unsigned char c) { return !std::isspace(c); });
}

bool is_country_code(std::string_view s) {
    return s.size() == 2 && s[0] >= 'A' && s[0] <= 'Z' && s[1] >= 'A' && s[1] <= 'Z';
}

const std::string& required_string(const json& obj, const char* field, std::size_t line_no) {
    auto it = obj.find(field);
    if (it == obj.end() || it->is_null())
        throw ParseError(line_no, std::string("missing required field '") + field + "'");
    if (!it->is_string()) throw ParseError(line_no, std::string("field '") + field + "' must be a string");
    return it->get_ref<const std::string&>();
}

std::optional<std::string> optional_string(const json& obj, const char* field, std::size_t line_no) {
    auto it = obj.find(field);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw ParseError(line_no, std::string("field '") + field + "' must be a string");
    return it->get<std::string>();
}

json parse_line(const std::string& line, std::size_t line_no) {
    json obj;
    try {
        obj = json::parse(line);
    } catch (const json::parse_error& e) {
        throw ParseError(line_no, std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object()) throw ParseError(line_no, "expected a JSON object");
    return obj;
}

// Calls fn(line_text, line_no) for each non-blank line.
template <typename Fn>
void for_each_line(std::istream& in, Fn&& fn) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!has_non_space(line)) continue;
        fn(line, line_no);
    }
}

const std::regex& date_pattern() {
    static const std::regex re(R"(^\d{4}-\d{2}-\d{2}([T ][0-9:.+\-Z]*)?$)");
    return re;
}

}  // namespace

Article article_from_json(const json& obj, std::size_t line_no) {
    if (!obj.is_object()) throw ParseError(line_no, "expected a JSON object");
    Article a;
    a.id = required_string(obj, "id", line_no);
    if (a.id.empty()) throw ParseError(line_no, "id must not be empty");
    a.country = required_string(obj, "country", line_no);
    if (!is_country_code(a.country)) throw ParseError(line_no, "country must match [A-Z]{2}");
    a.body = required_string(obj, "body", line_no);
    if (!has_non_space(a.body)) throw ParseError(line_no, "body must contain non-whitespace text");

    if (auto level = optional_string(obj, "peace_level", line_no)) {
        try {
            a.peace_level = parse_peace_level(*level);
        } catch (const Error& e) {
            throw ParseError(line_no, e.what());
        }
    }
    a.title = optional_string(obj, "title", line_no);
    a.source = optional_string(obj, "source", line_no);
    a.date = optional_string(obj, "date", line_no);
    if (a.date && !std::regex_match(*a.date, date_pattern()))
        throw ParseError(line_no, "date must be ISO-8601, got '" + *a.date + "'");

    static const std::unordered_set<std::string> known = {"id",    "country", "peace_level", "title",
                                                          "body",  "source",  "date"};
    for (const auto& [key, value] : obj.items()) {
        if (!known.contains(key)) a.extra[key] = value;
    }
    return a;
}

json to_json(const Article& a) {
    json obj = a.extra.is_object() ? a.extra : json::object();
    obj["id"] = a.id;
    obj["country"] = a.country;
    obj["peace_level"] = std::string(to_string(a.peace_level));
    if (a.title) obj["title"] = *a.title;
    obj["body"] = a.body;
    if (a.source) obj["source"] = *a.source;
    if (a.date) obj["date"] = *a.date;
    return obj;
}

std::string to_json_line(const Article& article) { return to_json(article).dump(); }

void read_corpus(std::istream& in, const std::function<void(Article&&)>& sink) {
    std::unordered_set<std::string> seen;
    for_each_line(in, [&](const std::string& line, std::size_t line_no) {
        Article a = article_from_json(parse_line(line, line_no), line_no);
        if (!seen.insert(a.id).second) throw ParseError(line_no, "duplicate id '" + a.id + "'");
        sink(std::move(a));
    });
}

std::vector<Article> parse_corpus(std::istream& in) {
    std::vector<Article> out;
    read_corpus(in, [&](Article&& a) { out.push_back(std::move(a)); });
    return out;
}

std::vector<KnowledgeDoc> parse_knowledge(std::istream& in) {
    std::vector<KnowledgeDoc> out;
    std::unordered_set<std::string> seen;
    for_each_line(in, [&](const std::string& line, std::size_t line_no) {
        json obj = parse_line(line, line_no);
        KnowledgeDoc d;
        d.id = required_string(obj, "id", line_no);
        if (d.id.empty()) throw ParseError(line_no, "id must not be empty");
        d.body = required_string(obj, "body", line_no);
        if (!has_non_space(d.body)) throw ParseError(line_no, "body must contain non-whitespace text");
        d.title = optional_string(obj, "title", line_no);
        d.source = optional_string(obj, "source", line_no);
        if (!seen.insert(d.id).second) throw ParseError(line_no, "duplicate id '" + d.id + "'");
        out.push_back(std::move(d));
    });
    return out;
}

// ---------------------------------------------------------------------------

std::size_t count_words(std::string_view text) noexcept {
    std::size_t words = 0;
    bool in_word = false;
    for (unsigned char c : text) {
        bool space = std::isspace(c) != 0;
        if (!space && !in_word) ++words;
        in_word = !space;
    }
    return words;
}

void CorpusStatsBuilder::add(const Article& article) { add(article.country, count_words(article.body)); }

void CorpusStatsBuilder::add(const std::string& country, std::uint64_t words) {
    auto& t = per_country_[country];
    t.article_count += 1;
    t.word_count += words;
}

CorpusStats CorpusStatsBuilder::finish() const {
    CorpusStats s;
    s.per_country = per_country_;
    if (per_country_.empty()) return s;

    for (const auto& [_, t] : per_country_) {
        s.total_articles += t.article_count;
        s.total_words += t.word_count;
    }
    const double n = static_cast<double>(per_country_.size());
    s.mean_articles = static_cast<double>(s.total_articles) / n;
    s.mean_words = static_cast<double>(s.total_words) / n;

    double var_a = 0.0, var_w = 0.0;
    for (const auto& [_, t] : per_country_) {
        const double da = static_cast<double>(t.article_count) - s.mean_articles;
        const double dw = static_cast<double>(t.word_count) - s.mean_words;
        var_a += da * da;
        var_w += dw * dw;
    }
    s.std_articles = std::sqrt(var_a / n);
    s.std_words = std::sqrt(var_w / n);
    return s;
}

CorpusStats corpus_stats(std::span<const Article> articles) {
    CorpusStatsBuilder b;
    for (const auto& a : articles) b.add(a);
    return b.finish();
}

json to_json(const CorpusStats& s) {
    json per = json::object();
    for (const auto& [country, t] : s.per_country)
        per[country] = {{"article_count", t.article_count}, {"word_count", t.word_count}};
    return {
        {"per_country", per},
        {"countries", s.per_country.size()},
        {"total_articles", s.total_articles},
        {"total_words", s.total_words},
        {"mean_articles", s.mean_articles},
        {"std_articles", s.std_articles},
        {"mean_words", s.mean_words},
        {"std_words", s.std_words},
        {"std_kind", "population"},
    };
}

// ---------------------------------------------------------------------------

std::uint64_t country_seed(std::uint64_t seed, std::string_view country) noexcept {
    return splitmix64(seed ^ murmur64a(country, 0x5eed));
}

namespace {

// Unbiased draw in [0, bound) from raw mt19937_64 output. The standard
// distributions are implementation-defined, so they would break cross-platform
// reproducibility of samples.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
        const std::uint64_t r = rng();
        if (r >= threshold) return r % bound;
    }
}

}  // namespace

std::vector<std::size_t> sample_indices(std::size_t population, std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> idx(population);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (n >= population) return idx;

    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const auto j = i + static_cast<std::size_t>(uniform_below(rng, population - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(n);
    std::sort(idx.begin(), idx.end());
    return idx;
}

std::map<std::string, CountrySample> sample_per_country(std::span<const Article> articles,
                                                        std::size_t n, std::uint64_t seed) {
    if (n == 0) throw Error("sample size must be at least 1");
    std::map<std::string, std::vector<const Article*>> by_country;
    for (const auto& a : articles) by_country[a.country].push_back(&a);

    std::map<std::string, CountrySample> out;
    for (const auto& [country, members] : by_country) {
        CountrySample s;
        s.available = members.size();
        s.shortfall = members.size() < n;
        for (auto i : sample_indices(members.size(), n, country_seed(seed, country)))
            s.articles.push_back(*members[i]);
        out.emplace(country, std::move(s));
    }
    return out;
}

// ---------------------------------------------------------------------------

void validate_enrichment_template(std::string_view tmpl) {
    static const std::set<std::string> allowed = {"country", "peace_level", "title", "body"};
    for (const auto& name : template_placeholders(tmpl))
        if (!allowed.contains(name)) throw Error("unknown placeholder " + name);
}

std::string enrich_text(const Article& article, std::string_view tmpl) {
    validate_enrichment_template(tmpl);
    return render_template(tmpl, {
                                     {"country", article.country},
                                     {"peace_level", std::string(to_string(article.peace_level))},
                                     {"title", article.title.value_or("")},
                                     {"body", article.body},
                                 });
}

}  // namespace peacelens

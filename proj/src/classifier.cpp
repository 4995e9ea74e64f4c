#include "peacelens/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <spdlog/spdlog.h>

#include "peacelens/corpus.hpp"
#include "peacelens/errors.hpp"

namespace peacelens {

using nlohmann::json;

AnchorPair build_anchors(const Embedder& embedder, std::string_view pir_text, std::string_view nir_text) {
    if (pir_text == nir_text) throw Error("anchors must differ");
    AnchorPair a;
    a.pir_text = std::string(pir_text);
    a.nir_text = std::string(nir_text);
    a.pir_vec = embedder.embed(pir_text);
    a.nir_vec = embedder.embed(nir_text);
    a.model_id = embedder.model_id();
    if (a.pir_vec.dim() != a.nir_vec.dim()) throw DimensionMismatchError(a.pir_vec.dim(), a.nir_vec.dim());
    return a;
}

std::string_view to_string(Alignment a) noexcept {
    switch (a) {
        case Alignment::Pir: return "PIR";
        case Alignment::Nir: return "NIR";
        case Alignment::Tie: break;
    }
    return "TIE";
}

Alignment classify_article(const EmbeddingVector& article_vec, const AnchorPair& anchors) {
    const double to_pir = cosine_similarity(article_vec, anchors.pir_vec);
    const double to_nir = cosine_similarity(article_vec, anchors.nir_vec);
    if (to_pir > to_nir) return Alignment::Pir;
    if (to_pir < to_nir) return Alignment::Nir;
    return Alignment::Tie;
}

std::map<std::string, CountryFraction> country_fractions(const Collection& articles, const AnchorPair& anchors,
                                                         std::size_t n, std::uint64_t seed) {
    if (n == 0) throw Error("sample size must be at least 1");
    if (articles.dim() != anchors.pir_vec.dim()) throw DimensionMismatchError(articles.dim(), anchors.pir_vec.dim());

    const auto records = articles.records();
    std::map<std::string, std::vector<const DocumentRecord*>> by_country;
    std::size_t missing = 0;
    for (const auto& r : records) {
        auto it = r.metadata.find("country");
        if (it == r.metadata.end()) {
            ++missing;
            continue;
        }
        by_country[it->second].push_back(&r);
    }
    if (missing) spdlog::warn("{} records have no country metadata and were skipped", missing);

    std::map<std::string, CountryFraction> out;
    for (const auto& [country, members] : by_country) {
        CountryFraction f;
        f.available = members.size();
        f.shortfall = members.size() < n;
        for (auto i : sample_indices(members.size(), n, country_seed(seed, country))) {
            switch (classify_article(members[i]->vector, anchors)) {
                case Alignment::Pir: ++f.n_pir; break;
                case Alignment::Nir: ++f.n_nir; break;
                case Alignment::Tie: ++f.n_tie; break;
            }
            ++f.n_classified;
        }
        f.raw_fraction = f.n_classified ? static_cast<double>(f.n_pir) / static_cast<double>(f.n_classified) : 0.0;
        out.emplace(country, f);
    }
    return out;
}

std::map<std::string, double> normalize_scores(const std::map<std::string, double>& fractions) {
    if (fractions.size() < 2) throw DegenerateRangeError();
    auto [lo, hi] = std::minmax_element(fractions.begin(), fractions.end(),
                                        [](const auto& a, const auto& b) { return a.second < b.second; });
    const double min = lo->second;
    const double range = hi->second - min;
    if (!(range > 0.0)) throw DegenerateRangeError();

    std::map<std::string, double> out;
    for (const auto& [country, x] : fractions) out[country] = std::clamp((x - min) / range * 100.0, 0.0, 100.0);
    return out;
}

ScoreTable raw_scores(const std::map<std::string, CountryFraction>& fractions) {
    ScoreTable t;
    for (const auto& [country, f] : fractions)
        t[country] = {country, f.n_classified, f.n_pir, f.n_tie, f.raw_fraction, std::nullopt, f.shortfall};
    return t;
}

ScoreTable normalized_scores(const std::map<std::string, CountryFraction>& fractions) {
    std::map<std::string, double> raw;
    for (const auto& [country, f] : fractions) raw[country] = f.raw_fraction;
    const auto pct = normalize_scores(raw);
    auto t = raw_scores(fractions);
    for (auto& [country, s] : t) s.normalized_pct = pct.at(country);
    return t;
}

std::vector<CountryScore> report_rows(const ScoreTable& scores) {
    std::vector<CountryScore> rows;
    rows.reserve(scores.size());
    for (const auto& [_, s] : scores) rows.push_back(s);
    std::sort(rows.begin(), rows.end(), [](const CountryScore& a, const CountryScore& b) {
        const double ka = a.normalized_pct.value_or(a.raw_fraction);
        const double kb = b.normalized_pct.value_or(b.raw_fraction);
        if (ka != kb) return ka > kb;
        return a.country < b.country;
    });
    return rows;
}

namespace {

std::string fmt_raw(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", x);
    return buf;
}

std::string fmt_pct(const std::optional<double>& pct) {
    if (!pct) return "n/a";
    return std::to_string(std::lround(*pct));
}

std::string pad_left(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string pad_right(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

}  // namespace

std::string render_report_tsv(const ScoreTable& scores) {
    std::string out = "Country\tRaw fraction\tNormalized %\n";
    for (const auto& row : report_rows(scores))
        out += row.country + "\t" + fmt_raw(row.raw_fraction) + "\t" + fmt_pct(row.normalized_pct) + "\n";
    return out;
}

std::string render_report_text(const ScoreTable& scores) {
    const auto rows = report_rows(scores);
    const bool normalized = std::any_of(rows.begin(), rows.end(), [](const auto& r) { return r.normalized_pct; });

    std::string out = "PIR alignment by country\n\n";
    out += pad_right("Country", 9) + pad_left("Raw fraction", 14) + pad_left("Normalized %", 15) + "\n";
    for (const auto& r : rows) {
        std::string pct = fmt_pct(r.normalized_pct);
        if (r.normalized_pct) pct += "%";
        std::string name = r.country;
        if (r.shortfall) name += "*";
        out += pad_right(name, 9) + pad_left(fmt_raw(r.raw_fraction), 14) + pad_left(pct, 15) + "\n";
    }
    out += "\n";
    if (normalized) {
        out += "Normalized % = 100 * (raw - min) / (max - min) across the countries above.\n"
               "Min-max scaling is an inference from 100%/0% endpoints, not a stated formula.\n";
    } else {
        out += "Normalization skipped: it needs at least two countries with distinct raw fractions.\n";
    }
    if (std::any_of(rows.begin(), rows.end(), [](const auto& r) { return r.shortfall; }))
        out += "* fewer articles available than the requested sample size.\n";
    return out;
}

json to_json(const ScoreTable& scores) {
    json j = json::object();
    for (const auto& [country, s] : scores) {
        j[country] = {
            {"n_classified", s.n_classified},
            {"n_pir", s.n_pir},
            {"n_tie", s.n_tie},
            {"raw_fraction", s.raw_fraction},
            {"normalized_pct", s.normalized_pct ? json(*s.normalized_pct) : json(nullptr)},
            {"shortfall", s.shortfall},
        };
    }
    return j;
}

ScoreTable score_table_from_json(const json& j) {
    if (!j.is_object()) throw Error("scores JSON must be an object keyed by country");
    ScoreTable t;
    for (const auto& [country, v] : j.items()) {
        CountryScore s;
        s.country = country;
        s.n_classified = v.at("n_classified").get<std::size_t>();
        s.n_pir = v.at("n_pir").get<std::size_t>();
        s.n_tie = v.at("n_tie").get<std::size_t>();
        s.raw_fraction = v.at("raw_fraction").get<double>();
        if (const auto& p = v.at("normalized_pct"); !p.is_null()) s.normalized_pct = p.get<double>();
        s.shortfall = v.at("shortfall").get<bool>();
        t[country] = s;
    }
    return t;
}

}  // namespace peacelens

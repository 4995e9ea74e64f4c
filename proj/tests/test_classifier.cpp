#include <doctest.h>

#include <random>

#include "peacelens/classifier.hpp"
#include "peacelens/errors.hpp"
#include "test_support.hpp"

using namespace peacelens;
using namespace peacelens::testing;

namespace {

AnchorPair frame_anchors() {
    AnchorPair a;
    a.pir_text = "pir";
    a.nir_text = "nir";
    a.pir_vec = EmbeddingVector::from_raw({1, 0, 0});
    a.nir_vec = EmbeddingVector::from_raw({0, 1, 0});
    return a;
}

void add(Collection& c, const std::string& id, const std::string& country, std::vector<double> v) {
    c.upsert({id, EmbeddingVector::from_raw(std::move(v)), {{"country", country}}, ""});
}

}  // namespace

TEST_CASE("default anchor definitions") {
    CHECK(kPirDefinition == "Intergroup tolerance, respect, kindness, help, or support.");
    CHECK(kNirDefinition == "Intergroup intolerance, disrespect, aggression, obstruction, or hindrance.");
}

TEST_CASE("build_anchors") {
    LocalEmbedder e(256, 42);
    const auto a = build_anchors(e);
    CHECK(a.pir_text == kPirDefinition);
    CHECK(a.pir_vec.dim() == 256);
    CHECK(cosine_similarity(a.pir_vec, a.nir_vec) < 1.0);
    CHECK(a.model_id == e.model_id());
    CHECK(build_anchors(e) == a);
    CHECK_THROWS_WITH(build_anchors(e, "same text", "same text"), "anchors must differ");
}

TEST_CASE("classify_article labels") {
    const auto anchors = frame_anchors();
    CHECK(classify_article(anchors.pir_vec, anchors) == Alignment::Pir);
    CHECK(classify_article(anchors.nir_vec, anchors) == Alignment::Nir);
    CHECK(classify_article(EmbeddingVector::from_raw({0, 0, 1}), anchors) == Alignment::Tie);
    CHECK(classify_article(EmbeddingVector::from_raw({1, 1, 5}), anchors) == Alignment::Tie);
    CHECK_THROWS_AS(classify_article(EmbeddingVector::from_raw({1, 0}), anchors), DimensionMismatchError);

    LocalEmbedder e(64, 1);
    const auto real = build_anchors(e);
    CHECK(classify_article(real.pir_vec, real) == Alignment::Pir);
    CHECK(classify_article(real.nir_vec, real) == Alignment::Nir);
}

TEST_CASE("classify_article is invariant to positive scaling") {
    std::mt19937_64 rng(21);
    LocalEmbedder e(32, 5);
    const auto anchors = build_anchors(e);
    std::uniform_real_distribution<double> scale(1e-3, 1e3);
    for (int t = 0; t < 300; ++t) {
        auto v = random_vector(rng, 32);
        const auto label = classify_article(EmbeddingVector::from_raw(v), anchors);
        const double s = scale(rng);
        for (auto& x : v) x *= s;
        CHECK(classify_article(EmbeddingVector::from_raw(v), anchors) == label);
    }
}

TEST_CASE("country_fractions") {
    const auto anchors = frame_anchors();

    SUBCASE("all PIR") {
        Collection c("articles", 3);
        for (int i = 0; i < 4; ++i) add(c, "a" + std::to_string(i), "AA", {1, 0, 0});
        const auto f = country_fractions(c, anchors, 6000, 1);
        CHECK(f.at("AA").raw_fraction == 1.0);
        CHECK(f.at("AA").shortfall);
    }
    SUBCASE("two PIR, two NIR") {
        Collection c("articles", 3);
        add(c, "p1", "AA", {1, 0, 0});
        add(c, "p2", "AA", {2, 1, 0});
        add(c, "n1", "AA", {0, 1, 0});
        add(c, "n2", "AA", {0.5, 3, 0});
        const auto f = country_fractions(c, anchors, 4, 1).at("AA");
        CHECK(f.n_pir == 2);
        CHECK(f.n_nir == 2);
        CHECK(f.raw_fraction == 0.5);
        CHECK_FALSE(f.shortfall);
    }
    SUBCASE("ties count in the denominator only") {
        Collection c("articles", 3);
        add(c, "p", "AA", {1, 0, 0});
        add(c, "t", "AA", {0, 0, 1});
        const auto f = country_fractions(c, anchors, 10, 1).at("AA");
        CHECK(f.n_tie == 1);
        CHECK(f.raw_fraction == 0.5);
    }
    SUBCASE("partition law and determinism on random data") {
        std::mt19937_64 rng(22);
        auto c = random_collection(rng, "articles", 3, 400, {"AA", "BB", "CC", "DD"});
        const auto first = country_fractions(c, anchors, 50, 9);
        CHECK(first == country_fractions(c, anchors, 50, 9));
        for (const auto& [country, f] : first) {
            CHECK(f.n_pir + f.n_nir + f.n_tie == f.n_classified);
            CHECK(f.n_classified == 50);
            CHECK(f.raw_fraction == doctest::Approx(double(f.n_pir) / 50));
        }
    }
    SUBCASE("records without a country are skipped") {
        Collection c("articles", 3);
        add(c, "p", "AA", {1, 0, 0});
        c.upsert({"orphan", EmbeddingVector::from_raw({1, 0, 0}), {}, ""});
        const auto f = country_fractions(c, anchors, 10, 1);
        CHECK(f.size() == 1);
        CHECK(f.at("AA").n_classified == 1);
    }
}

TEST_CASE("planted vocabularies separate countries") {
    LocalEmbedder e(256, 42);
    const auto corpus = planted_corpus({{"PA", 1.0}, {"NB", 0.0}}, 200, 20, 7);
    Collection c("articles", 256);
    for (const auto& a : corpus) c.upsert({a.id, e.embed(enrich_text(a)), {{"country", a.country}}, ""});
    const auto f = country_fractions(c, build_anchors(e), 200, 42);
    CHECK(f.at("PA").raw_fraction > f.at("NB").raw_fraction);
}

TEST_CASE("normalize_scores") {
    SUBCASE("direct formula") {
        const auto n = normalize_scores({{"A", 0.9}, {"B", 0.5}, {"C", 0.1}});
        CHECK(n.at("A") == 100.0);
        CHECK(n.at("B") == doctest::Approx(50.0).epsilon(1e-12));
        CHECK(n.at("C") == 0.0);
    }
    SUBCASE("endpoints only") {
        const auto n = normalize_scores({{"A", 0.3}, {"B", 0.7}});
        CHECK(n.at("A") == 0.0);
        CHECK(n.at("B") == 100.0);
    }
    SUBCASE("degenerate inputs") {
        CHECK_THROWS_WITH_AS(normalize_scores({{"A", 0.3}}), "degenerate range", DegenerateRangeError);
        CHECK_THROWS_AS(normalize_scores({}), DegenerateRangeError);
        CHECK_THROWS_AS(normalize_scores({{"A", 0.4}, {"B", 0.4}, {"C", 0.4}}), DegenerateRangeError);
    }
    SUBCASE("monotone and affine invariant") {
        std::mt19937_64 rng(23);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int t = 0; t < 200; ++t) {
            std::map<std::string, double> xs;
            const int n = 3 + static_cast<int>(rng() % 18);
            for (int i = 0; i < n; ++i) xs["C" + std::to_string(i)] = u(rng);
            const auto out = normalize_scores(xs);
            for (const auto& [a, xa] : xs)
                for (const auto& [b, xb] : xs)
                    if (xa > xb) CHECK(out.at(a) > out.at(b));
            const double scale = 0.1 + 10 * u(rng);
            const double shift = -5 + 10 * u(rng);
            std::map<std::string, double> ys;
            for (const auto& [k, x] : xs) ys[k] = scale * x + shift;
            const auto out2 = normalize_scores(ys);
            for (const auto& [k, v] : out) CHECK(std::abs(out2.at(k) - v) <= 1e-9);
        }
    }
}

namespace {

// The eighteen published normalised values, keyed by ISO country code.
ScoreTable published_table() {
    const std::vector<std::pair<std::string, double>> rows = {
        {"NZ", 100}, {"SG", 98}, {"IE", 79}, {"AU", 76}, {"CA", 76}, {"GB", 73}, {"TZ", 64}, {"LK", 62}, {"BD", 59},
        {"GH", 59},  {"MY", 54}, {"JM", 36}, {"NG", 26}, {"PH", 17}, {"HK", 12}, {"IN", 11}, {"US", 2},  {"KE", 0}};
    ScoreTable t;
    for (const auto& [code, pct] : rows) t[code] = {code, 6000, 0, 0, pct / 100.0, pct, false};
    return t;
}

}  // namespace

TEST_CASE("report") {
    SUBCASE("published-shape table") {
        const auto rows = report_rows(published_table());
        CHECK(rows.front().country == "NZ");
        CHECK(rows.back().country == "KE");
        const auto tsv = render_report_tsv(published_table());
        CHECK(tsv.starts_with("Country\tRaw fraction\tNormalized %\nNZ\t1.000000\t100\n"));
        CHECK(tsv.ends_with("KE\t0.000000\t0\n"));
        // equal values fall back to country code order
        CHECK(tsv.find("AU\t") < tsv.find("CA\t"));
        CHECK(tsv.find("BD\t") < tsv.find("GH\t"));
    }
    SUBCASE("raw-only single score") {
        ScoreTable t;
        t["SG"] = {"SG", 10, 7, 0, 0.7, std::nullopt, true};
        const auto tsv = render_report_tsv(t);
        CHECK(tsv == "Country\tRaw fraction\tNormalized %\nSG\t0.700000\tn/a\n");
        const auto text = render_report_text(t);
        CHECK(text.find("n/a") != std::string::npos);
        CHECK(text.find("Normalization skipped") != std::string::npos);
    }
    SUBCASE("text footer documents the normalization") {
        const auto text = render_report_text(published_table());
        CHECK(text.find("100 * (raw - min) / (max - min)") != std::string::npos);
        CHECK(text.find("100%") != std::string::npos);
    }
    SUBCASE("normalized_scores and json round trip") {
        std::map<std::string, CountryFraction> f;
        f["AA"] = {9, 1, 0, 10, 10, false, 0.9};
        f["BB"] = {5, 5, 0, 10, 10, false, 0.5};
        f["CC"] = {1, 8, 1, 10, 10, false, 0.1};
        const auto t = normalized_scores(f);
        CHECK(*t.at("AA").normalized_pct == 100.0);
        CHECK(*t.at("CC").normalized_pct == 0.0);
        CHECK(t.at("CC").n_tie == 1);
        CHECK(score_table_from_json(nlohmann::json::parse(to_json(t).dump())) == t);
        const auto raw = raw_scores(f);
        CHECK(to_json(raw)["AA"]["normalized_pct"].is_null());
        CHECK(score_table_from_json(to_json(raw)) == raw);
    }
}

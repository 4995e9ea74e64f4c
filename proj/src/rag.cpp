#include "peacelens/rag.hpp"

#include <cmath>
#include <cstdio>

#include <spdlog/spdlog.h>

#include "peacelens/errors.hpp"
#include "peacelens/text_template.hpp"

namespace peacelens {

using nlohmann::json;

void RagConfig::validate() const {
    if (k_knowledge < 1) throw Error("rag k_knowledge must be at least 1");
    if (k_articles < 1) throw Error("rag k_articles must be at least 1");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error("rag alpha must lie in [0, 1]");
    const auto names = template_placeholders(prompt_template);
    for (const char* required : {"query", "knowledge", "articles"})
        if (!names.contains(required)) throw Error(std::string("prompt template is missing {") + required + "}");
    if (llm) llm->validate();
}

std::string_view to_string(Generator g) noexcept {
    return g == Generator::Llm ? "LLM" : "EXTRACTIVE_FALLBACK";
}

Generator parse_generator(std::string_view text) {
    if (text == "LLM") return Generator::Llm;
    if (text == "EXTRACTIVE_FALLBACK") return Generator::ExtractiveFallback;
    throw Error("unknown generator '" + std::string(text) + "'");
}

json to_json(const SearchHit& hit) {
    return {{"doc_id", hit.doc_id}, {"score", hit.score}, {"metadata", hit.metadata}, {"text_excerpt", hit.text_excerpt}};
}

json to_json(const RagResponse& r) {
    json kh = json::array();
    for (const auto& h : r.knowledge_hits) kh.push_back(to_json(h));
    json ah = json::array();
    for (const auto& h : r.article_hits) ah.push_back(to_json(h));
    return {
        {"query", r.query},
        {"knowledge_hits", kh},
        {"article_hits", ah},
        {"augmented_prompt", r.augmented_prompt},
        {"generated_text", r.generated_text},
        {"generator", std::string(to_string(r.generator))},
    };
}

namespace {

std::vector<SearchHit> hits_from_json(const json& arr) {
    std::vector<SearchHit> hits;
    for (const auto& h : arr)
        hits.push_back({h.at("doc_id").get<std::string>(), h.at("score").get<double>(),
                        h.at("metadata").get<Metadata>(), h.at("text_excerpt").get<std::string>()});
    return hits;
}

}  // namespace

RagResponse rag_response_from_json(const json& j) {
    RagResponse r;
    r.query = j.at("query").get<std::string>();
    r.knowledge_hits = hits_from_json(j.at("knowledge_hits"));
    r.article_hits = hits_from_json(j.at("article_hits"));
    r.augmented_prompt = j.at("augmented_prompt").get<std::string>();
    r.generated_text = j.at("generated_text").get<std::string>();
    r.generator = parse_generator(j.at("generator").get<std::string>());
    return r;
}

// ---------------------------------------------------------------------------

std::vector<SearchHit> knowledge_search(const EmbeddingVector& query_vec, const RagConfig& cfg,
                                        const Collection& knowledge) {
    if (knowledge.empty()) {
        spdlog::info("knowledge collection '{}' is empty; no context retrieved", knowledge.name());
        return {};
    }
    return knowledge.search(query_vec, cfg.k_knowledge);
}

std::vector<SearchHit> knowledge_search(std::string_view query, const RagConfig& cfg, const Collection& knowledge,
                                        const Embedder& embedder) {
    return knowledge_search(embedder.embed(query), cfg, knowledge);
}

EmbeddingVector combine_query(const EmbeddingVector& query_vec, std::span<const EmbeddingVector> context_vecs,
                              double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error("alpha must lie in [0, 1]");
    const std::size_t dim = query_vec.dim();
    for (const auto& c : context_vecs)
        if (c.dim() != dim) throw DimensionMismatchError(dim, c.dim());
    if (context_vecs.empty() || alpha == 1.0) return query_vec;

    std::vector<double> centroid(dim, 0.0);
    for (const auto& c : context_vecs)
        for (std::size_t i = 0; i < dim; ++i) centroid[i] += c.components[i];
    const double n = static_cast<double>(context_vecs.size());
    for (double& x : centroid) x /= n;

    if (alpha == 0.0) {
        spdlog::debug("article query = centroid of {} knowledge vectors", context_vecs.size());
        return EmbeddingVector::from_raw(std::move(centroid), query_vec.model_id);
    }

    std::vector<double> mixed(dim);
    for (std::size_t i = 0; i < dim; ++i) mixed[i] = alpha * query_vec.components[i] + (1.0 - alpha) * centroid[i];
    spdlog::debug("article query = normalize({} * query + {} * centroid of {} knowledge vectors)", alpha,
                  1.0 - alpha, context_vecs.size());
    return EmbeddingVector::unit(std::move(mixed), query_vec.model_id);
}

std::vector<SearchHit> article_search(const EmbeddingVector& query_vec, std::span<const EmbeddingVector> context_vecs,
                                      const RagConfig& cfg, const Collection& articles) {
    if (query_vec.dim() != articles.dim()) throw DimensionMismatchError(articles.dim(), query_vec.dim());
    const auto combined = combine_query(query_vec, context_vecs, cfg.alpha);
    if (articles.empty()) return {};
    return articles.search(combined, cfg.k_articles);
}

std::string render_hits(std::span<const SearchHit> hits) {
    std::string out;
    char score[32];
    for (std::size_t i = 0; i < hits.size(); ++i) {
        std::snprintf(score, sizeof score, "%.4f", hits[i].score);
        if (i) out += "\n";
        out += "[" + std::to_string(i + 1) + "] (doc_id=" + hits[i].doc_id + ", score=" + score + ")\n";
        out += hits[i].text_excerpt;
        out += "\n";
    }
    return out;
}

std::string augment(std::string_view query, std::span<const SearchHit> knowledge_hits,
                    std::span<const SearchHit> article_hits, std::string_view tmpl) {
    const auto names = template_placeholders(tmpl);
    for (const char* required : {"query", "knowledge", "articles"})
        if (!names.contains(required)) throw Error(std::string("prompt template is missing {") + required + "}");
    return render_template(tmpl, {
                                     {"query", std::string(query)},
                                     {"knowledge", render_hits(knowledge_hits)},
                                     {"articles", render_hits(article_hits)},
                                 });
}

std::string extractive_summary(std::span<const SearchHit> article_hits) {
    std::string out(kFallbackPrefix);
    if (article_hits.empty()) return out + "\n(no articles retrieved)";
    const std::size_t n = std::min<std::size_t>(3, article_hits.size());
    for (std::size_t i = 0; i < n; ++i)
        out += "\n[" + std::to_string(i + 1) + "] " + article_hits[i].text_excerpt;
    return out;
}

Generation generate(std::string_view prompt, std::span<const SearchHit> article_hits, const RagConfig& cfg,
                    HttpTransport& transport) {
    if (!cfg.llm) return {extractive_summary(article_hits), Generator::ExtractiveFallback};

    const json request = {
        {"model", cfg.llm->model_id},
        {"messages", json::array({{{"role", "user"}, {"content", std::string(prompt)}}})},
    };
    const auto res = post_json_with_retries(transport, *cfg.llm, "/chat/completions", request.dump(), "chat completion");
    if (!res.ok()) {
        spdlog::warn("LLM unavailable (status {}: {}); using extractive fallback", res.status, excerpt(res.body));
        return {extractive_summary(article_hits), Generator::ExtractiveFallback};
    }

    try {
        const auto body = json::parse(res.body);
        return {body.at("choices").at(0).at("message").at("content").get<std::string>(), Generator::Llm};
    } catch (const json::exception&) {
        throw Error("malformed chat completion response: " + excerpt(res.body));
    }
}

Generation generate(std::string_view prompt, std::span<const SearchHit> article_hits, const RagConfig& cfg) {
    if (!cfg.llm) return {extractive_summary(article_hits), Generator::ExtractiveFallback};
    auto transport = make_http_transport();
    return generate(prompt, article_hits, cfg, *transport);
}

namespace {

template <typename Fn>
auto run_stage(const char* stage, Fn&& fn) {
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage, e.what());
    }
}

}  // namespace

RagResponse run_pipeline(std::string_view query, const RagConfig& cfg, const Collection& knowledge,
                         const Collection& articles, const Embedder& embedder,
                         std::shared_ptr<HttpTransport> llm_transport) {
    run_stage("config", [&] { cfg.validate(); return 0; });

    RagResponse r;
    r.query = std::string(query);

    const auto query_vec = run_stage("embed_query", [&] { return embedder.embed(query); });
    r.knowledge_hits = run_stage("knowledge_search", [&] { return knowledge_search(query_vec, cfg, knowledge); });

    r.article_hits = run_stage("article_search", [&] {
        std::vector<EmbeddingVector> context;
        context.reserve(r.knowledge_hits.size());
        for (const auto& hit : r.knowledge_hits) {
            auto rec = knowledge.get(hit.doc_id);
            if (!rec) throw Error("knowledge record '" + hit.doc_id + "' vanished");
            context.push_back(std::move(rec->vector));
        }
        return article_search(query_vec, context, cfg, articles);
    });

    r.augmented_prompt = run_stage("augment", [&] {
        return augment(query, r.knowledge_hits, r.article_hits, cfg.prompt_template);
    });

    auto gen = run_stage("generate", [&] {
        if (!cfg.llm) return generate(r.augmented_prompt, r.article_hits, cfg);
        auto transport = llm_transport ? llm_transport : make_http_transport();
        return generate(r.augmented_prompt, r.article_hits, cfg, *transport);
    });
    r.generated_text = std::move(gen.text);
    r.generator = gen.generator;
    return r;
}

}  // namespace peacelens

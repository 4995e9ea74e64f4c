#include "peacelens/cli.hpp"

#include <fstream>
#include <map>
#include <mutex>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "peacelens/classifier.hpp"
#include "peacelens/corpus.hpp"
#include "peacelens/errors.hpp"
#include "peacelens/rag.hpp"
#include "peacelens/vector_store.hpp"

namespace peacelens::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::ifstream open_input(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    return in;
}

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open '" + tmp.string() + "' for writing");
        out << content;
        if (!out) throw Error("failed writing '" + tmp.string() + "'");
    }
    fs::rename(tmp, path);
}

Collection load_collection(const RunConfig& cfg, std::string_view name) {
    const auto path = collection_path(cfg.data_dir, name);
    if (!fs::exists(path)) throw Error("missing collection '" + std::string(name) + "' (" + path.string() + ")");
    return Collection::load(path, std::string(name));
}

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
    try {
        return fn();
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

// Records embedded under a different model than the active embedder would be
// compared against incompatible anchors.
void check_model(const Collection& c, const Embedder& embedder) {
    std::optional<std::string> stored;
    c.for_each([&](const DocumentRecord& r) {
        if (stored) return;
        if (auto it = r.metadata.find(std::string(kModelIdKey)); it != r.metadata.end()) stored = it->second;
    });
    if (stored && *stored != embedder.model_id())
        throw Error("collection '" + c.name() + "' was embedded with '" + *stored + "' but the configured embedder is '" +
                    embedder.model_id() + "'");
}

}  // namespace

int cmd_ingest(const RunConfig& cfg, const IngestOptions& opts, std::ostream& out, std::ostream& err,
               const Transports& transports) {
    return guarded(err, [&] {
        cfg.validate();
        const bool knowledge = opts.kind == DocKind::Knowledge ||
                               (opts.kind == DocKind::Auto && opts.collection == kKnowledgeCollection);

        std::vector<std::string> ids, texts, excerpts;
        std::vector<Metadata> metas;
        std::map<std::string, std::size_t> per_country;
        {
            auto in = open_input(opts.corpus);
            if (knowledge) {
                for (auto& d : parse_knowledge(in)) {
                    Metadata m;
                    if (d.title) m["title"] = *d.title;
                    if (d.source) m["source"] = *d.source;
                    texts.push_back(d.title ? *d.title + "\n" + d.body : d.body);
                    excerpts.push_back(make_excerpt(d.body));
                    ids.push_back(std::move(d.id));
                    metas.push_back(std::move(m));
                }
            } else {
                for (auto& a : parse_corpus(in)) {
                    Metadata m{{"country", a.country}, {"peace_level", std::string(to_string(a.peace_level))}};
                    if (a.title) m["title"] = *a.title;
                    if (a.source) m["source"] = *a.source;
                    if (a.date) m["date"] = *a.date;
                    texts.push_back(cfg.enrich ? enrich_text(a, cfg.enrichment_template) : a.body);
                    excerpts.push_back(make_excerpt(a.body));
                    ++per_country[a.country];
                    ids.push_back(std::move(a.id));
                    metas.push_back(std::move(m));
                }
            }
        }
        if (ids.empty()) throw Error("no documents to ingest in '" + opts.corpus.string() + "'");

        const auto embedder = make_embedder(cfg.embedder, transports.embedding);
        auto vectors = embedder->embed_batch(texts, cfg.embedder.concurrency);

        const auto path = collection_path(cfg.data_dir, opts.collection);
        Collection c = fs::exists(path) ? Collection::load(path, opts.collection)
                                        : Collection(opts.collection, embedder->dim());
        if (c.dim() != embedder->dim()) throw DimensionMismatchError(c.dim(), embedder->dim());
        for (std::size_t i = 0; i < ids.size(); ++i)
            c.upsert({ids[i], std::move(vectors[i]), std::move(metas[i]), std::move(excerpts[i])});
        c.persist(path);

        out << "ingested " << ids.size() << (knowledge ? " knowledge documents" : " articles") << " into '"
            << opts.collection << "' (" << path.string() << ", " << c.size() << " records)\n";
        for (const auto& [country, n] : per_country) out << country << "\t" << n << "\n";
        return 0;
    });
}

int cmd_ask(const RunConfig& cfg, const AskOptions& opts, std::ostream& out, std::ostream& err,
            const Transports& transports) {
    return guarded(err, [&] {
        cfg.validate();
        const auto knowledge = load_collection(cfg, kKnowledgeCollection);
        const auto articles = load_collection(cfg, kArticlesCollection);
        const auto embedder = make_embedder(cfg.embedder, transports.embedding);
        const auto r = run_pipeline(opts.query, cfg.rag, knowledge, articles, *embedder, transports.llm);

        if (opts.json) {
            out << to_json(r).dump(2) << "\n";
            return 0;
        }
        auto print_hits = [&](const std::vector<SearchHit>& hits) {
            if (hits.empty()) out << "  (none)\n";
            for (std::size_t i = 0; i < hits.size(); ++i) {
                char score[32];
                std::snprintf(score, sizeof score, "%.4f", hits[i].score);
                out << "  " << (i + 1) << ". " << hits[i].doc_id;
                if (auto it = hits[i].metadata.find("country"); it != hits[i].metadata.end())
                    out << " [" << it->second << "]";
                out << " score=" << score << "\n";
            }
        };
        out << "ARTICLE HITS:\n";
        print_hits(r.article_hits);
        out << "KNOWLEDGE HITS:\n";
        print_hits(r.knowledge_hits);
        out << "GENERATOR: " << to_string(r.generator) << "\n\n" << r.generated_text << "\n";
        return 0;
    });
}

int cmd_classify(const RunConfig& cfg, const ClassifyOptions& opts, std::ostream& out, std::ostream& err,
                 const Transports& transports) {
    return guarded(err, [&] {
        cfg.validate();
        auto articles = load_collection(cfg, kArticlesCollection);
        const auto embedder = make_embedder(cfg.embedder, transports.embedding);
        if (articles.dim() != embedder->dim()) throw DimensionMismatchError(articles.dim(), embedder->dim());

        if (cfg.classify.reembed_bodies) {
            if (!opts.corpus) throw Error("classify.reembed_bodies needs --corpus");
            auto in = open_input(*opts.corpus);
            const auto corpus = parse_corpus(in);
            std::vector<std::string> bodies;
            std::vector<const Article*> kept;
            for (const auto& a : corpus) {
                if (!articles.get(a.id)) continue;
                bodies.push_back(a.body);
                kept.push_back(&a);
            }
            if (kept.empty()) throw Error("no corpus articles match the 'articles' collection");
            auto vecs = embedder->embed_batch(bodies, cfg.embedder.concurrency);
            Collection bare(std::string(kArticlesCollection), embedder->dim());
            for (std::size_t i = 0; i < kept.size(); ++i)
                bare.upsert({kept[i]->id, std::move(vecs[i]), {{"country", kept[i]->country}}, {}});
            articles = std::move(bare);
            spdlog::info("classifying on {} re-embedded article bodies", articles.size());
        } else {
            check_model(articles, *embedder);
        }

        const auto anchors = build_anchors(*embedder, cfg.classify.pir_text, cfg.classify.nir_text);
        const auto fractions =
            country_fractions(articles, anchors, cfg.classify.n_per_country, cfg.classify.seed);
        if (fractions.empty()) throw Error("no articles with country metadata");

        auto emit = [&](const ScoreTable& scores) {
            write_file(cfg.data_dir / kReportFile, render_report_tsv(scores));
            write_file(cfg.data_dir / kScoresFile, to_json(scores).dump(2) + "\n");
            out << render_report_text(scores);
        };

        if (fractions.size() == 1) {
            err << "warning: only one country present; normalization skipped (raw-only report)\n";
            emit(raw_scores(fractions));
            return 0;
        }
        try {
            emit(normalized_scores(fractions));
        } catch (const DegenerateRangeError& e) {
            emit(raw_scores(fractions));
            err << "error: " << e.what() << " (every country has the same raw fraction; raw fractions written)\n";
            return 1;
        }
        return 0;
    });
}

int cmd_stats(const fs::path& corpus, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        auto in = open_input(corpus);
        CorpusStatsBuilder builder;
        read_corpus(in, [&](Article&& a) { builder.add(a); });
        out << to_json(builder.finish()).dump(2) << "\n";
        return 0;
    });
}

int cmd_report(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto path = cfg.data_dir / kScoresFile;
        auto in = open_input(path);
        json j;
        try {
            j = json::parse(in);
        } catch (const json::exception& e) {
            throw Error("malformed '" + path.string() + "': " + e.what());
        }
        const auto scores = score_table_from_json(j);
        if (scores.empty()) throw Error("'" + path.string() + "' holds no scores");
        out << render_report_text(scores);
        return 0;
    });
}

namespace {

void use_stderr_logging() {
    static std::once_flag once;
    std::call_once(once, [] {
        auto logger = spdlog::stderr_color_mt("peacelens");
        logger->set_pattern("[%l] %v");
        spdlog::set_default_logger(logger);
    });
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err, const Transports& transports) {
    use_stderr_logging();

    CLI::App app{"Embed tagged news corpora, query them with two-stage retrieval, and score countries by "
                 "positive vs. negative intergroup reciprocity."};
    app.name("peacelens");
    app.require_subcommand(1);

    std::optional<std::string> config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> data_dir;
    app.add_option("--config", config_path, "TOML-style run configuration");
    app.add_option("--seed", seed, "Override classify.seed");
    app.add_option("--data-dir", data_dir, "Override data_dir");

    IngestOptions ingest;
    std::string kind = "auto";
    auto* ingest_cmd = app.add_subcommand("ingest", "Parse, embed and store a JSONL corpus");
    ingest_cmd->add_option("--corpus", ingest.corpus, "JSONL input")->required();
    ingest_cmd->add_option("--collection", ingest.collection, "Target collection")->capture_default_str();
    ingest_cmd->add_option("--kind", kind, "article, knowledge, or auto")
        ->check(CLI::IsMember({"auto", "article", "knowledge"}))
        ->capture_default_str();

    AskOptions ask;
    auto* ask_cmd = app.add_subcommand("ask", "Run the retrieval-augmented query pipeline");
    ask_cmd->add_option("query", ask.query, "Query text")->required();
    ask_cmd->add_flag("--json", ask.json, "Emit the full response as JSON");

    ClassifyOptions classify;
    std::optional<std::size_t> n;
    std::optional<std::string> classify_corpus;
    bool reembed = false;
    auto* classify_cmd = app.add_subcommand("classify", "Score countries by PIR vs. NIR alignment");
    classify_cmd->add_option("--n", n, "Articles sampled per country");
    classify_cmd->add_option("--corpus", classify_corpus, "Corpus for --reembed-bodies");
    classify_cmd->add_flag("--reembed-bodies", reembed, "Classify on bare-body embeddings");

    std::string stats_corpus;
    auto* stats_cmd = app.add_subcommand("stats", "Per-country article and word statistics");
    stats_cmd->add_option("--corpus", stats_corpus, "JSONL input")->required();

    auto* report_cmd = app.add_subcommand("report", "Print the last classification report");

    for (auto* sub : {ingest_cmd, ask_cmd, classify_cmd, stats_cmd, report_cmd}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? 0 : 1;
    }

    if (stats_cmd->parsed()) return cmd_stats(stats_corpus, out, err);

    RunConfig cfg;
    try {
        if (config_path) cfg = load_run_config(*config_path);
        if (seed) cfg.classify.seed = *seed;
        if (data_dir) cfg.data_dir = *data_dir;
        if (n) cfg.classify.n_per_country = *n;
        if (reembed) cfg.classify.reembed_bodies = true;
        cfg.validate();
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }

    if (ingest_cmd->parsed()) {
        ingest.kind = kind == "article" ? DocKind::Article : kind == "knowledge" ? DocKind::Knowledge : DocKind::Auto;
        return cmd_ingest(cfg, ingest, out, err, transports);
    }
    if (ask_cmd->parsed()) return cmd_ask(cfg, ask, out, err, transports);
    if (classify_cmd->parsed()) {
        if (classify_corpus) classify.corpus = *classify_corpus;
        return cmd_classify(cfg, classify, out, err, transports);
    }
    return cmd_report(cfg, out, err);
}

}  // namespace peacelens::cli

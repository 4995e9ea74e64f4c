#include "peacelens/config.hpp"

#include <charconv>
#include <fstream>

#include <CLI11.hpp>

#include "peacelens/classifier.hpp"
#include "peacelens/errors.hpp"

namespace peacelens {

void RunConfig::validate() const {
    if (embedder.mode == EmbedderMode::Remote) {
        if (!embedder.provider) throw Error("REMOTE embedder mode requires provider settings ([embedder] base_url)");
        embedder.provider->validate();
        if (embedder.dim < 1) throw Error("embedder dim must be positive");
    } else if (embedder.dim < 8) {
        throw Error("LOCAL embedder mode requires dim >= 8");
    }
    if (embedder.concurrency < 1) throw Error("embedder concurrency must be at least 1");
    if (classify.n_per_country < 1) throw Error("classify n_per_country must be at least 1");
    if (classify.pir_text == classify.nir_text) throw Error("anchors must differ");
    rag.validate();
    validate_enrichment_template(enrichment_template);
}

namespace {

struct Value {
    std::string key;
    std::string text;

    std::string str() const { return text; }

    std::uint64_t u64() const {
        std::uint64_t v = 0;
        auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec != std::errc{} || p != text.data() + text.size())
            throw ParseError(0, "config key '" + key + "' expects a non-negative integer, got '" + text + "'");
        return v;
    }

    std::size_t size() const { return static_cast<std::size_t>(u64()); }

    double real() const {
        try {
            std::size_t used = 0;
            double v = std::stod(text, &used);
            if (used == text.size()) return v;
        } catch (const std::exception&) {
        }
        throw ParseError(0, "config key '" + key + "' expects a number, got '" + text + "'");
    }

    bool boolean() const {
        if (text == "true") return true;
        if (text == "false") return false;
        throw ParseError(0, "config key '" + key + "' expects true or false, got '" + text + "'");
    }

    std::chrono::milliseconds millis() const { return std::chrono::milliseconds(u64()); }
};

void apply_provider_key(ProviderConfig& p, const std::string& name, const Value& v, bool& known) {
    known = true;
    if (name == "base_url") p.base_url = v.str();
    else if (name == "model_id") p.model_id = v.str();
    else if (name == "api_key_env") p.api_key_env = v.str();
    else if (name == "max_batch") p.max_batch = v.size();
    else if (name == "max_retries") p.max_retries = v.size();
    else if (name == "timeout_ms") p.timeout = v.millis();
    else if (name == "backoff_ms") p.backoff_base = v.millis();
    else known = false;
}

}  // namespace

RunConfig parse_run_config(std::istream& in) {
    std::vector<CLI::ConfigItem> items;
    try {
        items = CLI::ConfigTOML().from_config(in);
    } catch (const CLI::Error& e) {
        throw ParseError(0, std::string("config: ") + e.what());
    }

    RunConfig cfg;
    ProviderConfig embed_provider;
    bool embed_provider_set = false;
    ProviderConfig llm;
    llm.model_id = "gpt-4o-mini";
    llm.api_key_env = "LLM_API_KEY";
    bool llm_set = false;

    for (const auto& item : items) {
        if (item.name == "++" || item.name == "--") continue;
        const std::string full = item.fullname();
        if (item.parents.size() > 1) throw ParseError(0, "config: unknown key '" + full + "'");
        if (item.inputs.size() != 1) throw ParseError(0, "config key '" + full + "' expects a single value");
        const Value v{full, item.inputs.front()};
        const std::string section = item.parents.empty() ? "" : item.parents.front();
        const std::string& name = item.name;
        bool known = true;

        if (section.empty()) {
            if (name == "data_dir") cfg.data_dir = v.str();
            else if (name == "enrich") cfg.enrich = v.boolean();
            else if (name == "enrichment_template") cfg.enrichment_template = v.str();
            else known = false;
        } else if (section == "embedder") {
            if (name == "mode") {
                if (v.str() == "LOCAL" || v.str() == "local") cfg.embedder.mode = EmbedderMode::Local;
                else if (v.str() == "REMOTE" || v.str() == "remote") cfg.embedder.mode = EmbedderMode::Remote;
                else throw ParseError(0, "config: embedder.mode must be LOCAL or REMOTE");
            } else if (name == "dim") cfg.embedder.dim = v.size();
            else if (name == "seed") cfg.embedder.seed = v.u64();
            else if (name == "concurrency") cfg.embedder.concurrency = v.size();
            else if (name == "char_budget") cfg.embedder.char_budget = v.size();
            else {
                apply_provider_key(embed_provider, name, v, known);
                if (known && name == "base_url") embed_provider_set = true;
            }
        } else if (section == "rag") {
            if (name == "k_knowledge") cfg.rag.k_knowledge = v.size();
            else if (name == "k_articles") cfg.rag.k_articles = v.size();
            else if (name == "alpha") cfg.rag.alpha = v.real();
            else if (name == "prompt_template") cfg.rag.prompt_template = v.str();
            else known = false;
        } else if (section == "llm") {
            apply_provider_key(llm, name, v, known);
            if (known && name == "base_url") llm_set = true;
        } else if (section == "classify") {
            if (name == "n_per_country") cfg.classify.n_per_country = v.size();
            else if (name == "seed") cfg.classify.seed = v.u64();
            else if (name == "reembed_bodies") cfg.classify.reembed_bodies = v.boolean();
            else if (name == "pir_text") cfg.classify.pir_text = v.str();
            else if (name == "nir_text") cfg.classify.nir_text = v.str();
            else known = false;
        } else {
            known = false;
        }
        if (!known) throw ParseError(0, "config: unknown key '" + full + "'");
    }

    if (embed_provider_set) cfg.embedder.provider = embed_provider;
    if (llm_set) cfg.rag.llm = llm;
    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file '" + path.string() + "'");
    return parse_run_config(in);
}

std::unique_ptr<Embedder> make_embedder(const EmbedderConfig& cfg, std::shared_ptr<HttpTransport> transport) {
    if (cfg.mode == EmbedderMode::Local) return std::make_unique<LocalEmbedder>(cfg.dim, cfg.seed);
    if (!cfg.provider) throw Error("REMOTE embedder mode requires provider settings");
    return std::make_unique<RemoteEmbedder>(*cfg.provider, cfg.dim, transport ? transport : make_http_transport(),
                                            cfg.char_budget);
}

}  // namespace peacelens

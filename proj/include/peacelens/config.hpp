#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <memory>
#include <optional>
#include <string>

#include "peacelens/classifier.hpp"
#include "peacelens/corpus.hpp"
#include "peacelens/embedding.hpp"
#include "peacelens/provider.hpp"
#include "peacelens/rag.hpp"

namespace peacelens {

enum class EmbedderMode { Local, Remote };

struct EmbedderConfig {
    EmbedderMode mode = EmbedderMode::Local;
    std::optional<ProviderConfig> provider;  // required in Remote mode
    std::size_t dim = 1536;
    std::uint64_t seed = 42;
    std::size_t concurrency = 4;
    std::size_t char_budget = kDefaultCharBudget;
};

struct ClassifyConfig {
    std::size_t n_per_country = 6000;
    std::uint64_t seed = 42;
    // Classify on vectors of the bare article body instead of the stored
    // (enriched) vectors. Needs the corpus file.
    bool reembed_bodies = false;
    std::string pir_text = std::string(kPirDefinition);
    std::string nir_text = std::string(kNirDefinition);
};

struct RunConfig {
    std::filesystem::path data_dir = "data";
    EmbedderConfig embedder;
    RagConfig rag;
    ClassifyConfig classify;
    bool enrich = true;
    std::string enrichment_template = std::string(kDefaultEnrichmentTemplate);

    void validate() const;
};

// TOML-style file: top-level keys data_dir, enrich, enrichment_template and
// sections [embedder], [rag], [llm], [classify]. Unknown keys are errors.
RunConfig parse_run_config(std::istream& in);
RunConfig load_run_config(const std::filesystem::path& path);

std::unique_ptr<Embedder> make_embedder(const EmbedderConfig& cfg,
                                        std::shared_ptr<HttpTransport> transport = nullptr);

}  // namespace peacelens

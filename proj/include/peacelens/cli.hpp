#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <string>

#include "peacelens/config.hpp"
#include "peacelens/provider.hpp"

namespace peacelens::cli {

// Remote transports; null means the real HTTP client. Tests inject stubs.
struct Transports {
    std::shared_ptr<HttpTransport> embedding;
    std::shared_ptr<HttpTransport> llm;
};

enum class DocKind { Auto, Article, Knowledge };

struct IngestOptions {
    std::filesystem::path corpus;
    std::string collection = "articles";
    DocKind kind = DocKind::Auto;  // Auto: knowledge format iff collection == "knowledge"
};

struct AskOptions {
    std::string query;
    bool json = false;
};

struct ClassifyOptions {
    std::optional<std::filesystem::path> corpus;  // needed for classify.reembed_bodies
};

inline constexpr const char* kReportFile = "report.tsv";
inline constexpr const char* kScoresFile = "scores.json";

// Each command returns the process exit code: 0 on success, 1 on any error.
// Data goes to out (and files under cfg.data_dir), diagnostics to err.
int cmd_ingest(const RunConfig& cfg, const IngestOptions& opts, std::ostream& out, std::ostream& err,
               const Transports& transports = {});
int cmd_ask(const RunConfig& cfg, const AskOptions& opts, std::ostream& out, std::ostream& err,
            const Transports& transports = {});
int cmd_classify(const RunConfig& cfg, const ClassifyOptions& opts, std::ostream& out, std::ostream& err,
                 const Transports& transports = {});
int cmd_stats(const std::filesystem::path& corpus, std::ostream& out, std::ostream& err);
int cmd_report(const RunConfig& cfg, std::ostream& out, std::ostream& err);

// Parses argv and dispatches to a command.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
        const Transports& transports = {});

}  // namespace peacelens::cli

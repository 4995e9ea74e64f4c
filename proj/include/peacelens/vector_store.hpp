#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "peacelens/embedding.hpp"

namespace peacelens {

using Metadata = std::map<std::string, std::string>;

// Conjunctive equality over metadata keys; empty matches every record.
using MetadataFilter = std::map<std::string, std::string>;

inline constexpr std::size_t kExcerptChars = 500;
// Metadata key that carries the vector's model id through persistence.
inline constexpr std::string_view kModelIdKey = "embedding_model";

// First kExcerptChars code points of text.
std::string make_excerpt(std::string_view text);

struct DocumentRecord {
    std::string doc_id;
    EmbeddingVector vector;
    Metadata metadata;
    std::string text_excerpt;

    bool operator==(const DocumentRecord&) const = default;
};

struct SearchHit {
    std::string doc_id;
    double score = 0.0;
    Metadata metadata;
    std::string text_excerpt;

    bool operator==(const SearchHit&) const = default;
};

// A named, fixed-dimension set of records kept in insertion order.
// Concurrent readers (get/search/for_each/persist) may run alongside each
// other; upsert takes the collection exclusively.
class Collection {
public:
    Collection(std::string name, std::size_t dim);
    Collection(const Collection& other);
    Collection(Collection&& other) noexcept;
    Collection& operator=(Collection other) noexcept;
    ~Collection() = default;

    const std::string& name() const noexcept { return name_; }
    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const;
    bool empty() const { return size() == 0; }

    // Replaces an existing doc_id in place, otherwise appends. The vector's
    // model id is mirrored into metadata[kModelIdKey] and its normalized flag
    // is recomputed, so a stored record always equals its reloaded form.
    void upsert(DocumentRecord record);

    std::optional<DocumentRecord> get(const std::string& doc_id) const;

    // Exact top-k by cosine similarity over records passing filter. Ties are
    // broken by ascending doc_id.
    std::vector<SearchHit> search(const EmbeddingVector& query, std::size_t k,
                                  const MetadataFilter& filter = {}) const;

    void for_each(const std::function<void(const DocumentRecord&)>& fn) const;
    std::vector<DocumentRecord> records() const;

    // Little-endian binary layout:
    //   "RLNS" | u32 version | u32 dim | u64 count |
    //   count * ( str doc_id | u32 n_meta | n_meta * (str key | str value) |
    //             str excerpt | dim * f64 )
    // where str is a u32 byte length followed by UTF-8 bytes. Written to a
    // temporary sibling and renamed into place.
    void persist(const std::filesystem::path& path) const;

    // Throws BadMagicError, VersionMismatchError, TruncatedFileError or
    // CorruptHeaderError. The name defaults to the file stem.
    static Collection load(const std::filesystem::path& path, std::string name = {});

    friend bool operator==(const Collection& a, const Collection& b);

private:
    std::string name_;
    std::size_t dim_;
    std::vector<DocumentRecord> records_;
    std::vector<double> norms_;
    std::unordered_map<std::string, std::size_t> index_;
    std::unique_ptr<std::shared_mutex> mutex_;
};

inline constexpr std::uint32_t kStoreFormatVersion = 1;

std::filesystem::path collection_path(const std::filesystem::path& data_dir, std::string_view name);

}  // namespace peacelens

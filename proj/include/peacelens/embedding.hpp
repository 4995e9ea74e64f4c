#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "peacelens/provider.hpp"

namespace peacelens {

struct EmbeddingVector {
    std::vector<double> components;
    std::string model_id;
    bool normalized = false;

    std::size_t dim() const noexcept { return components.size(); }

    // Validates that every component is finite; stores the values as given.
    static EmbeddingVector from_raw(std::vector<double> components, std::string model_id = {});
    // Validates, then scales to unit L2 norm. Throws EmbeddingError on a zero vector.
    static EmbeddingVector unit(std::vector<double> components, std::string model_id = {});

    bool operator==(const EmbeddingVector&) const = default;
};

double dot(std::span<const double> a, std::span<const double> b) noexcept;
double l2_norm(std::span<const double> v) noexcept;

// dot(a,b) / (|a| |b|) clamped to [-1, 1]. Throws DimensionMismatchError or
// EmbeddingError (zero vector).
double cosine_similarity(std::span<const double> a, std::span<const double> b);
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

class Embedder {
public:
    virtual ~Embedder() = default;

    virtual std::size_t dim() const noexcept = 0;
    virtual const std::string& model_id() const noexcept = 0;

    // Throws Error when text is blank.
    EmbeddingVector embed(std::string_view text) const;

    // Order-preserving. Texts are grouped into chunks of max_batch() and at
    // most concurrency_limit chunks are in flight. A failing chunk is retried
    // item by item so failures are attributed to exact indices; all failures
    // are collected into a single BatchError.
    std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts,
                                             std::size_t concurrency_limit = 4) const;

protected:
    virtual std::size_t max_batch() const noexcept { return 1; }
    // texts are non-blank; returns one unit vector per text, same order.
    virtual std::vector<EmbeddingVector> embed_chunk(std::span<const std::string> texts) const = 0;
};

// Feature-hashing bag-of-words embedder. Lowercases ASCII letters, splits on
// whitespace, hashes every token with MurmurHash64A(seed); the bucket is
// hash mod dim and the sign is -1 when the hash's top bit is set. The summed
// vector is L2-normalised.
class LocalEmbedder final : public Embedder {
public:
    LocalEmbedder(std::size_t dim, std::uint64_t seed);

    std::size_t dim() const noexcept override { return dim_; }
    const std::string& model_id() const noexcept override { return model_id_; }
    std::uint64_t seed() const noexcept { return seed_; }

    // Pre-normalisation bucket counts, exposed for inspection and tests.
    std::vector<double> bucket_counts(std::string_view text) const;

protected:
    std::size_t max_batch() const noexcept override { return 64; }
    std::vector<EmbeddingVector> embed_chunk(std::span<const std::string> texts) const override;

private:
    std::size_t dim_;
    std::uint64_t seed_;
    std::string model_id_;
};

inline constexpr std::size_t kDefaultCharBudget = 24000;

// OpenAI-compatible `/embeddings` client.
class RemoteEmbedder final : public Embedder {
public:
    RemoteEmbedder(ProviderConfig cfg, std::size_t dim,
                   std::shared_ptr<HttpTransport> transport = make_http_transport(),
                   std::size_t char_budget = kDefaultCharBudget);

    std::size_t dim() const noexcept override { return dim_; }
    const std::string& model_id() const noexcept override { return cfg_.model_id; }

protected:
    std::size_t max_batch() const noexcept override { return cfg_.max_batch; }
    std::vector<EmbeddingVector> embed_chunk(std::span<const std::string> texts) const override;

private:
    ProviderConfig cfg_;
    std::size_t dim_;
    std::shared_ptr<HttpTransport> transport_;
    std::size_t char_budget_;
};

}  // namespace peacelens

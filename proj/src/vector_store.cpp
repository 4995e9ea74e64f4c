#include "peacelens/vector_store.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <mutex>

#include "peacelens/errors.hpp"

namespace peacelens {

std::string make_excerpt(std::string_view text) {
    std::size_t chars = 0;
    std::size_t i = 0;
    while (i < text.size()) {
        if ((static_cast<unsigned char>(text[i]) & 0xC0) != 0x80) {
            if (chars == kExcerptChars) break;
            ++chars;
        }
        ++i;
    }
    return std::string(text.substr(0, i));
}

Collection::Collection(std::string name, std::size_t dim)
    : name_(std::move(name)), dim_(dim), mutex_(std::make_unique<std::shared_mutex>()) {
    if (dim_ == 0) throw Error("collection dimension must be positive");
}

Collection::Collection(const Collection& other) : mutex_(std::make_unique<std::shared_mutex>()) {
    std::shared_lock lock(*other.mutex_);
    name_ = other.name_;
    dim_ = other.dim_;
    records_ = other.records_;
    norms_ = other.norms_;
    index_ = other.index_;
}

Collection::Collection(Collection&& other) noexcept
    : name_(std::move(other.name_)), dim_(other.dim_), records_(std::move(other.records_)),
      norms_(std::move(other.norms_)), index_(std::move(other.index_)),
      mutex_(std::move(other.mutex_)) {
    other.mutex_ = std::make_unique<std::shared_mutex>();
}

Collection& Collection::operator=(Collection other) noexcept {
    std::swap(name_, other.name_);
    std::swap(dim_, other.dim_);
    std::swap(records_, other.records_);
    std::swap(norms_, other.norms_);
    std::swap(index_, other.index_);
    return *this;
}

std::size_t Collection::size() const {
    std::shared_lock lock(*mutex_);
    return records_.size();
}

namespace {

bool is_unit(const std::vector<double>& v) { return std::abs(l2_norm(v) - 1.0) <= 1e-6; }

}  // namespace

void Collection::upsert(DocumentRecord record) {
    if (record.vector.dim() != dim_) throw DimensionMismatchError(dim_, record.vector.dim());
    for (double c : record.vector.components)
        if (!std::isfinite(c)) throw EmbeddingError("record '" + record.doc_id + "' has a non-finite component");
    const double norm = l2_norm(record.vector.components);
    if (norm == 0.0) throw EmbeddingError("record '" + record.doc_id + "' has a zero vector");

    if (!record.vector.model_id.empty())
        record.metadata[std::string(kModelIdKey)] = record.vector.model_id;
    record.vector.normalized = is_unit(record.vector.components);

    std::unique_lock lock(*mutex_);
    if (auto it = index_.find(record.doc_id); it != index_.end()) {
        records_[it->second] = std::move(record);
        norms_[it->second] = norm;
        return;
    }
    index_.emplace(record.doc_id, records_.size());
    records_.push_back(std::move(record));
    norms_.push_back(norm);
}

std::optional<DocumentRecord> Collection::get(const std::string& doc_id) const {
    std::shared_lock lock(*mutex_);
    auto it = index_.find(doc_id);
    if (it == index_.end()) return std::nullopt;
    return records_[it->second];
}

namespace {

bool matches(const Metadata& metadata, const MetadataFilter& filter) {
    for (const auto& [key, value] : filter) {
        auto it = metadata.find(key);
        if (it == metadata.end() || it->second != value) return false;
    }
    return true;
}

}  // namespace

std::vector<SearchHit> Collection::search(const EmbeddingVector& query, std::size_t k,
                                          const MetadataFilter& filter) const {
    if (k == 0) throw Error("search k must be at least 1");
    if (query.dim() != dim_) throw DimensionMismatchError(dim_, query.dim());
    const double qnorm = l2_norm(query.components);
    if (qnorm == 0.0) throw EmbeddingError("search query is a zero vector");

    std::shared_lock lock(*mutex_);
    struct Scored {
        double score;
        std::size_t pos;
    };
    std::vector<Scored> scored;
    scored.reserve(records_.size());
    for (std::size_t i = 0; i < records_.size(); ++i) {
        if (!matches(records_[i].metadata, filter)) continue;
        const double s = dot(query.components, records_[i].vector.components) / (qnorm * norms_[i]);
        scored.push_back({std::clamp(s, -1.0, 1.0), i});
    }

    auto better = [&](const Scored& a, const Scored& b) {
        if (a.score != b.score) return a.score > b.score;
        return records_[a.pos].doc_id < records_[b.pos].doc_id;
    };
    const std::size_t take = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end(), better);

    std::vector<SearchHit> hits;
    hits.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        const auto& r = records_[scored[i].pos];
        hits.push_back({r.doc_id, scored[i].score, r.metadata, r.text_excerpt});
    }
    return hits;
}

void Collection::for_each(const std::function<void(const DocumentRecord&)>& fn) const {
    std::shared_lock lock(*mutex_);
    for (const auto& r : records_) fn(r);
}

std::vector<DocumentRecord> Collection::records() const {
    std::shared_lock lock(*mutex_);
    return records_;
}

bool operator==(const Collection& a, const Collection& b) {
    if (&a == &b) return true;
    std::shared_lock la(*a.mutex_, std::defer_lock);
    std::shared_lock lb(*b.mutex_, std::defer_lock);
    std::lock(la, lb);
    return a.name_ == b.name_ && a.dim_ == b.dim_ && a.records_ == b.records_;
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

constexpr char kMagic[4] = {'R', 'L', 'N', 'S'};

class Writer {
public:
    void u32(std::uint32_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }
    void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
    void str(std::string_view s) {
        if (s.size() > UINT32_MAX) throw Error("string too long to persist");
        u32(static_cast<std::uint32_t>(s.size()));
        buf_.append(s);
    }
    void raw(std::string_view s) { buf_.append(s); }
    const std::string& bytes() const noexcept { return buf_; }

private:
    void put(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
    std::string buf_;
};

class Reader {
public:
    explicit Reader(std::string_view data) : data_(data) {}

    std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
    std::uint64_t u64() { return get(8); }
    double f64() { return std::bit_cast<double>(get(8)); }
    std::string str() {
        const auto n = u32();
        return std::string(take(n));
    }
    std::string_view take(std::size_t n) {
        if (remaining() < n) throw TruncatedFileError();
        auto out = data_.substr(pos_, n);
        pos_ += n;
        return out;
    }
    std::size_t remaining() const noexcept { return data_.size() - pos_; }

private:
    std::uint64_t get(int n) {
        auto bytes = take(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = n - 1; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(bytes[static_cast<std::size_t>(i)]);
        return v;
    }
    std::string_view data_;
    std::size_t pos_ = 0;
};

}  // namespace

void Collection::persist(const std::filesystem::path& path) const {
    Writer w;
    {
        std::shared_lock lock(*mutex_);
        w.raw(std::string_view(kMagic, 4));
        w.u32(kStoreFormatVersion);
        w.u32(static_cast<std::uint32_t>(dim_));
        w.u64(records_.size());
        for (const auto& r : records_) {
            w.str(r.doc_id);
            w.u32(static_cast<std::uint32_t>(r.metadata.size()));
            for (const auto& [key, value] : r.metadata) {
                w.str(key);
                w.str(value);
            }
            w.str(r.text_excerpt);
            for (double c : r.vector.components) w.f64(c);
        }
    }

    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open '" + tmp.string() + "' for writing");
        out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
        if (!out) throw Error("failed writing '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

Collection Collection::load(const std::filesystem::path& path, std::string name) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open collection file '" + path.string() + "'");
    const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    Reader r(data);
    if (r.take(4) != std::string_view(kMagic, 4)) throw BadMagicError();
    if (auto version = r.u32(); version != kStoreFormatVersion) throw VersionMismatchError(version);
    const std::uint32_t dim = r.u32();
    if (dim == 0) throw CorruptHeaderError("dimension is zero");
    const std::uint64_t count = r.u64();
    // each record needs at least its three length prefixes, a metadata count and the vector
    const std::uint64_t min_record = 16 + std::uint64_t{8} * dim;
    if (count > r.remaining() / min_record) throw TruncatedFileError();

    Collection c(name.empty() ? path.stem().string() : std::move(name), dim);
    c.records_.reserve(static_cast<std::size_t>(count));
    for (std::uint64_t i = 0; i < count; ++i) {
        DocumentRecord rec;
        rec.doc_id = r.str();
        const auto n_meta = r.u32();
        for (std::uint32_t m = 0; m < n_meta; ++m) {
            auto key = r.str();
            rec.metadata[std::move(key)] = r.str();
        }
        rec.text_excerpt = r.str();
        rec.vector.components.resize(dim);
        for (auto& x : rec.vector.components) x = r.f64();
        if (auto it = rec.metadata.find(std::string(kModelIdKey)); it != rec.metadata.end())
            rec.vector.model_id = it->second;
        rec.vector.normalized = is_unit(rec.vector.components);

        const double norm = l2_norm(rec.vector.components);
        if (c.index_.contains(rec.doc_id)) throw StoreFormatError("duplicate doc_id '" + rec.doc_id + "'");
        c.index_.emplace(rec.doc_id, c.records_.size());
        c.records_.push_back(std::move(rec));
        c.norms_.push_back(norm);
    }
    if (r.remaining() != 0) throw StoreFormatError("trailing bytes after last record");
    return c;
}

std::filesystem::path collection_path(const std::filesystem::path& data_dir, std::string_view name) {
    return data_dir / (std::string(name) + ".vec");
}

}  // namespace peacelens

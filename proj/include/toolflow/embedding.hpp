#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "json.hpp"

#include "toolflow/common.hpp"
#include "toolflow/tool_catalog.hpp"

namespace toolflow {

using EmbeddingVector = std::vector<double>;

// Cosine similarity; throws EmbeddingError on dimension mismatch or a
// zero-norm input (silently mapping those to 0 would mask broken providers).
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

enum class EmbeddingFieldKind { Parameter, ReturnValue };

struct EmbeddingKey {
    EmbeddingFieldKind kind;
    std::string tool_name;
    std::string field_name;
    std::string text;  // always "{name}: {description}"
};

std::string render_key_text(const std::string& field_name, const std::string& description);
EmbeddingKey render_key(const ParameterSpec& spec, const ToolSpec& tool);
EmbeddingKey render_key(const ReturnSpec& spec, const ToolSpec& tool);

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) = 0;
    virtual std::string id() const = 0;

    int call_count() const { return calls_; }
    long long embedded_count() const { return embedded_; }

protected:
    void record_call(std::size_t batch) {
        ++calls_;
        embedded_ += static_cast<long long>(batch);
    }

private:
    int calls_ = 0;
    long long embedded_ = 0;
};

// Deterministic offline provider: each token of the text is hashed into one
// of 64 buckets, counts accumulate, and the bag vector is L2-normalized.
// Shared token content produces high cosine, which is all the graph fixtures
// need.
class HashEmbeddingProvider : public EmbeddingProvider {
public:
    static constexpr std::size_t kDim = 64;
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;
    std::string id() const override { return "mock-hash-64"; }
};

// Test/fixture provider with a fixed text -> vector table.
class FixedEmbeddingProvider : public EmbeddingProvider {
public:
    explicit FixedEmbeddingProvider(std::map<std::string, EmbeddingVector> table);
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;
    std::string id() const override { return "fixed"; }

private:
    std::map<std::string, EmbeddingVector> table_;
};

// Client for an HTTP embeddings endpoint:
// POST {model, input: [strings]} -> {data: [{index, embedding: [floats]}]}.
class RemoteEmbeddingProvider : public EmbeddingProvider {
public:
    RemoteEmbeddingProvider(std::string endpoint_url, std::string api_key, std::string model,
                            RetryPolicy retry = {}, int timeout_s = 120);
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;
    std::string id() const override;

private:
    std::string url_;
    std::string api_key_;
    std::string model_;
    RetryPolicy retry_;
    int timeout_s_;
};

// Provider wrapper with an in-memory map backed by an append-only JSONL file
// (one {text, dim, values} record per line, last write wins on reload).
// Identical texts resolve to one entry; warm cache hits never call the
// provider.
class CachedEmbedder {
public:
    CachedEmbedder(EmbeddingProvider& provider, std::string cache_path);  // "" = memory only

    const EmbeddingVector& get(const std::string& text);
    std::vector<EmbeddingVector> get_batch(const std::vector<std::string>& texts);
    std::size_t cached_count() const { return cache_.size(); }

private:
    EmbeddingProvider& provider_;
    std::string cache_path_;
    std::map<std::string, EmbeddingVector> cache_;
    std::mutex mutex_;
};

std::map<std::string, EmbeddingVector> load_embedding_cache(const std::string& path);

// One vector per parameter and return value of every tool, deduplicated by
// rendered text.
class EmbeddingStore {
public:
    void put(const EmbeddingKey& key, EmbeddingVector vector);
    const EmbeddingVector* find(EmbeddingFieldKind kind, const std::string& tool_name,
                                const std::string& field_name) const;
    const EmbeddingVector& at(EmbeddingFieldKind kind, const std::string& tool_name,
                              const std::string& field_name) const;
    const EmbeddingVector* find_text(const std::string& text) const;
    std::size_t entry_count() const { return keys_.size(); }
    std::size_t unique_text_count() const { return by_text_.size(); }
    const std::vector<EmbeddingKey>& keys() const { return keys_; }

private:
    static std::string slot(EmbeddingFieldKind kind, const std::string& tool_name,
                            const std::string& field_name);
    std::vector<EmbeddingKey> keys_;
    std::map<std::string, std::string> text_by_slot_;
    std::map<std::string, EmbeddingVector> by_text_;
};

// Embeds every parameter/return of every tool, going through the cache file
// when one is given. A warm cache satisfies the whole catalog with zero
// provider calls.
EmbeddingStore embed_catalog(const ToolCatalog& catalog, EmbeddingProvider& provider,
                             const std::string& cache_path = "");

}  // namespace toolflow

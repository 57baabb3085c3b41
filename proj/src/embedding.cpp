#include "toolflow/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "httplib.h"

#include "toolflow/llm_client.hpp"
#include "toolflow/tokenize.hpp"

namespace toolflow {

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.size() != b.size()) {
        throw EmbeddingError("cosine: dimension mismatch (" + std::to_string(a.size()) + " vs " +
                             std::to_string(b.size()) + ")");
    }
    if (a.empty()) throw EmbeddingError("cosine: empty vectors");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw EmbeddingError("cosine: zero-norm vector");
    return dot / std::sqrt(na * nb);
}

std::string render_key_text(const std::string& field_name, const std::string& description) {
    return field_name + ": " + description;
}

EmbeddingKey render_key(const ParameterSpec& spec, const ToolSpec& tool) {
    return EmbeddingKey{EmbeddingFieldKind::Parameter, tool.name, spec.name,
                        render_key_text(spec.name, spec.description)};
}

EmbeddingKey render_key(const ReturnSpec& spec, const ToolSpec& tool) {
    return EmbeddingKey{EmbeddingFieldKind::ReturnValue, tool.name, spec.name,
                        render_key_text(spec.name, spec.description)};
}

std::vector<EmbeddingVector> HashEmbeddingProvider::embed(const std::vector<std::string>& texts) {
    record_call(texts.size());
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
        EmbeddingVector v(kDim, 0.0);
        const auto tokens = tokenize(text);
        if (tokens.empty()) {
            throw EmbeddingError("mock provider: no tokens in text '" + text + "'");
        }
        for (const auto& token : tokens) {
            v[fnv1a64(token) % kDim] += 1.0;
        }
        double norm = 0.0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
        for (double& x : v) x /= norm;
        out.push_back(std::move(v));
    }
    return out;
}

FixedEmbeddingProvider::FixedEmbeddingProvider(std::map<std::string, EmbeddingVector> table)
    : table_(std::move(table)) {}

std::vector<EmbeddingVector> FixedEmbeddingProvider::embed(const std::vector<std::string>& texts) {
    record_call(texts.size());
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
        auto it = table_.find(text);
        if (it == table_.end()) {
            throw EmbeddingError("fixed provider: no vector for text '" + text + "'");
        }
        out.push_back(it->second);
    }
    return out;
}

RemoteEmbeddingProvider::RemoteEmbeddingProvider(std::string endpoint_url, std::string api_key,
                                                 std::string model, RetryPolicy retry,
                                                 int timeout_s)
    : url_(std::move(endpoint_url)),
      api_key_(std::move(api_key)),
      model_(std::move(model)),
      retry_(retry),
      timeout_s_(timeout_s) {}

std::vector<EmbeddingVector> RemoteEmbeddingProvider::embed(const std::vector<std::string>& texts) {
    record_call(texts.size());
    const HttpUrlParts parts = parse_http_url(url_);
    json body{{"model", model_}, {"input", texts}};
    double backoff = retry_.backoff_ms;
    std::string last_error;
    for (int attempt = 0; attempt <= retry_.max_retries; ++attempt) {
        httplib::Client client(parts.host, parts.port);
        client.set_read_timeout(timeout_s_, 0);
        client.set_connection_timeout(timeout_s_, 0);
        httplib::Headers headers;
        if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
        auto res = client.Post(parts.path, headers, body.dump(), "application/json");
        bool transient = false;
        if (!res) {
            last_error = "endpoint unreachable";
            transient = true;
        } else if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            transient = true;
        } else if (res->status != 200) {
            throw EmbeddingError("embeddings endpoint returned HTTP " +
                                 std::to_string(res->status));
        } else {
            try {
                const json doc = json::parse(res->body);
                std::vector<EmbeddingVector> out(texts.size());
                for (const auto& item : doc.at("data")) {
                    const auto index = item.at("index").get<std::size_t>();
                    out.at(index) = item.at("embedding").get<EmbeddingVector>();
                }
                std::size_t dim = out.empty() ? 0 : out[0].size();
                for (const auto& v : out) {
                    if (v.empty() || v.size() != dim) {
                        throw EmbeddingError("embeddings response has inconsistent dimensions");
                    }
                }
                return out;
            } catch (const json::exception& e) {
                last_error = std::string("malformed response: ") + e.what();
                transient = true;
            }
        }
        if (!transient || attempt == retry_.max_retries) break;
        std::this_thread::sleep_for(std::chrono::milliseconds(static_cast<int>(backoff)));
        backoff *= retry_.multiplier;
    }
    throw EmbeddingError("embeddings endpoint failed after retries: " + last_error);
}

std::string RemoteEmbeddingProvider::id() const {
    return model_.empty() ? url_ : model_;
}

std::map<std::string, EmbeddingVector> load_embedding_cache(const std::string& path) {
    std::map<std::string, EmbeddingVector> cache;
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const Error&) {
        return cache;  // missing cache file is a cold cache
    }
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        const std::string line = text.substr(pos, end - pos);
        pos = end + 1;
        if (line.empty()) continue;
        try {
            const json record = json::parse(line);
            EmbeddingVector values = record.at("values").get<EmbeddingVector>();
            if (record.contains("dim") &&
                record.at("dim").get<std::size_t>() != values.size()) {
                continue;  // corrupt record; skip rather than poison the cache
            }
            cache[record.at("text").get<std::string>()] = std::move(values);
        } catch (const json::exception&) {
            continue;
        }
    }
    return cache;
}

CachedEmbedder::CachedEmbedder(EmbeddingProvider& provider, std::string cache_path)
    : provider_(provider), cache_path_(std::move(cache_path)) {
    if (!cache_path_.empty()) cache_ = load_embedding_cache(cache_path_);
}

const EmbeddingVector& CachedEmbedder::get(const std::string& text) {
    get_batch({text});
    std::lock_guard<std::mutex> lock(mutex_);
    return cache_.at(text);
}

std::vector<EmbeddingVector> CachedEmbedder::get_batch(const std::vector<std::string>& texts) {
    std::vector<std::string> missing;
    {
        std::lock_guard<std::mutex> lock(mutex_);
        for (const auto& text : texts) {
            if (!cache_.count(text) &&
                std::find(missing.begin(), missing.end(), text) == missing.end()) {
                missing.push_back(text);
            }
        }
    }
    if (!missing.empty()) {
        auto vectors = provider_.embed(missing);
        if (vectors.size() != missing.size()) {
            throw EmbeddingError("provider returned wrong batch size");
        }
        std::lock_guard<std::mutex> lock(mutex_);
        if (!cache_.empty() && !vectors.empty() &&
            cache_.begin()->second.size() != vectors[0].size()) {
            throw EmbeddingError("cache/provider dimension mismatch: cache has dim " +
                                 std::to_string(cache_.begin()->second.size()) +
                                 ", provider produced dim " + std::to_string(vectors[0].size()));
        }
        for (std::size_t i = 0; i < missing.size(); ++i) {
            if (!cache_path_.empty()) {
                append_line(cache_path_, json{{"text", missing[i]},
                                              {"dim", vectors[i].size()},
                                              {"values", vectors[i]}}
                                             .dump());
            }
            cache_[missing[i]] = std::move(vectors[i]);
        }
    }
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    std::lock_guard<std::mutex> lock(mutex_);
    for (const auto& text : texts) out.push_back(cache_.at(text));
    return out;
}

std::string EmbeddingStore::slot(EmbeddingFieldKind kind, const std::string& tool_name,
                                 const std::string& field_name) {
    return std::string(kind == EmbeddingFieldKind::Parameter ? "p" : "r") + "\x1f" + tool_name +
           "\x1f" + field_name;
}

void EmbeddingStore::put(const EmbeddingKey& key, EmbeddingVector vector) {
    keys_.push_back(key);
    text_by_slot_[slot(key.kind, key.tool_name, key.field_name)] = key.text;
    by_text_[key.text] = std::move(vector);
}

const EmbeddingVector* EmbeddingStore::find(EmbeddingFieldKind kind, const std::string& tool_name,
                                            const std::string& field_name) const {
    auto it = text_by_slot_.find(slot(kind, tool_name, field_name));
    if (it == text_by_slot_.end()) return nullptr;
    auto vec = by_text_.find(it->second);
    return vec == by_text_.end() ? nullptr : &vec->second;
}

const EmbeddingVector& EmbeddingStore::at(EmbeddingFieldKind kind, const std::string& tool_name,
                                          const std::string& field_name) const {
    const EmbeddingVector* v = find(kind, tool_name, field_name);
    if (!v) {
        throw EmbeddingError("missing embedding for " +
                             std::string(kind == EmbeddingFieldKind::Parameter ? "parameter"
                                                                               : "return value") +
                             " '" + field_name + "' of tool '" + tool_name + "'");
    }
    return *v;
}

const EmbeddingVector* EmbeddingStore::find_text(const std::string& text) const {
    auto it = by_text_.find(text);
    return it == by_text_.end() ? nullptr : &it->second;
}

EmbeddingStore embed_catalog(const ToolCatalog& catalog, EmbeddingProvider& provider,
                             const std::string& cache_path) {
    std::vector<EmbeddingKey> keys;
    for (const auto& tool : catalog.tools) {
        for (const auto& p : tool.parameters) keys.push_back(render_key(p, tool));
        for (const auto& r : tool.returns) keys.push_back(render_key(r, tool));
    }
    CachedEmbedder embedder(provider, cache_path);
    std::vector<std::string> texts;
    texts.reserve(keys.size());
    for (const auto& key : keys) texts.push_back(key.text);
    const auto vectors = embedder.get_batch(texts);

    EmbeddingStore store;
    for (std::size_t i = 0; i < keys.size(); ++i) {
        store.put(keys[i], vectors[i]);
    }
    return store;
}

}  // namespace toolflow

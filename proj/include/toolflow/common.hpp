#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace toolflow {

inline constexpr const char* kPipelineVersion = "0.1.0";

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class CatalogError : public Error {
public:
    using Error::Error;
};

class EmbeddingError : public Error {
public:
    using Error::Error;
};

class GraphError : public Error {
public:
    using Error::Error;
};

// Random walk ran out of unvisited neighbors before reaching the target size.
class WalkExhausted : public GraphError {
public:
    WalkExhausted(std::string_view message, int component_size)
        : GraphError(std::string(message)), component_size(component_size) {}
    int component_size;
};

class BackendError : public Error {
public:
    using Error::Error;
};

// Retryable backend failure (HTTP 429/5xx, connection reset, garbled body).
class TransientBackendError : public BackendError {
public:
    using BackendError::BackendError;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class PipelineError : public Error {
public:
    using Error::Error;
};

class AttemptCapError : public PipelineError {
public:
    using PipelineError::PipelineError;
};

struct RetryPolicy {
    int max_retries = 2;
    int backoff_ms = 50;
    double multiplier = 2.0;
};

std::uint64_t splitmix64(std::uint64_t x);

// seed_i for pipeline stage/attempt i; stable across runs and platforms.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

// Unbiased draw from [0, n) consuming 64-bit words from rng. n must be >= 1.
std::size_t uniform_index(std::mt19937_64& rng, std::size_t n);

std::uint64_t fnv1a64(std::string_view data);

std::string to_hex(std::uint64_t value);

// 16-hex-char content digest used for catalog/config identity checks.
std::string content_digest(std::string_view data);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view content);

// Appends line + '\n' in a single flushed write so readers never see partial lines.
void append_line(const std::string& path, std::string_view line);

// Replaces every "{key}" occurrence with values.at(key); unknown keys are left as-is.
std::string render_prompt(std::string_view tmpl, const std::map<std::string, std::string>& values);

std::int64_t unix_now();

}  // namespace toolflow

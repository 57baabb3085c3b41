#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "toolflow/common.hpp"

namespace toolflow {

using json = nlohmann::json;

class ChatBackend;

enum class ValueType { String, Number, Integer, Boolean, Object, Array };

const char* to_string(ValueType type);
ValueType value_type_from_string(const std::string& name);

// Checks a JSON value against one of the six schema primitives. Coercions
// (numeric strings, float-valued integers) are rejected.
bool value_matches_type(const json& value, ValueType type);

struct ParameterSpec {
    std::string name;
    std::string description;
    ValueType type = ValueType::String;
    bool required = false;
    // Schema keys beyond type/description (items, properties, enum, ...),
    // carried opaquely so nested schemas survive a round trip.
    json extra = json::object();
};

struct ReturnSpec {
    std::string name;
    std::string description;
    ValueType type = ValueType::String;
    json extra = json::object();
};

struct ToolSpec {
    std::string name;
    std::string description;
    std::vector<ParameterSpec> parameters;  // name-sorted after validation
    std::vector<ReturnSpec> returns;        // name-sorted after validation

    const ParameterSpec* find_parameter(const std::string& param_name) const;
    const ReturnSpec* find_return(const std::string& return_name) const;

    json to_json() const;
    // Canonical single-record serialization; the unit used for digests,
    // whole-tool embeddings, and overlap tokenization.
    std::string canonical_text() const;
    static ToolSpec from_json(const json& record);
};

enum class LoadMode { Strict, Lenient };

enum class FlaggedFieldKind { ToolDescription, Parameter, ReturnValue };

// An empty description discovered under lenient load; the enrichment pass
// works through these in order.
struct FlaggedField {
    FlaggedFieldKind kind;
    std::string tool_name;
    std::string field_name;  // empty for ToolDescription
};

struct ToolCatalog {
    std::vector<ToolSpec> tools;  // index in this vector is the graph node id
    std::string source;

    const ToolSpec* find(const std::string& tool_name) const;
    int index_of(const std::string& tool_name) const;  // -1 when absent
    std::vector<FlaggedField> flagged_fields() const;

    json to_json() const;
    std::string canonical_text() const;
    std::string digest() const;
};

// Throws CatalogError on any invariant violation. Normalizes parameter and
// return ordering to name order (the canonical order).
void validate_catalog(ToolCatalog& catalog, LoadMode mode);

ToolCatalog parse_catalog(const json& records, LoadMode mode, const std::string& source);
ToolCatalog load_catalog(const std::string& path, LoadMode mode = LoadMode::Strict);
void save_catalog(const ToolCatalog& catalog, const std::string& path);

struct EnrichOptions {
    int retries = 2;
    std::uint64_t seed = 0;
    std::string model;
    std::string prompt_template;  // empty selects the built-in template
};

// Fills every flagged empty description via the backend, leaving all other
// fields untouched. Result validates in strict mode.
ToolCatalog enrich_catalog(const ToolCatalog& catalog, ChatBackend& backend,
                           const EnrichOptions& options = {});

extern const char* const kEnrichPromptTemplate;

}  // namespace toolflow

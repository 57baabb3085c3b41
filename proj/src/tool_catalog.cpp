#include "toolflow/tool_catalog.hpp"

#include <algorithm>
#include <set>

#include "toolflow/llm_client.hpp"

namespace toolflow {

const char* to_string(ValueType type) {
    switch (type) {
        case ValueType::String: return "string";
        case ValueType::Number: return "number";
        case ValueType::Integer: return "integer";
        case ValueType::Boolean: return "boolean";
        case ValueType::Object: return "object";
        case ValueType::Array: return "array";
    }
    return "string";
}

ValueType value_type_from_string(const std::string& name) {
    if (name == "string") return ValueType::String;
    if (name == "number") return ValueType::Number;
    if (name == "integer") return ValueType::Integer;
    if (name == "boolean") return ValueType::Boolean;
    if (name == "object") return ValueType::Object;
    if (name == "array") return ValueType::Array;
    throw CatalogError("unknown value_type: '" + name + "'");
}

bool value_matches_type(const json& value, ValueType type) {
    switch (type) {
        case ValueType::String: return value.is_string();
        case ValueType::Number: return value.is_number();
        case ValueType::Integer: return value.is_number_integer();
        case ValueType::Boolean: return value.is_boolean();
        case ValueType::Object: return value.is_object();
        case ValueType::Array: return value.is_array();
    }
    return false;
}

namespace {

json property_to_json(const std::string& description, ValueType type, const json& extra) {
    json prop = extra.is_object() ? extra : json::object();
    prop["type"] = to_string(type);
    prop["description"] = description;
    return prop;
}

template <typename Spec>
Spec property_from_json(const std::string& name, const json& prop, const std::string& tool_name) {
    if (!prop.is_object()) {
        throw CatalogError("tool '" + tool_name + "': property '" + name + "' is not an object");
    }
    Spec spec;
    spec.name = name;
    if (!prop.contains("type") || !prop.at("type").is_string()) {
        throw CatalogError("tool '" + tool_name + "': property '" + name + "' has no type");
    }
    spec.type = value_type_from_string(prop.at("type").get<std::string>());
    if (prop.contains("description")) {
        if (!prop.at("description").is_string()) {
            throw CatalogError("tool '" + tool_name + "': property '" + name +
                               "' description is not a string");
        }
        spec.description = prop.at("description").get<std::string>();
    }
    spec.extra = json::object();
    for (const auto& [key, value] : prop.items()) {
        if (key != "type" && key != "description") spec.extra[key] = value;
    }
    return spec;
}

}  // namespace

const ParameterSpec* ToolSpec::find_parameter(const std::string& param_name) const {
    for (const auto& p : parameters) {
        if (p.name == param_name) return &p;
    }
    return nullptr;
}

const ReturnSpec* ToolSpec::find_return(const std::string& return_name) const {
    for (const auto& r : returns) {
        if (r.name == return_name) return &r;
    }
    return nullptr;
}

json ToolSpec::to_json() const {
    json properties = json::object();
    json required = json::array();
    for (const auto& p : parameters) {
        properties[p.name] = property_to_json(p.description, p.type, p.extra);
        if (p.required) required.push_back(p.name);
    }
    json results = json::object();
    for (const auto& r : returns) {
        results[r.name] = property_to_json(r.description, r.type, r.extra);
    }
    return json{
        {"type", "function"},
        {"function",
         {{"name", name},
          {"description", description},
          {"parameters", {{"type", "object"}, {"properties", properties}, {"required", required}}},
          {"results", {{"type", "object"}, {"properties", results}}}}},
    };
}

std::string ToolSpec::canonical_text() const {
    return to_json().dump();
}

ToolSpec ToolSpec::from_json(const json& record) {
    if (!record.is_object() || !record.contains("function") || !record.at("function").is_object()) {
        throw CatalogError("tool record has no 'function' object");
    }
    if (record.contains("type") && record.at("type") != "function") {
        throw CatalogError("tool record type is not 'function'");
    }
    const json& fn = record.at("function");
    ToolSpec tool;
    if (!fn.contains("name") || !fn.at("name").is_string()) {
        throw CatalogError("tool record has no name");
    }
    tool.name = fn.at("name").get<std::string>();
    if (fn.contains("description")) {
        if (!fn.at("description").is_string()) {
            throw CatalogError("tool '" + tool.name + "': description is not a string");
        }
        tool.description = fn.at("description").get<std::string>();
    }

    if (fn.contains("parameters")) {
        const json& params = fn.at("parameters");
        if (!params.is_object()) {
            throw CatalogError("tool '" + tool.name + "': parameters is not an object");
        }
        std::set<std::string> required_names;
        if (params.contains("required")) {
            if (!params.at("required").is_array()) {
                throw CatalogError("tool '" + tool.name + "': required is not an array");
            }
            for (const auto& entry : params.at("required")) {
                if (!entry.is_string()) {
                    throw CatalogError("tool '" + tool.name + "': required entry is not a string");
                }
                required_names.insert(entry.get<std::string>());
            }
        }
        if (params.contains("properties")) {
            for (const auto& [pname, prop] : params.at("properties").items()) {
                auto spec = property_from_json<ParameterSpec>(pname, prop, tool.name);
                spec.required = required_names.count(pname) > 0;
                required_names.erase(pname);
                tool.parameters.push_back(std::move(spec));
            }
        }
        if (!required_names.empty()) {
            throw CatalogError("tool '" + tool.name + "': required names '" +
                               *required_names.begin() + "' not present in properties");
        }
    }

    if (fn.contains("results")) {
        const json& results = fn.at("results");
        if (!results.is_object()) {
            throw CatalogError("tool '" + tool.name + "': results is not an object");
        }
        if (results.contains("properties")) {
            for (const auto& [rname, prop] : results.at("properties").items()) {
                tool.returns.push_back(property_from_json<ReturnSpec>(rname, prop, tool.name));
            }
        }
    }
    return tool;
}

const ToolSpec* ToolCatalog::find(const std::string& tool_name) const {
    for (const auto& t : tools) {
        if (t.name == tool_name) return &t;
    }
    return nullptr;
}

int ToolCatalog::index_of(const std::string& tool_name) const {
    for (std::size_t i = 0; i < tools.size(); ++i) {
        if (tools[i].name == tool_name) return static_cast<int>(i);
    }
    return -1;
}

std::vector<FlaggedField> ToolCatalog::flagged_fields() const {
    std::vector<FlaggedField> flagged;
    for (const auto& tool : tools) {
        if (tool.description.empty()) {
            flagged.push_back({FlaggedFieldKind::ToolDescription, tool.name, ""});
        }
        for (const auto& p : tool.parameters) {
            if (p.description.empty()) {
                flagged.push_back({FlaggedFieldKind::Parameter, tool.name, p.name});
            }
        }
        for (const auto& r : tool.returns) {
            if (r.description.empty()) {
                flagged.push_back({FlaggedFieldKind::ReturnValue, tool.name, r.name});
            }
        }
    }
    return flagged;
}

json ToolCatalog::to_json() const {
    json records = json::array();
    for (const auto& tool : tools) records.push_back(tool.to_json());
    return records;
}

std::string ToolCatalog::canonical_text() const {
    return to_json().dump();
}

std::string ToolCatalog::digest() const {
    return content_digest(canonical_text());
}

void validate_catalog(ToolCatalog& catalog, LoadMode mode) {
    if (catalog.tools.empty()) throw CatalogError("empty catalog");
    std::set<std::string> names;
    for (auto& tool : catalog.tools) {
        if (tool.name.empty()) throw CatalogError("tool with empty name");
        if (!names.insert(tool.name).second) {
            throw CatalogError("duplicate tool name: '" + tool.name + "'");
        }
        std::set<std::string> param_names;
        for (const auto& p : tool.parameters) {
            if (p.name.empty()) throw CatalogError("tool '" + tool.name + "': parameter with empty name");
            if (!param_names.insert(p.name).second) {
                throw CatalogError("tool '" + tool.name + "': duplicate parameter '" + p.name + "'");
            }
        }
        std::set<std::string> return_names;
        for (const auto& r : tool.returns) {
            if (r.name.empty()) throw CatalogError("tool '" + tool.name + "': return value with empty name");
            if (!return_names.insert(r.name).second) {
                throw CatalogError("tool '" + tool.name + "': duplicate return value '" + r.name + "'");
            }
        }
        if (mode == LoadMode::Strict) {
            if (tool.description.empty()) {
                throw CatalogError("tool '" + tool.name + "': missing description (strict mode)");
            }
            for (const auto& p : tool.parameters) {
                if (p.description.empty()) {
                    throw CatalogError("tool '" + tool.name + "': parameter '" + p.name +
                                       "' missing description (strict mode)");
                }
            }
            for (const auto& r : tool.returns) {
                if (r.description.empty()) {
                    throw CatalogError("tool '" + tool.name + "': return value '" + r.name +
                                       "' missing description (strict mode)");
                }
            }
        }
        // Canonical field order; keeps serialization, embedding keys, and
        // enrichment passes aligned no matter how the catalog was built.
        std::sort(tool.parameters.begin(), tool.parameters.end(),
                  [](const ParameterSpec& a, const ParameterSpec& b) { return a.name < b.name; });
        std::sort(tool.returns.begin(), tool.returns.end(),
                  [](const ReturnSpec& a, const ReturnSpec& b) { return a.name < b.name; });
    }
}

ToolCatalog parse_catalog(const json& records, LoadMode mode, const std::string& source) {
    if (!records.is_array()) throw CatalogError("catalog file must hold a JSON array of tool records");
    ToolCatalog catalog;
    catalog.source = source;
    for (const auto& record : records) {
        catalog.tools.push_back(ToolSpec::from_json(record));
    }
    validate_catalog(catalog, mode);
    return catalog;
}

ToolCatalog load_catalog(const std::string& path, LoadMode mode) {
    const std::string text = read_text_file(path);
    json records;
    try {
        records = json::parse(text);
    } catch (const json::exception& e) {
        throw CatalogError("malformed JSON in " + path + ": " + e.what());
    }
    return parse_catalog(records, mode, path);
}

void save_catalog(const ToolCatalog& catalog, const std::string& path) {
    write_text_file(path, catalog.canonical_text() + "\n");
}

const char* const kEnrichPromptTemplate =
    "You write missing documentation for function-calling tools.\n"
    "TOOL: {tool}\n"
    "FIELD: {field}\n"
    "Write one concise sentence describing this field to a developer. "
    "Respond with a JSON object of the form {\"description\": \"<text>\"} and nothing else.\n";

namespace {

std::string field_label(const FlaggedField& field) {
    switch (field.kind) {
        case FlaggedFieldKind::ToolDescription: return "tool description";
        case FlaggedFieldKind::Parameter: return "parameter '" + field.field_name + "'";
        case FlaggedFieldKind::ReturnValue: return "return value '" + field.field_name + "'";
    }
    return field.field_name;
}

std::string request_description(ChatBackend& backend, const ToolSpec& tool,
                                const FlaggedField& field, const EnrichOptions& options,
                                std::uint64_t call_seed) {
    const std::string tmpl =
        options.prompt_template.empty() ? kEnrichPromptTemplate : options.prompt_template;
    const std::string prompt = render_prompt(
        tmpl, {{"tool", tool.canonical_text()}, {"field", field_label(field)}});
    GenerationParams params;
    params.temperature = 0.0;
    params.seed = call_seed;
    params.model = options.model;
    std::string last_error;
    for (int attempt = 0; attempt <= options.retries; ++attempt) {
        const ChatMessage reply = backend.complete(
            {ChatMessage{Role::User, prompt}}, params, {});
        try {
            const json body = json::parse(reply.content);
            if (!body.is_object() || !body.contains("description") ||
                !body.at("description").is_string()) {
                throw CatalogError("response lacks a 'description' string");
            }
            const std::string text = body.at("description").get<std::string>();
            if (text.empty()) throw CatalogError("empty description");
            return text;
        } catch (const json::exception& e) {
            last_error = e.what();
        } catch (const CatalogError& e) {
            last_error = e.what();
        }
    }
    throw CatalogError("enrichment failed for tool '" + tool.name + "' " + field_label(field) +
                       ": " + last_error);
}

}  // namespace

ToolCatalog enrich_catalog(const ToolCatalog& catalog, ChatBackend& backend,
                           const EnrichOptions& options) {
    ToolCatalog enriched = catalog;
    const auto flagged = enriched.flagged_fields();
    std::uint64_t field_index = 0;
    for (const auto& field : flagged) {
        const int tool_idx = enriched.index_of(field.tool_name);
        ToolSpec& tool = enriched.tools[static_cast<std::size_t>(tool_idx)];
        const std::string text = request_description(
            backend, tool, field, options, derive_seed(options.seed, field_index++));
        switch (field.kind) {
            case FlaggedFieldKind::ToolDescription:
                tool.description = text;
                break;
            case FlaggedFieldKind::Parameter:
                for (auto& p : tool.parameters) {
                    if (p.name == field.field_name) p.description = text;
                }
                break;
            case FlaggedFieldKind::ReturnValue:
                for (auto& r : tool.returns) {
                    if (r.name == field.field_name) r.description = text;
                }
                break;
        }
    }
    validate_catalog(enriched, LoadMode::Strict);
    return enriched;
}

}  // namespace toolflow

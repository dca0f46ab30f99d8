#pragma once

#include <nlohmann/json.hpp>

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

// Core domain types: components as abstract objects described by their I/O
// ports and metadata, each carrying one or more level-tagged realizations.

namespace mardiflow {

// Levels are ordered: a lower level is a more abstract description.
enum class AbstractionLevel : int {
    MathematicalModel = 1,
    SimulationModel = 2,
    SurrogateModel = 3,
};

enum class RealizationKind {
    Description,       // human-readable mathematical description (markdown)
    SolverExecutable,  // executable numerical model
    DataTable,         // lookup table on disk
    UrlSource,         // remote data source
};

inline const char* to_string(AbstractionLevel level) {
    switch (level) {
        case AbstractionLevel::MathematicalModel: return "mathematical-model";
        case AbstractionLevel::SimulationModel: return "simulation-model";
        case AbstractionLevel::SurrogateModel: return "surrogate-model";
    }
    return "?";
}

inline const char* to_string(RealizationKind kind) {
    switch (kind) {
        case RealizationKind::Description: return "description";
        case RealizationKind::SolverExecutable: return "solver";
        case RealizationKind::DataTable: return "table";
        case RealizationKind::UrlSource: return "url";
    }
    return "?";
}

// Scalar parameter value as it appears in the inputs object.
using Value = std::variant<double, std::string, bool>;

// Flat name -> value map read from the JSON inputs file.
struct InputsObject {
    std::map<std::string, Value> entries;

    bool operator==(const InputsObject&) const = default;
};

struct PortSpec {
    std::string name;
    std::string semantic_type;
    std::string unit;  // empty = dimensionless
    std::optional<std::vector<int>> shape;

    bool operator==(const PortSpec&) const = default;
};

// Closed registry of port semantic types; matching is decidable against it.
inline const std::set<std::string>& semantic_type_registry() {
    static const std::set<std::string> registry = {
        "scalar", "scalar-field-2d", "time-series", "table", "bytes",
    };
    return registry;
}

// True iff an output port can feed an input port: same semantic type, same
// unit, and shapes either both absent or elementwise equal. Names are not
// compared, so realizations with differently named ports stay interchangeable.
inline bool ports_compatible(const PortSpec& out, const PortSpec& in) {
    return out.semantic_type == in.semantic_type && out.unit == in.unit && out.shape == in.shape;
}

struct Realization {
    AbstractionLevel level = AbstractionLevel::SimulationModel;
    RealizationKind kind = RealizationKind::SolverExecutable;
    std::string locator;  // path, URL, or builtin:<name>
    std::optional<std::string> checksum;

    bool operator==(const Realization&) const = default;
};

struct ComponentManifest {
    std::string id;
    std::string version;
    std::string title;
    std::vector<PortSpec> inputs;
    std::vector<PortSpec> outputs;
    std::vector<Realization> realizations;
    std::optional<std::string> description_ref;  // markdown file path

    bool operator==(const ComponentManifest&) const = default;
};

struct Finding {
    std::string path;  // field path, e.g. "inputs[1].name"
    std::string message;

    bool operator==(const Finding&) const = default;
};

struct ValidationReport {
    std::vector<Finding> findings;

    bool ok() const { return findings.empty(); }
};

namespace detail {

inline AbstractionLevel required_level(RealizationKind kind) {
    switch (kind) {
        case RealizationKind::Description: return AbstractionLevel::MathematicalModel;
        case RealizationKind::SolverExecutable: return AbstractionLevel::SimulationModel;
        case RealizationKind::DataTable:
        case RealizationKind::UrlSource: return AbstractionLevel::SurrogateModel;
    }
    return AbstractionLevel::MathematicalModel;
}

inline void validate_ports(const std::vector<PortSpec>& ports, const std::string& direction,
                           ValidationReport& report) {
    std::set<std::string> seen;
    for (std::size_t i = 0; i < ports.size(); ++i) {
        const auto& p = ports[i];
        const std::string path = direction + "[" + std::to_string(i) + "]";
        if (p.name.empty()) report.findings.push_back({path + ".name", "port name is empty"});
        if (!seen.insert(p.name).second)
            report.findings.push_back({path + ".name", "duplicate port \"" + p.name + "\""});
        if (!semantic_type_registry().contains(p.semantic_type))
            report.findings.push_back(
                {path + ".type", "unknown semantic type \"" + p.semantic_type + "\""});
        if (p.shape) {
            for (int extent : *p.shape) {
                if (extent <= 0) {
                    report.findings.push_back({path + ".shape", "non-positive shape extent"});
                    break;
                }
            }
        }
    }
}

}  // namespace detail

// Checks every manifest invariant; violations become findings, never throws.
inline ValidationReport validate_manifest(const ComponentManifest& m) {
    ValidationReport report;

    if (m.id.empty()) report.findings.push_back({"id", "component id is empty"});
    if (m.version.empty()) report.findings.push_back({"version", "version is empty"});

    detail::validate_ports(m.inputs, "inputs", report);
    detail::validate_ports(m.outputs, "outputs", report);

    if (m.realizations.empty())
        report.findings.push_back({"realizations", "at least one realization is required"});

    std::set<std::tuple<int, int, std::string>> seen;
    for (std::size_t i = 0; i < m.realizations.size(); ++i) {
        const auto& r = m.realizations[i];
        const std::string path = "realizations[" + std::to_string(i) + "]";
        if (r.level != detail::required_level(r.kind))
            report.findings.push_back(
                {path, std::string("realization level/kind mismatch: kind \"") +
                           to_string(r.kind) + "\" requires level " +
                           std::to_string(static_cast<int>(detail::required_level(r.kind)))});
        if (r.locator.empty()) report.findings.push_back({path + ".locator", "locator is empty"});
        if (!seen.insert({static_cast<int>(r.level), static_cast<int>(r.kind), r.locator}).second)
            report.findings.push_back({path, "duplicate realization (level, kind, locator)"});
    }
    return report;
}

// One step of a workflow chain: which component, and (optionally) at which
// abstraction level the caller wants it realized.
struct StageRef {
    std::string component_id;
    std::optional<AbstractionLevel> requested_level;

    bool operator==(const StageRef&) const = default;
};

// Directed data edge between two stages, by port name.
struct PortBinding {
    std::size_t producer_stage = 0;
    std::string output_port;
    std::size_t consumer_stage = 0;
    std::string input_port;

    bool operator==(const PortBinding&) const = default;
};

struct WorkflowDefinition {
    std::string title;
    std::vector<StageRef> stages;
    std::vector<PortBinding> bindings;
};

// ---------------------------------------------------------------------------
// Manifest on-disk form (component.json)

struct ManifestFormatError : std::runtime_error {
    explicit ManifestFormatError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline PortSpec port_from_json(const nlohmann::json& j, const std::string& where) {
    if (!j.is_object()) throw ManifestFormatError(where + ": port must be an object");
    PortSpec p;
    p.name = j.value("name", "");
    p.semantic_type = j.value("type", "");
    p.unit = j.value("unit", "");
    if (j.contains("shape")) {
        if (!j["shape"].is_array()) throw ManifestFormatError(where + ": shape must be an array");
        p.shape = std::vector<int>{};
        for (const auto& e : j["shape"]) {
            if (!e.is_number_integer()) throw ManifestFormatError(where + ": shape entries must be integers");
            p.shape->push_back(e.get<int>());
        }
    }
    return p;
}

inline RealizationKind kind_from_string(const std::string& s, const std::string& where) {
    if (s == "description") return RealizationKind::Description;
    if (s == "solver") return RealizationKind::SolverExecutable;
    if (s == "table") return RealizationKind::DataTable;
    if (s == "url") return RealizationKind::UrlSource;
    throw ManifestFormatError(where + ": unknown realization kind \"" + s + "\"");
}

}  // namespace detail

inline ComponentManifest manifest_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ManifestFormatError("manifest: top-level value must be an object");
    ComponentManifest m;
    m.id = j.value("id", "");
    m.version = j.value("version", "");
    m.title = j.value("title", "");
    if (j.contains("description")) m.description_ref = j["description"].get<std::string>();

    auto read_ports = [](const nlohmann::json& doc, const char* key) {
        std::vector<PortSpec> ports;
        if (!doc.contains(key)) return ports;
        if (!doc[key].is_array()) throw ManifestFormatError(std::string("manifest: ") + key + " must be an array");
        std::size_t i = 0;
        for (const auto& e : doc[key])
            ports.push_back(detail::port_from_json(e, std::string(key) + "[" + std::to_string(i++) + "]"));
        return ports;
    };
    m.inputs = read_ports(j, "inputs");
    m.outputs = read_ports(j, "outputs");

    if (j.contains("realizations")) {
        if (!j["realizations"].is_array())
            throw ManifestFormatError("manifest: realizations must be an array");
        std::size_t i = 0;
        for (const auto& e : j["realizations"]) {
            const std::string where = "realizations[" + std::to_string(i++) + "]";
            if (!e.is_object()) throw ManifestFormatError(where + ": must be an object");
            Realization r;
            int level = e.value("level", 0);
            if (level < 1 || level > 3) throw ManifestFormatError(where + ": level must be 1, 2 or 3");
            r.level = static_cast<AbstractionLevel>(level);
            r.kind = detail::kind_from_string(e.value("kind", ""), where);
            r.locator = e.value("locator", "");
            if (e.contains("checksum")) r.checksum = e["checksum"].get<std::string>();
            m.realizations.push_back(std::move(r));
        }
    }
    return m;
}

inline nlohmann::json manifest_to_json(const ComponentManifest& m) {
    nlohmann::json j;
    j["id"] = m.id;
    j["version"] = m.version;
    j["title"] = m.title;
    auto ports_to_json = [](const std::vector<PortSpec>& ports) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& p : ports) {
            nlohmann::json e{{"name", p.name}, {"type", p.semantic_type}, {"unit", p.unit}};
            if (p.shape) e["shape"] = *p.shape;
            arr.push_back(std::move(e));
        }
        return arr;
    };
    j["inputs"] = ports_to_json(m.inputs);
    j["outputs"] = ports_to_json(m.outputs);
    nlohmann::json reals = nlohmann::json::array();
    for (const auto& r : m.realizations) {
        nlohmann::json e{{"level", static_cast<int>(r.level)},
                         {"kind", to_string(r.kind)},
                         {"locator", r.locator}};
        if (r.checksum) e["checksum"] = *r.checksum;
        reals.push_back(std::move(e));
    }
    j["realizations"] = std::move(reals);
    if (m.description_ref) j["description"] = *m.description_ref;
    return j;
}

inline ComponentManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ManifestFormatError("cannot open manifest: " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ManifestFormatError("manifest " + path.string() + ": " + e.what());
    }
    return manifest_from_json(j);
}

}  // namespace mardiflow

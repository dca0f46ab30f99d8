#pragma once

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "mardiflow/config.hpp"
#include "mardiflow/digest.hpp"
#include "mardiflow/plan.hpp"
#include "mardiflow/version.hpp"

// Run provenance: what ran, with which realizations and parameters, and the
// content digest of everything it produced.

namespace mardiflow {

enum class RunStatus { Completed, Failed };

inline const char* to_string(RunStatus s) {
    return s == RunStatus::Completed ? "Completed" : "Failed";
}

inline const char* to_string(StageStatus s) { return s == StageStatus::Ok ? "Ok" : "Failed"; }

struct StageRecord {
    std::string component_id;
    std::string version;
    int level_used = 0;
    std::string realization_kind;
    std::string locator;
    std::map<std::string, Value> parameters;
    std::map<std::string, Digest> artifacts;           // path -> digest
    std::map<std::string, std::string> port_artifacts; // port -> path
    std::vector<PortSpec> input_ports;
    std::vector<PortSpec> output_ports;
    std::string status;
    std::string message;
};

struct RunRecord {
    std::string run_id;
    std::string tool_version;
    std::string workflow_title;
    std::string started;   // ISO-8601 UTC
    std::string finished;  // ISO-8601 UTC
    Digest input_digest;
    Digest config_digest;
    std::vector<StageRecord> stages;
    RunStatus status = RunStatus::Completed;
};

// Run identity and timing supplied by the caller of record_run.
struct RunMeta {
    std::string run_id;
    std::string started;
    std::string finished;
    Digest config_digest = hash_artifact("");
};

inline std::string utc_timestamp_now() {
    std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline std::string make_run_id() {
    std::random_device rd;
    std::uint64_t hi = (static_cast<std::uint64_t>(rd()) << 32) | rd();
    std::uint64_t lo = (static_cast<std::uint64_t>(rd()) << 32) | rd();
    // RFC 4122 version 4, variant 1.
    hi = (hi & 0xffffffffffff0fffULL) | 0x0000000000004000ULL;
    lo = (lo & 0x3fffffffffffffffULL) | 0x8000000000000000ULL;
    char buf[37];
    std::snprintf(buf, sizeof(buf), "%08x-%04x-%04x-%04x-%012llx",
                  static_cast<unsigned>(hi >> 32), static_cast<unsigned>((hi >> 16) & 0xffff),
                  static_cast<unsigned>(hi & 0xffff), static_cast<unsigned>(lo >> 48),
                  static_cast<unsigned long long>(lo & 0xffffffffffffULL));
    return buf;
}

inline RunRecord record_run(const WorkflowPlan& plan, const std::vector<StageResult>& results,
                            const RunMeta& meta) {
    RunRecord rec;
    rec.run_id = meta.run_id;
    rec.tool_version = kToolVersion;
    rec.workflow_title = plan.title;
    rec.started = meta.started;
    rec.finished = meta.finished;
    rec.input_digest = hash_artifact(canonical_inputs_bytes(plan.inputs));
    rec.config_digest = meta.config_digest;

    bool all_ok = results.size() == plan.stages.size();
    for (const auto& result : results) {
        const PlannedStage& stage = plan.stages.at(result.stage_index);
        StageRecord sr;
        sr.component_id = stage.manifest.id;
        sr.version = stage.manifest.version;
        sr.level_used = static_cast<int>(stage.realization.level);
        sr.realization_kind = to_string(stage.realization.kind);
        sr.locator = stage.realization.locator;
        sr.parameters = result.parameters;
        sr.artifacts = result.artifacts;
        sr.port_artifacts = result.outputs;
        sr.input_ports = stage.manifest.inputs;
        sr.output_ports = stage.manifest.outputs;
        sr.status = to_string(result.status);
        sr.message = result.message;
        if (result.status != StageStatus::Ok) all_ok = false;
        rec.stages.push_back(std::move(sr));
    }
    rec.status = all_ok ? RunStatus::Completed : RunStatus::Failed;
    return rec;
}

namespace detail {

inline nlohmann::json value_to_json(const Value& v) {
    nlohmann::json j;
    std::visit([&](const auto& x) { j = x; }, v);
    return j;
}

inline nlohmann::json ports_to_json(const std::vector<PortSpec>& ports) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : ports) {
        nlohmann::json e{{"name", p.name}, {"type", p.semantic_type}, {"unit", p.unit}};
        if (p.shape) e["shape"] = *p.shape;
        arr.push_back(std::move(e));
    }
    return arr;
}

inline nlohmann::json stage_to_json(const StageRecord& s) {
    nlohmann::json j;
    j["component_id"] = s.component_id;
    j["version"] = s.version;
    j["level_used"] = s.level_used;
    j["realization_kind"] = s.realization_kind;
    j["locator"] = s.locator;
    nlohmann::json params = nlohmann::json::object();
    for (const auto& [k, v] : s.parameters) params[k] = value_to_json(v);
    j["parameters"] = std::move(params);
    nlohmann::json arts = nlohmann::json::object();
    for (const auto& [path, digest] : s.artifacts) arts[path] = digest.hex;
    j["artifacts"] = std::move(arts);
    j["port_artifacts"] = s.port_artifacts;
    j["input_ports"] = ports_to_json(s.input_ports);
    j["output_ports"] = ports_to_json(s.output_ports);
    j["status"] = s.status;
    j["message"] = s.message;
    return j;
}

}  // namespace detail

// nlohmann::json keeps object keys sorted, so the byte form is stable: the
// same record always serializes to the same bytes.
inline std::string serialize_run_record(const RunRecord& rec) {
    nlohmann::json j;
    j["run_id"] = rec.run_id;
    j["tool_version"] = rec.tool_version;
    j["workflow_title"] = rec.workflow_title;
    j["started"] = rec.started;
    j["finished"] = rec.finished;
    j["input_digest"] = rec.input_digest.hex;
    j["config_digest"] = rec.config_digest.hex;
    nlohmann::json stages = nlohmann::json::array();
    for (const auto& s : rec.stages) stages.push_back(detail::stage_to_json(s));
    j["stages"] = std::move(stages);
    j["status"] = to_string(rec.status);
    return j.dump(2) + "\n";
}

// FAIR metadata export: persistent identifiers, access paths, interoperability
// fields (port types/units) and reuse fields (parameters, versions, digests).
inline std::string export_fair_metadata(const RunRecord& rec) {
    nlohmann::json j;
    j["identifiers"] = {
        {"run_id", rec.run_id},
        {"workflow_title", rec.workflow_title},
    };
    nlohmann::json comps = nlohmann::json::array();
    for (const auto& s : rec.stages)
        comps.push_back({{"id", s.component_id}, {"version", s.version}});
    j["identifiers"]["components"] = std::move(comps);

    nlohmann::json artifacts = nlohmann::json::object();
    for (const auto& s : rec.stages)
        for (const auto& [path, digest] : s.artifacts) artifacts[path] = digest.hex;
    j["access"] = {{"artifacts", std::move(artifacts)}, {"record", "run_record.json"}};

    nlohmann::json stages = nlohmann::json::array();
    for (const auto& s : rec.stages) {
        nlohmann::json e;
        e["component_id"] = s.component_id;
        e["version"] = s.version;
        e["level_used"] = s.level_used;
        e["realization_kind"] = s.realization_kind;
        e["locator"] = s.locator;
        e["input_ports"] = detail::ports_to_json(s.input_ports);
        e["output_ports"] = detail::ports_to_json(s.output_ports);
        nlohmann::json params = nlohmann::json::object();
        for (const auto& [k, v] : s.parameters) params[k] = detail::value_to_json(v);
        e["parameters"] = std::move(params);
        e["port_artifacts"] = s.port_artifacts;
        e["status"] = s.status;
        stages.push_back(std::move(e));
    }
    j["stages"] = std::move(stages);

    j["reuse"] = {
        {"tool_version", rec.tool_version},
        {"input_digest", rec.input_digest.hex},
        {"config_digest", rec.config_digest.hex},
        {"started", rec.started},
        {"finished", rec.finished},
    };
    j["status"] = to_string(rec.status);
    return j.dump(2) + "\n";
}

// Appends a one-line index entry to the (user-defined) registry file.
inline void append_registry_entry(const std::filesystem::path& registry_path,
                                  const RunRecord& rec) {
    nlohmann::json j;
    j["run_id"] = rec.run_id;
    j["workflow_title"] = rec.workflow_title;
    j["finished"] = rec.finished;
    j["status"] = to_string(rec.status);
    j["record_digest"] = hash_artifact(serialize_run_record(rec)).hex;
    std::ofstream out(registry_path, std::ios::app);
    if (!out) throw std::runtime_error("cannot open registry: " + registry_path.string());
    out << j.dump() << "\n";
}

}  // namespace mardiflow

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mardiflow/data.hpp"
#include "mardiflow/digest.hpp"
#include "mardiflow/model.hpp"
#include "mardiflow/plan.hpp"
#include "mardiflow/provenance.hpp"

// Workflow engine: validate a definition against the component registry,
// pick a realization per stage (with redundancy fallback across levels), and
// run the chain sequentially with full provenance capture.

namespace mardiflow {

struct ComposeError : std::runtime_error {
    enum class Kind {
        UnknownComponent,
        UnknownStage,
        UnknownPort,
        DuplicateBinding,
        IncompatiblePorts,
        CyclicBindings,
        UnboundRequiredInput,
    };
    Kind kind;
    ComposeError(Kind kind_, const std::string& what) : std::runtime_error(what), kind(kind_) {}
};

struct NoExecutableRealization : std::runtime_error {
    explicit NoExecutableRealization(const std::string& component_id)
        : std::runtime_error("component \"" + component_id +
                             "\" has no executable realization at the requested levels") {}
};

struct IoFailure : std::runtime_error {
    explicit IoFailure(const std::string& what) : std::runtime_error(what) {}
};

using LevelPreference = std::vector<AbstractionLevel>;

// Descriptions only participate in documentation; execution prefers the
// simulation model and falls back to the data surrogate.
inline const LevelPreference& default_level_preference() {
    static const LevelPreference pref{AbstractionLevel::SimulationModel,
                                      AbstractionLevel::SurrogateModel};
    return pref;
}

// Picks the realization at `requested` if the manifest has one; otherwise the
// first available level in `preference`. Description realizations are not
// executable and are returned only when explicitly requested.
inline const Realization& resolve_realization(
    const ComponentManifest& manifest, std::optional<AbstractionLevel> requested,
    const LevelPreference& preference = default_level_preference()) {
    auto find_level = [&](AbstractionLevel level) -> const Realization* {
        for (const auto& r : manifest.realizations)
            if (r.level == level) return &r;
        return nullptr;
    };

    if (requested) {
        if (const Realization* r = find_level(*requested)) return *r;
    }
    for (AbstractionLevel level : preference) {
        if (level == AbstractionLevel::MathematicalModel) continue;
        if (const Realization* r = find_level(level)) return *r;
    }
    throw NoExecutableRealization(manifest.id);
}

using ComponentRegistry = std::map<std::string, ComponentManifest>;

// Builds an executable plan: stage order preserved, every binding checked
// for port compatibility, binding graph required to be acyclic, and every
// input port either bound to an upstream output or (for scalars) named in
// the inputs object.
inline WorkflowPlan compose(const WorkflowDefinition& def, const ComponentRegistry& registry,
                            InputsObject inputs,
                            const LevelPreference& preference = default_level_preference()) {
    WorkflowPlan plan;
    plan.title = def.title;

    for (const auto& stage : def.stages) {
        auto it = registry.find(stage.component_id);
        if (it == registry.end())
            throw ComposeError(ComposeError::Kind::UnknownComponent,
                               "unknown component \"" + stage.component_id + "\"");
        const Realization& chosen =
            resolve_realization(it->second, stage.requested_level, preference);
        plan.stages.push_back({it->second, chosen});
    }

    auto find_port = [](const std::vector<PortSpec>& ports,
                        const std::string& name) -> const PortSpec* {
        for (const auto& p : ports)
            if (p.name == name) return &p;
        return nullptr;
    };

    std::set<std::pair<std::size_t, std::string>> bound_inputs;
    for (const auto& b : def.bindings) {
        if (b.producer_stage >= plan.stages.size() || b.consumer_stage >= plan.stages.size())
            throw ComposeError(ComposeError::Kind::UnknownStage,
                               "binding references a stage outside the workflow");
        const auto& producer = plan.stages[b.producer_stage].manifest;
        const auto& consumer = plan.stages[b.consumer_stage].manifest;
        const PortSpec* out = find_port(producer.outputs, b.output_port);
        const PortSpec* in = find_port(consumer.inputs, b.input_port);
        if (!out)
            throw ComposeError(ComposeError::Kind::UnknownPort,
                               "component \"" + producer.id + "\" has no output port \"" +
                                   b.output_port + "\"");
        if (!in)
            throw ComposeError(ComposeError::Kind::UnknownPort,
                               "component \"" + consumer.id + "\" has no input port \"" +
                                   b.input_port + "\"");
        if (!bound_inputs.insert({b.consumer_stage, b.input_port}).second)
            throw ComposeError(ComposeError::Kind::DuplicateBinding,
                               "input port \"" + b.input_port + "\" of stage " +
                                   std::to_string(b.consumer_stage) + " is bound twice");
        if (!ports_compatible(*out, *in))
            throw ComposeError(ComposeError::Kind::IncompatiblePorts,
                               "binding " + producer.id + "." + b.output_port + " -> " +
                                   consumer.id + "." + b.input_port +
                                   ": semantic type, unit or shape mismatch");
        plan.edges.push_back(b);
    }

    // Kahn's algorithm over the stage graph.
    std::vector<int> indegree(plan.stages.size(), 0);
    std::vector<std::vector<std::size_t>> children(plan.stages.size());
    for (const auto& b : plan.edges) {
        if (b.producer_stage == b.consumer_stage)
            throw ComposeError(ComposeError::Kind::CyclicBindings,
                               "stage " + std::to_string(b.producer_stage) + " feeds itself");
        children[b.producer_stage].push_back(b.consumer_stage);
        ++indegree[b.consumer_stage];
    }
    std::vector<std::size_t> ready;
    for (std::size_t i = 0; i < indegree.size(); ++i)
        if (indegree[i] == 0) ready.push_back(i);
    std::size_t visited = 0;
    while (!ready.empty()) {
        std::size_t cur = ready.back();
        ready.pop_back();
        ++visited;
        for (std::size_t child : children[cur])
            if (--indegree[child] == 0) ready.push_back(child);
    }
    if (visited != plan.stages.size())
        throw ComposeError(ComposeError::Kind::CyclicBindings, "binding graph contains a cycle");

    for (std::size_t k = 0; k < plan.stages.size(); ++k) {
        for (const auto& port : plan.stages[k].manifest.inputs) {
            if (bound_inputs.contains({k, port.name})) continue;
            if (port.semantic_type == "scalar" && inputs.entries.contains(port.name)) continue;
            throw ComposeError(ComposeError::Kind::UnboundRequiredInput,
                               "input port \"" + port.name + "\" of stage " + std::to_string(k) +
                                   " (" + plan.stages[k].manifest.id +
                                   ") is neither bound nor present in the inputs object");
        }
    }

    plan.inputs = std::move(inputs);
    return plan;
}

// ---------------------------------------------------------------------------
// Execution

// Everything a component implementation gets to see when it runs.
struct StageContext {
    const ComponentManifest* manifest = nullptr;
    const Realization* realization = nullptr;
    std::size_t stage_index = 0;
    std::map<std::string, Value> inputs;  // scalars plus upstream artifact paths
    std::filesystem::path out_dir;

    std::string artifact_rel(const std::string& port, const std::string& ext) const {
        return "artifacts/stage" + std::to_string(stage_index) + "_" + port + ext;
    }
    std::filesystem::path artifact_abs(const std::string& rel) const { return out_dir / rel; }
    std::string file_prefix() const { return "stage" + std::to_string(stage_index) + "_"; }

    double scalar(const std::string& name) const {
        auto it = inputs.find(name);
        if (it == inputs.end()) throw std::runtime_error("missing input \"" + name + "\"");
        if (const double* v = std::get_if<double>(&it->second)) return *v;
        throw std::runtime_error("input \"" + name + "\" is not numeric");
    }

    std::string path_input(const std::string& name) const {
        auto it = inputs.find(name);
        if (it == inputs.end()) throw std::runtime_error("missing input \"" + name + "\"");
        if (const std::string* v = std::get_if<std::string>(&it->second)) return *v;
        throw std::runtime_error("input \"" + name + "\" is not a path");
    }
};

// Port name -> artifact path relative to out_dir.
using StageOutputs = std::map<std::string, std::string>;
using StageRunner = std::function<StageOutputs(const StageContext&)>;

// Solver realizations dispatch on their locator (builtin:<name> for the
// in-process components); table and URL realizations have generic handlers.
class RunnerRegistry {
  public:
    void add(const std::string& locator, StageRunner runner) {
        runners_[locator] = std::move(runner);
    }

    const StageRunner* find(const std::string& locator) const {
        auto it = runners_.find(locator);
        return it == runners_.end() ? nullptr : &it->second;
    }

  private:
    std::map<std::string, StageRunner> runners_;
};

struct ExecuteOptions {
    Digest config_digest = hash_artifact("");
    std::string run_id;  // empty: generate a fresh UUID
    // Called after each stage: (1-based index, total, result, stage).
    std::function<void(std::size_t, std::size_t, const StageResult&, const PlannedStage&)>
        progress;
};

struct ExecutionOutcome {
    std::vector<StageResult> results;
    RunRecord record;
};

namespace detail {

inline void write_text_file(const std::filesystem::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailure("cannot write " + path.string());
    out << text;
}

inline std::string format_scalar(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Generic handler for DataTable realizations. Two supported shapes:
// a source (no inputs, one table/time-series output) materializes the
// validated table; a surrogate (one scalar in, one scalar out) interpolates.
inline StageOutputs run_data_table(const StageContext& ctx) {
    const auto& m = *ctx.manifest;
    const std::string& locator = ctx.realization->locator;

    if (m.inputs.empty() && m.outputs.size() == 1 &&
        (m.outputs[0].semantic_type == "table" || m.outputs[0].semantic_type == "time-series")) {
        LookupTable table = load_table(locator);
        std::string rel = ctx.artifact_rel(m.outputs[0].name, ".csv");
        write_text_file(ctx.artifact_abs(rel), table_to_csv(table));
        return {{m.outputs[0].name, rel}};
    }

    if (m.inputs.size() == 1 && m.inputs[0].semantic_type == "scalar" && m.outputs.size() == 1 &&
        m.outputs[0].semantic_type == "scalar") {
        LookupTable table = load_table(locator);
        double y = interpolate(table, ctx.scalar(m.inputs[0].name));
        std::string rel = ctx.artifact_rel(m.outputs[0].name, ".txt");
        write_text_file(ctx.artifact_abs(rel), format_scalar(y) + "\n");
        return {{m.outputs[0].name, rel}};
    }

    throw std::runtime_error("table realization supports (no inputs -> one table/time-series "
                             "output) or (one scalar -> one scalar); component \"" +
                             m.id + "\" fits neither");
}

// Generic handler for UrlSource realizations: fetch, validate when the port
// promises tabular content, store the body as the artifact.
inline StageOutputs run_url_source(const StageContext& ctx) {
    const auto& m = *ctx.manifest;
    if (!m.inputs.empty() || m.outputs.size() != 1)
        throw std::runtime_error("url realization needs no inputs and exactly one output");

    FetchResult fetched = fetch_url(ctx.realization->locator);
    const PortSpec& port = m.outputs[0];
    std::string ext = ".bin";
    if (port.semantic_type == "table" || port.semantic_type == "time-series") {
        parse_table(fetched.bytes);  // reject malformed payloads before storing
        ext = ".csv";
    }
    std::string rel = ctx.artifact_rel(port.name, ext);
    write_text_file(ctx.artifact_abs(rel), fetched.bytes);
    return {{port.name, rel}};
}

inline std::set<std::filesystem::path> list_files(const std::filesystem::path& dir) {
    std::set<std::filesystem::path> files;
    if (!std::filesystem::exists(dir)) return files;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(dir))
        if (entry.is_regular_file()) files.insert(entry.path());
    return files;
}

}  // namespace detail

// Runs the plan's stages in definition order. Each stage sees the inputs
// object plus its bound upstream artifacts; all artifacts land under
// <out_dir>/artifacts and are digested into the run record. Execution stops
// at the first failed stage. The record is produced either way and also
// written to <out_dir>/run_record.json.
inline ExecutionOutcome execute(const WorkflowPlan& plan, const std::filesystem::path& out_dir,
                                const RunnerRegistry& runners, const ExecuteOptions& opts = {}) {
    namespace fs = std::filesystem;
    const fs::path artifact_dir = out_dir / "artifacts";
    std::error_code ec;
    fs::create_directories(artifact_dir, ec);
    if (ec) throw IoFailure("cannot create " + artifact_dir.string() + ": " + ec.message());

    RunMeta meta;
    meta.run_id = opts.run_id.empty() ? make_run_id() : opts.run_id;
    meta.started = utc_timestamp_now();
    meta.config_digest = opts.config_digest;

    std::vector<StageResult> results;
    for (std::size_t k = 0; k < plan.stages.size(); ++k) {
        const PlannedStage& stage = plan.stages[k];

        StageResult result;
        result.stage_index = k;
        result.parameters = plan.inputs.entries;

        // Bound upstream artifacts override inputs-object entries of the
        // same name: scalars are read back, larger artifacts pass by path.
        bool inputs_ok = true;
        for (const auto& edge : plan.edges) {
            if (edge.consumer_stage != k) continue;
            const StageResult* producer = nullptr;
            for (const auto& r : results)
                if (r.stage_index == edge.producer_stage && r.status == StageStatus::Ok)
                    producer = &r;
            const std::string* artifact_rel = nullptr;
            if (producer) {
                auto port_it = producer->outputs.find(edge.output_port);
                if (port_it != producer->outputs.end()) artifact_rel = &port_it->second;
            }
            if (!artifact_rel) {
                result.status = StageStatus::Failed;
                result.message = "upstream artifact for input \"" + edge.input_port +
                                 "\" is unavailable (stage " +
                                 std::to_string(edge.producer_stage) + " has not produced \"" +
                                 edge.output_port + "\")";
                inputs_ok = false;
                break;
            }
            const fs::path artifact = out_dir / *artifact_rel;
            const PortSpec* in_port = nullptr;
            for (const auto& p : stage.manifest.inputs)
                if (p.name == edge.input_port) in_port = &p;
            if (in_port && in_port->semantic_type == "scalar") {
                std::ifstream in(artifact);
                double v = 0.0;
                if (!(in >> v)) {
                    result.status = StageStatus::Failed;
                    result.message = "cannot read scalar artifact " + artifact.string();
                    inputs_ok = false;
                    break;
                }
                result.parameters[edge.input_port] = v;
            } else {
                result.parameters[edge.input_port] = artifact.string();
            }
        }

        if (inputs_ok) {
            StageContext ctx;
            ctx.manifest = &stage.manifest;
            ctx.realization = &stage.realization;
            ctx.stage_index = k;
            ctx.inputs = result.parameters;
            ctx.out_dir = out_dir;

            const auto before = detail::list_files(artifact_dir);
            try {
                StageOutputs outputs;
                switch (stage.realization.kind) {
                    case RealizationKind::SolverExecutable: {
                        const StageRunner* runner = runners.find(stage.realization.locator);
                        if (!runner)
                            throw std::runtime_error("no runner registered for locator \"" +
                                                     stage.realization.locator + "\"");
                        outputs = (*runner)(ctx);
                        break;
                    }
                    case RealizationKind::DataTable:
                        outputs = detail::run_data_table(ctx);
                        break;
                    case RealizationKind::UrlSource:
                        outputs = detail::run_url_source(ctx);
                        break;
                    case RealizationKind::Description:
                        throw std::runtime_error("description realizations are not executable");
                }
                result.outputs = std::move(outputs);
                result.status = StageStatus::Ok;
                for (const auto& port : stage.manifest.outputs) {
                    if (!result.outputs.contains(port.name)) {
                        result.status = StageStatus::Failed;
                        result.message =
                            "component produced no artifact for output port \"" + port.name + "\"";
                        break;
                    }
                }
            } catch (const std::exception& e) {
                result.status = StageStatus::Failed;
                result.message = e.what();
            }

            for (const auto& file : detail::list_files(artifact_dir)) {
                if (before.contains(file)) continue;
                result.artifacts[fs::relative(file, out_dir).generic_string()] = hash_file(file);
            }
        }

        results.push_back(result);
        if (opts.progress) opts.progress(k + 1, plan.stages.size(), results.back(), stage);
        if (result.status == StageStatus::Failed) break;
    }

    meta.finished = utc_timestamp_now();
    RunRecord record = record_run(plan, results, meta);
    detail::write_text_file(out_dir / "run_record.json", serialize_run_record(record));
    return {std::move(results), std::move(record)};
}

}  // namespace mardiflow

#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mardiflow/components.hpp"
#include "mardiflow/config.hpp"
#include "mardiflow/engine.hpp"
#include "mardiflow/markdown.hpp"
#include "mardiflow/model.hpp"
#include "mardiflow/provenance.hpp"
#include "mardiflow/version.hpp"

// Command-line entry point: parse flags, merge with the config file,
// dispatch to the description / data / workflow paths, map errors to exit
// codes. stdout carries progress lines only; results go to files.

namespace mardiflow {

// Exit codes: 0 success, 1 workflow failure, 2 usage or parse error,
// 3 I/O or environment error.
enum ExitCode : int {
    kExitOk = 0,
    kExitWorkflowFailed = 1,
    kExitUsage = 2,
    kExitIo = 3,
};

inline std::string usage_text() {
    std::ostringstream out;
    out << "Usage: " << kToolName << " [options]\n"
        << "\n"
        << "A command-line CSE workflow tool. Components are abstract objects\n"
        << "described by their I/O ports and metadata, each carrying redundant\n"
        << "realizations (description / solver / data surrogate). Chains are\n"
        << "executed sequentially with full provenance capture.\n"
        << "\n"
        << "Options:\n"
        << "  --help                       show this message and exit\n"
        << "  --workflow-title <s>         working title for the workflow\n"
        << "  --input <path>               inputs object (.json) with the numerical\n"
        << "                               parameters of the workflow\n"
        << "  --output-directory <path>    where results are collected (default: Output)\n"
        << "  --config <path>              .ini config file with [default] and\n"
        << "                               user-defined sections\n"
        << "  --component                  component group marker; choose one of:\n"
        << "  --math-data                  run the data component (I/O data path)\n"
        << "  --math-solver                run the numerical model component\n"
        << "  --display_html <bool>        render the markdown description to HTML\n"
        << "  --display_pdf <bool>         render via the configured PDF converter\n"
        << "  --inputmarkdown <in>:<out>   markdown description input and output paths\n"
        << "  --data                       data group marker; choose one of:\n"
        << "  --get-data <path>            import a lookup table / database file\n"
        << "  --get-url-data <url>         import a table from an http(s)/file URL\n"
        << "\n"
        << "Exit codes: 0 success, 1 workflow failure, 2 usage error, 3 I/O error.\n";
    return out.str();
}

namespace detail {

inline std::string read_file_or_throw(const std::filesystem::path& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure(std::string(what) + " not found: " + path.string());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace detail

// Loads every components/<name>/component.json below `components_dir`.
// Manifests with validation findings are rejected.
inline ComponentRegistry load_component_registry(const std::filesystem::path& components_dir,
                                                 std::ostream& err) {
    ComponentRegistry registry;
    if (!std::filesystem::is_directory(components_dir))
        throw IoFailure("components directory not found: " + components_dir.string());
    for (const auto& entry : std::filesystem::directory_iterator(components_dir)) {
        if (!entry.is_directory()) continue;
        const auto manifest_path = entry.path() / "component.json";
        if (!std::filesystem::exists(manifest_path)) continue;
        ComponentManifest manifest = load_manifest(manifest_path);
        ValidationReport report = validate_manifest(manifest);
        if (!report.ok()) {
            for (const auto& finding : report.findings)
                err << manifest_path.string() << ": " << finding.path << ": " << finding.message
                    << "\n";
            throw ManifestFormatError("invalid manifest: " + manifest_path.string());
        }
        // Locators and description paths are relative to the manifest's dir.
        for (auto& r : manifest.realizations) {
            if (r.kind != RealizationKind::SolverExecutable && r.kind != RealizationKind::UrlSource &&
                !r.locator.empty() && r.locator.find("builtin:") != 0)
                r.locator = (entry.path() / r.locator).string();
        }
        if (manifest.description_ref)
            manifest.description_ref = (entry.path() / *manifest.description_ref).string();
        registry.emplace(manifest.id, std::move(manifest));
    }
    return registry;
}

class App {
  public:
    App(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

    int run(const std::vector<std::string>& args) {
        CliOptions cli;
        try {
            cli = parse_cli(args);
        } catch (const std::exception& e) {
            err_ << "error: " << e.what() << "\n\n" << usage_text();
            return kExitUsage;
        }

        if (cli.help) {
            out_ << usage_text();
            return kExitOk;
        }

        Config cfg;
        std::string config_bytes;
        try {
            if (cli.config_path) {
                config_bytes = detail::read_file_or_throw(*cli.config_path, "config");
                cfg = parse_config(config_bytes);
            }
            cfg = merge_options(cli, cfg);
        } catch (const IoFailure& e) {
            err_ << "error: " << e.what() << "\n";
            return kExitIo;
        } catch (const std::exception& e) {
            err_ << "error: " << e.what() << "\n";
            return kExitUsage;
        }

        InputsObject inputs;
        try {
            if (cfg.input_path)
                inputs = parse_inputs(detail::read_file_or_throw(*cfg.input_path, "inputs object"));
        } catch (const IoFailure& e) {
            err_ << "error: " << e.what() << "\n";
            return kExitIo;
        } catch (const std::exception& e) {
            err_ << "error: " << e.what() << "\n";
            return kExitUsage;
        }

        bool did_anything = false;

        if (cfg.inputmarkdown) {
            int rc = render_description(cfg);
            if (rc != kExitOk) return rc;
            did_anything = true;
        }

        if (cfg.get_data || cfg.get_url_data) {
            int rc = run_data_import(cfg, inputs);
            if (rc != kExitOk) return rc;
            did_anything = true;
        }

        if (cfg.component_selector != ComponentSelector::Unset) {
            int rc = run_component_workflow(cfg, inputs);
            if (rc != kExitOk) return rc;
            did_anything = true;
        }

        if (!did_anything) {
            err_ << "nothing to do: pass --math-solver, --math-data, --get-data, "
                    "--get-url-data or --inputmarkdown (see --help)\n";
            return kExitUsage;
        }
        return kExitOk;
    }

  private:
    std::ostream& out_;
    std::ostream& err_;

    std::filesystem::path components_dir(const Config& cfg) const {
        auto section = cfg.user_entries.find("paths");
        if (section != cfg.user_entries.end()) {
            auto key = section->second.find("components_dir");
            if (key != section->second.end()) return key->second;
        }
        return "components";
    }

    std::optional<std::string> pdf_converter(const Config& cfg) const {
        auto section = cfg.user_entries.find("tools");
        if (section != cfg.user_entries.end()) {
            auto key = section->second.find("pdf_converter");
            if (key != section->second.end() && !key->second.empty()) return key->second;
        }
        return std::nullopt;
    }

    int render_description(const Config& cfg) {
        const auto& [in_path, out_path] = *cfg.inputmarkdown;
        try {
            MarkdownDoc doc;
            doc.source = detail::read_file_or_throw(in_path, "markdown input");
            doc.source_path = in_path;

            if (cfg.display_pdf) {
                std::string pdf = render_pdf(doc, pdf_converter(cfg), cfg.workflow_title);
                std::filesystem::path target =
                    cfg.display_html ? std::filesystem::path(out_path).replace_extension(".pdf")
                                     : std::filesystem::path(out_path);
                mardiflow::detail::write_text_file(target, pdf);
                out_ << "wrote " << target.string() << "\n";
            }
            if (cfg.display_html || !cfg.display_pdf) {
                std::string html = render_markdown(doc, cfg.workflow_title);
                mardiflow::detail::write_text_file(out_path, html);
                out_ << "wrote " << out_path << "\n";
            }
            return kExitOk;
        } catch (const IoFailure& e) {
            err_ << "error: " << e.what() << "\n";
            return kExitIo;
        } catch (const NoConverterConfigured& e) {
            err_ << "error: " << e.what() << "\n";
            return kExitUsage;
        } catch (const ConverterFailed& e) {
            err_ << "error: " << e.what() << "\n";
            return kExitWorkflowFailed;
        } catch (const std::exception& e) {
            err_ << "error: " << e.what() << "\n";
            return kExitIo;
        }
    }

    // --get-data / --get-url-data: a one-stage workflow around a synthetic
    // level-3 component, so imports get the same provenance as any other run.
    int run_data_import(const Config& cfg, const InputsObject& inputs) {
        ComponentManifest manifest;
        manifest.version = kToolVersion;
        Realization realization;
        if (cfg.get_data) {
            manifest.id = "data-import";
            manifest.title = "Lookup table import";
            manifest.outputs = {{"table", "table", "", std::nullopt}};
            realization = {AbstractionLevel::SurrogateModel, RealizationKind::DataTable,
                           *cfg.get_data, std::nullopt};
            if (!std::filesystem::exists(*cfg.get_data)) {
                err_ << "error: data file not found: " << *cfg.get_data << "\n";
                return kExitIo;
            }
        } else {
            manifest.id = "url-import";
            manifest.title = "URL data import";
            manifest.outputs = {{"payload", "table", "", std::nullopt}};
            realization = {AbstractionLevel::SurrogateModel, RealizationKind::UrlSource,
                           *cfg.get_url_data, std::nullopt};
        }
        manifest.realizations = {realization};

        ComponentRegistry registry{{manifest.id, manifest}};
        WorkflowDefinition def;
        def.title = cfg.workflow_title;
        def.stages = {{manifest.id, std::nullopt}};
        return run_definition(def, registry, inputs, cfg);
    }

    int run_component_workflow(const Config& cfg, const InputsObject& inputs) {
        ComponentRegistry registry;
        try {
            registry = load_component_registry(components_dir(cfg), err_);
        } catch (const IoFailure& e) {
            err_ << "error: " << e.what() << "\n";
            return kExitIo;
        } catch (const std::exception& e) {
            err_ << "error: " << e.what() << "\n";
            return kExitUsage;
        }

        WorkflowDefinition def;
        def.title = cfg.workflow_title;
        if (cfg.component_selector == ComponentSelector::MathSolver) {
            def.stages = {{"cahn-hilliard-2d", std::nullopt}};
        } else {
            def.stages = {{"co2-conversion-series", std::nullopt}, {"time-average", std::nullopt}};
            def.bindings = {{0, "series", 1, "series"}};
        }
        return run_definition(def, registry, inputs, cfg);
    }

    int run_definition(const WorkflowDefinition& def, const ComponentRegistry& registry,
                       const InputsObject& inputs, const Config& cfg) {
        WorkflowPlan plan;
        try {
            plan = compose(def, registry, inputs);
        } catch (const std::exception& e) {
            err_ << "error: cannot compose workflow: " << e.what() << "\n";
            return kExitWorkflowFailed;
        }

        ExecuteOptions opts;
        opts.config_digest = hash_artifact(config_to_ini(cfg));
        opts.progress = [this](std::size_t index, std::size_t total, const StageResult& result,
                               const PlannedStage& stage) {
            out_ << "[" << index << "/" << total << "] " << stage.manifest.id << " (level "
                 << static_cast<int>(stage.realization.level) << ") ... "
                 << (result.status == StageStatus::Ok ? "ok" : "failed") << "\n";
            if (result.status != StageStatus::Ok) err_ << "  " << result.message << "\n";
        };

        const std::filesystem::path out_dir = cfg.output_directory;
        ExecutionOutcome outcome;
        try {
            outcome = execute(plan, out_dir, components::builtin_registry(), opts);
        } catch (const std::exception& e) {
            err_ << "error: " << e.what() << "\n";
            return kExitIo;
        }

        try {
            mardiflow::detail::write_text_file(out_dir / "fair_metadata.json",
                                               export_fair_metadata(outcome.record));
            append_registry_entry(out_dir / "registry.jsonl", outcome.record);
            render_stage_descriptions(plan, out_dir, cfg);
        } catch (const std::exception& e) {
            err_ << "error: " << e.what() << "\n";
            return kExitIo;
        }

        out_ << "run " << outcome.record.run_id << " "
             << (outcome.record.status == RunStatus::Completed ? "completed" : "failed") << "; "
             << "record: " << (out_dir / "run_record.json").string() << "\n";
        return outcome.record.status == RunStatus::Completed ? kExitOk : kExitWorkflowFailed;
    }

    // Level-1 realizations (markdown descriptions) are rendered alongside
    // the run so the output tree documents itself.
    void render_stage_descriptions(const WorkflowPlan& plan, const std::filesystem::path& out_dir,
                                   const Config& cfg) {
        for (const auto& stage : plan.stages) {
            if (!stage.manifest.description_ref) continue;
            std::ifstream in(*stage.manifest.description_ref, std::ios::binary);
            if (!in) continue;
            MarkdownDoc doc;
            doc.source.assign((std::istreambuf_iterator<char>(in)),
                              std::istreambuf_iterator<char>());
            doc.source_path = *stage.manifest.description_ref;
            std::filesystem::create_directories(out_dir / "description");
            mardiflow::detail::write_text_file(
                out_dir / "description" / (stage.manifest.id + ".html"),
                render_markdown(doc, cfg.workflow_title));
        }
    }
};

inline int run_app(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    return App(out, err).run(args);
}

}  // namespace mardiflow

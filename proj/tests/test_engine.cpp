#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <fstream>

#include "mardiflow/engine.hpp"
#include "test_util.hpp"

using namespace mardiflow;

namespace {

ComponentManifest source_component(const std::string& id, const std::string& port_type) {
    ComponentManifest m;
    m.id = id;
    m.version = "1.0.0";
    m.title = id;
    m.outputs = {{"out", port_type, "", std::nullopt}};
    m.realizations = {{AbstractionLevel::SimulationModel, RealizationKind::SolverExecutable,
                       "builtin:test-" + id, std::nullopt}};
    return m;
}

ComponentManifest sink_component(const std::string& id, const std::string& port_type) {
    ComponentManifest m = source_component(id, port_type);
    m.inputs = {{"in", port_type, "", std::nullopt}};
    return m;
}

// y = x^2 over the "x" scalar input, writing port "y".
StageOutputs square_runner(const StageContext& ctx) {
    double x = ctx.scalar("x");
    std::string rel = ctx.artifact_rel("y", ".txt");
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g\n", x * x);
    std::ofstream out(ctx.artifact_abs(rel));
    out << buf;
    return {{"y", rel}};
}

}  // namespace

// ---------------------------------------------------------------------------
// resolve_realization

TEST_CASE("resolve_realization returns the requested level when present") {
    ComponentManifest m = source_component("c", "scalar");
    m.realizations.push_back({AbstractionLevel::SurrogateModel, RealizationKind::DataTable,
                              "t.csv", std::nullopt});
    const Realization& r = resolve_realization(m, AbstractionLevel::SimulationModel);
    CHECK(r.kind == RealizationKind::SolverExecutable);
}

TEST_CASE("resolve_realization falls back along the preference order") {
    ComponentManifest m = source_component("c", "scalar");
    m.realizations = {{AbstractionLevel::SurrogateModel, RealizationKind::DataTable, "t.csv",
                       std::nullopt}};
    const Realization& r = resolve_realization(m, AbstractionLevel::SimulationModel);
    CHECK(r.kind == RealizationKind::DataTable);
    CHECK(r.level == AbstractionLevel::SurrogateModel);
}

TEST_CASE("resolve_realization never invents an executable realization") {
    ComponentManifest m = source_component("c", "scalar");
    m.realizations = {{AbstractionLevel::MathematicalModel, RealizationKind::Description,
                       "doc.md", std::nullopt}};
    CHECK_THROWS_AS(resolve_realization(m, AbstractionLevel::SimulationModel),
                    NoExecutableRealization);
    CHECK_THROWS_AS(resolve_realization(m, std::nullopt), NoExecutableRealization);
}

TEST_CASE("resolve_realization returns a description only when explicitly requested") {
    ComponentManifest m = source_component("c", "scalar");
    m.realizations.push_back({AbstractionLevel::MathematicalModel, RealizationKind::Description,
                              "doc.md", std::nullopt});
    const Realization& r = resolve_realization(m, AbstractionLevel::MathematicalModel);
    CHECK(r.kind == RealizationKind::Description);
}

TEST_CASE("resolve_realization always returns a realization from the manifest") {
    ComponentManifest m = source_component("c", "scalar");
    m.realizations.push_back({AbstractionLevel::SurrogateModel, RealizationKind::DataTable,
                              "t.csv", std::nullopt});
    for (auto requested :
         {std::optional<AbstractionLevel>{}, std::optional{AbstractionLevel::SimulationModel},
          std::optional{AbstractionLevel::SurrogateModel}}) {
        const Realization& r = resolve_realization(m, requested);
        bool found = false;
        for (const auto& cand : m.realizations)
            if (cand == r) found = true;
        CHECK(found);
    }
}

// ---------------------------------------------------------------------------
// compose

TEST_CASE("compose builds a plan over compatible ports") {
    ComponentRegistry reg;
    reg.emplace("src", source_component("src", "time-series"));
    reg.emplace("dst", sink_component("dst", "time-series"));

    WorkflowDefinition def;
    def.title = "chain";
    def.stages = {{"src", std::nullopt}, {"dst", std::nullopt}};
    def.bindings = {{0, "out", 1, "in"}};

    WorkflowPlan plan = compose(def, reg, {});
    REQUIRE(plan.stages.size() == 2);
    REQUIRE(plan.edges.size() == 1);
    CHECK(plan.stages[0].manifest.id == "src");
    CHECK(plan.title == "chain");
}

TEST_CASE("compose rejects incompatible ports") {
    ComponentRegistry reg;
    reg.emplace("src", source_component("src", "time-series"));
    ComponentManifest sink = sink_component("dst", "scalar");
    sink.inputs[0].unit = "K";
    reg.emplace("dst", sink);

    WorkflowDefinition def;
    def.stages = {{"src", std::nullopt}, {"dst", std::nullopt}};
    def.bindings = {{0, "out", 1, "in"}};
    try {
        compose(def, reg, {});
        FAIL("expected ComposeError");
    } catch (const ComposeError& e) {
        CHECK(e.kind == ComposeError::Kind::IncompatiblePorts);
    }
}

TEST_CASE("compose rejects unknown components") {
    ComponentRegistry reg;
    WorkflowDefinition def;
    def.stages = {{"reactorX", std::nullopt}};
    try {
        compose(def, reg, {});
        FAIL("expected ComposeError");
    } catch (const ComposeError& e) {
        CHECK(e.kind == ComposeError::Kind::UnknownComponent);
    }
}

TEST_CASE("compose rejects unknown ports, duplicate bindings and cycles") {
    ComponentRegistry reg;
    reg.emplace("a", sink_component("a", "scalar"));
    reg.emplace("b", sink_component("b", "scalar"));

    WorkflowDefinition def;
    def.stages = {{"a", std::nullopt}, {"b", std::nullopt}};

    def.bindings = {{0, "nope", 1, "in"}};
    CHECK_THROWS_AS(compose(def, reg, {}), ComposeError);

    def.bindings = {{0, "out", 1, "in"}, {0, "out", 1, "in"}};
    try {
        compose(def, reg, InputsObject{{{"in", 1.0}}});
        FAIL("expected ComposeError");
    } catch (const ComposeError& e) {
        CHECK(e.kind == ComposeError::Kind::DuplicateBinding);
    }

    def.bindings = {{0, "out", 1, "in"}, {1, "out", 0, "in"}};
    try {
        compose(def, reg, {});
        FAIL("expected ComposeError");
    } catch (const ComposeError& e) {
        CHECK(e.kind == ComposeError::Kind::CyclicBindings);
    }
}

TEST_CASE("compose requires every input bound or present in the inputs object") {
    ComponentRegistry reg;
    reg.emplace("dst", sink_component("dst", "scalar"));
    WorkflowDefinition def;
    def.stages = {{"dst", std::nullopt}};

    try {
        compose(def, reg, {});
        FAIL("expected ComposeError");
    } catch (const ComposeError& e) {
        CHECK(e.kind == ComposeError::Kind::UnboundRequiredInput);
    }

    InputsObject inputs;
    inputs.entries["in"] = 2.0;
    CHECK_NOTHROW(compose(def, reg, inputs));
}

// ---------------------------------------------------------------------------
// execute

TEST_CASE("execute runs a one-stage plan and digests its artifacts") {
    ComponentManifest m;
    m.id = "square";
    m.version = "1.0.0";
    m.inputs = {{"x", "scalar", "", std::nullopt}};
    m.outputs = {{"y", "scalar", "", std::nullopt}};
    m.realizations = {{AbstractionLevel::SimulationModel, RealizationKind::SolverExecutable,
                       "builtin:test-square", std::nullopt}};
    ComponentRegistry reg{{m.id, m}};

    RunnerRegistry runners;
    runners.add("builtin:test-square", square_runner);

    WorkflowDefinition def;
    def.title = "sq";
    def.stages = {{"square", std::nullopt}};
    InputsObject inputs;
    inputs.entries["x"] = 3.0;

    testutil::TempDir tmp;
    auto plan = compose(def, reg, inputs);
    auto outcome = execute(plan, tmp.path, runners);

    REQUIRE(outcome.results.size() == 1);
    CHECK(outcome.results[0].status == StageStatus::Ok);
    CHECK(outcome.record.status == RunStatus::Completed);
    REQUIRE(outcome.record.stages.size() == 1);
    CHECK(outcome.record.stages[0].artifacts.size() == 1);

    std::string content = testutil::read_file(tmp.path / "artifacts/stage0_y.txt");
    CHECK(std::stod(content) == 9.0);
    CHECK(outcome.record.stages[0].artifacts.at("artifacts/stage0_y.txt") ==
          hash_artifact(content));
    CHECK(std::filesystem::exists(tmp.path / "run_record.json"));
}

TEST_CASE("execute passes scalar artifacts downstream by value") {
    ComponentManifest src;
    src.id = "src";
    src.version = "1.0.0";
    src.inputs = {{"x", "scalar", "", std::nullopt}};
    src.outputs = {{"y", "scalar", "", std::nullopt}};
    src.realizations = {{AbstractionLevel::SimulationModel, RealizationKind::SolverExecutable,
                         "builtin:test-square", std::nullopt}};
    ComponentManifest dst = src;
    dst.id = "dst";
    dst.inputs = {{"x", "scalar", "", std::nullopt}};

    ComponentRegistry reg{{src.id, src}, {dst.id, dst}};
    RunnerRegistry runners;
    runners.add("builtin:test-square", square_runner);

    WorkflowDefinition def;
    def.stages = {{"src", std::nullopt}, {"dst", std::nullopt}};
    def.bindings = {{0, "y", 1, "x"}};
    InputsObject inputs;
    inputs.entries["x"] = 2.0;

    testutil::TempDir tmp;
    auto outcome = execute(compose(def, reg, inputs), tmp.path, runners);
    REQUIRE(outcome.record.status == RunStatus::Completed);
    // Stage 1 squared the bound upstream value 4, not the inputs-object 2.
    std::string content = testutil::read_file(tmp.path / "artifacts/stage1_y.txt");
    CHECK(std::stod(content) == 16.0);
    CHECK(std::get<double>(outcome.record.stages[1].parameters.at("x")) == 4.0);
}

TEST_CASE("execute fails fast and records the failure") {
    ComponentManifest bad = source_component("bad", "scalar");
    bad.outputs[0].name = "out";
    ComponentManifest next = sink_component("next", "scalar");
    ComponentRegistry reg{{bad.id, bad}, {next.id, next}};

    RunnerRegistry runners;
    runners.add("builtin:test-bad",
                [](const StageContext&) -> StageOutputs { throw std::runtime_error("dt <= 0"); });
    runners.add("builtin:test-next", [](const StageContext& ctx) -> StageOutputs {
        std::string rel = ctx.artifact_rel("out", ".txt");
        std::ofstream(ctx.artifact_abs(rel)) << "1\n";
        return {{"out", rel}};
    });

    WorkflowDefinition def;
    def.stages = {{"bad", std::nullopt}, {"next", std::nullopt}};
    def.bindings = {{0, "out", 1, "in"}};

    testutil::TempDir tmp;
    auto outcome = execute(compose(def, reg, {}), tmp.path, runners);
    REQUIRE(outcome.results.size() == 1);  // stage 1 never ran
    CHECK(outcome.results[0].status == StageStatus::Failed);
    CHECK(outcome.results[0].message.find("dt <= 0") != std::string::npos);
    CHECK(outcome.record.status == RunStatus::Failed);
}

TEST_CASE("execute marks stages failed when declared outputs are missing") {
    ComponentManifest m = source_component("noout", "scalar");
    ComponentRegistry reg{{m.id, m}};
    RunnerRegistry runners;
    runners.add("builtin:test-noout",
                [](const StageContext&) -> StageOutputs { return {}; });

    WorkflowDefinition def;
    def.stages = {{"noout", std::nullopt}};
    testutil::TempDir tmp;
    auto outcome = execute(compose(def, reg, {}), tmp.path, runners);
    CHECK(outcome.results[0].status == StageStatus::Failed);
    CHECK(outcome.results[0].message.find("no artifact") != std::string::npos);
}

TEST_CASE("execute twice with the same plan yields identical artifact digests") {
    ComponentManifest m;
    m.id = "square";
    m.version = "1.0.0";
    m.inputs = {{"x", "scalar", "", std::nullopt}};
    m.outputs = {{"y", "scalar", "", std::nullopt}};
    m.realizations = {{AbstractionLevel::SimulationModel, RealizationKind::SolverExecutable,
                       "builtin:test-square", std::nullopt}};
    ComponentRegistry reg{{m.id, m}};
    RunnerRegistry runners;
    runners.add("builtin:test-square", square_runner);

    WorkflowDefinition def;
    def.stages = {{"square", std::nullopt}};
    InputsObject inputs;
    inputs.entries["x"] = 1.7;
    auto plan = compose(def, reg, inputs);

    testutil::TempDir tmp1, tmp2;
    auto first = execute(plan, tmp1.path, runners);
    auto second = execute(plan, tmp2.path, runners);
    REQUIRE(first.record.stages.size() == second.record.stages.size());
    for (std::size_t i = 0; i < first.record.stages.size(); ++i)
        CHECK(first.record.stages[i].artifacts == second.record.stages[i].artifacts);

    // Re-serializing the same record is byte-identical.
    CHECK(serialize_run_record(first.record) == serialize_run_record(first.record));
}

TEST_CASE("execute handles DataTable realizations as interpolating surrogates") {
    testutil::TempDir tmp;
    testutil::write_file(tmp.path / "knots.csv", "0,0\n2,4\n");

    ComponentManifest m;
    m.id = "surrogate";
    m.version = "1.0.0";
    m.inputs = {{"x", "scalar", "", std::nullopt}};
    m.outputs = {{"y", "scalar", "", std::nullopt}};
    m.realizations = {{AbstractionLevel::SurrogateModel, RealizationKind::DataTable,
                       (tmp.path / "knots.csv").string(), std::nullopt}};
    ComponentRegistry reg{{m.id, m}};

    WorkflowDefinition def;
    def.stages = {{"surrogate", std::nullopt}};
    InputsObject inputs;
    inputs.entries["x"] = 1.0;

    auto outcome = execute(compose(def, reg, inputs), tmp.path / "run", RunnerRegistry{});
    REQUIRE(outcome.record.status == RunStatus::Completed);
    std::string content = testutil::read_file(tmp.path / "run/artifacts/stage0_y.txt");
    CHECK(std::stod(content) == 2.0);
}

TEST_CASE("execute materializes table sources and validates them") {
    testutil::TempDir tmp;
    testutil::write_file(tmp.path / "series.csv", "t,x\n0,1\n1,2\n");

    ComponentManifest m;
    m.id = "series-source";
    m.version = "1.0.0";
    m.outputs = {{"series", "time-series", "", std::nullopt}};
    m.realizations = {{AbstractionLevel::SurrogateModel, RealizationKind::DataTable,
                       (tmp.path / "series.csv").string(), std::nullopt}};
    ComponentRegistry reg{{m.id, m}};

    WorkflowDefinition def;
    def.stages = {{"series-source", std::nullopt}};
    auto outcome = execute(compose(def, reg, {}), tmp.path / "run", RunnerRegistry{});
    REQUIRE(outcome.record.status == RunStatus::Completed);
    CHECK(std::filesystem::exists(tmp.path / "run/artifacts/stage0_series.csv"));

    // A malformed source fails the stage, not the engine.
    testutil::write_file(tmp.path / "series.csv", "0,1\n0,2\n");
    auto failed = execute(compose(def, reg, {}), tmp.path / "run2", RunnerRegistry{});
    CHECK(failed.record.status == RunStatus::Failed);
}

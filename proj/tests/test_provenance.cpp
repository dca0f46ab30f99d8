#include <catch2/catch_amalgamated.hpp>

#include <nlohmann/json.hpp>

#include "mardiflow/provenance.hpp"
#include "test_util.hpp"

using namespace mardiflow;

namespace {

WorkflowPlan two_stage_plan() {
    ComponentManifest a;
    a.id = "alpha";
    a.version = "1.0.0";
    a.outputs = {{"out", "scalar", "", std::nullopt}};
    a.realizations = {{AbstractionLevel::SimulationModel, RealizationKind::SolverExecutable,
                       "builtin:a", std::nullopt}};
    ComponentManifest b = a;
    b.id = "beta";
    b.inputs = {{"in", "scalar", "", std::nullopt}};

    WorkflowPlan plan;
    plan.title = "demo";
    plan.stages = {{a, a.realizations[0]}, {b, b.realizations[0]}};
    plan.edges = {{0, "out", 1, "in"}};
    plan.inputs.entries = {{"x", 1.5}};
    return plan;
}

RunMeta meta() {
    RunMeta m;
    m.run_id = "00000000-0000-4000-8000-000000000000";
    m.started = "2026-01-01T00:00:00Z";
    m.finished = "2026-01-01T00:00:01Z";
    return m;
}

}  // namespace

TEST_CASE("hash_artifact matches the published SHA-256 test vectors") {
    CHECK(hash_artifact("").hex ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(hash_artifact("abc").hex ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(hash_artifact("abc") == hash_artifact("abc"));
    CHECK(hash_artifact("").valid());
}

TEST_CASE("hash_file hashes exact byte content") {
    testutil::TempDir tmp;
    testutil::write_file(tmp.path / "f.bin", "abc");
    CHECK(hash_file(tmp.path / "f.bin") == hash_artifact("abc"));
}

TEST_CASE("record_run: all stages ok yields Completed") {
    auto plan = two_stage_plan();
    std::vector<StageResult> results(2);
    results[0].stage_index = 0;
    results[0].outputs = {{"out", "artifacts/stage0_out.txt"}};
    results[0].artifacts = {{"artifacts/stage0_out.txt", hash_artifact("1")}};
    results[1].stage_index = 1;

    RunRecord rec = record_run(plan, results, meta());
    CHECK(rec.status == RunStatus::Completed);
    REQUIRE(rec.stages.size() == 2);
    CHECK(rec.stages[0].component_id == "alpha");
    CHECK(rec.stages[0].level_used == 2);
    CHECK(rec.stages[0].realization_kind == "solver");
    CHECK(rec.stages[1].component_id == "beta");
    CHECK(rec.input_digest == hash_artifact(canonical_inputs_bytes(plan.inputs)));
}

TEST_CASE("record_run: a failed stage yields Failed and truncated stages") {
    auto plan = two_stage_plan();
    std::vector<StageResult> results(1);
    results[0].stage_index = 0;
    results[0].status = StageStatus::Failed;
    results[0].message = "boom";

    RunRecord rec = record_run(plan, results, meta());
    CHECK(rec.status == RunStatus::Failed);
    REQUIRE(rec.stages.size() == 1);
    CHECK(rec.stages[0].status == "Failed");
    CHECK(rec.stages[0].message == "boom");
}

TEST_CASE("record_run: fewer results than stages is not Completed") {
    auto plan = two_stage_plan();
    std::vector<StageResult> results(1);  // stage 1 never ran
    results[0].stage_index = 0;
    results[0].outputs = {{"out", "artifacts/stage0_out.txt"}};
    CHECK(record_run(plan, results, meta()).status == RunStatus::Failed);
}

TEST_CASE("record_run: zero-stage plan is Completed with no stages") {
    WorkflowPlan plan;
    plan.title = "empty";
    RunRecord rec = record_run(plan, {}, meta());
    CHECK(rec.status == RunStatus::Completed);
    CHECK(rec.stages.empty());
}

TEST_CASE("run record serialization is deterministic and key-sorted") {
    auto plan = two_stage_plan();
    std::vector<StageResult> results(2);
    results[0].stage_index = 0;
    results[0].outputs = {{"out", "artifacts/stage0_out.txt"}};
    results[1].stage_index = 1;
    RunRecord rec = record_run(plan, results, meta());

    std::string a = serialize_run_record(rec);
    std::string b = serialize_run_record(rec);
    CHECK(a == b);

    auto j = nlohmann::json::parse(a);
    CHECK(j["run_id"] == rec.run_id);
    CHECK(j["stages"].size() == 2);
    CHECK(j["status"] == "Completed");
}

TEST_CASE("export_fair_metadata structure and determinism") {
    auto plan = two_stage_plan();
    std::vector<StageResult> results(1);
    results[0].stage_index = 0;
    results[0].status = StageStatus::Failed;
    RunRecord rec = record_run(plan, results, meta());

    std::string doc = export_fair_metadata(rec);
    CHECK(doc == export_fair_metadata(rec));

    auto j = nlohmann::json::parse(doc);
    CHECK(j["stages"].size() == 1);
    CHECK(j["status"] == "Failed");
    CHECK(j["identifiers"]["run_id"] == rec.run_id);
    CHECK(j["reuse"]["tool_version"] == kToolVersion);
    // Interoperability: port types and units are present per stage.
    CHECK(j["stages"][0]["output_ports"][0]["type"] == "scalar");
}

TEST_CASE("registry.jsonl gains one line per appended record") {
    testutil::TempDir tmp;
    auto plan = two_stage_plan();
    RunRecord rec = record_run(plan, {}, meta());
    append_registry_entry(tmp.path / "registry.jsonl", rec);
    append_registry_entry(tmp.path / "registry.jsonl", rec);

    std::string content = testutil::read_file(tmp.path / "registry.jsonl");
    CHECK(std::count(content.begin(), content.end(), '\n') == 2);
    auto first_line = content.substr(0, content.find('\n'));
    auto j = nlohmann::json::parse(first_line);
    CHECK(j["run_id"] == rec.run_id);
    CHECK(j["record_digest"] == hash_artifact(serialize_run_record(rec)).hex);
}

TEST_CASE("make_run_id produces v4 UUIDs") {
    std::string id = make_run_id();
    REQUIRE(id.size() == 36);
    CHECK(id[8] == '-');
    CHECK(id[13] == '-');
    CHECK(id[14] == '4');
    CHECK(id[18] == '-');
    CHECK(id[23] == '-');
    CHECK(make_run_id() != make_run_id());
}

TEST_CASE("utc timestamps are ISO-8601") {
    std::string ts = utc_timestamp_now();
    REQUIRE(ts.size() == 20);
    CHECK(ts[4] == '-');
    CHECK(ts[10] == 'T');
    CHECK(ts.back() == 'Z');
}

#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "mardiflow/model.hpp"
#include "test_util.hpp"

using namespace mardiflow;

namespace {

ComponentManifest minimal_manifest() {
    ComponentManifest m;
    m.id = "demo";
    m.version = "1.0.0";
    m.title = "Demo component";
    m.inputs = {{"x", "scalar", "", std::nullopt}};
    m.outputs = {{"y", "scalar", "", std::nullopt}};
    m.realizations = {{AbstractionLevel::SimulationModel, RealizationKind::SolverExecutable,
                       "builtin:demo", std::nullopt}};
    return m;
}

}  // namespace

TEST_CASE("validate_manifest accepts a well-formed manifest") {
    auto report = validate_manifest(minimal_manifest());
    CHECK(report.findings.empty());
}

TEST_CASE("validate_manifest flags a realization level/kind mismatch") {
    auto m = minimal_manifest();
    m.realizations = {{AbstractionLevel::SimulationModel, RealizationKind::Description, "doc.md",
                       std::nullopt}};
    auto report = validate_manifest(m);
    REQUIRE_FALSE(report.ok());
    bool found = false;
    for (const auto& f : report.findings)
        if (f.message.find("level/kind mismatch") != std::string::npos) found = true;
    CHECK(found);
}

TEST_CASE("validate_manifest flags duplicate input port names") {
    auto m = minimal_manifest();
    m.inputs = {{"temp", "scalar", "K", std::nullopt}, {"temp", "scalar", "K", std::nullopt}};
    auto report = validate_manifest(m);
    REQUIRE_FALSE(report.ok());
    bool found = false;
    for (const auto& f : report.findings)
        if (f.message.find("duplicate port") != std::string::npos) found = true;
    CHECK(found);
}

TEST_CASE("validate_manifest flags empty realization list and unknown types") {
    ComponentManifest m = minimal_manifest();
    m.realizations.clear();
    m.inputs[0].semantic_type = "tensor-rank-5";
    auto report = validate_manifest(m);
    CHECK(report.findings.size() == 2);
}

TEST_CASE("validate_manifest flags duplicate (level, kind, locator) triples") {
    auto m = minimal_manifest();
    m.realizations.push_back(m.realizations[0]);
    auto report = validate_manifest(m);
    REQUIRE(report.findings.size() == 1);
    CHECK(report.findings[0].message.find("duplicate realization") != std::string::npos);
}

TEST_CASE("validate_manifest is deterministic") {
    auto m = minimal_manifest();
    m.inputs.push_back({"", "mystery", "", std::vector<int>{0}});
    auto a = validate_manifest(m);
    auto b = validate_manifest(m);
    CHECK(a.findings == b.findings);
}

TEST_CASE("ports_compatible compares type, unit and shape but not name") {
    PortSpec a{"hot", "scalar", "K", std::nullopt};
    PortSpec b{"cold", "scalar", "K", std::nullopt};
    CHECK(ports_compatible(a, b));

    CHECK_FALSE(ports_compatible({"t", "scalar", "K", std::nullopt},
                                 {"t", "scalar", "", std::nullopt}));
    CHECK_FALSE(ports_compatible({"f", "scalar-field-2d", "", std::vector<int>{128, 128}},
                                 {"f", "scalar-field-2d", "", std::vector<int>{64, 64}}));
    CHECK_FALSE(ports_compatible({"f", "scalar-field-2d", "", std::vector<int>{64, 64}},
                                 {"f", "scalar-field-2d", "", std::nullopt}));
    CHECK_FALSE(ports_compatible({"x", "scalar", "", std::nullopt},
                                 {"x", "time-series", "", std::nullopt}));
}

TEST_CASE("ports_compatible is reflexive and symmetric") {
    std::mt19937 rng(7);
    std::vector<std::string> types(semantic_type_registry().begin(),
                                   semantic_type_registry().end());
    std::vector<std::string> units = {"", "K", "mol"};
    auto random_port = [&]() {
        PortSpec p;
        p.name = "p" + std::to_string(rng() % 100);
        p.semantic_type = types[rng() % types.size()];
        p.unit = units[rng() % units.size()];
        if (rng() % 2) p.shape = std::vector<int>{static_cast<int>(1 + rng() % 3)};
        return p;
    };
    for (int trial = 0; trial < 500; ++trial) {
        PortSpec a = random_port(), b = random_port();
        CHECK(ports_compatible(a, a));
        CHECK(ports_compatible(a, b) == ports_compatible(b, a));
    }
}

TEST_CASE("accepted realizations always satisfy the level/kind table") {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 300; ++trial) {
        ComponentManifest m = minimal_manifest();
        m.realizations.clear();
        int count = 1 + static_cast<int>(rng() % 3);
        for (int i = 0; i < count; ++i) {
            Realization r;
            r.level = static_cast<AbstractionLevel>(1 + rng() % 3);
            r.kind = static_cast<RealizationKind>(rng() % 4);
            r.locator = "loc" + std::to_string(rng() % 4);
            m.realizations.push_back(r);
        }
        if (validate_manifest(m).ok()) {
            for (const auto& r : m.realizations) {
                switch (r.kind) {
                    case RealizationKind::Description:
                        CHECK(r.level == AbstractionLevel::MathematicalModel);
                        break;
                    case RealizationKind::SolverExecutable:
                        CHECK(r.level == AbstractionLevel::SimulationModel);
                        break;
                    default:
                        CHECK(r.level == AbstractionLevel::SurrogateModel);
                }
            }
        }
    }
}

TEST_CASE("manifest JSON round-trips through component.json form") {
    auto m = minimal_manifest();
    m.description_ref = "description.md";
    m.realizations.push_back({AbstractionLevel::SurrogateModel, RealizationKind::DataTable,
                              "table.csv", std::string(64, 'a')});
    m.inputs[0].shape = std::vector<int>{4, 4};

    auto j = manifest_to_json(m);
    auto back = manifest_from_json(j);
    CHECK(back == m);
}

TEST_CASE("load_manifest reads the on-disk schema") {
    testutil::TempDir tmp;
    testutil::write_file(tmp.path / "component.json", R"({
      "id": "lookup",
      "version": "0.2.0",
      "title": "Lookup",
      "inputs": [{"name": "x", "type": "scalar", "unit": ""}],
      "outputs": [{"name": "y", "type": "scalar", "unit": ""}],
      "realizations": [
        {"level": 3, "kind": "table", "locator": "knots.csv"}
      ]
    })");
    auto m = load_manifest(tmp.path / "component.json");
    CHECK(m.id == "lookup");
    REQUIRE(m.realizations.size() == 1);
    CHECK(m.realizations[0].kind == RealizationKind::DataTable);
    CHECK(m.realizations[0].level == AbstractionLevel::SurrogateModel);
    CHECK(validate_manifest(m).ok());
}

TEST_CASE("load_manifest rejects malformed documents") {
    testutil::TempDir tmp;
    testutil::write_file(tmp.path / "bad.json", "{\"id\": ");
    CHECK_THROWS_AS(load_manifest(tmp.path / "bad.json"), ManifestFormatError);

    testutil::write_file(tmp.path / "bad2.json", R"({"realizations": [{"level": 7, "kind": "solver", "locator": "x"}]})");
    CHECK_THROWS_AS(load_manifest(tmp.path / "bad2.json"), ManifestFormatError);

    testutil::write_file(tmp.path / "bad3.json", R"({"realizations": [{"level": 2, "kind": "blob", "locator": "x"}]})");
    CHECK_THROWS_AS(load_manifest(tmp.path / "bad3.json"), ManifestFormatError);
}

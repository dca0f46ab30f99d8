#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "mardiflow/digest.hpp"
#include "mardiflow/model.hpp"

namespace mardiflow {

// A stage of a resolved plan: the manifest plus the realization chosen for it.
struct PlannedStage {
    ComponentManifest manifest;
    Realization realization;
};

// Resolved executable chain. Stage order equals definition order; every edge
// has already been checked for port compatibility.
struct WorkflowPlan {
    std::string title;
    std::vector<PlannedStage> stages;
    std::vector<PortBinding> edges;
    InputsObject inputs;
};

enum class StageStatus { Ok, Failed };

struct StageResult {
    std::size_t stage_index = 0;
    StageStatus status = StageStatus::Ok;
    // Port name -> artifact path relative to the run's output directory.
    std::map<std::string, std::string> outputs;
    std::string message;
    // Parameter snapshot the stage actually received (scalars plus bound
    // artifact paths), recorded for provenance.
    std::map<std::string, Value> parameters;
    // Every file the stage wrote under artifacts/, with its content digest.
    std::map<std::string, Digest> artifacts;
};

}  // namespace mardiflow

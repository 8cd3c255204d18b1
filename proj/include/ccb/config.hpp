#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ccb/arms.hpp"
#include "ccb/engine.hpp"
#include "ccb/scm.hpp"

namespace ccb {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// SCM template from a key-value tree. Mechanisms are given either as
// explicit table rows or as the expression shorthand
// (xor/and/or/not/const, names, name[-1] for lag-1 parents); both are
// compiled to lookup tables.
ScmTemplate load_template(const nlohmann::json& j);

struct ArmsConfig {
    ArmMode mode{ArmMode::pomis};
    std::vector<std::vector<std::string>> pomis_sets;
};

struct ExperimentConfig {
    nlohmann::json scm_json;  // inlined template (manifests are self-contained)
    ScmTemplate tpl;
    int trials{5};
    std::vector<long> horizons{10000};
    PolicyKind policy{PolicyKind::ts};
    double klucb_tolerance{1e-6};
    ArmsConfig arms;
    Window window{Window::lag1};
    EstimationMode estimation{EstimationMode::oracle_sem};
    long n_obs{100000};
    double smoothing{1.0};
    long n_model_samples{100000};
    bool scm_reward_sampling{false};
    int replicates{100};
    std::uint64_t seed{0};
    std::string out_dir{"out"};
    int jobs{0};  // 0 = hardware concurrency
    std::string run_mode{"both"};  // ccb | scm-mab | both
    bool export_traces{false};
};

ExperimentConfig load_experiment_file(const std::string& path);
ExperimentConfig load_experiment_json(const nlohmann::json& j, const std::string& base_dir);
nlohmann::json experiment_to_json(const ExperimentConfig& cfg);

EngineConfig engine_config(const ExperimentConfig& cfg);
ArmTable build_arm_table(const ExperimentConfig& cfg);

}  // namespace ccb

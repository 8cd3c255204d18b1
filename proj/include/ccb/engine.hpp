#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ccb/arms.hpp"
#include "ccb/inference.hpp"
#include "ccb/policies.hpp"

namespace ccb {

enum class EstimationMode { oracle_sem, observational };
enum class RunMode { ccb, scm_mab };

struct EngineConfig {
    int trials{1};                  // number of bandit trials T+1 (slice i per trial i)
    std::vector<long> horizons;     // one per trial, or a single entry reused
    PolicyKind policy{PolicyKind::ts};
    double klucb_tolerance{1e-6};
    Window window{Window::lag1};
    EstimationMode estimation{EstimationMode::oracle_sem};
    long n_obs{100000};
    double smoothing{1.0};
    long n_model_samples{100000};   // ancestral samples per arm in observational mode
    bool scm_reward_sampling{false};

    long horizon_for(int trial) const {
        if (horizons.empty()) return 10000;
        return horizons[static_cast<std::size_t>(std::min<std::size_t>(trial, horizons.size() - 1))];
    }
};

struct TrialResult {
    int trial{};
    RewardTable env;                       // true conditional means (pseudo-regret basis)
    std::optional<RewardTable> agent_model;  // transfer-model estimate, observational mode only
    PlayTrace trace;
    std::vector<long> pulls;
    int implemented_arm{-1};
    double final_regret{0.0};
};

struct ChronologicalRun {
    RunMode mode{RunMode::ccb};
    std::vector<TrialResult> trials;
};

// Most-played arm, lowest id on ties.
int select_implemented_intervention(const std::vector<long>& pulls);

// Conditional environment for one trial under the given transfer model.
RewardTable conditional_reward_env(const ScmTemplate& tpl, const ArmTable& arms, int trial,
                                   const History& history, Window window);
RewardTable conditional_reward_env_fitted(const EstimatedSem& fhat, const ScmTemplate& tpl,
                                          const ArmTable& arms, int trial, const History& history,
                                          Window window, long n, Rng& rng);

// Observational dataset + frequency-table fit on the stream run_ccb would
// use internally for the same seed.
EstimatedSem fit_transfer_model(const ScmTemplate& tpl, const EngineConfig& cfg,
                                std::uint64_t seed);

// Seed for one replicate, split from the master seed so earlier replicates
// are stable when the count grows.
std::uint64_t replicate_seed(std::uint64_t master, int replicate);

// Chronological run: each trial plays a fresh bandit against the true SCM
// conditioned on the implemented interventions so far, then implements its
// most-played arm.
// In observational mode a pre-fitted transfer model may be supplied so that
// replicates share one observational dataset; when absent it is fitted from
// a stream derived from `seed`.
ChronologicalRun run_ccb(const ScmTemplate& tpl, const ArmTable& arms, const EngineConfig& cfg,
                         std::uint64_t seed, const EstimatedSem* fhat = nullptr);

// Memoryless baseline: the policy state persists across trials as if the
// trial-0 environment never changed, while the true environment keeps
// evolving under the arms this agent implements. Regret is measured against
// the true conditional table of each trial.
ChronologicalRun run_scm_mab_baseline(const ScmTemplate& tpl, const ArmTable& arms,
                                      const EngineConfig& cfg, std::uint64_t seed,
                                      const EstimatedSem* fhat = nullptr);

// Noise-free chronological recursion: each trial implements the exact argmax
// arm. This is the reference trajectory for the implemented-intervention
// sequence and the per-trial reward tables.
struct OracleRun {
    std::vector<RewardTable> tables;
    std::vector<int> implemented;
};

OracleRun run_oracle(const ScmTemplate& tpl, const ArmTable& arms, int trials, Window window);

struct OscillationReport {
    std::vector<RewardTable> tables;
    std::vector<int> argmax;  // per trial
};

OscillationReport oscillation_report(const ChronologicalRun& run);

}  // namespace ccb

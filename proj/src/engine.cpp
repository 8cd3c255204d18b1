#include "ccb/engine.hpp"

#include <algorithm>
#include <stdexcept>

namespace ccb {

namespace {

constexpr std::uint64_t kTrialStream = 0x7472696131ULL;  // shared by ccb and baseline
constexpr std::uint64_t kObsStream = 0x6f627331ULL;
constexpr std::uint64_t kModelStream = 0x6d6f6431ULL;

ChronologicalRun run_impl(const ScmTemplate& tpl, const ArmTable& arms, const EngineConfig& cfg,
                          std::uint64_t seed, RunMode mode, const EstimatedSem* shared_fhat) {
    if (cfg.trials < 1) throw std::invalid_argument("run: trials must be >= 1");
    if (arms.size() == 0) throw std::invalid_argument("run: empty arm table");

    std::optional<EstimatedSem> owned;
    const EstimatedSem* fhat = nullptr;
    if (cfg.estimation == EstimationMode::observational) {
        if (shared_fhat) {
            fhat = shared_fhat;
        } else {
            Rng obs_rng = make_rng(seed, {kObsStream});
            const auto data =
                generate_observational(unroll(tpl, std::max(cfg.trials, 2)), cfg.n_obs, obs_rng);
            owned = fit_structural_pmfs(data, tpl, cfg.smoothing);
            fhat = &*owned;
        }
    }

    ChronologicalRun run;
    run.mode = mode;
    History history;
    PolicyState carried = PolicyState::fresh(arms.size());
    for (int i = 0; i < cfg.trials; ++i) {
        TrialResult res;
        res.trial = i;
        res.env = conditional_reward_env(tpl, arms, i, history, cfg.window);
        if (fhat) {
            Rng model_rng = make_rng(seed, {kModelStream, static_cast<std::uint64_t>(i)});
            res.agent_model = conditional_reward_env_fitted(*fhat, tpl, arms, i, history, cfg.window,
                                                            cfg.n_model_samples, model_rng);
        }

        Rng trial_rng = make_rng(seed, {kTrialStream, static_cast<std::uint64_t>(i)});
        PolicyState initial =
            (mode == RunMode::scm_mab) ? std::move(carried) : PolicyState::fresh(arms.size());

        RewardSampler scm_sampler;
        const RewardSampler* sampler = nullptr;
        std::vector<CompiledScm> per_arm;
        if (cfg.scm_reward_sampling) {
            per_arm.reserve(arms.size());
            for (const Arm& arm : arms.arms)
                per_arm.emplace_back(build_conditioned(tpl, i, arm.intervention, history, cfg.window));
            scm_sampler = [&per_arm, &tpl, i](int arm, Rng& rng) {
                const CompiledScm& c = per_arm[static_cast<std::size_t>(arm)];
                auto ws = c.make_workspace();
                c.draw_exogenous(rng, ws);
                c.evaluate(ws);
                return static_cast<int>(c.endo_value(ws, i, tpl.reward));
            };
            sampler = &scm_sampler;
        }

        auto out = play_trial(res.env, cfg.policy, cfg.klucb_tolerance, cfg.horizon_for(i),
                              trial_rng, std::move(initial), sampler);
        res.trace = std::move(out.trace);
        if (mode == RunMode::scm_mab) carried = std::move(out.state);
        res.pulls = pull_counts(res.trace, arms.size());
        res.implemented_arm = select_implemented_intervention(res.pulls);
        const auto regret = cumulative_regret(res.trace, res.env);
        res.final_regret = regret.empty() ? 0.0 : regret.back();
        history.push_back(arms.arms[static_cast<std::size_t>(res.implemented_arm)].intervention);
        run.trials.push_back(std::move(res));
    }
    return run;
}

}  // namespace

EstimatedSem fit_transfer_model(const ScmTemplate& tpl, const EngineConfig& cfg,
                                std::uint64_t seed) {
    Rng obs_rng = make_rng(seed, {kObsStream});
    const auto data =
        generate_observational(unroll(tpl, std::max(cfg.trials, 2)), cfg.n_obs, obs_rng);
    return fit_structural_pmfs(data, tpl, cfg.smoothing);
}

std::uint64_t replicate_seed(std::uint64_t master, int replicate) {
    return derive_seed(master, {0x72657031ULL, static_cast<std::uint64_t>(replicate)});
}

int select_implemented_intervention(const std::vector<long>& pulls) {
    if (pulls.empty()) throw std::invalid_argument("select_implemented_intervention: no counts");
    int best = 0;
    for (std::size_t a = 1; a < pulls.size(); ++a)
        if (pulls[a] > pulls[static_cast<std::size_t>(best)]) best = static_cast<int>(a);
    return best;
}

RewardTable conditional_reward_env(const ScmTemplate& tpl, const ArmTable& arms, int trial,
                                   const History& history, Window window) {
    return exact_reward_table(tpl, arms, trial, history, window);
}

RewardTable conditional_reward_env_fitted(const EstimatedSem& fhat, const ScmTemplate& tpl,
                                          const ArmTable& arms, int trial, const History& history,
                                          Window window, long n, Rng& rng) {
    RewardTable table;
    table.means.reserve(arms.size());
    for (const Arm& arm : arms.arms)
        table.means.push_back(
            simulate_from_fitted(fhat, tpl, trial, arm.intervention, history, window, n, rng));
    for (std::size_t i = 0; i < table.means.size(); ++i)
        if (table.argmax < 0 || table.means[i] > table.means[static_cast<std::size_t>(table.argmax)])
            table.argmax = static_cast<int>(i);
    return table;
}

ChronologicalRun run_ccb(const ScmTemplate& tpl, const ArmTable& arms, const EngineConfig& cfg,
                         std::uint64_t seed, const EstimatedSem* fhat) {
    return run_impl(tpl, arms, cfg, seed, RunMode::ccb, fhat);
}

ChronologicalRun run_scm_mab_baseline(const ScmTemplate& tpl, const ArmTable& arms,
                                      const EngineConfig& cfg, std::uint64_t seed,
                                      const EstimatedSem* fhat) {
    return run_impl(tpl, arms, cfg, seed, RunMode::scm_mab, fhat);
}

OracleRun run_oracle(const ScmTemplate& tpl, const ArmTable& arms, int trials, Window window) {
    if (trials < 1) throw std::invalid_argument("run_oracle: trials must be >= 1");
    OracleRun out;
    History history;
    for (int i = 0; i < trials; ++i) {
        RewardTable table = exact_reward_table(tpl, arms, i, history, window);
        out.implemented.push_back(table.argmax);
        history.push_back(arms.arms[static_cast<std::size_t>(table.argmax)].intervention);
        out.tables.push_back(std::move(table));
    }
    return out;
}

OscillationReport oscillation_report(const ChronologicalRun& run) {
    OscillationReport rep;
    for (const TrialResult& t : run.trials) {
        rep.tables.push_back(t.env);
        rep.argmax.push_back(t.env.argmax);
    }
    return rep;
}

}  // namespace ccb

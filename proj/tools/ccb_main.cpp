#include <atomic>
#include <cmath>
#include <filesystem>
#include <optional>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "ccb/config.hpp"
#include "ccb/csv.hpp"
#include "ccb/engine.hpp"

namespace fs = std::filesystem;
using namespace ccb;

namespace {

struct CommonOpts {
    std::string config_path;
    std::uint64_t seed{0};
    int replicates{0};
    std::string out;
    int jobs{-1};
    std::string policy;
    std::string mode;

    bool seed_set{false}, replicates_set{false}, out_set{false}, jobs_set{false};
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "experiment config file")->required();
    cmd->add_option("--seed", o.seed, "master seed override");
    cmd->add_option("--replicates", o.replicates, "replicate count override");
    cmd->add_option("--out", o.out, "output directory override");
    cmd->add_option("--jobs", o.jobs, "worker threads (0 = all cores)");
    cmd->add_option("--policy", o.policy, "policy override")
        ->check(CLI::IsMember({"ts", "klucb"}));
    cmd->add_option("--mode", o.mode, "run mode override")
        ->check(CLI::IsMember({"ccb", "scm-mab", "both"}));
}

ExperimentConfig load_with_overrides(const CLI::App* cmd, const CommonOpts& o) {
    ExperimentConfig cfg = load_experiment_file(o.config_path);
    if (cmd->count("--seed")) cfg.seed = o.seed;
    if (cmd->count("--replicates")) cfg.replicates = o.replicates;
    if (cmd->count("--out")) cfg.out_dir = o.out;
    if (cmd->count("--jobs")) cfg.jobs = o.jobs;
    if (cmd->count("--policy")) cfg.policy = (o.policy == "klucb") ? PolicyKind::klucb : PolicyKind::ts;
    if (cmd->count("--mode")) cfg.run_mode = o.mode;
    if (cfg.replicates < 1) throw ConfigError("replicates must be >= 1");
    return cfg;
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + p.string());
    return f;
}

int cmd_validate(const ExperimentConfig& cfg) {
    bool ok = true;

    const ValidationReport rep = validate_template(cfg.tpl);
    if (rep.ok()) {
        std::cout << "template: ok\n";
    } else {
        ok = false;
        for (const auto& e : rep.errors) std::cout << "template: " << e << "\n";
    }
    if (!ok) return 2;  // later checks need a well-formed template

    const int slices = std::max(cfg.trials, 2);
    const auto inv = check_mis_time_invariance(cfg.tpl, slices);
    std::cout << "mis-time-invariance (" << slices << " slices): "
              << (inv.invariant ? "ok" : inv.detail) << "\n";
    ok = ok && inv.invariant;

    ArmTable arms;
    try {
        arms = build_arm_table(cfg);
        std::cout << "arms: ok (" << arms.size() << " arms)\n";
    } catch (const std::exception& e) {
        std::cout << "arms: " << e.what() << "\n";
        return 2;
    }

    // Sampling/enumeration agreement on the trial-0 table.
    const long n_mc = 20000;
    bool mc_ok = true;
    for (const Arm& a : arms.arms) {
        Rng rng = make_rng(cfg.seed, {0x76616c31ULL, static_cast<std::uint64_t>(a.id)});
        const double exact = exact_interventional_mean(cfg.tpl, 0, a.intervention, {}, cfg.window);
        const auto mc = monte_carlo_mean(cfg.tpl, 0, a.intervention, {}, cfg.window, n_mc, rng);
        const double tol = 4.0 * mc.se + 1e-6;
        const bool pass = std::abs(mc.mean - exact) <= tol;
        mc_ok = mc_ok && pass;
        std::cout << "mc-check arm " << a.id << " (" << arm_label(cfg.tpl, a) << "): exact "
                  << fmt(exact) << " mc " << fmt(mc.mean) << " +/- " << fmt(mc.se)
                  << (pass ? " ok" : " MISMATCH") << "\n";
    }
    ok = ok && mc_ok;

    std::cout << (ok ? "validate: ok" : "validate: FAILED") << "\n";
    return ok ? 0 : 2;
}

int cmd_arms(const ExperimentConfig& cfg) {
    const ArmTable arms = build_arm_table(cfg);
    fs::create_directories(cfg.out_dir);
    const fs::path path = fs::path(cfg.out_dir) / "arms.csv";
    auto f = open_out(path);
    write_arm_table_csv(arms, cfg.tpl, f);
    write_arm_table_csv(arms, cfg.tpl, std::cout);
    std::cout << "wrote " << path.string() << "\n";
    return 0;
}

int cmd_rewards(const ExperimentConfig& cfg) {
    const ArmTable arms = build_arm_table(cfg);
    const OracleRun oracle = run_oracle(cfg.tpl, arms, cfg.trials, cfg.window);

    fs::create_directories(cfg.out_dir);
    const fs::path rpath = fs::path(cfg.out_dir) / "rewards.csv";
    auto rf = open_out(rpath);
    rf << "trial,arm_id,label,mean,optimal_flag\n";
    for (int i = 0; i < cfg.trials; ++i) {
        const RewardTable& t = oracle.tables[static_cast<std::size_t>(i)];
        for (const Arm& a : arms.arms)
            rf << i << ',' << a.id << ',' << arm_label(cfg.tpl, a) << ','
               << fmt(t.means[static_cast<std::size_t>(a.id)]) << ','
               << (a.id == t.argmax ? 1 : 0) << '\n';
    }

    const fs::path ipath = fs::path(cfg.out_dir) / "implemented.csv";
    auto ifile = open_out(ipath);
    ifile << "trial,arm_id,variables,values\n";
    std::cout << "trial  implemented  means\n";
    for (int i = 0; i < cfg.trials; ++i) {
        const Arm& a = arms.arms[static_cast<std::size_t>(oracle.implemented[static_cast<std::size_t>(i)])];
        ifile << i << ',' << a.id << ',' << arm_variables(cfg.tpl, a) << ',' << arm_values(a) << '\n';
        std::cout << i << "      " << arm_label(cfg.tpl, a) << "  ";
        for (double m : oracle.tables[static_cast<std::size_t>(i)].means) std::cout << ' ' << fmt(m);
        std::cout << "\n";
    }
    std::cout << "wrote " << rpath.string() << " and " << ipath.string() << "\n";
    return 0;
}

struct ModeStats {
    // per trial x round accumulators, filled in replicate order
    std::vector<std::vector<double>> sum, sumsq;  // cumulative regret
    std::vector<std::vector<long>> opt;           // optimal-arm picks
    std::vector<std::vector<double>> final_regret;  // [trial][rep]
    std::vector<std::vector<int>> implemented;      // [rep][trial]
};

void accumulate(ModeStats& st, const ChronologicalRun& run, const EngineConfig& ecfg) {
    if (st.sum.empty()) {
        const std::size_t T = run.trials.size();
        st.sum.resize(T);
        st.sumsq.resize(T);
        st.opt.resize(T);
        st.final_regret.resize(T);
        for (std::size_t i = 0; i < T; ++i) {
            const auto N = static_cast<std::size_t>(ecfg.horizon_for(static_cast<int>(i)));
            st.sum[i].assign(N, 0.0);
            st.sumsq[i].assign(N, 0.0);
            st.opt[i].assign(N, 0);
        }
    }
    std::vector<int> impl;
    for (std::size_t i = 0; i < run.trials.size(); ++i) {
        const TrialResult& t = run.trials[i];
        const auto regret = cumulative_regret(t.trace, t.env);
        for (std::size_t r = 0; r < regret.size(); ++r) {
            st.sum[i][r] += regret[r];
            st.sumsq[i][r] += regret[r] * regret[r];
            if (t.trace.rounds[r].arm == t.env.argmax) ++st.opt[i][r];
        }
        st.final_regret[i].push_back(t.final_regret);
        impl.push_back(t.implemented_arm);
    }
    st.implemented.push_back(std::move(impl));
}

double sample_sd(double sum, double sumsq, long n) {
    if (n < 2) return 0.0;
    const double var = (sumsq - sum * sum / n) / (n - 1);
    return var > 0 ? std::sqrt(var) : 0.0;
}

int cmd_run(const ExperimentConfig& cfg) {
    const ArmTable arms = build_arm_table(cfg);
    const EngineConfig ecfg = engine_config(cfg);

    fs::create_directories(cfg.out_dir);
    {
        auto mf = open_out(fs::path(cfg.out_dir) / "manifest.json");
        mf << experiment_to_json(cfg).dump(2) << "\n";
    }
    {
        auto af = open_out(fs::path(cfg.out_dir) / "arms.csv");
        write_arm_table_csv(arms, cfg.tpl, af);
    }

    std::optional<EstimatedSem> fhat;
    if (ecfg.estimation == EstimationMode::observational) {
        fhat = fit_transfer_model(cfg.tpl, ecfg, cfg.seed);
        auto mf = open_out(fs::path(cfg.out_dir) / "model.txt");
        write_estimated_sem(*fhat, cfg.tpl, mf);
        mf << "\n" << confounding_report(cfg.tpl).to_string();
    }

    std::vector<RunMode> modes;
    if (cfg.run_mode == "ccb" || cfg.run_mode == "both") modes.push_back(RunMode::ccb);
    if (cfg.run_mode == "scm-mab" || cfg.run_mode == "both") modes.push_back(RunMode::scm_mab);

    // Workers fill the results grid; aggregation then walks it in replicate
    // order so the emitted floats do not depend on scheduling.
    const std::size_t n_tasks = modes.size() * static_cast<std::size_t>(cfg.replicates);
    std::vector<ChronologicalRun> results(n_tasks);
    auto task = [&](std::size_t idx) {
        const std::size_t m = idx / static_cast<std::size_t>(cfg.replicates);
        const int rep = static_cast<int>(idx % static_cast<std::size_t>(cfg.replicates));
        const std::uint64_t seed = replicate_seed(cfg.seed, rep);
        const EstimatedSem* model = fhat ? &*fhat : nullptr;
        results[idx] = (modes[m] == RunMode::ccb)
                           ? run_ccb(cfg.tpl, arms, ecfg, seed, model)
                           : run_scm_mab_baseline(cfg.tpl, arms, ecfg, seed, model);
    };

    unsigned jobs = cfg.jobs > 0 ? static_cast<unsigned>(cfg.jobs)
                                 : std::max(1u, std::thread::hardware_concurrency());
    jobs = std::min<unsigned>(jobs, static_cast<unsigned>(n_tasks));
    if (jobs <= 1) {
        for (std::size_t i = 0; i < n_tasks; ++i) task(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < jobs; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n_tasks; i = next++) task(i);
            });
        for (auto& th : pool) th.join();
    }

    auto sf = open_out(fs::path(cfg.out_dir) / "summary.csv");
    sf << "mode,trial,mean_final_regret,sd_final_regret,prob_optimal_final\n";

    for (std::size_t m = 0; m < modes.size(); ++m) {
        const std::string tag = modes[m] == RunMode::ccb ? "ccb" : "scm-mab";
        ModeStats st;
        for (int rep = 0; rep < cfg.replicates; ++rep)
            accumulate(st, results[m * static_cast<std::size_t>(cfg.replicates) +
                                   static_cast<std::size_t>(rep)], ecfg);

        auto rf = open_out(fs::path(cfg.out_dir) / ("regret_" + tag + ".csv"));
        rf << "trial,round,mean_cum_regret,sd_cum_regret\n";
        auto of = open_out(fs::path(cfg.out_dir) / ("optimal_" + tag + ".csv"));
        of << "trial,round,prob_optimal\n";
        for (std::size_t i = 0; i < st.sum.size(); ++i)
            for (std::size_t r = 0; r < st.sum[i].size(); ++r) {
                rf << i << ',' << r << ',' << fmt(st.sum[i][r] / cfg.replicates) << ','
                   << fmt(sample_sd(st.sum[i][r], st.sumsq[i][r], cfg.replicates)) << '\n';
                of << i << ',' << r << ','
                   << fmt(static_cast<double>(st.opt[i][r]) / cfg.replicates) << '\n';
            }

        auto imf = open_out(fs::path(cfg.out_dir) / ("implemented_" + tag + ".csv"));
        imf << "replicate,trial,arm_id\n";
        for (int rep = 0; rep < cfg.replicates; ++rep)
            for (std::size_t i = 0; i < st.implemented[static_cast<std::size_t>(rep)].size(); ++i)
                imf << rep << ',' << i << ',' << st.implemented[static_cast<std::size_t>(rep)][i]
                    << '\n';

        for (std::size_t i = 0; i < st.sum.size(); ++i) {
            double fsum = 0, fsq = 0;
            for (double v : st.final_regret[i]) { fsum += v; fsq += v * v; }
            const std::size_t last = st.opt[i].size() - 1;
            const double popt = static_cast<double>(st.opt[i][last]) / cfg.replicates;
            sf << tag << ',' << i << ',' << fmt(fsum / cfg.replicates) << ','
               << fmt(sample_sd(fsum, fsq, cfg.replicates)) << ',' << fmt(popt) << '\n';
            std::cout << tag << " trial " << i << ": mean final regret "
                      << fmt(fsum / cfg.replicates) << ", P(optimal at N) " << fmt(popt) << "\n";
        }

        if (cfg.export_traces) {
            fs::create_directories(fs::path(cfg.out_dir) / "traces");
            for (int rep = 0; rep < cfg.replicates; ++rep) {
                const auto& run = results[m * static_cast<std::size_t>(cfg.replicates) +
                                          static_cast<std::size_t>(rep)];
                for (const TrialResult& t : run.trials) {
                    auto tf = open_out(fs::path(cfg.out_dir) / "traces" /
                                       (tag + "_rep" + std::to_string(rep) + "_trial" +
                                        std::to_string(t.trial) + ".csv"));
                    write_trace_csv(t.trace, t.env, tf);
                }
            }
        }

        if (fhat) {
            auto mrf = open_out(fs::path(cfg.out_dir) / ("model_rewards_" + tag + ".csv"));
            mrf << "replicate,trial,arm_id,model_mean\n";
            for (int rep = 0; rep < cfg.replicates; ++rep) {
                const auto& run = results[m * static_cast<std::size_t>(cfg.replicates) +
                                          static_cast<std::size_t>(rep)];
                for (const TrialResult& t : run.trials)
                    if (t.agent_model)
                        for (std::size_t a = 0; a < t.agent_model->means.size(); ++a)
                            mrf << rep << ',' << t.trial << ',' << a << ','
                                << fmt(t.agent_model->means[a]) << '\n';
            }
        }
    }

    std::cout << "wrote artifacts to " << cfg.out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"chronological causal bandit experiment runner"};
    app.require_subcommand(1);

    CommonOpts vo, ao, ro, uo;
    CLI::App* validate = app.add_subcommand("validate", "check template, arm sets and oracles");
    CLI::App* arms = app.add_subcommand("arms", "emit the arm table");
    CLI::App* rewards = app.add_subcommand("rewards", "exact per-trial reward tables");
    CLI::App* run = app.add_subcommand("run", "replicated bandit runs");
    add_common(validate, vo);
    add_common(arms, ao);
    add_common(rewards, ro);
    add_common(run, uo);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (validate->parsed()) return cmd_validate(load_with_overrides(validate, vo));
        if (arms->parsed()) return cmd_arms(load_with_overrides(arms, ao));
        if (rewards->parsed()) return cmd_rewards(load_with_overrides(rewards, ro));
        if (run->parsed()) return cmd_run(load_with_overrides(run, uo));
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

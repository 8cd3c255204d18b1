#pragma once

#include <functional>
#include <vector>

#include "ccb/inference.hpp"
#include "ccb/rng.hpp"

namespace ccb {

enum class PolicyKind { ts, klucb };

struct ArmStats {
    long pulls{0};
    long successes{0};

    double mean() const { return pulls == 0 ? 0.0 : static_cast<double>(successes) / pulls; }
    // Beta posterior under the uniform prior
    double alpha() const { return static_cast<double>(successes) + 1.0; }
    double beta() const { return static_cast<double>(pulls - successes) + 1.0; }
};

struct PolicyState {
    std::vector<ArmStats> arms;
    long total{0};

    static PolicyState fresh(std::size_t n_arms) { return {std::vector<ArmStats>(n_arms), 0}; }
};

// Thompson sampling over Bernoulli rewards: one Beta draw per arm, argmax,
// lowest id on exact ties.
int ts_select(const PolicyState& state, Rng& rng);

// Conjugate update; rewards must be 0 or 1.
void update_state(PolicyState& state, int arm, int reward);

// d(p,q) for Bernoulli distributions, with the 0*log(0) = 0 convention.
double bernoulli_kl(double p, double q);

// Largest q in [mean, 1] with count*d(mean,q) <= log(n) + 3*log(max(log n,1)),
// found by bisection. Unexplored arms get the domain maximum 1.
double klucb_index(long count, double mean, long n, double tolerance);

int klucb_select(const PolicyState& state, double tolerance);

struct Round {
    int arm{};
    int reward{};
};

struct PlayTrace {
    std::vector<Round> rounds;

    std::size_t size() const { return rounds.size(); }
};

using RewardSampler = std::function<int(int arm, Rng& rng)>;

struct TrialOutput {
    PlayTrace trace;
    PolicyState state;
};

// One bandit trial: horizon rounds of select / sample / update against a
// fixed reward environment. A custom sampler (e.g. full-SCM simulation) may
// replace the default Bernoulli(mu_a) draw; it must agree in distribution.
TrialOutput play_trial(const RewardTable& env, PolicyKind policy, double klucb_tolerance,
                       long horizon, Rng& rng, PolicyState initial_state,
                       const RewardSampler* sampler = nullptr);

// Pseudo-regret series from the trial's conditional reward table.
std::vector<double> cumulative_regret(const PlayTrace& trace, const RewardTable& table);

std::vector<long> pull_counts(const PlayTrace& trace, std::size_t n_arms);

}  // namespace ccb

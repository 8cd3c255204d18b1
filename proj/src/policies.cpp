#include "ccb/policies.hpp"

#include <cmath>
#include <stdexcept>

namespace ccb {

namespace {

double beta_draw(double alpha, double beta, Rng& rng) {
    std::gamma_distribution<double> ga(alpha, 1.0);
    std::gamma_distribution<double> gb(beta, 1.0);
    const double a = ga(rng);
    const double b = gb(rng);
    return a / (a + b);
}

}  // namespace

int ts_select(const PolicyState& state, Rng& rng) {
    if (state.arms.empty()) throw std::invalid_argument("ts_select: no arms");
    int best = 0;
    double best_theta = -1.0;
    for (std::size_t a = 0; a < state.arms.size(); ++a) {
        const double theta = beta_draw(state.arms[a].alpha(), state.arms[a].beta(), rng);
        if (theta > best_theta) {
            best_theta = theta;
            best = static_cast<int>(a);
        }
    }
    return best;
}

void update_state(PolicyState& state, int arm, int reward) {
    if (reward != 0 && reward != 1)
        throw std::invalid_argument("update_state: reward must be Bernoulli (0 or 1)");
    if (arm < 0 || static_cast<std::size_t>(arm) >= state.arms.size())
        throw std::out_of_range("update_state: arm out of range");
    auto& s = state.arms[static_cast<std::size_t>(arm)];
    ++s.pulls;
    s.successes += reward;
    ++state.total;
}

double bernoulli_kl(double p, double q) {
    const auto term = [](double a, double b) { return a <= 0.0 ? 0.0 : a * std::log(a / b); };
    return term(p, q) + term(1.0 - p, 1.0 - q);
}

double klucb_index(long count, double mean, long n, double tolerance) {
    if (tolerance <= 0.0) throw std::invalid_argument("klucb_index: tolerance must be > 0");
    if (count <= 0) return 1.0;
    const double logn = std::log(static_cast<double>(n));
    const double threshold = (logn + 3.0 * std::log(std::max(logn, 1.0))) / static_cast<double>(count);
    if (threshold <= 0.0) return mean;
    double lo = mean, hi = 1.0;
    while (hi - lo > tolerance) {
        const double mid = 0.5 * (lo + hi);
        if (bernoulli_kl(mean, mid) > threshold)
            hi = mid;
        else
            lo = mid;
    }
    return lo;
}

int klucb_select(const PolicyState& state, double tolerance) {
    if (state.arms.empty()) throw std::invalid_argument("klucb_select: no arms");
    const long n = std::max(state.total, 1L);
    int best = 0;
    double best_index = -1.0;
    for (std::size_t a = 0; a < state.arms.size(); ++a) {
        const double idx = klucb_index(state.arms[a].pulls, state.arms[a].mean(), n, tolerance);
        if (idx > best_index) {
            best_index = idx;
            best = static_cast<int>(a);
        }
    }
    return best;
}

TrialOutput play_trial(const RewardTable& env, PolicyKind policy, double klucb_tolerance,
                       long horizon, Rng& rng, PolicyState initial_state,
                       const RewardSampler* sampler) {
    if (horizon < 1) throw std::invalid_argument("play_trial: horizon must be >= 1");
    if (initial_state.arms.size() != env.means.size())
        throw std::invalid_argument("play_trial: policy arms must match environment arms");
    TrialOutput out;
    out.state = std::move(initial_state);
    out.trace.rounds.reserve(static_cast<std::size_t>(horizon));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (long round = 0; round < horizon; ++round) {
        const int arm = (policy == PolicyKind::ts) ? ts_select(out.state, rng)
                                                   : klucb_select(out.state, klucb_tolerance);
        int reward;
        if (sampler)
            reward = (*sampler)(arm, rng);
        else
            reward = unif(rng) < env.means[static_cast<std::size_t>(arm)] ? 1 : 0;
        update_state(out.state, arm, reward);
        out.trace.rounds.push_back({arm, reward});
    }
    return out;
}

std::vector<double> cumulative_regret(const PlayTrace& trace, const RewardTable& table) {
    std::vector<double> series;
    series.reserve(trace.size());
    double acc = 0.0;
    for (const Round& r : trace.rounds) {
        acc += table.gap(r.arm);
        series.push_back(acc);
    }
    return series;
}

std::vector<long> pull_counts(const PlayTrace& trace, std::size_t n_arms) {
    std::vector<long> counts(n_arms, 0);
    for (const Round& r : trace.rounds) ++counts[static_cast<std::size_t>(r.arm)];
    return counts;
}

}  // namespace ccb

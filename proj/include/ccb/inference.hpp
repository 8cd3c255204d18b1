#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ccb/arms.hpp"
#include "ccb/scm.hpp"

namespace ccb {

// Unrolled SCM for trial `trial` with the arm applied at slice `trial` and
// the window-restricted history applied at the slices where it was
// implemented. Pre-window slices keep their natural mechanisms and are
// marginalised by whoever consumes the model.
UnrolledScm build_conditioned(const ScmTemplate& tpl, int trial, const Intervention& arm,
                              const History& history, Window window);

// Exact mean of the reward variable at `target_slice`, by exhaustive
// enumeration of every exogenous assignment across all slices.
double exact_mean_reward(const UnrolledScm& scm, int target_slice);

double exact_interventional_mean(const ScmTemplate& tpl, int trial, const Intervention& arm,
                                 const History& history, Window window);

struct RewardTable {
    std::vector<double> means;  // indexed by arm id
    int argmax{-1};             // lowest arm id on exact tie; -1 when empty

    double best() const { return argmax < 0 ? 0.0 : means[static_cast<std::size_t>(argmax)]; }
    double gap(int arm) const { return best() - means[static_cast<std::size_t>(arm)]; }
};

RewardTable exact_reward_table(const ScmTemplate& tpl, const ArmTable& arms, int trial,
                               const History& history, Window window);

struct MonteCarloEstimate {
    double mean{0.0};
    double se{0.0};  // Bernoulli plug-in sqrt(m(1-m)/n)
    long n{0};
};

MonteCarloEstimate monte_carlo_mean(const ScmTemplate& tpl, int trial, const Intervention& arm,
                                    const History& history, Window window, long n, Rng& rng);

struct ObservationalDataset {
    int slices{0};
    int n_vars{0};
    long samples{0};
    std::vector<Value> values;  // sample-major, then slice, then variable

    Value at(long sample, int slice, VarId v) const {
        return values[(static_cast<std::size_t>(sample) * slices + slice) * n_vars + v];
    }
};

// n independent unintervened trajectories (endogenous part only).
// Throws if the SCM carries any intervention or n < 1.
ObservationalDataset generate_observational(const UnrolledScm& scm, long n, Rng& rng);

void write_dataset_csv(const ObservationalDataset& data, const ScmTemplate& tpl, std::ostream& os);
ObservationalDataset read_dataset_csv(const ScmTemplate& tpl, std::istream& is);

// Frequency-table estimate of one mechanism: P(V | endogenous parents),
// exogenous influences marginalised out, with additive smoothing.
struct ConditionalPmf {
    std::vector<ParentRef> endo_parents;
    std::size_t n_values{0};
    std::vector<double> probs;   // rows x n_values
    std::vector<long> counts;    // raw counts, same layout
    std::vector<char> row_seen;  // per parent combination

    std::size_t n_rows() const { return n_values == 0 ? 0 : probs.size() / n_values; }
};

struct EstimatedSem {
    double smoothing{1.0};
    std::vector<ConditionalPmf> t0;  // indexed by VarId
    std::vector<ConditionalPmf> t;
    // Marginals of root mechanisms (no endogenous parents) at t=0; these are
    // the identifiable exogenous estimates in this model class.
    std::vector<std::pair<std::string, std::vector<double>>> root_marginals;
};

EstimatedSem fit_structural_pmfs(const ObservationalDataset& data, const ScmTemplate& tpl,
                                 double smoothing);

void write_estimated_sem(const EstimatedSem& fhat, const ScmTemplate& tpl, std::ostream& os);

// Truncated-factorisation ancestral sampling through the fitted conditionals
// with intervened variables pinned; returns the sample mean of the reward at
// slice `trial`.
double simulate_from_fitted(const EstimatedSem& fhat, const ScmTemplate& tpl, int trial,
                            const Intervention& arm, const History& history, Window window,
                            long n, Rng& rng);

// Pairs of endogenous variables sharing an exogenous parent (bidirected
// edges). Interventional effects of such a variable on its partner are not
// recoverable from the fitted conditionals; the report names them instead of
// hiding the bias.
struct ConfoundingReport {
    std::vector<std::pair<std::string, std::string>> confounded_pairs;

    bool empty() const { return confounded_pairs.empty(); }
    std::string to_string() const;
};

ConfoundingReport confounding_report(const ScmTemplate& tpl);

}  // namespace ccb

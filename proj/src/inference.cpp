#include "ccb/inference.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace ccb {

UnrolledScm build_conditioned(const ScmTemplate& tpl, int trial, const Intervention& arm,
                              const History& history, Window window) {
    if (trial < 0) throw std::invalid_argument("build_conditioned: negative trial");
    if (static_cast<int>(history.size()) != trial)
        throw std::invalid_argument("build_conditioned: history must cover slices 0..trial-1");
    UnrolledScm scm = unroll(tpl, trial + 1);
    if (window == Window::full) {
        for (int i = 0; i < trial; ++i)
            if (!history[static_cast<std::size_t>(i)].is_empty())
                scm = mutilate(scm, i, history[static_cast<std::size_t>(i)]);
    } else if (trial > 0 && !history.back().is_empty()) {
        scm = mutilate(scm, trial - 1, history.back());
    }
    if (!arm.is_empty()) scm = mutilate(scm, trial, arm);
    return scm;
}

double exact_mean_reward(const UnrolledScm& scm, int target_slice) {
    if (target_slice < 0 || target_slice >= scm.slices)
        throw std::out_of_range("exact_mean_reward: target slice out of range");
    CompiledScm c(scm);
    auto ws = c.make_workspace();
    const VarId y = scm.tpl.reward;
    double mean = 0.0;
    c.first_exo(ws);
    do {
        c.evaluate(ws);
        mean += c.exo_weight(ws) * static_cast<double>(c.endo_value(ws, target_slice, y));
    } while (c.next_exo(ws));
    return mean;
}

double exact_interventional_mean(const ScmTemplate& tpl, int trial, const Intervention& arm,
                                 const History& history, Window window) {
    return exact_mean_reward(build_conditioned(tpl, trial, arm, history, window), trial);
}

RewardTable exact_reward_table(const ScmTemplate& tpl, const ArmTable& arms, int trial,
                               const History& history, Window window) {
    RewardTable table;
    table.means.reserve(arms.size());
    for (const Arm& arm : arms.arms)
        table.means.push_back(exact_interventional_mean(tpl, trial, arm.intervention, history, window));
    for (std::size_t i = 0; i < table.means.size(); ++i)
        if (table.argmax < 0 || table.means[i] > table.means[static_cast<std::size_t>(table.argmax)])
            table.argmax = static_cast<int>(i);
    return table;
}

MonteCarloEstimate monte_carlo_mean(const ScmTemplate& tpl, int trial, const Intervention& arm,
                                    const History& history, Window window, long n, Rng& rng) {
    if (n < 1) throw std::invalid_argument("monte_carlo_mean: n must be >= 1");
    const UnrolledScm scm = build_conditioned(tpl, trial, arm, history, window);
    CompiledScm c(scm);
    auto ws = c.make_workspace();
    const VarId y = tpl.reward;
    double sum = 0.0;
    for (long i = 0; i < n; ++i) {
        c.draw_exogenous(rng, ws);
        c.evaluate(ws);
        sum += static_cast<double>(c.endo_value(ws, trial, y));
    }
    MonteCarloEstimate est;
    est.n = n;
    est.mean = sum / static_cast<double>(n);
    est.se = std::sqrt(est.mean * (1.0 - est.mean) / static_cast<double>(n));
    return est;
}

ObservationalDataset generate_observational(const UnrolledScm& scm, long n, Rng& rng) {
    if (scm.has_interventions())
        throw std::invalid_argument("generate_observational: SCM must be unintervened");
    if (n < 1) throw std::invalid_argument("generate_observational: n must be >= 1");
    CompiledScm c(scm);
    auto ws = c.make_workspace();
    ObservationalDataset data;
    data.slices = scm.slices;
    data.n_vars = static_cast<int>(scm.tpl.n_vars());
    data.samples = n;
    data.values.reserve(static_cast<std::size_t>(n) * scm.slices * data.n_vars);
    for (long i = 0; i < n; ++i) {
        c.draw_exogenous(rng, ws);
        c.evaluate(ws);
        for (int s = 0; s < scm.slices; ++s)
            for (int v = 0; v < data.n_vars; ++v) data.values.push_back(c.endo_value(ws, s, v));
    }
    return data;
}

void write_dataset_csv(const ObservationalDataset& data, const ScmTemplate& tpl, std::ostream& os) {
    os << "sample,slice,variable,value\n";
    for (long i = 0; i < data.samples; ++i)
        for (int s = 0; s < data.slices; ++s)
            for (int v = 0; v < data.n_vars; ++v)
                os << i << ',' << s << ',' << tpl.endogenous[static_cast<std::size_t>(v)].name << ','
                   << data.at(i, s, v) << '\n';
}

ObservationalDataset read_dataset_csv(const ScmTemplate& tpl, std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != "sample,slice,variable,value")
        throw std::invalid_argument("dataset csv: bad header");
    struct Row {
        long sample;
        int slice;
        VarId var;
        Value value;
    };
    std::vector<Row> rows;
    long max_sample = -1;
    int max_slice = -1;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string f0, f1, f2, f3;
        if (!std::getline(ss, f0, ',') || !std::getline(ss, f1, ',') || !std::getline(ss, f2, ',') ||
            !std::getline(ss, f3))
            throw std::invalid_argument("dataset csv: malformed row");
        Row r;
        r.sample = std::stol(f0);
        r.slice = std::stoi(f1);
        r.var = tpl.var(f2);
        r.value = std::stoi(f3);
        if (r.var < 0) throw std::invalid_argument("dataset csv: unknown variable " + f2);
        max_sample = std::max(max_sample, r.sample);
        max_slice = std::max(max_slice, r.slice);
        rows.push_back(r);
    }
    ObservationalDataset data;
    data.samples = max_sample + 1;
    data.slices = max_slice + 1;
    data.n_vars = static_cast<int>(tpl.n_vars());
    data.values.assign(static_cast<std::size_t>(data.samples) * data.slices * data.n_vars, 0);
    for (const Row& r : rows)
        data.values[(static_cast<std::size_t>(r.sample) * data.slices + r.slice) * data.n_vars + r.var] =
            r.value;
    return data;
}

namespace {

// Chain-rule conditioning set: everything sampled before v. Within a slice
// that is every variable earlier in the topological order; at t>0 also the
// whole previous slice. Richer than the structural parent set on purpose —
// it keeps every unconfounded interventional query consistent, whereas the
// minimal parent sets absorb bidirected confounding into the wrong rows
// (e.g. P(Y|X) under an X<->Y confounder biases even do(Z) queries upstream
// of X). Confounded queries stay biased either way; see confounding_report.
std::vector<ParentRef> chain_parents(const ScmTemplate& tpl, VarId v, Regime regime) {
    std::vector<ParentRef> parents;
    if (regime == Regime::t)
        for (VarId p = 0; p < static_cast<VarId>(tpl.n_vars()); ++p) parents.push_back({p, -1});
    for (VarId p : topo_order(tpl, regime)) {
        if (p == v) break;
        parents.push_back({p, 0});
    }
    return parents;
}

ConditionalPmf fit_mechanism(const ObservationalDataset& data, const ScmTemplate& tpl, VarId v,
                             Regime regime, double smoothing) {
    ConditionalPmf pmf;
    pmf.endo_parents = chain_parents(tpl, v, regime);
    pmf.n_values = tpl.endogenous[static_cast<std::size_t>(v)].domain.size();
    std::size_t n_rows = 1;
    for (const auto& p : pmf.endo_parents) n_rows *= tpl.endogenous[p.var].domain.size();
    pmf.counts.assign(n_rows * pmf.n_values, 0);
    pmf.row_seen.assign(n_rows, 0);

    const int first_slice = (regime == Regime::t0) ? 0 : 1;
    const int last_slice = (regime == Regime::t0) ? 0 : data.slices - 1;
    for (long i = 0; i < data.samples; ++i) {
        for (int s = first_slice; s <= last_slice; ++s) {
            std::size_t row = 0;
            for (const auto& p : pmf.endo_parents) {
                const Value pv = data.at(i, s + p.lag, p.var);
                row = row * tpl.endogenous[p.var].domain.size() + *tpl.endogenous[p.var].domain.index_of(pv);
            }
            const Value out = data.at(i, s, v);
            const std::size_t k = *tpl.endogenous[static_cast<std::size_t>(v)].domain.index_of(out);
            ++pmf.counts[row * pmf.n_values + k];
            pmf.row_seen[row] = 1;
        }
    }
    pmf.probs.assign(pmf.counts.size(), 0.0);
    for (std::size_t row = 0; row < n_rows; ++row) {
        double total = 0.0;
        for (std::size_t k = 0; k < pmf.n_values; ++k)
            total += static_cast<double>(pmf.counts[row * pmf.n_values + k]) + smoothing;
        if (total <= 0.0) {
            // unsmoothed and unseen: uniform fallback
            for (std::size_t k = 0; k < pmf.n_values; ++k)
                pmf.probs[row * pmf.n_values + k] = 1.0 / static_cast<double>(pmf.n_values);
        } else {
            for (std::size_t k = 0; k < pmf.n_values; ++k)
                pmf.probs[row * pmf.n_values + k] =
                    (static_cast<double>(pmf.counts[row * pmf.n_values + k]) + smoothing) / total;
        }
    }
    return pmf;
}

}  // namespace

EstimatedSem fit_structural_pmfs(const ObservationalDataset& data, const ScmTemplate& tpl,
                                 double smoothing) {
    if (smoothing < 0.0) throw std::invalid_argument("fit_structural_pmfs: smoothing must be >= 0");
    if (data.n_vars != static_cast<int>(tpl.n_vars()))
        throw std::invalid_argument("fit_structural_pmfs: dataset does not match template");
    if (data.samples < 1) throw std::invalid_argument("fit_structural_pmfs: empty dataset");
    if (data.slices < 2)
        throw std::invalid_argument("fit_structural_pmfs: dataset lacks the lag slice");

    EstimatedSem fhat;
    fhat.smoothing = smoothing;
    for (VarId v = 0; v < static_cast<VarId>(tpl.n_vars()); ++v) {
        fhat.t0.push_back(fit_mechanism(data, tpl, v, Regime::t0, smoothing));
        fhat.t.push_back(fit_mechanism(data, tpl, v, Regime::t, smoothing));
        if (fhat.t0.back().endo_parents.empty())
            fhat.root_marginals.emplace_back(tpl.endogenous[static_cast<std::size_t>(v)].name,
                                             fhat.t0.back().probs);
    }
    return fhat;
}

void write_estimated_sem(const EstimatedSem& fhat, const ScmTemplate& tpl, std::ostream& os) {
    const auto dump = [&](const char* tag, const std::vector<ConditionalPmf>& pmfs) {
        os << "[" << tag << "]\n";
        for (VarId v = 0; v < static_cast<VarId>(pmfs.size()); ++v) {
            const auto& pmf = pmfs[static_cast<std::size_t>(v)];
            os << "P(" << tpl.endogenous[static_cast<std::size_t>(v)].name;
            if (!pmf.endo_parents.empty()) {
                os << " |";
                for (const auto& p : pmf.endo_parents) {
                    os << ' ' << tpl.endogenous[p.var].name;
                    if (p.lag == -1) os << "[-1]";
                }
            }
            os << ")\n";
            char buf[32];
            for (std::size_t row = 0; row < pmf.n_rows(); ++row) {
                os << "  row " << row << ':';
                for (std::size_t k = 0; k < pmf.n_values; ++k) {
                    std::snprintf(buf, sizeof buf, " %.6f", pmf.probs[row * pmf.n_values + k]);
                    os << buf;
                }
                if (!pmf.row_seen[row]) os << "  (unseen)";
                os << '\n';
            }
        }
    };
    dump("t0", fhat.t0);
    dump("t", fhat.t);
    os << "[root marginals]\n";
    char buf[32];
    for (const auto& [name, probs] : fhat.root_marginals) {
        os << name << ':';
        for (double p : probs) {
            std::snprintf(buf, sizeof buf, " %.6f", p);
            os << buf;
        }
        os << '\n';
    }
}

double simulate_from_fitted(const EstimatedSem& fhat, const ScmTemplate& tpl, int trial,
                            const Intervention& arm, const History& history, Window window,
                            long n, Rng& rng) {
    if (n < 1) throw std::invalid_argument("simulate_from_fitted: n must be >= 1");
    if (fhat.t0.size() != tpl.n_vars() || fhat.t.size() != tpl.n_vars())
        throw std::invalid_argument("simulate_from_fitted: fitted model does not cover all mechanisms");
    // Resolve the pinned values per slice once.
    const UnrolledScm scm = build_conditioned(tpl, trial, arm, history, window);
    const auto order0 = topo_order(tpl, Regime::t0);
    const auto ordert = topo_order(tpl, Regime::t);
    const int slices = scm.slices;
    const int n_vars = static_cast<int>(tpl.n_vars());
    std::vector<std::size_t> state(static_cast<std::size_t>(slices) * n_vars, 0);  // domain indices
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double sum = 0.0;
    for (long i = 0; i < n; ++i) {
        for (int s = 0; s < slices; ++s) {
            const Regime r = (s == 0) ? Regime::t0 : Regime::t;
            const auto& order = (s == 0) ? order0 : ordert;
            const auto& iv = scm.interventions[static_cast<std::size_t>(s)];
            const auto& pmfs = (s == 0) ? fhat.t0 : fhat.t;
            for (VarId v : order) {
                const auto& dom = tpl.endogenous[static_cast<std::size_t>(v)].domain;
                if (auto pinned = iv.value_for(v)) {
                    state[static_cast<std::size_t>(s) * n_vars + v] = *dom.index_of(*pinned);
                    continue;
                }
                const auto& pmf = pmfs[static_cast<std::size_t>(v)];
                std::size_t row = 0;
                for (const auto& p : pmf.endo_parents)
                    row = row * tpl.endogenous[p.var].domain.size() +
                          state[static_cast<std::size_t>(s + p.lag) * n_vars + p.var];
                const double x = unif(rng);
                double acc = 0.0;
                std::size_t k = 0;
                for (; k + 1 < pmf.n_values; ++k) {
                    acc += pmf.probs[row * pmf.n_values + k];
                    if (x <= acc) break;
                }
                state[static_cast<std::size_t>(s) * n_vars + v] = k;
                (void)r;
            }
        }
        const auto& ydom = tpl.endogenous[static_cast<std::size_t>(tpl.reward)].domain;
        sum += static_cast<double>(ydom.values[state[static_cast<std::size_t>(trial) * n_vars + tpl.reward]]);
    }
    return sum / static_cast<double>(n);
}

ConfoundingReport confounding_report(const ScmTemplate& tpl) {
    ConfoundingReport rep;
    const auto shares_exo = [&](VarId a, VarId b) {
        for (Regime r : {Regime::t0, Regime::t})
            for (int ea : tpl.mechanism(a, r).exo_parents)
                for (int eb : tpl.mechanism(b, r).exo_parents)
                    if (ea == eb) return true;
        return false;
    };
    for (VarId a = 0; a < static_cast<VarId>(tpl.n_vars()); ++a)
        for (VarId b = a + 1; b < static_cast<VarId>(tpl.n_vars()); ++b)
            if (shares_exo(a, b))
                rep.confounded_pairs.emplace_back(tpl.endogenous[static_cast<std::size_t>(a)].name,
                                                  tpl.endogenous[static_cast<std::size_t>(b)].name);
    return rep;
}

std::string ConfoundingReport::to_string() const {
    if (confounded_pairs.empty()) return "no unobserved confounding detected";
    std::string out = "confounded pairs (fitted interventional effects between them may be biased):";
    for (const auto& [a, b] : confounded_pairs) out += " " + a + "<->" + b;
    return out;
}

}  // namespace ccb

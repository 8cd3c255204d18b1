#include "ccb/arms.hpp"

#include <algorithm>
#include <stdexcept>

#include "ccb/inference.hpp"

namespace ccb {

namespace {

// subsets ordered by (size, lexicographic over the index order of `items`)
std::vector<std::vector<std::size_t>> ordered_subsets(std::size_t n) {
    std::vector<std::vector<std::size_t>> subsets;
    subsets.push_back({});
    const std::size_t total = std::size_t{1} << n;
    for (std::size_t mask = 1; mask < total; ++mask) {
        std::vector<std::size_t> s;
        for (std::size_t i = 0; i < n; ++i)
            if (mask & (std::size_t{1} << i)) s.push_back(i);
        subsets.push_back(std::move(s));
    }
    std::stable_sort(subsets.begin(), subsets.end(), [](const auto& a, const auto& b) {
        if (a.size() != b.size()) return a.size() < b.size();
        return a < b;
    });
    return subsets;
}

void expand_values(const std::vector<Variable>& vars, const std::vector<std::size_t>& subset,
                   std::vector<Intervention>& out) {
    // row-major over the subset's domains, last variable fastest
    std::vector<std::size_t> idx(subset.size(), 0);
    while (true) {
        std::vector<std::pair<VarId, Value>> assign;
        for (std::size_t i = 0; i < subset.size(); ++i)
            assign.emplace_back(static_cast<VarId>(subset[i]),
                                vars[subset[i]].domain.values[idx[i]]);
        out.push_back(Intervention::on(std::move(assign)));
        std::size_t k = subset.size();
        while (k-- > 0) {
            if (++idx[k] < vars[subset[k]].domain.size()) break;
            idx[k] = 0;
            if (k == 0) return;
        }
        if (subset.empty()) return;
    }
}

}  // namespace

ArmTable enumerate_all_arms(const std::vector<Variable>& manipulative) {
    std::vector<std::size_t> by_name(manipulative.size());
    for (std::size_t i = 0; i < by_name.size(); ++i) by_name[i] = i;
    std::sort(by_name.begin(), by_name.end(),
              [&](std::size_t a, std::size_t b) { return manipulative[a].name < manipulative[b].name; });

    ArmTable table;
    table.mode = ArmMode::all;
    std::vector<Intervention> interventions;
    for (const auto& subset_pos : ordered_subsets(manipulative.size())) {
        std::vector<std::size_t> subset;
        for (std::size_t p : subset_pos) subset.push_back(by_name[p]);
        expand_values(manipulative, subset, interventions);
    }
    for (std::size_t i = 0; i < interventions.size(); ++i)
        table.arms.push_back({static_cast<int>(i), std::move(interventions[i]), false});
    return table;
}

SliceGraph slice_graph(const ScmTemplate& tpl, Regime r) {
    SliceGraph g;
    for (const auto& v : tpl.endogenous) g.vars.push_back(v.name);
    g.reward = tpl.reward;
    const auto& fns = (r == Regime::t0) ? tpl.functions_t0 : tpl.functions_t;
    for (std::size_t v = 0; v < fns.size(); ++v)
        for (const auto& p : fns[v].endo_parents)
            if (p.lag == 0) g.edges.emplace_back(p.var, static_cast<int>(v));
    return g;
}

namespace {

// directed reachability from `src` to `dst` avoiding the blocked set
bool has_path(const SliceGraph& g, int src, int dst, const std::vector<char>& blocked) {
    std::vector<char> seen(g.vars.size(), 0);
    std::vector<int> stack{src};
    seen[static_cast<std::size_t>(src)] = 1;
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        if (v == dst) return true;
        for (const auto& [a, b] : g.edges)
            if (a == v && !seen[static_cast<std::size_t>(b)] && !blocked[static_cast<std::size_t>(b)]) {
                seen[static_cast<std::size_t>(b)] = 1;
                stack.push_back(b);
            }
    }
    return false;
}

}  // namespace

std::vector<InterventionSet> enumerate_mis(const SliceGraph& g) {
    if (g.reward < 0 || static_cast<std::size_t>(g.reward) >= g.vars.size())
        throw std::invalid_argument("enumerate_mis: reward variable missing from graph");
    const std::size_t n = g.vars.size();
    // ancestors of Y by reverse reachability
    std::vector<char> anc(n, 0);
    std::vector<int> stack{g.reward};
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        for (const auto& [a, b] : g.edges)
            if (b == v && !anc[static_cast<std::size_t>(a)]) {
                anc[static_cast<std::size_t>(a)] = 1;
                stack.push_back(a);
            }
    }
    std::vector<int> candidates;
    for (std::size_t v = 0; v < n; ++v)
        if (anc[v] && static_cast<int>(v) != g.reward) candidates.push_back(static_cast<int>(v));

    std::vector<InterventionSet> result;
    const std::size_t total = std::size_t{1} << candidates.size();
    for (std::size_t mask = 0; mask < total; ++mask) {
        std::vector<int> members;
        for (std::size_t i = 0; i < candidates.size(); ++i)
            if (mask & (std::size_t{1} << i)) members.push_back(candidates[i]);
        bool minimal = true;
        for (int x : members) {
            std::vector<char> blocked(n, 0);
            for (int m : members)
                if (m != x) blocked[static_cast<std::size_t>(m)] = 1;
            if (!has_path(g, x, g.reward, blocked)) {
                minimal = false;
                break;
            }
        }
        if (minimal) {
            InterventionSet s;
            for (int m : members) s.vars.push_back(m);
            std::sort(s.vars.begin(), s.vars.end());
            result.push_back(std::move(s));
        }
    }
    std::stable_sort(result.begin(), result.end(), [](const InterventionSet& a, const InterventionSet& b) {
        if (a.vars.size() != b.vars.size()) return a.vars.size() < b.vars.size();
        return a.vars < b.vars;
    });
    return result;
}

ArmTable pomis_from_config(const ScmTemplate& tpl, const std::vector<InterventionSet>& configured,
                           const std::vector<InterventionSet>& mis) {
    for (const auto& s : configured)
        if (std::find(mis.begin(), mis.end(), s) == mis.end()) {
            std::string names;
            for (VarId v : s.vars) names += (names.empty() ? "" : ",") + tpl.endogenous[v].name;
            throw std::invalid_argument("pomis_from_config: {" + names + "} is not a minimal intervention set");
        }
    // deterministic order: by (size, member names)
    std::vector<InterventionSet> sets = configured;
    std::stable_sort(sets.begin(), sets.end(), [&](const InterventionSet& a, const InterventionSet& b) {
        if (a.vars.size() != b.vars.size()) return a.vars.size() < b.vars.size();
        std::vector<std::string> an, bn;
        for (VarId v : a.vars) an.push_back(tpl.endogenous[v].name);
        for (VarId v : b.vars) bn.push_back(tpl.endogenous[v].name);
        return an < bn;
    });
    ArmTable table;
    table.mode = ArmMode::pomis;
    std::vector<Intervention> interventions;
    for (const auto& s : sets) {
        std::vector<std::size_t> subset;
        for (VarId v : s.vars) subset.push_back(static_cast<std::size_t>(v));
        // within a set, order variables by name to match the catalogue layout
        std::sort(subset.begin(), subset.end(), [&](std::size_t a, std::size_t b) {
            return tpl.endogenous[a].name < tpl.endogenous[b].name;
        });
        expand_values(tpl.endogenous, subset, interventions);
    }
    for (std::size_t i = 0; i < interventions.size(); ++i)
        table.arms.push_back({static_cast<int>(i), std::move(interventions[i]), true});
    return table;
}

TimeInvarianceReport check_mis_time_invariance(const ScmTemplate& tpl, int slices) {
    TimeInvarianceReport rep;
    const auto mis0 = enumerate_mis(slice_graph(tpl, Regime::t0));
    const auto mist = enumerate_mis(slice_graph(tpl, Regime::t));
    rep.invariant = true;
    for (int s = 1; s < slices; ++s) {
        if (mist != mis0) {
            rep.invariant = false;
            rep.detail = "slice " + std::to_string(s) + " MIS family differs from slice 0";
            return rep;
        }
    }
    rep.detail = "MIS family constant across " + std::to_string(slices) + " slices";
    return rep;
}

int empirical_optimal_arm(const ScmTemplate& tpl, const ArmTable& arms, int trial,
                          const History& history, Window window) {
    return exact_reward_table(tpl, arms, trial, history, window).argmax;
}

}  // namespace ccb

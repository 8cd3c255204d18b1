#pragma once

#include <string>
#include <vector>

#include "ccb/scm.hpp"
#include "ccb/types.hpp"

namespace ccb {

// A set of intervention targets (no values attached). Sorted by variable id.
struct InterventionSet {
    std::vector<VarId> vars;

    bool operator==(const InterventionSet&) const = default;
};

enum class ArmMode { all, mis, pomis };

struct Arm {
    int id{};
    Intervention intervention;
    bool pomis{false};
};

struct ArmTable {
    ArmMode mode{ArmMode::all};
    std::vector<Arm> arms;

    std::size_t size() const { return arms.size(); }
};

// All interventions over subsets of the given manipulative variables,
// including do(empty) as arm 0. Variables are ordered by name; subsets by
// (size, lexicographic); value combinations row-major with the last variable
// fastest. For n binary variables this yields 3^n arms.
ArmTable enumerate_all_arms(const std::vector<Variable>& manipulative);

// Intra-slice causal diagram: lag-0 endogenous edges of one regime.
struct SliceGraph {
    std::vector<std::string> vars;
    std::vector<std::pair<int, int>> edges;  // parent -> child
    int reward{-1};
};

SliceGraph slice_graph(const ScmTemplate& tpl, Regime r);

// All minimal intervention sets: subsets S of ancestors(Y) such that every
// member keeps a directed path to Y avoiding the rest of S. Includes the
// empty set. Ordered by (size, lexicographic over member ids).
std::vector<InterventionSet> enumerate_mis(const SliceGraph& g);

// Expand user-configured POMIS sets into an arm table, validating each set
// against the enumerated MIS. do(empty) only appears if configured.
ArmTable pomis_from_config(const ScmTemplate& tpl, const std::vector<InterventionSet>& configured,
                           const std::vector<InterventionSet>& mis);

struct TimeInvarianceReport {
    bool invariant{false};
    std::string detail;
};

// True iff the MIS family of every slice-t subgraph equals the slice-0
// family under the identity variable renaming.
TimeInvarianceReport check_mis_time_invariance(const ScmTemplate& tpl, int slices);

// argmax of the exact conditional reward table, lowest arm id on ties.
int empirical_optimal_arm(const ScmTemplate& tpl, const ArmTable& arms, int trial,
                          const History& history, Window window);

}  // namespace ccb

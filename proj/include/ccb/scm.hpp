#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ccb/rng.hpp"
#include "ccb/types.hpp"

namespace ccb {

// Exogenous variable with an explicit finite pmf. Draws are i.i.d. per slice
// with the same pmf at every slice.
struct ExogenousSpec {
    std::string name;
    std::vector<Value> values;
    std::vector<double> probs;
};

// Endogenous parent reference. lag 0 means the same slice, lag -1 the
// previous slice.
struct ParentRef {
    VarId var{};
    int lag{0};

    bool operator==(const ParentRef&) const = default;
};

// One structural mechanism as an explicit total lookup table over the
// cross-product of its parents' domains. Row index is mixed-radix over
// endogenous parents followed by exogenous parents, last parent fastest.
struct StructuralTable {
    VarId output{};
    std::vector<ParentRef> endo_parents;
    std::vector<int> exo_parents;  // indices into ScmTemplate::exogenous
    std::vector<Value> rows;
};

enum class Regime { t0, t };

struct ScmTemplate {
    std::vector<Variable> endogenous;
    VarId reward{-1};
    std::vector<ExogenousSpec> exogenous;
    std::vector<StructuralTable> functions_t0;  // indexed by output VarId
    std::vector<StructuralTable> functions_t;

    VarId var(const std::string& name) const;
    int exo(const std::string& name) const;
    const StructuralTable& mechanism(VarId v, Regime r) const {
        return (r == Regime::t0 ? functions_t0 : functions_t)[static_cast<std::size_t>(v)];
    }
    std::size_t n_vars() const { return endogenous.size(); }
    std::size_t n_exo() const { return exogenous.size(); }
};

std::size_t table_size(const ScmTemplate& tpl, const StructuralTable& f);
std::size_t table_index(const ScmTemplate& tpl, const StructuralTable& f,
                        std::span<const std::size_t> endo_idx, std::span<const std::size_t> exo_idx);

ValidationReport validate_template(const ScmTemplate& tpl);

// Topological order of the intra-slice (lag 0) edges for one regime.
// Requires a valid template.
std::vector<VarId> topo_order(const ScmTemplate& tpl, Regime r);

// A template propagated over a fixed number of slices, with a (possibly
// empty) intervention at each slice. Immutable after construction.
struct UnrolledScm {
    ScmTemplate tpl;
    int slices{0};
    std::vector<Intervention> interventions;  // one per slice

    bool has_interventions() const;
};

UnrolledScm unroll(const ScmTemplate& tpl, int slices);

// do-operator surgery: pins each target variable at `slice` to its assigned
// value, severing all incoming edges there. Idempotent; repeated targets at
// the same slice are overwritten.
UnrolledScm mutilate(const UnrolledScm& scm, int slice, const Intervention& intervention);

struct Trajectory {
    int slices{0};
    int n_vars{0};
    int n_exo{0};
    std::vector<Value> exo;   // slice-major
    std::vector<Value> endo;  // slice-major

    Value endo_at(int slice, VarId v) const { return endo[static_cast<std::size_t>(slice) * n_vars + v]; }
    Value exo_at(int slice, int u) const { return exo[static_cast<std::size_t>(slice) * n_exo + u]; }

    bool operator==(const Trajectory&) const = default;
};

// Pre-resolved evaluation plan for one UnrolledScm: every table lookup is
// turned into flat-buffer index arithmetic. Safe to share across threads;
// evaluation scratch is caller-provided via Workspace.
class CompiledScm {
  public:
    explicit CompiledScm(const UnrolledScm& scm);

    struct Workspace {
        std::vector<std::size_t> exo_idx;   // value indices, slice-major
        std::vector<std::size_t> endo_idx;  // value indices, slice-major
    };

    Workspace make_workspace() const;

    void draw_exogenous(Rng& rng, Workspace& ws) const;
    // Deterministic forward pass given the exogenous value indices in ws.
    void evaluate(Workspace& ws) const;

    // Probability weight of the exogenous assignment currently in ws.
    double exo_weight(const Workspace& ws) const;

    // Iteration helpers for exhaustive enumeration of exogenous assignments.
    bool first_exo(Workspace& ws) const;
    bool next_exo(Workspace& ws) const;

    Value endo_value(const Workspace& ws, int slice, VarId v) const;
    Trajectory to_trajectory(const Workspace& ws) const;

    int slices() const { return slices_; }
    int n_vars() const { return n_vars_; }
    int n_exo() const { return n_exo_; }
    std::uint64_t exo_assignment_count() const;

  private:
    struct Step {
        std::size_t out;  // index into endo_idx
        bool pinned{false};
        std::size_t pinned_idx{0};
        std::vector<std::size_t> rows_idx;  // table rows as output-domain indices
        // (buffer offset, stride) pairs; endo offsets into endo_idx, exo into exo_idx
        std::vector<std::pair<std::size_t, std::size_t>> endo_terms;
        std::vector<std::pair<std::size_t, std::size_t>> exo_terms;
    };

    int slices_{0};
    int n_vars_{0};
    int n_exo_{0};
    std::vector<Step> steps_;  // all slices, already in evaluation order
    std::vector<std::vector<double>> exo_cum_;    // per exo var, cumulative pmf
    std::vector<std::vector<double>> exo_probs_;  // per exo var
    std::vector<std::vector<Value>> endo_values_; // per endo var, domain values
    std::vector<std::vector<Value>> exo_values_;  // per exo var
};

// Convenience wrappers over CompiledScm.
Trajectory evaluate(const UnrolledScm& scm, std::span<const Value> exo_flat);
Trajectory sample_trajectory(const UnrolledScm& scm, Rng& rng);

}  // namespace ccb

#include "ccb/scm.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ccb {

VarId ScmTemplate::var(const std::string& name) const {
    for (std::size_t i = 0; i < endogenous.size(); ++i)
        if (endogenous[i].name == name) return static_cast<VarId>(i);
    return -1;
}

int ScmTemplate::exo(const std::string& name) const {
    for (std::size_t i = 0; i < exogenous.size(); ++i)
        if (exogenous[i].name == name) return static_cast<int>(i);
    return -1;
}

std::size_t table_size(const ScmTemplate& tpl, const StructuralTable& f) {
    std::size_t n = 1;
    for (const auto& p : f.endo_parents) n *= tpl.endogenous[p.var].domain.size();
    for (int e : f.exo_parents) n *= tpl.exogenous[e].values.size();
    return n;
}

std::size_t table_index(const ScmTemplate& tpl, const StructuralTable& f,
                        std::span<const std::size_t> endo_idx, std::span<const std::size_t> exo_idx) {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < f.endo_parents.size(); ++i)
        idx = idx * tpl.endogenous[f.endo_parents[i].var].domain.size() + endo_idx[i];
    for (std::size_t i = 0; i < f.exo_parents.size(); ++i)
        idx = idx * tpl.exogenous[f.exo_parents[i]].values.size() + exo_idx[i];
    return idx;
}

namespace {

// Kahn's algorithm over intra-slice edges; empty result signals a cycle.
std::vector<VarId> topo_order_checked(const ScmTemplate& tpl, Regime r, bool* ok) {
    const auto& fns = (r == Regime::t0) ? tpl.functions_t0 : tpl.functions_t;
    const std::size_t n = tpl.endogenous.size();
    std::vector<std::vector<VarId>> children(n);
    std::vector<int> indeg(n, 0);
    for (std::size_t v = 0; v < n && v < fns.size(); ++v) {
        for (const auto& p : fns[v].endo_parents) {
            if (p.lag != 0) continue;
            if (p.var < 0 || static_cast<std::size_t>(p.var) >= n) continue;
            children[p.var].push_back(static_cast<VarId>(v));
            ++indeg[v];
        }
    }
    std::vector<VarId> order;
    std::vector<VarId> queue;
    for (std::size_t v = 0; v < n; ++v)
        if (indeg[v] == 0) queue.push_back(static_cast<VarId>(v));
    while (!queue.empty()) {
        // smallest id first so the order is deterministic
        auto it = std::min_element(queue.begin(), queue.end());
        VarId v = *it;
        queue.erase(it);
        order.push_back(v);
        for (VarId c : children[v])
            if (--indeg[c] == 0) queue.push_back(c);
    }
    if (ok) *ok = (order.size() == n);
    return order;
}

void validate_regime(const ScmTemplate& tpl, Regime r, ValidationReport& rep) {
    const char* tag = (r == Regime::t0) ? "functions_t0" : "functions_t";
    const auto& fns = (r == Regime::t0) ? tpl.functions_t0 : tpl.functions_t;
    if (fns.size() != tpl.endogenous.size()) {
        rep.fail(std::string(tag) + ": expected one mechanism per endogenous variable");
        return;
    }
    for (std::size_t v = 0; v < fns.size(); ++v) {
        const auto& f = fns[v];
        const std::string where = std::string(tag) + "[" + tpl.endogenous[v].name + "]";
        if (f.output != static_cast<VarId>(v)) {
            rep.fail(where + ": output id mismatch");
            continue;
        }
        bool refs_ok = true;
        for (const auto& p : f.endo_parents) {
            if (p.var < 0 || static_cast<std::size_t>(p.var) >= tpl.endogenous.size()) {
                rep.fail(where + ": endogenous parent out of range");
                refs_ok = false;
            }
            if (p.lag != 0 && p.lag != -1) {
                rep.fail(where + ": parent lag must be 0 or -1");
                refs_ok = false;
            }
            if (r == Regime::t0 && p.lag == -1) {
                rep.fail(where + ": slice 0 cannot reference slice -1");
                refs_ok = false;
            }
        }
        for (int e : f.exo_parents)
            if (e < 0 || static_cast<std::size_t>(e) >= tpl.exogenous.size()) {
                rep.fail(where + ": exogenous parent out of range");
                refs_ok = false;
            }
        if (!refs_ok) continue;
        const std::size_t want = table_size(tpl, f);
        if (f.rows.size() != want) {
            rep.fail(where + ": partial table (" + std::to_string(f.rows.size()) + " rows, expected " +
                     std::to_string(want) + ")");
            continue;
        }
        for (Value out : f.rows)
            if (!tpl.endogenous[v].domain.contains(out)) {
                rep.fail(where + ": table value " + std::to_string(out) + " outside output domain");
                break;
            }
    }
    bool acyclic = false;
    if (fns.size() == tpl.endogenous.size()) {
        topo_order_checked(tpl, r, &acyclic);
        if (!acyclic) rep.fail(std::string(tag) + ": intra-slice edges contain a cycle");
    }
}

}  // namespace

ValidationReport validate_template(const ScmTemplate& tpl) {
    ValidationReport rep;
    if (tpl.endogenous.empty()) rep.fail("no endogenous variables");
    for (std::size_t i = 0; i < tpl.endogenous.size(); ++i) {
        if (!tpl.endogenous[i].domain.valid())
            rep.fail("variable " + tpl.endogenous[i].name + ": empty or duplicated domain");
        for (std::size_t j = i + 1; j < tpl.endogenous.size(); ++j)
            if (tpl.endogenous[i].name == tpl.endogenous[j].name)
                rep.fail("duplicate variable name " + tpl.endogenous[i].name);
    }
    if (tpl.reward < 0 || static_cast<std::size_t>(tpl.reward) >= tpl.endogenous.size())
        rep.fail("reward variable missing");
    for (std::size_t i = 0; i < tpl.exogenous.size(); ++i) {
        const auto& u = tpl.exogenous[i];
        for (std::size_t j = i + 1; j < tpl.exogenous.size(); ++j)
            if (u.name == tpl.exogenous[j].name) rep.fail("duplicate exogenous name " + u.name);
        if (u.values.empty() || u.values.size() != u.probs.size()) {
            rep.fail("exogenous " + u.name + ": values/pmf size mismatch");
            continue;
        }
        double sum = 0.0;
        for (double p : u.probs) {
            if (p < 0.0 || p > 1.0) rep.fail("exogenous " + u.name + ": probability outside [0,1]");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-12) rep.fail("exogenous " + u.name + ": pmf does not sum to 1");
    }
    validate_regime(tpl, Regime::t0, rep);
    validate_regime(tpl, Regime::t, rep);
    return rep;
}

std::vector<VarId> topo_order(const ScmTemplate& tpl, Regime r) {
    bool ok = false;
    auto order = topo_order_checked(tpl, r, &ok);
    if (!ok) throw std::invalid_argument("topo_order: cyclic intra-slice structure");
    return order;
}

bool UnrolledScm::has_interventions() const {
    for (const auto& iv : interventions)
        if (!iv.is_empty()) return true;
    return false;
}

UnrolledScm unroll(const ScmTemplate& tpl, int slices) {
    if (slices < 1) throw std::invalid_argument("unroll: slices must be >= 1");
    auto rep = validate_template(tpl);
    if (!rep.ok()) throw std::invalid_argument("unroll: invalid template: " + rep.errors.front());
    UnrolledScm scm;
    scm.tpl = tpl;
    scm.slices = slices;
    scm.interventions.assign(static_cast<std::size_t>(slices), Intervention{});
    return scm;
}

UnrolledScm mutilate(const UnrolledScm& scm, int slice, const Intervention& intervention) {
    if (slice < 0 || slice >= scm.slices) throw std::out_of_range("mutilate: slice out of range");
    for (const auto& [var, val] : intervention.assignments) {
        if (var < 0 || static_cast<std::size_t>(var) >= scm.tpl.endogenous.size())
            throw std::invalid_argument("mutilate: unknown variable");
        if (var == scm.tpl.reward)
            throw std::invalid_argument("mutilate: reward variable cannot be intervened");
        if (!scm.tpl.endogenous[var].domain.contains(val))
            throw std::invalid_argument("mutilate: value outside domain of " + scm.tpl.endogenous[var].name);
    }
    UnrolledScm out = scm;
    auto& target = out.interventions[static_cast<std::size_t>(slice)].assignments;
    for (const auto& a : intervention.assignments) {
        auto it = std::find_if(target.begin(), target.end(), [&](const auto& x) { return x.first == a.first; });
        if (it != target.end())
            it->second = a.second;
        else
            target.push_back(a);
    }
    std::sort(target.begin(), target.end());
    return out;
}

CompiledScm::CompiledScm(const UnrolledScm& scm) {
    const ScmTemplate& tpl = scm.tpl;
    slices_ = scm.slices;
    n_vars_ = static_cast<int>(tpl.n_vars());
    n_exo_ = static_cast<int>(tpl.n_exo());

    exo_probs_.reserve(tpl.exogenous.size());
    exo_cum_.reserve(tpl.exogenous.size());
    for (const auto& u : tpl.exogenous) {
        exo_probs_.push_back(u.probs);
        std::vector<double> cum(u.probs.size());
        std::partial_sum(u.probs.begin(), u.probs.end(), cum.begin());
        exo_cum_.push_back(std::move(cum));
        exo_values_.push_back(u.values);
    }
    for (const auto& v : tpl.endogenous) endo_values_.push_back(v.domain.values);

    const auto order0 = topo_order(tpl, Regime::t0);
    const auto ordert = topo_order(tpl, Regime::t);

    for (int s = 0; s < slices_; ++s) {
        const Regime r = (s == 0) ? Regime::t0 : Regime::t;
        const auto& order = (s == 0) ? order0 : ordert;
        const auto& iv = scm.interventions[static_cast<std::size_t>(s)];
        for (VarId v : order) {
            Step st;
            st.out = static_cast<std::size_t>(s) * n_vars_ + v;
            if (auto pinned = iv.value_for(v)) {
                st.pinned = true;
                st.pinned_idx = *tpl.endogenous[v].domain.index_of(*pinned);
            } else {
                const auto& f = tpl.mechanism(v, r);
                // convert table output values to domain indices once
                st.rows_idx.reserve(f.rows.size());
                for (Value out : f.rows) st.rows_idx.push_back(*tpl.endogenous[v].domain.index_of(out));
                // flatten index arithmetic: idx = sum(buf[off] * stride)
                std::size_t stride = 1;
                std::vector<std::pair<std::size_t, std::size_t>> endo_terms, exo_terms;
                for (std::size_t i = f.exo_parents.size(); i-- > 0;) {
                    int e = f.exo_parents[i];
                    exo_terms.emplace_back(static_cast<std::size_t>(s) * n_exo_ + e, stride);
                    stride *= tpl.exogenous[e].values.size();
                }
                for (std::size_t i = f.endo_parents.size(); i-- > 0;) {
                    const auto& p = f.endo_parents[i];
                    endo_terms.emplace_back(static_cast<std::size_t>(s + p.lag) * n_vars_ + p.var, stride);
                    stride *= tpl.endogenous[p.var].domain.size();
                }
                st.endo_terms = std::move(endo_terms);
                st.exo_terms = std::move(exo_terms);
            }
            steps_.push_back(std::move(st));
        }
    }
}

CompiledScm::Workspace CompiledScm::make_workspace() const {
    Workspace ws;
    ws.exo_idx.assign(static_cast<std::size_t>(slices_) * n_exo_, 0);
    ws.endo_idx.assign(static_cast<std::size_t>(slices_) * n_vars_, 0);
    return ws;
}

void CompiledScm::draw_exogenous(Rng& rng, Workspace& ws) const {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int s = 0; s < slices_; ++s) {
        for (int u = 0; u < n_exo_; ++u) {
            const double x = unif(rng);
            const auto& cum = exo_cum_[static_cast<std::size_t>(u)];
            std::size_t i = 0;
            while (i + 1 < cum.size() && x > cum[i]) ++i;
            ws.exo_idx[static_cast<std::size_t>(s) * n_exo_ + u] = i;
        }
    }
}

void CompiledScm::evaluate(Workspace& ws) const {
    for (const Step& st : steps_) {
        if (st.pinned) {
            ws.endo_idx[st.out] = st.pinned_idx;
            continue;
        }
        std::size_t idx = 0;
        for (const auto& [off, stride] : st.endo_terms) idx += ws.endo_idx[off] * stride;
        for (const auto& [off, stride] : st.exo_terms) idx += ws.exo_idx[off] * stride;
        ws.endo_idx[st.out] = st.rows_idx[idx];
    }
}

double CompiledScm::exo_weight(const Workspace& ws) const {
    double w = 1.0;
    for (int s = 0; s < slices_; ++s)
        for (int u = 0; u < n_exo_; ++u)
            w *= exo_probs_[static_cast<std::size_t>(u)][ws.exo_idx[static_cast<std::size_t>(s) * n_exo_ + u]];
    return w;
}

bool CompiledScm::first_exo(Workspace& ws) const {
    std::fill(ws.exo_idx.begin(), ws.exo_idx.end(), 0);
    return !ws.exo_idx.empty() || slices_ > 0;
}

bool CompiledScm::next_exo(Workspace& ws) const {
    for (std::size_t i = ws.exo_idx.size(); i-- > 0;) {
        const std::size_t card = exo_probs_[i % static_cast<std::size_t>(n_exo_)].size();
        if (++ws.exo_idx[i] < card) return true;
        ws.exo_idx[i] = 0;
    }
    return false;
}

Value CompiledScm::endo_value(const Workspace& ws, int slice, VarId v) const {
    return endo_values_[static_cast<std::size_t>(v)]
                       [ws.endo_idx[static_cast<std::size_t>(slice) * n_vars_ + v]];
}

Trajectory CompiledScm::to_trajectory(const Workspace& ws) const {
    Trajectory tr;
    tr.slices = slices_;
    tr.n_vars = n_vars_;
    tr.n_exo = n_exo_;
    tr.exo.reserve(ws.exo_idx.size());
    for (std::size_t i = 0; i < ws.exo_idx.size(); ++i)
        tr.exo.push_back(exo_values_[i % static_cast<std::size_t>(n_exo_)][ws.exo_idx[i]]);
    tr.endo.reserve(ws.endo_idx.size());
    for (std::size_t i = 0; i < ws.endo_idx.size(); ++i)
        tr.endo.push_back(endo_values_[i % static_cast<std::size_t>(n_vars_)][ws.endo_idx[i]]);
    return tr;
}

std::uint64_t CompiledScm::exo_assignment_count() const {
    std::uint64_t n = 1;
    for (int s = 0; s < slices_; ++s)
        for (const auto& p : exo_probs_) n *= p.size();
    return n;
}

Trajectory evaluate(const UnrolledScm& scm, std::span<const Value> exo_flat) {
    CompiledScm c(scm);
    auto ws = c.make_workspace();
    if (exo_flat.size() != ws.exo_idx.size())
        throw std::invalid_argument("evaluate: exogenous assignment has wrong length");
    for (std::size_t i = 0; i < exo_flat.size(); ++i) {
        const auto& spec = scm.tpl.exogenous[i % scm.tpl.n_exo()];
        std::size_t idx = 0;
        bool found = false;
        for (std::size_t k = 0; k < spec.values.size(); ++k)
            if (spec.values[k] == exo_flat[i]) {
                idx = k;
                found = true;
                break;
            }
        if (!found) throw std::invalid_argument("evaluate: exogenous value outside domain of " + spec.name);
        ws.exo_idx[i] = idx;
    }
    c.evaluate(ws);
    return c.to_trajectory(ws);
}

Trajectory sample_trajectory(const UnrolledScm& scm, Rng& rng) {
    CompiledScm c(scm);
    auto ws = c.make_workspace();
    c.draw_exogenous(rng, ws);
    c.evaluate(ws);
    return c.to_trajectory(ws);
}

}  // namespace ccb

#include "ccb/config.hpp"

#include <filesystem>
#include <fstream>
#include <memory>

namespace ccb {

namespace {

using nlohmann::json;

// --- tiny expression language: xor/and/or/not/const, names, name[-1] ---

struct ExprRef {
    std::string name;
    int lag{0};

    bool operator==(const ExprRef&) const = default;
};

struct ExprNode {
    enum class Kind { ref, constant, fn_xor, fn_and, fn_or, fn_not } kind{Kind::ref};
    ExprRef ref;
    Value constant{0};
    std::vector<ExprNode> args;
};

class ExprParser {
  public:
    explicit ExprParser(const std::string& text) : text_(text) {}

    ExprNode parse() {
        ExprNode node = parse_expr();
        skip_ws();
        if (pos_ != text_.size()) fail("trailing input");
        return node;
    }

  private:
    const std::string& text_;
    std::size_t pos_{0};

    [[noreturn]] void fail(const std::string& what) {
        throw ConfigError("expression '" + text_ + "': " + what + " at position " +
                          std::to_string(pos_));
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool eat(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    ExprNode parse_expr() {
        skip_ws();
        if (pos_ >= text_.size()) fail("unexpected end");
        const std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        if (pos_ == start) fail("expected identifier");
        const std::string word = text_.substr(start, pos_ - start);
        if (eat('(')) {
            ExprNode node;
            if (word == "xor")
                node.kind = ExprNode::Kind::fn_xor;
            else if (word == "and")
                node.kind = ExprNode::Kind::fn_and;
            else if (word == "or")
                node.kind = ExprNode::Kind::fn_or;
            else if (word == "not")
                node.kind = ExprNode::Kind::fn_not;
            else if (word == "const")
                node.kind = ExprNode::Kind::constant;
            else
                fail("unknown function '" + word + "'");
            if (node.kind == ExprNode::Kind::constant) {
                skip_ws();
                std::size_t digits = pos_;
                if (pos_ < text_.size() && text_[pos_] == '-') ++pos_;
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
                if (pos_ == digits) fail("const expects an integer");
                node.constant = std::stoi(text_.substr(digits, pos_ - digits));
            } else {
                node.args.push_back(parse_expr());
                while (eat(',')) node.args.push_back(parse_expr());
                if (node.kind == ExprNode::Kind::fn_not && node.args.size() != 1)
                    fail("not expects exactly one argument");
            }
            if (!eat(')')) fail("expected ')'");
            return node;
        }
        ExprNode node;
        node.kind = ExprNode::Kind::ref;
        node.ref.name = word;
        skip_ws();
        if (pos_ + 3 < text_.size() + 1 && text_.compare(pos_, 4, "[-1]") == 0) {
            node.ref.lag = -1;
            pos_ += 4;
        }
        return node;
    }
};

void collect_refs(const ExprNode& node, std::vector<ExprRef>& refs) {
    if (node.kind == ExprNode::Kind::ref) {
        if (std::find(refs.begin(), refs.end(), node.ref) == refs.end()) refs.push_back(node.ref);
        return;
    }
    for (const auto& a : node.args) collect_refs(a, refs);
}

Value eval_expr(const ExprNode& node, const std::vector<ExprRef>& refs,
                const std::vector<Value>& ref_values) {
    switch (node.kind) {
        case ExprNode::Kind::ref: {
            const auto it = std::find(refs.begin(), refs.end(), node.ref);
            return ref_values[static_cast<std::size_t>(it - refs.begin())];
        }
        case ExprNode::Kind::constant:
            return node.constant;
        case ExprNode::Kind::fn_xor: {
            Value acc = 0;
            for (const auto& a : node.args) acc ^= (eval_expr(a, refs, ref_values) != 0 ? 1 : 0);
            return acc;
        }
        case ExprNode::Kind::fn_and: {
            for (const auto& a : node.args)
                if (eval_expr(a, refs, ref_values) == 0) return 0;
            return 1;
        }
        case ExprNode::Kind::fn_or: {
            for (const auto& a : node.args)
                if (eval_expr(a, refs, ref_values) != 0) return 1;
            return 0;
        }
        case ExprNode::Kind::fn_not:
            return eval_expr(node.args.front(), refs, ref_values) == 0 ? 1 : 0;
    }
    return 0;
}

StructuralTable compile_expression(const ScmTemplate& tpl, VarId output, const std::string& text) {
    const ExprNode root = ExprParser(text).parse();
    std::vector<ExprRef> refs;
    collect_refs(root, refs);

    StructuralTable f;
    f.output = output;
    std::vector<ExprRef> endo_refs, exo_refs;
    for (const auto& r : refs) {
        if (tpl.var(r.name) >= 0) {
            f.endo_parents.push_back({tpl.var(r.name), r.lag});
            endo_refs.push_back(r);
        } else if (tpl.exo(r.name) >= 0) {
            if (r.lag != 0) throw ConfigError("exogenous parent " + r.name + " cannot be lagged");
            f.exo_parents.push_back(tpl.exo(r.name));
            exo_refs.push_back(r);
        } else {
            throw ConfigError("unknown variable '" + r.name + "' in expression '" + text + "'");
        }
    }
    // enumerate the parent cross-product in table_index order
    const std::size_t n = table_size(tpl, f);
    std::vector<std::size_t> cards;
    for (const auto& p : f.endo_parents) cards.push_back(tpl.endogenous[p.var].domain.size());
    for (int e : f.exo_parents) cards.push_back(tpl.exogenous[e].values.size());
    std::vector<std::size_t> idx(cards.size(), 0);
    std::vector<ExprRef> ordered_refs = endo_refs;
    ordered_refs.insert(ordered_refs.end(), exo_refs.begin(), exo_refs.end());
    f.rows.reserve(n);
    for (std::size_t row = 0; row < n; ++row) {
        std::vector<Value> ref_values(cards.size());
        for (std::size_t i = 0; i < f.endo_parents.size(); ++i)
            ref_values[i] = tpl.endogenous[f.endo_parents[i].var].domain.values[idx[i]];
        for (std::size_t i = 0; i < f.exo_parents.size(); ++i)
            ref_values[f.endo_parents.size() + i] =
                tpl.exogenous[f.exo_parents[i]].values[idx[f.endo_parents.size() + i]];
        f.rows.push_back(eval_expr(root, ordered_refs, ref_values));
        for (std::size_t k = cards.size(); k-- > 0;) {
            if (++idx[k] < cards[k]) break;
            idx[k] = 0;
        }
    }
    return f;
}

StructuralTable compile_table(const ScmTemplate& tpl, VarId output, const json& jf) {
    StructuralTable f;
    f.output = output;
    for (const auto& jp : jf.value("parents", json::array())) {
        const std::string name = jp.at("name").get<std::string>();
        const VarId v = tpl.var(name);
        if (v < 0) throw ConfigError("table parent '" + name + "' is not an endogenous variable");
        f.endo_parents.push_back({v, jp.value("lag", 0)});
    }
    for (const auto& je : jf.value("exogenous", json::array())) {
        const int e = tpl.exo(je.get<std::string>());
        if (e < 0) throw ConfigError("unknown exogenous parent in table");
        f.exo_parents.push_back(e);
    }
    const std::size_t n = table_size(tpl, f);
    f.rows.assign(n, 0);
    std::vector<char> filled(n, 0);
    const std::size_t arity = f.endo_parents.size() + f.exo_parents.size();
    for (const auto& jrow : jf.at("table")) {
        if (!jrow.is_array() || jrow.size() != arity + 1)
            throw ConfigError("table row must list every parent value plus the output");
        std::vector<std::size_t> endo_idx, exo_idx;
        for (std::size_t i = 0; i < f.endo_parents.size(); ++i) {
            const auto& dom = tpl.endogenous[f.endo_parents[i].var].domain;
            const auto k = dom.index_of(jrow[i].get<Value>());
            if (!k) throw ConfigError("table row value outside parent domain");
            endo_idx.push_back(*k);
        }
        for (std::size_t i = 0; i < f.exo_parents.size(); ++i) {
            const auto& spec = tpl.exogenous[f.exo_parents[i]];
            const Value v = jrow[f.endo_parents.size() + i].get<Value>();
            const auto it = std::find(spec.values.begin(), spec.values.end(), v);
            if (it == spec.values.end()) throw ConfigError("table row value outside exogenous domain");
            exo_idx.push_back(static_cast<std::size_t>(it - spec.values.begin()));
        }
        const std::size_t row = table_index(tpl, f, endo_idx, exo_idx);
        if (filled[row]) throw ConfigError("duplicate table row");
        filled[row] = 1;
        f.rows[row] = jrow[arity].get<Value>();
    }
    for (std::size_t i = 0; i < n; ++i)
        if (!filled[i]) throw ConfigError("table for variable '" +
                                          tpl.endogenous[static_cast<std::size_t>(output)].name +
                                          "' is missing parent combinations");
    return f;
}

}  // namespace

ScmTemplate load_template(const json& j) {
    ScmTemplate tpl;
    try {
        for (const auto& jv : j.at("variables")) {
            Variable v;
            v.name = jv.at("name").get<std::string>();
            for (const auto& d : jv.at("domain")) v.domain.values.push_back(d.get<Value>());
            tpl.endogenous.push_back(std::move(v));
        }
        tpl.reward = tpl.var(j.at("reward").get<std::string>());
        if (tpl.reward < 0) throw ConfigError("reward variable not declared");
        for (const auto& ju : j.at("exogenous")) {
            ExogenousSpec u;
            u.name = ju.at("name").get<std::string>();
            for (const auto& v : ju.at("values")) u.values.push_back(v.get<Value>());
            for (const auto& p : ju.at("pmf")) u.probs.push_back(p.get<double>());
            tpl.exogenous.push_back(std::move(u));
        }
        const auto load_fns = [&](const char* key) {
            std::vector<StructuralTable> fns(tpl.endogenous.size());
            std::vector<char> seen(tpl.endogenous.size(), 0);
            for (const auto& jf : j.at(key)) {
                const std::string name = jf.at("output").get<std::string>();
                const VarId v = tpl.var(name);
                if (v < 0) throw ConfigError(std::string(key) + ": unknown output '" + name + "'");
                if (seen[static_cast<std::size_t>(v)])
                    throw ConfigError(std::string(key) + ": duplicate mechanism for '" + name + "'");
                seen[static_cast<std::size_t>(v)] = 1;
                if (jf.contains("expr"))
                    fns[static_cast<std::size_t>(v)] =
                        compile_expression(tpl, v, jf.at("expr").get<std::string>());
                else
                    fns[static_cast<std::size_t>(v)] = compile_table(tpl, v, jf);
            }
            for (std::size_t v = 0; v < seen.size(); ++v)
                if (!seen[v])
                    throw ConfigError(std::string(key) + ": no mechanism for '" + tpl.endogenous[v].name +
                                      "'");
            return fns;
        };
        tpl.functions_t0 = load_fns("functions_t0");
        tpl.functions_t = load_fns("functions_t");
    } catch (const json::exception& e) {
        throw ConfigError(std::string("scm config: ") + e.what());
    }
    return tpl;
}

ExperimentConfig load_experiment_json(const json& j, const std::string& base_dir) {
    ExperimentConfig cfg;
    try {
        const auto& jscm = j.at("scm");
        if (jscm.is_string()) {
            std::filesystem::path p = jscm.get<std::string>();
            if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
            std::ifstream in(p);
            if (!in) throw ConfigError("cannot open scm file " + p.string());
            cfg.scm_json = json::parse(in);
        } else {
            cfg.scm_json = jscm;
        }
        cfg.tpl = load_template(cfg.scm_json);

        cfg.trials = j.value("trials", cfg.trials);
        if (j.contains("horizons")) {
            cfg.horizons.clear();
            for (const auto& h : j.at("horizons")) cfg.horizons.push_back(h.get<long>());
        } else if (j.contains("horizon")) {
            cfg.horizons = {j.at("horizon").get<long>()};
        }
        if (j.contains("policy")) {
            const std::string name = j.at("policy").at("name").get<std::string>();
            if (name == "ts")
                cfg.policy = PolicyKind::ts;
            else if (name == "klucb")
                cfg.policy = PolicyKind::klucb;
            else
                throw ConfigError("unknown policy '" + name + "'");
            cfg.klucb_tolerance = j.at("policy").value("tolerance", cfg.klucb_tolerance);
        }
        if (j.contains("arms")) {
            const std::string mode = j.at("arms").value("mode", "pomis");
            if (mode == "all")
                cfg.arms.mode = ArmMode::all;
            else if (mode == "mis")
                cfg.arms.mode = ArmMode::mis;
            else if (mode == "pomis")
                cfg.arms.mode = ArmMode::pomis;
            else
                throw ConfigError("unknown arms mode '" + mode + "'");
            for (const auto& js : j.at("arms").value("pomis_sets", json::array())) {
                std::vector<std::string> set;
                for (const auto& n : js) set.push_back(n.get<std::string>());
                cfg.arms.pomis_sets.push_back(std::move(set));
            }
        }
        if (j.contains("window")) {
            const std::string w = j.at("window").get<std::string>();
            if (w == "lag1")
                cfg.window = Window::lag1;
            else if (w == "full")
                cfg.window = Window::full;
            else
                throw ConfigError("unknown window '" + w + "'");
        }
        if (j.contains("estimation")) {
            const std::string m = j.at("estimation").value("mode", "oracle");
            if (m == "oracle")
                cfg.estimation = EstimationMode::oracle_sem;
            else if (m == "observational")
                cfg.estimation = EstimationMode::observational;
            else
                throw ConfigError("unknown estimation mode '" + m + "'");
            cfg.n_obs = j.at("estimation").value("n_obs", cfg.n_obs);
            cfg.smoothing = j.at("estimation").value("smoothing", cfg.smoothing);
            cfg.n_model_samples = j.at("estimation").value("n_model_samples", cfg.n_model_samples);
        }
        cfg.scm_reward_sampling = j.value("scm_reward_sampling", cfg.scm_reward_sampling);
        cfg.replicates = j.value("replicates", cfg.replicates);
        cfg.seed = j.value("seed", cfg.seed);
        cfg.out_dir = j.value("out", cfg.out_dir);
        cfg.jobs = j.value("jobs", cfg.jobs);
        cfg.run_mode = j.value("mode", cfg.run_mode);
        cfg.export_traces = j.value("export_traces", cfg.export_traces);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("experiment config: ") + e.what());
    }
    if (cfg.trials < 1) throw ConfigError("trials must be >= 1");
    if (cfg.replicates < 1) throw ConfigError("replicates must be >= 1");
    for (long h : cfg.horizons)
        if (h < 1) throw ConfigError("horizons must be positive");
    if (cfg.run_mode != "ccb" && cfg.run_mode != "scm-mab" && cfg.run_mode != "both")
        throw ConfigError("mode must be ccb, scm-mab or both");
    return cfg;
}

ExperimentConfig load_experiment_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse: ") + e.what());
    }
    return load_experiment_json(j, std::filesystem::path(path).parent_path().string());
}

nlohmann::json experiment_to_json(const ExperimentConfig& cfg) {
    json j;
    j["scm"] = cfg.scm_json;
    j["trials"] = cfg.trials;
    j["horizons"] = cfg.horizons;
    j["policy"] = {{"name", cfg.policy == PolicyKind::ts ? "ts" : "klucb"},
                   {"tolerance", cfg.klucb_tolerance}};
    json sets = json::array();
    for (const auto& s : cfg.arms.pomis_sets) sets.push_back(s);
    j["arms"] = {{"mode", cfg.arms.mode == ArmMode::all   ? "all"
                          : cfg.arms.mode == ArmMode::mis ? "mis"
                                                          : "pomis"},
                 {"pomis_sets", sets}};
    j["window"] = cfg.window == Window::lag1 ? "lag1" : "full";
    j["estimation"] = {{"mode", cfg.estimation == EstimationMode::oracle_sem ? "oracle" : "observational"},
                       {"n_obs", cfg.n_obs},
                       {"smoothing", cfg.smoothing},
                       {"n_model_samples", cfg.n_model_samples}};
    j["scm_reward_sampling"] = cfg.scm_reward_sampling;
    j["replicates"] = cfg.replicates;
    j["seed"] = cfg.seed;
    j["out"] = cfg.out_dir;
    j["jobs"] = cfg.jobs;
    j["mode"] = cfg.run_mode;
    j["export_traces"] = cfg.export_traces;
    return j;
}

EngineConfig engine_config(const ExperimentConfig& cfg) {
    EngineConfig e;
    e.trials = cfg.trials;
    e.horizons = cfg.horizons;
    e.policy = cfg.policy;
    e.klucb_tolerance = cfg.klucb_tolerance;
    e.window = cfg.window;
    e.estimation = cfg.estimation;
    e.n_obs = cfg.n_obs;
    e.smoothing = cfg.smoothing;
    e.n_model_samples = cfg.n_model_samples;
    e.scm_reward_sampling = cfg.scm_reward_sampling;
    return e;
}

ArmTable build_arm_table(const ExperimentConfig& cfg) {
    const ScmTemplate& tpl = cfg.tpl;
    std::vector<InterventionSet> configured;
    for (const auto& names : cfg.arms.pomis_sets) {
        InterventionSet s;
        for (const auto& n : names) {
            const VarId v = tpl.var(n);
            if (v < 0) throw ConfigError("pomis set references unknown variable '" + n + "'");
            if (v == tpl.reward) throw ConfigError("pomis set cannot contain the reward variable");
            s.vars.push_back(v);
        }
        std::sort(s.vars.begin(), s.vars.end());
        configured.push_back(std::move(s));
    }
    const auto contains = [&](const InterventionSet& s) {
        return std::find(configured.begin(), configured.end(), s) != configured.end();
    };

    if (cfg.arms.mode == ArmMode::pomis) {
        const auto mis = enumerate_mis(slice_graph(tpl, Regime::t0));
        return pomis_from_config(tpl, configured, mis);
    }
    if (cfg.arms.mode == ArmMode::mis) {
        const auto mis = enumerate_mis(slice_graph(tpl, Regime::t0));
        ArmTable table;
        table.mode = ArmMode::mis;
        int next_id = 0;
        for (const auto& s : mis) {
            if (s.vars.empty()) {
                table.arms.push_back({next_id++, Intervention::empty(), contains(s)});
                continue;
            }
            ArmTable expanded = pomis_from_config(tpl, {s}, mis);
            for (auto& arm : expanded.arms) {
                arm.id = next_id++;
                arm.pomis = contains(s);
                table.arms.push_back(std::move(arm));
            }
        }
        return table;
    }
    std::vector<Variable> manipulative;
    std::vector<VarId> ids;
    for (VarId v = 0; v < static_cast<VarId>(tpl.n_vars()); ++v)
        if (v != tpl.reward) {
            manipulative.push_back(tpl.endogenous[static_cast<std::size_t>(v)]);
            ids.push_back(v);
        }
    ArmTable table = enumerate_all_arms(manipulative);
    // remap the positional ids used during enumeration to template ids
    for (auto& arm : table.arms) {
        std::vector<std::pair<VarId, Value>> remapped;
        for (const auto& [pos, val] : arm.intervention.assignments)
            remapped.emplace_back(ids[static_cast<std::size_t>(pos)], val);
        arm.intervention = Intervention::on(std::move(remapped));
        InterventionSet s;
        for (const auto& [v, val] : arm.intervention.assignments) s.vars.push_back(v);
        arm.pomis = contains(s);
    }
    return table;
}

}  // namespace ccb

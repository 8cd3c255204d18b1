#pragma once

#include <cstdio>
#include <ostream>
#include <string>

#include "ccb/arms.hpp"
#include "ccb/inference.hpp"
#include "ccb/policies.hpp"

namespace ccb {

// Deterministic float formatting so artifacts are byte-stable across runs.
inline std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

inline std::string arm_variables(const ScmTemplate& tpl, const Arm& arm) {
    std::string out;
    for (const auto& [v, val] : arm.intervention.assignments) {
        if (!out.empty()) out += ';';
        out += tpl.endogenous[static_cast<std::size_t>(v)].name;
    }
    return out;
}

inline std::string arm_values(const Arm& arm) {
    std::string out;
    for (const auto& [v, val] : arm.intervention.assignments) {
        if (!out.empty()) out += ';';
        out += std::to_string(val);
    }
    return out;
}

inline std::string arm_label(const ScmTemplate& tpl, const Arm& arm) {
    if (arm.intervention.is_empty()) return "do()";
    std::string out = "do(";
    bool first = true;
    for (const auto& [v, val] : arm.intervention.assignments) {
        if (!first) out += ',';
        out += tpl.endogenous[static_cast<std::size_t>(v)].name + "=" + std::to_string(val);
        first = false;
    }
    return out + ")";
}

inline void write_arm_table_csv(const ArmTable& arms, const ScmTemplate& tpl, std::ostream& os) {
    os << "arm_id,variables,values,pomis_flag\n";
    for (const Arm& a : arms.arms)
        os << a.id << ',' << arm_variables(tpl, a) << ',' << arm_values(a) << ','
           << (a.pomis ? 1 : 0) << '\n';
}

inline void write_trace_csv(const PlayTrace& trace, const RewardTable& env, std::ostream& os) {
    os << "round,arm_id,reward,inst_regret,cum_regret,optimal_flag\n";
    double cum = 0.0;
    for (std::size_t r = 0; r < trace.rounds.size(); ++r) {
        const Round& rd = trace.rounds[r];
        const double inst = env.best() - env.means[static_cast<std::size_t>(rd.arm)];
        cum += inst;
        os << r << ',' << rd.arm << ',' << rd.reward << ',' << fmt(inst) << ',' << fmt(cum) << ','
           << (rd.arm == env.argmax ? 1 : 0) << '\n';
    }
}

}  // namespace ccb

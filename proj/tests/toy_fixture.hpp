#pragma once

#include <json.hpp>

#include "ccb/arms.hpp"
#include "ccb/config.hpp"

namespace toy {

// Two-variable-plus-reward DBN: Z -> X -> Y with X<->Y confounding through
// U_XY, lag-1 feedback on all three.
inline const char* kScmJson = R"json({
  "variables": [
    {"name": "Z", "domain": [0, 1]},
    {"name": "X", "domain": [0, 1]},
    {"name": "Y", "domain": [0, 1]}
  ],
  "reward": "Y",
  "exogenous": [
    {"name": "U_Z", "values": [0, 1], "pmf": [0.4, 0.6]},
    {"name": "U_X", "values": [0, 1], "pmf": [0.89, 0.11]},
    {"name": "U_XY", "values": [0, 1], "pmf": [0.49, 0.51]},
    {"name": "U_Y", "values": [0, 1], "pmf": [0.85, 0.15]}
  ],
  "functions_t0": [
    {"output": "Z", "expr": "U_Z"},
    {"output": "X", "expr": "xor(U_X, U_XY, Z)"},
    {"output": "Y", "expr": "xor(const(1), U_Y, U_XY, X)"}
  ],
  "functions_t": [
    {"output": "Z", "expr": "and(U_Z, Z[-1])"},
    {"output": "X", "expr": "xor(U_X, U_XY, Z, X[-1])"},
    {"output": "Y", "expr": "xor(const(1), U_Y, U_XY, and(X, Y[-1]))"}
  ]
})json";

inline ccb::ScmTemplate make() {
    return ccb::load_template(nlohmann::json::parse(kScmJson));
}

// The four singleton arms do(X=0), do(X=1), do(Z=0), do(Z=1), in that order.
inline ccb::ArmTable pomis_arms(const ccb::ScmTemplate& tpl) {
    const auto mis = ccb::enumerate_mis(ccb::slice_graph(tpl, ccb::Regime::t0));
    std::vector<ccb::InterventionSet> sets;
    sets.push_back({{tpl.var("X")}});
    sets.push_back({{tpl.var("Z")}});
    return ccb::pomis_from_config(tpl, sets, mis);
}

}  // namespace toy

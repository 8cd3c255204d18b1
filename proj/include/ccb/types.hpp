#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ccb {

using VarId = int;
using Value = int;

// Ordered finite domain of a discrete variable.
struct Domain {
    std::vector<Value> values;

    std::size_t size() const { return values.size(); }

    std::optional<std::size_t> index_of(Value v) const {
        for (std::size_t i = 0; i < values.size(); ++i)
            if (values[i] == v) return i;
        return std::nullopt;
    }

    bool contains(Value v) const { return index_of(v).has_value(); }

    bool valid() const {
        if (values.empty()) return false;
        for (std::size_t i = 0; i < values.size(); ++i)
            for (std::size_t j = i + 1; j < values.size(); ++j)
                if (values[i] == values[j]) return false;
        return true;
    }
};

struct Variable {
    std::string name;
    Domain domain;
};

// A do()-style assignment, possibly empty. Targets kept sorted by variable id.
struct Intervention {
    std::vector<std::pair<VarId, Value>> assignments;

    static Intervention empty() { return {}; }

    static Intervention on(std::vector<std::pair<VarId, Value>> a) {
        Intervention iv{std::move(a)};
        std::sort(iv.assignments.begin(), iv.assignments.end());
        return iv;
    }

    bool is_empty() const { return assignments.empty(); }

    std::optional<Value> value_for(VarId v) const {
        for (const auto& [var, val] : assignments)
            if (var == v) return val;
        return std::nullopt;
    }

    bool operator==(const Intervention& o) const { return assignments == o.assignments; }
};

// Which part of the implemented-intervention history conditions the current
// trial. lag1 keeps only the immediately preceding trial's intervention;
// full keeps all of them.
enum class Window { lag1, full };

// History of implemented interventions: entry i was implemented at slice i.
using History = std::vector<Intervention>;

struct ValidationReport {
    std::vector<std::string> errors;

    bool ok() const { return errors.empty(); }
    void fail(std::string msg) { errors.push_back(std::move(msg)); }
};

}  // namespace ccb

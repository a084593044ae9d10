#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "fctree/expr.hpp"
#include "fctree/rng.hpp"
#include "fctree/units.hpp"

namespace fctree {

// Child categories are the 8 operators plus TERMINAL; parent contexts are the
// 8 operators plus ROOT. Entries are nonnegative sampling weights.
inline constexpr int kNumOps = 8;
inline constexpr int kNumCategories = kNumOps + 1; // + TERMINAL
inline constexpr int kRootContext = kNumOps;       // row index for ROOT
inline constexpr int kTerminalCategory = kNumOps;  // column index for TERMINAL

struct TransitionMatrix {
    std::array<std::array<double, kNumCategories>, kNumCategories> w{};

    static TransitionMatrix uniform();

    double& at(int context, int category) {
        return w[static_cast<size_t>(context)][static_cast<size_t>(category)];
    }
    double at(int context, int category) const {
        return w[static_cast<size_t>(context)][static_cast<size_t>(category)];
    }

    // Nonnegative everywhere; TERMINAL weight strictly positive in every row
    // (sampler termination). Throws ConfigError.
    void validate() const;
};

// Delimited text: header row of child categories, one labeled row per parent
// context. Whitespace or commas separate fields.
TransitionMatrix load_transition_matrix(const std::string& path);
void save_transition_matrix(const TransitionMatrix& t, const std::string& path);

struct Grammar {
    int max_depth = 6;
    int power_cap = kDefaultPowerCap;
    double div_epsilon = kDivEpsilon;
    TransitionMatrix transition = TransitionMatrix::uniform();
};

// Achievable-units table U(d): which units some well-typed expression of
// depth <= d over the schema's terminals can carry. Computed once per
// (grammar, schema); guarantees the sampler never dead-ends.
class UnitTable {
public:
    static UnitTable build(const Grammar& grammar, const Schema& schema);

    bool achievable(int depth, UnitClass u) const;
    // Deterministically ordered units achievable within the given depth.
    const std::vector<UnitClass>& units_at(int depth) const;
    const std::vector<int>& terminals_with(UnitClass u) const;
    int power_cap() const { return power_cap_; }
    int max_depth() const { return max_depth_; }

private:
    int unit_index(UnitClass u) const;

    int power_cap_ = kDefaultPowerCap;
    int max_depth_ = 0;
    std::vector<std::vector<bool>> reach_;        // [depth][unit index]
    std::vector<std::vector<UnitClass>> ordered_; // [depth]
    std::vector<std::vector<int>> terminals_;     // [unit index] -> column ids
    std::vector<int> no_terminals_;
};

// Draws a well-typed expression of depth <= depth_budget (the grammar's
// max_depth when negative). Child categories are drawn proportionally to the
// transition-matrix weights restricted to categories that can still complete
// a well-typed subtree; terminal and unit choices are uniform over the
// feasible options. Throws ConfigError when required_unit is not achievable.
ExprPtr sample_expr(const Grammar& grammar, const Schema& schema, const UnitTable& table,
                    Rng& rng, std::optional<UnitClass> required_unit = std::nullopt,
                    int depth_budget = -1);

// Convenience overload that builds the table on the fly.
ExprPtr sample_expr(const Grammar& grammar, const Schema& schema, Rng& rng,
                    std::optional<UnitClass> required_unit = std::nullopt,
                    int depth_budget = -1);

} // namespace fctree

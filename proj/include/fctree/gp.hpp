#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <utility>
#include <vector>

#include "fctree/grammar.hpp"
#include "fctree/split.hpp"

namespace fctree {

struct GpConfig {
    int population_size = 500;
    int generations = 70;
    int generations_down = 6; // reduced-generation setting ensembles use
    double crossover_prob = 0.9;
    double mutation_prob = 0.1;
    int tournament_size = 3;
    int elitism = 1;
    int retry_cap = 20;
    uint64_t seed = 0;

    void validate() const;
};

struct Individual {
    ExprPtr expr;
    ExprPtr canon;       // cached canonical form (fitness cache key, tie order)
    double fitness = -1.0;
    bool evaluated = false;
};

// Everything the node-local fitness needs: the dataset for expression
// evaluation plus the gathered label/target/weight slices.
struct FitnessContext {
    const Dataset* ds = nullptr;
    std::vector<int> rows;
    SplitContext split;
    double div_epsilon = kDivEpsilon;
};

FitnessContext make_classification_context(const Dataset& ds, std::vector<int> rows,
                                           const std::vector<double>* row_weights, int min_leaf,
                                           double div_epsilon = kDivEpsilon);
FitnessContext make_regression_context(const Dataset& ds, std::vector<int> rows,
                                       const std::vector<double>& row_targets,
                                       const std::vector<double>* row_weights, int min_leaf,
                                       double div_epsilon = kDivEpsilon);

// Subtree utilities (preorder indexing).
const Expr* subtree_at(const Expr& e, int index);
ExprPtr replace_subtree(const ExprPtr& e, int index, ExprPtr replacement, int power_cap);

// Ramped initialization: target depths cycle 2..max_depth; duplicates allowed.
std::vector<Individual> init_population(const Grammar& grammar, const Schema& schema,
                                        const UnitTable& table, const GpConfig& config, Rng& rng);

// Swaps unit-matched subtrees in both directions; after retry_cap failed
// draws (no unit match or an oversized child) returns copies of the parents.
std::pair<ExprPtr, ExprPtr> crossover_unit_safe(const ExprPtr& a, const ExprPtr& b, Rng& rng,
                                                int retry_cap, const Grammar& grammar);

// Replaces a uniformly chosen subtree with a fresh same-unit sample that
// respects the overall depth cap.
ExprPtr mutate(const ExprPtr& e, const Grammar& grammar, const Schema& schema,
               const UnitTable& table, Rng& rng, int retry_cap);

// Generational loop with tournament selection and elitism. Fitness is the
// node split criterion; evaluation parallelizes over unique individuals and
// is cached by canonical form. Ties in selection and best-tracking break by
// fewer nodes, then canonical order. Returns the best-ever expression, or
// nullopt when nothing ever scores above zero (caller decides the fallback).
std::optional<ExprPtr> evolve(const Grammar& grammar, const Schema& schema,
                              const FitnessContext& fitness, const GpConfig& config, Rng& rng,
                              std::ostream* trace = nullptr,
                              std::vector<double>* best_per_generation = nullptr);

} // namespace fctree

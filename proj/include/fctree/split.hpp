#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fctree/expr.hpp"

namespace fctree {

class Dataset;

enum class Criterion : uint8_t { InfoGain, MseReduction };

const char* criterion_name(Criterion c);
std::optional<Criterion> criterion_from_string(const std::string& s);

// Scores within this of each other count as tied; ties resolve to the
// smaller threshold, and a best score at or below it means "no split".
// Keeps threshold choice stable against last-bit float noise.
inline constexpr double kScoreEps = 1e-12;

struct SplitEval {
    double threshold = 0.0;
    double score = 0.0; // information gain in bits, or MSE reduction
    int left_count = 0;
    int right_count = 0;
    double left_weight = 0.0;
    double right_weight = 0.0;
};

// Weighted binary entropy in bits. Throws TrainError on zero total weight.
double entropy(std::span<const int8_t> labels, std::span<const double> weights);

struct ThresholdScratch {
    std::vector<int> order;
};

// One sorted sweep over midpoints between consecutive distinct values.
// Returns the gain-maximizing valid split (both sides >= min_leaf rows,
// positive weight) or nullopt when none clears kScoreEps.
std::optional<SplitEval> best_threshold_info_gain(std::span<const double> values,
                                                  std::span<const int8_t> labels,
                                                  std::span<const double> weights, int min_leaf,
                                                  ThresholdScratch* scratch = nullptr);

// Same sweep maximizing weighted variance reduction.
std::optional<SplitEval> best_threshold_mse(std::span<const double> values,
                                            std::span<const double> targets,
                                            std::span<const double> weights, int min_leaf,
                                            ThresholdScratch* scratch = nullptr);

// Node-local view the criterion runs against: rows gathered once, then every
// candidate feature is scored against the same arrays.
struct SplitContext {
    Criterion criterion = Criterion::InfoGain;
    std::vector<int8_t> labels;   // classification
    std::vector<double> targets;  // regression
    std::vector<double> weights;
    int min_leaf = 5;

    std::optional<SplitEval> best_threshold(std::span<const double> values,
                                            ThresholdScratch* scratch = nullptr) const;
};

// The GP fitness: evaluate the expression on the node's rows and score its
// best threshold; degenerate expressions score 0 rather than failing.
double fitness_of_expr(const Expr& expr, const Dataset& ds, std::span<const int> rows,
                       const SplitContext& ctx, EvalScratch& eval_scratch,
                       double div_epsilon = kDivEpsilon, ThresholdScratch* scratch = nullptr);

} // namespace fctree

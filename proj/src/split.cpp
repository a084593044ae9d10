#include "fctree/split.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fctree/dataset.hpp"
#include "fctree/errors.hpp"

namespace fctree {

const char* criterion_name(Criterion c) {
    return c == Criterion::InfoGain ? "info_gain" : "mse";
}

std::optional<Criterion> criterion_from_string(const std::string& s) {
    if (s == "info_gain") return Criterion::InfoGain;
    if (s == "mse") return Criterion::MseReduction;
    return std::nullopt;
}

namespace {

inline double entropy_pair(double w0, double w1) {
    const double w = w0 + w1;
    double h = 0.0;
    if (w0 > 0.0) {
        const double q = w0 / w;
        h -= q * std::log2(q);
    }
    if (w1 > 0.0) {
        const double q = w1 / w;
        h -= q * std::log2(q);
    }
    return h;
}

inline double mse_of(double sw, double swy, double swy2) {
    const double m = (swy2 - swy * swy / sw) / sw;
    return m > 0.0 ? m : 0.0;
}

void sort_order(std::span<const double> values, std::vector<int>& order) {
    order.resize(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const double va = values[static_cast<size_t>(a)];
        const double vb = values[static_cast<size_t>(b)];
        if (va != vb) return va < vb;
        return a < b;
    });
}

} // namespace

double entropy(std::span<const int8_t> labels, std::span<const double> weights) {
    if (labels.size() != weights.size()) throw DataError("entropy: length mismatch");
    double w0 = 0.0;
    double w1 = 0.0;
    for (size_t i = 0; i < labels.size(); ++i) {
        (labels[i] == 0 ? w0 : w1) += weights[i];
    }
    if (!(w0 + w1 > 0.0)) throw TrainError("entropy: zero total weight");
    return entropy_pair(w0, w1);
}

std::optional<SplitEval> best_threshold_info_gain(std::span<const double> values,
                                                  std::span<const int8_t> labels,
                                                  std::span<const double> weights, int min_leaf,
                                                  ThresholdScratch* scratch) {
    const size_t n = values.size();
    if (labels.size() != n || weights.size() != n) {
        throw DataError("best_threshold_info_gain: length mismatch");
    }
    if (n < 2) return std::nullopt;
    double w0 = 0.0;
    double w1 = 0.0;
    for (size_t i = 0; i < n; ++i) (labels[i] == 0 ? w0 : w1) += weights[i];
    const double w_total = w0 + w1;
    if (!(w_total > 0.0)) return std::nullopt;
    const double h_parent = entropy_pair(w0, w1);

    ThresholdScratch local;
    ThresholdScratch& s = scratch != nullptr ? *scratch : local;
    sort_order(values, s.order);

    std::optional<SplitEval> best;
    double lw0 = 0.0;
    double lw1 = 0.0;
    int lcount = 0;
    for (size_t i = 0; i + 1 < n; ++i) {
        const int row = s.order[i];
        (labels[static_cast<size_t>(row)] == 0 ? lw0 : lw1) += weights[static_cast<size_t>(row)];
        ++lcount;
        const double v = values[static_cast<size_t>(row)];
        const double v_next = values[static_cast<size_t>(s.order[i + 1])];
        if (v == v_next) continue;
        const int rcount = static_cast<int>(n) - lcount;
        if (lcount < min_leaf || rcount < min_leaf) continue;
        const double lw = lw0 + lw1;
        const double rw = w_total - lw;
        if (!(lw > 0.0) || !(rw > 0.0)) continue;
        const double gain = h_parent - (lw / w_total) * entropy_pair(lw0, lw1) -
                            (rw / w_total) * entropy_pair(w0 - lw0, w1 - lw1);
        if (!best || gain > best->score + kScoreEps) {
            best = SplitEval{0.5 * (v + v_next), gain, lcount, rcount, lw, rw};
        }
    }
    if (best && best->score > kScoreEps) return best;
    return std::nullopt;
}

std::optional<SplitEval> best_threshold_mse(std::span<const double> values,
                                            std::span<const double> targets,
                                            std::span<const double> weights, int min_leaf,
                                            ThresholdScratch* scratch) {
    const size_t n = values.size();
    if (targets.size() != n || weights.size() != n) {
        throw DataError("best_threshold_mse: length mismatch");
    }
    if (n < 2) return std::nullopt;
    double sw = 0.0;
    double swy = 0.0;
    double swy2 = 0.0;
    for (size_t i = 0; i < n; ++i) {
        sw += weights[i];
        swy += weights[i] * targets[i];
        swy2 += weights[i] * targets[i] * targets[i];
    }
    if (!(sw > 0.0)) return std::nullopt;
    const double mse_parent = mse_of(sw, swy, swy2);

    ThresholdScratch local;
    ThresholdScratch& s = scratch != nullptr ? *scratch : local;
    sort_order(values, s.order);

    std::optional<SplitEval> best;
    double lsw = 0.0;
    double lswy = 0.0;
    double lswy2 = 0.0;
    int lcount = 0;
    for (size_t i = 0; i + 1 < n; ++i) {
        const int row = s.order[i];
        const double w = weights[static_cast<size_t>(row)];
        const double y = targets[static_cast<size_t>(row)];
        lsw += w;
        lswy += w * y;
        lswy2 += w * y * y;
        ++lcount;
        const double v = values[static_cast<size_t>(row)];
        const double v_next = values[static_cast<size_t>(s.order[i + 1])];
        if (v == v_next) continue;
        const int rcount = static_cast<int>(n) - lcount;
        if (lcount < min_leaf || rcount < min_leaf) continue;
        const double rsw = sw - lsw;
        if (!(lsw > 0.0) || !(rsw > 0.0)) continue;
        const double reduction = mse_parent - (lsw / sw) * mse_of(lsw, lswy, lswy2) -
                                 (rsw / sw) * mse_of(rsw, swy - lswy, swy2 - lswy2);
        if (!best || reduction > best->score + kScoreEps) {
            best = SplitEval{0.5 * (v + v_next), reduction, lcount, rcount, lsw, rsw};
        }
    }
    if (best && best->score > kScoreEps) return best;
    return std::nullopt;
}

std::optional<SplitEval> SplitContext::best_threshold(std::span<const double> values,
                                                      ThresholdScratch* scratch) const {
    if (criterion == Criterion::InfoGain) {
        return best_threshold_info_gain(values, labels, weights, min_leaf, scratch);
    }
    return best_threshold_mse(values, targets, weights, min_leaf, scratch);
}

double fitness_of_expr(const Expr& expr, const Dataset& ds, std::span<const int> rows,
                       const SplitContext& ctx, EvalScratch& eval_scratch, double div_epsilon,
                       ThresholdScratch* scratch) {
    static thread_local std::vector<double> values;
    evaluate_into(expr, ds, rows, values, eval_scratch, div_epsilon);
    const auto eval = ctx.best_threshold(values, scratch);
    return eval ? eval->score : 0.0;
}

} // namespace fctree

#include "fctree/gp.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "fctree/dataset.hpp"
#include "fctree/errors.hpp"
#include "fctree/parallel.hpp"

namespace fctree {

void GpConfig::validate() const {
    if (population_size < 2) throw ConfigError("gp.population_size must be >= 2");
    if (generations < 1) throw ConfigError("gp.generations must be >= 1");
    if (generations_down < 1) throw ConfigError("gp.generations_down must be >= 1");
    if (crossover_prob < 0.0 || crossover_prob > 1.0 || mutation_prob < 0.0 ||
        mutation_prob > 1.0) {
        throw ConfigError("gp probabilities must lie in [0, 1]");
    }
    if (tournament_size < 1) throw ConfigError("gp.tournament_size must be >= 1");
    if (elitism < 0 || elitism >= population_size) {
        throw ConfigError("gp.elitism must be in [0, population_size)");
    }
    if (retry_cap < 1) throw ConfigError("gp.retry_cap must be >= 1");
}

FitnessContext make_classification_context(const Dataset& ds, std::vector<int> rows,
                                           const std::vector<double>* row_weights, int min_leaf,
                                           double div_epsilon) {
    FitnessContext ctx;
    ctx.ds = &ds;
    ctx.split.criterion = Criterion::InfoGain;
    ctx.split.min_leaf = min_leaf;
    ctx.div_epsilon = div_epsilon;
    ctx.split.labels.reserve(rows.size());
    ctx.split.weights.reserve(rows.size());
    const auto& w = row_weights != nullptr ? *row_weights : ds.weights;
    for (int r : rows) {
        ctx.split.labels.push_back(ds.labels[static_cast<size_t>(r)]);
        ctx.split.weights.push_back(w[static_cast<size_t>(r)]);
    }
    ctx.rows = std::move(rows);
    return ctx;
}

FitnessContext make_regression_context(const Dataset& ds, std::vector<int> rows,
                                       const std::vector<double>& row_targets,
                                       const std::vector<double>* row_weights, int min_leaf,
                                       double div_epsilon) {
    FitnessContext ctx;
    ctx.ds = &ds;
    ctx.split.criterion = Criterion::MseReduction;
    ctx.split.min_leaf = min_leaf;
    ctx.div_epsilon = div_epsilon;
    ctx.split.targets.reserve(rows.size());
    ctx.split.weights.reserve(rows.size());
    const auto& w = row_weights != nullptr ? *row_weights : ds.weights;
    for (int r : rows) {
        ctx.split.targets.push_back(row_targets[static_cast<size_t>(r)]);
        ctx.split.weights.push_back(w[static_cast<size_t>(r)]);
    }
    ctx.rows = std::move(rows);
    return ctx;
}

// ----------------------------------------------------- subtree navigation --

const Expr* subtree_at(const Expr& e, int index) {
    if (index == 0) return &e;
    int idx = index - 1;
    if (e.left) {
        if (idx < e.left->nodes) return subtree_at(*e.left, idx);
        idx -= e.left->nodes;
    }
    return subtree_at(*e.right, idx);
}

namespace {

// Owning handle to the subtree at a preorder index.
ExprPtr subtree_ptr_at(const ExprPtr& e, int index) {
    if (index == 0) return e;
    int idx = index - 1;
    if (e->left) {
        if (idx < e->left->nodes) return subtree_ptr_at(e->left, idx);
        idx -= e->left->nodes;
    }
    return subtree_ptr_at(e->right, idx);
}

} // namespace

ExprPtr replace_subtree(const ExprPtr& e, int index, ExprPtr replacement, int power_cap) {
    if (index == 0) return replacement;
    int idx = index - 1;
    if (e->left && idx < e->left->nodes) {
        ExprPtr nl = replace_subtree(e->left, idx, std::move(replacement), power_cap);
        if (op_is_unary(e->op)) return make_unary(e->op, std::move(nl), power_cap);
        return make_binary(e->op, std::move(nl), e->right, power_cap);
    }
    idx -= e->left->nodes;
    ExprPtr nr = replace_subtree(e->right, idx, std::move(replacement), power_cap);
    return make_binary(e->op, e->left, std::move(nr), power_cap);
}

namespace {

// 1-based depth of the node at the given preorder index.
int path_depth(const Expr& e, int index) {
    if (index == 0) return 1;
    int idx = index - 1;
    if (e.left && idx < e.left->nodes) return 1 + path_depth(*e.left, idx);
    return 1 + path_depth(*e.right, idx - e.left->nodes);
}

void collect_unit_matches(const Expr& e, UnitClass unit, int base, std::vector<int>& out) {
    if (e.unit == unit) out.push_back(base);
    if (e.left) collect_unit_matches(*e.left, unit, base + 1, out);
    if (e.right) collect_unit_matches(*e.right, unit, base + 1 + e.left->nodes, out);
}

} // namespace

// -------------------------------------------------------- init / variation

std::vector<Individual> init_population(const Grammar& grammar, const Schema& schema,
                                        const UnitTable& table, const GpConfig& config,
                                        Rng& rng) {
    config.validate();
    if (schema.empty()) throw ConfigError("init_population: empty schema");
    std::vector<Individual> pop;
    pop.reserve(static_cast<size_t>(config.population_size));
    const int lo = std::min(2, grammar.max_depth);
    const int span = grammar.max_depth - lo + 1;
    for (int i = 0; i < config.population_size; ++i) {
        const int target = lo + (span > 0 ? i % span : 0);
        Individual ind;
        ind.expr = sample_expr(grammar, schema, table, rng, std::nullopt, target);
        ind.canon = canonicalize(ind.expr);
        pop.push_back(std::move(ind));
    }
    return pop;
}

std::pair<ExprPtr, ExprPtr> crossover_unit_safe(const ExprPtr& a, const ExprPtr& b, Rng& rng,
                                                int retry_cap, const Grammar& grammar) {
    std::vector<int> matches;
    for (int attempt = 0; attempt < retry_cap; ++attempt) {
        const int ia = rng.uniform_int(0, a->nodes - 1);
        const Expr* sa = subtree_at(*a, ia);
        matches.clear();
        collect_unit_matches(*b, sa->unit, 0, matches);
        if (matches.empty()) continue;
        const int ib = matches[static_cast<size_t>(rng.bounded(matches.size()))];
        ExprPtr sub_a = subtree_ptr_at(a, ia);
        ExprPtr sub_b = subtree_ptr_at(b, ib);
        ExprPtr child_a = replace_subtree(a, ia, std::move(sub_b), grammar.power_cap);
        ExprPtr child_b = replace_subtree(b, ib, std::move(sub_a), grammar.power_cap);
        if (child_a->depth > grammar.max_depth || child_b->depth > grammar.max_depth) continue;
        return {std::move(child_a), std::move(child_b)};
    }
    return {a, b};
}

ExprPtr mutate(const ExprPtr& e, const Grammar& grammar, const Schema& schema,
               const UnitTable& table, Rng& rng, int retry_cap) {
    for (int attempt = 0; attempt < retry_cap; ++attempt) {
        const int idx = rng.uniform_int(0, e->nodes - 1);
        const Expr* target = subtree_at(*e, idx);
        const int budget = grammar.max_depth - path_depth(*e, idx) + 1;
        if (!table.achievable(budget, target->unit)) continue;
        ExprPtr fresh = sample_expr(grammar, schema, table, rng, target->unit, budget);
        return replace_subtree(e, idx, std::move(fresh), grammar.power_cap);
    }
    return e;
}

// ------------------------------------------------------------------ evolve

namespace {

double tie_eps(double a, double b) {
    return kScoreEps * std::max(1.0, std::max(std::fabs(a), std::fabs(b)));
}

// Strict "a beats b": eps fitness ties resolve by parsimony, then canonical
// order. The eps keeps last-bit float noise from defeating the parsimony rule
// for evaluation-equivalent expressions.
bool beats(const Individual& a, const Individual& b) {
    const double eps = tie_eps(a.fitness, b.fitness);
    if (a.fitness > b.fitness + eps) return true;
    if (b.fitness > a.fitness + eps) return false;
    if (a.expr->nodes != b.expr->nodes) return a.expr->nodes < b.expr->nodes;
    return compare_exprs(*a.canon, *b.canon) < 0;
}

// Exact-fitness comparator for elites: never trades fitness away, so the
// per-generation best trace is monotone.
bool elite_beats(const Individual& a, const Individual& b) {
    if (a.fitness != b.fitness) return a.fitness > b.fitness;
    if (a.expr->nodes != b.expr->nodes) return a.expr->nodes < b.expr->nodes;
    return compare_exprs(*a.canon, *b.canon) < 0;
}

class FitnessCache {
public:
    // Evaluates every unevaluated individual, reusing results for canonical
    // duplicates. The parallel loop writes slot-indexed results only, so the
    // outcome is independent of scheduling.
    void evaluate(std::vector<Individual>& pop, const FitnessContext& ctx) {
        std::vector<size_t> missing;
        std::vector<std::string> keys(pop.size());
        for (size_t i = 0; i < pop.size(); ++i) {
            if (pop[i].evaluated) continue;
            keys[i] = pretty_print(*pop[i].canon);
            const auto it = cache_.find(keys[i]);
            if (it != cache_.end()) {
                pop[i].fitness = it->second;
                pop[i].evaluated = true;
            } else {
                missing.push_back(i);
            }
        }
        std::unordered_map<std::string, int> slot_of;
        std::vector<size_t> representative;
        for (size_t i : missing) {
            if (slot_of.emplace(keys[i], static_cast<int>(representative.size())).second) {
                representative.push_back(i);
            }
        }
        std::vector<double> results(representative.size());
        par::for_index(static_cast<int>(representative.size()), [&](int k) {
            thread_local EvalScratch eval_scratch;
            thread_local ThresholdScratch thr_scratch;
            const Individual& ind = pop[representative[static_cast<size_t>(k)]];
            results[static_cast<size_t>(k)] =
                fitness_of_expr(*ind.expr, *ctx.ds, ctx.rows, ctx.split, eval_scratch,
                                ctx.div_epsilon, &thr_scratch);
        });
        for (const auto& [key, slot] : slot_of) {
            cache_.emplace(key, results[static_cast<size_t>(slot)]);
        }
        for (size_t i : missing) {
            pop[i].fitness = cache_.at(keys[i]);
            pop[i].evaluated = true;
        }
    }

private:
    std::unordered_map<std::string, double> cache_;
};

int tournament_pick(const std::vector<Individual>& pop, int size, Rng& rng) {
    int winner = rng.uniform_int(0, static_cast<int>(pop.size()) - 1);
    for (int k = 1; k < size; ++k) {
        const int challenger = rng.uniform_int(0, static_cast<int>(pop.size()) - 1);
        if (beats(pop[static_cast<size_t>(challenger)], pop[static_cast<size_t>(winner)])) {
            winner = challenger;
        }
    }
    return winner;
}

} // namespace

std::optional<ExprPtr> evolve(const Grammar& grammar, const Schema& schema,
                              const FitnessContext& fitness, const GpConfig& config, Rng& rng,
                              std::ostream* trace, std::vector<double>* best_per_generation) {
    config.validate();
    const UnitTable table = UnitTable::build(grammar, schema);
    FitnessCache cache;

    std::vector<Individual> pop = init_population(grammar, schema, table, config, rng);
    cache.evaluate(pop, fitness);

    Individual best = pop[0];
    auto consider = [&](const Individual& ind) {
        if (beats(ind, best)) best = ind;
    };
    for (const auto& ind : pop) consider(ind);

    auto record = [&](int gen) {
        double top = 0.0;
        for (const auto& ind : pop) top = std::max(top, ind.fitness);
        if (best_per_generation != nullptr) best_per_generation->push_back(top);
        if (trace != nullptr) {
            (*trace) << "gen " << gen << " best_fitness " << top << " best_ever " << best.fitness
                     << '\n';
        }
    };
    record(0);

    for (int gen = 1; gen <= config.generations; ++gen) {
        std::vector<Individual> next;
        next.reserve(pop.size());
        if (config.elitism > 0) {
            std::vector<int> order(pop.size());
            for (size_t i = 0; i < pop.size(); ++i) order[i] = static_cast<int>(i);
            std::partial_sort(order.begin(), order.begin() + config.elitism, order.end(),
                              [&](int x, int y) {
                                  return elite_beats(pop[static_cast<size_t>(x)],
                                                     pop[static_cast<size_t>(y)]);
                              });
            for (int k = 0; k < config.elitism; ++k) {
                next.push_back(pop[static_cast<size_t>(order[static_cast<size_t>(k)])]);
            }
        }
        while (next.size() < pop.size()) {
            const int pa = tournament_pick(pop, config.tournament_size, rng);
            ExprPtr children[2];
            int n_children = 1;
            if (rng.bernoulli(config.crossover_prob)) {
                const int pb = tournament_pick(pop, config.tournament_size, rng);
                auto [ca, cb] = crossover_unit_safe(pop[static_cast<size_t>(pa)].expr,
                                                    pop[static_cast<size_t>(pb)].expr, rng,
                                                    config.retry_cap, grammar);
                children[0] = std::move(ca);
                children[1] = std::move(cb);
                n_children = 2;
            } else {
                children[0] = pop[static_cast<size_t>(pa)].expr;
            }
            for (int c = 0; c < n_children && next.size() < pop.size(); ++c) {
                ExprPtr expr = std::move(children[c]);
                if (rng.bernoulli(config.mutation_prob)) {
                    expr = mutate(expr, grammar, schema, table, rng, config.retry_cap);
                }
                Individual ind;
                ind.canon = canonicalize(expr);
                ind.expr = std::move(expr);
                next.push_back(std::move(ind));
            }
        }
        pop = std::move(next);
        cache.evaluate(pop, fitness);
        for (const auto& ind : pop) consider(ind);
        record(gen);
    }

    if (!(best.fitness > 0.0)) return std::nullopt;
    return best.expr;
}

} // namespace fctree

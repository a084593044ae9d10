#include "fctree/grammar.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "fctree/errors.hpp"

namespace fctree {

namespace {

const std::array<std::string, kNumCategories> kCategoryNames = {
    "add", "sub", "mul", "div", "cos", "sin", "sq", "sqrt", "terminal"};

const std::array<std::string, kNumCategories> kContextNames = {
    "add", "sub", "mul", "div", "cos", "sin", "sq", "sqrt", "root"};

int name_index(const std::array<std::string, kNumCategories>& names, const std::string& token) {
    for (int i = 0; i < kNumCategories; ++i) {
        if (names[static_cast<size_t>(i)] == token) return i;
    }
    return -1;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',' || c == ' ' || c == '\t' || c == '\r') {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

} // namespace

TransitionMatrix TransitionMatrix::uniform() {
    TransitionMatrix t;
    for (auto& row : t.w) row.fill(1.0);
    return t;
}

void TransitionMatrix::validate() const {
    for (int r = 0; r < kNumCategories; ++r) {
        for (int c = 0; c < kNumCategories; ++c) {
            const double v = at(r, c);
            if (!(v >= 0.0) || !std::isfinite(v)) {
                throw ConfigError("transition matrix entry (" + kContextNames[size_t(r)] + ", " +
                                  kCategoryNames[size_t(c)] + ") must be finite and nonnegative");
            }
        }
        if (!(at(r, kTerminalCategory) > 0.0)) {
            throw ConfigError("transition matrix row '" + kContextNames[size_t(r)] +
                              "' needs a positive terminal weight");
        }
    }
}

TransitionMatrix load_transition_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open transition matrix file: " + path);
    std::string line;
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        auto fields = split_fields(line);
        if (fields.empty() || fields[0].rfind("#", 0) == 0) continue;
        rows.push_back(std::move(fields));
    }
    if (rows.size() != kNumCategories + 1) {
        throw ParseError("transition matrix file needs a header plus " +
                         std::to_string(kNumCategories) + " rows: " + path);
    }
    const auto& header = rows[0];
    // header may start with a label for the context column
    size_t first = 0;
    if (header.size() == kNumCategories + 1) first = 1;
    if (header.size() - first != kNumCategories) {
        throw ParseError("transition matrix header must list all " +
                         std::to_string(kNumCategories) + " child categories: " + path);
    }
    std::array<int, kNumCategories> col_of{};
    for (size_t i = first; i < header.size(); ++i) {
        const int cat = name_index(kCategoryNames, lower(header[i]));
        if (cat < 0) throw ParseError("unknown child category '" + header[i] + "' in " + path);
        col_of[i - first] = cat;
    }
    TransitionMatrix t;
    std::array<bool, kNumCategories> seen{};
    for (size_t r = 1; r < rows.size(); ++r) {
        const auto& fields = rows[r];
        if (fields.size() != kNumCategories + 1) {
            throw ParseError("transition matrix row " + std::to_string(r) +
                             " must have a context label plus " + std::to_string(kNumCategories) +
                             " weights: " + path);
        }
        const int ctx = name_index(kContextNames, lower(fields[0]));
        if (ctx < 0) throw ParseError("unknown parent context '" + fields[0] + "' in " + path);
        if (seen[static_cast<size_t>(ctx)]) {
            throw ParseError("duplicate parent context '" + fields[0] + "' in " + path);
        }
        seen[static_cast<size_t>(ctx)] = true;
        for (size_t c = 1; c < fields.size(); ++c) {
            char* end = nullptr;
            const double v = std::strtod(fields[c].c_str(), &end);
            if (end == nullptr || *end != '\0') {
                throw ParseError("bad weight '" + fields[c] + "' in " + path);
            }
            t.at(ctx, col_of[c - 1]) = v;
        }
    }
    t.validate();
    return t;
}

void save_transition_matrix(const TransitionMatrix& t, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write transition matrix file: " + path);
    out << "context";
    for (const auto& n : kCategoryNames) out << ' ' << n;
    out << '\n';
    for (int r : {kRootContext, 0, 1, 2, 3, 4, 5, 6, 7}) {
        out << kContextNames[static_cast<size_t>(r)];
        for (int c = 0; c < kNumCategories; ++c) out << ' ' << t.at(r, c);
        out << '\n';
    }
}

// --------------------------------------------------------------- UnitTable

int UnitTable::unit_index(UnitClass u) const {
    if (u.tag == UnitTag::Angle) return 0;
    return 1 + (u.gev_power() + power_cap_);
}

UnitTable UnitTable::build(const Grammar& grammar, const Schema& schema) {
    if (schema.empty()) throw ConfigError("cannot sample expressions over an empty schema");
    UnitTable t;
    t.power_cap_ = grammar.power_cap;
    t.max_depth_ = grammar.max_depth;
    const int n_units = 2 + 2 * t.power_cap_; // angle + powers -cap..cap

    t.terminals_.assign(static_cast<size_t>(n_units), {});
    for (int c = 0; c < schema.size(); ++c) {
        t.terminals_[static_cast<size_t>(t.unit_index(schema.at(c).unit))].push_back(c);
    }

    auto unit_of = [&](int idx) {
        if (idx == 0) return UnitClass::angle();
        return UnitClass::gev(idx - 1 - t.power_cap_);
    };

    t.reach_.assign(static_cast<size_t>(t.max_depth_) + 1, std::vector<bool>(n_units, false));
    for (int i = 0; i < n_units; ++i) {
        if (!t.terminals_[static_cast<size_t>(i)].empty()) t.reach_[1][static_cast<size_t>(i)] = true;
    }
    for (int d = 2; d <= t.max_depth_; ++d) {
        auto& cur = t.reach_[static_cast<size_t>(d)];
        const auto& prev = t.reach_[static_cast<size_t>(d - 1)];
        cur = prev; // depth budgets nest
        for (int i = 0; i < n_units; ++i) {
            if (!prev[static_cast<size_t>(i)]) continue;
            const UnitClass a = unit_of(i);
            if (auto u = unit_trig(a)) cur[static_cast<size_t>(t.unit_index(*u))] = true;
            if (auto u = unit_sq(a, t.power_cap_)) cur[static_cast<size_t>(t.unit_index(*u))] = true;
            if (auto u = unit_sqrt(a)) cur[static_cast<size_t>(t.unit_index(*u))] = true;
            for (int j = 0; j < n_units; ++j) {
                if (!prev[static_cast<size_t>(j)]) continue;
                const UnitClass b = unit_of(j);
                if (auto u = unit_add(a, b)) cur[static_cast<size_t>(t.unit_index(*u))] = true;
                if (auto u = unit_mul(a, b, t.power_cap_)) {
                    cur[static_cast<size_t>(t.unit_index(*u))] = true;
                }
                if (auto u = unit_div(a, b, t.power_cap_)) {
                    cur[static_cast<size_t>(t.unit_index(*u))] = true;
                }
            }
        }
    }

    t.ordered_.assign(static_cast<size_t>(t.max_depth_) + 1, {});
    for (int d = 1; d <= t.max_depth_; ++d) {
        for (int i = 0; i < n_units; ++i) {
            if (t.reach_[static_cast<size_t>(d)][static_cast<size_t>(i)]) {
                t.ordered_[static_cast<size_t>(d)].push_back(unit_of(i));
            }
        }
    }
    return t;
}

bool UnitTable::achievable(int depth, UnitClass u) const {
    if (depth < 1) return false;
    if (depth > max_depth_) depth = max_depth_;
    const int idx = unit_index(u);
    if (idx < 0 || idx >= static_cast<int>(reach_[static_cast<size_t>(depth)].size())) return false;
    return reach_[static_cast<size_t>(depth)][static_cast<size_t>(idx)];
}

const std::vector<UnitClass>& UnitTable::units_at(int depth) const {
    if (depth > max_depth_) depth = max_depth_;
    return ordered_[static_cast<size_t>(depth)];
}

const std::vector<int>& UnitTable::terminals_with(UnitClass u) const {
    const int idx = unit_index(u);
    if (idx < 0 || idx >= static_cast<int>(terminals_.size())) return no_terminals_;
    return terminals_[static_cast<size_t>(idx)];
}

// ----------------------------------------------------------------- sampler

namespace {

struct Sampler {
    const Grammar& grammar;
    const Schema& schema;
    const UnitTable& table;
    Rng& rng;

    bool op_feasible(Op op, const std::optional<UnitClass>& req, int budget) const {
        if (budget < 2) return false;
        const int below = budget - 1;
        const int cap = grammar.power_cap;
        switch (op) {
        case Op::Cos:
        case Op::Sin:
            if (req && *req != UnitClass::dimless()) return false;
            return table.achievable(below, UnitClass::angle());
        case Op::Sq:
            if (req) {
                if (!req->gev_like() || req->gev_power() % 2 != 0) return false;
                return table.achievable(below, UnitClass::gev(req->gev_power() / 2));
            }
            for (const UnitClass u : table.units_at(below)) {
                if (unit_sq(u, cap)) return true;
            }
            return false;
        case Op::Sqrt:
            if (req) {
                if (!req->gev_like() || std::abs(2 * req->gev_power()) > cap) return false;
                return table.achievable(below, UnitClass::gev(2 * req->gev_power()));
            }
            for (const UnitClass u : table.units_at(below)) {
                if (unit_sqrt(u)) return true;
            }
            return false;
        case Op::Add:
        case Op::Sub:
            if (req) return table.achievable(below, *req);
            return !table.units_at(below).empty();
        case Op::Mul:
        case Op::Div:
            return !mul_div_pairs(op, req, below).empty();
        default:
            return false;
        }
    }

    // Feasible (left, right) unit assignments for mul/div, deterministic order.
    std::vector<std::pair<UnitClass, UnitClass>>
    mul_div_pairs(Op op, const std::optional<UnitClass>& req, int below) const {
        std::vector<std::pair<UnitClass, UnitClass>> out;
        const int cap = grammar.power_cap;
        for (const UnitClass a : table.units_at(below)) {
            if (!a.gev_like()) continue;
            for (const UnitClass b : table.units_at(below)) {
                if (!b.gev_like()) continue;
                const auto u = op == Op::Mul ? unit_mul(a, b, cap) : unit_div(a, b, cap);
                if (!u) continue;
                if (req && *u != *req) continue;
                out.emplace_back(a, b);
            }
        }
        return out;
    }

    std::vector<UnitClass> unary_child_units(Op op, int below) const {
        std::vector<UnitClass> out;
        const int cap = grammar.power_cap;
        for (const UnitClass u : table.units_at(below)) {
            switch (op) {
            case Op::Cos:
            case Op::Sin:
                if (unit_trig(u)) out.push_back(u);
                break;
            case Op::Sq:
                if (unit_sq(u, cap)) out.push_back(u);
                break;
            default:
                if (unit_sqrt(u)) out.push_back(u);
                break;
            }
        }
        return out;
    }

    ExprPtr gen(int context, std::optional<UnitClass> req, int budget) {
        // Collect feasible categories and their matrix weights.
        std::array<bool, kNumCategories> feasible{};
        std::array<double, kNumCategories> weight{};
        double total = 0.0;
        int n_feasible = 0;
        const bool term_ok = req ? !table.terminals_with(*req).empty() : !schema.empty();
        if (term_ok) {
            feasible[kTerminalCategory] = true;
            weight[kTerminalCategory] = grammar.transition.at(context, kTerminalCategory);
        }
        for (int c = 0; c < kNumOps; ++c) {
            if (op_feasible(static_cast<Op>(c), req, budget)) {
                feasible[static_cast<size_t>(c)] = true;
                weight[static_cast<size_t>(c)] = grammar.transition.at(context, c);
            }
        }
        for (int c = 0; c < kNumCategories; ++c) {
            if (feasible[static_cast<size_t>(c)]) {
                total += weight[static_cast<size_t>(c)];
                ++n_feasible;
            }
        }
        if (n_feasible == 0) {
            throw ConfigError("sampler dead end: unit " +
                              (req ? unit_to_string(*req) : std::string("<any>")) +
                              " not completable within depth " + std::to_string(budget));
        }

        int pick = -1;
        if (total > 0.0) {
            double r = rng.uniform01() * total;
            for (int c = 0; c < kNumCategories; ++c) {
                if (!feasible[static_cast<size_t>(c)]) continue;
                r -= weight[static_cast<size_t>(c)];
                if (r <= 0.0) {
                    pick = c;
                    break;
                }
            }
            if (pick < 0) { // fp tail
                for (int c = kNumCategories - 1; c >= 0; --c) {
                    if (feasible[static_cast<size_t>(c)]) {
                        pick = c;
                        break;
                    }
                }
            }
        } else {
            // All feasible weights are zero here; fall back to a uniform draw
            // so the row's positive-terminal guarantee still terminates us.
            int k = rng.uniform_int(0, n_feasible - 1);
            for (int c = 0; c < kNumCategories; ++c) {
                if (feasible[static_cast<size_t>(c)] && k-- == 0) {
                    pick = c;
                    break;
                }
            }
        }

        if (pick == kTerminalCategory) {
            if (req) {
                const auto& ids = table.terminals_with(*req);
                return make_terminal(schema, ids[static_cast<size_t>(rng.bounded(ids.size()))]);
            }
            return make_terminal(schema, rng.uniform_int(0, schema.size() - 1));
        }

        const Op op = static_cast<Op>(pick);
        const int below = budget - 1;
        const int cap = grammar.power_cap;
        if (op_is_unary(op)) {
            UnitClass child_u;
            if (req) {
                switch (op) {
                case Op::Cos:
                case Op::Sin: child_u = UnitClass::angle(); break;
                case Op::Sq: child_u = UnitClass::gev(req->gev_power() / 2); break;
                default: child_u = UnitClass::gev(2 * req->gev_power()); break;
                }
            } else {
                const auto options = unary_child_units(op, below);
                child_u = options[static_cast<size_t>(rng.bounded(options.size()))];
            }
            return make_unary(op, gen(pick, child_u, below), cap);
        }
        if (op == Op::Add || op == Op::Sub) {
            UnitClass u;
            if (req) {
                u = *req;
            } else {
                const auto& options = table.units_at(below);
                u = options[static_cast<size_t>(rng.bounded(options.size()))];
            }
            ExprPtr l = gen(pick, u, below);
            ExprPtr r = gen(pick, u, below);
            return make_binary(op, std::move(l), std::move(r), cap);
        }
        const auto pairs = mul_div_pairs(op, req, below);
        const auto& [ul, ur] = pairs[static_cast<size_t>(rng.bounded(pairs.size()))];
        ExprPtr l = gen(pick, ul, below);
        ExprPtr r = gen(pick, ur, below);
        return make_binary(op, std::move(l), std::move(r), cap);
    }
};

} // namespace

ExprPtr sample_expr(const Grammar& grammar, const Schema& schema, const UnitTable& table,
                    Rng& rng, std::optional<UnitClass> required_unit, int depth_budget) {
    if (schema.empty()) throw ConfigError("cannot sample expressions over an empty schema");
    int budget = depth_budget < 0 ? grammar.max_depth : depth_budget;
    if (budget < 1) budget = 1;
    if (budget > grammar.max_depth) budget = grammar.max_depth;
    if (required_unit && !table.achievable(budget, *required_unit)) {
        throw ConfigError("infeasible required unit " + unit_to_string(*required_unit) +
                          " within depth " + std::to_string(budget));
    }
    Sampler s{grammar, schema, table, rng};
    return s.gen(kRootContext, required_unit, budget);
}

ExprPtr sample_expr(const Grammar& grammar, const Schema& schema, Rng& rng,
                    std::optional<UnitClass> required_unit, int depth_budget) {
    const UnitTable table = UnitTable::build(grammar, schema);
    return sample_expr(grammar, schema, table, rng, required_unit, depth_budget);
}

} // namespace fctree

#include "fctree/expr.hpp"

#include <array>
#include <cctype>
#include <cmath>

#include "fctree/dataset.hpp"
#include "fctree/errors.hpp"

namespace fctree {

const char* op_name(Op op) {
    switch (op) {
    case Op::Add: return "+";
    case Op::Sub: return "-";
    case Op::Mul: return "*";
    case Op::Div: return "/";
    case Op::Cos: return "cos";
    case Op::Sin: return "sin";
    case Op::Sq: return "sq";
    case Op::Sqrt: return "sqrt";
    case Op::Terminal: return "terminal";
    }
    return "?";
}

// ---------------------------------------------------------------- Schema --

namespace {
const std::array<std::string, 4> kReserved = {"cos", "sin", "sq", "sqrt"};
}

bool Schema::valid_identifier(const std::string& name) {
    if (name.empty()) return false;
    if (!(std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_')) return false;
    for (char c : name) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    }
    for (const auto& r : kReserved) {
        if (name == r) return false;
    }
    return true;
}

int Schema::add(const std::string& name, UnitClass unit) {
    if (!valid_identifier(name)) {
        throw DataError("invalid column name: '" + name + "'");
    }
    if (index_.count(name) != 0) {
        throw DataError("duplicate column name: '" + name + "'");
    }
    const int id = static_cast<int>(cols_.size());
    cols_.push_back(Column{name, unit});
    index_[name] = id;
    return id;
}

int Schema::find(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? -1 : it->second;
}

// -------------------------------------------------------------- builders --

ExprPtr make_terminal(int column, std::string name, UnitClass unit) {
    auto e = std::make_shared<Expr>();
    e->op = Op::Terminal;
    e->column = column;
    e->column_name = std::move(name);
    e->unit = unit;
    e->depth = 1;
    e->nodes = 1;
    return e;
}

ExprPtr make_terminal(const Schema& schema, int column) {
    const auto& c = schema.at(column);
    return make_terminal(column, c.name, c.unit);
}

ExprPtr make_unary(Op op, ExprPtr child, int power_cap) {
    std::optional<UnitClass> u;
    switch (op) {
    case Op::Cos:
    case Op::Sin:
        u = unit_trig(child->unit);
        break;
    case Op::Sq:
        u = unit_sq(child->unit, power_cap);
        break;
    case Op::Sqrt:
        u = unit_sqrt(child->unit);
        break;
    default:
        throw UnitError("make_unary: not a unary operator");
    }
    if (!u) {
        throw UnitError(std::string("unit mismatch at ") + op_name(op) + "(" +
                        unit_to_string(child->unit) + ")");
    }
    auto e = std::make_shared<Expr>();
    e->op = op;
    e->left = std::move(child);
    e->unit = *u;
    e->depth = e->left->depth + 1;
    e->nodes = e->left->nodes + 1;
    return e;
}

ExprPtr make_binary(Op op, ExprPtr lhs, ExprPtr rhs, int power_cap) {
    std::optional<UnitClass> u;
    switch (op) {
    case Op::Add:
    case Op::Sub:
        u = unit_add(lhs->unit, rhs->unit);
        break;
    case Op::Mul:
        u = unit_mul(lhs->unit, rhs->unit, power_cap);
        break;
    case Op::Div:
        u = unit_div(lhs->unit, rhs->unit, power_cap);
        break;
    default:
        throw UnitError("make_binary: not a binary operator");
    }
    if (!u) {
        throw UnitError(std::string("unit mismatch at (") + unit_to_string(lhs->unit) + " " +
                        op_name(op) + " " + unit_to_string(rhs->unit) + ")");
    }
    auto e = std::make_shared<Expr>();
    e->op = op;
    e->left = std::move(lhs);
    e->right = std::move(rhs);
    e->unit = *u;
    e->depth = 1 + std::max(e->left->depth, e->right->depth);
    e->nodes = 1 + e->left->nodes + e->right->nodes;
    return e;
}

// ------------------------------------------------------------ infer_unit --

namespace {

UnitClass infer_rec(const Expr& e, const Schema& schema, int power_cap, std::string& path) {
    if (e.is_terminal()) {
        const int id = schema.find(e.column_name);
        if (id < 0) {
            throw DataError("unknown column '" + e.column_name + "' at " + path);
        }
        return schema.at(id).unit;
    }
    std::optional<UnitClass> u;
    if (op_is_unary(e.op)) {
        path += ".l";
        const UnitClass cu = infer_rec(*e.left, schema, power_cap, path);
        path.resize(path.size() - 2);
        switch (e.op) {
        case Op::Cos:
        case Op::Sin: u = unit_trig(cu); break;
        case Op::Sq: u = unit_sq(cu, power_cap); break;
        default: u = unit_sqrt(cu); break;
        }
        if (!u) {
            throw UnitError(std::string("unit mismatch: ") + op_name(e.op) + "(" +
                            unit_to_string(cu) + ") at " + path + " in '" + pretty_print(e) + "'");
        }
        return *u;
    }
    path += ".l";
    const UnitClass lu = infer_rec(*e.left, schema, power_cap, path);
    path.resize(path.size() - 2);
    path += ".r";
    const UnitClass ru = infer_rec(*e.right, schema, power_cap, path);
    path.resize(path.size() - 2);
    switch (e.op) {
    case Op::Add:
    case Op::Sub: u = unit_add(lu, ru); break;
    case Op::Mul: u = unit_mul(lu, ru, power_cap); break;
    default: u = unit_div(lu, ru, power_cap); break;
    }
    if (!u) {
        throw UnitError(std::string("unit mismatch: (") + unit_to_string(lu) + " " +
                        op_name(e.op) + " " + unit_to_string(ru) + ") at " + path + " in '" +
                        pretty_print(e) + "'");
    }
    return *u;
}

} // namespace

UnitClass infer_unit(const Expr& expr, const Schema& schema, int power_cap) {
    std::string path = "root";
    return infer_rec(expr, schema, power_cap, path);
}

// -------------------------------------------------------------- evaluate --

std::vector<double>& EvalScratch::get(size_t level, size_t n) {
    while (bufs.size() <= level) bufs.emplace_back();
    bufs[level].resize(n);
    return bufs[level];
}

namespace {

// out holds the node's values; scratch level indexes nesting so sibling
// evaluations never alias.
void eval_rec(const Expr& e, const Dataset& ds, std::span<const int> rows,
              std::vector<double>& out, EvalScratch& scratch, size_t level, double div_eps,
              const std::vector<int>* col_map) {
    const size_t n = rows.size();
    out.resize(n);
    if (e.is_terminal()) {
        int col = e.column;
        if (col_map != nullptr) col = (*col_map)[static_cast<size_t>(e.column)];
        const auto& values = ds.columns[static_cast<size_t>(col)];
        for (size_t i = 0; i < n; ++i) {
            out[i] = values[static_cast<size_t>(rows[i])];
        }
        return;
    }
    if (op_is_unary(e.op)) {
        eval_rec(*e.left, ds, rows, out, scratch, level, div_eps, col_map);
        switch (e.op) {
        case Op::Cos:
            for (auto& v : out) v = std::cos(v);
            break;
        case Op::Sin:
            for (auto& v : out) v = std::sin(v);
            break;
        case Op::Sq:
            for (auto& v : out) v = v * v;
            break;
        default: // Sqrt, protected on |x|
            for (auto& v : out) v = std::sqrt(std::fabs(v));
            break;
        }
        return;
    }
    eval_rec(*e.left, ds, rows, out, scratch, level, div_eps, col_map);
    auto& rhs = scratch.get(level, n);
    eval_rec(*e.right, ds, rows, rhs, scratch, level + 1, div_eps, col_map);
    switch (e.op) {
    case Op::Add:
        for (size_t i = 0; i < n; ++i) out[i] += rhs[i];
        break;
    case Op::Sub:
        for (size_t i = 0; i < n; ++i) out[i] -= rhs[i];
        break;
    case Op::Mul:
        for (size_t i = 0; i < n; ++i) out[i] *= rhs[i];
        break;
    default: // Div, protected near zero denominators
        for (size_t i = 0; i < n; ++i) {
            out[i] = std::fabs(rhs[i]) < div_eps ? 0.0 : out[i] / rhs[i];
        }
        break;
    }
}

} // namespace

void evaluate_into(const Expr& expr, const Dataset& data, std::span<const int> rows,
                   std::vector<double>& out, EvalScratch& scratch, double div_epsilon,
                   const std::vector<int>* col_map) {
    eval_rec(expr, data, rows, out, scratch, 0, div_epsilon, col_map);
}

std::vector<double> evaluate(const Expr& expr, const Dataset& data, std::span<const int> rows,
                             double div_epsilon) {
    std::vector<double> out;
    EvalScratch scratch;
    evaluate_into(expr, data, rows, out, scratch, div_epsilon);
    return out;
}

// ---------------------------------------------------------- pretty_print --

namespace {

int precedence(const Expr& e) {
    if (e.is_terminal() || op_is_unary(e.op)) return 3;
    return (e.op == Op::Mul || e.op == Op::Div) ? 2 : 1;
}

void print_rec(const Expr& e, std::string& out) {
    if (e.is_terminal()) {
        out += e.column_name;
        return;
    }
    if (op_is_unary(e.op)) {
        out += op_name(e.op);
        out += '(';
        print_rec(*e.left, out);
        out += ')';
        return;
    }
    const int p = precedence(e);
    const bool lparen = precedence(*e.left) < p;
    // the parser is left-associative, so equal precedence on the right needs
    // parentheses to round-trip structurally
    const bool rparen = precedence(*e.right) <= p;
    if (lparen) out += '(';
    print_rec(*e.left, out);
    if (lparen) out += ')';
    out += ' ';
    out += op_name(e.op);
    out += ' ';
    if (rparen) out += '(';
    print_rec(*e.right, out);
    if (rparen) out += ')';
}

} // namespace

std::string pretty_print(const Expr& expr) {
    std::string out;
    out.reserve(static_cast<size_t>(expr.nodes) * 8);
    print_rec(expr, out);
    return out;
}

// ------------------------------------------------------------ parse_expr --

namespace {

struct Parser {
    const std::string& text;
    const Schema& schema;
    int power_cap;
    size_t pos = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError("syntax error at position " + std::to_string(pos) + ": " + what +
                         " in '" + text + "'");
    }

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }

    bool eat(char c) {
        skip_ws();
        if (pos < text.size() && text[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }

    std::string ident() {
        skip_ws();
        const size_t start = pos;
        if (pos < text.size() &&
            (std::isalpha(static_cast<unsigned char>(text[pos])) || text[pos] == '_')) {
            ++pos;
            while (pos < text.size() && (std::isalnum(static_cast<unsigned char>(text[pos])) ||
                                         text[pos] == '_')) {
                ++pos;
            }
        }
        return text.substr(start, pos - start);
    }

    ExprPtr parse_sum() {
        ExprPtr lhs = parse_term();
        for (;;) {
            skip_ws();
            if (eat('+')) {
                lhs = make_binary(Op::Add, lhs, parse_term(), power_cap);
            } else if (eat('-')) {
                lhs = make_binary(Op::Sub, lhs, parse_term(), power_cap);
            } else {
                return lhs;
            }
        }
    }

    ExprPtr parse_term() {
        ExprPtr lhs = parse_factor();
        for (;;) {
            skip_ws();
            if (eat('*')) {
                lhs = make_binary(Op::Mul, lhs, parse_factor(), power_cap);
            } else if (eat('/')) {
                lhs = make_binary(Op::Div, lhs, parse_factor(), power_cap);
            } else {
                return lhs;
            }
        }
    }

    ExprPtr parse_factor() {
        skip_ws();
        if (eat('(')) {
            ExprPtr inner = parse_sum();
            if (!eat(')')) fail("expected ')'");
            return inner;
        }
        const std::string name = ident();
        if (name.empty()) fail("expected identifier or '('");
        Op fn = Op::Terminal;
        if (name == "cos") fn = Op::Cos;
        else if (name == "sin") fn = Op::Sin;
        else if (name == "sq") fn = Op::Sq;
        else if (name == "sqrt") fn = Op::Sqrt;
        if (fn != Op::Terminal) {
            if (!eat('(')) fail("expected '(' after '" + name + "'");
            ExprPtr arg = parse_sum();
            if (!eat(')')) fail("expected ')'");
            return make_unary(fn, arg, power_cap);
        }
        const int id = schema.find(name);
        if (id < 0) throw DataError("unknown column '" + name + "' in '" + text + "'");
        return make_terminal(schema, id);
    }

    ExprPtr run() {
        ExprPtr e = parse_sum();
        skip_ws();
        if (pos != text.size()) fail("trailing input");
        return e;
    }
};

} // namespace

ExprPtr parse_expr(const std::string& text, const Schema& schema, int power_cap) {
    Parser p{text, schema, power_cap};
    return p.run();
}

// --------------------------------------------- ordering / canonical form --

namespace {

int kind_rank(const Expr& e) {
    if (e.is_terminal()) return 0;
    return op_is_unary(e.op) ? 1 : 2;
}

} // namespace

int compare_exprs(const Expr& a, const Expr& b) {
    const int ka = kind_rank(a);
    const int kb = kind_rank(b);
    if (ka != kb) return ka < kb ? -1 : 1;
    if (ka == 0) {
        const int c = a.column_name.compare(b.column_name);
        return c < 0 ? -1 : (c > 0 ? 1 : 0);
    }
    if (a.op != b.op) return a.op < b.op ? -1 : 1;
    const int cl = compare_exprs(*a.left, *b.left);
    if (cl != 0) return cl;
    if (ka == 1) return 0;
    return compare_exprs(*a.right, *b.right);
}

ExprPtr canonicalize(const ExprPtr& expr) {
    if (expr->is_terminal()) return expr;
    if (op_is_unary(expr->op)) {
        ExprPtr c = canonicalize(expr->left);
        if (c == expr->left) return expr;
        auto e = std::make_shared<Expr>(*expr);
        e->left = std::move(c);
        return e;
    }
    ExprPtr l = canonicalize(expr->left);
    ExprPtr r = canonicalize(expr->right);
    const bool swap = op_is_commutative(expr->op) && compare_exprs(*l, *r) > 0;
    if (!swap && l == expr->left && r == expr->right) return expr;
    auto e = std::make_shared<Expr>(*expr);
    if (swap) {
        e->left = std::move(r);
        e->right = std::move(l);
    } else {
        e->left = std::move(l);
        e->right = std::move(r);
    }
    return e;
}

bool exprs_equal(const Expr& a, const Expr& b) { return compare_exprs(a, b) == 0; }

namespace {

bool contains_rec(const Expr& haystack, const Expr& needle) {
    if (compare_exprs(haystack, needle) == 0) return true;
    if (haystack.is_terminal()) return false;
    if (contains_rec(*haystack.left, needle)) return true;
    return haystack.right && contains_rec(*haystack.right, needle);
}

} // namespace

bool contains_pattern(const ExprPtr& expr, const ExprPtr& pattern) {
    const ExprPtr ce = canonicalize(expr);
    const ExprPtr cp = canonicalize(pattern);
    return contains_rec(*ce, *cp);
}

} // namespace fctree

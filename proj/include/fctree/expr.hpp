#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "fctree/units.hpp"

namespace fctree {

enum class Op : uint8_t { Add, Sub, Mul, Div, Cos, Sin, Sq, Sqrt, Terminal };

inline bool op_is_binary(Op op) { return op <= Op::Div; }
inline bool op_is_unary(Op op) { return op >= Op::Cos && op <= Op::Sqrt; }
inline bool op_is_commutative(Op op) { return op == Op::Add || op == Op::Mul; }
const char* op_name(Op op);

// Protected division: |denominator| below this yields 0.
inline constexpr double kDivEpsilon = 1e-12;

// Ordered set of named, unit-tagged columns. Column ids are positions.
class Schema {
public:
    struct Column {
        std::string name;
        UnitClass unit;
    };

    // Validates the identifier and rejects duplicates / reserved words.
    int add(const std::string& name, UnitClass unit);
    int find(const std::string& name) const; // -1 when absent
    const Column& at(int id) const { return cols_[static_cast<size_t>(id)]; }
    int size() const { return static_cast<int>(cols_.size()); }
    bool empty() const { return cols_.empty(); }

    static bool valid_identifier(const std::string& name);

private:
    std::vector<Column> cols_;
    std::unordered_map<std::string, int> index_;
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

// Immutable typed expression tree. Unit, depth and node count are fixed at
// construction; subtrees are shared freely across expressions and threads.
struct Expr {
    Op op = Op::Terminal;
    int column = -1;         // Terminal
    std::string column_name; // Terminal; names make printing and ordering schema-free
    ExprPtr left;
    ExprPtr right; // null for unary ops

    UnitClass unit;
    int depth = 1;
    int nodes = 1;

    bool is_terminal() const { return op == Op::Terminal; }
};

// Builders compute the cached unit and throw UnitError on a rule violation.
ExprPtr make_terminal(const Schema& schema, int column);
ExprPtr make_terminal(int column, std::string name, UnitClass unit);
ExprPtr make_unary(Op op, ExprPtr child, int power_cap = kDefaultPowerCap);
ExprPtr make_binary(Op op, ExprPtr lhs, ExprPtr rhs, int power_cap = kDefaultPowerCap);

// Full re-inference against a schema, ignoring cached units; the checking
// oracle for everything the samplers and variation operators produce.
// Terminals are resolved by column name. Throws UnitError / DataError.
UnitClass infer_unit(const Expr& expr, const Schema& schema, int power_cap = kDefaultPowerCap);

// Scratch buffers reused across evaluate_into calls. A deque keeps references
// valid while deeper recursion levels append new buffers.
struct EvalScratch {
    std::deque<std::vector<double>> bufs;
    std::vector<double>& get(size_t level, size_t n);
};

class Dataset; // dataset.hpp

// Evaluates one value per row, in row order. Protected operators keep it
// total on finite inputs. col_map, when given, remaps expression column ids
// to dataset column ids (for models applied to a different schema).
void evaluate_into(const Expr& expr, const Dataset& data, std::span<const int> rows,
                   std::vector<double>& out, EvalScratch& scratch,
                   double div_epsilon = kDivEpsilon, const std::vector<int>* col_map = nullptr);
std::vector<double> evaluate(const Expr& expr, const Dataset& data, std::span<const int> rows,
                             double div_epsilon = kDivEpsilon);

// Infix with function-call trig; minimal parentheses; round-trips through
// parse_expr structurally.
std::string pretty_print(const Expr& expr);

// Parses the grammar's infix syntax and type-checks against the schema.
// Throws ParseError (with position), DataError (unknown column), UnitError.
ExprPtr parse_expr(const std::string& text, const Schema& schema,
                   int power_cap = kDefaultPowerCap);

// Total structural order: (node kind, op code, column name), then children.
int compare_exprs(const Expr& a, const Expr& b);

// Sorts commutative operands; idempotent and bitwise evaluation-preserving
// (IEEE a+b == b+a). Shares unchanged subtrees with the input.
ExprPtr canonicalize(const ExprPtr& expr);

bool exprs_equal(const Expr& a, const Expr& b);

// True iff some subtree of canonicalize(expr) equals canonicalize(pattern).
bool contains_pattern(const ExprPtr& expr, const ExprPtr& pattern);

} // namespace fctree

#pragma once

#include "worldcore/value.hpp"

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace worldcore {

struct Schema;
struct WorldState;

enum class ExprKind : std::uint8_t {
    Literal,
    Var,
    Attr,        // children[0].name
    Compare,
    And,
    Or,
    Not,
    Quantifier,  // exists/forall name:type_name. children[0]
    Arith,
    Negate,
    Call,        // builtin (cond, chance) or relation membership rel(e1,...,ek)
};

enum class CmpOp : std::uint8_t { Eq, Ne, Lt, Le, Gt, Ge };
enum class ArithOp : std::uint8_t { Add, Sub, Mul };

struct Expr {
    ExprKind kind = ExprKind::Literal;
    Value literal{};
    std::string name;
    std::string type_name;
    bool universal = false;
    CmpOp cmp = CmpOp::Eq;
    ArithOp arith = ArithOp::Add;
    std::vector<std::shared_ptr<const Expr>> children;
};

/// A parsed expression together with the text it was parsed from.
///
/// Grammar (lowest precedence first):
///   expr    := 'exists'|'forall' IDENT ':' TYPE '.' expr | or
///   or      := and ('or' and)*
///   and     := not ('and' not)*
///   not     := 'not' not | cmp
///   cmp     := sum (('='|'!='|'<'|'<='|'>'|'>=') sum)?
///   sum     := prod (('+'|'-') prod)*
///   prod    := unary ('*' unary)*
///   unary   := '-' unary | postfix
///   postfix := primary ('.' IDENT)*
///   primary := INT | REAL | STRING | true | false | IDENT | IDENT '(' args ')' | '(' expr ')'
/// Unicode forms (∃ ∀ ¬ ∧ ∨ ≠ ≤ ≥) are accepted as synonyms.
class Expression {
public:
    Expression();  // the constant `true`

    /// Throws Error(ParseError) with the character offset on malformed input.
    static Expression parse(std::string_view text);

    const std::string& text() const noexcept { return text_; }
    const Expr& root() const noexcept { return *root_; }

private:
    std::string text_;
    std::shared_ptr<const Expr> root_;
};

/// Free variable name -> domain, innermost last.
using TypeScope = std::vector<std::pair<std::string, Domain>>;

struct TypeOptions {
    int max_quantifier_depth = 3;
    bool allow_chance = false;  // chance(p) is only meaningful inside agent policies
};

/// Vocabulary an expression touches; used for role-visibility checks.
struct VocabularyUse {
    std::set<std::string> entity_types;
    std::set<std::pair<std::string, std::string>> attributes;
    std::set<std::string> relations;
};

/// Infers the domain of `expr` against `schema`. String-typed results carry the set of
/// literal values they can take in `enum_values` when that set is statically known.
/// Throws Error(TypeError) describing the first problem found.
Domain typecheck(const Expression& expr, const Schema& schema, const TypeScope& scope,
                 const TypeOptions& options = {}, VocabularyUse* use = nullptr);

/// Convenience: typecheck and require a boolean result.
void typecheck_predicate(const Expression& expr, const Schema& schema, const TypeScope& scope,
                         const TypeOptions& options = {}, VocabularyUse* use = nullptr);

/// True when an expression of type `from` may be stored into a slot of domain `to`.
bool assignable(const Domain& from, const Domain& to);

using Bindings = std::map<std::string, Value>;

/// Uniform draws in [0, 1) for chance(p). Absent outside policy evaluation.
using ChanceSource = std::function<double()>;

Value evaluate(const Expression& expr, const WorldState& state, const Bindings& bindings,
               const ChanceSource* chance = nullptr);

/// Throws Error(EvalError) on unbound variables or dangling references.
bool eval_predicate(const WorldState& state, const Expression& expr, const Bindings& bindings = {});

/// Backtracking search for bindings of the top-level existential variables of `expr`
/// (those reachable through exists/and/or). Entities are tried in id order; the first
/// satisfying assignment is returned, or nullopt when the predicate is false.
std::optional<Bindings> solve(const Expression& expr, const WorldState& state, const Bindings& bindings,
                              const ChanceSource* chance = nullptr);

/// Variables solve() is guaranteed to bind when it succeeds, with their domains.
TypeScope witness_scope(const Expression& expr);

}  // namespace worldcore

#include "worldcore/expr.hpp"

#include "worldcore/error.hpp"
#include "worldcore/schema.hpp"
#include "worldcore/state.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <limits>
#include <string_view>

namespace worldcore {

namespace {

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

enum class Tok : std::uint8_t { Ident, Int, Real, String, Op, End };

struct Token {
    Tok kind = Tok::End;
    std::string text;
    std::size_t offset = 0;
};

[[noreturn]] void parse_fail(std::size_t offset, const std::string& reason) {
    fail(ErrorClass::ParseError, "offset " + std::to_string(offset), reason);
}

std::vector<Token> lex(std::string_view src) {
    // UTF-8 synonyms, normalised to their ASCII spelling.
    static const std::pair<std::string_view, std::pair<Tok, std::string_view>> kUnicode[] = {
        {"∃", {Tok::Ident, "exists"}}, {"∀", {Tok::Ident, "forall"}},
        {"¬", {Tok::Ident, "not"}},    {"∧", {Tok::Ident, "and"}},
        {"∨", {Tok::Ident, "or"}},     {"≠", {Tok::Op, "!="}},
        {"≤", {Tok::Op, "<="}},        {"≥", {Tok::Op, ">="}},
        {"×", {Tok::Op, "*"}},         {"−", {Tok::Op, "-"}},
    };

    std::vector<Token> out;
    std::size_t i = 0;
    while (i < src.size()) {
        const char c = src[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        const std::size_t start = i;
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            while (i < src.size() && (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_')) {
                ++i;
            }
            out.push_back({Tok::Ident, std::string(src.substr(start, i - start)), start});
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) {
                ++i;
            }
            Tok kind = Tok::Int;
            if (i + 1 < src.size() && src[i] == '.' && std::isdigit(static_cast<unsigned char>(src[i + 1]))) {
                kind = Tok::Real;
                ++i;
                while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) {
                    ++i;
                }
            }
            if (i < src.size() && (src[i] == 'e' || src[i] == 'E')) {
                std::size_t j = i + 1;
                if (j < src.size() && (src[j] == '+' || src[j] == '-')) {
                    ++j;
                }
                if (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) {
                    kind = Tok::Real;
                    i = j;
                    while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) {
                        ++i;
                    }
                }
            }
            out.push_back({kind, std::string(src.substr(start, i - start)), start});
            continue;
        }
        if (c == '"' || c == '\'') {
            std::string text;
            ++i;
            while (i < src.size() && src[i] != c) {
                if (src[i] == '\\' && i + 1 < src.size()) {
                    ++i;
                }
                text += src[i++];
            }
            if (i >= src.size()) {
                parse_fail(start, "unterminated string literal");
            }
            ++i;
            out.push_back({Tok::String, std::move(text), start});
            continue;
        }
        bool matched = false;
        for (const auto& [spelling, tok] : kUnicode) {
            if (src.substr(i, spelling.size()) == spelling) {
                out.push_back({tok.first, std::string(tok.second), start});
                i += spelling.size();
                matched = true;
                break;
            }
        }
        if (matched) {
            continue;
        }
        static constexpr std::string_view kTwoChar[] = {"==", "!=", "<>", "<=", ">="};
        for (auto op : kTwoChar) {
            if (src.substr(i, 2) == op) {
                out.push_back({Tok::Op, std::string(op), start});
                i += 2;
                matched = true;
                break;
            }
        }
        if (matched) {
            continue;
        }
        if (std::string_view("()+-*=<>.,:").find(c) != std::string_view::npos) {
            out.push_back({Tok::Op, std::string(1, c), start});
            ++i;
            continue;
        }
        parse_fail(start, std::string("unexpected character '") + c + "'");
    }
    out.push_back({Tok::End, "", src.size()});
    return out;
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

using Node = std::shared_ptr<Expr>;

bool is_keyword(const std::string& word) {
    return word == "and" || word == "or" || word == "not" || word == "exists" || word == "forall" ||
           word == "true" || word == "false";
}

class Parser {
public:
    explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

    Node parse_all() {
        Node root = parse_expr();
        if (peek().kind != Tok::End) {
            parse_fail(peek().offset, "unexpected '" + peek().text + "'");
        }
        return root;
    }

private:
    const Token& peek() const { return toks_[pos_]; }
    const Token& advance() { return toks_[pos_++]; }

    bool at_op(std::string_view op) const { return peek().kind == Tok::Op && peek().text == op; }
    bool at_word(std::string_view word) const { return peek().kind == Tok::Ident && peek().text == word; }

    void expect_op(std::string_view op) {
        if (!at_op(op)) {
            parse_fail(peek().offset, "expected '" + std::string(op) + "'");
        }
        ++pos_;
    }

    std::string expect_ident(const char* what) {
        if (peek().kind != Tok::Ident || is_keyword(peek().text)) {
            parse_fail(peek().offset, std::string("expected ") + what);
        }
        return advance().text;
    }

    static Node make(ExprKind kind) {
        auto n = std::make_shared<Expr>();
        n->kind = kind;
        return n;
    }

    Node parse_expr() {
        if (at_word("exists") || at_word("forall")) {
            auto node = make(ExprKind::Quantifier);
            node->universal = advance().text == "forall";
            node->name = expect_ident("quantified variable");
            expect_op(":");
            node->type_name = expect_ident("entity type");
            expect_op(".");
            node->children.push_back(parse_expr());
            return node;
        }
        return parse_or();
    }

    Node parse_or() {
        Node lhs = parse_and();
        while (at_word("or")) {
            ++pos_;
            auto node = make(ExprKind::Or);
            node->children = {lhs, parse_and_or_quant()};
            lhs = node;
        }
        return lhs;
    }

    Node parse_and() {
        Node lhs = parse_not();
        while (at_word("and")) {
            ++pos_;
            auto node = make(ExprKind::And);
            node->children = {lhs, parse_not_or_quant()};
            lhs = node;
        }
        return lhs;
    }

    // A quantifier may close a connective chain: `x and exists a:A. body`.
    Node parse_and_or_quant() { return (at_word("exists") || at_word("forall")) ? parse_expr() : parse_and(); }
    Node parse_not_or_quant() { return (at_word("exists") || at_word("forall")) ? parse_expr() : parse_not(); }

    Node parse_not() {
        if (at_word("not")) {
            ++pos_;
            auto node = make(ExprKind::Not);
            node->children.push_back(parse_not_or_quant());
            return node;
        }
        return parse_cmp();
    }

    Node parse_cmp() {
        Node lhs = parse_sum();
        static const std::pair<std::string_view, CmpOp> kOps[] = {
            {"=", CmpOp::Eq}, {"==", CmpOp::Eq}, {"!=", CmpOp::Ne}, {"<>", CmpOp::Ne},
            {"<", CmpOp::Lt}, {"<=", CmpOp::Le}, {">", CmpOp::Gt}, {">=", CmpOp::Ge},
        };
        for (const auto& [spelling, op] : kOps) {
            if (at_op(spelling)) {
                ++pos_;
                auto node = make(ExprKind::Compare);
                node->cmp = op;
                node->children = {lhs, parse_sum()};
                return node;
            }
        }
        return lhs;
    }

    Node parse_sum() {
        Node lhs = parse_prod();
        while (at_op("+") || at_op("-")) {
            auto node = make(ExprKind::Arith);
            node->arith = advance().text == "+" ? ArithOp::Add : ArithOp::Sub;
            node->children = {lhs, parse_prod()};
            lhs = node;
        }
        return lhs;
    }

    Node parse_prod() {
        Node lhs = parse_unary();
        while (at_op("*")) {
            ++pos_;
            auto node = make(ExprKind::Arith);
            node->arith = ArithOp::Mul;
            node->children = {lhs, parse_unary()};
            lhs = node;
        }
        return lhs;
    }

    Node parse_unary() {
        if (at_op("-")) {
            ++pos_;
            auto node = make(ExprKind::Negate);
            node->children.push_back(parse_unary());
            return node;
        }
        Node base = parse_primary();
        while (at_op(".")) {
            ++pos_;
            auto node = make(ExprKind::Attr);
            node->name = expect_ident("attribute name");
            node->children.push_back(base);
            base = node;
        }
        return base;
    }

    Node parse_primary() {
        const Token& tok = peek();
        switch (tok.kind) {
        case Tok::Int: {
            ++pos_;
            std::int64_t v = 0;
            auto [ptr, ec] = std::from_chars(tok.text.data(), tok.text.data() + tok.text.size(), v);
            if (ec != std::errc()) {
                parse_fail(tok.offset, "integer literal out of range");
            }
            auto node = make(ExprKind::Literal);
            node->literal = v;
            return node;
        }
        case Tok::Real: {
            ++pos_;
            auto node = make(ExprKind::Literal);
            node->literal = std::stod(tok.text);
            return node;
        }
        case Tok::String: {
            ++pos_;
            auto node = make(ExprKind::Literal);
            node->literal = tok.text;
            return node;
        }
        case Tok::Ident: {
            if (tok.text == "true" || tok.text == "false") {
                ++pos_;
                auto node = make(ExprKind::Literal);
                node->literal = tok.text == "true";
                return node;
            }
            if (at_word("not")) {
                return parse_not();
            }
            std::string name = expect_ident("identifier");
            if (at_op("(")) {
                ++pos_;
                auto node = make(ExprKind::Call);
                node->name = std::move(name);
                if (!at_op(")")) {
                    node->children.push_back(parse_expr());
                    while (at_op(",")) {
                        ++pos_;
                        node->children.push_back(parse_expr());
                    }
                }
                expect_op(")");
                return node;
            }
            auto node = make(ExprKind::Var);
            node->name = std::move(name);
            return node;
        }
        case Tok::Op:
            if (tok.text == "(") {
                ++pos_;
                Node inner = parse_expr();
                expect_op(")");
                return inner;
            }
            break;
        case Tok::End: parse_fail(tok.offset, "unexpected end of expression");
        }
        parse_fail(tok.offset, "unexpected '" + tok.text + "'");
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Typechecker
// ---------------------------------------------------------------------------

[[noreturn]] void type_fail(const std::string& reason) { fail(ErrorClass::TypeError, "", reason); }

Domain string_literal(const std::string& s) {
    Domain d = Domain::string();
    d.enum_values = {s};
    return d;
}

bool levels_within(const std::vector<std::string>& levels, const std::vector<std::string>& allowed) {
    return std::all_of(levels.begin(), levels.end(), [&](const std::string& l) {
        return std::find(allowed.begin(), allowed.end(), l) != allowed.end();
    });
}

bool textual_compatible(const Domain& a, const Domain& b) {
    if (a.kind == Kind::Enum && b.kind == Kind::Enum) {
        return a.enum_values == b.enum_values;
    }
    if (a.kind == Kind::Enum && b.kind == Kind::String) {
        return b.enum_values.empty() || levels_within(b.enum_values, a.enum_values);
    }
    if (a.kind == Kind::String && b.kind == Kind::Enum) {
        return textual_compatible(b, a);
    }
    return a.kind == Kind::String && b.kind == Kind::String;
}

class Checker {
public:
    Checker(const Schema& schema, TypeScope scope, const TypeOptions& opt, VocabularyUse* use)
        : schema_(schema), scope_(std::move(scope)), opt_(opt), use_(use) {}

    Domain check(const Expr& e) {
        switch (e.kind) {
        case ExprKind::Literal:
            return std::visit(
                [](const auto& v) -> Domain {
                    using T = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<T, bool>) {
                        return Domain::boolean();
                    } else if constexpr (std::is_same_v<T, std::int64_t>) {
                        return Domain::integer();
                    } else if constexpr (std::is_same_v<T, double>) {
                        return Domain::real();
                    } else {
                        return string_literal(v);
                    }
                },
                e.literal);
        case ExprKind::Var: {
            for (auto it = scope_.rbegin(); it != scope_.rend(); ++it) {
                if (it->first == e.name) {
                    return it->second;
                }
            }
            type_fail("unbound variable '" + e.name + "'");
        }
        case ExprKind::Attr: {
            Domain base = check(*e.children[0]);
            if (base.kind != Kind::Ref) {
                type_fail("attribute access '." + e.name + "' on non-entity of type " + describe(base));
            }
            const Domain* attr = schema_.find_attribute(base.ref_type, e.name);
            if (!attr) {
                type_fail("entity type '" + base.ref_type + "' has no attribute '" + e.name + "'");
            }
            if (use_) {
                use_->entity_types.insert(base.ref_type);
                use_->attributes.emplace(base.ref_type, e.name);
            }
            return *attr;
        }
        case ExprKind::Compare: {
            Domain a = check(*e.children[0]);
            Domain b = check(*e.children[1]);
            const bool equality = e.cmp == CmpOp::Eq || e.cmp == CmpOp::Ne;
            bool ok = false;
            if (a.is_numeric() && b.is_numeric()) {
                ok = true;
            } else if (a.kind == Kind::Boolean && b.kind == Kind::Boolean) {
                ok = equality;
            } else if (a.kind == Kind::Ref && b.kind == Kind::Ref) {
                ok = equality && a.ref_type == b.ref_type;
            } else if (a.kind == Kind::String && b.kind == Kind::String) {
                ok = true;
            } else if (a.is_textual() && b.is_textual()) {
                if (!textual_compatible(a, b)) {
                    type_fail("cannot compare " + describe(a) + " with " + describe(b) +
                              " (value outside the enum levels)");
                }
                ok = equality;
            }
            if (!ok) {
                type_fail("cannot compare " + describe(a) + " with " + describe(b));
            }
            return Domain::boolean();
        }
        case ExprKind::And:
        case ExprKind::Or:
            expect_bool(*e.children[0], e.kind == ExprKind::And ? "and" : "or");
            expect_bool(*e.children[1], e.kind == ExprKind::And ? "and" : "or");
            return Domain::boolean();
        case ExprKind::Not: expect_bool(*e.children[0], "not"); return Domain::boolean();
        case ExprKind::Quantifier: {
            if (!schema_.find_entity_type(e.type_name)) {
                type_fail("quantifier over undeclared entity type '" + e.type_name + "'");
            }
            if (depth_ + 1 > opt_.max_quantifier_depth) {
                type_fail("quantifier nesting exceeds depth " + std::to_string(opt_.max_quantifier_depth));
            }
            if (use_) {
                use_->entity_types.insert(e.type_name);
            }
            ++depth_;
            scope_.emplace_back(e.name, Domain::ref(e.type_name));
            expect_bool(*e.children[0], e.universal ? "forall" : "exists");
            scope_.pop_back();
            --depth_;
            return Domain::boolean();
        }
        case ExprKind::Arith: {
            Domain a = check(*e.children[0]);
            Domain b = check(*e.children[1]);
            if (!a.is_numeric() || !b.is_numeric()) {
                type_fail("arithmetic on " + describe(a) + " and " + describe(b));
            }
            return (a.kind == Kind::Integer && b.kind == Kind::Integer) ? Domain::integer() : Domain::real();
        }
        case ExprKind::Negate: {
            Domain a = check(*e.children[0]);
            if (!a.is_numeric()) {
                type_fail("negation of " + describe(a));
            }
            return a;
        }
        case ExprKind::Call: return check_call(e);
        }
        type_fail("malformed expression");
    }

private:
    void expect_bool(const Expr& e, const char* ctx) {
        Domain d = check(e);
        if (d.kind != Kind::Boolean) {
            type_fail(std::string("operand of '") + ctx + "' must be boolean, got " + describe(d));
        }
    }

    Domain unify(const Domain& a, const Domain& b) {
        if (a.is_numeric() && b.is_numeric()) {
            return (a.kind == Kind::Integer && b.kind == Kind::Integer) ? Domain::integer() : Domain::real();
        }
        if (a.kind == Kind::Boolean && b.kind == Kind::Boolean) {
            return a;
        }
        if (a.kind == Kind::Ref && b.kind == Kind::Ref && a.ref_type == b.ref_type) {
            return a;
        }
        if (a.kind == Kind::String && b.kind == Kind::String) {
            Domain d = Domain::string();
            if (!a.enum_values.empty() && !b.enum_values.empty()) {
                d.enum_values = a.enum_values;
                for (const auto& v : b.enum_values) {
                    if (std::find(d.enum_values.begin(), d.enum_values.end(), v) == d.enum_values.end()) {
                        d.enum_values.push_back(v);
                    }
                }
            }
            return d;
        }
        if (a.is_textual() && b.is_textual() && textual_compatible(a, b)) {
            return a.kind == Kind::Enum ? a : b;
        }
        type_fail("branches of cond have incompatible types " + describe(a) + " and " + describe(b));
    }

    Domain check_call(const Expr& e) {
        const auto argc = e.children.size();
        if (e.name == "cond") {
            if (argc != 3) {
                type_fail("cond(c, a, b) takes 3 arguments");
            }
            expect_bool(*e.children[0], "cond");
            return unify(check(*e.children[1]), check(*e.children[2]));
        }
        if (e.name == "chance") {
            if (!opt_.allow_chance) {
                type_fail("chance(p) is only available in agent policies");
            }
            if (argc != 1 || !check(*e.children[0]).is_numeric()) {
                type_fail("chance(p) takes one numeric argument");
            }
            return Domain::boolean();
        }
        const RelationType* rel = schema_.find_relation(e.name);
        if (!rel) {
            type_fail("unknown relation or function '" + e.name + "'");
        }
        if (rel->roles.size() != argc) {
            type_fail("relation '" + e.name + "' has arity " + std::to_string(rel->roles.size()) + ", got " +
                      std::to_string(argc));
        }
        for (std::size_t i = 0; i < argc; ++i) {
            Domain d = check(*e.children[i]);
            if (d.kind != Kind::Ref || d.ref_type != rel->roles[i].entity_type) {
                type_fail("argument " + std::to_string(i + 1) + " of '" + e.name + "' must be ref(" +
                          rel->roles[i].entity_type + "), got " + describe(d));
            }
        }
        if (use_) {
            use_->relations.insert(e.name);
        }
        return Domain::boolean();
    }

    const Schema& schema_;
    TypeScope scope_;
    TypeOptions opt_;
    VocabularyUse* use_;
    int depth_ = 0;
};

// ---------------------------------------------------------------------------
// Evaluator
// ---------------------------------------------------------------------------

[[noreturn]] void eval_fail(const std::string& reason) { fail(ErrorClass::EvalError, "", reason); }

bool is_number(const Value& v) {
    return std::holds_alternative<std::int64_t>(v) || std::holds_alternative<double>(v);
}

double as_double(const Value& v) {
    if (const auto* i = std::get_if<std::int64_t>(&v)) {
        return static_cast<double>(*i);
    }
    return std::get<double>(v);
}

template <class T>
bool apply_cmp(CmpOp op, const T& a, const T& b) {
    switch (op) {
    case CmpOp::Eq: return a == b;
    case CmpOp::Ne: return a != b;
    case CmpOp::Lt: return a < b;
    case CmpOp::Le: return a <= b;
    case CmpOp::Gt: return a > b;
    case CmpOp::Ge: return a >= b;
    }
    return false;
}

class Evaluator {
public:
    Evaluator(const WorldState& state, const Bindings& base, const ChanceSource* chance)
        : state_(state), base_(base), chance_(chance) {}

    Value eval(const Expr& e) {
        switch (e.kind) {
        case ExprKind::Literal: return e.literal;
        case ExprKind::Var: return lookup(e.name);
        case ExprKind::Attr: {
            Value base = eval(*e.children[0]);
            const auto* id = std::get_if<std::string>(&base);
            if (!id) {
                eval_fail("attribute access '." + e.name + "' on a non-entity value");
            }
            auto ent = state_.entities.find(*id);
            if (ent == state_.entities.end()) {
                eval_fail("dangling reference '" + *id + "'");
            }
            auto attr = ent->second.attrs.find(e.name);
            if (attr == ent->second.attrs.end()) {
                eval_fail("entity '" + *id + "' has no visible attribute '" + e.name + "'");
            }
            return attr->second;
        }
        case ExprKind::Compare: return compare(e.cmp, eval(*e.children[0]), eval(*e.children[1]));
        case ExprKind::And: return truth(*e.children[0]) && truth(*e.children[1]);
        case ExprKind::Or: return truth(*e.children[0]) || truth(*e.children[1]);
        case ExprKind::Not: return !truth(*e.children[0]);
        case ExprKind::Quantifier: {
            for (const auto& [id, ent] : state_.entities) {
                if (ent.type != e.type_name) {
                    continue;
                }
                locals_.emplace_back(e.name, id);
                const bool holds = truth(*e.children[0]);
                locals_.pop_back();
                if (holds != e.universal) {
                    return holds;  // witness for exists, counterexample for forall
                }
            }
            return e.universal;
        }
        case ExprKind::Arith: return arith(e.arith, eval(*e.children[0]), eval(*e.children[1]));
        case ExprKind::Negate: {
            Value v = eval(*e.children[0]);
            if (const auto* i = std::get_if<std::int64_t>(&v)) {
                if (*i == std::numeric_limits<std::int64_t>::min()) {
                    eval_fail("integer overflow");
                }
                return -*i;
            }
            if (const auto* d = std::get_if<double>(&v)) {
                return -*d;
            }
            eval_fail("negation of a non-numeric value");
        }
        case ExprKind::Call: return call(e);
        }
        eval_fail("malformed expression");
    }

    bool truth(const Expr& e) {
        Value v = eval(e);
        const auto* b = std::get_if<bool>(&v);
        if (!b) {
            eval_fail("expected a boolean value");
        }
        return *b;
    }

    /// Continuation-passing witness search. `k` is invoked with the current locals bound.
    bool solve(const Expr& e, const std::function<bool()>& k) {
        switch (e.kind) {
        case ExprKind::Quantifier:
            if (e.universal) {
                break;
            }
            for (const auto& [id, ent] : state_.entities) {
                if (ent.type != e.type_name) {
                    continue;
                }
                locals_.emplace_back(e.name, id);
                if (solve(*e.children[0], k)) {
                    return true;
                }
                locals_.pop_back();
            }
            return false;
        case ExprKind::And: return solve(*e.children[0], [&] { return solve(*e.children[1], k); });
        case ExprKind::Or: return solve(*e.children[0], k) || solve(*e.children[1], k);
        default: break;
        }
        return truth(e) && k();
    }

    Bindings capture() const {
        Bindings out = base_;
        for (const auto& [name, value] : locals_) {
            out[name] = value;
        }
        return out;
    }

private:
    Value lookup(const std::string& name) const {
        for (auto it = locals_.rbegin(); it != locals_.rend(); ++it) {
            if (it->first == name) {
                return it->second;
            }
        }
        auto it = base_.find(name);
        if (it == base_.end()) {
            eval_fail("unbound variable '" + name + "'");
        }
        return it->second;
    }

    static bool compare(CmpOp op, const Value& a, const Value& b) {
        if (is_number(a) && is_number(b)) {
            if (std::holds_alternative<std::int64_t>(a) && std::holds_alternative<std::int64_t>(b)) {
                return apply_cmp(op, std::get<std::int64_t>(a), std::get<std::int64_t>(b));
            }
            return apply_cmp(op, as_double(a), as_double(b));
        }
        if (a.index() != b.index()) {
            eval_fail("comparison between incompatible values");
        }
        if (const auto* s = std::get_if<std::string>(&a)) {
            return apply_cmp(op, *s, std::get<std::string>(b));
        }
        return apply_cmp(op, std::get<bool>(a), std::get<bool>(b));
    }

    static Value arith(ArithOp op, const Value& a, const Value& b) {
        if (!is_number(a) || !is_number(b)) {
            eval_fail("arithmetic on non-numeric values");
        }
        if (std::holds_alternative<std::int64_t>(a) && std::holds_alternative<std::int64_t>(b)) {
            const std::int64_t x = std::get<std::int64_t>(a);
            const std::int64_t y = std::get<std::int64_t>(b);
            std::int64_t r = 0;
            bool overflow = false;
            switch (op) {
            case ArithOp::Add: overflow = __builtin_add_overflow(x, y, &r); break;
            case ArithOp::Sub: overflow = __builtin_sub_overflow(x, y, &r); break;
            case ArithOp::Mul: overflow = __builtin_mul_overflow(x, y, &r); break;
            }
            if (overflow) {
                eval_fail("integer overflow");
            }
            return r;
        }
        const double x = as_double(a);
        const double y = as_double(b);
        switch (op) {
        case ArithOp::Add: return x + y;
        case ArithOp::Sub: return x - y;
        case ArithOp::Mul: return x * y;
        }
        return 0.0;
    }

    Value call(const Expr& e) {
        if (e.name == "cond") {
            return truth(*e.children[0]) ? eval(*e.children[1]) : eval(*e.children[2]);
        }
        if (e.name == "chance") {
            if (!chance_ || !*chance_) {
                eval_fail("chance(p) evaluated without a random source");
            }
            const double p = as_double(eval(*e.children[0]));
            return (*chance_)() < p;
        }
        RelationTuple tuple{e.name, {}};
        tuple.ids.reserve(e.children.size());
        for (const auto& child : e.children) {
            Value v = eval(*child);
            const auto* id = std::get_if<std::string>(&v);
            if (!id) {
                eval_fail("relation '" + e.name + "' applied to a non-entity value");
            }
            tuple.ids.push_back(*id);
        }
        return state_.relations.count(tuple) > 0;
    }

    const WorldState& state_;
    const Bindings& base_;
    const ChanceSource* chance_;
    std::vector<std::pair<std::string, Value>> locals_;
};

void collect_witnesses(const Expr& e, TypeScope& out) {
    switch (e.kind) {
    case ExprKind::Quantifier:
        if (!e.universal) {
            out.emplace_back(e.name, Domain::ref(e.type_name));
            collect_witnesses(*e.children[0], out);
        }
        break;
    case ExprKind::And:
        collect_witnesses(*e.children[0], out);
        collect_witnesses(*e.children[1], out);
        break;
    case ExprKind::Or: {
        TypeScope left;
        TypeScope right;
        collect_witnesses(*e.children[0], left);
        collect_witnesses(*e.children[1], right);
        for (const auto& entry : left) {
            if (std::find(right.begin(), right.end(), entry) != right.end()) {
                out.push_back(entry);
            }
        }
        break;
    }
    default: break;
    }
}

}  // namespace

Expression::Expression() : text_("true") {
    auto node = std::make_shared<Expr>();
    node->literal = true;
    root_ = std::move(node);
}

Expression Expression::parse(std::string_view text) {
    Expression out;
    out.text_ = std::string(text);
    out.root_ = Parser(lex(text)).parse_all();
    return out;
}

Domain typecheck(const Expression& expr, const Schema& schema, const TypeScope& scope, const TypeOptions& options,
                 VocabularyUse* use) {
    return Checker(schema, scope, options, use).check(expr.root());
}

void typecheck_predicate(const Expression& expr, const Schema& schema, const TypeScope& scope,
                         const TypeOptions& options, VocabularyUse* use) {
    Domain d = typecheck(expr, schema, scope, options, use);
    if (d.kind != Kind::Boolean) {
        type_fail("predicate has type " + describe(d) + ", expected boolean");
    }
}

bool assignable(const Domain& from, const Domain& to) {
    switch (to.kind) {
    case Kind::Integer: return from.kind == Kind::Integer;
    case Kind::Real: return from.is_numeric();
    case Kind::Boolean: return from.kind == Kind::Boolean;
    case Kind::String: return from.is_textual();
    case Kind::Ref: return from.kind == Kind::Ref && from.ref_type == to.ref_type;
    case Kind::Enum:
        if (from.kind == Kind::Enum) {
            return levels_within(from.enum_values, to.enum_values);
        }
        return from.kind == Kind::String && !from.enum_values.empty() &&
               levels_within(from.enum_values, to.enum_values);
    }
    return false;
}

Value evaluate(const Expression& expr, const WorldState& state, const Bindings& bindings,
               const ChanceSource* chance) {
    return Evaluator(state, bindings, chance).eval(expr.root());
}

bool eval_predicate(const WorldState& state, const Expression& expr, const Bindings& bindings) {
    return Evaluator(state, bindings, nullptr).truth(expr.root());
}

std::optional<Bindings> solve(const Expression& expr, const WorldState& state, const Bindings& bindings,
                              const ChanceSource* chance) {
    Evaluator ev(state, bindings, chance);
    std::optional<Bindings> found;
    ev.solve(expr.root(), [&] {
        found = ev.capture();
        return true;
    });
    return found;
}

TypeScope witness_scope(const Expression& expr) {
    TypeScope out;
    collect_witnesses(expr.root(), out);
    return out;
}

}  // namespace worldcore

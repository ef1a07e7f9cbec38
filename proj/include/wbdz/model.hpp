#pragma once

// Core data model: numeric terms, atoms, rules, ground facts with bound
// payloads and the canonical interpretation store.

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace wbdz {

using Integer = boost::multiprecision::cpp_int;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller broke a documented precondition.
class ContractError : public Error {
public:
    using Error::Error;
};

/// A predicate was used with two incompatible variants.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// A query is not over constants only.
class QueryError : public Error {
public:
    using Error::Error;
};

/// An object variable was bound to an integer or vice versa.
class TypeError : public Error {
public:
    using Error::Error;
};

inline Integer floor_div(const Integer& a, const Integer& b) {
    Integer q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

inline Integer ceil_div(const Integer& a, const Integer& b) { return -floor_div(-a, b); }

inline std::string to_string(const Integer& v) { return v.str(); }

// ---------------------------------------------------------------------------
// Linear numeric terms

/// Numeric term k0 + sum ki*mi. Zero coefficients are never stored, so two
/// equal terms always have identical representations.
class LinearExpr {
public:
    LinearExpr() = default;
    LinearExpr(Integer constant) : constant_(std::move(constant)) {}  // NOLINT: literal promotion is intended
    LinearExpr(int constant) : constant_(constant) {}                   // NOLINT

    static LinearExpr variable(const std::string& name, const Integer& coeff = 1) {
        LinearExpr e;
        if (coeff != 0) e.terms_.emplace(name, coeff);
        return e;
    }

    const Integer& constant() const { return constant_; }
    const std::map<std::string, Integer>& terms() const { return terms_; }
    bool is_constant() const { return terms_.empty(); }

    Integer coefficient(const std::string& var) const {
        auto it = terms_.find(var);
        return it == terms_.end() ? Integer(0) : it->second;
    }

    /// The variable name if this term is exactly `X`.
    std::optional<std::string> bare_variable() const {
        if (constant_ == 0 && terms_.size() == 1 && terms_.begin()->second == 1) return terms_.begin()->first;
        return std::nullopt;
    }

    std::set<std::string> variables() const {
        std::set<std::string> out;
        for (const auto& [v, _] : terms_) out.insert(v);
        return out;
    }

    LinearExpr& operator+=(const LinearExpr& o) {
        constant_ += o.constant_;
        for (const auto& [v, k] : o.terms_) add_term(v, k);
        return *this;
    }
    LinearExpr& operator-=(const LinearExpr& o) {
        constant_ -= o.constant_;
        for (const auto& [v, k] : o.terms_) add_term(v, -k);
        return *this;
    }
    LinearExpr& operator*=(const Integer& f) {
        if (f == 0) {
            terms_.clear();
            constant_ = 0;
            return *this;
        }
        constant_ *= f;
        for (auto& [_, k] : terms_) k *= f;
        return *this;
    }
    friend LinearExpr operator+(LinearExpr a, const LinearExpr& b) { return a += b; }
    friend LinearExpr operator-(LinearExpr a, const LinearExpr& b) { return a -= b; }
    friend LinearExpr operator*(LinearExpr a, const Integer& f) { return a *= f; }
    friend LinearExpr operator*(const Integer& f, LinearExpr a) { return a *= f; }
    friend LinearExpr operator-(LinearExpr a) { return a *= Integer(-1); }

    friend bool operator==(const LinearExpr& a, const LinearExpr& b) {
        return a.constant_ == b.constant_ && a.terms_ == b.terms_;
    }
    friend bool operator<(const LinearExpr& a, const LinearExpr& b) {
        if (a.constant_ != b.constant_) return a.constant_ < b.constant_;
        return a.terms_ < b.terms_;
    }

    /// Replaces the given variables by integers; others stay symbolic.
    LinearExpr substitute(const std::map<std::string, Integer>& values) const {
        LinearExpr out(constant_);
        for (const auto& [v, k] : terms_) {
            auto it = values.find(v);
            if (it != values.end())
                out.constant_ += k * it->second;
            else
                out.add_term(v, k);
        }
        return out;
    }

    Integer evaluate(const std::map<std::string, Integer>& values) const {
        LinearExpr e = substitute(values);
        if (!e.is_constant()) throw ContractError("evaluate: unbound variable " + e.terms_.begin()->first);
        return e.constant_;
    }

    std::string to_string() const {
        std::ostringstream os;
        bool first = true;
        for (const auto& [v, k] : terms_) {
            Integer mag = k < 0 ? Integer(-k) : k;
            if (first) {
                if (k < 0) os << '-';
            } else {
                os << (k < 0 ? " - " : " + ");
            }
            if (mag != 1) os << mag.str() << '*';
            os << v;
            first = false;
        }
        if (first) {
            os << constant_.str();
        } else if (constant_ != 0) {
            os << (constant_ < 0 ? " - " : " + ") << (constant_ < 0 ? Integer(-constant_) : constant_).str();
        }
        return os.str();
    }

private:
    void add_term(const std::string& v, const Integer& k) {
        auto [it, inserted] = terms_.emplace(v, k);
        if (!inserted) {
            it->second += k;
            if (it->second == 0) terms_.erase(it);
        } else if (k == 0) {
            terms_.erase(it);
        }
    }

    Integer constant_ = 0;
    std::map<std::string, Integer> terms_;
};

// ---------------------------------------------------------------------------
// Object terms

struct ObjectTerm {
    enum class Kind : std::uint8_t { Constant, Null, Variable };
    Kind kind = Kind::Constant;
    std::string name;           // constant or variable name
    std::uint64_t null_id = 0;  // for nulls

    static ObjectTerm constant(std::string n) { return {Kind::Constant, std::move(n), 0}; }
    static ObjectTerm null(std::uint64_t id) { return {Kind::Null, {}, id}; }
    static ObjectTerm variable(std::string n) { return {Kind::Variable, std::move(n), 0}; }

    bool is_constant() const { return kind == Kind::Constant; }
    bool is_null() const { return kind == Kind::Null; }
    bool is_variable() const { return kind == Kind::Variable; }

    std::string to_string() const {
        if (kind == Kind::Null) return "_:n" + std::to_string(null_id);
        return name;
    }

    friend auto operator<=>(const ObjectTerm&, const ObjectTerm&) = default;
    friend bool operator==(const ObjectTerm&, const ObjectTerm&) = default;
};

using Tuple = std::vector<ObjectTerm>;

inline std::string render_tuple(const Tuple& t) {
    std::string out;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (i) out += ", ";
        out += t[i].to_string();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Atoms and rules

enum class BoundOp : std::uint8_t { Min, Max };
enum class CompareOp : std::uint8_t { Lt, Le };
enum class AtomKind : std::uint8_t { Object, Exact, Bound, Comparison };

inline const char* to_string(BoundOp op) { return op == BoundOp::Min ? "min" : "max"; }
inline BoundOp opposite(BoundOp op) { return op == BoundOp::Min ? BoundOp::Max : BoundOp::Min; }

struct Span {
    std::size_t line = 0;
    std::size_t column = 0;
    std::size_t offset = 0;
    std::size_t length = 0;

    std::string to_string() const { return std::to_string(line) + ":" + std::to_string(column); }
};

struct Atom {
    AtomKind kind = AtomKind::Object;
    std::string predicate;
    std::vector<ObjectTerm> args;  // object arguments; the numeric argument is kept in `value`
    LinearExpr value;              // Exact / Bound payload
    BoundOp op = BoundOp::Min;     // Bound only
    LinearExpr lhs, rhs;           // Comparison: lhs (< | <=) rhs
    CompareOp cmp = CompareOp::Le;

    static Atom object(std::string pred, std::vector<ObjectTerm> args) {
        Atom a;
        a.kind = AtomKind::Object;
        a.predicate = std::move(pred);
        a.args = std::move(args);
        return a;
    }
    static Atom exact(std::string pred, std::vector<ObjectTerm> args, LinearExpr value) {
        Atom a = object(std::move(pred), std::move(args));
        a.kind = AtomKind::Exact;
        a.value = std::move(value);
        return a;
    }
    static Atom bound(std::string pred, std::vector<ObjectTerm> args, BoundOp op, LinearExpr value) {
        Atom a = exact(std::move(pred), std::move(args), std::move(value));
        a.kind = AtomKind::Bound;
        a.op = op;
        return a;
    }
    static Atom comparison(LinearExpr lhs, CompareOp cmp, LinearExpr rhs) {
        Atom a;
        a.kind = AtomKind::Comparison;
        a.lhs = std::move(lhs);
        a.rhs = std::move(rhs);
        a.cmp = cmp;
        return a;
    }

    bool is_comparison() const { return kind == AtomKind::Comparison; }
    bool has_numeric() const { return kind == AtomKind::Exact || kind == AtomKind::Bound; }
    std::size_t arity() const { return args.size() + (has_numeric() ? 1 : 0); }

    std::set<std::string> object_variables() const {
        std::set<std::string> out;
        for (const auto& t : args)
            if (t.is_variable()) out.insert(t.name);
        return out;
    }
    std::set<std::string> numeric_variables() const {
        if (kind == AtomKind::Comparison) {
            auto out = lhs.variables();
            for (auto& v : rhs.variables()) out.insert(v);
            return out;
        }
        if (has_numeric()) return value.variables();
        return {};
    }
    std::set<std::string> variables() const {
        auto out = object_variables();
        for (auto& v : numeric_variables()) out.insert(v);
        return out;
    }
    bool is_ground() const { return variables().empty(); }

    std::string to_string() const {
        if (kind == AtomKind::Comparison)
            return lhs.to_string() + (cmp == CompareOp::Lt ? " < " : " <= ") + rhs.to_string();
        if (args.empty() && kind == AtomKind::Object) return predicate;
        std::string out = predicate + "(" + render_tuple(args);
        if (has_numeric()) {
            if (!args.empty()) out += ", ";
            if (kind == AtomKind::Bound)
                out += std::string(wbdz::to_string(op)) + "(" + value.to_string() + ")";
            else
                out += value.to_string();
        }
        return out + ")";
    }

    friend bool operator==(const Atom& a, const Atom& b) {
        if (a.kind != b.kind) return false;
        if (a.kind == AtomKind::Comparison) return a.cmp == b.cmp && a.lhs == b.lhs && a.rhs == b.rhs;
        if (a.predicate != b.predicate || a.args != b.args) return false;
        if (a.kind == AtomKind::Object) return true;
        if (a.kind == AtomKind::Bound && a.op != b.op) return false;
        return a.value == b.value;
    }
};

struct Rule {
    std::vector<Atom> body;
    std::vector<std::string> existentials;
    Atom head;
    Span span;

    bool is_fact() const { return body.empty() && head.is_ground(); }

    std::set<std::string> body_variables() const {
        std::set<std::string> out;
        for (const auto& a : body)
            for (auto& v : a.variables()) out.insert(v);
        return out;
    }
    std::set<std::string> frontier() const {
        std::set<std::string> out;
        auto bv = body_variables();
        for (auto& v : head.variables())
            if (bv.count(v)) out.insert(v);
        return out;
    }
    std::set<std::string> numeric_variables() const {
        std::set<std::string> out;
        for (const auto& a : body)
            for (auto& v : a.numeric_variables()) out.insert(v);
        for (auto& v : head.numeric_variables()) out.insert(v);
        return out;
    }

    std::string to_string() const {
        std::string out;
        for (std::size_t i = 0; i < body.size(); ++i) {
            if (i) out += ", ";
            out += body[i].to_string();
        }
        if (!body.empty()) out += " -> ";
        if (!existentials.empty()) {
            out += "exists ";
            for (std::size_t i = 0; i < existentials.size(); ++i) {
                if (i) out += ", ";
                out += existentials[i];
            }
            out += " ";
        }
        return out + head.to_string() + ".";
    }

    /// Structural equality, ignoring source spans.
    friend bool operator==(const Rule& a, const Rule& b) {
        return a.body == b.body && a.existentials == b.existentials && a.head == b.head;
    }
};

struct Program {
    std::vector<Rule> statements;  // facts and rules in source order

    std::vector<const Rule*> rules() const {
        std::vector<const Rule*> out;
        for (const auto& r : statements)
            if (!r.is_fact()) out.push_back(&r);
        return out;
    }
    friend bool operator==(const Program&, const Program&) = default;
};

struct PredicateInfo {
    AtomKind kind = AtomKind::Object;
    std::size_t object_arity = 0;
    BoundOp op = BoundOp::Min;
};

/// Predicate signatures of a program; throws SchemaError on variant, arity
/// or bound-operator conflicts.
inline std::map<std::string, PredicateInfo> signature(const Program& p) {
    std::map<std::string, PredicateInfo> sig;
    auto visit = [&](const Atom& a) {
        if (a.is_comparison()) return;
        PredicateInfo info{a.kind, a.args.size(), a.op};
        auto [it, inserted] = sig.emplace(a.predicate, info);
        if (inserted) return;
        const auto& have = it->second;
        if (have.kind != info.kind || have.object_arity != info.object_arity)
            throw SchemaError("predicate '" + a.predicate + "' used with conflicting arity or variant");
        if (have.kind == AtomKind::Bound && have.op != info.op)
            throw SchemaError("predicate '" + a.predicate + "' mixes min and max bound operators");
    };
    for (const auto& r : p.statements) {
        for (const auto& a : r.body) visit(a);
        visit(r.head);
    }
    return sig;
}

// ---------------------------------------------------------------------------
// Ground facts

/// A bound payload; an empty value is UNBOUNDED (+inf for max, -inf for min).
struct BoundValue {
    BoundOp op = BoundOp::Min;
    std::optional<Integer> value;

    static BoundValue finite(BoundOp op, Integer v) { return {op, std::move(v)}; }
    static BoundValue unbounded(BoundOp op) { return {op, std::nullopt}; }
    bool is_unbounded() const { return !value.has_value(); }

    std::string to_string() const {
        std::string inner = value ? value->str() : (op == BoundOp::Max ? "+inf" : "-inf");
        return std::string(wbdz::to_string(op)) + "(" + inner + ")";
    }
    friend bool operator==(const BoundValue&, const BoundValue&) = default;
};

/// True iff `a` implies `b` (same op): min keeps the smaller, max the larger.
inline bool bound_dominates(const BoundValue& a, const BoundValue& b) {
    if (a.op != b.op) throw ContractError("dominance between min and max bounds");
    if (a.is_unbounded()) return true;
    if (b.is_unbounded()) return false;
    return a.op == BoundOp::Min ? *a.value <= *b.value : *a.value >= *b.value;
}

using Payload = std::variant<std::monostate, Integer, BoundValue>;

struct Fact {
    std::string predicate;
    Tuple args;
    Payload payload;

    static Fact object(std::string pred, Tuple args) { return {std::move(pred), std::move(args), std::monostate{}}; }
    static Fact exact(std::string pred, Tuple args, Integer v) { return {std::move(pred), std::move(args), std::move(v)}; }
    static Fact bound(std::string pred, Tuple args, BoundOp op, std::optional<Integer> v) {
        return {std::move(pred), std::move(args), BoundValue{op, std::move(v)}};
    }

    AtomKind kind() const {
        if (std::holds_alternative<Integer>(payload)) return AtomKind::Exact;
        if (std::holds_alternative<BoundValue>(payload)) return AtomKind::Bound;
        return AtomKind::Object;
    }
    const BoundValue& bound_value() const { return std::get<BoundValue>(payload); }
    const Integer& exact_value() const { return std::get<Integer>(payload); }

    bool has_nulls() const {
        for (const auto& t : args)
            if (t.is_null()) return true;
        return false;
    }

    std::string to_string() const {
        if (args.empty() && kind() == AtomKind::Object) return predicate;
        std::string out = predicate + "(" + render_tuple(args);
        if (kind() != AtomKind::Object) {
            if (!args.empty()) out += ", ";
            out += kind() == AtomKind::Exact ? exact_value().str() : bound_value().to_string();
        }
        return out + ")";
    }

    friend bool operator==(const Fact&, const Fact&) = default;
};

/// Converts a ground non-comparison atom into a fact.
inline Fact to_fact(const Atom& a) {
    if (a.is_comparison()) throw ContractError("comparison atoms are not facts");
    for (const auto& t : a.args)
        if (t.is_variable()) throw ContractError("atom is not ground: " + a.to_string());
    if (a.has_numeric() && !a.value.is_constant()) throw ContractError("atom is not ground: " + a.to_string());
    switch (a.kind) {
        case AtomKind::Object: return Fact::object(a.predicate, a.args);
        case AtomKind::Exact: return Fact::exact(a.predicate, a.args, a.value.constant());
        default: return Fact::bound(a.predicate, a.args, a.op, a.value.constant());
    }
}

/// Every interpretation satisfying f1 satisfies f2.
inline bool dominates(const Fact& f1, const Fact& f2) {
    if (f1.predicate != f2.predicate || f1.args != f2.args || f1.kind() != f2.kind())
        throw ContractError("dominates: facts differ in predicate, variant or object tuple");
    switch (f1.kind()) {
        case AtomKind::Object: return true;
        case AtomKind::Exact: return f1.exact_value() == f2.exact_value();
        default:
            if (f1.bound_value().op != f2.bound_value().op) throw ContractError("dominates: bound operators differ");
            return bound_dominates(f1.bound_value(), f2.bound_value());
    }
}

// ---------------------------------------------------------------------------
// Interpretation

/// Canonical fact store. Bound predicates keep one dominant value per object
/// tuple, so insertion order never matters.
class Interpretation {
public:
    struct Relation {
        AtomKind kind = AtomKind::Object;
        BoundOp op = BoundOp::Min;
        std::size_t arity = 0;
        std::set<Tuple> objects;
        std::map<Tuple, std::set<Integer>> exact;
        std::map<Tuple, BoundValue> bound;

        std::size_t size() const {
            std::size_t n = objects.size() + bound.size();
            for (const auto& [_, vs] : exact) n += vs.size();
            return n;
        }
        friend bool operator==(const Relation&, const Relation&) = default;
    };

    /// Returns true iff the store changed.
    bool insert(const Fact& f) {
        auto& rel = relation_for(f);
        switch (f.kind()) {
            case AtomKind::Object: return rel.objects.insert(f.args).second;
            case AtomKind::Exact: return rel.exact[f.args].insert(f.exact_value()).second;
            default: {
                auto [it, inserted] = rel.bound.emplace(f.args, f.bound_value());
                if (inserted) return true;
                if (bound_dominates(it->second, f.bound_value())) return false;
                it->second = f.bound_value();
                return true;
            }
        }
    }

    const Relation* relation(const std::string& pred) const {
        auto it = relations_.find(pred);
        return it == relations_.end() ? nullptr : &it->second;
    }
    const std::map<std::string, Relation>& relations() const { return relations_; }

    std::optional<BoundValue> bound_value(const std::string& pred, const Tuple& t) const {
        const auto* rel = relation(pred);
        if (!rel) return std::nullopt;
        auto it = rel->bound.find(t);
        if (it == rel->bound.end()) return std::nullopt;
        return it->second;
    }

    std::size_t size() const {
        std::size_t n = 0;
        for (const auto& [_, r] : relations_) n += r.size();
        return n;
    }

    /// All stored facts in canonical (sorted) order.
    std::vector<Fact> facts() const {
        std::vector<Fact> out;
        for (const auto& [pred, rel] : relations_) {
            for (const auto& t : rel.objects) out.push_back(Fact::object(pred, t));
            for (const auto& [t, vs] : rel.exact)
                for (const auto& v : vs) out.push_back(Fact::exact(pred, t, v));
            for (const auto& [t, b] : rel.bound) out.push_back(Fact{pred, t, b});
        }
        return out;
    }

    std::string dump() const {
        std::string out;
        for (const auto& f : facts()) out += f.to_string() + "\n";
        return out;
    }

    friend bool operator==(const Interpretation& a, const Interpretation& b) {
        return a.relations_ == b.relations_;
    }

private:
    Relation& relation_for(const Fact& f) {
        auto [it, inserted] = relations_.try_emplace(f.predicate);
        auto& rel = it->second;
        AtomKind kind = f.kind();
        if (inserted) {
            rel.kind = kind;
            rel.arity = f.args.size();
            if (kind == AtomKind::Bound) rel.op = f.bound_value().op;
            return rel;
        }
        if (rel.kind != kind || rel.arity != f.args.size())
            throw SchemaError("fact " + f.to_string() + " conflicts with the stored variant of '" + f.predicate + "'");
        if (kind == AtomKind::Bound && rel.op != f.bound_value().op)
            throw SchemaError("fact " + f.to_string() + " uses the other bound operator");
        return rel;
    }

    std::map<std::string, Relation> relations_;
};

inline std::pair<Interpretation, bool> insert_fact(Interpretation i, const Fact& f) {
    bool changed = i.insert(f);
    return {std::move(i), changed};
}

/// Model check of a ground fact. A numeric literal queried against a bound
/// relation is read with that relation's bound operator.
inline bool satisfies(const Interpretation& interp, const Fact& f) {
    if (f.has_nulls()) throw QueryError("entailment is defined on facts over constants only: " + f.to_string());
    const auto* rel = interp.relation(f.predicate);
    if (!rel) return false;
    switch (f.kind()) {
        case AtomKind::Object: return rel->kind == AtomKind::Object && rel->objects.count(f.args) > 0;
        case AtomKind::Exact: {
            if (rel->kind == AtomKind::Bound) {
                auto it = rel->bound.find(f.args);
                return it != rel->bound.end() &&
                       bound_dominates(it->second, BoundValue::finite(rel->op, f.exact_value()));
            }
            if (rel->kind != AtomKind::Exact) return false;
            auto it = rel->exact.find(f.args);
            return it != rel->exact.end() && it->second.count(f.exact_value()) > 0;
        }
        default: {
            if (rel->kind != AtomKind::Bound || rel->op != f.bound_value().op) return false;
            auto it = rel->bound.find(f.args);
            return it != rel->bound.end() && bound_dominates(it->second, f.bound_value());
        }
    }
}

/// Satisfaction of a ground atom, including comparisons.
inline bool satisfies(const Interpretation& interp, const Atom& a) {
    if (a.is_comparison()) {
        if (!a.lhs.is_constant() || !a.rhs.is_constant()) throw ContractError("comparison is not ground");
        return a.cmp == CompareOp::Lt ? a.lhs.constant() < a.rhs.constant() : a.lhs.constant() <= a.rhs.constant();
    }
    return satisfies(interp, to_fact(a));
}

// ---------------------------------------------------------------------------
// Substitutions

struct Substitution {
    std::map<std::string, ObjectTerm> objects;
    std::map<std::string, Integer> numbers;

    std::string to_string() const {
        std::map<std::string, std::string> all;
        for (const auto& [k, v] : objects) all[k] = v.to_string();
        for (const auto& [k, v] : numbers) all[k] = v.str();
        std::string out = "{";
        bool first = true;
        for (const auto& [k, v] : all) {
            if (!first) out += ", ";
            out += k + "=" + v;
            first = false;
        }
        return out + "}";
    }
};

inline Atom apply_substitution(const Atom& a, const Substitution& s) {
    auto check_numeric = [&](const LinearExpr& e) {
        for (const auto& v : e.variables())
            if (s.objects.count(v) && !s.numbers.count(v))
                throw TypeError("numeric variable " + v + " bound to an object term");
    };
    Atom out = a;
    if (a.is_comparison()) {
        check_numeric(a.lhs);
        check_numeric(a.rhs);
        out.lhs = a.lhs.substitute(s.numbers);
        out.rhs = a.rhs.substitute(s.numbers);
        return out;
    }
    for (auto& t : out.args) {
        if (!t.is_variable()) continue;
        auto it = s.objects.find(t.name);
        if (it != s.objects.end()) {
            t = it->second;
        } else if (s.numbers.count(t.name)) {
            throw TypeError("object variable " + t.name + " bound to an integer");
        }
    }
    if (a.has_numeric()) {
        check_numeric(a.value);
        out.value = a.value.substitute(s.numbers);
    }
    return out;
}

}  // namespace wbdz

#pragma once

// Surface syntax for programs and queries.
//
//   path(start, min(0)).
//   path(V, min(X)), edge(V, W, min(Y)) -> path(W, min(X + Y)).
//   person(P, X) -> exists F family(F, P).
//   ?- path(c, min(8)).

#include "model.hpp"

#include <cctype>
#include <optional>
#include <string>
#include <vector>

namespace wbdz {

struct Diagnostic {
    Span span;
    std::string message;

    std::string format(const std::string& file) const {
        return file + ":" + span.to_string() + ": error: " + message;
    }
};

class ParseError : public Error {
public:
    ParseError(std::vector<Diagnostic> diags, std::string file = "<input>")
        : Error(render(diags, file)), diagnostics_(std::move(diags)), file_(std::move(file)) {}

    const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }
    const std::string& file() const { return file_; }

private:
    static std::string render(const std::vector<Diagnostic>& ds, const std::string& file) {
        std::string out;
        for (const auto& d : ds) {
            if (!out.empty()) out += "\n";
            out += d.format(file);
        }
        return out;
    }
    std::vector<Diagnostic> diagnostics_;
    std::string file_;
};

struct ParseResult {
    Program program;
    std::vector<Diagnostic> diagnostics;
    bool ok() const { return diagnostics.empty(); }
};

struct Query {
    enum class Kind { FactEntailment, Conjunctive };
    Kind kind = Kind::Conjunctive;
    Fact fact;                // FactEntailment
    std::vector<Atom> atoms;  // Conjunctive

    std::string to_string() const {
        if (kind == Kind::FactEntailment) return "?- " + fact.to_string() + ".";
        std::string out = "?- ";
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            if (i) out += ", ";
            out += atoms[i].to_string();
        }
        return out + ".";
    }
};

namespace detail {

enum class Tok {
    Ident,  // lowercase-initial
    Var,    // uppercase-initial
    Int,
    Null,   // _:nK
    LParen,
    RParen,
    Comma,
    Dot,
    Arrow,
    QueryMark,
    Plus,
    Minus,
    Star,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    End,
};

struct Token {
    Tok kind = Tok::End;
    std::string text;
    Span span;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> run(std::vector<Diagnostic>& diags) {
        std::vector<Token> out;
        while (true) {
            skip_space();
            if (pos_ >= src_.size()) {
                out.push_back({Tok::End, "", here(0)});
                return out;
            }
            Span sp = here(1);
            char c = src_[pos_];
            auto simple = [&](Tok k, std::size_t len) {
                sp.length = len;
                out.push_back({k, std::string(src_.substr(pos_, len)), sp});
                advance(len);
            };
            if (std::isdigit(static_cast<unsigned char>(c))) {
                std::size_t start = pos_;
                while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance(1);
                sp.length = pos_ - start;
                out.push_back({Tok::Int, std::string(src_.substr(start, pos_ - start)), sp});
            } else if (std::isalpha(static_cast<unsigned char>(c))) {
                std::size_t start = pos_;
                while (pos_ < src_.size() && is_word(src_[pos_])) advance(1);
                sp.length = pos_ - start;
                Tok k = std::isupper(static_cast<unsigned char>(c)) ? Tok::Var : Tok::Ident;
                out.push_back({k, std::string(src_.substr(start, pos_ - start)), sp});
            } else if (c == '_' && peek(1) == ':' && peek(2) == 'n' && std::isdigit(static_cast<unsigned char>(peek(3)))) {
                std::size_t start = pos_;
                advance(3);
                while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance(1);
                sp.length = pos_ - start;
                out.push_back({Tok::Null, std::string(src_.substr(start + 3, pos_ - start - 3)), sp});
            } else if (c == '-' && peek(1) == '>') {
                simple(Tok::Arrow, 2);
            } else if (c == '?' && peek(1) == '-') {
                simple(Tok::QueryMark, 2);
            } else if (c == '<' && peek(1) == '=') {
                simple(Tok::Le, 2);
            } else if (c == '>' && peek(1) == '=') {
                simple(Tok::Ge, 2);
            } else {
                switch (c) {
                    case '(': simple(Tok::LParen, 1); break;
                    case ')': simple(Tok::RParen, 1); break;
                    case ',': simple(Tok::Comma, 1); break;
                    case '.': simple(Tok::Dot, 1); break;
                    case '+': simple(Tok::Plus, 1); break;
                    case '-': simple(Tok::Minus, 1); break;
                    case '*': simple(Tok::Star, 1); break;
                    case '<': simple(Tok::Lt, 1); break;
                    case '>': simple(Tok::Gt, 1); break;
                    case '=': simple(Tok::Eq, 1); break;
                    default:
                        diags.push_back({sp, std::string("unexpected character '") + c + "'"});
                        advance(1);
                }
            }
        }
    }

private:
    static bool is_word(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
    char peek(std::size_t k) const { return pos_ + k < src_.size() ? src_[pos_ + k] : '\0'; }
    Span here(std::size_t len) const { return {line_, col_, pos_, len}; }

    void advance(std::size_t n) {
        for (std::size_t i = 0; i < n && pos_ < src_.size(); ++i) {
            if (src_[pos_] == '\n') {
                ++line_;
                col_ = 1;
            } else {
                ++col_;
            }
            ++pos_;
        }
    }

    void skip_space() {
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (std::isspace(static_cast<unsigned char>(c))) {
                advance(1);
            } else if (c == '%') {
                while (pos_ < src_.size() && src_[pos_] != '\n') advance(1);
            } else {
                break;
            }
        }
    }

    std::string_view src_;
    std::size_t pos_ = 0, line_ = 1, col_ = 1;
};

struct RawArg {
    enum class Kind { Const, Null, Var, Expr, Bound } kind = Kind::Const;
    std::string name;
    std::uint64_t null_id = 0;
    LinearExpr expr;
    BoundOp op = BoundOp::Min;
    Span span;
};

struct RawAtom {
    bool comparison = false;
    std::string pred;
    std::vector<RawArg> args;
    LinearExpr lhs, rhs;
    CompareOp cmp = CompareOp::Le;
    Span span;
};

struct RawStatement {
    std::vector<RawAtom> body;
    std::vector<std::pair<std::string, Span>> existentials;
    RawAtom head;
    Span span;
};

struct SyntaxError {
    Diagnostic diag;
};

class Parser {
public:
    Parser(std::vector<Token> toks, std::vector<Diagnostic>& diags) : toks_(std::move(toks)), diags_(diags) {}

    bool at_end() const { return cur().kind == Tok::End; }

    /// Parses one statement; on error records a diagnostic and skips past the next '.'.
    std::optional<RawStatement> statement() {
        std::size_t start = i_;
        try {
            RawStatement st;
            st.span = cur().span;
            if (cur().kind == Tok::Arrow) {
                next();
            } else if (!is_exists()) {
                auto atoms = conjunction();
                if (cur().kind == Tok::Arrow) {
                    next();
                    st.body = std::move(atoms);
                } else if (cur().kind == Tok::Dot && atoms.size() == 1 && !atoms[0].comparison) {
                    next();
                    st.head = std::move(atoms[0]);
                    return st;
                } else {
                    fail(cur().span, "expected '->' or '.' after atom");
                }
            }
            if (is_exists()) {
                next();
                while (true) {
                    const auto& t = expect(Tok::Var, "existential variable");
                    st.existentials.emplace_back(t.text, t.span);
                    if (cur().kind == Tok::Comma && look(1).kind == Tok::Var) {
                        next();
                        continue;
                    }
                    break;
                }
            }
            auto head = atoms_at_head();
            st.head = std::move(head);
            expect(Tok::Dot, "'.'");
            return st;
        } catch (const SyntaxError& e) {
            diags_.push_back(e.diag);
            if (i_ == start) next();
            while (!at_end() && cur().kind != Tok::Dot) next();
            if (!at_end()) next();
            return std::nullopt;
        }
    }

    /// Parses `?- a1, ..., ak.`; the leading marker and final dot are optional.
    std::vector<RawAtom> query() {
        if (cur().kind == Tok::QueryMark) next();
        auto atoms = conjunction();
        if (cur().kind == Tok::Dot) next();
        if (!at_end()) fail(cur().span, "trailing input after query");
        return atoms;
    }

private:
    const Token& cur() const { return toks_[i_]; }
    const Token& look(std::size_t k) const { return toks_[std::min(i_ + k, toks_.size() - 1)]; }
    void next() {
        if (i_ + 1 < toks_.size()) ++i_;
    }
    bool is_exists() const { return cur().kind == Tok::Ident && cur().text == "exists"; }

    [[noreturn]] void fail(const Span& sp, const std::string& msg) const { throw SyntaxError{{sp, msg}}; }

    const Token& expect(Tok k, const char* what) {
        if (cur().kind != k) fail(cur().span, std::string("expected ") + what + describe());
        const Token& t = cur();
        next();
        return t;
    }

    std::string describe() const {
        if (cur().kind == Tok::End) return " but reached end of input";
        return " near '" + cur().text + "'";
    }

    RawAtom atoms_at_head() {
        auto a = atom();
        if (a.comparison) fail(a.span, "rule head cannot be a comparison");
        return a;
    }

    std::vector<RawAtom> conjunction() {
        std::vector<RawAtom> out;
        while (true) {
            auto more = literal();
            for (auto& a : more) out.push_back(std::move(a));
            if (cur().kind != Tok::Comma) break;
            next();
        }
        return out;
    }

    // One body literal; `=` expands into two atoms.
    std::vector<RawAtom> literal() {
        if (cur().kind == Tok::Ident) return {atom()};
        Span sp = cur().span;
        bool bare = false;
        LinearExpr lhs = expr(bare);
        Tok op = cur().kind;
        if (op != Tok::Lt && op != Tok::Le && op != Tok::Gt && op != Tok::Ge && op != Tok::Eq)
            fail(cur().span, "expected comparison operator" + describe());
        next();
        LinearExpr rhs = expr(bare);
        auto make = [&](LinearExpr l, CompareOp c, LinearExpr r) {
            RawAtom a;
            a.comparison = true;
            a.lhs = std::move(l);
            a.rhs = std::move(r);
            a.cmp = c;
            a.span = sp;
            return a;
        };
        switch (op) {
            case Tok::Lt: return {make(lhs, CompareOp::Lt, rhs)};
            case Tok::Le: return {make(lhs, CompareOp::Le, rhs)};
            case Tok::Gt: return {make(rhs, CompareOp::Lt, lhs)};
            case Tok::Ge: return {make(rhs, CompareOp::Le, lhs)};
            default: return {make(lhs, CompareOp::Le, rhs), make(rhs, CompareOp::Le, lhs)};
        }
    }

    RawAtom atom() {
        if (cur().kind != Tok::Ident) fail(cur().span, "expected predicate name" + describe());
        RawAtom a;
        a.span = cur().span;
        a.pred = cur().text;
        if (a.pred == "exists" || a.pred == "min" || a.pred == "max")
            fail(a.span, "'" + a.pred + "' is reserved and cannot name a predicate");
        next();
        if (cur().kind != Tok::LParen) return a;
        next();
        while (true) {
            a.args.push_back(argument());
            if (cur().kind == Tok::Comma) {
                next();
                continue;
            }
            expect(Tok::RParen, "',' or ')'");
            break;
        }
        return a;
    }

    RawArg argument() {
        RawArg r;
        r.span = cur().span;
        if (cur().kind == Tok::Ident) {
            if ((cur().text == "min" || cur().text == "max") && look(1).kind == Tok::LParen) {
                r.kind = RawArg::Kind::Bound;
                r.op = cur().text == "min" ? BoundOp::Min : BoundOp::Max;
                next();
                next();
                bool bare = false;
                r.expr = expr(bare);
                expect(Tok::RParen, "')'");
                return r;
            }
            r.kind = RawArg::Kind::Const;
            r.name = cur().text;
            next();
            return r;
        }
        if (cur().kind == Tok::Null) {
            r.kind = RawArg::Kind::Null;
            r.null_id = std::stoull(cur().text);
            next();
            return r;
        }
        bool bare = false;
        r.expr = expr(bare);
        if (bare) {
            r.kind = RawArg::Kind::Var;
            r.name = *r.expr.bare_variable();
        } else {
            r.kind = RawArg::Kind::Expr;
        }
        return r;
    }

    // expr := term (('+'|'-') term)*; `bare` is set when the result is a lone variable token.
    LinearExpr expr(bool& bare) {
        std::size_t start = i_;
        LinearExpr e = term();
        while (cur().kind == Tok::Plus || cur().kind == Tok::Minus) {
            bool minus = cur().kind == Tok::Minus;
            next();
            LinearExpr t = term();
            if (minus)
                e -= t;
            else
                e += t;
        }
        bare = (i_ == start + 1) && toks_[start].kind == Tok::Var;
        return e;
    }

    LinearExpr term() {
        Span sp = cur().span;
        LinearExpr e = unary();
        while (cur().kind == Tok::Star) {
            next();
            LinearExpr f = unary();
            if (e.is_constant()) {
                e = f * e.constant();
            } else if (f.is_constant()) {
                e *= f.constant();
            } else {
                fail(sp, "non-linear product of variables");
            }
        }
        return e;
    }

    LinearExpr unary() {
        switch (cur().kind) {
            case Tok::Minus: {
                next();
                return -unary();
            }
            case Tok::Plus: {
                next();
                return unary();
            }
            case Tok::Int: {
                Integer v(cur().text);
                next();
                return LinearExpr(v);
            }
            case Tok::Var: {
                auto e = LinearExpr::variable(cur().text);
                next();
                return e;
            }
            case Tok::LParen: {
                next();
                bool bare = false;
                LinearExpr e = expr(bare);
                expect(Tok::RParen, "')'");
                return e;
            }
            default: fail(cur().span, "expected numeric term" + describe());
        }
    }

    std::vector<Token> toks_;
    std::size_t i_ = 0;
    std::vector<Diagnostic>& diags_;
};

struct PredState {
    std::size_t arity = 0;  // total argument count including the numeric one
    AtomKind kind = AtomKind::Object;
    BoundOp op = BoundOp::Min;
    Span first_bound;
};

// Program-wide inference of predicate kinds and per-statement numeric
// variables, followed by conversion of raw atoms into typed atoms.
class Elaborator {
public:
    Elaborator(std::vector<Diagnostic>& diags, const std::map<std::string, PredicateInfo>* seed) : diags_(diags) {
        if (!seed) return;
        for (const auto& [name, info] : *seed) {
            PredState s;
            s.arity = info.object_arity + (info.kind == AtomKind::Object ? 0 : 1);
            s.kind = info.kind;
            s.op = info.op;
            preds_[name] = s;
        }
    }

    std::vector<std::optional<Rule>> run(std::vector<RawStatement>& stmts) {
        infer(stmts);
        std::vector<std::optional<Rule>> out;
        for (auto& st : stmts) out.push_back(build(st));
        return out;
    }

private:
    static bool numeric_arg(const RawArg& a) {
        return a.kind == RawArg::Kind::Expr || a.kind == RawArg::Kind::Bound;
    }

    template <typename F>
    static void each_atom(RawStatement& st, F&& f) {
        for (auto& a : st.body) f(a);
        f(st.head);
    }

    std::set<std::string> numeric_vars(RawStatement& st) const {
        std::set<std::string> nv;
        each_atom(st, [&](RawAtom& a) {
            if (a.comparison) {
                for (auto& v : a.lhs.variables()) nv.insert(v);
                for (auto& v : a.rhs.variables()) nv.insert(v);
                return;
            }
            for (const auto& arg : a.args)
                if (numeric_arg(arg))
                    for (auto& v : arg.expr.variables()) nv.insert(v);
            if (a.args.empty() || a.args.back().kind != RawArg::Kind::Var) return;
            auto it = preds_.find(a.pred);
            if (it != preds_.end() && it->second.kind != AtomKind::Object) nv.insert(a.args.back().name);
        });
        return nv;
    }

    void infer(std::vector<RawStatement>& stmts) {
        bool changed = true;
        while (changed) {
            changed = false;
            for (auto& st : stmts) {
                auto nv = numeric_vars(st);
                each_atom(st, [&](RawAtom& a) {
                    if (a.comparison) return;
                    auto [it, inserted] = preds_.try_emplace(a.pred);
                    auto& ps = it->second;
                    if (inserted) {
                        ps.arity = a.args.size();
                        changed = true;
                    }
                    if (a.args.empty() || ps.arity != a.args.size()) return;
                    const auto& last = a.args.back();
                    if (last.kind == RawArg::Kind::Bound) {
                        if (ps.kind != AtomKind::Bound) {
                            ps.kind = AtomKind::Bound;
                            ps.op = last.op;
                            ps.first_bound = last.span;
                            changed = true;
                        }
                    } else if (ps.kind == AtomKind::Object &&
                               (last.kind == RawArg::Kind::Expr ||
                                (last.kind == RawArg::Kind::Var && nv.count(last.name)))) {
                        ps.kind = AtomKind::Exact;
                        changed = true;
                    }
                });
            }
        }
    }

    std::optional<Rule> build(RawStatement& st) {
        std::size_t before = diags_.size();
        auto nv = numeric_vars(st);
        Rule r;
        r.span = st.span;
        std::set<std::string> object_vars;
        for (auto& a : st.body) r.body.push_back(convert(a, object_vars));
        r.head = convert(st.head, object_vars);
        for (const auto& v : nv)
            if (object_vars.count(v)) error(st.span, "variable " + v + " is used both as an object and as a number");

        std::set<std::string> body_vars = r.body_variables();
        std::set<std::string> head_vars = r.head.variables();
        std::set<std::string> ex;
        for (const auto& [v, sp] : st.existentials) {
            if (!ex.insert(v).second) error(sp, "existential variable " + v + " listed twice");
            if (!head_vars.count(v)) error(sp, "existential variable " + v + " does not occur in the head");
            if (body_vars.count(v)) error(sp, "existential variable " + v + " also occurs in the body");
            r.existentials.push_back(v);
        }
        for (const auto& v : head_vars)
            if (!body_vars.count(v) && !ex.count(v))
                error(st.head.span, "head variable " + v + " is not bound by the body");
        if (diags_.size() != before) return std::nullopt;
        return r;
    }

    Atom convert(RawAtom& a, std::set<std::string>& object_vars) {
        if (a.comparison) return Atom::comparison(a.lhs, a.cmp, a.rhs);
        const auto& ps = preds_.at(a.pred);
        if (ps.arity != a.args.size()) {
            error(a.span, "predicate '" + a.pred + "' used with arity " + std::to_string(a.args.size()) +
                              ", expected " + std::to_string(ps.arity));
            return Atom::object(a.pred, {});
        }
        std::size_t n_obj = ps.kind == AtomKind::Object ? a.args.size() : a.args.size() - 1;
        std::vector<ObjectTerm> args;
        for (std::size_t i = 0; i < n_obj; ++i) {
            const auto& arg = a.args[i];
            switch (arg.kind) {
                case RawArg::Kind::Const: args.push_back(ObjectTerm::constant(arg.name)); break;
                case RawArg::Kind::Null: args.push_back(ObjectTerm::null(arg.null_id)); break;
                case RawArg::Kind::Var:
                    object_vars.insert(arg.name);
                    args.push_back(ObjectTerm::variable(arg.name));
                    break;
                default: error(arg.span, "numeric term not in the last position of '" + a.pred + "'");
            }
        }
        if (ps.kind == AtomKind::Object) return Atom::object(a.pred, std::move(args));
        const auto& last = a.args.back();
        LinearExpr value;
        switch (last.kind) {
            case RawArg::Kind::Const:
            case RawArg::Kind::Null:
                error(last.span, "'" + a.pred + "' is numeric but its last argument is an object term");
                break;
            case RawArg::Kind::Var: value = LinearExpr::variable(last.name); break;
            default: value = last.expr;
        }
        if (last.kind == RawArg::Kind::Bound && last.op != ps.op)
            error(last.span, "predicate '" + a.pred + "' mixes min and max bound operators");
        if (ps.kind == AtomKind::Bound) return Atom::bound(a.pred, std::move(args), ps.op, std::move(value));
        return Atom::exact(a.pred, std::move(args), std::move(value));
    }

    void error(const Span& sp, std::string msg) { diags_.push_back({sp, std::move(msg)}); }

    std::vector<Diagnostic>& diags_;
    std::map<std::string, PredState> preds_;
};

}  // namespace detail

/// Parses a whole program. Diagnostics are collected rather than thrown;
/// the program is empty whenever any diagnostic was produced.
inline ParseResult parse_program(std::string_view text) {
    ParseResult res;
    auto toks = detail::Lexer(text).run(res.diagnostics);
    detail::Parser p(std::move(toks), res.diagnostics);
    std::vector<detail::RawStatement> raw;
    while (!p.at_end()) {
        auto st = p.statement();
        if (st) raw.push_back(std::move(*st));
    }
    detail::Elaborator el(res.diagnostics, nullptr);
    auto rules = el.run(raw);
    if (!res.ok()) return res;
    for (auto& r : rules) res.program.statements.push_back(std::move(*r));
    return res;
}

inline Program parse_program_or_throw(std::string_view text, const std::string& file = "<input>") {
    auto res = parse_program(text);
    if (!res.ok()) throw ParseError(res.diagnostics, file);
    return std::move(res.program);
}

/// Parses a query. When `context` is given, predicate kinds are taken from
/// it so that e.g. `own(F, a, 7)` reads as a bound atom of the program.
inline Query parse_query(std::string_view text, const Program* context = nullptr) {
    std::vector<Diagnostic> diags;
    auto toks = detail::Lexer(text).run(diags);
    detail::Parser p(std::move(toks), diags);
    std::vector<detail::RawAtom> atoms;
    try {
        atoms = p.query();
    } catch (const detail::SyntaxError& e) {
        diags.push_back(e.diag);
    }
    if (!diags.empty()) throw ParseError(diags, "<query>");

    for (const auto& a : atoms)
        for (const auto& arg : a.args)
            if (arg.kind == detail::RawArg::Kind::Null) throw QueryError("query contains a labelled null");

    std::optional<std::map<std::string, PredicateInfo>> sig;
    if (context) sig = signature(*context);
    // Query atoms are elaborated as the body of a throwaway rule.
    detail::RawStatement st;
    st.body = atoms;
    st.head.pred = "__query_head";
    std::vector<detail::RawStatement> stmts{st};
    detail::Elaborator el(diags, sig ? &*sig : nullptr);
    auto built = el.run(stmts);
    if (!diags.empty()) throw ParseError(diags, "<query>");

    Query q;
    q.atoms = built[0]->body;
    if (q.atoms.size() == 1 && !q.atoms[0].is_comparison() && q.atoms[0].is_ground()) {
        q.kind = Query::Kind::FactEntailment;
        q.fact = to_fact(q.atoms[0]);
    }
    return q;
}

/// Canonical text: one statement per line.
inline std::string render(const Program& p) {
    std::string out;
    for (const auto& r : p.statements) out += r.to_string() + "\n";
    return out;
}

}  // namespace wbdz

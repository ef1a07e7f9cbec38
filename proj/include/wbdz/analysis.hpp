#pragma once

// Positions, affected positions, variable classes, wardedness and the
// bound/type-consistency conditions.

#include "model.hpp"

#include <algorithm>
#include <set>
#include <string>
#include <vector>

namespace wbdz {

/// Position P[i] with 1-based index; the numeric argument of a bound or
/// exact predicate is the last index.
struct Position {
    std::string predicate;
    std::size_t index = 1;

    std::string to_string() const { return predicate + "[" + std::to_string(index) + "]"; }
    friend auto operator<=>(const Position&, const Position&) = default;
};

using PositionSet = std::set<Position>;

enum class VarClass { Harmless, Harmful, Dangerous };

inline const char* to_string(VarClass c) {
    switch (c) {
        case VarClass::Harmless: return "harmless";
        case VarClass::Harmful: return "harmful";
        default: return "dangerous";
    }
}

struct Witness {
    std::size_t rule = 0;  // index into Program::statements
    Span span;
    std::string detail;    // short token, no spaces
    std::string message;

    std::string token() const { return "r" + std::to_string(rule) + "@" + span.to_string() + ":" + detail; }
};

struct CheckResult {
    std::string name;
    bool pass = true;
    std::vector<Witness> witnesses;

    void fail(Witness w) {
        pass = false;
        witnesses.push_back(std::move(w));
    }
};

struct RuleClassification {
    std::size_t rule = 0;
    std::map<std::string, VarClass> variables;
};

struct AnalysisReport {
    std::vector<CheckResult> checks;
    std::vector<RuleClassification> classification;

    bool passed() const {
        return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
    }
    const CheckResult* find(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return &c;
        return nullptr;
    }

    std::string machine() const {
        std::string out;
        for (const auto& c : checks) {
            out += "CHECK " + c.name + (c.pass ? " PASS" : " FAIL");
            for (const auto& w : c.witnesses) out += " " + w.token();
            out += "\n";
        }
        return out;
    }

    std::string text() const {
        std::string out;
        for (const auto& c : checks) {
            out += c.name + ": " + (c.pass ? "pass" : "FAIL") + "\n";
            for (const auto& w : c.witnesses)
                out += "  rule " + std::to_string(w.rule) + " at " + w.span.to_string() + ": " + w.message + "\n";
        }
        return out;
    }
};

namespace detail {

template <typename F>
void for_object_positions(const Atom& a, F&& f) {
    if (a.is_comparison()) return;
    for (std::size_t i = 0; i < a.args.size(); ++i)
        if (a.args[i].is_variable()) f(a.args[i].name, Position{a.predicate, i + 1});
}

inline bool in_body_numeric(const Rule& r, const std::string& x) {
    for (const auto& a : r.body)
        if (a.numeric_variables().count(x)) return true;
    return false;
}

}  // namespace detail

inline PositionSet positions(const Program& p) {
    PositionSet out;
    for (const auto& r : p.statements) {
        auto add = [&](const Atom& a) {
            if (a.is_comparison()) return;
            for (std::size_t i = 1; i <= a.arity(); ++i) out.insert({a.predicate, i});
        };
        for (const auto& a : r.body) add(a);
        add(r.head);
    }
    return out;
}

/// Least fixpoint over object positions. Numeric positions never carry nulls.
inline PositionSet affected_positions(const Program& p) {
    PositionSet aff;
    for (const auto& r : p.statements) {
        std::set<std::string> ex(r.existentials.begin(), r.existentials.end());
        detail::for_object_positions(r.head, [&](const std::string& v, const Position& pos) {
            if (ex.count(v)) aff.insert(pos);
        });
    }
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& r : p.statements) {
            for (const auto& x : r.frontier()) {
                bool only_affected = true, seen = false;
                for (const auto& a : r.body)
                    detail::for_object_positions(a, [&](const std::string& v, const Position& pos) {
                        if (v != x) return;
                        seen = true;
                        if (!aff.count(pos)) only_affected = false;
                    });
                if (!seen || !only_affected || detail::in_body_numeric(r, x)) continue;
                detail::for_object_positions(r.head, [&](const std::string& v, const Position& pos) {
                    if (v == x && aff.insert(pos).second) changed = true;
                });
            }
        }
    }
    return aff;
}

inline VarClass classify_variable(const Rule& r, const std::string& x, const PositionSet& affected) {
    if (!r.body_variables().count(x)) throw ContractError("variable " + x + " does not occur in the rule body");
    bool harmless = detail::in_body_numeric(r, x);
    for (const auto& a : r.body)
        detail::for_object_positions(a, [&](const std::string& v, const Position& pos) {
            if (v == x && !affected.count(pos)) harmless = true;
        });
    if (harmless) return VarClass::Harmless;
    return r.frontier().count(x) ? VarClass::Dangerous : VarClass::Harmful;
}

inline VarClass classify_variable(const Rule& r, const std::string& x, const Program& p) {
    return classify_variable(r, x, affected_positions(p));
}

namespace detail {

inline std::string join(const std::set<std::string>& xs, const char* sep = ",") {
    std::string out;
    for (const auto& x : xs) {
        if (!out.empty()) out += sep;
        out += x;
    }
    return out;
}

inline void check_warded_into(const Program& p, const PositionSet& aff, CheckResult& res) {
    for (std::size_t i = 0; i < p.statements.size(); ++i) {
        const auto& r = p.statements[i];
        if (r.is_fact()) continue;
        std::set<std::string> dangerous;
        for (const auto& x : r.body_variables())
            if (classify_variable(r, x, aff) == VarClass::Dangerous) dangerous.insert(x);
        if (dangerous.empty()) continue;
        bool found = false;
        for (std::size_t w = 0; w < r.body.size() && !found; ++w) {
            const auto& ward = r.body[w];
            if (ward.is_comparison()) continue;
            auto wv = ward.variables();
            if (!std::includes(wv.begin(), wv.end(), dangerous.begin(), dangerous.end())) continue;
            std::set<std::string> rest;
            for (std::size_t j = 0; j < r.body.size(); ++j)
                if (j != w)
                    for (auto& v : r.body[j].variables()) rest.insert(v);
            bool ok = true;
            for (const auto& v : wv)
                if (rest.count(v) && classify_variable(r, v, aff) != VarClass::Harmless) ok = false;
            found = ok;
        }
        if (!found)
            res.fail({i, r.span, "dangerous=" + join(dangerous),
                      "no ward covers dangerous variables {" + join(dangerous, ", ") +
                          "} while sharing only harmless variables"});
    }
}

}  // namespace detail

inline CheckResult check_warded(const Program& p) {
    CheckResult res{"warded", true, {}};
    detail::check_warded_into(p, affected_positions(p), res);
    return res;
}

/// Wardedness plus: existentials only at object positions, and exact
/// predicates only derived with a constant numeric argument.
inline CheckResult check_warded_bound(const Program& p) {
    CheckResult res{"warded-bound", true, {}};
    CheckResult w = check_warded(p);
    for (auto& wit : w.witnesses) res.fail(std::move(wit));
    for (std::size_t i = 0; i < p.statements.size(); ++i) {
        const auto& r = p.statements[i];
        if (!r.head.has_numeric()) continue;
        auto nv = r.head.value.variables();
        for (const auto& z : r.existentials)
            if (nv.count(z))
                res.fail({i, r.span, "numeric-existential=" + z,
                          "existential variable " + z + " occurs in a numeric position"});
        if (r.head.kind == AtomKind::Exact && !r.is_fact() && !r.head.value.is_constant())
            res.fail({i, r.span, "exact-head=" + r.head.predicate,
                      "exact predicate " + r.head.predicate + " derived with a non-constant value"});
    }
    return res;
}

namespace detail {

struct Occurrences {
    std::size_t count = 0;
    std::vector<const Atom*> atoms;
};

inline Occurrences numeric_occurrences(const Rule& r, const std::string& x) {
    Occurrences o;
    for (const auto& a : r.body)
        if (a.has_numeric() && a.value.variables().count(x)) {
            ++o.count;
            o.atoms.push_back(&a);
        }
    return o;
}

// Exact atoms pin their value, so they satisfy either bound type.
inline bool has_type(const Atom& a, BoundOp want) { return a.kind == AtomKind::Exact || a.op == want; }

}  // namespace detail

inline CheckResult check_type_consistency(const Program& p) {
    CheckResult res{"type-consistency", true, {}};
    for (std::size_t i = 0; i < p.statements.size(); ++i) {
        const auto& r = p.statements[i];
        if (r.is_fact()) continue;
        if (r.head.kind == AtomKind::Bound) {
            for (const auto& [x, k] : r.head.value.terms()) {
                BoundOp want = k > 0 ? r.head.op : opposite(r.head.op);
                auto occ = detail::numeric_occurrences(r, x);
                if (occ.count != 1) {
                    res.fail({i, r.span, "head-var=" + x,
                              "head variable " + x + " occurs in " + std::to_string(occ.count) +
                                  " numeric body atoms, expected exactly one"});
                } else if (!detail::has_type(*occ.atoms[0], want)) {
                    res.fail({i, r.span, "head-var=" + x,
                              "head variable " + x + " needs a " + to_string(want) + " body atom, found " +
                                  occ.atoms[0]->to_string()});
                }
            }
        }
        for (const auto& a : r.body) {
            if (!a.is_comparison()) continue;
            auto side = [&](const LinearExpr& t, bool left) {
                for (const auto& [x, k] : t.terms()) {
                    bool pos = k > 0;
                    BoundOp want = (left == pos) ? BoundOp::Min : BoundOp::Max;
                    auto occ = detail::numeric_occurrences(r, x);
                    if (occ.count != 1 || !detail::has_type(*occ.atoms[0], want))
                        res.fail({i, r.span, "comparison-var=" + x,
                                  "variable " + x + " in comparison " + a.to_string() + " needs a unique " +
                                      to_string(want) + " body atom"});
                }
            };
            side(a.lhs, true);
            side(a.rhs, false);
        }
    }
    return res;
}

/// All checks, staged so that every failure is reported.
inline AnalysisReport analyze(const Program& p) {
    AnalysisReport rep;
    auto aff = affected_positions(p);
    rep.checks.push_back(check_warded(p));
    rep.checks.push_back(check_warded_bound(p));
    rep.checks.push_back(check_type_consistency(p));
    for (std::size_t i = 0; i < p.statements.size(); ++i) {
        const auto& r = p.statements[i];
        if (r.is_fact()) continue;
        RuleClassification rc{i, {}};
        for (const auto& x : r.body_variables()) rc.variables[x] = classify_variable(r, x, aff);
        rep.classification.push_back(std::move(rc));
    }
    return rep;
}

}  // namespace wbdz

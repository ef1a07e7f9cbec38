#pragma once

// Forward-chaining reasoner: memoised rule firing with per-trigger integer
// optimisation, divergence detection on the value propagation graph, and a
// null-pattern termination check for existential heads.

#include "analysis.hpp"
#include "model.hpp"
#include "solver.hpp"

#include <cstdlib>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace wbdz {

class BudgetExhausted : public Error {
public:
    using Error::Error;
};

inline constexpr std::uint64_t kDefaultBudget = 1'000'000;

/// Default derivation budget, overridable through WBDZ_BUDGET.
inline std::uint64_t default_budget() {
    if (const char* env = std::getenv("WBDZ_BUDGET")) {
        char* end = nullptr;
        unsigned long long v = std::strtoull(env, &end, 10);
        if (end && *end == '\0' && v > 0) return v;
    }
    return kDefaultBudget;
}

struct EngineOptions {
    std::uint64_t budget = default_budget();
    bool trace = false;
    bool unchecked = false;  // skip the static checks in run()
};

enum class RunStatus { Fixpoint, BudgetExhausted };

struct TraceEvent {
    enum class Kind { Fact, Fire, Suppress, Diverge };
    Kind kind = Kind::Fire;
    std::size_t iteration = 0;
    std::size_t rule = 0;
    Span span;
    std::string subst;
    Fact fact;
    std::string reason;

    std::string to_string() const {
        std::string it = "ITER " + std::to_string(iteration) + " ";
        switch (kind) {
            case Kind::Fact: return it + "FACT => " + fact.to_string();
            case Kind::Diverge: return it + "DIVERGE => " + fact.to_string();
            case Kind::Fire:
                return it + "FIRE r" + std::to_string(rule) + "@" + span.to_string() + " " + subst + " => " +
                       fact.to_string();
            default:
                return it + "SUPPRESS r" + std::to_string(rule) + "@" + span.to_string() + " " + subst + " => " +
                       fact.to_string() + " " + reason;
        }
    }
};

using NodeKey = std::pair<std::string, Tuple>;

struct RunResult {
    Interpretation model;
    std::vector<TraceEvent> trace;
    RunStatus status = RunStatus::Fixpoint;
    std::size_t iterations = 0;
    std::uint64_t events = 0;
    std::vector<NodeKey> divergent;

    std::string trace_text() const {
        std::string out;
        for (const auto& e : trace) out += e.to_string() + "\n";
        return out;
    }
};

/// Image of one body atom under an object homomorphism.
struct MatchedAtom {
    std::size_t atom = 0;
    const Tuple* tuple = nullptr;
    const Integer* exact = nullptr;    // exact atoms
    const BoundValue* bound = nullptr; // bound atoms, read at use time
};

struct Match {
    Substitution subst;  // object variables only
    std::vector<MatchedAtom> atoms;
};

struct DerivedFact {
    std::size_t rule = 0;
    Fact fact;
    Substitution subst;
    std::vector<NodeKey> parents;
    std::vector<ObjectTerm> nulls;
};

/// Affine label u_dst = k * u_src + c on raw (unoriented) bound values.
struct EdgeLabel {
    Integer k = 1;
    Integer c = 0;
};

class Reasoner {
public:
    explicit Reasoner(const Program& p, EngineOptions opts = {}) : program_(p), opts_(opts) {
        for (std::size_t i = 0; i < p.statements.size(); ++i)
            if (!p.statements[i].is_fact()) rules_.push_back(i);
    }

    const Interpretation& interpretation() const { return j_; }
    const std::vector<std::size_t>& rule_ids() const { return rules_; }
    const Rule& rule(std::size_t id) const { return program_.statements.at(id); }

    void insert_facts() {
        for (const auto& r : program_.statements) {
            if (!r.is_fact()) continue;
            Fact f = to_fact(r.head);
            j_.insert(f);
            record(TraceEvent{TraceEvent::Kind::Fact, 0, 0, r.span, "", f, ""});
        }
    }

    /// All object homomorphisms of the rule body into the current store, in index order.
    std::vector<Match> matches(std::size_t rule_id) const {
        const Rule& r = rule(rule_id);
        std::vector<Match> out;
        Match m;
        join(r, 0, m, out);
        return out;
    }

    /// Integer constraint of a trigger against the current bound values.
    LinearSystem build_constraint(std::size_t rule_id, const Match& m) const {
        const Rule& r = rule(rule_id);
        LinearSystem s;
        for (const auto& v : r.numeric_variables()) s.declare(v);
        for (const auto& ma : m.atoms) {
            const Atom& a = r.body[ma.atom];
            if (a.kind == AtomKind::Exact) {
                s.add_eq(a.value - LinearExpr(*ma.exact));
            } else if (a.kind == AtomKind::Bound && !ma.bound->is_unbounded()) {
                const Integer& v = *ma.bound->value;
                if (a.op == BoundOp::Min)
                    s.add_le(LinearExpr(v) - a.value);
                else
                    s.add_le(a.value - LinearExpr(v));
            }
        }
        for (const auto& a : r.body) {
            if (!a.is_comparison()) continue;
            if (a.cmp == CompareOp::Lt)
                s.add_lt(a.lhs - a.rhs);
            else
                s.add_le(a.lhs - a.rhs);
        }
        return s;
    }

    /// Evaluates the head for one trigger; nullopt when the constraint is infeasible.
    std::optional<Fact> derive(std::size_t rule_id, const Match& m, const std::vector<ObjectTerm>& nulls) const {
        const Rule& r = rule(rule_id);
        LinearSystem s = build_constraint(rule_id, m);
        Substitution sub = m.subst;
        for (std::size_t i = 0; i < r.existentials.size(); ++i) sub.objects[r.existentials[i]] = nulls.at(i);
        Tuple args;
        for (const auto& t : r.head.args) args.push_back(t.is_variable() ? sub.objects.at(t.name) : t);
        switch (r.head.kind) {
            case AtomKind::Object:
                if (!s.empty() && !feasible(s)) return std::nullopt;
                return Fact::object(r.head.predicate, std::move(args));
            case AtomKind::Exact: {
                if (r.head.value.is_constant()) {
                    if (!s.empty() && !feasible(s)) return std::nullopt;
                    return Fact::exact(r.head.predicate, std::move(args), r.head.value.constant());
                }
                auto o = optimize(s, LinearExpr(0), Direction::Maximize);
                if (!o.optimal()) return std::nullopt;
                return Fact::exact(r.head.predicate, std::move(args), r.head.value.evaluate(o.witness));
            }
            default: {
                Direction dir = r.head.op == BoundOp::Min ? Direction::Minimize : Direction::Maximize;
                auto o = optimize(s, r.head.value, dir);
                if (o.infeasible()) return std::nullopt;
                if (o.unbounded()) return Fact::bound(r.head.predicate, std::move(args), r.head.op, std::nullopt);
                return Fact::bound(r.head.predicate, std::move(args), r.head.op, o.value);
            }
        }
    }

    /// First trigger of the rule whose derivation is new with respect to the store.
    std::optional<DerivedFact> check_applicable(std::size_t rule_id) const {
        const Rule& r = rule(rule_id);
        for (const auto& m : matches(rule_id)) {
            std::vector<ObjectTerm> nulls;
            for (std::size_t i = 0; i < r.existentials.size(); ++i) nulls.push_back(ObjectTerm::null(next_null_ + i));
            auto f = derive(rule_id, m, nulls);
            if (!f || satisfies_any(*f)) continue;
            return make_derived(rule_id, m, std::move(*f), std::move(nulls));
        }
        return std::nullopt;
    }

    /// True iff the fact may be added: null-free facts and improvements of a
    /// stored tuple always pass; otherwise its null-pattern summary must be new.
    bool check_termination(const DerivedFact& d) const {
        if (!d.fact.has_nulls() || stored(d.fact)) return true;
        return !summaries_.count(summary(d));
    }

    /// Re-evaluates divergence over the value propagation graph. Returns true
    /// if some node was newly set to UNBOUNDED.
    bool update_vpg(std::size_t iteration = 0) {
        // Current oriented values: larger is better for both operators.
        std::map<NodeKey, std::size_t> id;
        std::vector<NodeKey> nodes;
        std::vector<Integer> u;
        std::vector<BoundOp> ops;
        auto node = [&](const NodeKey& k) -> std::optional<std::size_t> {
            auto it = id.find(k);
            if (it != id.end()) return it->second;
            auto bv = j_.bound_value(k.first, k.second);
            if (!bv || bv->is_unbounded()) return std::nullopt;
            id.emplace(k, nodes.size());
            nodes.push_back(k);
            u.push_back(bv->op == BoundOp::Max ? *bv->value : Integer(-*bv->value));
            ops.push_back(bv->op);
            return nodes.size() - 1;
        };
        struct E {
            std::size_t src, dst;
            Integer k, c;
        };
        std::vector<E> edges;
        for (const auto& [key, label] : edges_) {
            auto s = node(std::get<0>(key));
            auto d = node(std::get<1>(key));
            if (!s || !d) continue;
            int ss = ops[*s] == BoundOp::Max ? 1 : -1;
            int sd = ops[*d] == BoundOp::Max ? 1 : -1;
            edges.push_back({*s, *d, label.k * ss * sd, label.c * sd});
        }
        if (edges.empty()) return false;

        auto comp = scc(nodes.size(), edges);
        std::set<std::size_t> flagged;
        std::map<std::size_t, std::vector<std::size_t>> members;
        for (std::size_t i = 0; i < nodes.size(); ++i) members[comp[i]].push_back(i);
        for (const auto& [cid, mem] : members) {
            std::vector<const E*> inner;
            for (const auto& e : edges)
                if (comp[e.src] == cid && comp[e.dst] == cid) inner.push_back(&e);
            if (inner.empty()) continue;
            // Relaxation: anything still improving after |C| rounds lies on or
            // behind an improving cycle.
            std::map<std::size_t, Integer> val;
            for (auto i : mem) val[i] = u[i];
            std::set<std::size_t> late;
            const std::size_t rounds = mem.size();
            for (std::size_t round = 0; round < 2 * rounds + 1; ++round) {
                bool any = false;
                for (const E* e : inner) {
                    Integer cand = e->k * val[e->src] + e->c;
                    if (cand > val[e->dst]) {
                        val[e->dst] = cand;
                        any = true;
                        if (round >= rounds) late.insert(e->dst);
                    }
                }
                if (!any) break;
            }
            // Propagate through non-degenerate edges.
            std::vector<std::size_t> stack(late.begin(), late.end());
            while (!stack.empty()) {
                auto x = stack.back();
                stack.pop_back();
                for (const E* e : inner)
                    if (e->src == x && e->k >= 1 && late.insert(e->dst).second) stack.push_back(e->dst);
            }
            flagged.insert(late.begin(), late.end());
        }
        bool changed = false;
        for (auto i : flagged) {
            Fact f = Fact::bound(nodes[i].first, nodes[i].second, ops[i], std::nullopt);
            if (j_.insert(f)) {
                changed = true;
                divergent_.push_back(nodes[i]);
                record(TraceEvent{TraceEvent::Kind::Diverge, iteration, 0, {}, "", f, ""});
            }
        }
        return changed;
    }

    RunResult run() {
        if (!opts_.unchecked) {
            auto rep = analyze(program_);
            if (!rep.passed()) throw ContractError("program fails static checks:\n" + rep.text());
        }
        RunResult res;
        insert_facts();
        std::size_t iteration = 0;
        try {
            while (true) {
                ++iteration;
                bool changed = update_vpg(iteration);
                for (auto rid : rules_) {
                    auto ms = matches(rid);
                    for (const auto& m : ms)
                        if (process(rid, m, iteration)) changed = true;
                }
                if (!changed) break;
            }
        } catch (const BudgetExhausted&) {
            res.status = RunStatus::BudgetExhausted;
        }
        res.iterations = iteration;
        res.events = events_;
        res.model = j_;
        res.trace = trace_;
        res.divergent = divergent_;
        return res;
    }

private:
    struct MemoEntry {
        std::vector<std::optional<BoundValue>> bounds;
        std::vector<ObjectTerm> nulls;
    };

    void record(TraceEvent e) {
        if (opts_.trace) trace_.push_back(std::move(e));
    }

    void tick() {
        if (++events_ > opts_.budget) throw BudgetExhausted("derivation budget of " + std::to_string(opts_.budget) + " events exhausted");
    }

    bool stored(const Fact& f) const {
        const auto* rel = j_.relation(f.predicate);
        if (!rel) return false;
        switch (f.kind()) {
            case AtomKind::Object: return rel->objects.count(f.args) > 0;
            case AtomKind::Exact: return rel->exact.count(f.args) > 0;
            default: return rel->bound.count(f.args) > 0;
        }
    }

    bool satisfies_any(const Fact& f) const {
        const auto* rel = j_.relation(f.predicate);
        if (!rel || rel->kind != f.kind()) return false;
        switch (f.kind()) {
            case AtomKind::Object: return rel->objects.count(f.args) > 0;
            case AtomKind::Exact: {
                auto it = rel->exact.find(f.args);
                return it != rel->exact.end() && it->second.count(f.exact_value());
            }
            default: {
                auto it = rel->bound.find(f.args);
                return it != rel->bound.end() && bound_dominates(it->second, f.bound_value());
            }
        }
    }

    DerivedFact make_derived(std::size_t rule_id, const Match& m, Fact f, std::vector<ObjectTerm> nulls) const {
        const Rule& r = rule(rule_id);
        DerivedFact d;
        d.rule = rule_id;
        d.fact = std::move(f);
        d.subst = m.subst;
        d.nulls = std::move(nulls);
        for (const auto& ma : m.atoms) d.parents.emplace_back(r.body[ma.atom].predicate, *ma.tuple);
        return d;
    }

    std::string summary(const DerivedFact& d) const {
        std::map<std::uint64_t, std::size_t> ids;
        auto pattern = [&](const std::string& pred, const Tuple& t) {
            std::string s = pred + "(";
            for (const auto& x : t) {
                if (x.is_null()) {
                    auto [it, _] = ids.emplace(x.null_id, ids.size());
                    s += "_" + std::to_string(it->second);
                } else {
                    s += x.name;
                }
                s += ",";
            }
            return s + ")";
        };
        std::string out = pattern(d.fact.predicate, d.fact.args) + "|r" + std::to_string(d.rule) + "|";
        for (const auto& [pred, t] : d.parents) out += pattern(pred, t);
        return out;
    }

    void join(const Rule& r, std::size_t i, Match& m, std::vector<Match>& out) const {
        if (i == r.body.size()) {
            out.push_back(m);
            return;
        }
        const Atom& a = r.body[i];
        if (a.is_comparison()) {
            join(r, i + 1, m, out);
            return;
        }
        const auto* rel = j_.relation(a.predicate);
        if (!rel) return;
        // Leading arguments fixed by constants or earlier bindings.
        Tuple prefix;
        for (const auto& t : a.args) {
            if (!t.is_variable()) {
                prefix.push_back(t);
                continue;
            }
            auto it = m.subst.objects.find(t.name);
            if (it == m.subst.objects.end()) break;
            prefix.push_back(it->second);
        }
        auto unify = [&](const Tuple& tup, std::vector<std::string>& bound_here) {
            for (std::size_t k = prefix.size(); k < a.args.size(); ++k) {
                const auto& t = a.args[k];
                if (!t.is_variable()) {
                    if (t != tup[k]) return false;
                    continue;
                }
                auto it = m.subst.objects.find(t.name);
                if (it != m.subst.objects.end()) {
                    if (it->second != tup[k]) return false;
                } else {
                    m.subst.objects.emplace(t.name, tup[k]);
                    bound_here.push_back(t.name);
                }
            }
            return true;
        };
        auto visit = [&](const Tuple& tup, const Integer* exact, const BoundValue* bound) {
            std::vector<std::string> bound_here;
            if (unify(tup, bound_here)) {
                m.atoms.push_back({i, &tup, exact, bound});
                join(r, i + 1, m, out);
                m.atoms.pop_back();
            }
            for (const auto& v : bound_here) m.subst.objects.erase(v);
        };
        auto in_prefix = [&](const Tuple& tup) {
            for (std::size_t k = 0; k < prefix.size(); ++k)
                if (tup[k] != prefix[k]) return false;
            return true;
        };
        switch (rel->kind) {
            case AtomKind::Object:
                for (auto it = rel->objects.lower_bound(prefix); it != rel->objects.end() && in_prefix(*it); ++it)
                    visit(*it, nullptr, nullptr);
                break;
            case AtomKind::Exact:
                for (auto it = rel->exact.lower_bound(prefix); it != rel->exact.end() && in_prefix(it->first); ++it)
                    for (const auto& v : it->second) visit(it->first, &v, nullptr);
                break;
            default:
                for (auto it = rel->bound.lower_bound(prefix); it != rel->bound.end() && in_prefix(it->first); ++it)
                    visit(it->first, nullptr, &it->second);
        }
    }

    static std::vector<std::size_t> scc(std::size_t n, const auto& edges) {
        std::vector<std::vector<std::size_t>> adj(n);
        for (const auto& e : edges) adj[e.src].push_back(e.dst);
        std::vector<std::size_t> comp(n, SIZE_MAX), index(n, SIZE_MAX), low(n, 0);
        std::vector<bool> on(n, false);
        std::vector<std::size_t> st;
        std::size_t counter = 0, ncomp = 0;
        std::function<void(std::size_t)> dfs = [&](std::size_t v) {
            index[v] = low[v] = counter++;
            st.push_back(v);
            on[v] = true;
            for (auto w : adj[v]) {
                if (index[w] == SIZE_MAX) {
                    dfs(w);
                    low[v] = std::min(low[v], low[w]);
                } else if (on[w]) {
                    low[v] = std::min(low[v], index[w]);
                }
            }
            if (low[v] == index[v]) {
                while (true) {
                    auto w = st.back();
                    st.pop_back();
                    on[w] = false;
                    comp[w] = ncomp;
                    if (w == v) break;
                }
                ++ncomp;
            }
        };
        for (std::size_t v = 0; v < n; ++v)
            if (index[v] == SIZE_MAX) dfs(v);
        return comp;
    }

    // Records one edge per body bound atom whose term is a*x + b with x in the head.
    void add_edges(std::size_t rule_id, const Match& m, const std::vector<std::optional<BoundValue>>& body,
                   const Fact& head) {
        const Rule& r = rule(rule_id);
        const auto& hv = head.bound_value();
        if (hv.is_unbounded()) return;
        NodeKey dst{head.predicate, head.args};
        for (std::size_t i = 0; i < m.atoms.size(); ++i) {
            const auto& ma = m.atoms[i];
            const Atom& a = r.body[ma.atom];
            if (a.kind != AtomKind::Bound || body[i]->is_unbounded()) continue;
            if (a.value.terms().size() != 1) continue;
            const auto& [x, coef] = *a.value.terms().begin();
            Integer k = r.head.value.coefficient(x);
            if (k == 0 || k % coef != 0) continue;
            EdgeLabel lab;
            lab.k = k / coef;
            lab.c = *hv.value - lab.k * *body[i]->value;
            edges_[{NodeKey{a.predicate, *ma.tuple}, dst, rule_id}] = lab;
        }
    }

    bool process(std::size_t rule_id, const Match& m, std::size_t iteration) {
        const Rule& r = rule(rule_id);
        std::vector<const void*> key;
        key.reserve(m.atoms.size() * 2 + 1);
        key.push_back(reinterpret_cast<const void*>(rule_id + 1));
        std::vector<std::optional<BoundValue>> now;
        for (const auto& ma : m.atoms) {
            key.push_back(ma.tuple);
            key.push_back(ma.exact);
            now.push_back(ma.bound ? std::optional<BoundValue>(*ma.bound) : std::nullopt);
        }
        auto [it, fresh] = memo_.try_emplace(std::move(key));
        MemoEntry& entry = it->second;
        if (!fresh) {
            bool improved = false;
            for (std::size_t i = 0; i < now.size() && !improved; ++i)
                if (now[i] && !bound_dominates(*entry.bounds[i], *now[i])) improved = true;
            if (!improved) return false;
        }
        entry.bounds = now;
        tick();

        std::vector<ObjectTerm> nulls = entry.nulls;
        bool new_nulls = nulls.empty() && !r.existentials.empty();
        if (new_nulls)
            for (std::size_t i = 0; i < r.existentials.size(); ++i) nulls.push_back(ObjectTerm::null(next_null_ + i));

        auto f = derive(rule_id, m, nulls);
        if (!f) {
            if (opts_.trace) {
                Fact shown = Fact::object(r.head.predicate, {});
                record({TraceEvent::Kind::Suppress, iteration, rule_id, r.span, m.subst.to_string(), shown, "infeasible"});
            }
            return false;
        }
        if (satisfies_any(*f)) {
            record({TraceEvent::Kind::Suppress, iteration, rule_id, r.span, m.subst.to_string(), *f, "dominated"});
            return false;
        }
        DerivedFact d = make_derived(rule_id, m, *f, nulls);
        bool first_time = !stored(d.fact);
        if (!check_termination(d)) {
            record({TraceEvent::Kind::Suppress, iteration, rule_id, r.span, m.subst.to_string(), *f, "termination-check"});
            return false;
        }
        if (first_time && d.fact.has_nulls()) summaries_.insert(summary(d));
        if (new_nulls) {
            next_null_ += r.existentials.size();
            entry.nulls = nulls;
        }
        j_.insert(*f);
        tick();
        if (f->kind() == AtomKind::Bound) add_edges(rule_id, m, now, *f);
        record({TraceEvent::Kind::Fire, iteration, rule_id, r.span, m.subst.to_string(), *f, ""});
        return true;
    }

    const Program& program_;
    EngineOptions opts_;
    std::vector<std::size_t> rules_;
    Interpretation j_;
    std::uint64_t next_null_ = 1;
    std::uint64_t events_ = 0;
    std::map<std::vector<const void*>, MemoEntry> memo_;
    std::set<std::string> summaries_;
    std::map<std::tuple<NodeKey, NodeKey, std::size_t>, EdgeLabel> edges_;
    std::vector<NodeKey> divergent_;
    std::vector<TraceEvent> trace_;
};

inline RunResult run(const Program& p, EngineOptions opts = {}) { return Reasoner(p, opts).run(); }

/// Runs the program and model-checks the fact.
inline bool entails(const Program& p, const Fact& alpha, EngineOptions opts = {}) {
    if (alpha.has_nulls()) throw QueryError("entailment is defined on facts over constants only: " + alpha.to_string());
    auto res = run(p, opts);
    if (res.status == RunStatus::BudgetExhausted) throw BudgetExhausted("budget exhausted before fixpoint");
    return satisfies(res.model, alpha);
}

/// Extends the program with `q -> goal` for a fresh 0-ary goal predicate.
inline std::pair<Program, Fact> bcq_program(const Program& p, const std::vector<Atom>& q) {
    auto sig = signature(p);
    std::string goal = "__goal";
    for (int i = 1; sig.count(goal); ++i) goal = "__goal" + std::to_string(i);
    for (const auto& a : q)
        for (const auto& t : a.args)
            if (t.is_null()) throw QueryError("query contains a labelled null");
    Program ext = p;
    Rule r;
    r.body = q;
    r.head = Atom::object(goal, {});
    ext.statements.push_back(std::move(r));
    return {std::move(ext), Fact::object(goal, {})};
}

/// Boolean conjunctive query via a fresh goal rule.
inline bool answer_bcq(const Program& p, const std::vector<Atom>& q, EngineOptions opts = {}) {
    if (q.empty()) {
        signature(p);
        return true;
    }
    auto [ext, goal] = bcq_program(p, q);
    return entails(ext, goal, opts);
}

}  // namespace wbdz

#pragma once

// Brute-force reference semantics over a bounded integer domain, and a
// shortest-path reference for the path program.

#include "model.hpp"

#include <map>
#include <optional>
#include <queue>
#include <string>
#include <tuple>
#include <vector>

namespace wbdz {

struct BoundedConfig {
    Integer cap = 100;                // B: all values must stay within [-B, B]
    std::size_t max_iterations = 100000;
};

struct BoundedResult {
    bool cap_hit = false;
    Interpretation model;
    std::size_t rounds = 0;
};

enum class Tri { False, True, Unknown };

inline const char* to_string(Tri t) {
    switch (t) {
        case Tri::True: return "true";
        case Tri::False: return "false";
        default: return "unknown";
    }
}

namespace oracle_detail {

struct Row {
    const Atom* atom;
    const Tuple* tuple;
    std::optional<Integer> exact;
    std::optional<BoundValue> bound;
};

struct Evaluator {
    const Rule& rule;
    const Interpretation& in;
    const BoundedConfig& cfg;
    std::vector<Fact>& out;
    bool cap_hit = false;

    std::vector<const Atom*> atoms;
    std::map<std::string, ObjectTerm> objs;
    std::vector<Row> rows;

    void run() {
        for (const auto& a : rule.body)
            if (!a.is_comparison()) atoms.push_back(&a);
        ground_objects(0);
    }

    void ground_objects(std::size_t i) {
        if (cap_hit) return;
        if (i == atoms.size()) {
            ground_numbers();
            return;
        }
        const Atom& a = *atoms[i];
        const auto* rel = in.relation(a.predicate);
        if (!rel) return;
        auto try_tuple = [&](const Tuple& t, std::optional<Integer> ex, std::optional<BoundValue> bv) {
            auto saved = objs;
            bool ok = true;
            for (std::size_t k = 0; k < a.args.size() && ok; ++k) {
                const auto& term = a.args[k];
                if (!term.is_variable()) {
                    ok = term == t[k];
                } else {
                    auto [it, inserted] = objs.emplace(term.name, t[k]);
                    ok = inserted || it->second == t[k];
                }
            }
            if (ok) {
                rows.push_back({&a, &t, std::move(ex), std::move(bv)});
                ground_objects(i + 1);
                rows.pop_back();
            }
            objs = std::move(saved);
        };
        for (const auto& t : rel->objects) try_tuple(t, std::nullopt, std::nullopt);
        for (const auto& [t, vs] : rel->exact)
            for (const auto& v : vs) try_tuple(t, v, std::nullopt);
        for (const auto& [t, b] : rel->bound) try_tuple(t, std::nullopt, b);
    }

    // Candidate values: the extremal value allowed by each single-variable
    // numeric body atom; variables without such an atom range over [-B, B].
    void ground_numbers() {
        std::map<std::string, std::set<Integer>> cand;
        for (const auto& v : rule.numeric_variables()) cand[v];
        for (const auto& row : rows) {
            const Atom& a = *row.atom;
            if (!a.has_numeric() || a.value.terms().size() != 1) continue;
            const auto& [x, k] = *a.value.terms().begin();
            const Integer& b = a.value.constant();
            if (row.exact) {
                if ((*row.exact - b) % k == 0) cand[x].insert((*row.exact - b) / k);
                else cand[x].insert(Integer(0));  // unsatisfiable anyway; keep the product non-empty
                continue;
            }
            if (row.bound->is_unbounded()) {
                cap_hit = true;
                return;
            }
            const Integer& v = *row.bound->value;
            // min: k*x + b >= v ; max: k*x + b <= v
            bool lower = (a.op == BoundOp::Min) == (k > 0);
            cand[x].insert(lower ? ceil_div(v - b, k) : floor_div(v - b, k));
        }
        std::vector<std::pair<std::string, std::vector<Integer>>> domains;
        for (auto& [x, vals] : cand) {
            std::vector<Integer> d(vals.begin(), vals.end());
            if (d.empty())
                for (Integer i = -cfg.cap; i <= cfg.cap; ++i) d.push_back(i);
            domains.emplace_back(x, std::move(d));
        }
        std::map<std::string, Integer> num;
        enumerate(domains, 0, num);
    }

    void enumerate(const std::vector<std::pair<std::string, std::vector<Integer>>>& doms, std::size_t i,
                   std::map<std::string, Integer>& num) {
        if (cap_hit) return;
        if (i == doms.size()) {
            check(num);
            return;
        }
        for (const auto& v : doms[i].second) {
            num[doms[i].first] = v;
            enumerate(doms, i + 1, num);
        }
        num.erase(doms[i].first);
    }

    void check(const std::map<std::string, Integer>& num) {
        for (const auto& row : rows) {
            const Atom& a = *row.atom;
            if (!a.has_numeric()) continue;
            Integer t = a.value.evaluate(num);
            if (row.exact) {
                if (t != *row.exact) return;
            } else {
                const Integer& v = *row.bound->value;
                if (a.op == BoundOp::Min ? t < v : t > v) return;
            }
        }
        for (const auto& a : rule.body) {
            if (!a.is_comparison()) continue;
            Integer l = a.lhs.evaluate(num), r = a.rhs.evaluate(num);
            if (a.cmp == CompareOp::Lt ? !(l < r) : !(l <= r)) return;
        }
        Tuple args;
        for (const auto& t : rule.head.args) args.push_back(t.is_variable() ? objs.at(t.name) : t);
        Fact f;
        switch (rule.head.kind) {
            case AtomKind::Object: f = Fact::object(rule.head.predicate, std::move(args)); break;
            case AtomKind::Exact:
                f = Fact::exact(rule.head.predicate, std::move(args), rule.head.value.evaluate(num));
                break;
            default: f = Fact::bound(rule.head.predicate, std::move(args), rule.head.op, rule.head.value.evaluate(num));
        }
        if (f.kind() != AtomKind::Object) {
            const Integer& v = f.kind() == AtomKind::Exact ? f.exact_value() : *f.bound_value().value;
            if (v > cfg.cap || v < -cfg.cap) {
                cap_hit = true;
                return;
            }
        }
        out.push_back(std::move(f));
    }
};

}  // namespace oracle_detail

/// Naive bounded fixpoint of an existential-free program.
inline BoundedResult bounded_fixpoint(const Program& p, const BoundedConfig& cfg = {}) {
    if (cfg.cap < 1) throw ContractError("oracle cap must be at least 1");
    for (const auto& r : p.statements)
        if (!r.existentials.empty()) throw ContractError("the bounded oracle does not support existential rules");
    BoundedResult res;
    for (const auto& r : p.statements)
        if (r.is_fact()) res.model.insert(to_fact(r.head));
    while (res.rounds < cfg.max_iterations) {
        ++res.rounds;
        std::vector<Fact> derived;
        for (const auto& r : p.statements) {
            if (r.is_fact()) continue;
            oracle_detail::Evaluator ev{r, res.model, cfg, derived};
            ev.run();
            if (ev.cap_hit) {
                res.cap_hit = true;
                return res;
            }
        }
        bool changed = false;
        for (const auto& f : derived)
            if (res.model.insert(f)) changed = true;
        if (!changed) return res;
    }
    res.cap_hit = true;
    return res;
}

inline Tri entails_bounded(const Program& p, const Fact& alpha, const BoundedConfig& cfg = {}) {
    auto res = bounded_fixpoint(p, cfg);
    if (res.cap_hit) return Tri::Unknown;
    return satisfies(res.model, alpha) ? Tri::True : Tri::False;
}

struct WeightedEdge {
    std::string from, to;
    Integer weight;
};

/// Dijkstra; unreachable vertices are absent from the result.
inline std::map<std::string, Integer> shortest_paths_reference(const std::vector<WeightedEdge>& edges,
                                                               const std::string& src) {
    std::map<std::string, std::vector<std::pair<std::string, Integer>>> adj;
    for (const auto& e : edges) {
        if (e.weight < 0) throw ContractError("negative edge weight " + e.from + "->" + e.to);
        adj[e.from].emplace_back(e.to, e.weight);
    }
    std::map<std::string, Integer> dist;
    using Item = std::pair<Integer, std::string>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    pq.emplace(0, src);
    while (!pq.empty()) {
        auto [d, v] = pq.top();
        pq.pop();
        if (dist.count(v)) continue;
        dist[v] = d;
        for (const auto& [w, c] : adj[v])
            if (!dist.count(w)) pq.emplace(d + c, w);
    }
    return dist;
}

}  // namespace wbdz

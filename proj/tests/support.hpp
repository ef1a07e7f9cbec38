#pragma once

// Generators and brute-force helpers shared by the unit and acceptance tests.

#include "wbdz/wbdz.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace wbdz::testing {

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::filesystem::path corpus(const std::string& rel) { return std::filesystem::path(WBDZ_CORPUS_DIR) / rel; }

inline Program load(const std::string& rel) { return parse_program_or_throw(slurp(corpus(rel)), rel); }

inline long uniform(std::mt19937& rng, long lo, long hi) {
    return std::uniform_int_distribution<long>(lo, hi)(rng);
}

// ---------------------------------------------------------------------------
// Small integer systems

struct DenseSystem {
    int n = 0;
    std::vector<std::vector<long>> a;  // a[i] . x <= b[i]
    std::vector<long> b;
    std::vector<long> c;  // objective, maximized
};

/// Random rows with coefficients in [-5, 5]. With `box`, every variable is
/// additionally confined to [-box, box].
inline DenseSystem random_system(std::mt19937& rng, int max_vars, long box) {
    DenseSystem s;
    s.n = static_cast<int>(uniform(rng, 1, max_vars));
    int rows = static_cast<int>(uniform(rng, 1, 5));
    for (int r = 0; r < rows; ++r) {
        std::vector<long> row(s.n);
        bool any = false;
        for (auto& k : row) {
            k = uniform(rng, -5, 5);
            any = any || k != 0;
        }
        if (!any) row[uniform(rng, 0, s.n - 1)] = uniform(rng, 1, 5);
        s.a.push_back(row);
        s.b.push_back(uniform(rng, -20, 20));
    }
    if (box > 0)
        for (int i = 0; i < s.n; ++i) {
            std::vector<long> up(s.n, 0), down(s.n, 0);
            up[i] = 1;
            down[i] = -1;
            s.a.push_back(up);
            s.b.push_back(uniform(rng, 0, box));
            s.a.push_back(down);
            s.b.push_back(uniform(rng, 0, box));
        }
    s.c.resize(s.n);
    for (auto& k : s.c) k = uniform(rng, -5, 5);
    return s;
}

inline std::string var_name(int i) { return "x" + std::to_string(i); }

inline LinearSystem to_linear_system(const DenseSystem& s) {
    LinearSystem out;
    for (int i = 0; i < s.n; ++i) out.declare(var_name(i));
    for (std::size_t r = 0; r < s.a.size(); ++r) {
        LinearExpr e = LinearExpr(Integer(-s.b[r]));
        for (int i = 0; i < s.n; ++i) e += LinearExpr::variable(var_name(i), s.a[r][i]);
        out.add_le(e);
    }
    return out;
}

inline LinearExpr objective(const DenseSystem& s) {
    LinearExpr e;
    for (int i = 0; i < s.n; ++i) e += LinearExpr::variable(var_name(i), s.c[i]);
    return e;
}

struct Enumerated {
    bool feasible = false;
    long best = std::numeric_limits<long>::min();
};

/// Exhaustive search over [-B, B]^n. The last coordinate is solved
/// analytically as an interval, so the cost is (2B+1)^(n-1) per system.
inline Enumerated enumerate_box(const DenseSystem& s, long B) {
    Enumerated out;
    const int n = s.n;
    std::vector<long> x(n, -B);
    const int last = n - 1;
    auto visit = [&] {
        long lo = -B, hi = B;
        for (std::size_t r = 0; r < s.a.size(); ++r) {
            long acc = 0;
            for (int i = 0; i < last; ++i) acc += s.a[r][i] * x[i];
            long k = s.a[r][last], rest = s.b[r] - acc;
            if (k == 0) {
                if (rest < 0) return;
            } else if (k > 0) {
                long q = rest >= 0 ? rest / k : -((-rest + k - 1) / k);
                hi = std::min(hi, q);
            } else {
                long kk = -k;  // -kk * x <= rest  ->  x >= ceil(-rest / kk)
                long num = -rest;
                long q = num >= 0 ? (num + kk - 1) / kk : -((-num) / kk);
                lo = std::max(lo, q);
            }
        }
        if (lo > hi) return;
        out.feasible = true;
        long val = 0;
        for (int i = 0; i < last; ++i) val += s.c[i] * x[i];
        val += s.c[last] * (s.c[last] >= 0 ? hi : lo);
        out.best = std::max(out.best, val);
    };
    if (last == 0) {
        visit();
        return out;
    }
    while (true) {
        visit();
        int i = 0;
        while (i < last && x[i] == B) x[i++] = -B;
        if (i == last) break;
        ++x[i];
    }
    return out;
}

inline bool satisfies_all(const DenseSystem& s, const std::map<std::string, Integer>& w) {
    for (std::size_t r = 0; r < s.a.size(); ++r) {
        Integer acc = 0;
        for (int i = 0; i < s.n; ++i) acc += Integer(s.a[r][i]) * w.at(var_name(i));
        if (acc > s.b[r]) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Graphs

inline std::vector<WeightedEdge> random_graph(std::mt19937& rng, int n, int m, long max_w) {
    std::vector<WeightedEdge> out;
    for (int i = 0; i < m; ++i) {
        int u = static_cast<int>(uniform(rng, 0, n - 1)), v = static_cast<int>(uniform(rng, 0, n - 1));
        out.push_back({"v" + std::to_string(u), "v" + std::to_string(v), Integer(uniform(rng, 0, max_w))});
    }
    return out;
}

inline std::string shortest_path_program(const std::vector<WeightedEdge>& edges, const std::string& src) {
    std::ostringstream os;
    for (const auto& e : edges) os << "edge(" << e.from << ", " << e.to << ", min(" << e.weight << ")).\n";
    os << "path(" << src << ", min(0)).\n";
    os << "path(V, min(X)), edge(V, W, min(Y)) -> path(W, min(X + Y)).\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// Random existential-free, divergence-free programs
//
// Numeric predicates p0..p3 are stratified: a rule for p_j reads p_i with
// i < j freely; recursion on p_j itself only moves the value away from its
// improving direction (min: +k, k >= 0; max: -k), so no cycle improves.

struct GenProgram {
    std::string text;
    std::vector<BoundOp> ops;  // op of p0..p3
};

inline GenProgram random_program(std::mt19937& rng) {
    static const char* consts[] = {"a", "b", "c"};
    GenProgram g;
    for (int i = 0; i < 4; ++i) g.ops.push_back(rng() % 2 ? BoundOp::Min : BoundOp::Max);
    auto op = [&](int i) { return to_string(g.ops[i]); };
    std::ostringstream os;
    for (const char* u : consts)
        for (const char* v : consts)
            if (rng() % 3 == 0) os << "e(" << u << ", " << v << ").\n";
    for (const char* u : consts)
        if (rng() % 2) os << "w(" << u << ", " << uniform(rng, -10, 10) << ").\n";
    for (int i = 0; i < 2; ++i)
        for (const char* u : consts)
            if (rng() % 2) os << "p" << i << "(" << u << ", " << op(i) << "(" << uniform(rng, -20, 20) << ")).\n";

    int rules = static_cast<int>(uniform(rng, 1, 6));
    for (int r = 0; r < rules; ++r) {
        int head = static_cast<int>(uniform(rng, 1, 3));
        std::vector<std::string> body;
        std::string obj = "O";
        std::string hobj = obj;
        if (rng() % 2 == 0) {
            body.push_back("e(O, Q)");
            hobj = "Q";
        }
        bool recursive = rng() % 4 == 0;
        LinearExpr term = LinearExpr(Integer(uniform(rng, -3, 3)));
        std::ostringstream cmp;
        if (recursive) {
            body.push_back("p" + std::to_string(head) + "(O, " + op(head) + "(X0))");
            long k = uniform(rng, 0, 3);
            term = LinearExpr::variable("X0") + LinearExpr(Integer(g.ops[head] == BoundOp::Min ? k : -k));
        } else {
            int nvars = static_cast<int>(uniform(rng, 1, 3));
            for (int v = 0; v < nvars; ++v) {
                std::string x = "X" + std::to_string(v);
                long k = uniform(rng, -2, 2);
                if (k == 0) k = 1;
                if (rng() % 4 == 0) {
                    body.push_back("w(O, " + x + ")");
                } else {
                    int src = static_cast<int>(uniform(rng, 0, head - 1));
                    // Positive coefficient needs the head's own type.
                    BoundOp need = k > 0 ? g.ops[head] : opposite(g.ops[head]);
                    if (g.ops[src] != need) k = -k;
                    body.push_back("p" + std::to_string(src) + "(O, " + op(src) + "(" + x + "))");
                }
                term += LinearExpr::variable(x, k);
            }
        }
        // Optional filter obeying the placement rule of comparisons.
        if (!recursive && rng() % 3 == 0) {
            const std::string& last = body.back();
            bool is_min = last.find("min(") != std::string::npos;
            bool is_exact = last.rfind("w(", 0) == 0;
            std::string x = last.substr(last.find_last_of('X'), 2);
            long c = uniform(rng, -15, 15);
            if (is_exact || is_min) body.push_back(x + " <= " + std::to_string(c));
            if (is_exact || !is_min) body.push_back(std::to_string(c) + " < " + x);
        }
        for (std::size_t i = 0; i < body.size(); ++i) os << (i ? ", " : "") << body[i];
        os << " -> p" << head << "(" << hobj << ", " << op(head) << "(" << term.to_string() << ")).\n";
    }
    if (rng() % 2) {
        int p = static_cast<int>(uniform(rng, 0, 3));
        os << "p" << p << "(O, " << op(p) << "(V)) -> hit(O).\n";
    }
    g.text = os.str();
    return g;
}

/// Probe facts: perturbations of model values plus random values.
inline std::vector<Fact> random_probes(std::mt19937& rng, const GenProgram& g, const Interpretation& model,
                                       std::size_t count) {
    static const char* consts[] = {"a", "b", "c"};
    std::vector<Fact> known;
    for (const auto& f : model.facts())
        if (f.kind() == AtomKind::Bound && f.bound_value().value) known.push_back(f);
    std::vector<Fact> out;
    while (out.size() < count) {
        if (!known.empty() && rng() % 2) {
            const Fact& f = known[rng() % known.size()];
            Integer v = *f.bound_value().value + uniform(rng, -2, 2);
            out.push_back(Fact::bound(f.predicate, f.args, f.bound_value().op, v));
        } else if (rng() % 5 == 0) {
            out.push_back(Fact::object("hit", {ObjectTerm::constant(consts[rng() % 3])}));
        } else {
            int p = static_cast<int>(uniform(rng, 0, 3));
            out.push_back(Fact::bound("p" + std::to_string(p), {ObjectTerm::constant(consts[rng() % 3])}, g.ops[p],
                                      Integer(uniform(rng, -60, 60))));
        }
    }
    return out;
}

}  // namespace wbdz::testing

#pragma once

// Exact feasibility and optimisation for small systems of linear integer
// inequalities.
//
// Feasibility is decided by an Omega-test style elimination (equalities by
// unimodular substitution, inequalities by real/dark shadows and splinters).
// Optimisation uses an exact rational simplex for the relaxation and then
// searches the integer optimum through feasibility queries.

#include "model.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <map>
#include <numeric>
#include <string>
#include <vector>

namespace wbdz {

using Rational = boost::multiprecision::cpp_rational;

/// Constraints of the form sum ci*xi <= c0 over integer variables.
class LinearSystem {
public:
    struct Row {
        std::map<std::string, Integer> coeffs;
        Integer rhs;
    };

    std::size_t declare(const std::string& v) {
        auto [it, inserted] = index_.emplace(v, vars_.size());
        if (inserted) vars_.push_back(v);
        return it->second;
    }
    const std::vector<std::string>& variables() const { return vars_; }
    const std::vector<Row>& rows() const { return rows_; }
    bool empty() const { return rows_.empty(); }

    /// e <= 0
    void add_le(const LinearExpr& e) {
        Row r;
        for (const auto& [v, k] : e.terms()) {
            declare(v);
            r.coeffs.emplace(v, k);
        }
        r.rhs = -e.constant();
        rows_.push_back(std::move(r));
    }
    /// e < 0, i.e. e <= -1 over the integers
    void add_lt(const LinearExpr& e) { add_le(e + LinearExpr(1)); }
    /// e = 0
    void add_eq(const LinearExpr& e) {
        add_le(e);
        add_le(-e);
    }
    /// lhs <= rhs
    void add_le(const LinearExpr& lhs, const LinearExpr& rhs) { add_le(lhs - rhs); }
    void bind(const std::string& v, const Integer& value) { add_eq(LinearExpr::variable(v) - LinearExpr(value)); }

    std::string dump() const {
        std::string out;
        for (const auto& r : rows_) {
            std::string line;
            for (const auto& [v, k] : r.coeffs) {
                if (!line.empty()) line += " + ";
                line += k.str() + "*" + v;
            }
            if (line.empty()) line = "0";
            out += line + " <= " + r.rhs.str() + "\n";
        }
        return out;
    }

private:
    std::vector<std::string> vars_;
    std::map<std::string, std::size_t> index_;
    std::vector<Row> rows_;
};

enum class Direction { Maximize, Minimize };

struct SolveOutcome {
    enum class Status { Infeasible, Unbounded, Optimal };
    Status status = Status::Infeasible;
    Direction direction = Direction::Maximize;  // for Unbounded: the requested direction
    Integer value = 0;
    std::map<std::string, Integer> witness;

    bool infeasible() const { return status == Status::Infeasible; }
    bool unbounded() const { return status == Status::Unbounded; }
    bool optimal() const { return status == Status::Optimal; }
};

namespace solver_detail {

struct IRow {
    std::vector<Integer> a;
    Integer b;
};

inline Integer gcd_of(const std::vector<Integer>& a) {
    Integer g = 0;
    for (const auto& x : a)
        if (x != 0) g = boost::multiprecision::gcd(g, x < 0 ? Integer(-x) : x);
    return g;
}

// ---------------------------------------------------------------------------
// Integer feasibility

class Omega {
public:
    explicit Omega(std::size_t n) : n_(n) {}

    bool feasible(std::vector<IRow> le, std::vector<IRow> eq) {
        while (true) {
            if (!normalize_eq(eq)) return false;
            if (!eq.empty()) {
                eliminate_equality(le, eq);
                continue;
            }
            if (!normalize_le(le, eq)) return false;
            if (!eq.empty()) continue;
            if (le.empty()) return true;

            // Variables bounded on one side only can always be satisfied.
            bool dropped = false;
            for (std::size_t k = 0; k < n_; ++k) {
                std::size_t lo = 0, hi = 0;
                for (const auto& r : le) {
                    if (r.a[k] < 0) ++lo;
                    if (r.a[k] > 0) ++hi;
                }
                if (lo + hi > 0 && (lo == 0 || hi == 0)) {
                    std::erase_if(le, [k](const IRow& r) { return r.a[k] != 0; });
                    dropped = true;
                }
            }
            if (dropped) continue;

            std::size_t k = choose(le);
            std::vector<IRow> lowers, uppers, rest;
            for (auto& r : le) {
                if (r.a[k] < 0)
                    lowers.push_back(r);
                else if (r.a[k] > 0)
                    uppers.push_back(r);
                else
                    rest.push_back(r);
            }
            bool exact = std::all_of(lowers.begin(), lowers.end(), [k](const IRow& r) { return r.a[k] == -1; }) ||
                         std::all_of(uppers.begin(), uppers.end(), [k](const IRow& r) { return r.a[k] == 1; });
            auto real = shadow(lowers, uppers, rest, k, false);
            if (exact) {
                le = std::move(real);
                continue;
            }
            if (!Omega(n_).feasible(real, {})) return false;
            if (Omega(n_).feasible(shadow(lowers, uppers, rest, k, true), {})) return true;

            Integer m = 0;
            for (const auto& u : uppers) m = std::max(m, u.a[k]);
            for (const auto& l : lowers) {
                Integer a = -l.a[k];
                Integer top = floor_div(m * a - a - m, m);
                for (Integer i = 0; i <= top; ++i) {
                    IRow e{l.a, l.b - i};
                    if (Omega(n_).feasible(le, {e})) return true;
                }
            }
            return false;
        }
    }

private:
    static bool normalize_eq(std::vector<IRow>& eq) {
        std::vector<IRow> out;
        for (auto& r : eq) {
            Integer g = gcd_of(r.a);
            if (g == 0) {
                if (r.b != 0) return false;
                continue;
            }
            if (r.b % g != 0) return false;
            for (auto& x : r.a) x /= g;
            r.b /= g;
            out.push_back(std::move(r));
        }
        eq = std::move(out);
        return true;
    }

    // Also detects opposite pairs that pin a hyperplane and turns them into equalities.
    bool normalize_le(std::vector<IRow>& le, std::vector<IRow>& eq) const {
        std::map<std::vector<Integer>, Integer> best;
        for (auto& r : le) {
            Integer g = gcd_of(r.a);
            if (g == 0) {
                if (r.b < 0) return false;
                continue;
            }
            for (auto& x : r.a) x /= g;
            Integer b = floor_div(r.b, g);
            auto [it, inserted] = best.emplace(r.a, b);
            if (!inserted && b < it->second) it->second = b;
        }
        le.clear();
        std::set<std::vector<Integer>> used;
        for (const auto& [a, b] : best) {
            if (used.count(a)) continue;
            std::vector<Integer> neg(a.size());
            for (std::size_t i = 0; i < a.size(); ++i) neg[i] = -a[i];
            auto it = best.find(neg);
            if (it != best.end()) {
                Integer s = b + it->second;
                if (s < 0) return false;
                if (s == 0) {
                    eq.push_back({a, b});
                    used.insert(a);
                    used.insert(neg);
                    continue;
                }
            }
            le.push_back({a, b});
        }
        return true;
    }

    void eliminate_equality(std::vector<IRow>& le, std::vector<IRow>& eq) const {
        IRow& e = eq.front();
        std::size_t k = n_;
        for (std::size_t j = 0; j < n_; ++j)
            if (e.a[j] != 0 && (k == n_ || abs(e.a[j]) < abs(e.a[k]))) k = j;
        if (abs(e.a[k]) != 1) {
            // Unimodular change x_k = y_k - sum q_j x_j reduces the equation's
            // coefficients modulo a_k.
            std::vector<Integer> q(n_, 0);
            for (std::size_t j = 0; j < n_; ++j)
                if (j != k) q[j] = floor_div(e.a[j], e.a[k]);
            auto apply = [&](IRow& r) {
                if (r.a[k] == 0) return;
                for (std::size_t j = 0; j < n_; ++j)
                    if (j != k) r.a[j] -= r.a[k] * q[j];
            };
            for (auto& r : eq) apply(r);
            for (auto& r : le) apply(r);
            return;
        }
        // x_k = s*(b - sum_{j != k} a_j x_j)
        Integer s = e.a[k];
        IRow piv = e;
        auto subst = [&](IRow& r) {
            Integer rk = r.a[k];
            if (rk == 0) return;
            for (std::size_t j = 0; j < n_; ++j)
                if (j != k) r.a[j] -= rk * s * piv.a[j];
            r.a[k] = 0;
            r.b -= rk * s * piv.b;
        };
        eq.erase(eq.begin());
        for (auto& r : eq) subst(r);
        for (auto& r : le) subst(r);
    }

    std::size_t choose(const std::vector<IRow>& le) const {
        std::size_t best = n_;
        bool best_exact = false;
        std::size_t best_cost = 0;
        for (std::size_t k = 0; k < n_; ++k) {
            std::size_t lo = 0, hi = 0;
            bool lo_unit = true, hi_unit = true;
            for (const auto& r : le) {
                if (r.a[k] < 0) {
                    ++lo;
                    lo_unit = lo_unit && r.a[k] == -1;
                } else if (r.a[k] > 0) {
                    ++hi;
                    hi_unit = hi_unit && r.a[k] == 1;
                }
            }
            if (lo == 0) continue;
            bool exact = lo_unit || hi_unit;
            std::size_t cost = lo * hi;
            if (best == n_ || (exact && !best_exact) || (exact == best_exact && cost < best_cost)) {
                best = k;
                best_exact = exact;
                best_cost = cost;
            }
        }
        return best;
    }

    static std::vector<IRow> shadow(const std::vector<IRow>& lowers, const std::vector<IRow>& uppers,
                                    const std::vector<IRow>& rest, std::size_t k, bool dark) {
        std::vector<IRow> out = rest;
        for (const auto& l : lowers) {
            Integer a = -l.a[k];
            for (const auto& u : uppers) {
                Integer b = u.a[k];
                IRow r;
                r.a.resize(l.a.size());
                for (std::size_t j = 0; j < l.a.size(); ++j) r.a[j] = b * l.a[j] + a * u.a[j];
                r.b = b * l.b + a * u.b;
                if (dark) r.b -= (a - 1) * (b - 1);
                out.push_back(std::move(r));
            }
        }
        return out;
    }

    static Integer abs(const Integer& x) { return x < 0 ? Integer(-x) : x; }

    std::size_t n_;
};

// ---------------------------------------------------------------------------
// Rational simplex: maximise c.x subject to A x <= b, x free.

struct LpResult {
    enum class Status { Infeasible, Unbounded, Optimal } status = Status::Infeasible;
    Rational value;
    std::vector<Rational> x;
};

class Simplex {
public:
    Simplex(const std::vector<IRow>& rows, std::size_t n) : n_(n), m_(rows.size()) {
        // columns: x+ (n), x- (n), slack (m), artificial (m)
        cols_ = 2 * n_ + 2 * m_;
        t_.assign(m_, std::vector<Rational>(cols_ + 1, Rational(0)));
        basis_.assign(m_, 0);
        for (std::size_t i = 0; i < m_; ++i) {
            int sign = rows[i].b < 0 ? -1 : 1;
            for (std::size_t j = 0; j < n_; ++j) {
                t_[i][2 * j] = Rational(rows[i].a[j] * sign);
                t_[i][2 * j + 1] = Rational(-rows[i].a[j] * sign);
            }
            t_[i][2 * n_ + i] = Rational(sign);
            t_[i][cols_] = Rational(rows[i].b * sign);
            if (sign > 0) {
                basis_[i] = 2 * n_ + i;
            } else {
                t_[i][2 * n_ + m_ + i] = Rational(1);
                basis_[i] = 2 * n_ + m_ + i;
                needs_phase1_ = true;
            }
        }
    }

    LpResult maximize(const std::vector<Integer>& c) {
        LpResult res;
        if (needs_phase1_) {
            std::vector<Rational> cost(cols_, Rational(0));
            for (std::size_t i = 0; i < m_; ++i) cost[2 * n_ + m_ + i] = Rational(-1);
            run(cost, true);
            Rational v = 0;
            for (std::size_t i = 0; i < m_; ++i)
                if (is_artificial(basis_[i])) v += t_[i][cols_];
            if (v > 0) return res;
            drive_out_artificials();
        }
        std::vector<Rational> cost(cols_, Rational(0));
        for (std::size_t j = 0; j < n_; ++j) {
            cost[2 * j] = Rational(c[j]);
            cost[2 * j + 1] = Rational(-c[j]);
        }
        if (!run(cost, false)) {
            res.status = LpResult::Status::Unbounded;
            return res;
        }
        res.status = LpResult::Status::Optimal;
        std::vector<Rational> z(cols_, Rational(0));
        for (std::size_t i = 0; i < m_; ++i) z[basis_[i]] = t_[i][cols_];
        res.x.assign(n_, Rational(0));
        res.value = 0;
        for (std::size_t j = 0; j < n_; ++j) {
            res.x[j] = z[2 * j] - z[2 * j + 1];
            res.value += Rational(c[j]) * res.x[j];
        }
        return res;
    }

private:
    bool is_artificial(std::size_t col) const { return col >= 2 * n_ + m_; }

    void pivot(std::size_t r, std::size_t c) {
        Rational p = t_[r][c];
        for (auto& v : t_[r]) v /= p;
        for (std::size_t i = 0; i < m_; ++i) {
            if (i == r || t_[i][c] == 0) continue;
            Rational f = t_[i][c];
            for (std::size_t j = 0; j <= cols_; ++j)
                if (t_[r][j] != 0) t_[i][j] -= f * t_[r][j];
        }
        basis_[r] = c;
    }

    // Bland's rule. Returns false when the objective is unbounded.
    bool run(const std::vector<Rational>& cost, bool phase1) {
        while (true) {
            std::size_t enter = cols_;
            for (std::size_t j = 0; j < cols_ && enter == cols_; ++j) {
                if (!phase1 && is_artificial(j)) continue;
                Rational rc = cost[j];
                for (std::size_t i = 0; i < m_; ++i)
                    if (t_[i][j] != 0) rc -= cost[basis_[i]] * t_[i][j];
                if (rc > 0) enter = j;
            }
            if (enter == cols_) return true;
            std::size_t leave = m_;
            Rational best;
            for (std::size_t i = 0; i < m_; ++i) {
                if (t_[i][enter] <= 0) continue;
                Rational ratio = t_[i][cols_] / t_[i][enter];
                if (leave == m_ || ratio < best || (ratio == best && basis_[i] < basis_[leave])) {
                    leave = i;
                    best = ratio;
                }
            }
            if (leave == m_) return false;
            pivot(leave, enter);
        }
    }

    void drive_out_artificials() {
        for (std::size_t i = 0; i < m_; ++i) {
            if (!is_artificial(basis_[i])) continue;
            for (std::size_t j = 0; j < 2 * n_ + m_; ++j)
                if (t_[i][j] != 0) {
                    pivot(i, j);
                    break;
                }
        }
    }

    std::size_t n_, m_, cols_ = 0;
    std::vector<std::vector<Rational>> t_;
    std::vector<std::size_t> basis_;
    bool needs_phase1_ = false;
};

struct Dense {
    std::vector<std::string> vars;
    std::vector<IRow> rows;
};

inline Dense densify(const LinearSystem& s, const LinearExpr* objective) {
    Dense d;
    d.vars = s.variables();
    std::map<std::string, std::size_t> idx;
    for (std::size_t i = 0; i < d.vars.size(); ++i) idx[d.vars[i]] = i;
    if (objective)
        for (const auto& [v, _] : objective->terms())
            if (!idx.count(v)) {
                idx[v] = d.vars.size();
                d.vars.push_back(v);
            }
    for (const auto& r : s.rows()) {
        IRow row{std::vector<Integer>(d.vars.size(), 0), r.rhs};
        for (const auto& [v, k] : r.coeffs) row.a[idx.at(v)] = k;
        d.rows.push_back(std::move(row));
    }
    return d;
}

inline bool omega_feasible(const std::vector<IRow>& rows, std::size_t n) { return Omega(n).feasible(rows, {}); }

inline bool is_integral(const Rational& r) { return denominator(r) == 1; }

// Box systems (each row mentions one variable) are solved directly.
struct Box {
    std::vector<std::optional<Integer>> lo, hi;
    bool ok = true;
};

inline std::optional<Box> as_box(const std::vector<IRow>& rows, std::size_t n) {
    Box b;
    b.lo.assign(n, std::nullopt);
    b.hi.assign(n, std::nullopt);
    for (const auto& r : rows) {
        std::size_t k = n, nz = 0;
        for (std::size_t j = 0; j < n; ++j)
            if (r.a[j] != 0) {
                k = j;
                ++nz;
            }
        if (nz > 1) return std::nullopt;
        if (nz == 0) {
            if (r.b < 0) b.ok = false;
            continue;
        }
        if (r.a[k] > 0) {
            Integer v = floor_div(r.b, r.a[k]);
            if (!b.hi[k] || v < *b.hi[k]) b.hi[k] = v;
        } else {
            Integer v = ceil_div(r.b, r.a[k]);
            if (!b.lo[k] || v > *b.lo[k]) b.lo[k] = v;
        }
    }
    for (std::size_t j = 0; j < n; ++j)
        if (b.lo[j] && b.hi[j] && *b.lo[j] > *b.hi[j]) b.ok = false;
    return b;
}

inline bool feasible_dense(const std::vector<IRow>& rows, std::size_t n) {
    if (auto box = as_box(rows, n)) return box->ok;
    return omega_feasible(rows, n);
}

}  // namespace solver_detail

inline bool feasible(const LinearSystem& s) {
    auto d = solver_detail::densify(s, nullptr);
    return solver_detail::feasible_dense(d.rows, d.vars.size());
}

/// Exact integer optimum of `objective` over the system.
inline SolveOutcome optimize(const LinearSystem& s, const LinearExpr& objective, Direction dir) {
    using namespace solver_detail;
    SolveOutcome out;
    out.direction = dir;
    auto d = densify(s, &objective);
    const std::size_t n = d.vars.size();
    // Work with maximisation of c.x; the constant is added back at the end.
    std::vector<Integer> c(n, 0);
    for (std::size_t j = 0; j < n; ++j) {
        c[j] = objective.coefficient(d.vars[j]);
        if (dir == Direction::Minimize) c[j] = -c[j];
    }
    auto finish = [&](const std::vector<Integer>& x) {
        out.status = SolveOutcome::Status::Optimal;
        Integer v = 0;
        for (std::size_t j = 0; j < n; ++j) {
            v += c[j] * x[j];
            out.witness[d.vars[j]] = x[j];
        }
        out.value = (dir == Direction::Minimize ? Integer(-v) : v) + objective.constant();
        return out;
    };

    if (auto box = as_box(d.rows, n)) {
        if (!box->ok) return out;
        std::vector<Integer> x(n, 0);
        for (std::size_t j = 0; j < n; ++j) {
            const auto& lo = box->lo[j];
            const auto& hi = box->hi[j];
            if (c[j] > 0) {
                if (!hi) {
                    out.status = SolveOutcome::Status::Unbounded;
                    return out;
                }
                x[j] = *hi;
            } else if (c[j] < 0) {
                if (!lo) {
                    out.status = SolveOutcome::Status::Unbounded;
                    return out;
                }
                x[j] = *lo;
            } else {
                x[j] = lo ? (hi && *hi < 0 ? *hi : std::max(*lo, Integer(0))) : (hi ? std::min(*hi, Integer(0)) : Integer(0));
            }
        }
        return finish(x);
    }

    if (!feasible_dense(d.rows, n)) return out;
    Simplex lp(d.rows, n);
    auto rel = lp.maximize(c);
    if (rel.status == LpResult::Status::Unbounded) {
        // An integer-feasible rational polyhedron with an unbounded relaxation
        // has an unbounded integer objective.
        out.status = SolveOutcome::Status::Unbounded;
        return out;
    }
    if (std::all_of(rel.x.begin(), rel.x.end(), is_integral)) {
        std::vector<Integer> x(n);
        for (std::size_t j = 0; j < n; ++j) x[j] = numerator(rel.x[j]);
        return finish(x);
    }

    // Largest t with S and c.x >= t feasible.
    auto with_lower = [&](std::vector<IRow> rows, const Integer& t) {
        IRow r{std::vector<Integer>(n), -t};
        for (std::size_t j = 0; j < n; ++j) r.a[j] = -c[j];
        rows.push_back(std::move(r));
        return rows;
    };
    Integer hi = floor_div(numerator(rel.value), denominator(rel.value));
    Integer lo;
    if (feasible_dense(with_lower(d.rows, hi), n)) {
        lo = hi;
    } else {
        Integer step = 1;
        lo = hi - step;
        while (!feasible_dense(with_lower(d.rows, lo), n)) {
            hi = lo - 1;
            step *= 2;
            lo = hi - step;
        }
        while (lo < hi) {
            Integer mid = lo + floor_div(hi - lo + 1, Integer(2));
            if (feasible_dense(with_lower(d.rows, mid), n))
                lo = mid;
            else
                hi = mid - 1;
        }
    }
    std::vector<IRow> rows = with_lower(d.rows, lo);

    // Witness: fix one variable at a time to an attainable value.
    std::vector<Integer> x(n, 0);
    auto bound_row = [&](std::size_t j, int sign, const Integer& v) {
        IRow r{std::vector<Integer>(n, 0), sign > 0 ? v : Integer(-v)};
        r.a[j] = sign;
        return r;
    };
    for (std::size_t j = 0; j < n; ++j) {
        auto probe = [&](const Integer& a, const Integer& b) {  // a <= x_j <= b
            auto rr = rows;
            rr.push_back(bound_row(j, -1, a));
            rr.push_back(bound_row(j, 1, b));
            return feasible_dense(rr, n);
        };
        auto probe_le = [&](const Integer& b) {
            auto rr = rows;
            rr.push_back(bound_row(j, 1, b));
            return feasible_dense(rr, n);
        };
        Integer v;
        if (probe_le(0)) {
            // largest v <= 0 with v <= x_j <= 0 feasible
            Integer top = 0, step = 1, bot = -1;
            if (probe(0, 0)) {
                v = 0;
            } else {
                while (!probe(bot, 0)) {
                    top = bot;
                    step *= 2;
                    bot = -step;
                }
                // top infeasible as a lower end, bot feasible
                while (top - bot > 1) {
                    Integer mid = bot + floor_div(top - bot, Integer(2));
                    if (probe(mid, 0))
                        bot = mid;
                    else
                        top = mid;
                }
                v = bot;
            }
        } else {
            Integer top = 1, step = 1, bot = 1;
            while (!probe(1, top)) {
                bot = top;
                step *= 2;
                top = step;
            }
            while (top - bot > 1) {
                Integer mid = bot + floor_div(top - bot, Integer(2));
                if (probe(1, mid))
                    top = mid;
                else
                    bot = mid;
            }
            v = probe(1, bot) ? bot : top;
        }
        x[j] = v;
        rows.push_back(bound_row(j, -1, v));
        rows.push_back(bound_row(j, 1, v));
    }
    return finish(x);
}

}  // namespace wbdz

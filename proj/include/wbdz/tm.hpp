#pragma once

// Compiles a nondeterministic polynomial-time Turing machine and an ordered
// input into a bound program whose 0-ary fact `confirm` is entailed exactly
// when every computation path rejects. Also provides the explicit run
// enumerator used as its reference.
//
// Configurations are indexed by guess-tree nodes p1, p2, ...: node g has
// children 2g (guess 0) and 2g+1 (guess 1), so distinct paths never share
// facts. The max-bound argument carries the guess string g(pi), which starts
// at 1 and doubles (plus the guess bit) with every step.

#include "model.hpp"
#include "parser.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace wbdz {

struct TMSpec {
    struct Transition {
        std::string to;
        char write = '_';
        char move = 'R';  // 'L' or 'R'
    };
    std::vector<std::string> states;  // first declared state is initial
    std::set<std::string> accept, reject;
    std::map<std::tuple<std::string, char, int>, Transition> delta;  // (state, read, guess)
    std::size_t k = 1;

    const std::string& initial() const { return states.front(); }
    bool halting(const std::string& q) const { return accept.count(q) || reject.count(q); }
};

inline const std::string kTapeAlphabet = "01_";

/// Checks that every non-halting state has exactly one transition per
/// (symbol, guess) and halting states have none.
inline void validate(const TMSpec& m) {
    if (m.states.empty()) throw Error("malformed machine: no states");
    if (m.k < 1) throw Error("malformed machine: exponent must be at least 1");
    std::set<std::string> known(m.states.begin(), m.states.end());
    for (const auto& q : m.states)
        if (q.empty() || !std::all_of(q.begin(), q.end(), [](char c) { return std::islower(static_cast<unsigned char>(c)) || std::isdigit(static_cast<unsigned char>(c)) || c == '_'; }))
            throw Error("malformed machine: state names must use lowercase letters, digits and '_': " + q);
    for (const auto& q : m.accept)
        if (!known.count(q)) throw Error("malformed machine: unknown accepting state " + q);
    for (const auto& q : m.reject)
        if (!known.count(q)) throw Error("malformed machine: unknown rejecting state " + q);
    for (const auto& [key, t] : m.delta) {
        const auto& [q, a, g] = key;
        if (!known.count(q) || !known.count(t.to)) throw Error("malformed machine: transition uses an unknown state");
        if (m.halting(q)) throw Error("malformed machine: halting state " + q + " has a transition");
    }
    for (const auto& q : m.states) {
        if (m.halting(q)) continue;
        for (char a : kTapeAlphabet)
            for (int g = 0; g < 2; ++g)
                if (!m.delta.count({q, a, g}))
                    throw Error("malformed machine: state " + q + " lacks a transition on '" + std::string(1, a) +
                                "' with guess " + std::to_string(g));
    }
}

/// Line format: `state q`, `accept q`, `reject q`, `exponent k`,
/// `trans q a -> q' a' L|R guess 0|1`; `%` starts a comment.
inline TMSpec parse_tm(const std::string& text) {
    TMSpec m;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    auto bad = [&](const std::string& why) { return Error("tm:" + std::to_string(lineno) + ": " + why); };
    auto symbol = [&](const std::string& s) {
        if (s.size() != 1 || kTapeAlphabet.find(s[0]) == std::string::npos) throw bad("bad tape symbol '" + s + "'");
        return s[0];
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (auto c = line.find('%'); c != std::string::npos) line.resize(c);
        std::istringstream ls(line);
        std::vector<std::string> w;
        for (std::string t; ls >> t;) w.push_back(t);
        if (w.empty()) continue;
        if (w[0] == "state" && w.size() == 2) {
            m.states.push_back(w[1]);
        } else if (w[0] == "accept" && w.size() == 2) {
            m.accept.insert(w[1]);
        } else if (w[0] == "reject" && w.size() == 2) {
            m.reject.insert(w[1]);
        } else if (w[0] == "exponent" && w.size() == 2) {
            m.k = std::stoul(w[1]);
        } else if (w[0] == "trans" && w.size() == 9 && w[3] == "->" && w[7] == "guess") {
            if (w[6] != "L" && w[6] != "R") throw bad("move must be L or R");
            if (w[8] != "0" && w[8] != "1") throw bad("guess must be 0 or 1");
            auto key = std::make_tuple(w[1], symbol(w[2]), w[8] == "1" ? 1 : 0);
            if (m.delta.count(key)) throw bad("duplicate transition");
            m.delta[key] = {w[4], symbol(w[5]), w[6][0]};
        } else {
            throw bad("cannot parse '" + line + "'");
        }
    }
    validate(m);
    return m;
}

/// Input word over {0,1}; its length is the universe size n.
struct OrderedInput {
    std::vector<int> bits;
};

inline OrderedInput input_from_string(const std::string& s) {
    OrderedInput in;
    for (char c : s) {
        if (c != '0' && c != '1') throw Error("input must be a word over {0,1}");
        in.bits.push_back(c - '0');
    }
    return in;
}

/// g(pi) for a guess sequence: a leading 1 followed by the guess bits.
inline Integer guess_string(const std::vector<int>& guesses) {
    Integer g = 1;
    for (int b : guesses) g = g * 2 + b;
    return g;
}

inline std::size_t ipow(std::size_t b, std::size_t e) {
    std::size_t r = 1;
    for (std::size_t i = 0; i < e; ++i) r *= b;
    return r;
}

enum class RunOutcome { AllReject, ExistsAccept, Exceeded };

inline const char* to_string(RunOutcome o) {
    switch (o) {
        case RunOutcome::AllReject: return "all_reject";
        case RunOutcome::ExistsAccept: return "exists_accept";
        default: return "exceeded";
    }
}

/// Explores the binary guess tree for at most `step_bound` transitions on a
/// tape of n^k cells. The head stays put when moving off either end.
inline RunOutcome enumerate_runs(const TMSpec& m, const OrderedInput& in, std::size_t step_bound) {
    if (step_bound < 1) throw ContractError("step bound must be at least 1");
    const std::size_t cells = ipow(in.bits.size(), m.k);
    std::string tape(cells, '_');
    for (std::size_t i = 0; i < in.bits.size() && i < cells; ++i) tape[i] = static_cast<char>('0' + in.bits[i]);
    bool accept = false, exceeded = false;
    std::function<void(const std::string&, std::string&, std::size_t, std::size_t)> go =
        [&](const std::string& q, std::string& t, std::size_t pos, std::size_t steps) {
            if (accept) return;
            if (m.accept.count(q)) {
                accept = true;
                return;
            }
            if (m.reject.count(q)) return;
            if (steps == step_bound) {
                exceeded = true;
                return;
            }
            for (int g = 0; g < 2; ++g) {
                const auto& tr = m.delta.at({q, t[pos], g});
                char old = t[pos];
                t[pos] = tr.write;
                std::size_t np = pos;
                if (tr.move == 'R' && pos + 1 < cells) ++np;
                if (tr.move == 'L' && pos > 0) --np;
                go(tr.to, t, np, steps + 1);
                t[pos] = old;
            }
        };
    go(m.initial(), tape, 0, 0);
    if (accept) return RunOutcome::ExistsAccept;
    return exceeded ? RunOutcome::Exceeded : RunOutcome::AllReject;
}

struct EncodeConfig {
    std::size_t ceiling = 12;  // largest admissible n^k; the guess tree has 2^(n^k) - 1 nodes
};

struct Encoding {
    std::string text;
    Program program;
    Fact goal;
    std::size_t time_steps = 0;  // transitions simulated: n^k - 1
};

namespace tm_detail {

inline std::string sym_name(char a) { return a == '_' ? "blank" : std::string(1, a); }

inline std::string vars(const std::string& base, std::size_t k) {
    std::string out;
    for (std::size_t i = 1; i <= k; ++i) {
        if (i > 1) out += ", ";
        out += base + std::to_string(i);
    }
    return out;
}

inline std::string repeat(const std::string& v, std::size_t k) {
    std::string out;
    for (std::size_t i = 0; i < k; ++i) {
        if (i) out += ", ";
        out += v;
    }
    return out;
}

}  // namespace tm_detail

inline Encoding encode_tm(const TMSpec& m, const OrderedInput& in, const EncodeConfig& cfg = {}) {
    using namespace tm_detail;
    validate(m);
    const std::size_t n = in.bits.size();
    if (n == 0) throw Error("input universe must be non-empty");
    const std::size_t k = m.k;
    const std::size_t cells = ipow(n, k);
    if (cells > cfg.ceiling)
        throw Error("n^k = " + std::to_string(cells) + " exceeds the configured ceiling " + std::to_string(cfg.ceiling));
    const std::size_t steps = cells - 1;

    std::ostringstream os;
    auto elem = [](std::size_t i) { return "e" + std::to_string(i); };
    // k-tuple for index i, most significant position first
    auto tuple = [&](std::size_t idx) {
        std::vector<std::size_t> digits(k);
        for (std::size_t j = k; j-- > 0;) {
            digits[j] = idx % n;
            idx /= n;
        }
        std::string out;
        for (std::size_t j = 0; j < k; ++j) {
            if (j) out += ", ";
            out += elem(digits[j]);
        }
        return out;
    };

    os << "% ordered universe\n";
    os << "first(" << elem(0) << ").\n";
    os << "last(" << elem(n - 1) << ").\n";
    for (std::size_t i = 0; i + 1 < n; ++i) os << "next(" << elem(i) << ", " << elem(i + 1) << ").\n";
    os << "% input: input_0 is the materialised complement of input_1\n";
    for (std::size_t i = 0; i < n; ++i) os << "input_" << in.bits[i] << "(" << elem(i) << ").\n";
    for (std::size_t c = n; c < cells; ++c) os << "blank(" << tuple(c) << ").\n";
    os << "% successor on k-tuples, head moves, distinct cells\n";
    for (std::size_t c = 0; c + 1 < cells; ++c) os << "tsucc(" << tuple(c) << ", " << tuple(c + 1) << ").\n";
    for (std::size_t c = 0; c < cells; ++c) {
        os << "move_r(" << tuple(c) << ", " << tuple(c + 1 < cells ? c + 1 : c) << ").\n";
        os << "move_l(" << tuple(c) << ", " << tuple(c > 0 ? c - 1 : c) << ").\n";
    }
    for (std::size_t a = 0; a < cells; ++a)
        for (std::size_t b = 0; b < cells; ++b)
            if (a != b) os << "differ(" << tuple(a) << ", " << tuple(b) << ").\n";
    os << "% guess tree\n";
    os << "root(p1).\n";
    const std::size_t internal = (std::size_t(1) << steps) - 1;  // nodes at depth < steps
    for (std::size_t g = 1; g <= internal; ++g) {
        os << "child0(p" << g << ", p" << 2 * g << ").\n";
        os << "child1(p" << g << ", p" << 2 * g + 1 << ").\n";
    }

    const std::string T = vars("T", k), T2 = vars("U", k), X = vars("X", k), X2 = vars("W", k), Y = vars("Y", k);
    const std::string Z = repeat("Z", k), Zp = repeat("Z", k - 1);
    auto cell_of = [&](const std::string& x) { return k == 1 ? x : Zp + ", " + x; };

    os << "% initial configuration\n";
    os << "root(P), first(Z) -> head_" << m.initial() << "(P, " << Z << ", " << Z << ", max(1)).\n";
    os << "root(P), first(Z), input_0(C) -> tape_0(P, " << Z << ", " << cell_of("C") << ", max(1)).\n";
    os << "root(P), first(Z), input_1(C) -> tape_1(P, " << Z << ", " << cell_of("C") << ", max(1)).\n";
    os << "root(P), first(Z), blank(" << X << ") -> tape_blank(P, " << Z << ", " << X << ", max(1)).\n";

    os << "% transitions\n";
    for (const auto& q : m.states) {
        if (m.halting(q)) continue;
        for (char a : kTapeAlphabet)
            for (int g = 0; g < 2; ++g) {
                const auto& tr = m.delta.at({q, a, g});
                std::string body = "head_" + q + "(P, " + T + ", " + X + ", max(M)), tape_" + sym_name(a) + "(P, " + T +
                                   ", " + X + ", max(N)), tsucc(" + T + ", " + T2 + "), move_" +
                                   (tr.move == 'R' ? "r" : "l") + "(" + X + ", " + X2 + "), child" +
                                   std::to_string(g) + "(P, Q)";
                std::string val = g ? "max(M + M + 1)" : "max(M + M)";
                os << body << " -> head_" << tr.to << "(Q, " << T2 << ", " << X2 << ", " << val << ").\n";
                os << body << " -> tape_" << sym_name(tr.write) << "(Q, " << T2 << ", " << X << ", " << val << ").\n";
            }
        for (char v : kTapeAlphabet)
            for (int g = 0; g < 2; ++g)
                os << "head_" << q << "(P, " << T << ", " << X << ", max(M)), tsucc(" << T << ", " << T2
                   << "), child" << g << "(P, Q), tape_" << sym_name(v) << "(P, " << T << ", " << Y
                   << ", max(N)), differ(" << X << ", " << Y << ") -> tape_" << sym_name(v) << "(Q, " << T2 << ", "
                   << Y << ", " << (g ? "max(N + N + 1)" : "max(N + N)") << ").\n";
        os << "head_" << q << "(P, " << T << ", " << X << ", max(M)) -> node(P, " << T << ", max(M)).\n";
    }
    os << "% rejection and backpropagation over both guesses\n";
    for (const auto& r : m.reject)
        os << "head_" << r << "(P, " << T << ", " << X << ", max(M)) -> reject(P, " << T << ", max(M)).\n";
    os << "node(P, " << T << ", max(M)), tsucc(" << T << ", " << T2 << "), child0(P, Q0), reject(Q0, " << T2
       << ", max(M0)), child1(P, Q1), reject(Q1, " << T2 << ", max(M1)) -> reject(P, " << T << ", max(M)).\n";
    os << "root(P), first(Z), reject(P, " << Z << ", max(1)) -> confirm.\n";

    Encoding enc;
    enc.text = os.str();
    enc.program = parse_program_or_throw(enc.text, "<tm>");
    enc.goal = Fact::object("confirm", {});
    enc.time_steps = steps;
    return enc;
}

}  // namespace wbdz

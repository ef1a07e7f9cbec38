#include "wbdz/wbdz.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#ifndef WBDZ_CORPUS_DIR
#define WBDZ_CORPUS_DIR "corpus"
#endif

namespace fs = std::filesystem;
using namespace wbdz;

namespace {

enum Exit { kOk = 0, kCheckFailure = 1, kParseError = 2, kBudget = 3, kInternal = 4 };

struct RunConfig {
    std::vector<std::string> inputs;
    std::string query;
    std::vector<std::string> queries;
    std::uint64_t budget = 0;
    long cap = 200;
    bool trace = false;
    bool unchecked = false;
    std::string dump;
    std::string format = "text";
    std::string output;
    std::size_t ceiling = EncodeConfig{}.ceiling;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

EngineOptions engine_options(const RunConfig& cfg) {
    EngineOptions o;
    o.budget = cfg.budget ? cfg.budget : default_budget();
    o.trace = cfg.trace;
    o.unchecked = cfg.unchecked;
    return o;
}

// Nulls renumbered by first appearance so output is stable.
std::string canonical_dump(const Interpretation& I) {
    std::map<std::uint64_t, std::uint64_t> rename;
    std::string out;
    for (auto f : I.facts()) {
        for (auto& t : f.args)
            if (t.is_null()) t.null_id = rename.emplace(t.null_id, rename.size() + 1).first->second;
        out += f.to_string() + ".\n";
    }
    return out;
}

void write_dump(const RunConfig& cfg, const Interpretation& I) {
    if (cfg.dump.empty()) return;
    std::ofstream out(cfg.dump);
    if (!out) throw Error("cannot write " + cfg.dump);
    out << canonical_dump(I);
}

int cmd_check(const RunConfig& cfg) {
    int code = kOk;
    for (const auto& file : cfg.inputs) {
        auto pr = parse_program(slurp(file));
        if (!pr.ok()) {
            for (const auto& d : pr.diagnostics) std::cerr << d.format(file) << "\n";
            code = kParseError;
            continue;
        }
        auto rep = analyze(pr.program);
        if (cfg.format == "machine") {
            std::cout << "FILE " << file << "\n" << rep.machine();
        } else {
            std::cout << file << ": " << (rep.passed() ? "PASS" : "FAIL") << "\n" << rep.text();
        }
        if (!rep.passed() && code == kOk) code = kCheckFailure;
    }
    return code;
}

Program load(const std::string& file) { return parse_program_or_throw(slurp(file), file); }

bool refuse_unchecked(const RunConfig& cfg, const Program& p) {
    if (cfg.unchecked) return false;
    auto rep = analyze(p);
    if (rep.passed()) return false;
    std::cerr << "program fails static checks (use --unchecked to run anyway)\n" << rep.text();
    return true;
}

int cmd_entail(const RunConfig& cfg) {
    Program p = load(cfg.inputs.at(0));
    std::string qtext = fs::is_regular_file(cfg.query) ? slurp(cfg.query) : cfg.query;
    Query q = parse_query(qtext, &p);
    if (refuse_unchecked(cfg, p)) return kCheckFailure;

    bool answer = true;
    if (q.kind == Query::Kind::FactEntailment || !q.atoms.empty()) {
        Program prog = p;
        Fact goal;
        if (q.kind == Query::Kind::FactEntailment) {
            goal = q.fact;
        } else {
            std::tie(prog, goal) = bcq_program(p, q.atoms);
        }
        auto opts = engine_options(cfg);
        opts.unchecked = true;  // already checked above; the goal rule is ours
        auto res = run(prog, opts);
        if (cfg.trace) std::cout << res.trace_text();
        write_dump(cfg, res.model);
        if (res.status == RunStatus::BudgetExhausted) {
            std::cerr << "budget exhausted after " << res.events << " steps\n";
            return kBudget;
        }
        answer = satisfies(res.model, goal);
    }
    std::cout << (answer ? "true" : "false") << "\n";
    return kOk;
}

int cmd_trace(const RunConfig& cfg) {
    Program p = load(cfg.inputs.at(0));
    if (refuse_unchecked(cfg, p)) return kCheckFailure;
    auto opts = engine_options(cfg);
    opts.trace = true;
    auto res = run(p, opts);
    std::cout << res.trace_text();
    std::cout << "MODEL\n" << canonical_dump(res.model);
    write_dump(cfg, res.model);
    return res.status == RunStatus::BudgetExhausted ? kBudget : kOk;
}

// Probes derived from the engine model: each fact, and each bound fact
// tightened by one.
std::vector<Fact> default_probes(const Interpretation& I) {
    std::vector<Fact> out;
    for (const auto& f : I.facts()) {
        if (f.has_nulls()) continue;
        out.push_back(f);
        if (f.kind() == AtomKind::Bound && f.bound_value().value) {
            const auto& b = f.bound_value();
            Integer v = *b.value + (b.op == BoundOp::Max ? 1 : -1);
            out.push_back(Fact::bound(f.predicate, f.args, b.op, v));
        }
    }
    return out;
}

int cmd_oracle_compare(const RunConfig& cfg) {
    std::size_t agree = 0, disagree = 0, unknown = 0;
    for (const auto& file : cfg.inputs) {
        Program p = load(file);
        bool existential = std::any_of(p.statements.begin(), p.statements.end(),
                                       [](const Rule& r) { return !r.existentials.empty(); });
        if (existential) {
            std::cout << "SKIP " << file << " existential rules are outside the oracle\n";
            continue;
        }
        if (refuse_unchecked(cfg, p)) {
            std::cout << "SKIP " << file << " fails static checks\n";
            continue;
        }
        auto opts = engine_options(cfg);
        auto res = run(p, opts);
        if (res.status == RunStatus::BudgetExhausted) {
            std::cerr << file << ": budget exhausted\n";
            return kBudget;
        }
        std::vector<Fact> probes;
        for (const auto& qs : cfg.queries) {
            Query q = parse_query(qs, &p);
            if (q.kind != Query::Kind::FactEntailment) throw Error("oracle-compare takes ground fact queries: " + qs);
            probes.push_back(q.fact);
        }
        if (probes.empty()) probes = default_probes(res.model);
        BoundedConfig bc;
        bc.cap = cfg.cap;
        auto bounded = bounded_fixpoint(p, bc);
        for (const auto& f : probes) {
            bool e = satisfies(res.model, f);
            Tri o = bounded.cap_hit ? Tri::Unknown : (satisfies(bounded.model, f) ? Tri::True : Tri::False);
            const char* verdict = o == Tri::Unknown ? "UNKNOWN" : ((o == Tri::True) == e ? "AGREE" : "DISAGREE");
            if (o == Tri::Unknown) ++unknown;
            else if ((o == Tri::True) == e) ++agree;
            else ++disagree;
            std::cout << verdict << " " << file << " " << f.to_string() << " engine=" << (e ? "true" : "false")
                      << " oracle=" << to_string(o) << "\n";
        }
    }
    std::cout << "SUMMARY agree=" << agree << " disagree=" << disagree << " unknown=" << unknown << "\n";
    return disagree ? kCheckFailure : kOk;
}

int cmd_tm_encode(const RunConfig& cfg) {
    auto m = parse_tm(slurp(cfg.inputs.at(0)));
    auto in = input_from_string(cfg.inputs.at(1));
    EncodeConfig ec;
    ec.ceiling = cfg.ceiling;
    auto enc = encode_tm(m, in, ec);
    if (cfg.output.empty()) {
        std::cout << enc.text;
    } else {
        std::ofstream out(cfg.output);
        if (!out) throw Error("cannot write " + cfg.output);
        out << enc.text;
    }
    return kOk;
}

int cmd_examples() {
    std::vector<std::string> names;
    for (const auto& e : fs::recursive_directory_iterator(WBDZ_CORPUS_DIR))
        if (e.is_regular_file()) names.push_back(fs::relative(e.path(), WBDZ_CORPUS_DIR).generic_string());
    std::sort(names.begin(), names.end());
    for (const auto& n : names) std::cout << n << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"wbdz: warded bound Datalog reasoner"};
    app.require_subcommand(1);
    RunConfig cfg;
    std::string single;  // the one program or machine path of entail, trace and tm-encode

    auto add_engine_flags = [&](CLI::App* sub) {
        sub->add_option("--budget", cfg.budget, "step budget (default: WBDZ_BUDGET or 1000000)");
        sub->add_flag("--unchecked", cfg.unchecked, "run even if static checks fail");
        sub->add_option("--dump", cfg.dump, "write the final interpretation to a file");
    };

    auto* check = app.add_subcommand("check", "run static checks");
    check->add_option("files", cfg.inputs)->required();
    check->add_option("--format", cfg.format)->check(CLI::IsMember({"text", "machine"}));

    auto* entail = app.add_subcommand("entail", "decide entailment of a fact or boolean conjunctive query");
    entail->add_option("program", single)->required();
    entail->add_option("query", cfg.query, "query text or file")->required();
    entail->add_flag("--trace", cfg.trace, "print trace events");
    add_engine_flags(entail);

    auto* trace = app.add_subcommand("trace", "run to fixpoint and print the trace");
    trace->add_option("program", single)->required();
    add_engine_flags(trace);

    auto* oracle = app.add_subcommand("oracle-compare", "compare engine answers with the bounded oracle");
    oracle->add_option("files", cfg.inputs)->required();
    oracle->add_option("--query,-q", cfg.queries, "ground fact query (default: probes from the model)");
    oracle->add_option("--cap,-B", cfg.cap, "oracle value cap")->check(CLI::PositiveNumber);
    add_engine_flags(oracle);

    auto* tm = app.add_subcommand("tm-encode", "encode a Turing machine and input as a program");
    tm->add_option("machine", single)->required();
    std::string input;
    tm->add_option("input", input, "input word over {0,1}")->required();
    tm->add_option("--ceiling", cfg.ceiling, "largest allowed n^k");
    tm->add_option("-o,--output", cfg.output);

    auto* examples = app.add_subcommand("examples", "list the bundled corpus");

    CLI11_PARSE(app, argc, argv);

    if (!single.empty()) cfg.inputs.push_back(single);
    try {
        if (check->parsed()) return cmd_check(cfg);
        if (entail->parsed()) return cmd_entail(cfg);
        if (trace->parsed()) return cmd_trace(cfg);
        if (oracle->parsed()) return cmd_oracle_compare(cfg);
        if (tm->parsed()) {
            cfg.inputs.push_back(input);
            return cmd_tm_encode(cfg);
        }
        if (examples->parsed()) return cmd_examples();
    } catch (const ParseError& e) {
        std::cerr << e.what() << "\n";
        return kParseError;
    } catch (const QueryError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kParseError;
    } catch (const SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kParseError;
    } catch (const BudgetExhausted& e) {
        std::cerr << e.what() << "\n";
        return kBudget;
    } catch (const ContractError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kCheckFailure;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInternal;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kInternal;
    }
    return kInternal;
}

// qsa - analyze secret-sharing schemes and deterministic multiparty protocols
// against one-time superposition corruption attacks.

#include <chrono>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "qsa/errors.hpp"
#include "qsa/mpc_worlds.hpp"
#include "qsa/report.hpp"
#include "qsa/scheme.hpp"
#include "qsa/scheme_io.hpp"
#include "qsa/sim_search.hpp"
#include "qsa/superposition.hpp"

namespace {

using namespace qsa;

struct CommonOptions {
    std::string builtin;
    std::string file;
    std::string corrupt = "singletons";
    std::string mode = "created";
    std::string output = "text";
    std::uint64_t seed = 20240801;
    long long budget = 5'000'000;
    double tolerance = default_tolerance;
};

void add_common(CLI::App* cmd, CommonOptions& opt, bool needs_table) {
    if (needs_table) {
        cmd->add_option("--builtin", opt.builtin,
                        "builtin generator: xor2 | shamir:n,t,p | dealer:n[,s] | additive4");
        cmd->add_option("--file", opt.file, "definition file path");
    }
    cmd->add_option("--corrupt", opt.corrupt,
                    "corruptible family: singletons | size<=k | {1},{2,3}");
    cmd->add_option("--mode", opt.mode, "response registers: supplied | created")
        ->check(CLI::IsMember({"supplied", "created"}));
    cmd->add_option("--seed", opt.seed, "seed for the random adversary battery");
    cmd->add_option("--budget", opt.budget, "search node budget");
    cmd->add_option("--tolerance", opt.tolerance, "numerical tolerance");
    cmd->add_option("--output", opt.output, "report format")
        ->check(CLI::IsMember({"text", "kv"}));
}

ProtocolSpec load_table(const CommonOptions& opt) {
    if (opt.builtin.empty() == opt.file.empty())
        throw parse_error("exactly one of --builtin or --file is required");
    if (!opt.builtin.empty()) return builtin_by_name(opt.builtin);
    return load_definition_file(opt.file);
}

Subset parse_subset(const std::string& text, int n, int index_base) {
    if (text.size() < 2 || text.front() != '{' || text.back() != '}')
        throw parse_error("subset must look like {1,2}: got '" + text + "'");
    Subset out = 0;
    std::string body = text.substr(1, text.size() - 2);
    if (body.empty()) return 0;
    std::istringstream is(body);
    std::string tok;
    while (std::getline(is, tok, ',')) {
        int idx;
        try {
            idx = std::stoi(tok) - index_base;
        } catch (...) {
            throw parse_error("bad party index '" + tok + "'");
        }
        if (idx < 0 || idx >= n) throw parse_error("party index '" + tok + "' out of range");
        out |= Subset(1) << idx;
    }
    return out;
}

AdversaryStructure parse_structure(const std::string& spec, int n, int index_base) {
    if (spec == "singletons") return AdversaryStructure::singletons(n);
    if (spec.rfind("size<=", 0) == 0) {
        int k;
        try {
            k = std::stoi(spec.substr(6));
        } catch (...) {
            throw parse_error("bad size bound in '" + spec + "'");
        }
        return AdversaryStructure::up_to_size(n, k);
    }
    if (spec.find('{') != std::string::npos) {
        std::vector<Subset> sets;
        size_t pos = 0;
        while (pos < spec.size()) {
            size_t open = spec.find('{', pos);
            if (open == std::string::npos) break;
            size_t close = spec.find('}', open);
            if (close == std::string::npos) throw parse_error("unterminated subset in corrupt spec");
            sets.push_back(parse_subset(spec.substr(open, close - open + 1), n, index_base));
            pos = close + 1;
        }
        if (sets.empty()) throw parse_error("empty corrupt spec");
        return AdversaryStructure::of(n, std::move(sets));
    }
    throw parse_error("cannot parse corrupt spec '" + spec + "'");
}

void emit(const AnalysisReport& report, const CommonOptions& opt) {
    std::cout << report.render(opt.output == "text");
}

void stamp_identity(AnalysisReport& report, const ProtocolSpec& protocol,
                    const CommonOptions& opt, const char* command) {
    report.set("command", command);
    report.set("name", protocol.core.name);
    report.set("table_hash", table_hash(protocol));
    report.set("parties", protocol.n());
    report.set("seed", static_cast<long long>(opt.seed));
    report.set("tolerance", opt.tolerance);
}

class Timer {
public:
    long long elapsed_ms() const {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::steady_clock::now() - start_)
            .count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

int cmd_ss_analyze(const CommonOptions& opt) {
    Timer timer;
    ProtocolSpec protocol = load_table(opt);
    const SharingScheme& scheme = protocol.core;
    AdversaryStructure f = parse_structure(opt.corrupt, scheme.n, scheme.party_index_base);

    AnalysisReport report;
    stamp_identity(report, protocol, opt, "ss-analyze");
    report.set("corrupt", f.to_string(scheme.party_index_base));

    AdversaryStructure g = classical_adversary_structure(scheme);
    AdversaryStructure f2 = square_structure(f);
    bool by_square = secure_by_square_criterion(scheme, f);
    bool direct = is_superposition_secure(scheme, f);
    report.set("classical_structure", g.to_string(scheme.party_index_base));
    report.set("square_structure", f2.to_string(scheme.party_index_base));
    report.set("verdict_square_criterion", by_square ? "secure" : "insecure");
    report.set("verdict_direct_check", direct ? "secure" : "insecure");
    if (by_square != direct) report.flag_inconsistent("square criterion and direct check disagree");
    report.set("elapsed_ms", timer.elapsed_ms());
    emit(report, opt);
    return report.inconsistent() ? 4 : 0;
}

int cmd_ss_attack(const CommonOptions& opt, const std::string& subsets_spec, int s, int s2) {
    Timer timer;
    ProtocolSpec protocol = load_table(opt);
    const SharingScheme& scheme = protocol.core;
    AdversaryStructure pair = parse_structure(subsets_spec, scheme.n, scheme.party_index_base);
    if (pair.sets.size() != 2) throw parse_error("--subsets must name exactly two subsets");
    Subset a0 = pair.sets[0], a1 = pair.sets[1];
    if (s < 0 || s2 < 0 || s >= scheme.num_secrets() || s2 >= scheme.num_secrets() || s == s2)
        throw parse_error("need two distinct secret indices in range");

    CorruptionQuery query = opt.mode == "created" ? standard_attack_query(scheme, a0, a1)
                                                  : phase_attack_query(scheme, a0, a1);
    AnalysisReport report;
    stamp_identity(report, protocol, opt, "ss-attack");
    report.set("mode", opt.mode);
    report.set("subset_0", subset_to_string(a0, scheme.n, scheme.party_index_base));
    report.set("subset_1", subset_to_string(a1, scheme.n, scheme.party_index_base));
    report.set("secret_0", static_cast<long long>(scheme.secret_values[s]));
    report.set("secret_1", static_cast<long long>(scheme.secret_values[s2]));

    DensityOperator rho0 = adversary_state(scheme, query, s);
    DensityOperator rho1 = adversary_state(scheme, query, s2);
    double delta = trace_norm(rho0.matrix - rho1.matrix);
    report.set("state_dim", rho0.basis.dim());
    report.set("trace_norm_delta", delta);
    report.set("p_guess", 0.5 + 0.25 * delta);
    if (opt.mode == "created") {
        double sub = trace_norm(attack_submatrix(scheme, a0, a1, s, s2));
        report.set("trace_norm_submatrix", sub);
        report.set("block_identity_defect", std::abs(delta - sub));
        // The off-diagonal block determines the whole difference exactly when
        // each queried subset's own view distribution is secret-independent.
        bool premise = classical_secure(scheme, a0) && classical_secure(scheme, a1);
        report.set("single_subset_marginals_independent", premise);
        report.set("block_identity_holds", std::abs(delta - sub) <= opt.tolerance);
        if (premise && std::abs(delta - sub) > opt.tolerance)
            report.flag_inconsistent("block identity failed although its premise holds");
    }
    report.set("elapsed_ms", timer.elapsed_ms());
    emit(report, opt);
    return report.inconsistent() ? 4 : 0;
}

std::string permutation_to_string(const std::vector<int>& pi) {
    std::ostringstream os;
    for (size_t i = 0; i < pi.size(); ++i) os << (i ? " " : "") << pi[i];
    return os.str();
}

std::string matrix_to_string(const Mat& m) {
    std::ostringstream os;
    os.precision(12);
    for (int i = 0; i < m.rows(); ++i) {
        if (i) os << " ; ";
        for (int j = 0; j < m.cols(); ++j) {
            if (j) os << " ";
            cx v = m(i, j);
            os << v.real();
            if (std::abs(v.imag()) > 1e-12) os << (v.imag() < 0 ? "-" : "+") << std::abs(v.imag()) << "i";
        }
    }
    return os.str();
}

int cmd_mpc_analyze(const CommonOptions& opt) {
    Timer timer;
    ProtocolSpec protocol = uniformize_randomness(load_table(opt));
    AdversaryStructure f =
        parse_structure(opt.corrupt, protocol.n(), protocol.core.party_index_base);

    AnalysisReport report;
    stamp_identity(report, protocol, opt, "mpc-analyze");
    report.set("corrupt", f.to_string(protocol.core.party_index_base));
    report.set("mode", "created");  // simulator existence is a created-mode notion
    report.set("randomness_atoms", protocol.num_rand());

    PermutationSearchResult search = search_permutations(protocol, f, opt.budget);
    report.set("search_nodes", search.nodes);
    int exit_code = 0;
    switch (search.status) {
        case PermutationSearchResult::Status::undecided:
            report.set("search_status", "undecided");
            report.set("simulator_exists", "unknown");
            exit_code = 3;
            break;
        case PermutationSearchResult::Status::absent: {
            report.set("search_status", "absent");
            report.set("simulator_exists", false);
            const RefutationCertificate& cert = *search.certificate;
            report.set("certificate",
                       cert.to_string(protocol.core.party_index_base, protocol.n()));
            report.set("certificate_violated", certificate_is_violated(protocol, cert));
            break;
        }
        case PermutationSearchResult::Status::found: {
            report.set("search_status", "found");
            for (const auto& [key, pi] : search.family.pi) {
                std::ostringstream name;
                name << "witness_perm_" << key.s << "_" << key.s2 << "_"
                     << subset_to_string(key.subset, protocol.n(),
                                         protocol.core.party_index_base);
                report.set(name.str(), permutation_to_string(pi));
            }
            UnitaryFamily fam = construct_unitaries(protocol, f, search.family);
            for (int s = 0; s < protocol.num_inputs(); ++s)
                report.set("witness_unitary_" + std::to_string(s), matrix_to_string(fam.u[s]));
            SimulatorSpec sim = build_simulator(protocol, f, fam);
            AdversaryBattery battery =
                make_battery(protocol, f, ResponseMode::created, opt.seed);
            SimulatorVerdict verdict =
                is_perfect_simulator(protocol, f, sim, battery, opt.tolerance);
            report.set("battery_size", static_cast<long long>(battery.members.size()));
            report.set("battery_max_distance", verdict.max_distance);
            report.set("simulator_exists", verdict.perfect);
            if (!verdict.perfect)
                report.flag_inconsistent("search found a family but the simulator is imperfect");
            break;
        }
    }
    report.set("elapsed_ms", timer.elapsed_ms());
    emit(report, opt);
    return report.inconsistent() ? 4 : exit_code;
}

int cmd_verify_paper(const CommonOptions& opt) {
    Timer timer;
    AnalysisReport report;
    report.set("command", "verify-paper");
    report.set("seed", static_cast<long long>(opt.seed));
    report.set("tolerance", opt.tolerance);
    bool all = true;
    auto item = [&](const std::string& name, bool ok) {
        report.set(name, ok ? "pass" : "fail");
        all = all && ok;
    };

    {  // Two-party xor scheme, pair query: |Delta| = 1, p_guess = 3/4.
        SharingScheme xor2 = builtin_xor2();
        CorruptionQuery q = standard_attack_query(xor2, 0b01, 0b10);
        double p = distinguish(xor2, q, 0, 1);
        double sub = trace_norm(attack_submatrix(xor2, 0b01, 0b10, 0, 1));
        item("xor2_pair_query", std::abs(p - 0.75) <= opt.tolerance &&
                                    std::abs(sub - 1.0) <= opt.tolerance);
        report.set("xor2_pair_query_p_guess", p);

        // Phase-kickback query distinguishes the shares perfectly.
        double p_phase = distinguish(xor2, phase_attack_query(xor2, 0b01, 0b10), 0, 1);
        item("xor2_phase_query", std::abs(p_phase - 1.0) <= opt.tolerance);
        report.set("xor2_phase_query_p_guess", p_phase);
    }

    {  // Two-party threshold sharing: p_guess >= 3/4 for p in {2,3,5}. The
        // |Delta| = |S| identity needs secret-independent single-subset
        // marginals; p = 2 forces an evaluation point at 0, hands party 2 the
        // secret outright, and breaks that premise, so there the attack is
        // checked to be strictly stronger instead.
        bool ok = true;
        for (int p : {2, 3, 5}) {
            SharingScheme sh = builtin_shamir(2, 1, p);
            CorruptionQuery q = standard_attack_query(sh, 0b01, 0b10);
            double guess = distinguish(sh, q, 0, 1);
            double delta = trace_norm(adversary_state(sh, q, 0).matrix -
                                      adversary_state(sh, q, 1).matrix);
            double sub = trace_norm(attack_submatrix(sh, 0b01, 0b10, 0, 1));
            ok = ok && guess >= 0.75 - opt.tolerance;
            bool premise = classical_secure(sh, 0b01) && classical_secure(sh, 0b10);
            if (premise)
                ok = ok && std::abs(delta - sub) <= opt.tolerance;
            else
                ok = ok && delta > sub + opt.tolerance;
            report.set("threshold_p" + std::to_string(p) + "_p_guess", guess);
            report.set("threshold_p" + std::to_string(p) + "_block_identity",
                       premise ? (std::abs(delta - sub) <= opt.tolerance ? "holds" : "fails")
                               : "premise-failed");
        }
        item("two_party_threshold_bound", ok);
    }

    {  // Four-party additive protocol: the known alignment identities.
        ProtocolSpec add4 = builtin_additive4();
        UnitaryFamily fam;
        fam.u = {Mat::Identity(4, 4), known_additive4_unitary()};
        std::string why;
        bool aligned = check_alignment_condition(add4, AdversaryStructure::singletons(4), fam,
                                                 1e-12, &why);
        item("additive4_alignment", aligned);

        PermutationSearchResult search =
            search_permutations(add4, AdversaryStructure::singletons(4), opt.budget);
        bool end_to_end = false;
        if (search.status == PermutationSearchResult::Status::found) {
            UnitaryFamily built =
                construct_unitaries(add4, AdversaryStructure::singletons(4), search.family);
            SimulatorSpec sim = build_simulator(add4, AdversaryStructure::singletons(4), built);
            AdversaryBattery battery = make_battery(add4, AdversaryStructure::singletons(4),
                                                    ResponseMode::created, opt.seed);
            SimulatorVerdict verdict = is_perfect_simulator(
                add4, AdversaryStructure::singletons(4), sim, battery, opt.tolerance);
            end_to_end = verdict.perfect;
            report.set("additive4_battery_max_distance", verdict.max_distance);
        }
        item("additive4_end_to_end", end_to_end);
    }

    {  // Dealer protocol: no simulator in supplied mode.
        DealerNoGoReport demo = run_dealer_no_go_demo(builtin_dealer(2), opt.seed);
        item("dealer_no_go", std::abs(demo.real_world_distance - 2.0) <= opt.tolerance &&
                                 demo.simulator_input_distance <= 1e-12 &&
                                 demo.substitution_residual <= 1e-12);
        report.set("dealer_real_world_distance", demo.real_world_distance);
        report.set("dealer_simulator_input_distance", demo.simulator_input_distance);
    }

    {  // Exhaustive classical-simulator search cannot reach the real state.
        ClassicalSimSearchResult found = search_classical_simulators(
            builtin_additive4(), AdversaryStructure::singletons(4), 1);
        item("classical_simulator_gap", found.min_max_trace_norm > 0.01);
        report.set("classical_simulator_candidates", found.candidates);
        report.set("classical_simulator_min_distance", found.min_max_trace_norm);
    }

    report.set("all_passed", all);
    report.set("elapsed_ms", timer.elapsed_ms());
    emit(report, opt);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"superposition-attack analysis for secret sharing and deterministic MPC"};
    app.require_subcommand(1);

    CommonOptions opt;
    std::string subsets_spec = "{1},{2}";
    int attack_s = 0, attack_s2 = 1;

    CLI::App* ss_analyze = app.add_subcommand("ss-analyze", "decide superposition security");
    add_common(ss_analyze, opt, true);

    CLI::App* ss_attack = app.add_subcommand("ss-attack", "run a two-subset distinguishing attack");
    add_common(ss_attack, opt, true);
    ss_attack->add_option("--subsets", subsets_spec, "the two corrupted subsets, e.g. {1},{2}");
    ss_attack->add_option("--s", attack_s, "first secret index");
    ss_attack->add_option("--s2", attack_s2, "second secret index");

    CLI::App* mpc_analyze =
        app.add_subcommand("mpc-analyze", "decide simulator existence and synthesize a witness");
    add_common(mpc_analyze, opt, true);

    CLI::App* verify = app.add_subcommand("verify-paper", "re-run the canonical worked examples");
    add_common(verify, opt, false);

    try {
        app.parse(argc, argv);
        if (ss_analyze->parsed()) return cmd_ss_analyze(opt);
        if (ss_attack->parsed()) return cmd_ss_attack(opt, subsets_spec, attack_s, attack_s2);
        if (mpc_analyze->parsed()) return cmd_mpc_analyze(opt);
        if (verify->parsed()) return cmd_verify_paper(opt);
        return 1;
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const parse_error& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 2;
    } catch (const budget_error& e) {
        std::cerr << "budget exceeded: " << e.what() << "\n";
        return 3;
    } catch (const inconsistency_error& e) {
        std::cerr << "internal inconsistency: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

#include <doctest.h>

#include <random>

#include "qsa/mpc_worlds.hpp"
#include "qsa/random_util.hpp"
#include "qsa/sim_search.hpp"
#include "qsa/superposition.hpp"
#include "test_util.hpp"

using namespace qsa;

namespace {

MpcAdversary basis_adversary(const ProtocolSpec& p, int s, Subset a, ResponseMode mode) {
    MpcAdversary adv;
    adv.mode = mode;
    adv.env_dim = 1;
    adv.env_init = {1.0};
    adv.u_input = {{{s, 0, 1.0}}};
    adv.u_query = {{{0,
                     QueryLabel::make(a, SymbolString(p.n(), 0),
                                      SymbolString(p.joint_output_moduli().size(), 0),
                                      SymbolString(p.core.joint_view_len(), 0)),
                     1.0}}};
    return adv;
}

MpcAdversary uniform_query_adversary(const ProtocolSpec& p, int s,
                                     const AdversaryStructure& f) {
    MpcAdversary adv;
    adv.mode = ResponseMode::created;
    adv.env_dim = 1;
    adv.env_init = {1.0};
    adv.u_input = {{{s, 0, 1.0}}};
    adv.u_query.resize(1);
    double amp = 1.0 / std::sqrt(static_cast<double>(f.sets.size()));
    for (Subset a : f.sets)
        adv.u_query[0].push_back({0,
                                  QueryLabel::make(a, SymbolString(p.n(), 0),
                                                   SymbolString(p.joint_output_moduli().size(), 0),
                                                   SymbolString(p.core.joint_view_len(), 0)),
                                  amp});
    return adv;
}

}  // namespace

TEST_CASE("a deterministic protocol with one randomness atom stays pure") {
    ProtocolSpec p = qsa::testing::constant_view_protocol();
    WorldContext ctx(p, AdversaryStructure::singletons(2));
    WorldRun run = run_real_world(ctx, basis_adversary(p, 0, 0b01, ResponseMode::created));
    // Purity: trace of the square equals one.
    Mat sq = run.rho_adv.matrix * run.rho_adv.matrix;
    CHECK(std::abs(sq.trace() - cx(1, 0)) < 1e-12);
    for (const StateVector& stage : run.stages) stage.require_normalized(1e-12);
}

TEST_CASE("dealer runs for different inputs are orthogonal on the query register") {
    ProtocolSpec dealer = builtin_dealer(2);
    AdversaryStructure f = AdversaryStructure::of(2, {0b11});
    WorldContext ctx(dealer, f);

    auto supplied_adv = [&](int s) {
        MpcAdversary adv;
        adv.mode = ResponseMode::supplied;
        adv.env_dim = 1;
        adv.env_init = {1.0};
        adv.u_input = {{{s, 0, 1.0}}};
        adv.u_query.resize(1);
        std::vector<SymbolString> slots = enumerate_strings(dealer.joint_input_moduli());
        double amp = 1.0 / std::sqrt(static_cast<double>(slots.size()));
        for (const auto& ai : slots)
            adv.u_query[0].push_back(
                {0,
                 QueryLabel::make(0b11, ai, SymbolString(dealer.joint_output_moduli().size(), 0),
                                  SymbolString(dealer.core.joint_view_len(), 0)),
                 amp});
        return adv;
    };
    WorldRun rw0 = run_real_world(ctx, supplied_adv(0));
    WorldRun rw1 = run_real_world(ctx, supplied_adv(1));
    double d = trace_norm_difference(partial_trace(rw0.rho_adv, {"query"}),
                                     partial_trace(rw1.rho_adv, {"query"}));
    CHECK(d == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("the real-world state keeps the full four-register structure") {
    // Tracing the dealer pipeline down to (in, env, query) through the
    // generic partial trace reproduces the direct per-(s, r) mixture.
    ProtocolSpec dealer = builtin_dealer(2);
    AdversaryStructure f = AdversaryStructure::of(2, {0b11});
    WorldContext ctx(dealer, f);
    MpcAdversary adv = basis_adversary(dealer, 0, 0b11, ResponseMode::created);
    WorldRun run = run_real_world(ctx, adv);
    CHECK(run.rho_full.basis.register_names() ==
          std::vector<std::string>{"p", "in", "out", "env", "query"});
    DensityOperator again = partial_trace(run.rho_full, {"in", "env", "query"});
    CHECK(trace_norm_difference(again, run.rho_adv) < 1e-12);

    // Direct mixture: sum over randomness of the projected pure responses.
    Mat expect = Mat::Zero(run.rho_adv.basis.dim(), run.rho_adv.basis.dim());
    for (int r = 0; r < dealer.num_rand(); ++r) {
        Vec psi = Vec::Zero(run.rho_adv.basis.dim());
        QueryLabel answered = ctx.oracle_answer(
            QueryLabel::make(0b11, SymbolString(2, 0), SymbolString(0, 0), SymbolString(2, 0)), 0,
            r);
        psi[run.rho_adv.basis.require({ctx.input_id(0), 0, ctx.intern_query(answered)})] = 1.0;
        expect += ctx.rand_prob(r) * (psi * psi.adjoint());
    }
    CHECK((run.rho_adv.matrix - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("real-world query state matches the known four-party mixture") {
    ProtocolSpec add4 = builtin_additive4();
    AdversaryStructure f = AdversaryStructure::singletons(4);
    std::vector<std::pair<Subset, cx>> amps;
    for (Subset a : f.sets) amps.emplace_back(a, 0.5);

    for (int s = 0; s < 2; ++s) {
        DensityOperator got = real_query_register_state(add4, f, amps, s);
        // (1/16) sum_{i,i'} |P_i><P_i'| (x) |s_i><s_i'| (x) sum_r |v_i><v_i'|
        Mat expect = Mat::Zero(got.basis.dim(), got.basis.dim());
        auto label_of = [&](Subset a, int r) {
            SymbolString ri = add4.joint_input(a, s);
            SymbolString rv = add4.core.joint_view(a, s, r);
            Label l{static_cast<int>(a)};
            l.insert(l.end(), ri.begin(), ri.end());
            l.insert(l.end(), rv.begin(), rv.end());
            return l;
        };
        for (Subset a : f.sets)
            for (Subset a2 : f.sets)
                for (int r = 0; r < 4; ++r)
                    expect(got.basis.require(label_of(a, r)),
                           got.basis.require(label_of(a2, r))) += 1.0 / 16.0;
        CHECK((got.matrix - expect).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("the pipeline reproduces the direct attacker state for schemes") {
    // Two independent routes to the same physics: the direct mixture over
    // scheme randomness, and the purified four-register run reduced to the
    // query register.
    SharingScheme xor2 = builtin_xor2();
    ProtocolSpec as_proto = as_protocol(xor2);
    AdversaryStructure f = AdversaryStructure::singletons(2);
    CorruptionQuery q = standard_attack_query(xor2, 0b01, 0b10);
    std::vector<std::pair<Subset, cx>> amps;
    for (const auto& term : q.terms) amps.emplace_back(term.subset, term.amplitude);

    for (int s = 0; s < 2; ++s) {
        DensityOperator direct = adversary_state(xor2, q, s);
        DensityOperator direct_q = partial_trace(direct, {"sub", "resp"});
        DensityOperator piped = real_query_register_state(as_proto, f, amps, s);
        DensityOperator piped_q = partial_trace(piped, {"sub", "rv"});
        // Compare entrywise through (subset, response string) keys.
        auto key_of = [](const LabeledBasis& b, int i) {
            return std::make_pair(b.label(i)[0], Label(b.label(i).begin() + 1, b.label(i).end()));
        };
        for (int i = 0; i < piped_q.basis.dim(); ++i)
            for (int j = 0; j < piped_q.basis.dim(); ++j) {
                auto ki = key_of(piped_q.basis, i);
                auto kj = key_of(piped_q.basis, j);
                int di = -1, dj = -1;
                for (int t = 0; t < direct_q.basis.dim(); ++t) {
                    if (key_of(direct_q.basis, t) == ki) di = t;
                    if (key_of(direct_q.basis, t) == kj) dj = t;
                }
                REQUIRE(di >= 0);
                REQUIRE(dj >= 0);
                CHECK(std::abs(piped_q.matrix(i, j) - direct_q.matrix(di, dj)) < 1e-12);
            }
    }
}

TEST_CASE("the pipeline reproduces the phase attack in supplied mode") {
    // Supplied response registers through the generic pipeline: preload the
    // first view slot with the (|0> - |1>)/sqrt2 phase state and compare
    // against the direct construction.
    SharingScheme xor2 = builtin_xor2();
    ProtocolSpec as_proto = as_protocol(xor2);
    AdversaryStructure f = AdversaryStructure::singletons(2);
    CorruptionQuery q = phase_attack_query(xor2, 0b01, 0b10);
    WorldContext ctx(as_proto, f);

    auto make_adv = [&](int s) {
        MpcAdversary adv;
        adv.mode = ResponseMode::supplied;
        adv.env_dim = 1;
        adv.env_init = {1.0};
        adv.u_input = {{{s, 0, 1.0}}};
        adv.u_query.resize(1);
        for (const auto& term : q.terms)
            adv.u_query[0].push_back(
                {0, QueryLabel::make(term.subset, SymbolString(2, 0), SymbolString(0, 0),
                                     term.response),
                 term.amplitude});
        return adv;
    };
    auto query_state = [&](int s) {
        WorldRun run = run_real_world(ctx, make_adv(s));
        return ctx.structured_query_density(partial_trace(run.rho_adv, {"query"}));
    };
    DensityOperator piped0 = query_state(0);
    DensityOperator piped1 = query_state(1);
    CHECK(trace_norm_difference(piped0, piped1) == doctest::Approx(2.0).epsilon(1e-9));

    DensityOperator direct0 = adversary_state(xor2, q, 0);
    DensityOperator direct1 = adversary_state(xor2, q, 1);
    CHECK(trace_norm(direct0.matrix - direct1.matrix) ==
          doctest::Approx(2.0).epsilon(1e-9));
    // Same per-input states. The direct route materializes the full response
    // space while the pipeline keeps reachable labels, so compare over the
    // pipeline support and account for the rest through the trace.
    for (int which = 0; which < 2; ++which) {
        const DensityOperator& piped = which ? piped1 : piped0;
        const DensityOperator& direct = which ? direct1 : direct0;
        DensityOperator piped_q = partial_trace(piped, {"sub", "rv"});
        DensityOperator direct_q = partial_trace(direct, {"sub", "resp"});
        double matched_trace = 0;
        for (int i = 0; i < piped_q.basis.dim(); ++i) {
            int di = direct_q.basis.require(piped_q.basis.label(i));
            matched_trace += direct_q.matrix(di, di).real();
            for (int j = 0; j < piped_q.basis.dim(); ++j) {
                int dj = direct_q.basis.require(piped_q.basis.label(j));
                CHECK(std::abs(piped_q.matrix(i, j) - direct_q.matrix(di, dj)) < 1e-12);
            }
        }
        CHECK(matched_trace == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("input filtering separates the protocol from its input-less reading") {
    // As a protocol, the dealer's subset drops out of every cross-input
    // constraint and a simulator exists; read as an input-less scheme the
    // same tables are insecure for singletons.
    ProtocolSpec dealer = builtin_dealer(3);
    AdversaryStructure singles = AdversaryStructure::singletons(3);
    PermutationSearchResult protocol_search = search_permutations(dealer, singles);
    CHECK(protocol_search.status == PermutationSearchResult::Status::found);
    CHECK_FALSE(is_superposition_secure(dealer.core, singles));
    CHECK_FALSE(secure_by_square_criterion(dealer.core, singles));
}

TEST_CASE("identity simulator is perfect for the trivial protocol") {
    ProtocolSpec p = qsa::testing::trivial_protocol();
    AdversaryStructure f = AdversaryStructure::singletons(1);
    AdversaryBattery battery = make_battery(p, f, ResponseMode::created, 3, 5);
    SimulatorVerdict verdict = is_perfect_simulator(p, f, identity_simulator(), battery);
    CHECK(verdict.perfect);
    CHECK(verdict.max_distance < 1e-15);
}

TEST_CASE("the dealer demo reproduces the no-go values") {
    DealerNoGoReport report = run_dealer_no_go_demo(builtin_dealer(2), 11);
    CHECK(report.real_world_distance == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(report.simulator_input_distance <= 1e-12);
    CHECK(report.substitution_residual <= 1e-12);
}

TEST_CASE("the simulator-side state is input independent for any rewrite") {
    ProtocolSpec dealer = builtin_dealer(2);
    AdversaryStructure f = AdversaryStructure::of(2, {0b11});
    WorldContext ctx(dealer, f);
    std::vector<SymbolString> slots = enumerate_strings(dealer.joint_input_moduli());
    double amp = 1.0 / std::sqrt(static_cast<double>(slots.size()));
    auto make_adv = [&](int s) {
        MpcAdversary adv;
        adv.mode = ResponseMode::supplied;
        adv.env_dim = 1;
        adv.env_init = {1.0};
        adv.u_input = {{{s, 0, 1.0}}};
        adv.u_query.resize(1);
        for (const auto& ai : slots)
            adv.u_query[0].push_back(
                {0,
                 QueryLabel::make(0b11, ai, SymbolString(dealer.joint_output_moduli().size(), 0),
                                  SymbolString(dealer.core.joint_view_len(), 0)),
                 amp});
        return adv;
    };
    // A random corruption-preserving rewrite (block stays inside subset 0b11).
    std::mt19937_64 rng(5);
    std::vector<QueryLabel> block;
    for (const auto& ai : slots)
        block.push_back(QueryLabel::make(0b11, ai, SymbolString(0, 0), SymbolString(2, 0)));
    Mat v = random_unitary(static_cast<int>(block.size()), rng);
    SimulatorSpec sim;
    for (size_t i = 0; i < block.size(); ++i) {
        std::vector<SimulatorSpec::Image> img;
        for (size_t j = 0; j < block.size(); ++j)
            img.push_back({0, block[j], v(j, i)});
        sim.query_rewrite[{0, block[i]}] = img;
    }
    // The attacker that first undoes the rewrite recreates the identity
    // situation, so the rewrite buys the simulator nothing.
    auto undo_adv = [&](int s) {
        MpcAdversary adv = make_adv(s);
        std::map<QueryLabel, int> pos;
        for (size_t i = 0; i < block.size(); ++i) pos[block[i]] = static_cast<int>(i);
        std::map<std::pair<int, QueryLabel>, cx> acc;
        for (const auto& t : adv.u_query[0]) {
            int i = pos.at(t.query);
            for (size_t j = 0; j < block.size(); ++j)
                acc[{t.env_after, block[j]}] +=
                    t.amplitude * std::conj(v(i, static_cast<int>(j)));
        }
        adv.u_query[0].clear();
        for (const auto& [k, a] : acc)
            if (std::abs(a) > 1e-15) adv.u_query[0].push_back({k.first, k.second, a});
        return adv;
    };
    auto sim_view = [&](const MpcAdversary& adv, const SimulatorSpec& s) {
        WorldRun run = run_ideal_world(ctx, adv, s);
        return partial_trace(pure_density(run.stages[5]), {"sim", "query"});
    };
    // Identity simulator: the superposed input slot blinds the functionality.
    CHECK(trace_norm_difference(sim_view(make_adv(0), identity_simulator()),
                                sim_view(make_adv(1), identity_simulator())) <= 1e-12);
    // Rewritten simulator against the undoing attacker: same blind state.
    CHECK(trace_norm_difference(sim_view(undo_adv(0), sim),
                                sim_view(undo_adv(1), sim)) <= 1e-12);
    CHECK(trace_norm_difference(sim_view(undo_adv(0), sim),
                                sim_view(make_adv(0), identity_simulator())) <= 1e-12);
}

TEST_CASE("rewrites that move amplitude across subsets are rejected") {
    ProtocolSpec p = builtin_additive4();
    SimulatorSpec bad;
    QueryLabel from = QueryLabel::make(0b0001, SymbolString(4, 0), SymbolString(0, 0),
                                       SymbolString(8, 0));
    QueryLabel to = QueryLabel::make(0b0010, SymbolString(4, 0), SymbolString(0, 0),
                                     SymbolString(8, 0));
    bad.query_rewrite[{0, from}] = {{0, to, 1.0}};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("adversary validation rejects broken column maps") {
    ProtocolSpec p = builtin_additive4();
    WorldContext ctx(p, AdversaryStructure::singletons(4));
    MpcAdversary adv = basis_adversary(p, 0, 0b0001, ResponseMode::created);
    adv.u_input[0].push_back({1, 0, 0.5});  // norm now exceeds one
    CHECK_THROWS_AS(adv.validate(ctx), std::invalid_argument);

    MpcAdversary touched = basis_adversary(p, 0, 0b0001, ResponseMode::created);
    touched.u_query[0][0].query.view_slot[0] = 1;  // created mode must stay blank
    CHECK_THROWS_AS(touched.validate(ctx), std::invalid_argument);

    MpcAdversary outside = basis_adversary(p, 0, 0b0011, ResponseMode::created);
    CHECK_THROWS_AS(outside.validate(ctx), std::invalid_argument);
}

TEST_CASE("real-world reduced states are block diagonal across inputs") {
    ProtocolSpec add4 = builtin_additive4();
    AdversaryStructure f = AdversaryStructure::singletons(4);
    WorldContext ctx(add4, f);
    AdversaryBattery battery = make_battery(add4, f, ResponseMode::created, 19, 6);
    for (const MpcAdversary& adv : battery.members) {
        WorldRun run = run_real_world(ctx, adv);
        const LabeledBasis& b = run.rho_adv.basis;
        auto in_slot = b.register_span("in").first;
        for (int i = 0; i < b.dim(); ++i)
            for (int j = 0; j < b.dim(); ++j)
                if (b.label(i)[in_slot] != b.label(j)[in_slot])
                    CHECK(std::abs(run.rho_adv.matrix(i, j)) < 1e-12);
    }
}

TEST_CASE("classical table run in superposition matches a deterministic real run") {
    // One randomness atom: the honest views are a fixed function of the input,
    // and copying them into the table reproduces the real state exactly.
    ProtocolSpec p = qsa::testing::constant_view_protocol();
    AdversaryStructure f = AdversaryStructure::singletons(2);
    std::vector<std::pair<Subset, cx>> amps;
    for (Subset a : f.sets) amps.emplace_back(a, 1.0 / std::sqrt(2.0));

    ClassicalSimulator table;
    table.num_c = 1;
    table.c_weights = {1};
    for (Subset a : f.sets)
        for (int s = 0; s < p.num_inputs(); ++s)
            table.table[{a, p.joint_input(a, s), p.joint_output(a, s)}] = {
                p.core.joint_view(a, s, 0)};
    std::vector<DensityOperator> sim_states =
        superposed_classical_simulator_states(p, table, amps);
    for (int s = 0; s < p.num_inputs(); ++s) {
        DensityOperator real = real_query_register_state(p, f, amps, s);
        CHECK(trace_norm_difference(sim_states[s], real) < 1e-12);
    }
}

TEST_CASE("the natural per-subset sampler fails on the four-party protocol") {
    ProtocolSpec add4 = builtin_additive4();
    AdversaryStructure f = AdversaryStructure::singletons(4);
    std::vector<std::pair<Subset, cx>> amps;
    for (Subset a : f.sets) amps.emplace_back(a, 0.5);

    // Sample coherent shares of 0: perfect for input 0, wrong for input 1.
    ClassicalSimulator natural;
    natural.num_c = 4;
    natural.c_weights = {1, 1, 1, 1};
    auto pad8 = [](SymbolString v) {
        v.resize(8, 0);
        return v;
    };
    for (int s = 0; s < 2; ++s) {
        std::vector<SymbolString> dealer_views, v1, v2, v3;
        for (int c = 0; c < 4; ++c) {
            int c1 = c >> 1, c2 = c & 1;
            dealer_views.push_back(pad8({c1, c2}));
            v1.push_back(pad8({c1, 0}));
            v2.push_back(pad8({c2, 0}));
            v3.push_back(pad8({c1 ^ c2, 0}));
        }
        natural.table[{0b0001, add4.joint_input(0b0001, s), add4.joint_output(0b0001, s)}] =
            dealer_views;
        natural.table[{0b0010, add4.joint_input(0b0010, s), add4.joint_output(0b0010, s)}] = v1;
        natural.table[{0b0100, add4.joint_input(0b0100, s), add4.joint_output(0b0100, s)}] = v2;
        natural.table[{0b1000, add4.joint_input(0b1000, s), add4.joint_output(0b1000, s)}] = v3;
    }
    std::vector<DensityOperator> sim_states =
        superposed_classical_simulator_states(add4, natural, amps);
    DensityOperator real0 = real_query_register_state(add4, f, amps, 0);
    DensityOperator real1 = real_query_register_state(add4, f, amps, 1);
    CHECK(trace_norm_difference(sim_states[0], real0) < 1e-12);
    CHECK(trace_norm_difference(sim_states[1], real1) > 0.1);

    // The reconstruction witness: the three recipients' strings always sum to
    // the value dealt for input 0, so no fixed table can serve both inputs.
    for (int c = 0; c < 4; ++c) {
        int bit = natural.table.at({0b0010, add4.joint_input(0b0010, 0), {}})[c][0] ^
                  natural.table.at({0b0100, add4.joint_input(0b0100, 0), {}})[c][0] ^
                  natural.table.at({0b1000, add4.joint_input(0b1000, 0), {}})[c][0];
        CHECK(bit == 0);
    }
}

TEST_CASE("exhaustive classical search leaves a gap on the four-party protocol") {
    ClassicalSimSearchResult result =
        search_classical_simulators(builtin_additive4(), AdversaryStructure::singletons(4), 1);
    CHECK(result.candidates == 1024);
    CHECK(result.min_max_trace_norm > 0.01);
    result.best.validate(builtin_additive4());
}

TEST_CASE("exhaustive classical search finds exact tables when they exist") {
    ProtocolSpec p = qsa::testing::constant_view_protocol();
    ClassicalSimSearchResult result =
        search_classical_simulators(p, AdversaryStructure::singletons(2), 1);
    CHECK(result.min_max_trace_norm < 1e-12);
}

TEST_CASE("classical search respects its budget") {
    CHECK_THROWS_AS(
        search_classical_simulators(builtin_additive4(), AdversaryStructure::singletons(4), 1, 100),
        budget_error);
}

TEST_CASE("classical tables with wrong response lengths are rejected") {
    ProtocolSpec p = qsa::testing::constant_view_protocol();
    ClassicalSimulator bad;
    bad.num_c = 1;
    bad.c_weights = {1};
    bad.table[{0b01, p.joint_input(0b01, 0), p.joint_output(0b01, 0)}] = {SymbolString{0}};
    CHECK_THROWS_AS(bad.validate(p), std::invalid_argument);
}

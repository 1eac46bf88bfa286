#include <doctest.h>

#include <random>

#include "qsa/superposition.hpp"
#include "test_util.hpp"

using namespace qsa;

namespace {

const double inv_sqrt2 = 1.0 / std::sqrt(2.0);

// Independent construction of the attacker state, straight from the mixture
// formula, for cross-checking the production path.
Mat reference_attack_state(const SharingScheme& scheme, const CorruptionQuery& query, int s,
                           const LabeledBasis& basis) {
    Mat rho = Mat::Zero(basis.dim(), basis.dim());
    double total = static_cast<double>(scheme.rand_weight_total());
    for (int r = 0; r < scheme.num_rand(); ++r) {
        Vec psi = Vec::Zero(basis.dim());
        for (const auto& term : query.terms) {
            SymbolString resp = add_symbols(term.response, scheme.joint_view(term.subset, s, r),
                                            scheme.joint_view_moduli());
            Label l{term.env, static_cast<int>(term.subset)};
            l.insert(l.end(), resp.begin(), resp.end());
            psi[basis.require(l)] += term.amplitude;
        }
        rho += (scheme.rand_weights[r] / total) * (psi * psi.adjoint());
    }
    return rho;
}

}  // namespace

TEST_CASE("a classical query leaves a diagonal state equal to the distribution") {
    SharingScheme xor2 = builtin_xor2();
    CorruptionQuery q;
    q.mode = ResponseMode::created;
    q.structure = AdversaryStructure::of(2, {0b01});
    q.terms.push_back({0, 0b01, SymbolString{0, 0}, 1.0});
    DensityOperator rho = adversary_state(xor2, q, 0);
    CHECK((rho.matrix - rho.matrix.diagonal().asDiagonal().toDenseMatrix()).cwiseAbs().maxCoeff() <
          1e-15);
    // Diagonal weights match the classical share distribution (uniform bit).
    CHECK(std::abs(rho.matrix(rho.basis.require({0, 1, 0, 0}), rho.basis.require({0, 1, 0, 0})) -
                   0.5) < 1e-15);
    CHECK(std::abs(rho.matrix(rho.basis.require({0, 1, 1, 0}), rho.basis.require({0, 1, 1, 0})) -
                   0.5) < 1e-15);
}

TEST_CASE("pair query states match the closed-form mixture") {
    SharingScheme xor2 = builtin_xor2();
    CorruptionQuery q = standard_attack_query(xor2, 0b01, 0b10);
    for (int b = 0; b < 2; ++b) {
        DensityOperator rho = adversary_state(xor2, q, b);
        CHECK(rho.basis.dim() == 8);
        Mat expect = reference_attack_state(xor2, q, b, rho.basis);
        CHECK((rho.matrix - expect).cwiseAbs().maxCoeff() < 1e-15);
    }
}

TEST_CASE("three-value sharing materializes on the 18-dimensional basis") {
    SharingScheme sh = builtin_shamir(2, 1, 3);
    CorruptionQuery q = standard_attack_query(sh, 0b01, 0b10);
    DensityOperator rho = adversary_state(sh, q, 0);
    CHECK(rho.basis.dim() == 18);  // 2 subsets times 3^2 response strings
    rho.require_valid();
}

TEST_CASE("queries outside the declared structure are rejected") {
    SharingScheme xor2 = builtin_xor2();
    CorruptionQuery q = standard_attack_query(xor2, 0b01, 0b10);
    q.terms[0].subset = 0b11;
    CHECK_THROWS_AS(adversary_state(xor2, q, 0), std::invalid_argument);
    CorruptionQuery created = standard_attack_query(xor2, 0b01, 0b10);
    created.terms[0].response = {1, 0};
    CHECK_THROWS_AS(adversary_state(xor2, created, 0), std::invalid_argument);
}

TEST_CASE("direct security check and square criterion on the examples") {
    SharingScheme xor2 = builtin_xor2();
    AdversaryStructure singles2 = AdversaryStructure::singletons(2);
    CHECK_FALSE(is_superposition_secure(xor2, singles2));
    CHECK_FALSE(secure_by_square_criterion(xor2, singles2));
    AdversaryStructure empty_only = AdversaryStructure::of(2, {0});
    CHECK(is_superposition_secure(xor2, empty_only));
    CHECK(secure_by_square_criterion(xor2, empty_only));

    SharingScheme sh = builtin_shamir(4, 2, 5);
    CHECK(is_superposition_secure(sh, AdversaryStructure::singletons(4)));
    CHECK(secure_by_square_criterion(sh, AdversaryStructure::singletons(4)));
    CHECK_FALSE(is_superposition_secure(sh, AdversaryStructure::up_to_size(4, 2)));
    CHECK_FALSE(secure_by_square_criterion(sh, AdversaryStructure::up_to_size(4, 2)));
}

TEST_CASE("both decision routes agree on sampled structures") {
    std::mt19937_64 rng(7);
    std::vector<SharingScheme> schemes{builtin_xor2(), builtin_shamir(2, 1, 3),
                                       builtin_dealer(2).core, builtin_additive4().core};
    for (const auto& scheme : schemes) {
        int subsets = 1 << scheme.n;
        std::uniform_int_distribution<int> mask(0, (1 << subsets) - 1);
        for (int round = 0; round < 60; ++round) {
            std::vector<Subset> sets;
            int m = mask(rng);
            for (int i = 0; i < subsets; ++i)
                if (m & (1 << i)) sets.push_back(i);
            if (sets.empty()) continue;
            AdversaryStructure f = AdversaryStructure::of(scheme.n, sets);
            CHECK(is_superposition_secure(scheme, f) == secure_by_square_criterion(scheme, f));
        }
    }
}

TEST_CASE("standard queries have two support points and unit norm") {
    for (const SharingScheme& scheme :
         {builtin_xor2(), builtin_shamir(2, 1, 3), builtin_dealer(2).core}) {
        CorruptionQuery q = standard_attack_query(scheme, 0b01, 0b10);
        q.validate(scheme);
        CHECK(q.terms.size() == 2);
        CHECK(q.mode == ResponseMode::created);
    }
    CHECK_THROWS_AS(standard_attack_query(builtin_xor2(), 0b01, 0b01), std::invalid_argument);
}

TEST_CASE("distinguishing probabilities of the worked attacks") {
    SharingScheme xor2 = builtin_xor2();
    CorruptionQuery pair = standard_attack_query(xor2, 0b01, 0b10);
    CHECK(distinguish(xor2, pair, 0, 1) == doctest::Approx(0.75).epsilon(1e-12));

    CorruptionQuery phase = phase_attack_query(xor2, 0b01, 0b10);
    CHECK(distinguish(xor2, phase, 0, 1) == doctest::Approx(1.0).epsilon(1e-12));

    SharingScheme sh3 = builtin_shamir(2, 1, 3);
    CHECK(distinguish(sh3, standard_attack_query(sh3, 0b01, 0b10), 0, 1) >= 0.75 - 1e-9);
    CHECK_THROWS_AS(distinguish(xor2, pair, 1, 1), std::invalid_argument);
}

TEST_CASE("the attack bound holds for two-party threshold sharing") {
    for (int p : {2, 3, 5}) {
        SharingScheme sh = builtin_shamir(2, 1, p);
        CHECK(distinguish(sh, standard_attack_query(sh, 0b01, 0b10), 0, 1) >= 0.75 - 1e-9);
    }
}

TEST_CASE("attack submatrix of the xor scheme is half of identity minus flip") {
    SharingScheme xor2 = builtin_xor2();
    Mat s = attack_submatrix(xor2, 0b01, 0b10, 0, 1);
    // Response strings in lexicographic order: 00, 01, 10, 11.
    Mat expect = Mat::Zero(4, 4);
    expect(0, 0) = 0.5;   // (0,0) vs (0,0)
    expect(2, 2) = 0.5;   // (1,0) vs (1,0)
    expect(2, 0) = -0.5;  // secret 1 pairs (1,0) with (0,0)
    expect(0, 2) = -0.5;
    CHECK((s - expect).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(trace_norm(s) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(attack_submatrix(xor2, 0b01, 0b10, 1, 1).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("attack submatrix of three-value sharing has trace norm at least one") {
    SharingScheme sh = builtin_shamir(2, 1, 3);
    CHECK(trace_norm(attack_submatrix(sh, 0b01, 0b10, 0, 1)) >= 1.0 - 1e-9);
}

TEST_CASE("block identity: the submatrix determines the whole difference") {
    struct Case {
        SharingScheme scheme;
        Subset a0, a1;
    };
    std::vector<Case> cases{{builtin_xor2(), 0b01, 0b10},
                            {builtin_shamir(2, 1, 3), 0b01, 0b10},
                            {builtin_shamir(2, 1, 5), 0b01, 0b10},
                            {builtin_shamir(3, 1, 5), 0b001, 0b100},
                            {builtin_dealer(2).core, 0b01, 0b10}};
    for (const auto& c : cases) {
        REQUIRE(classical_secure(c.scheme, c.a0));
        REQUIRE(classical_secure(c.scheme, c.a1));
        CorruptionQuery q = standard_attack_query(c.scheme, c.a0, c.a1);
        double delta = trace_norm(adversary_state(c.scheme, q, 0).matrix -
                                  adversary_state(c.scheme, q, 1).matrix);
        double sub = trace_norm(attack_submatrix(c.scheme, c.a0, c.a1, 0, 1));
        CHECK(std::abs(delta - sub) < 1e-9);
        CHECK(distinguish(c.scheme, q, 0, 1) == doctest::Approx(0.5 + 0.25 * sub).epsilon(1e-9));
    }
}

TEST_CASE("block identity premise fails for the degenerate two-value instance") {
    // With p = n = 2 one evaluation point sits at 0 and party 2's share is the
    // secret itself, so the diagonal blocks of the difference survive.
    SharingScheme sh = builtin_shamir(2, 1, 2);
    CHECK_FALSE(classical_secure(sh, 0b10));
    CorruptionQuery q = standard_attack_query(sh, 0b01, 0b10);
    double delta = trace_norm(adversary_state(sh, q, 0).matrix -
                              adversary_state(sh, q, 1).matrix);
    double sub = trace_norm(attack_submatrix(sh, 0b01, 0b10, 0, 1));
    CHECK(delta == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    CHECK(sub == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(delta > sub + 1e-9);
    CHECK(distinguish(sh, q, 0, 1) >= 0.75 - 1e-9);
}

TEST_CASE("a padded view-pair permutation witnesses the submatrix bound") {
    // When the view pair (v_A0, v_A1) is injective over the randomness and
    // pins the secret, the outer-product sum padded to a permutation matrix
    // is a unitary witness putting |S|_tr at 1 or above. This is the
    // hand-built lower-bound route, independent of the singular-value path.
    for (int p : {3, 5}) {
        SharingScheme sh = builtin_shamir(2, 1, p);
        std::vector<SymbolString> responses = enumerate_strings(sh.joint_view_moduli());
        std::map<SymbolString, int> index;
        for (int i = 0; i < static_cast<int>(responses.size()); ++i) index[responses[i]] = i;
        int dim = static_cast<int>(responses.size());

        Mat witness = Mat::Zero(dim, dim);
        std::vector<bool> row_used(dim, false), col_used(dim, false);
        for (int r = 0; r < sh.num_rand(); ++r) {
            int row = index.at(sh.joint_view(0b01, 0, r));
            int col = index.at(sh.joint_view(0b10, 0, r));
            REQUIRE_FALSE(row_used[row]);  // injectivity of the pair map
            REQUIRE_FALSE(col_used[col]);
            witness(row, col) = 1.0;
            row_used[row] = col_used[col] = true;
        }
        for (int row = 0, col = 0; row < dim; ++row) {
            if (row_used[row]) continue;
            while (col_used[col]) ++col;
            witness(row, col) = 1.0;
            col_used[col] = true;
        }
        UnitaryOperator w{LabeledBasis::range("resp", dim), LabeledBasis::range("resp", dim),
                          witness};
        w.require_unitary(1e-12);

        Mat s = attack_submatrix(sh, 0b01, 0b10, 0, 1);
        double witnessed = std::abs((s * witness.transpose()).trace());
        CHECK(witnessed == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(trace_norm(s) >= witnessed - 1e-12);
    }
}

TEST_CASE("the prior-weighted mixture of attacker states has unit trace") {
    SharingScheme sh = builtin_shamir(2, 1, 3);
    CorruptionQuery q = standard_attack_query(sh, 0b01, 0b10);
    AttackOutcome outcome = run_attack(sh, q);
    Mat mixture = Mat::Zero(outcome.states[0].basis.dim(), outcome.states[0].basis.dim());
    double total = 0;
    for (long long w : sh.secret_weights) total += static_cast<double>(w);
    for (int s = 0; s < sh.num_secrets(); ++s)
        mixture += (sh.secret_weights[s] / total) * outcome.states[s].matrix;
    CHECK(std::abs(mixture.trace() - cx(1, 0)) < 1e-12);
    CHECK(outcome.max_trace_norm_delta > 1.0 - 1e-9);
}

TEST_CASE("insecure verdicts are witnessed by a working attack") {
    // Whenever the direct check says insecure, some pair query on a violating
    // subset pair separates two secrets strictly.
    std::vector<SharingScheme> schemes{builtin_xor2(), builtin_shamir(2, 1, 3),
                                       builtin_dealer(3).core, builtin_additive4().core};
    for (const SharingScheme& scheme : schemes) {
        AdversaryStructure f = AdversaryStructure::up_to_size(scheme.n, scheme.n);
        if (is_superposition_secure(scheme, f)) continue;
        bool witnessed = false;
        for (Subset a : f.sets) {
            for (Subset a2 : f.sets) {
                if (a == a2 || joint_views_secret_independent(scheme, a, a2)) continue;
                CorruptionQuery q = standard_attack_query(scheme, a, a2);
                AttackOutcome outcome = run_attack(scheme, q);
                CHECK(outcome.distinguishable);
                CHECK(outcome.p_guess(outcome.worst_s, outcome.worst_s2) > 0.5 + 1e-12);
                witnessed = true;
                break;
            }
            if (witnessed) break;
        }
        CHECK(witnessed);
    }
}

TEST_CASE("corrupting nothing reveals nothing") {
    SharingScheme xor2 = builtin_xor2();
    CorruptionQuery q;
    q.mode = ResponseMode::created;
    q.structure = AdversaryStructure::of(2, {0});
    q.terms.push_back({0, 0, SymbolString{0, 0}, 1.0});
    DensityOperator rho0 = adversary_state(xor2, q, 0);
    DensityOperator rho1 = adversary_state(xor2, q, 1);
    CHECK(trace_norm(rho0.matrix - rho1.matrix) < 1e-15);
}

TEST_CASE("created-mode outcomes are reproducible in supplied mode") {
    SharingScheme xor2 = builtin_xor2();
    CorruptionQuery created = standard_attack_query(xor2, 0b01, 0b10);
    CorruptionQuery supplied = created;
    supplied.mode = ResponseMode::supplied;
    for (int b = 0; b < 2; ++b) {
        Mat a = adversary_state(xor2, created, b).matrix;
        Mat c = adversary_state(xor2, supplied, b).matrix;
        CHECK((a - c).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("environment labels stay coherent in the attack state") {
    // A query entangled with a two-label environment register.
    SharingScheme xor2 = builtin_xor2();
    CorruptionQuery q;
    q.mode = ResponseMode::created;
    q.structure = AdversaryStructure::singletons(2);
    q.terms.push_back({0, 0b01, SymbolString{0, 0}, inv_sqrt2});
    q.terms.push_back({1, 0b10, SymbolString{0, 0}, inv_sqrt2});
    DensityOperator rho = adversary_state(xor2, q, 0);
    CHECK(rho.basis.dim() == 16);  // 2 env labels, 2 subsets, 4 responses
    rho.require_valid();
    Mat expect = reference_attack_state(xor2, q, 0, rho.basis);
    CHECK((rho.matrix - expect).cwiseAbs().maxCoeff() < 1e-15);
}

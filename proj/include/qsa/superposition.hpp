#pragma once

#include <vector>

#include "qsa/linalg.hpp"
#include "qsa/scheme.hpp"

namespace qsa {

// Whether the attacker hands the oracle a response register of its own
// choosing (general contents) or the oracle creates it (all-zero contents).
enum class ResponseMode { supplied, created };

// One corruption query: a normalized amplitude assignment over
// (environment label, corruptible subset, response string).
struct CorruptionQuery {
    struct Term {
        int env = 0;
        Subset subset = 0;
        SymbolString response;
        cx amplitude;
    };

    ResponseMode mode = ResponseMode::created;
    AdversaryStructure structure;  // declared corruptible family
    std::vector<Term> terms;

    void validate(const SharingScheme& scheme, double tol = default_tolerance) const;
};

// (|A0, 0> + |A1, 0>) / sqrt(2), created mode, no environment register.
CorruptionQuery standard_attack_query(const SharingScheme& scheme, Subset a0, Subset a1);

// Supplied-mode variant that also puts the first response symbol into the
// (|0> - |1>)/sqrt(2) phase state; against binary schemes whose two joint
// views xor to the secret this distinguishes perfectly.
CorruptionQuery phase_attack_query(const SharingScheme& scheme, Subset a0, Subset a1);

// The state the attacker holds after the oracle answered, for one secret:
// the randomness-weighted mixture over pure responses. Basis registers:
// env (from the query support), sub (subsets in the query support), resp
// (the full response string space).
DensityOperator adversary_state(const SharingScheme& scheme, const CorruptionQuery& query,
                                int s, int max_dim = max_state_dimension());

// Exact check that the weighted joint table of (view of a, view of a2) is
// identical for every secret.
bool joint_views_secret_independent(const SharingScheme& scheme, Subset a, Subset a2);

// Security against every one-time superposition query over f: decided through
// the pairwise joint-view tables, which is all any query's state depends on.
bool is_superposition_secure(const SharingScheme& scheme, const AdversaryStructure& f);

// The closed-form criterion: the pairwise unions of f all lie inside the
// scheme's classical adversary structure.
bool secure_by_square_criterion(const SharingScheme& scheme, const AdversaryStructure& f);

// Helstrom guess probability between the attacker states for s and s2.
double distinguish(const SharingScheme& scheme, const CorruptionQuery& query, int s, int s2);

// The off-diagonal block governing a two-subset query: the difference of the
// weighted view-pair outer products for s and s2, on the full response-string
// basis. Its trace norm equals the trace norm of the full state difference.
Mat attack_submatrix(const SharingScheme& scheme, Subset a0, Subset a1, int s, int s2,
                     int max_dim = max_state_dimension());

// Everything a report needs about one query against one scheme.
struct AttackOutcome {
    std::vector<DensityOperator> states;  // per secret
    Eigen::MatrixXd p_guess;              // pairwise, 0.5 on the diagonal
    double max_trace_norm_delta = 0;
    int worst_s = 0, worst_s2 = 0;
    bool distinguishable = false;  // some pair separated beyond tolerance
};

AttackOutcome run_attack(const SharingScheme& scheme, const CorruptionQuery& query);

}  // namespace qsa

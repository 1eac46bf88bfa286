#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qsa/linalg.hpp"
#include "qsa/mpc_worlds.hpp"
#include "qsa/scheme.hpp"

namespace qsa {

// Column r holds the ket |A, v_A(s, r)>. Rows enumerate every view string the
// subset can produce under any input, so matrices for different inputs share
// a row space and can be compared entrywise.
struct ViewMatrix {
    Subset subset = 0;
    int s = 0;
    std::vector<SymbolString> row_views;
    Mat m;  // row_views.size() x num_rand
};

ViewMatrix build_view_matrix(const ProtocolSpec& protocol, Subset a, int s);

// One square matrix per joint input, gauge-fixed to the identity at
// base_input after construction.
struct UnitaryFamily {
    std::vector<Mat> u;
    int base_input = 0;
};

// Do the matrices align every constrained view matrix pair:
// M(A,s) U_s == M(A,s') U_{s'} for all s, s' and A whose parties cannot tell
// s from s' through inputs or outputs. `why` receives the first failure.
bool check_alignment_condition(const ProtocolSpec& protocol, const AdversaryStructure& f,
                               const UnitaryFamily& fam, double tol = default_tolerance,
                               std::string* why = nullptr);

struct PermKey {
    int s = 0, s2 = 0;
    Subset subset = 0;
    auto tie() const { return std::tie(s, s2, subset); }
    bool operator<(const PermKey& o) const { return tie() < o.tie(); }
    bool operator==(const PermKey& o) const { return tie() == o.tie(); }
};

// One randomness permutation per ordered input pair (s, s2), s != s2, and
// per subset that cannot tell the pair apart.
struct PermutationFamily {
    std::map<PermKey, std::vector<int>> pi;
};

// The two finite properties a family must satisfy:
//  (1) relabelling randomness makes the views for s and s2 agree pointwise;
//  (2) relabelling leaves every same-source joint view table unchanged.
// Both checks are exact (uniform randomness required).
bool check_permutation_properties(const ProtocolSpec& protocol, const AdversaryStructure& f,
                                  const PermutationFamily& fam, std::string* why = nullptr);

// Why a search concluded that no family exists.
struct RefutationCertificate {
    enum class Kind {
        // The view multiset of `subset` differs between s and s2, violating
        // the diagonal Gram equality M(A,s) M(A,s)^+ = M(A,s2) M(A,s2)^+.
        marginal_gram,
        // A joint Gram equality instance (source s; permuted partners s2,
        // s3 with subsets A, A2) fails for the recorded permutations; when
        // locally_exhaustive is set it fails for every candidate pair.
        joint_gram,
    };
    Kind kind = Kind::marginal_gram;
    int s = 0, s2 = 0, s3 = 0;
    Subset subset = 0, subset2 = 0;
    std::vector<int> pi, sigma;
    bool locally_exhaustive = false;
    std::string to_string(int index_base, int n) const;
};

// Re-evaluates the certificate from scratch; true when the violation holds.
bool certificate_is_violated(const ProtocolSpec& protocol, const RefutationCertificate& cert);

struct PermutationSearchResult {
    enum class Status { found, absent, undecided } status = Status::undecided;
    PermutationFamily family;                       // when found
    std::optional<RefutationCertificate> certificate;  // when absent
    long long nodes = 0;
};

// Complete backtracking search over the property-(1)-feasible candidates,
// pruned by the pairwise property-(2) checks. `budget` caps visited nodes;
// running out gives status undecided (never absent).
PermutationSearchResult search_permutations(const ProtocolSpec& protocol,
                                            const AdversaryStructure& f,
                                            long long budget = 5'000'000);

// Solves the stacked alignment problems one input at a time (targets taken
// from the permutation family), appends the all-ones row so row and column
// sums come out 1, gauge-fixes the base input to the identity, and verifies
// the alignment condition. Throws inconsistency_error when the verification
// fails.
UnitaryFamily construct_unitaries(const ProtocolSpec& protocol, const AdversaryStructure& f,
                                  const PermutationFamily& perms);

// Reads the column relabelling each verified alignment performs.
PermutationFamily extract_permutations(const ProtocolSpec& protocol,
                                       const AdversaryStructure& f, const UnitaryFamily& fam,
                                       double tol = default_tolerance);

// Response synthesis from a verified family: the blank response ket for
// subset A and input class of s maps to the uniform-weight image
// (1/sqrt(|R|)) sum_{i,k} [U_s]_{i,k} |k>_sim |A, inputs, outputs, v_A(s,i)>.
// Verifies the map is well defined across inputs in the same class.
SimulatorSpec build_simulator(const ProtocolSpec& protocol, const AdversaryStructure& f,
                              const UnitaryFamily& fam, double tol = default_tolerance);

// The hand-found alignment matrix for the four-party additive protocol's
// second input (the base input aligns with the identity): all entries
// +-1/2, symmetric, one negative entry per row on the antidiagonal.
Mat known_additive4_unitary();

// Chains everything for a scheme viewed as an input-less protocol: the
// square criterion and the permutation search must agree.
struct SchemeSimulatorConsistency {
    bool square_criterion = false;
    bool search_found = false;
    bool consistent = false;
};

SchemeSimulatorConsistency scheme_simulator_consistency_check(const SharingScheme& scheme,
                                                              const AdversaryStructure& f,
                                                              long long budget = 5'000'000);

}  // namespace qsa

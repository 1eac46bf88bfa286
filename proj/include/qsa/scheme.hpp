#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qsa/errors.hpp"
#include "qsa/linalg.hpp"

namespace qsa {

// Party subsets are bitmasks over 0-based internal party indices.
using Subset = std::uint32_t;

// Strings of view/input/output symbols. Each scheme fixes one modulus for its
// view symbols; response-register arithmetic is componentwise addition mod
// that value (ordinary bitwise xor in the binary case).
using SymbolString = std::vector<int>;

std::string subset_to_string(Subset a, int n, int index_base);

// Finite-table secret-sharing scheme. The whole object is a lookup table:
// secret alphabet, weighted randomness alphabet, and one fixed-length view
// string per (party, secret, randomness) cell. Per-party views all have
// length view_len; joint views of a subset are the concatenation in
// ascending party order, zero-padded to n * view_len.
struct SharingScheme {
    std::string name;
    int n = 0;
    int party_index_base = 1;  // how parties are displayed: P_1.. or P_0..
    int view_mod = 2;
    int view_len = 1;

    std::vector<long long> secret_values;   // displayed values
    std::vector<long long> secret_weights;  // prior, default uniform
    std::vector<long long> rand_values;
    std::vector<long long> rand_weights;    // positive integers, exact

    // views[(party * num_secrets() + s) * num_rand() + r]
    std::vector<SymbolString> views;

    int num_secrets() const { return static_cast<int>(secret_values.size()); }
    int num_rand() const { return static_cast<int>(rand_values.size()); }
    long long rand_weight_total() const;

    const SymbolString& view(int party, int s, int r) const;
    // Concatenated views of parties in `a`, padded to joint_view_len().
    SymbolString joint_view(Subset a, int s, int r) const;
    int joint_view_len() const { return n * view_len; }
    std::vector<int> joint_view_moduli() const;

    Subset all_parties() const { return (Subset(1) << n) - 1; }
    void validate() const;
};

// Deterministic multiparty protocol: a scheme core whose "secrets" are the
// joint inputs, plus per-party input projections (with a reserved no-input
// symbol) and deterministic per-party outputs that depend on the joint input
// only, never on the randomness.
struct ProtocolSpec {
    SharingScheme core;

    int input_mod = 2;  // includes the reserved no-input symbol
    int no_input = 1;   // the reserved symbol, distinct from all input values
    std::vector<std::vector<int>> party_inputs;  // [party][s] -> symbol

    int out_len = 0;
    int out_mod = 2;
    std::vector<SymbolString> outputs;  // [(party * num_secrets()) + s]

    int n() const { return core.n; }
    int num_inputs() const { return core.num_secrets(); }
    int num_rand() const { return core.num_rand(); }

    // Concatenated inputs of parties in `a`, padded with no_input to width n.
    SymbolString joint_input(Subset a, int s) const;
    std::vector<int> joint_input_moduli() const;
    // Concatenated outputs of parties in `a`, zero-padded to n * out_len.
    SymbolString joint_output(Subset a, int s) const;
    std::vector<int> joint_output_moduli() const;
    const SymbolString& output(int party, int s) const;

    void validate() const;
};

// A family of corruptible subsets.
struct AdversaryStructure {
    int n = 0;
    std::vector<Subset> sets;  // sorted, deduplicated

    static AdversaryStructure of(int n, std::vector<Subset> sets);
    static AdversaryStructure singletons(int n);
    static AdversaryStructure up_to_size(int n, int k);

    bool contains(Subset a) const;
    bool subset_of(const AdversaryStructure& other) const;
    std::string to_string(int index_base) const;
};

// --- builtin generators -----------------------------------------------------

// Two parties share one bit with one random bit: shares r and bit xor r.
SharingScheme builtin_xor2();

// Degree-t polynomial sharing over GF(p) with evaluation points 1..n; the
// randomness alphabet is all coefficient tuples, uniform. Requires p prime
// and p >= n (smaller p makes evaluation points collide).
SharingScheme builtin_shamir(int n, int t, int p);

// Four parties; party 0 holds a bit and hands out a 2-of-3 additive sharing:
// random bits r1 to party 1, r2 to party 2, s^r1^r2 to party 3. No outputs.
ProtocolSpec builtin_additive4();

// Party 1 deals a secret from an alphabet of `secret_count` values: it draws
// one pad per recipient and sends s + pad_i to party i. The dealer's view is
// the pads; recipients see only their one-time-padded share. No outputs.
ProtocolSpec builtin_dealer(int n, int secret_count = 2);

// A scheme viewed as an input-less, output-less protocol (every party's
// input is the reserved no-input symbol).
ProtocolSpec as_protocol(const SharingScheme& scheme);

// Parse "xor2", "shamir:n,t,p", "dealer:n[,s]" or "additive4".
ProtocolSpec builtin_by_name(const std::string& spec);
bool builtin_is_scheme(const std::string& spec);  // true when no input/output table

// --- classical (non-superposition) analysis ---------------------------------

// True iff the distribution of the joint view of `a` is identical for every
// secret (exact integer-weight comparison).
bool classical_secure(const SharingScheme& scheme, Subset a);

// The maximal structure of classically secure subsets. n capped at 12.
AdversaryStructure classical_adversary_structure(const SharingScheme& scheme);

// All pairwise unions of members.
AdversaryStructure square_structure(const AdversaryStructure& f);

// Members of f whose parties hold identical inputs and outputs under joint
// inputs s and s2.
AdversaryStructure input_output_filter(const ProtocolSpec& protocol,
                                       const AdversaryStructure& f, int s, int s2);

// Replicates randomness atoms until all weights are equal (weights divided by
// their gcd first). Throws budget_error past the cap.
ProtocolSpec uniformize_randomness(const ProtocolSpec& protocol, int cap = 1024);

// FNV-1a of the canonical serialization; stable identity for reports.
std::uint64_t table_hash(const ProtocolSpec& protocol);

}  // namespace qsa

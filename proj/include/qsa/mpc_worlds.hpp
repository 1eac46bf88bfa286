#pragma once

#include <array>
#include <map>
#include <optional>
#include <tuple>
#include <vector>

#include "qsa/linalg.hpp"
#include "qsa/scheme.hpp"
#include "qsa/superposition.hpp"

namespace qsa {

// Contents of the corruption query register: a corrupted subset plus the
// three response slots (inputs, outputs, views). `blank` is the untouched
// register before the attacker formed its query.
struct QueryLabel {
    bool blank = true;
    Subset subset = 0;
    SymbolString in_slot;
    SymbolString out_slot;
    SymbolString view_slot;

    static QueryLabel make(Subset a, SymbolString in, SymbolString out, SymbolString view) {
        return QueryLabel{false, a, std::move(in), std::move(out), std::move(view)};
    }
    auto tie() const { return std::tie(blank, subset, in_slot, out_slot, view_slot); }
    bool operator<(const QueryLabel& o) const { return tie() < o.tie(); }
    bool operator==(const QueryLabel& o) const { return tie() == o.tie(); }
};

// Shared label interning for one protocol analysis, so that states produced
// by different pipeline runs are directly comparable.
class WorldContext {
public:
    WorldContext(ProtocolSpec protocol, AdversaryStructure structure);

    const ProtocolSpec& protocol() const { return protocol_; }
    const AdversaryStructure& structure() const { return structure_; }

    int num_inputs() const { return protocol_.num_inputs(); }
    int num_rand() const { return protocol_.num_rand(); }

    // Register label ids. 0 is the blank initial label everywhere.
    int purification_id(int s, int r) const { return 1 + s * num_rand() + r; }
    int input_id(int s) const { return 1 + s; }
    int output_id(int s);                     // interned by output string content
    int intern_query(const QueryLabel& q);    // blank -> 0
    const QueryLabel& query_label(int id) const;
    int query_label_count() const { return static_cast<int>(query_labels_.size()); }

    double rand_prob(int r) const;
    QueryLabel oracle_answer(const QueryLabel& q, int s, int r) const;       // fills all slots
    QueryLabel ideal_answer(const QueryLabel& q, int s) const;               // inputs/outputs only

    // Rewrites a density over interned query ids onto structured labels
    // (sub, ri, ro, rv) so it can be compared with externally built states.
    DensityOperator structured_query_density(const DensityOperator& rho_query);

private:
    ProtocolSpec protocol_;
    AdversaryStructure structure_;
    std::vector<QueryLabel> query_labels_;
    std::map<QueryLabel, int> query_index_;
    std::vector<SymbolString> out_strings_;
    std::map<SymbolString, int> out_index_;
};

// A static passive attacker: an initial environment state plus the action of
// its two unitaries on the reachable kets (the blank input register and the
// blank query register). Both column maps must be isometric.
struct MpcAdversary {
    ResponseMode mode = ResponseMode::created;
    int env_dim = 1;
    std::vector<cx> env_init;  // unit norm, one amplitude per environment label

    struct InputTerm {
        int s = 0;
        int env_after = 0;
        cx amplitude;
    };
    // u_input[x]: image of |blank_input, x>.
    std::vector<std::vector<InputTerm>> u_input;

    struct QueryTerm {
        int env_after = 0;
        QueryLabel query;
        cx amplitude;
    };
    // u_query[x]: image of |x, blank_query>.
    std::vector<std::vector<QueryTerm>> u_query;

    std::string description;

    void validate(const WorldContext& ctx, double tol = default_tolerance) const;
};

// A black-box simulator: an optional rewrite of the attacker's query before
// it reaches the ideal functionality (must preserve the corrupted-subset
// measurement statistics) and the response synthesis applied afterwards.
// Both are column maps on (sim register  x  query register); kets without an
// entry are left untouched, which fixes an arbitrary orthonormal completion
// outside the span the pipeline can reach.
struct SimulatorSpec {
    struct Image {
        int sim_after = 0;
        QueryLabel query;
        cx amplitude;
    };
    using ColumnMap = std::map<std::pair<int, QueryLabel>, std::vector<Image>>;

    ColumnMap query_rewrite;   // empty = identity
    ColumnMap response_map;

    std::string description;

    void validate(double tol = default_tolerance) const;
};

SimulatorSpec identity_simulator();

// One purified pipeline execution: per-stage states (norm-checked), the full
// final density and the attacker's reduced state over (in, env, query).
struct WorldRun {
    std::vector<StateVector> stages;  // index = stage number, 0 = initial
    DensityOperator rho_full;
    DensityOperator rho_adv;
};

// Stages: 1 attacker input, 2 protocol run, 3 attacker query, 4 oracle.
WorldRun run_real_world(WorldContext& ctx, const MpcAdversary& adv);

// Stages: 1 attacker input, 2 ideal functionality output, 3 attacker query,
// 4 simulator query rewrite, 5 ideal functionality response, 6 simulator
// response synthesis.
WorldRun run_ideal_world(WorldContext& ctx, const MpcAdversary& adv, const SimulatorSpec& sim);

struct AdversaryBattery {
    std::vector<MpcAdversary> members;
    std::uint64_t seed = 0;
};

// All computational-basis attackers (input  x  corruptible subset, zero
// responses), one uniform-subset query per input, and seeded Haar-like
// random attackers whose query correlates with the input through the
// environment register.
AdversaryBattery make_battery(const ProtocolSpec& protocol, const AdversaryStructure& f,
                              ResponseMode mode, std::uint64_t seed, int num_random = 20);

struct SimulatorVerdict {
    bool perfect = false;
    double max_distance = 0;       // max over battery of |rho_rw - rho_iw|_tr / 2
    double max_trace_norm = 0;     // same without the 1/2
    int worst_member = -1;
};

SimulatorVerdict is_perfect_simulator(const ProtocolSpec& protocol,
                                      const AdversaryStructure& f, const SimulatorSpec& sim,
                                      const AdversaryBattery& battery,
                                      double tol = default_tolerance);

// The dealer demonstration: with the input response slot in full
// superposition, the real-world states for two dealt values are orthogonal
// while the simulator-side state carries nothing, and any query rewrite can
// be pre-undone by a modified attacker.
struct DealerNoGoReport {
    double real_world_distance = 0;     // trace norm, expected 2
    double simulator_input_distance = 0;  // expected 0
    double substitution_residual = 0;     // expected 0
};

DealerNoGoReport run_dealer_no_go_demo(const ProtocolSpec& dealer, std::uint64_t seed = 7);

// A classical simulator table: per corrupted subset and per (inputs, outputs)
// class, one response string for each value of its own randomness c.
struct ClassicalSimulator {
    int num_c = 1;
    std::vector<long long> c_weights;  // positive; default uniform
    std::map<std::tuple<Subset, SymbolString, SymbolString>, std::vector<SymbolString>> table;

    const std::vector<SymbolString>& responses(Subset a, const SymbolString& in_slot,
                                               const SymbolString& out_slot) const;
    void validate(const ProtocolSpec& protocol) const;
};

// The state handed back when the classical table is run in superposition over
// the query's subset amplitudes, for each joint input. Basis registers:
// sub / ri / ro / rv.
std::vector<DensityOperator> superposed_classical_simulator_states(
    const ProtocolSpec& protocol, const ClassicalSimulator& sim,
    const std::vector<std::pair<Subset, cx>>& query_amplitudes);

// Real-world reference for the same query with a fixed classical input,
// reduced to the query register and rewritten onto structured labels.
DensityOperator real_query_register_state(const ProtocolSpec& protocol,
                                          const AdversaryStructure& f,
                                          const std::vector<std::pair<Subset, cx>>& query_amplitudes,
                                          int s);

struct ClassicalSimSearchResult {
    ClassicalSimulator best;
    double min_max_trace_norm = 0;  // min over tables of max over inputs
    long long candidates = 0;
};

// Exhaustive search over every classical table with `num_c` randomness
// values. Throws budget_error when the space exceeds the cap.
ClassicalSimSearchResult search_classical_simulators(
    const ProtocolSpec& protocol, const AdversaryStructure& f, int num_c,
    long long budget = 3'000'000,
    std::optional<std::vector<std::pair<Subset, cx>>> query = std::nullopt);

}  // namespace qsa

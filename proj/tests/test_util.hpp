#pragma once

#include <random>

#include "qsa/linalg.hpp"
#include "qsa/scheme.hpp"

namespace qsa::testing {

inline StateVector make_state(const std::string& reg, std::vector<Label> labels,
                              std::vector<cx> amps) {
    int width = labels.empty() ? 1 : static_cast<int>(labels[0].size());
    Vec v(amps.size());
    for (size_t i = 0; i < amps.size(); ++i) v[i] = amps[i];
    return StateVector(LabeledBasis({reg}, {width}, std::move(labels)), std::move(v));
}

// Single-register basis over labels {0..count-1}.
inline StateVector basis_state(const std::string& reg, int count, int which) {
    Vec v = Vec::Zero(count);
    v[which] = 1.0;
    return StateVector(LabeledBasis::range(reg, count), std::move(v));
}

// One party, one input, one randomness value, zero-width views. The smallest
// protocol the pipelines accept.
inline ProtocolSpec trivial_protocol() {
    ProtocolSpec pr;
    SharingScheme& s = pr.core;
    s.name = "trivial";
    s.n = 1;
    s.party_index_base = 1;
    s.view_mod = 2;
    s.view_len = 0;
    s.secret_values = {0};
    s.secret_weights = {1};
    s.rand_values = {0};
    s.rand_weights = {1};
    s.views = {{}};
    pr.input_mod = 1;
    pr.no_input = 0;
    pr.party_inputs = {{0}};
    pr.out_len = 0;
    pr.outputs = {{}};
    pr.validate();
    return pr;
}

// Two inputs, constant views: every view string is fixed per party, so the
// transcript carries nothing.
inline ProtocolSpec constant_view_protocol() {
    ProtocolSpec pr;
    SharingScheme& s = pr.core;
    s.name = "constant-views";
    s.n = 2;
    s.party_index_base = 1;
    s.view_mod = 2;
    s.view_len = 1;
    s.secret_values = {0, 1};
    s.secret_weights = {1, 1};
    s.rand_values = {0};
    s.rand_weights = {1};
    s.views.assign(2 * 2 * 1, {0});
    s.views[(1 * 2 + 0) * 1 + 0] = {1};  // party 2 always sees 1
    s.views[(1 * 2 + 1) * 1 + 0] = {1};
    pr.input_mod = 1;
    pr.no_input = 0;
    pr.party_inputs.assign(2, {0, 0});
    pr.out_len = 0;
    pr.outputs.assign(4, {});
    pr.validate();
    return pr;
}

// Seeded random deterministic protocol for property sweeps: n <= 3 parties,
// up to two joint inputs, up to four randomness atoms, one-symbol binary
// views, optional party inputs and outputs.
inline ProtocolSpec random_tiny_protocol(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> coin(0, 1);
    auto pick = [&](int lo, int hi) {
        return std::uniform_int_distribution<int>(lo, hi)(rng);
    };
    ProtocolSpec pr;
    SharingScheme& s = pr.core;
    s.name = "random-tiny";
    s.n = pick(1, 3);
    s.party_index_base = 1;
    s.view_mod = 2;
    s.view_len = pick(1, 2);
    int ns = pick(1, 2);
    for (int i = 0; i < ns; ++i) {
        s.secret_values.push_back(i);
        s.secret_weights.push_back(1);
    }
    int nr = pick(1, 4);
    for (int i = 0; i < nr; ++i) {
        s.rand_values.push_back(i);
        s.rand_weights.push_back(1);
    }
    s.views.resize(static_cast<size_t>(s.n) * ns * nr);
    for (auto& v : s.views) {
        v.resize(s.view_len);
        for (int& sym : v) sym = coin(rng);
    }
    bool any_input = false;
    pr.party_inputs.assign(s.n, std::vector<int>(ns, 0));
    std::vector<bool> holds_input(s.n);
    for (int i = 0; i < s.n; ++i) holds_input[i] = coin(rng) && ns > 1;
    for (int i = 0; i < s.n; ++i) any_input = any_input || holds_input[i];
    pr.input_mod = any_input ? ns + 1 : 1;
    pr.no_input = any_input ? ns : 0;
    for (int i = 0; i < s.n; ++i)
        for (int sec = 0; sec < ns; ++sec)
            pr.party_inputs[i][sec] = holds_input[i] ? sec : pr.no_input;
    pr.out_len = coin(rng);
    pr.out_mod = 2;
    pr.outputs.resize(static_cast<size_t>(s.n) * ns);
    for (auto& o : pr.outputs) {
        o.resize(pr.out_len);
        for (int& sym : o) sym = coin(rng);
    }
    pr.validate();
    return pr;
}

}  // namespace qsa::testing

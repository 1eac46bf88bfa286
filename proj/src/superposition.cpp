#include "qsa/superposition.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace qsa {

void CorruptionQuery::validate(const SharingScheme& scheme, double tol) const {
    if (terms.empty()) throw std::invalid_argument("query: no terms");
    double norm_sq = 0;
    std::set<std::tuple<int, Subset, SymbolString>> seen;
    for (const auto& t : terms) {
        if (!structure.contains(t.subset))
            throw std::invalid_argument("query: subset " +
                                        subset_to_string(t.subset, scheme.n,
                                                         scheme.party_index_base) +
                                        " outside the declared structure");
        if (static_cast<int>(t.response.size()) != scheme.joint_view_len())
            throw std::invalid_argument("query: response string has wrong length");
        for (int sym : t.response)
            if (sym < 0 || sym >= scheme.view_mod)
                throw std::invalid_argument("query: response symbol outside alphabet");
        if (mode == ResponseMode::created &&
            std::any_of(t.response.begin(), t.response.end(), [](int v) { return v != 0; }))
            throw std::invalid_argument("query: created mode requires all-zero responses");
        if (!seen.emplace(t.env, t.subset, t.response).second)
            throw std::invalid_argument("query: duplicate term");
        norm_sq += std::norm(t.amplitude);
    }
    if (std::abs(norm_sq - 1.0) > tol)
        throw std::invalid_argument("query: squared norm " + std::to_string(norm_sq) +
                                    " is not 1");
}

CorruptionQuery standard_attack_query(const SharingScheme& scheme, Subset a0, Subset a1) {
    if (a0 == a1) throw std::invalid_argument("standard_attack_query: subsets must differ");
    CorruptionQuery q;
    q.mode = ResponseMode::created;
    q.structure = AdversaryStructure::of(scheme.n, {a0, a1});
    const double amp = 1.0 / std::sqrt(2.0);
    SymbolString zero(scheme.joint_view_len(), 0);
    q.terms.push_back({0, a0, zero, amp});
    q.terms.push_back({0, a1, zero, amp});
    return q;
}

CorruptionQuery phase_attack_query(const SharingScheme& scheme, Subset a0, Subset a1) {
    if (a0 == a1) throw std::invalid_argument("phase_attack_query: subsets must differ");
    CorruptionQuery q;
    q.mode = ResponseMode::supplied;
    q.structure = AdversaryStructure::of(scheme.n, {a0, a1});
    SymbolString zero(scheme.joint_view_len(), 0);
    SymbolString one = zero;
    if (one.empty()) throw std::invalid_argument("phase_attack_query: zero-width responses");
    one[0] = 1 % scheme.view_mod;
    for (Subset a : {a0, a1}) {
        q.terms.push_back({0, a, zero, 0.5});
        q.terms.push_back({0, a, one, -0.5});
    }
    return q;
}

namespace {

// Shared basis for every per-secret state of one query: environment labels
// and subsets from the query support, response strings over the full space.
struct AttackBasis {
    std::vector<int> env_labels;
    std::vector<Subset> subsets;
    std::vector<SymbolString> responses;
    std::map<SymbolString, int> response_index;
    LabeledBasis basis;
    int t = 0;

    int index(int env, Subset sub, const SymbolString& resp) const {
        int e = static_cast<int>(std::lower_bound(env_labels.begin(), env_labels.end(), env) -
                                 env_labels.begin());
        int a = static_cast<int>(std::lower_bound(subsets.begin(), subsets.end(), sub) -
                                 subsets.begin());
        int r = response_index.at(resp);
        return (e * static_cast<int>(subsets.size()) + a) *
                   static_cast<int>(responses.size()) +
               r;
    }
};

AttackBasis make_attack_basis(const SharingScheme& scheme, const CorruptionQuery& query,
                              int max_dim) {
    AttackBasis out;
    out.t = scheme.joint_view_len();
    std::set<int> envs;
    std::set<Subset> subs;
    for (const auto& term : query.terms) {
        envs.insert(term.env);
        subs.insert(term.subset);
    }
    out.env_labels.assign(envs.begin(), envs.end());
    out.subsets.assign(subs.begin(), subs.end());
    out.responses = enumerate_strings(scheme.joint_view_moduli(), max_dim);
    for (int i = 0; i < static_cast<int>(out.responses.size()); ++i)
        out.response_index[out.responses[i]] = i;

    long long dim = static_cast<long long>(out.env_labels.size()) * out.subsets.size() *
                    out.responses.size();
    if (dim > max_dim)
        throw budget_error("adversary_state: basis dimension " + std::to_string(dim) +
                           " exceeds cap " + std::to_string(max_dim));
    std::vector<Label> labels;
    labels.reserve(dim);
    for (int e : out.env_labels)
        for (Subset a : out.subsets)
            for (const auto& r : out.responses) {
                Label l{e, static_cast<int>(a)};
                l.insert(l.end(), r.begin(), r.end());
                labels.push_back(std::move(l));
            }
    out.basis = LabeledBasis({"env", "sub", "resp"}, {1, 1, out.t}, std::move(labels));
    return out;
}

}  // namespace

DensityOperator adversary_state(const SharingScheme& scheme, const CorruptionQuery& query,
                                int s, int max_dim) {
    query.validate(scheme);
    if (s < 0 || s >= scheme.num_secrets())
        throw std::invalid_argument("adversary_state: secret index out of range");
    AttackBasis ab = make_attack_basis(scheme, query, max_dim);
    const auto moduli = scheme.joint_view_moduli();
    const double total = static_cast<double>(scheme.rand_weight_total());

    std::vector<std::pair<double, Vec>> mixture;
    for (int r = 0; r < scheme.num_rand(); ++r) {
        Vec psi = Vec::Zero(ab.basis.dim());
        for (const auto& term : query.terms) {
            SymbolString resp =
                add_symbols(term.response, scheme.joint_view(term.subset, s, r), moduli);
            psi[ab.index(term.env, term.subset, resp)] += term.amplitude;
        }
        mixture.emplace_back(scheme.rand_weights[r] / total, std::move(psi));
    }
    DensityOperator rho = mix(ab.basis, mixture);
    rho.require_valid();
    return rho;
}

bool joint_views_secret_independent(const SharingScheme& scheme, Subset a, Subset a2) {
    std::map<std::pair<SymbolString, SymbolString>, long long> reference;
    for (int s = 0; s < scheme.num_secrets(); ++s) {
        std::map<std::pair<SymbolString, SymbolString>, long long> table;
        for (int r = 0; r < scheme.num_rand(); ++r)
            table[{scheme.joint_view(a, s, r), scheme.joint_view(a2, s, r)}] +=
                scheme.rand_weights[r];
        if (s == 0)
            reference = std::move(table);
        else if (table != reference)
            return false;
    }
    return true;
}

bool is_superposition_secure(const SharingScheme& scheme, const AdversaryStructure& f) {
    for (Subset a : f.sets)
        for (Subset a2 : f.sets)
            if (!joint_views_secret_independent(scheme, a, a2)) return false;
    return true;
}

bool secure_by_square_criterion(const SharingScheme& scheme, const AdversaryStructure& f) {
    return square_structure(f).subset_of(classical_adversary_structure(scheme));
}

double distinguish(const SharingScheme& scheme, const CorruptionQuery& query, int s, int s2) {
    if (s == s2) throw std::invalid_argument("distinguish: secrets must differ");
    return helstrom_p_guess(adversary_state(scheme, query, s),
                            adversary_state(scheme, query, s2));
}

Mat attack_submatrix(const SharingScheme& scheme, Subset a0, Subset a1, int s, int s2,
                     int max_dim) {
    std::vector<SymbolString> responses = enumerate_strings(scheme.joint_view_moduli(), max_dim);
    std::map<SymbolString, int> index;
    for (int i = 0; i < static_cast<int>(responses.size()); ++i) index[responses[i]] = i;
    const double total = static_cast<double>(scheme.rand_weight_total());
    Mat out = Mat::Zero(responses.size(), responses.size());
    for (int r = 0; r < scheme.num_rand(); ++r) {
        double w = scheme.rand_weights[r] / total;
        out(index.at(scheme.joint_view(a0, s, r)), index.at(scheme.joint_view(a1, s, r))) += w;
        out(index.at(scheme.joint_view(a0, s2, r)), index.at(scheme.joint_view(a1, s2, r))) -= w;
    }
    return out;
}

AttackOutcome run_attack(const SharingScheme& scheme, const CorruptionQuery& query) {
    AttackOutcome out;
    int ns = scheme.num_secrets();
    out.states.reserve(ns);
    for (int s = 0; s < ns; ++s) out.states.push_back(adversary_state(scheme, query, s));
    out.p_guess = Eigen::MatrixXd::Constant(ns, ns, 0.5);
    for (int s = 0; s < ns; ++s)
        for (int s2 = s + 1; s2 < ns; ++s2) {
            double delta = trace_norm(out.states[s].matrix - out.states[s2].matrix);
            double p = 0.5 + 0.25 * delta;
            out.p_guess(s, s2) = out.p_guess(s2, s) = p;
            if (delta > out.max_trace_norm_delta) {
                out.max_trace_norm_delta = delta;
                out.worst_s = s;
                out.worst_s2 = s2;
            }
        }
    out.distinguishable = out.max_trace_norm_delta > default_tolerance;
    return out;
}

}  // namespace qsa

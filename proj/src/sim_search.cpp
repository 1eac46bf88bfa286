#include "qsa/sim_search.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace qsa {

namespace {

void require_uniform(const ProtocolSpec& protocol) {
    const auto& w = protocol.core.rand_weights;
    if (!std::all_of(w.begin(), w.end(), [&](long long x) { return x == w[0]; }))
        throw std::invalid_argument(
            "simulator search: uniform randomness required; uniformize first");
}

// All view strings a subset can show, shared row space across inputs.
std::vector<SymbolString> row_space(const ProtocolSpec& protocol, Subset a) {
    std::set<SymbolString> rows;
    for (int s = 0; s < protocol.num_inputs(); ++s)
        for (int r = 0; r < protocol.num_rand(); ++r)
            rows.insert(protocol.core.joint_view(a, s, r));
    return {rows.begin(), rows.end()};
}

std::vector<std::vector<int>> all_permutations(int n) {
    std::vector<int> p(n);
    for (int i = 0; i < n; ++i) p[i] = i;
    std::vector<std::vector<int>> out;
    do out.push_back(p);
    while (std::next_permutation(p.begin(), p.end()));
    return out;
}

using PairTable = std::map<std::pair<SymbolString, SymbolString>, int>;

PairTable joint_table(const ProtocolSpec& protocol, Subset a, Subset a2, int s,
                      const std::vector<int>* pi, const std::vector<int>* sigma) {
    PairTable t;
    for (int r = 0; r < protocol.num_rand(); ++r) {
        int ra = pi ? (*pi)[r] : r;
        int rb = sigma ? (*sigma)[r] : r;
        ++t[{protocol.core.joint_view(a, s, ra), protocol.core.joint_view(a2, s, rb)}];
    }
    return t;
}

std::map<SymbolString, int> view_multiset(const ProtocolSpec& protocol, Subset a, int s) {
    std::map<SymbolString, int> m;
    for (int r = 0; r < protocol.num_rand(); ++r) ++m[protocol.core.joint_view(a, s, r)];
    return m;
}

}  // namespace

ViewMatrix build_view_matrix(const ProtocolSpec& protocol, Subset a, int s) {
    ViewMatrix vm;
    vm.subset = a;
    vm.s = s;
    vm.row_views = row_space(protocol, a);
    std::map<SymbolString, int> row_of;
    for (int i = 0; i < static_cast<int>(vm.row_views.size()); ++i) row_of[vm.row_views[i]] = i;
    int nr = protocol.num_rand();
    vm.m = Mat::Zero(vm.row_views.size(), nr);
    for (int r = 0; r < nr; ++r) vm.m(row_of.at(protocol.core.joint_view(a, s, r)), r) = 1.0;
    return vm;
}

bool check_alignment_condition(const ProtocolSpec& protocol, const AdversaryStructure& f,
                               const UnitaryFamily& fam, double tol, std::string* why) {
    require_uniform(protocol);
    int ns = protocol.num_inputs();
    int nr = protocol.num_rand();
    if (static_cast<int>(fam.u.size()) != ns)
        throw std::invalid_argument("alignment check: family size does not match input count");
    for (const Mat& u : fam.u) {
        if (u.rows() != nr || u.cols() != nr)
            throw std::invalid_argument("alignment check: matrix dimension mismatch");
        UnitaryOperator op{LabeledBasis::range("r", nr), LabeledBasis::range("r", nr), u};
        op.require_unitary(tol);
    }
    for (int s = 0; s < ns; ++s)
        for (int s2 = s + 1; s2 < ns; ++s2) {
            AdversaryStructure constrained = input_output_filter(protocol, f, s, s2);
            for (Subset a : constrained.sets) {
                ViewMatrix ma = build_view_matrix(protocol, a, s);
                ViewMatrix mb = build_view_matrix(protocol, a, s2);
                double defect = (ma.m * fam.u[s] - mb.m * fam.u[s2]).cwiseAbs().maxCoeff();
                if (defect > tol) {
                    if (why) {
                        std::ostringstream os;
                        os << "alignment fails at inputs (" << s << "," << s2 << "), subset "
                           << subset_to_string(a, protocol.n(), protocol.core.party_index_base)
                           << ", defect " << defect;
                        *why = os.str();
                    }
                    return false;
                }
            }
        }
    return true;
}

bool check_permutation_properties(const ProtocolSpec& protocol, const AdversaryStructure& f,
                                  const PermutationFamily& fam, std::string* why) {
    require_uniform(protocol);
    int ns = protocol.num_inputs();
    int nr = protocol.num_rand();
    auto fail = [&](const std::string& msg) {
        if (why) *why = msg;
        return false;
    };

    // Totality and bijectivity.
    for (int s = 0; s < ns; ++s)
        for (int s2 = 0; s2 < ns; ++s2) {
            if (s == s2) continue;
            for (Subset a : input_output_filter(protocol, f, s, s2).sets) {
                auto it = fam.pi.find({s, s2, a});
                if (it == fam.pi.end())
                    return fail("missing permutation entry for inputs (" + std::to_string(s) +
                                "," + std::to_string(s2) + ")");
                const auto& p = it->second;
                if (static_cast<int>(p.size()) != nr) return fail("permutation has wrong size");
                std::vector<bool> hit(nr, false);
                for (int v : p) {
                    if (v < 0 || v >= nr || hit[v]) return fail("permutation is not a bijection");
                    hit[v] = true;
                }
            }
        }

    // Property (1): pointwise view agreement through the paired relabellings.
    for (const auto& [key, p] : fam.pi) {
        const auto& rev = fam.pi.at({key.s2, key.s, key.subset});
        for (int r = 0; r < nr; ++r)
            if (protocol.core.joint_view(key.subset, key.s, p[r]) !=
                protocol.core.joint_view(key.subset, key.s2, rev[r]))
                return fail("relabelled views disagree at inputs (" + std::to_string(key.s) +
                            "," + std::to_string(key.s2) + ")");
    }

    // Property (2): same-source joint view tables are unchanged.
    for (auto it = fam.pi.begin(); it != fam.pi.end(); ++it)
        for (auto jt = fam.pi.begin(); jt != fam.pi.end(); ++jt) {
            if (it == jt || it->first.s != jt->first.s) continue;
            const PermKey& k1 = it->first;
            const PermKey& k2 = jt->first;
            if (joint_table(protocol, k1.subset, k2.subset, k1.s, &it->second, &jt->second) !=
                joint_table(protocol, k1.subset, k2.subset, k1.s, nullptr, nullptr))
                return fail("joint view table changes under relabelling at source input " +
                            std::to_string(k1.s));
        }
    return true;
}

std::string RefutationCertificate::to_string(int index_base, int n) const {
    std::ostringstream os;
    if (kind == Kind::marginal_gram) {
        os << "view multiset of " << subset_to_string(subset, n, index_base)
           << " differs between inputs " << s << " and " << s2;
    } else {
        os << "joint view table of (" << subset_to_string(subset, n, index_base) << ","
           << subset_to_string(subset2, n, index_base) << ") at source input " << s
           << " is not preserved by the candidate relabellings for targets (" << s2 << ","
           << s3 << ")";
        if (locally_exhaustive) os << " for any candidate pair";
    }
    return os.str();
}

bool certificate_is_violated(const ProtocolSpec& protocol, const RefutationCertificate& cert) {
    if (cert.kind == RefutationCertificate::Kind::marginal_gram)
        return view_multiset(protocol, cert.subset, cert.s) !=
               view_multiset(protocol, cert.subset, cert.s2);
    return joint_table(protocol, cert.subset, cert.subset2, cert.s, &cert.pi, &cert.sigma) !=
           joint_table(protocol, cert.subset, cert.subset2, cert.s, nullptr, nullptr);
}

PermutationSearchResult search_permutations(const ProtocolSpec& protocol,
                                            const AdversaryStructure& f, long long budget) {
    require_uniform(protocol);
    int ns = protocol.num_inputs();
    int nr = protocol.num_rand();
    PermutationSearchResult result;

    // Variables, in deterministic order.
    std::vector<PermKey> keys;
    for (int s = 0; s < ns; ++s)
        for (int s2 = 0; s2 < ns; ++s2) {
            if (s == s2) continue;
            for (Subset a : input_output_filter(protocol, f, s, s2).sets)
                keys.push_back({s, s2, a});
        }
    std::sort(keys.begin(), keys.end());

    if (keys.empty()) {  // no constraints at all
        result.status = PermutationSearchResult::Status::found;
        return result;
    }

    // Feasibility: the relabelled views can only agree when the multisets do.
    for (const PermKey& k : keys)
        if (view_multiset(protocol, k.subset, k.s) != view_multiset(protocol, k.subset, k.s2)) {
            result.status = PermutationSearchResult::Status::absent;
            RefutationCertificate cert;
            cert.kind = RefutationCertificate::Kind::marginal_gram;
            cert.s = k.s;
            cert.s2 = k.s2;
            cert.subset = k.subset;
            result.certificate = cert;
            return result;
        }

    if (nr > 8) {  // 8! candidate relabellings per slot is the enumeration limit
        result.status = PermutationSearchResult::Status::undecided;
        return result;
    }
    const std::vector<std::vector<int>> perms = all_permutations(nr);

    int nk = static_cast<int>(keys.size());
    std::map<PermKey, int> key_pos;
    for (int i = 0; i < nk; ++i) key_pos[keys[i]] = i;
    std::vector<int> chosen(nk, -1);

    // Pairs to check when assigning key i against an earlier key j.
    struct Check {
        int other;
        bool reverse_pairing;  // property (1) vs property (2)
    };
    std::vector<std::vector<Check>> checks(nk);
    for (int i = 0; i < nk; ++i) {
        auto rev = key_pos.find({keys[i].s2, keys[i].s, keys[i].subset});
        if (rev != key_pos.end() && rev->second < i) checks[i].push_back({rev->second, true});
        for (int j = 0; j < i; ++j)
            if (keys[j].s == keys[i].s) checks[i].push_back({j, false});
    }

    PairTable reference;  // scratch
    auto passes = [&](int i) {
        const auto& p = perms[chosen[i]];
        for (const Check& c : checks[i]) {
            const auto& q = perms[chosen[c.other]];
            if (c.reverse_pairing) {
                for (int r = 0; r < nr; ++r)
                    if (protocol.core.joint_view(keys[i].subset, keys[i].s, p[r]) !=
                        protocol.core.joint_view(keys[i].subset, keys[i].s2, q[r]))
                        return false;
            } else {
                const PermKey& k1 = keys[i];
                const PermKey& k2 = keys[c.other];
                if (joint_table(protocol, k1.subset, k2.subset, k1.s, &p, &q) !=
                    joint_table(protocol, k1.subset, k2.subset, k1.s, nullptr, nullptr))
                    return false;
            }
        }
        return true;
    };

    // Deepest property-(2) conflict seen, for the refutation certificate.
    struct Conflict {
        int depth = -1;
        PermKey k1, k2;
        std::vector<int> pi, sigma;
    } deepest;

    long long nodes = 0;
    int depth = 0;
    std::vector<int> cursor(nk, 0);
    bool undecided = false;
    while (depth >= 0) {
        if (depth == nk) break;  // full assignment
        bool advanced = false;
        for (int& c = cursor[depth]; c < static_cast<int>(perms.size()); ++c) {
            if (++nodes > budget) {
                undecided = true;
                break;
            }
            chosen[depth] = c;
            if (passes(depth)) {
                ++c;
                ++depth;
                if (depth < nk) cursor[depth] = 0;
                advanced = true;
                break;
            }
            // Record the failing property-(2) instance for certificates.
            for (const Check& chk : checks[depth]) {
                if (chk.reverse_pairing) continue;
                const auto& q = perms[chosen[chk.other]];
                const PermKey& k1 = keys[depth];
                const PermKey& k2 = keys[chk.other];
                if (joint_table(protocol, k1.subset, k2.subset, k1.s, &perms[c], &q) !=
                        joint_table(protocol, k1.subset, k2.subset, k1.s, nullptr, nullptr) &&
                    depth > deepest.depth) {
                    deepest = {depth, k1, k2, perms[c], q};
                    break;
                }
            }
        }
        if (undecided) break;
        if (!advanced) {
            chosen[depth] = -1;
            --depth;
        }
    }
    result.nodes = nodes;

    if (undecided) {
        result.status = PermutationSearchResult::Status::undecided;
        return result;
    }
    if (depth == nk) {
        result.status = PermutationSearchResult::Status::found;
        for (int i = 0; i < nk; ++i) result.family.pi[keys[i]] = perms[chosen[i]];
        return result;
    }

    result.status = PermutationSearchResult::Status::absent;
    // Prefer a locally exhaustive violated instance when the scan is cheap.
    long long pair_space = static_cast<long long>(perms.size()) * perms.size();
    if (pair_space <= 2'000'000) {
        for (int i = 0; i < nk && !result.certificate; ++i)
            for (int j = 0; j < nk && !result.certificate; ++j) {
                if (i == j || keys[i].s != keys[j].s) continue;
                const PermKey& k1 = keys[i];
                const PermKey& k2 = keys[j];
                PairTable want = joint_table(protocol, k1.subset, k2.subset, k1.s, nullptr, nullptr);
                bool satisfiable = false;
                for (const auto& p : perms) {
                    for (const auto& q : perms)
                        if (joint_table(protocol, k1.subset, k2.subset, k1.s, &p, &q) == want) {
                            satisfiable = true;
                            break;
                        }
                    if (satisfiable) break;
                }
                if (!satisfiable) {
                    RefutationCertificate cert;
                    cert.kind = RefutationCertificate::Kind::joint_gram;
                    cert.s = k1.s;
                    cert.s2 = k1.s2;
                    cert.s3 = k2.s2;
                    cert.subset = k1.subset;
                    cert.subset2 = k2.subset;
                    cert.pi = perms[0];
                    cert.sigma = perms[0];
                    cert.locally_exhaustive = true;
                    result.certificate = cert;
                }
            }
    }
    if (!result.certificate) {
        if (deepest.depth < 0)
            throw inconsistency_error(
                "search: exhausted without any recorded joint-table conflict");
        RefutationCertificate cert;
        cert.kind = RefutationCertificate::Kind::joint_gram;
        cert.s = deepest.k1.s;
        cert.s2 = deepest.k1.s2;
        cert.s3 = deepest.k2.s2;
        cert.subset = deepest.k1.subset;
        cert.subset2 = deepest.k2.subset;
        cert.pi = deepest.pi;
        cert.sigma = deepest.sigma;
        result.certificate = cert;
    }
    if (!certificate_is_violated(protocol, *result.certificate))
        throw inconsistency_error("search: produced certificate does not recompute as violated");
    return result;
}

namespace {

UnitaryFamily construct_from_targets(
    const ProtocolSpec& protocol,
    const std::vector<std::vector<std::pair<Subset, std::vector<int>>>>& targets_per_input,
    const AdversaryStructure& f, double tol) {
    int ns = protocol.num_inputs();
    int nr = protocol.num_rand();
    UnitaryFamily fam;
    fam.base_input = 0;
    fam.u.assign(ns, Mat::Identity(nr, nr));

    for (int s = 0; s < ns; ++s) {
        const auto& constraints = targets_per_input[s];
        if (constraints.empty()) continue;
        int total_rows = 1;  // the all-ones row that pins row/column sums
        std::vector<ViewMatrix> sources;
        for (const auto& [a, pi] : constraints) {
            sources.push_back(build_view_matrix(protocol, a, s));
            total_rows += static_cast<int>(sources.back().row_views.size());
        }
        Mat b = Mat::Zero(total_rows, nr), c = Mat::Zero(total_rows, nr);
        int row = 0;
        for (size_t i = 0; i < constraints.size(); ++i) {
            const auto& pi = constraints[i].second;
            const Mat& m = sources[i].m;
            int h = static_cast<int>(sources[i].row_views.size());
            b.block(row, 0, h, nr) = m;
            for (int r = 0; r < nr; ++r) c.col(r).segment(row, h) = m.col(pi[r]);
            row += h;
        }
        b.row(row).setOnes();
        c.row(row).setOnes();
        fam.u[s] = align_unitary(b, c).unitary;
        double residual = (b * fam.u[s] - c).cwiseAbs().maxCoeff();
        if (residual > tol)
            throw inconsistency_error("construct_unitaries: alignment residual " +
                                      std::to_string(residual) + " at input " +
                                      std::to_string(s));
    }

    // Gauge: make the base input exactly the identity.
    Mat g = fam.u[fam.base_input].adjoint();
    for (Mat& u : fam.u) u = u * g;
    fam.u[fam.base_input] = Mat::Identity(nr, nr);

    std::string why;
    if (!check_alignment_condition(protocol, f, fam, tol, &why))
        throw inconsistency_error("construct_unitaries: verification failed: " + why);
    for (const Mat& u : fam.u) {
        for (int i = 0; i < nr; ++i) {
            if (std::abs(u.row(i).sum() - cx(1, 0)) > tol ||
                std::abs(u.col(i).sum() - cx(1, 0)) > tol)
                throw inconsistency_error("construct_unitaries: row/column sums deviate from 1");
        }
    }
    return fam;
}

}  // namespace

UnitaryFamily construct_unitaries(const ProtocolSpec& protocol, const AdversaryStructure& f,
                                  const PermutationFamily& perms) {
    require_uniform(protocol);
    std::string why;
    if (!check_permutation_properties(protocol, f, perms, &why))
        throw std::invalid_argument("construct_unitaries: family rejected: " + why);
    int ns = protocol.num_inputs();
    std::vector<std::vector<std::pair<Subset, std::vector<int>>>> targets(ns);
    for (const auto& [key, pi] : perms.pi) targets[key.s].push_back({key.subset, pi});
    return construct_from_targets(protocol, targets, f, default_tolerance);
}

PermutationFamily extract_permutations(const ProtocolSpec& protocol,
                                       const AdversaryStructure& f, const UnitaryFamily& fam,
                                       double tol) {
    require_uniform(protocol);
    std::string why;
    if (!check_alignment_condition(protocol, f, fam, tol, &why))
        throw std::invalid_argument("extract_permutations: family rejected: " + why);
    int ns = protocol.num_inputs();
    int nr = protocol.num_rand();
    PermutationFamily out;
    for (int s = 0; s < ns; ++s)
        for (int s2 = 0; s2 < ns; ++s2) {
            if (s == s2) continue;
            for (Subset a : input_output_filter(protocol, f, s, s2).sets) {
                ViewMatrix vm = build_view_matrix(protocol, a, s);
                Mat t = vm.m * fam.u[s];
                // Column k must be a basis ket; read its view string.
                std::vector<int> pi(nr, -1);
                std::vector<bool> used(nr, false);
                for (int k = 0; k < nr; ++k) {
                    int hit = -1;
                    for (int row = 0; row < t.rows(); ++row) {
                        cx v = t(row, k);
                        if (std::abs(v - cx(1, 0)) <= 1e-6) {
                            hit = row;
                        } else if (std::abs(v) > 1e-6) {
                            hit = -2;
                            break;
                        }
                    }
                    if (hit < 0)
                        throw inconsistency_error(
                            "extract_permutations: aligned column is not a basis ket");
                    const SymbolString& w = vm.row_views[hit];
                    int pick = -1;
                    for (int i = 0; i < nr; ++i)
                        if (!used[i] && protocol.core.joint_view(a, s, i) == w) {
                            pick = i;
                            break;
                        }
                    if (pick < 0)
                        throw inconsistency_error(
                            "extract_permutations: no unused randomness matches the column");
                    used[pick] = true;
                    pi[k] = pick;
                }
                out.pi[{s, s2, a}] = std::move(pi);
            }
        }
    return out;
}

SimulatorSpec build_simulator(const ProtocolSpec& protocol, const AdversaryStructure& f,
                              const UnitaryFamily& fam, double tol) {
    require_uniform(protocol);
    std::string why;
    if (!check_alignment_condition(protocol, f, fam, tol, &why))
        throw std::invalid_argument("build_simulator: family rejected: " + why);

    int nr = protocol.num_rand();
    int wv = protocol.core.joint_view_len();
    double amp = 1.0 / std::sqrt(static_cast<double>(nr));

    SimulatorSpec sim;
    sim.description = "synthesized from aligned unitary family";
    for (Subset a : f.sets) {
        // Group inputs by what the ideal functionality reveals about them.
        std::map<std::pair<SymbolString, SymbolString>, std::vector<int>> classes;
        for (int s = 0; s < protocol.num_inputs(); ++s)
            classes[{protocol.joint_input(a, s), protocol.joint_output(a, s)}].push_back(s);
        for (const auto& [cls, members] : classes) {
            const auto& [ri, ro] = cls;
            std::map<std::pair<int, QueryLabel>, cx> image;  // representative
            bool first = true;
            for (int s : members) {
                std::map<std::pair<int, QueryLabel>, cx> img;
                for (int i = 0; i < nr; ++i) {
                    QueryLabel q =
                        QueryLabel::make(a, ri, ro, protocol.core.joint_view(a, s, i));
                    for (int k = 0; k < nr; ++k) {
                        cx coeff = amp * fam.u[s](i, k);
                        if (std::abs(coeff) > 1e-14) img[{k, q}] += coeff;
                    }
                }
                if (first) {
                    image = std::move(img);
                    first = false;
                    continue;
                }
                // Same class, different input: the images must coincide.
                double defect = 0;
                std::map<std::pair<int, QueryLabel>, cx> diff = image;
                for (const auto& [k, v] : img) diff[k] -= v;
                for (const auto& [k, v] : diff) defect += std::norm(v);
                if (std::sqrt(defect) > tol)
                    throw inconsistency_error(
                        "build_simulator: response synthesis differs across inputs of one "
                        "class; the family does not align subset " +
                        subset_to_string(a, protocol.n(), protocol.core.party_index_base));
            }
            std::vector<SimulatorSpec::Image> terms;
            for (const auto& [k, v] : image) terms.push_back({k.first, k.second, v});
            // Domain ket: the query register as the ideal functionality left
            // it, inputs and outputs filled, view slot still blank.
            sim.response_map[{0, QueryLabel::make(a, ri, ro, SymbolString(wv, 0))}] =
                std::move(terms);
        }
    }
    sim.validate(tol);
    return sim;
}

Mat known_additive4_unitary() {
    Mat u(4, 4);
    u << 0.5, 0.5, 0.5, -0.5,
         0.5, 0.5, -0.5, 0.5,
         0.5, -0.5, 0.5, 0.5,
         -0.5, 0.5, 0.5, 0.5;
    return u;
}

SchemeSimulatorConsistency scheme_simulator_consistency_check(const SharingScheme& scheme,
                                                              const AdversaryStructure& f,
                                                              long long budget) {
    SchemeSimulatorConsistency out;
    out.square_criterion = secure_by_square_criterion(scheme, f);
    ProtocolSpec protocol = uniformize_randomness(as_protocol(scheme));

    PermutationSearchResult search = search_permutations(protocol, f, budget);
    if (search.status == PermutationSearchResult::Status::found) {
        out.search_found = true;
    } else if (search.status == PermutationSearchResult::Status::absent) {
        out.search_found = false;
    } else {
        // The permutation space is out of enumeration reach. For an
        // input-less protocol every pair shares the same constraint family,
        // so one aligned family anchored at input 0 decides existence:
        // it exists exactly when the stacked Gram blocks match, and those are
        // the pairwise joint view tables.
        int ns = protocol.num_inputs();
        int nr = protocol.num_rand();
        bool constructed = true;
        try {
            for (int s = 1; s < ns; ++s) {
                int total_rows = 1;
                std::vector<ViewMatrix> sources, goals;
                for (Subset a : f.sets) {
                    sources.push_back(build_view_matrix(protocol, a, s));
                    goals.push_back(build_view_matrix(protocol, a, 0));
                    total_rows += static_cast<int>(sources.back().row_views.size());
                }
                Mat b = Mat::Zero(total_rows, nr), c = Mat::Zero(total_rows, nr);
                int row = 0;
                for (size_t i = 0; i < sources.size(); ++i) {
                    int h = static_cast<int>(sources[i].row_views.size());
                    b.block(row, 0, h, nr) = sources[i].m;
                    c.block(row, 0, h, nr) = goals[i].m;
                    row += h;
                }
                b.row(row).setOnes();
                c.row(row).setOnes();
                Mat u = align_unitary(b, c).unitary;
                if ((b * u - c).cwiseAbs().maxCoeff() > default_tolerance) {
                    constructed = false;
                    break;
                }
            }
        } catch (const std::exception&) {
            constructed = false;
        }
        out.search_found = constructed;
    }
    out.consistent = out.square_criterion == out.search_found;
    return out;
}

}  // namespace qsa

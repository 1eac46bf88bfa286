#include "qsa/mpc_worlds.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <set>
#include <sstream>

#include "qsa/random_util.hpp"

namespace qsa {

namespace {

// Sparse pipeline state. Slot meaning per world:
//   real world:  [p, in, out, env, query, unused]
//   ideal world: [if, in, out, sim, env, query]
using Key = std::array<int, 6>;
using SparseState = std::map<Key, cx>;

constexpr double stage_tol = 1e-12;

double state_norm(const SparseState& st) {
    double n = 0;
    for (const auto& [k, a] : st) n += std::norm(a);
    return std::sqrt(n);
}

void require_stage_norm(const SparseState& st, int stage) {
    double n = state_norm(st);
    if (std::abs(n - 1.0) > stage_tol)
        throw inconsistency_error("pipeline stage " + std::to_string(stage) +
                                  ": norm drifted to " + std::to_string(n));
}

void prune(SparseState& st) {
    for (auto it = st.begin(); it != st.end();)
        it = std::abs(it->second) < 1e-300 ? st.erase(it) : std::next(it);
}

StateVector to_state_vector(const SparseState& st, const std::vector<std::string>& names) {
    if (static_cast<long long>(st.size()) > max_state_dimension())
        throw budget_error("pipeline: state support " + std::to_string(st.size()) +
                           " exceeds cap " + std::to_string(max_state_dimension()));
    int width = static_cast<int>(names.size());
    std::vector<Label> labels;
    Vec amps(st.size());
    int i = 0;
    for (const auto& [k, a] : st) {
        labels.emplace_back(k.begin(), k.begin() + width);
        amps[i++] = a;
    }
    return StateVector(
        LabeledBasis(names, std::vector<int>(names.size(), 1), std::move(labels)),
        std::move(amps));
}

bool query_slots_zero(const QueryLabel& q) {
    auto all_zero = [](const SymbolString& s) {
        return std::all_of(s.begin(), s.end(), [](int v) { return v == 0; });
    };
    return all_zero(q.in_slot) && all_zero(q.out_slot) && all_zero(q.view_slot);
}

}  // namespace

WorldContext::WorldContext(ProtocolSpec protocol, AdversaryStructure structure)
    : protocol_(std::move(protocol)), structure_(std::move(structure)) {
    protocol_.validate();
    if (structure_.n != protocol_.n())
        throw std::invalid_argument("world context: structure and protocol disagree on n");
    query_labels_.push_back(QueryLabel{});  // id 0 = blank
    query_index_[QueryLabel{}] = 0;
    out_strings_.push_back({});  // id 0 = blank output register
}

int WorldContext::output_id(int s) {
    SymbolString full = protocol_.joint_output(protocol_.core.all_parties(), s);
    // Never collides with the blank id: content key is (1, string).
    auto it = out_index_.find(full);
    if (it != out_index_.end()) return it->second;
    int id = static_cast<int>(out_strings_.size());
    out_strings_.push_back(full);
    out_index_[full] = id;
    return id;
}

int WorldContext::intern_query(const QueryLabel& q) {
    auto it = query_index_.find(q);
    if (it != query_index_.end()) return it->second;
    int id = static_cast<int>(query_labels_.size());
    query_labels_.push_back(q);
    query_index_[q] = id;
    return id;
}

const QueryLabel& WorldContext::query_label(int id) const { return query_labels_.at(id); }

double WorldContext::rand_prob(int r) const {
    return static_cast<double>(protocol_.core.rand_weights[r]) /
           static_cast<double>(protocol_.core.rand_weight_total());
}

QueryLabel WorldContext::oracle_answer(const QueryLabel& q, int s, int r) const {
    if (q.blank) return q;
    QueryLabel out = q;
    out.in_slot = add_symbols(q.in_slot, protocol_.joint_input(q.subset, s),
                              protocol_.joint_input_moduli());
    out.out_slot = add_symbols(q.out_slot, protocol_.joint_output(q.subset, s),
                               protocol_.joint_output_moduli());
    out.view_slot = add_symbols(q.view_slot, protocol_.core.joint_view(q.subset, s, r),
                                protocol_.core.joint_view_moduli());
    return out;
}

QueryLabel WorldContext::ideal_answer(const QueryLabel& q, int s) const {
    if (q.blank) return q;
    QueryLabel out = q;
    out.in_slot = add_symbols(q.in_slot, protocol_.joint_input(q.subset, s),
                              protocol_.joint_input_moduli());
    out.out_slot = add_symbols(q.out_slot, protocol_.joint_output(q.subset, s),
                               protocol_.joint_output_moduli());
    return out;
}

DensityOperator WorldContext::structured_query_density(const DensityOperator& rho_query) {
    const auto& b = rho_query.basis;
    if (b.register_names() != std::vector<std::string>{"query"})
        throw std::invalid_argument("structured_query_density: expected a query-only state");
    int n = protocol_.n();
    int wo = static_cast<int>(protocol_.joint_output_moduli().size());
    int wv = protocol_.core.joint_view_len();
    std::vector<Label> labels;
    for (int i = 0; i < b.dim(); ++i) {
        const QueryLabel& q = query_label(b.label(i)[0]);
        if (q.blank) {
            double weight = std::abs(rho_query.matrix(i, i));
            if (weight > 1e-12)
                throw std::invalid_argument(
                    "structured_query_density: blank register carries weight");
        }
        Label l{static_cast<int>(q.subset)};
        SymbolString ri = q.blank ? SymbolString(n, 0) : q.in_slot;
        SymbolString ro = q.blank ? SymbolString(wo, 0) : q.out_slot;
        SymbolString rv = q.blank ? SymbolString(wv, 0) : q.view_slot;
        l.insert(l.end(), ri.begin(), ri.end());
        l.insert(l.end(), ro.begin(), ro.end());
        l.insert(l.end(), rv.begin(), rv.end());
        labels.push_back(std::move(l));
    }
    return DensityOperator(LabeledBasis({"sub", "ri", "ro", "rv"}, {1, n, wo, wv}, labels),
                           rho_query.matrix);
}

void MpcAdversary::validate(const WorldContext& ctx, double tol) const {
    if (env_dim < 1 || static_cast<int>(env_init.size()) != env_dim)
        throw std::invalid_argument("adversary: bad environment register");
    double n = 0;
    for (cx a : env_init) n += std::norm(a);
    if (std::abs(n - 1.0) > tol)
        throw std::invalid_argument("adversary: environment state not normalized");
    if (static_cast<int>(u_input.size()) != env_dim ||
        static_cast<int>(u_query.size()) != env_dim)
        throw std::invalid_argument("adversary: column maps must cover every env label");

    const ProtocolSpec& p = ctx.protocol();
    // Isometry of the input map.
    for (int x = 0; x < env_dim; ++x)
        for (int y = x; y < env_dim; ++y) {
            std::map<std::pair<int, int>, cx> lhs;
            for (const auto& t : u_input[x]) {
                if (t.s < 0 || t.s >= p.num_inputs() || t.env_after < 0 ||
                    t.env_after >= env_dim)
                    throw std::invalid_argument("adversary: input term out of range");
                lhs[{t.s, t.env_after}] += t.amplitude;
            }
            cx dot = 0;
            for (const auto& t : u_input[y]) {
                auto it = lhs.find({t.s, t.env_after});
                if (it != lhs.end()) dot += std::conj(it->second) * t.amplitude;
            }
            double want = x == y ? 1.0 : 0.0;
            if (std::abs(dot - want) > tol)
                throw std::invalid_argument("adversary: input map is not isometric");
        }
    // Isometry of the query map, plus structure/mode constraints.
    for (int x = 0; x < env_dim; ++x) {
        for (const auto& t : u_query[x]) {
            if (t.env_after < 0 || t.env_after >= env_dim)
                throw std::invalid_argument("adversary: query term env out of range");
            if (t.query.blank) continue;
            if (!ctx.structure().contains(t.query.subset))
                throw std::invalid_argument("adversary: query subset outside structure");
            if (t.query.in_slot.size() != static_cast<size_t>(p.n()) ||
                t.query.out_slot.size() != p.joint_output_moduli().size() ||
                t.query.view_slot.size() != static_cast<size_t>(p.core.joint_view_len()))
                throw std::invalid_argument("adversary: query slot widths wrong");
            if (mode == ResponseMode::created && !query_slots_zero(t.query))
                throw std::invalid_argument("adversary: created mode requires zero responses");
        }
        for (int y = x; y < env_dim; ++y) {
            std::map<std::pair<int, QueryLabel>, cx> lhs;
            for (const auto& t : u_query[x]) lhs[{t.env_after, t.query}] += t.amplitude;
            cx dot = 0;
            for (const auto& t : u_query[y]) {
                auto it = lhs.find({t.env_after, t.query});
                if (it != lhs.end()) dot += std::conj(it->second) * t.amplitude;
            }
            double want = x == y ? 1.0 : 0.0;
            if (std::abs(dot - want) > tol)
                throw std::invalid_argument("adversary: query map is not isometric");
        }
    }
}

void SimulatorSpec::validate(double tol) const {
    auto check_map = [&](const ColumnMap& map, bool corruption_preserving) {
        std::vector<std::map<std::pair<int, QueryLabel>, cx>> images;
        for (const auto& [key, terms] : map) {
            std::map<std::pair<int, QueryLabel>, cx> img;
            for (const auto& t : terms) {
                if (corruption_preserving &&
                    (t.query.blank != key.second.blank || t.query.subset != key.second.subset))
                    throw std::invalid_argument(
                        "simulator: query rewrite is not corruption preserving");
                img[{t.sim_after, t.query}] += t.amplitude;
            }
            images.push_back(std::move(img));
        }
        for (size_t i = 0; i < images.size(); ++i)
            for (size_t j = i; j < images.size(); ++j) {
                cx dot = 0;
                for (const auto& [k, a] : images[i]) {
                    auto it = images[j].find(k);
                    if (it != images[j].end()) dot += std::conj(a) * it->second;
                }
                double want = i == j ? 1.0 : 0.0;
                if (std::abs(dot - want) > tol)
                    throw std::invalid_argument("simulator: column map is not isometric");
            }
    };
    check_map(query_rewrite, true);
    check_map(response_map, false);
}

SimulatorSpec identity_simulator() {
    SimulatorSpec s;
    s.description = "identity";
    return s;
}

namespace {

constexpr int kP = 0, kIn = 1, kOut = 2, kEnv = 3, kQ = 4;           // real world
constexpr int iIF = 0, iIn = 1, iOut = 2, iSim = 3, iEnv = 4, iQ = 5;  // ideal world

SparseState initial_state(const MpcAdversary& adv, bool /*ideal*/) {
    SparseState st;
    for (int x = 0; x < adv.env_dim; ++x)
        if (std::abs(adv.env_init[x]) > 0) {
            Key k{};
            k[kEnv] = x;  // same physical slot in both layouts before renaming
            st[k] = adv.env_init[x];
        }
    return st;
}

void apply_input_map(SparseState& st, const MpcAdversary& adv, WorldContext& ctx, int env_slot,
                     int in_slot) {
    SparseState next;
    for (const auto& [k, a] : st) {
        if (k[in_slot] != 0)
            throw inconsistency_error("pipeline: input register already written");
        for (const auto& t : adv.u_input[k[env_slot]]) {
            Key k2 = k;
            k2[in_slot] = ctx.input_id(t.s);
            k2[env_slot] = t.env_after;
            next[k2] += a * t.amplitude;
        }
    }
    prune(next);
    st = std::move(next);
}

void apply_query_map(SparseState& st, const MpcAdversary& adv, WorldContext& ctx, int env_slot,
                     int q_slot) {
    SparseState next;
    for (const auto& [k, a] : st) {
        if (k[q_slot] != 0)
            throw inconsistency_error("pipeline: query register already written");
        for (const auto& t : adv.u_query[k[env_slot]]) {
            Key k2 = k;
            k2[env_slot] = t.env_after;
            k2[q_slot] = ctx.intern_query(t.query);
            next[k2] += a * t.amplitude;
        }
    }
    prune(next);
    st = std::move(next);
}

void apply_sim_map(SparseState& st, const SimulatorSpec::ColumnMap& map, WorldContext& ctx,
                   int sim_slot, int q_slot) {
    if (map.empty()) return;  // identity
    SparseState next;
    for (const auto& [k, a] : st) {
        auto it = map.find({k[sim_slot], ctx.query_label(k[q_slot])});
        if (it == map.end()) {
            next[k] += a;
            continue;
        }
        for (const auto& t : it->second) {
            Key k2 = k;
            k2[sim_slot] = t.sim_after;
            k2[q_slot] = ctx.intern_query(t.query);
            next[k2] += a * t.amplitude;
        }
    }
    prune(next);
    st = std::move(next);
}

void check_created_mode(const SparseState& st, const WorldContext& ctx,
                        const MpcAdversary& adv, int q_slot, int stage) {
    if (adv.mode != ResponseMode::created) return;
    for (const auto& [k, a] : st) {
        const QueryLabel& q = ctx.query_label(k[q_slot]);
        if (!q.blank && !query_slots_zero(q))
            throw inconsistency_error("pipeline stage " + std::to_string(stage) +
                                      ": created-mode response touched before the oracle");
    }
}

}  // namespace

WorldRun run_real_world(WorldContext& ctx, const MpcAdversary& adv) {
    adv.validate(ctx);
    const ProtocolSpec& p = ctx.protocol();
    const std::vector<std::string> names{"p", "in", "out", "env", "query"};

    WorldRun run;
    SparseState st = initial_state(adv, false);
    require_stage_norm(st, 0);
    run.stages.push_back(to_state_vector(st, names));

    apply_input_map(st, adv, ctx, kEnv, kIn);  // stage 1
    require_stage_norm(st, 1);
    run.stages.push_back(to_state_vector(st, names));

    {  // stage 2: honest protocol run, randomness purified onto the parties
        SparseState next;
        for (const auto& [k, a] : st) {
            if (k[kIn] == 0) throw inconsistency_error("pipeline: protocol run on blank input");
            int s = k[kIn] - 1;
            for (int r = 0; r < p.num_rand(); ++r) {
                Key k2 = k;
                k2[kP] = ctx.purification_id(s, r);
                k2[kOut] = ctx.output_id(s);
                next[k2] += a * std::sqrt(ctx.rand_prob(r));
            }
        }
        st = std::move(next);
    }
    require_stage_norm(st, 2);
    run.stages.push_back(to_state_vector(st, names));

    apply_query_map(st, adv, ctx, kEnv, kQ);  // stage 3
    require_stage_norm(st, 3);
    check_created_mode(st, ctx, adv, kQ, 3);
    run.stages.push_back(to_state_vector(st, names));

    {  // stage 4: corruption oracle fills every response slot
        SparseState next;
        for (const auto& [k, a] : st) {
            int s = (k[kP] - 1) / p.num_rand();
            int r = (k[kP] - 1) % p.num_rand();
            Key k2 = k;
            k2[kQ] = ctx.intern_query(ctx.oracle_answer(ctx.query_label(k[kQ]), s, r));
            next[k2] += a;
        }
        st = std::move(next);
    }
    require_stage_norm(st, 4);
    run.stages.push_back(to_state_vector(st, names));

    run.rho_full = pure_density(run.stages.back());
    run.rho_adv = partial_trace(run.rho_full, {"in", "env", "query"});
    run.rho_adv.require_valid();
    return run;
}

WorldRun run_ideal_world(WorldContext& ctx, const MpcAdversary& adv, const SimulatorSpec& sim) {
    adv.validate(ctx);
    sim.validate();
    const ProtocolSpec& p = ctx.protocol();
    const std::vector<std::string> names{"if", "in", "out", "sim", "env", "query"};

    WorldRun run;
    SparseState st;
    for (int x = 0; x < adv.env_dim; ++x)
        if (std::abs(adv.env_init[x]) > 0) {
            Key k{};
            k[iEnv] = x;
            st[k] = adv.env_init[x];
        }
    require_stage_norm(st, 0);
    run.stages.push_back(to_state_vector(st, names));

    apply_input_map(st, adv, ctx, iEnv, iIn);  // stage 1
    require_stage_norm(st, 1);
    run.stages.push_back(to_state_vector(st, names));

    {  // stage 2: ideal functionality entangles with the input register
        SparseState next;
        for (const auto& [k, a] : st) {
            if (k[iIn] == 0)
                throw inconsistency_error("pipeline: ideal functionality on blank input");
            int s = k[iIn] - 1;
            for (int r = 0; r < p.num_rand(); ++r) {
                Key k2 = k;
                k2[iIF] = ctx.purification_id(s, r);
                k2[iOut] = ctx.output_id(s);
                next[k2] += a * std::sqrt(ctx.rand_prob(r));
            }
        }
        st = std::move(next);
    }
    require_stage_norm(st, 2);
    run.stages.push_back(to_state_vector(st, names));

    apply_query_map(st, adv, ctx, iEnv, iQ);  // stage 3
    require_stage_norm(st, 3);
    check_created_mode(st, ctx, adv, iQ, 3);
    run.stages.push_back(to_state_vector(st, names));

    apply_sim_map(st, sim.query_rewrite, ctx, iSim, iQ);  // stage 4
    require_stage_norm(st, 4);
    run.stages.push_back(to_state_vector(st, names));

    {  // stage 5: ideal functionality fills input and output slots only
        SparseState next;
        for (const auto& [k, a] : st) {
            int s = k[iIn] - 1;
            Key k2 = k;
            k2[iQ] = ctx.intern_query(ctx.ideal_answer(ctx.query_label(k[iQ]), s));
            next[k2] += a;
        }
        st = std::move(next);
    }
    require_stage_norm(st, 5);
    run.stages.push_back(to_state_vector(st, names));

    apply_sim_map(st, sim.response_map, ctx, iSim, iQ);  // stage 6
    require_stage_norm(st, 6);
    run.stages.push_back(to_state_vector(st, names));

    run.rho_full = pure_density(run.stages.back());
    run.rho_adv = partial_trace(run.rho_full, {"in", "env", "query"});
    run.rho_adv.require_valid();
    return run;
}

namespace {

QueryLabel zero_query(const ProtocolSpec& p, Subset a) {
    return QueryLabel::make(a, SymbolString(p.n(), 0),
                            SymbolString(p.joint_output_moduli().size(), 0),
                            SymbolString(p.core.joint_view_len(), 0));
}

}  // namespace

AdversaryBattery make_battery(const ProtocolSpec& protocol, const AdversaryStructure& f,
                              ResponseMode mode, std::uint64_t seed, int num_random) {
    if (f.sets.empty()) throw std::invalid_argument("battery: empty structure");
    AdversaryBattery battery;
    battery.seed = seed;
    int ns = protocol.num_inputs();

    for (int s = 0; s < ns; ++s)
        for (Subset a : f.sets) {
            MpcAdversary adv;
            adv.mode = mode;
            adv.env_dim = 1;
            adv.env_init = {1.0};
            adv.u_input = {{{s, 0, 1.0}}};
            adv.u_query = {{{0, zero_query(protocol, a), 1.0}}};
            adv.description = "basis s=" + std::to_string(s) + " A=" +
                              subset_to_string(a, protocol.n(), protocol.core.party_index_base);
            battery.members.push_back(std::move(adv));
        }

    for (int s = 0; s < ns; ++s) {
        MpcAdversary adv;
        adv.mode = mode;
        adv.env_dim = 1;
        adv.env_init = {1.0};
        adv.u_input = {{{s, 0, 1.0}}};
        adv.u_query.resize(1);
        double amp = 1.0 / std::sqrt(static_cast<double>(f.sets.size()));
        for (Subset a : f.sets) adv.u_query[0].push_back({0, zero_query(protocol, a), amp});
        adv.description = "uniform query s=" + std::to_string(s);
        battery.members.push_back(std::move(adv));
    }

    std::mt19937_64 rng(seed);
    int nf = static_cast<int>(f.sets.size());
    for (int i = 0; i < num_random; ++i) {
        MpcAdversary adv;
        adv.mode = mode;
        adv.env_dim = ns;
        Vec env = random_unit_vector(ns, rng);
        adv.env_init.assign(env.data(), env.data() + ns);
        adv.u_input.resize(ns);
        adv.u_query.resize(ns);
        for (int x = 0; x < ns; ++x) {
            Vec cs = random_unit_vector(ns, rng);
            for (int s = 0; s < ns; ++s) adv.u_input[x].push_back({s, x, cs[s]});
            Vec ds = random_unit_vector(nf, rng);
            for (int j = 0; j < nf; ++j)
                adv.u_query[x].push_back({x, zero_query(protocol, f.sets[j]), ds[j]});
        }
        adv.description = "random " + std::to_string(i);
        battery.members.push_back(std::move(adv));
    }
    return battery;
}

SimulatorVerdict is_perfect_simulator(const ProtocolSpec& protocol,
                                      const AdversaryStructure& f, const SimulatorSpec& sim,
                                      const AdversaryBattery& battery, double tol) {
    if (battery.members.empty()) throw std::invalid_argument("is_perfect_simulator: empty battery");
    sim.validate();
    WorldContext ctx(protocol, f);
    SimulatorVerdict verdict;
    for (int i = 0; i < static_cast<int>(battery.members.size()); ++i) {
        const MpcAdversary& adv = battery.members[i];
        WorldRun rw = run_real_world(ctx, adv);
        WorldRun iw = run_ideal_world(ctx, adv, sim);
        double tn = trace_norm_difference(rw.rho_adv, iw.rho_adv);
        if (tn > verdict.max_trace_norm) {
            verdict.max_trace_norm = tn;
            verdict.worst_member = i;
        }
    }
    verdict.max_distance = verdict.max_trace_norm / 2;
    verdict.perfect = verdict.max_distance <= tol;
    return verdict;
}

namespace {

double state_difference_norm(const StateVector& a, const StateVector& b) {
    std::map<Label, cx> diff;
    for (int i = 0; i < a.basis.dim(); ++i) diff[a.basis.label(i)] += a.amplitudes[i];
    for (int i = 0; i < b.basis.dim(); ++i) diff[b.basis.label(i)] -= b.amplitudes[i];
    double n = 0;
    for (const auto& [l, v] : diff) n += std::norm(v);
    return std::sqrt(n);
}

}  // namespace

DealerNoGoReport run_dealer_no_go_demo(const ProtocolSpec& dealer, std::uint64_t seed) {
    Subset watched = 0b11;  // the dealer and one recipient
    AdversaryStructure f = AdversaryStructure::of(dealer.n(), {watched});
    WorldContext ctx(dealer, f);

    // Input response slot in full superposition; outputs and views untouched.
    std::vector<SymbolString> in_strings = enumerate_strings(dealer.joint_input_moduli());
    double amp = 1.0 / std::sqrt(static_cast<double>(in_strings.size()));
    auto make_adv = [&](int s) {
        MpcAdversary adv;
        adv.mode = ResponseMode::supplied;
        adv.env_dim = 1;
        adv.env_init = {1.0};
        adv.u_input = {{{s, 0, 1.0}}};
        adv.u_query.resize(1);
        for (const auto& ai : in_strings)
            adv.u_query[0].push_back(
                {0, QueryLabel::make(watched, ai, SymbolString(dealer.joint_output_moduli().size(), 0),
                                     SymbolString(dealer.core.joint_view_len(), 0)),
                 amp});
        adv.description = "dealer demo s=" + std::to_string(s);
        return adv;
    };

    DealerNoGoReport report;
    MpcAdversary adv0 = make_adv(0), adv1 = make_adv(1);

    // (i) Real world: the view slot pins the dealt value, so the query
    // registers for the two inputs are orthogonal.
    WorldRun rw0 = run_real_world(ctx, adv0);
    WorldRun rw1 = run_real_world(ctx, adv1);
    report.real_world_distance =
        trace_norm_difference(partial_trace(rw0.rho_adv, {"query"}),
                              partial_trace(rw1.rho_adv, {"query"}));

    // (ii) Ideal world before response synthesis: the superposed input slot
    // absorbs the only value the ideal functionality wrote.
    WorldRun iw0 = run_ideal_world(ctx, adv0, identity_simulator());
    WorldRun iw1 = run_ideal_world(ctx, adv1, identity_simulator());
    auto sim_view = [](const WorldRun& run) {
        return partial_trace(pure_density(run.stages[5]), {"sim", "query"});
    };
    report.simulator_input_distance = trace_norm_difference(sim_view(iw0), sim_view(iw1));

    // (iii) A non-identity query rewrite buys nothing: the attacker that
    // applies its inverse first hands the oracle the same state.
    std::mt19937_64 rng(seed);
    std::vector<QueryLabel> block;
    for (const auto& ai : in_strings)
        block.push_back(QueryLabel::make(watched, ai,
                                         SymbolString(dealer.joint_output_moduli().size(), 0),
                                         SymbolString(dealer.core.joint_view_len(), 0)));
    Mat v = random_unitary(static_cast<int>(block.size()), rng);
    SimulatorSpec rewrite_sim;
    rewrite_sim.description = "random corruption-preserving rewrite";
    for (size_t i = 0; i < block.size(); ++i) {
        std::vector<SimulatorSpec::Image> img;
        for (size_t j = 0; j < block.size(); ++j)
            if (std::abs(v(j, i)) > 0) img.push_back({0, block[j], v(j, i)});
        rewrite_sim.query_rewrite[{0, block[i]}] = std::move(img);
    }
    // Modified attacker: first build the query, then undo the rewrite.
    MpcAdversary undo = adv0;
    {
        std::vector<MpcAdversary::QueryTerm> composed;
        std::map<QueryLabel, int> pos;
        for (size_t i = 0; i < block.size(); ++i) pos[block[i]] = static_cast<int>(i);
        std::map<std::pair<int, QueryLabel>, cx> acc;
        for (const auto& t : adv0.u_query[0]) {
            int i = pos.at(t.query);
            for (size_t j = 0; j < block.size(); ++j) {
                cx c = std::conj(v(static_cast<int>(i), static_cast<int>(j)));
                if (std::abs(c) > 0) acc[{t.env_after, block[j]}] += t.amplitude * c;
            }
        }
        for (const auto& [k, a] : acc) composed.push_back({k.first, k.second, a});
        undo.u_query[0] = std::move(composed);
        undo.description = "dealer demo s=0 with rewrite undone";
    }
    WorldRun with_rewrite = run_ideal_world(ctx, undo, rewrite_sim);
    WorldRun without = run_ideal_world(ctx, adv0, identity_simulator());
    report.substitution_residual =
        state_difference_norm(with_rewrite.stages[4], without.stages[4]);
    return report;
}

const std::vector<SymbolString>& ClassicalSimulator::responses(
    Subset a, const SymbolString& in_slot, const SymbolString& out_slot) const {
    auto it = table.find({a, in_slot, out_slot});
    if (it == table.end())
        throw std::invalid_argument("classical simulator: table not total on its domain");
    return it->second;
}

void ClassicalSimulator::validate(const ProtocolSpec& protocol) const {
    if (num_c < 1 || static_cast<int>(c_weights.size()) != num_c)
        throw std::invalid_argument("classical simulator: bad randomness table");
    for (long long w : c_weights)
        if (w <= 0) throw std::invalid_argument("classical simulator: weights must be positive");
    for (const auto& [key, per_c] : table) {
        if (static_cast<int>(per_c.size()) != num_c)
            throw std::invalid_argument("classical simulator: table not total over c");
        for (const auto& resp : per_c) {
            if (static_cast<int>(resp.size()) != protocol.core.joint_view_len())
                throw std::invalid_argument("classical simulator: response length differs from "
                                            "the padded view length");
            for (int sym : resp)
                if (sym < 0 || sym >= protocol.core.view_mod)
                    throw std::invalid_argument("classical simulator: symbol outside alphabet");
        }
    }
}

std::vector<DensityOperator> superposed_classical_simulator_states(
    const ProtocolSpec& protocol, const ClassicalSimulator& sim,
    const std::vector<std::pair<Subset, cx>>& query_amplitudes) {
    sim.validate(protocol);
    int n = protocol.n();
    int wo = static_cast<int>(protocol.joint_output_moduli().size());
    int wv = protocol.core.joint_view_len();

    auto make_label = [&](Subset a, const SymbolString& ri, const SymbolString& ro,
                          const SymbolString& rv) {
        Label l{static_cast<int>(a)};
        l.insert(l.end(), ri.begin(), ri.end());
        l.insert(l.end(), ro.begin(), ro.end());
        l.insert(l.end(), rv.begin(), rv.end());
        return l;
    };

    // Shared basis across every input.
    std::vector<Label> labels;
    std::map<Label, int> index;
    auto intern = [&](Label l) {
        auto [it, fresh] = index.emplace(std::move(l), static_cast<int>(labels.size()));
        if (fresh) labels.push_back(it->first);
        return it->second;
    };
    for (int s = 0; s < protocol.num_inputs(); ++s)
        for (const auto& [a, amp] : query_amplitudes)
            for (int c = 0; c < sim.num_c; ++c) {
                SymbolString ri = protocol.joint_input(a, s);
                SymbolString ro = protocol.joint_output(a, s);
                intern(make_label(a, ri, ro, sim.responses(a, ri, ro)[c]));
            }
    LabeledBasis basis({"sub", "ri", "ro", "rv"}, {1, n, wo, wv}, labels);

    long long c_total = 0;
    for (long long w : sim.c_weights) c_total += w;

    std::vector<DensityOperator> out;
    for (int s = 0; s < protocol.num_inputs(); ++s) {
        std::vector<std::pair<double, Vec>> mixture;
        for (int c = 0; c < sim.num_c; ++c) {
            Vec phi = Vec::Zero(basis.dim());
            for (const auto& [a, amp] : query_amplitudes) {
                SymbolString ri = protocol.joint_input(a, s);
                SymbolString ro = protocol.joint_output(a, s);
                phi[basis.require(make_label(a, ri, ro, sim.responses(a, ri, ro)[c]))] += amp;
            }
            mixture.emplace_back(static_cast<double>(sim.c_weights[c]) / c_total, phi);
        }
        DensityOperator rho = mix(basis, mixture);
        rho.require_valid();
        out.push_back(std::move(rho));
    }
    return out;
}

DensityOperator real_query_register_state(const ProtocolSpec& protocol,
                                          const AdversaryStructure& f,
                                          const std::vector<std::pair<Subset, cx>>& query_amplitudes,
                                          int s) {
    WorldContext ctx(protocol, f);
    MpcAdversary adv;
    adv.mode = ResponseMode::created;
    adv.env_dim = 1;
    adv.env_init = {1.0};
    adv.u_input = {{{s, 0, 1.0}}};
    adv.u_query.resize(1);
    for (const auto& [a, amp] : query_amplitudes)
        adv.u_query[0].push_back({0, zero_query(protocol, a), amp});
    WorldRun rw = run_real_world(ctx, adv);
    return ctx.structured_query_density(partial_trace(rw.rho_adv, {"query"}));
}

namespace {

Mat embed_density(const DensityOperator& rho, const LabeledBasis& target) {
    Mat out = Mat::Zero(target.dim(), target.dim());
    std::vector<int> pos(rho.basis.dim());
    for (int i = 0; i < rho.basis.dim(); ++i) pos[i] = target.require(rho.basis.label(i));
    for (int i = 0; i < rho.basis.dim(); ++i)
        for (int j = 0; j < rho.basis.dim(); ++j) out(pos[i], pos[j]) += rho.matrix(i, j);
    return out;
}

}  // namespace

ClassicalSimSearchResult search_classical_simulators(
    const ProtocolSpec& protocol, const AdversaryStructure& f, int num_c, long long budget,
    std::optional<std::vector<std::pair<Subset, cx>>> query) {
    std::vector<std::pair<Subset, cx>> q;
    if (query) {
        q = *query;
    } else {
        double amp = 1.0 / std::sqrt(static_cast<double>(f.sets.size()));
        for (Subset a : f.sets) q.emplace_back(a, amp);
    }

    // Domain points: one per (subset, input/output class).
    struct Point {
        Subset a;
        SymbolString ri, ro;
        int party_count;
    };
    std::vector<Point> points;
    std::set<std::tuple<Subset, SymbolString, SymbolString>> seen;
    for (Subset a : f.sets)
        for (int s = 0; s < protocol.num_inputs(); ++s) {
            SymbolString ri = protocol.joint_input(a, s);
            SymbolString ro = protocol.joint_output(a, s);
            if (seen.emplace(a, ri, ro).second)
                points.push_back({a, ri, ro, std::popcount(a)});
        }

    // Candidate values per point: the unpadded view strings of its parties.
    std::vector<std::vector<SymbolString>> values(points.size());
    long long space = 1;
    for (size_t i = 0; i < points.size(); ++i) {
        std::vector<int> moduli(static_cast<size_t>(points[i].party_count) *
                                    protocol.core.view_len,
                                protocol.core.view_mod);
        values[i] = enumerate_strings(moduli);
        for (int c = 0; c < num_c; ++c) {
            space *= static_cast<long long>(values[i].size());
            if (space > budget)
                throw budget_error("classical simulator search: space exceeds budget " +
                                   std::to_string(budget));
        }
    }

    int wv = protocol.core.joint_view_len();
    auto pad = [&](const SymbolString& v) {
        SymbolString out = v;
        out.resize(wv, 0);
        return out;
    };

    // Reference states and a shared basis covering every candidate response.
    std::vector<DensityOperator> real_states;
    for (int s = 0; s < protocol.num_inputs(); ++s)
        real_states.push_back(real_query_register_state(protocol, f, q, s));
    std::vector<Label> labels;
    std::map<Label, int> index;
    auto intern = [&](Label l) {
        auto [it, fresh] = index.emplace(std::move(l), static_cast<int>(labels.size()));
        if (fresh) labels.push_back(it->first);
    };
    for (size_t i = 0; i < points.size(); ++i)
        for (const auto& v : values[i]) {
            Label l{static_cast<int>(points[i].a)};
            l.insert(l.end(), points[i].ri.begin(), points[i].ri.end());
            l.insert(l.end(), points[i].ro.begin(), points[i].ro.end());
            SymbolString padded = pad(v);
            l.insert(l.end(), padded.begin(), padded.end());
            intern(std::move(l));
        }
    for (const auto& rho : real_states)
        for (const auto& l : rho.basis.labels()) intern(l);
    LabeledBasis basis({"sub", "ri", "ro", "rv"},
                       {1, protocol.n(),
                        static_cast<int>(protocol.joint_output_moduli().size()), wv},
                       labels);
    std::vector<Mat> real_dense;
    for (const auto& rho : real_states) real_dense.push_back(embed_density(rho, basis));

    // Pre-resolved basis position for every (point, candidate value, input).
    std::vector<std::vector<int>> value_pos(points.size());
    for (size_t i = 0; i < points.size(); ++i) {
        value_pos[i].reserve(values[i].size());
        for (const auto& v : values[i]) {
            Label l{static_cast<int>(points[i].a)};
            l.insert(l.end(), points[i].ri.begin(), points[i].ri.end());
            l.insert(l.end(), points[i].ro.begin(), points[i].ro.end());
            SymbolString padded = pad(v);
            l.insert(l.end(), padded.begin(), padded.end());
            value_pos[i].push_back(basis.require(l));
        }
    }
    // Which point answers (subset, input)?
    std::vector<std::vector<int>> point_of(protocol.num_inputs(),
                                           std::vector<int>(q.size(), -1));
    for (int s = 0; s < protocol.num_inputs(); ++s)
        for (size_t j = 0; j < q.size(); ++j) {
            SymbolString ri = protocol.joint_input(q[j].first, s);
            SymbolString ro = protocol.joint_output(q[j].first, s);
            for (size_t i = 0; i < points.size(); ++i)
                if (points[i].a == q[j].first && points[i].ri == ri && points[i].ro == ro)
                    point_of[s][j] = static_cast<int>(i);
        }

    int slots = static_cast<int>(points.size()) * num_c;  // odometer over (point, c)
    std::vector<int> choice(slots, 0);
    ClassicalSimSearchResult result;
    result.min_max_trace_norm = std::numeric_limits<double>::infinity();
    double pc = 1.0 / num_c;

    // The candidate state has at most |q| amplitudes per purity component, so
    // the Frobenius gap against the reference is a sparse update on top of
    // the precomputed reference norm.
    std::vector<double> real_frob_sq(real_dense.size());
    for (size_t s = 0; s < real_dense.size(); ++s)
        real_frob_sq[s] = real_dense[s].squaredNorm();
    std::vector<int> positions(q.size());
    std::map<std::pair<int, int>, cx> sparse;

    auto frobenius_gap = [&](int s) {
        sparse.clear();
        for (int c = 0; c < num_c; ++c) {
            for (size_t j = 0; j < q.size(); ++j) {
                int pt = point_of[s][j];
                positions[j] = value_pos[pt][choice[pt * num_c + c]];
            }
            for (size_t j1 = 0; j1 < q.size(); ++j1)
                for (size_t j2 = 0; j2 < q.size(); ++j2)
                    sparse[{positions[j1], positions[j2]}] +=
                        pc * q[j1].second * std::conj(q[j2].second);
        }
        double gap_sq = real_frob_sq[s];
        for (const auto& [at, v] : sparse) {
            cx r = real_dense[s](at.first, at.second);
            gap_sq += std::norm(v - r) - std::norm(r);
        }
        return std::sqrt(std::max(0.0, gap_sq));
    };

    // The difference has rank at most (reference rank + num_c), so its trace
    // norm equals that of its compression onto the joint column space: an
    // orthonormal range basis of the reference, extended by the candidate
    // state's few purity components.
    std::vector<Mat> range_basis(real_dense.size());   // dim x r, orthonormal
    std::vector<Mat> compressed_ref(real_dense.size());  // r x r
    for (size_t s = 0; s < real_dense.size(); ++s) {
        Eigen::SelfAdjointEigenSolver<Mat> es(real_dense[s]);
        std::vector<int> keep;
        for (int i = 0; i < es.eigenvalues().size(); ++i)
            if (std::abs(es.eigenvalues()[i]) > 1e-13) keep.push_back(i);
        Mat b(basis.dim(), keep.size());
        for (size_t k = 0; k < keep.size(); ++k) b.col(k) = es.eigenvectors().col(keep[k]);
        range_basis[s] = b;
        compressed_ref[s] = b.adjoint() * real_dense[s] * b;
    }

    auto exact_gap = [&](int s) {
        const Mat& b = range_basis[s];
        int r = static_cast<int>(b.cols());
        // Sparse candidate components and their coordinates against b.
        std::vector<std::vector<std::pair<int, cx>>> phis(num_c);
        Mat coords = Mat::Zero(r, num_c);
        Mat overlap = Mat::Zero(num_c, num_c);  // raw <phi_c | phi_c'>
        for (int c = 0; c < num_c; ++c) {
            std::map<int, cx> phi;
            for (size_t j = 0; j < q.size(); ++j) {
                int pt = point_of[s][j];
                phi[value_pos[pt][choice[pt * num_c + c]]] += q[j].second;
            }
            phis[c].assign(phi.begin(), phi.end());
            for (int k = 0; k < r; ++k) {
                cx dot = 0;
                for (const auto& [at, v] : phis[c]) dot += std::conj(b(at, k)) * v;
                coords(k, c) = dot;
            }
        }
        for (int c = 0; c < num_c; ++c)
            for (int c2 = 0; c2 < num_c; ++c2) {
                cx dot = 0;
                size_t i = 0, j = 0;
                while (i < phis[c].size() && j < phis[c2].size()) {
                    if (phis[c][i].first < phis[c2][j].first)
                        ++i;
                    else if (phis[c][i].first > phis[c2][j].first)
                        ++j;
                    else
                        dot += std::conj(phis[c][i++].second) * phis[c2][j++].second;
                }
                overlap(c, c2) = dot;
            }
        // Gram of the residuals orthogonal to the reference range.
        Mat res_gram = overlap - coords.adjoint() * coords;
        Eigen::SelfAdjointEigenSolver<Mat> rg(0.5 * (res_gram + res_gram.adjoint()));
        std::vector<int> extra;
        for (int i = 0; i < num_c; ++i)
            if (rg.eigenvalues()[i] > 1e-13) extra.push_back(i);
        int k = static_cast<int>(extra.size());
        // Coordinates of each phi in the extended orthonormal frame.
        Mat full_coords = Mat::Zero(r + k, num_c);
        full_coords.topRows(r) = coords;
        for (int e = 0; e < k; ++e) {
            double scale = 1.0 / std::sqrt(rg.eigenvalues()[extra[e]]);
            for (int c = 0; c < num_c; ++c) {
                // <res_frame_e | phi_c> = scale * (V^+ res_gram)_{e,c}
                cx dot = 0;
                for (int c2 = 0; c2 < num_c; ++c2)
                    dot += std::conj(rg.eigenvectors()(c2, extra[e])) * res_gram(c2, c);
                full_coords(r + e, c) = scale * dot;
            }
        }
        Mat delta = Mat::Zero(r + k, r + k);
        delta.topLeftCorner(r, r) = -compressed_ref[s];
        for (int c = 0; c < num_c; ++c)
            delta += pc * (full_coords.col(c) * full_coords.col(c).adjoint());
        Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (delta + delta.adjoint()),
                                              Eigen::EigenvaluesOnly);
        return es.eigenvalues().cwiseAbs().sum();
    };

    auto eval = [&](bool& improved) {
        // Lower bound first: Frobenius norm never exceeds the trace norm.
        double worst_bound = 0;
        for (int s = 0; s < protocol.num_inputs(); ++s)
            worst_bound = std::max(worst_bound, frobenius_gap(s));
        if (worst_bound >= result.min_max_trace_norm) {
            improved = false;
            return worst_bound;
        }
        double worst = 0;
        for (int s = 0; s < protocol.num_inputs(); ++s)
            worst = std::max(worst, exact_gap(s));
        improved = worst < result.min_max_trace_norm;
        return worst;
    };

    while (true) {
        ++result.candidates;
        bool improved = false;
        double worst = eval(improved);
        if (improved) {
            result.min_max_trace_norm = worst;
            ClassicalSimulator best;
            best.num_c = num_c;
            best.c_weights.assign(num_c, 1);
            for (size_t i = 0; i < points.size(); ++i) {
                std::vector<SymbolString> per_c;
                for (int c = 0; c < num_c; ++c)
                    per_c.push_back(pad(values[i][choice[i * num_c + c]]));
                best.table[{points[i].a, points[i].ri, points[i].ro}] = std::move(per_c);
            }
            result.best = std::move(best);
        }
        int pos = slots - 1;
        while (pos >= 0) {
            int pt = pos / num_c;
            if (++choice[pos] < static_cast<int>(values[pt].size())) break;
            choice[pos] = 0;
            --pos;
        }
        if (pos < 0) break;
    }
    return result;
}

}  // namespace qsa

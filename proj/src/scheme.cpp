#include "qsa/scheme.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <map>
#include <numeric>
#include <sstream>

namespace qsa {

std::string subset_to_string(Subset a, int n, int index_base) {
    std::ostringstream os;
    os << "{";
    bool first = true;
    for (int i = 0; i < n; ++i)
        if (a & (Subset(1) << i)) {
            if (!first) os << ",";
            os << (i + index_base);
            first = false;
        }
    os << "}";
    return os.str();
}

long long SharingScheme::rand_weight_total() const {
    return std::accumulate(rand_weights.begin(), rand_weights.end(), 0LL);
}

const SymbolString& SharingScheme::view(int party, int s, int r) const {
    return views[(static_cast<size_t>(party) * num_secrets() + s) * num_rand() + r];
}

SymbolString SharingScheme::joint_view(Subset a, int s, int r) const {
    SymbolString out;
    out.reserve(joint_view_len());
    for (int i = 0; i < n; ++i)
        if (a & (Subset(1) << i)) {
            const SymbolString& v = view(i, s, r);
            out.insert(out.end(), v.begin(), v.end());
        }
    out.resize(joint_view_len(), 0);
    return out;
}

std::vector<int> SharingScheme::joint_view_moduli() const {
    return std::vector<int>(joint_view_len(), view_mod);
}

void SharingScheme::validate() const {
    if (n < 1) throw std::invalid_argument(name + ": needs at least one party");
    if (view_mod < 2) throw std::invalid_argument(name + ": view modulus must be >= 2");
    if (view_len < 0) throw std::invalid_argument(name + ": negative view length");
    if (secret_values.empty()) throw std::invalid_argument(name + ": empty secret alphabet");
    if (rand_values.empty()) throw std::invalid_argument(name + ": empty randomness alphabet");
    if (secret_weights.size() != secret_values.size() ||
        rand_weights.size() != rand_values.size())
        throw std::invalid_argument(name + ": weight table size mismatch");
    for (long long w : rand_weights)
        if (w <= 0) throw std::invalid_argument(name + ": randomness weights must be positive");
    for (long long w : secret_weights)
        if (w <= 0) throw std::invalid_argument(name + ": secret weights must be positive");
    if (views.size() !=
        static_cast<size_t>(n) * num_secrets() * num_rand())
        throw std::invalid_argument(name + ": view table is not exhaustive");
    for (const auto& v : views) {
        if (static_cast<int>(v.size()) != view_len)
            throw std::invalid_argument(name + ": view string has wrong length");
        for (int sym : v)
            if (sym < 0 || sym >= view_mod)
                throw std::invalid_argument(name + ": view symbol outside alphabet");
    }
}

SymbolString ProtocolSpec::joint_input(Subset a, int s) const {
    SymbolString out;
    out.reserve(n());
    for (int i = 0; i < n(); ++i)
        if (a & (Subset(1) << i)) out.push_back(party_inputs[i][s]);
    out.resize(n(), no_input);
    return out;
}

std::vector<int> ProtocolSpec::joint_input_moduli() const {
    return std::vector<int>(n(), input_mod);
}

const SymbolString& ProtocolSpec::output(int party, int s) const {
    return outputs[static_cast<size_t>(party) * num_inputs() + s];
}

SymbolString ProtocolSpec::joint_output(Subset a, int s) const {
    SymbolString out;
    out.reserve(static_cast<size_t>(n()) * out_len);
    for (int i = 0; i < n(); ++i)
        if (a & (Subset(1) << i)) {
            const SymbolString& o = output(i, s);
            out.insert(out.end(), o.begin(), o.end());
        }
    out.resize(static_cast<size_t>(n()) * out_len, 0);
    return out;
}

std::vector<int> ProtocolSpec::joint_output_moduli() const {
    return std::vector<int>(static_cast<size_t>(n()) * out_len, out_mod);
}

void ProtocolSpec::validate() const {
    core.validate();
    if (input_mod < 1) throw std::invalid_argument(core.name + ": bad input modulus");
    if (no_input < 0 || no_input >= input_mod)
        throw std::invalid_argument(core.name + ": reserved no-input symbol out of range");
    if (party_inputs.size() != static_cast<size_t>(n()))
        throw std::invalid_argument(core.name + ": input table is not exhaustive");
    for (const auto& per_party : party_inputs) {
        if (per_party.size() != static_cast<size_t>(num_inputs()))
            throw std::invalid_argument(core.name + ": input table is not exhaustive");
        for (int sym : per_party)
            if (sym < 0 || sym >= input_mod)
                throw std::invalid_argument(core.name + ": input symbol outside alphabet");
    }
    if (out_len < 0) throw std::invalid_argument(core.name + ": negative output length");
    if (outputs.size() != static_cast<size_t>(n()) * num_inputs())
        throw std::invalid_argument(core.name + ": output table is not exhaustive");
    for (const auto& o : outputs) {
        if (static_cast<int>(o.size()) != out_len)
            throw std::invalid_argument(core.name + ": output string has wrong length");
        for (int sym : o)
            if (sym < 0 || sym >= out_mod)
                throw std::invalid_argument(core.name + ": output symbol outside alphabet");
    }
}

AdversaryStructure AdversaryStructure::of(int n, std::vector<Subset> sets) {
    std::sort(sets.begin(), sets.end());
    sets.erase(std::unique(sets.begin(), sets.end()), sets.end());
    for (Subset a : sets)
        if (a >= (Subset(1) << n))
            throw std::invalid_argument("adversary structure: subset outside party range");
    return AdversaryStructure{n, std::move(sets)};
}

AdversaryStructure AdversaryStructure::singletons(int n) {
    std::vector<Subset> sets;
    for (int i = 0; i < n; ++i) sets.push_back(Subset(1) << i);
    return of(n, std::move(sets));
}

AdversaryStructure AdversaryStructure::up_to_size(int n, int k) {
    std::vector<Subset> sets;
    for (Subset a = 0; a < (Subset(1) << n); ++a)
        if (std::popcount(a) <= k) sets.push_back(a);
    return of(n, std::move(sets));
}

bool AdversaryStructure::contains(Subset a) const {
    return std::binary_search(sets.begin(), sets.end(), a);
}

bool AdversaryStructure::subset_of(const AdversaryStructure& other) const {
    return std::all_of(sets.begin(), sets.end(),
                       [&](Subset a) { return other.contains(a); });
}

std::string AdversaryStructure::to_string(int index_base) const {
    std::ostringstream os;
    for (size_t i = 0; i < sets.size(); ++i)
        os << (i ? " " : "") << subset_to_string(sets[i], n, index_base);
    return os.str();
}

// --- builtins ----------------------------------------------------------------

SharingScheme builtin_xor2() {
    SharingScheme s;
    s.name = "xor2";
    s.n = 2;
    s.party_index_base = 1;
    s.view_mod = 2;
    s.view_len = 1;
    s.secret_values = {0, 1};
    s.secret_weights = {1, 1};
    s.rand_values = {0, 1};
    s.rand_weights = {1, 1};
    s.views.resize(2 * 2 * 2);
    for (int b = 0; b < 2; ++b)
        for (int r = 0; r < 2; ++r) {
            s.views[(0 * 2 + b) * 2 + r] = {b ^ r};  // share 1: b xor r
            s.views[(1 * 2 + b) * 2 + r] = {r};      // share 2: r
        }
    s.validate();
    return s;
}

namespace {

bool is_prime(int p) {
    if (p < 2) return false;
    for (int d = 2; d * d <= p; ++d)
        if (p % d == 0) return false;
    return true;
}

}  // namespace

SharingScheme builtin_shamir(int n, int t, int p) {
    if (!is_prime(p)) throw std::invalid_argument("shamir: p must be prime");
    if (n < 2) throw std::invalid_argument("shamir: need at least two parties");
    if (t < 1 || t >= n) throw std::invalid_argument("shamir: need 1 <= t < n");
    if (p < n) throw std::invalid_argument("shamir: evaluation points collide, need p >= n");
    long long num_rand = 1;
    for (int i = 0; i < t; ++i) {
        num_rand *= p;
        if (num_rand > 100000) throw budget_error("shamir: coefficient space too large");
    }

    SharingScheme s;
    s.name = "shamir:" + std::to_string(n) + "," + std::to_string(t) + "," + std::to_string(p);
    s.n = n;
    s.party_index_base = 1;
    s.view_mod = p;
    s.view_len = 1;
    for (int v = 0; v < p; ++v) {
        s.secret_values.push_back(v);
        s.secret_weights.push_back(1);
    }
    for (long long r = 0; r < num_rand; ++r) {
        s.rand_values.push_back(r);
        s.rand_weights.push_back(1);
    }
    s.views.resize(static_cast<size_t>(n) * p * num_rand);
    for (int secret = 0; secret < p; ++secret)
        for (long long r = 0; r < num_rand; ++r) {
            // r encodes coefficients a_1..a_t in base p, least degree first.
            std::vector<int> coeff(t);
            long long rest = r;
            for (int i = 0; i < t; ++i) {
                coeff[i] = static_cast<int>(rest % p);
                rest /= p;
            }
            for (int party = 0; party < n; ++party) {
                int x = (party + 1) % p;
                int acc = secret % p;
                int xpow = 1;
                for (int i = 0; i < t; ++i) {
                    xpow = (xpow * x) % p;
                    acc = (acc + coeff[i] * xpow) % p;
                }
                s.views[(static_cast<size_t>(party) * p + secret) * num_rand + r] = {acc};
            }
        }
    s.validate();
    return s;
}

ProtocolSpec builtin_additive4() {
    ProtocolSpec pr;
    SharingScheme& s = pr.core;
    s.name = "additive4";
    s.n = 4;
    s.party_index_base = 0;
    s.view_mod = 2;
    s.view_len = 2;
    s.secret_values = {0, 1};
    s.secret_weights = {1, 1};
    // Randomness (r1, r2) encoded as 2*r1 + r2.
    s.rand_values = {0, 1, 2, 3};
    s.rand_weights = {1, 1, 1, 1};
    s.views.resize(4 * 2 * 4);
    for (int secret = 0; secret < 2; ++secret)
        for (int r = 0; r < 4; ++r) {
            int r1 = r >> 1, r2 = r & 1;
            s.views[(0 * 2 + secret) * 4 + r] = {r1, r2};
            s.views[(1 * 2 + secret) * 4 + r] = {r1, 0};
            s.views[(2 * 2 + secret) * 4 + r] = {r2, 0};
            s.views[(3 * 2 + secret) * 4 + r] = {r1 ^ r2 ^ secret, 0};
        }
    pr.input_mod = 3;  // values 0, 1 plus the no-input symbol
    pr.no_input = 2;
    pr.party_inputs = {{0, 1}, {2, 2}, {2, 2}, {2, 2}};
    pr.out_len = 0;
    pr.out_mod = 2;
    pr.outputs.assign(4 * 2, {});
    pr.validate();
    return pr;
}

ProtocolSpec builtin_dealer(int n, int secret_count) {
    if (n < 2) throw std::invalid_argument("dealer: need at least two parties");
    if (secret_count < 2) throw std::invalid_argument("dealer: need at least two secrets");
    long long num_rand = 1;
    for (int i = 1; i < n; ++i) {
        num_rand *= secret_count;
        if (num_rand > 100000) throw budget_error("dealer: pad space too large");
    }

    ProtocolSpec pr;
    SharingScheme& s = pr.core;
    s.name = "dealer:" + std::to_string(n) + "," + std::to_string(secret_count);
    s.n = n;
    s.party_index_base = 1;
    s.view_mod = secret_count;
    s.view_len = n - 1;
    for (int v = 0; v < secret_count; ++v) {
        s.secret_values.push_back(v);
        s.secret_weights.push_back(1);
    }
    for (long long r = 0; r < num_rand; ++r) {
        s.rand_values.push_back(r);
        s.rand_weights.push_back(1);
    }
    s.views.resize(static_cast<size_t>(n) * secret_count * num_rand);
    for (int secret = 0; secret < secret_count; ++secret)
        for (long long r = 0; r < num_rand; ++r) {
            // r encodes the pads for parties 2..n in base secret_count.
            std::vector<int> pad(n - 1);
            long long rest = r;
            for (int i = 0; i < n - 1; ++i) {
                pad[i] = static_cast<int>(rest % secret_count);
                rest /= secret_count;
            }
            s.views[(0 * static_cast<size_t>(secret_count) + secret) * num_rand + r] = pad;
            for (int party = 1; party < n; ++party) {
                SymbolString v(n - 1, 0);
                v[0] = (secret + pad[party - 1]) % secret_count;
                s.views[(static_cast<size_t>(party) * secret_count + secret) * num_rand + r] =
                    std::move(v);
            }
        }
    pr.input_mod = secret_count + 1;
    pr.no_input = secret_count;
    pr.party_inputs.assign(n, std::vector<int>(secret_count, pr.no_input));
    for (int secret = 0; secret < secret_count; ++secret)
        pr.party_inputs[0][secret] = secret;  // only the dealer holds an input
    pr.out_len = 0;
    pr.outputs.assign(static_cast<size_t>(n) * secret_count, {});
    pr.validate();
    return pr;
}

ProtocolSpec as_protocol(const SharingScheme& scheme) {
    ProtocolSpec pr;
    pr.core = scheme;
    pr.input_mod = 1;
    pr.no_input = 0;
    pr.party_inputs.assign(scheme.n, std::vector<int>(scheme.num_secrets(), 0));
    pr.out_len = 0;
    pr.outputs.assign(static_cast<size_t>(scheme.n) * scheme.num_secrets(), {});
    pr.validate();
    return pr;
}

namespace {

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    std::string cur;
    for (char c : text + ",") {
        if (c == ',') {
            if (cur.empty()) throw parse_error("builtin: empty parameter in '" + text + "'");
            try {
                out.push_back(std::stoi(cur));
            } catch (const std::exception&) {
                throw parse_error("builtin: parameter '" + cur + "' is not representable");
            }
            cur.clear();
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            cur += c;
        } else {
            throw parse_error("builtin: bad parameter character in '" + text + "'");
        }
    }
    return out;
}

}  // namespace

ProtocolSpec builtin_by_name(const std::string& spec) {
    auto colon = spec.find(':');
    std::string head = spec.substr(0, colon);
    std::string args = colon == std::string::npos ? "" : spec.substr(colon + 1);
    if (head == "xor2") return as_protocol(builtin_xor2());
    if (head == "additive4") return builtin_additive4();
    if (head == "shamir") {
        auto v = parse_int_list(args);
        if (v.size() != 3) throw parse_error("builtin: shamir needs n,t,p");
        return as_protocol(builtin_shamir(v[0], v[1], v[2]));
    }
    if (head == "dealer") {
        auto v = parse_int_list(args);
        if (v.size() == 1) return builtin_dealer(v[0]);
        if (v.size() == 2) return builtin_dealer(v[0], v[1]);
        throw parse_error("builtin: dealer needs n[,secrets]");
    }
    throw parse_error("builtin: unknown generator '" + spec + "'");
}

bool builtin_is_scheme(const std::string& spec) {
    auto head = spec.substr(0, spec.find(':'));
    return head == "xor2" || head == "shamir";
}

// --- classical analysis -------------------------------------------------------

bool classical_secure(const SharingScheme& scheme, Subset a) {
    if (a >= (Subset(1) << scheme.n))
        throw std::invalid_argument("classical_secure: subset outside party range");
    std::map<SymbolString, long long> reference;
    for (int s = 0; s < scheme.num_secrets(); ++s) {
        std::map<SymbolString, long long> dist;
        for (int r = 0; r < scheme.num_rand(); ++r)
            dist[scheme.joint_view(a, s, r)] += scheme.rand_weights[r];
        if (s == 0)
            reference = std::move(dist);
        else if (dist != reference)
            return false;
    }
    return true;
}

AdversaryStructure classical_adversary_structure(const SharingScheme& scheme) {
    if (scheme.n > 12)
        throw budget_error("classical_adversary_structure: party count above enumeration cap");
    std::vector<Subset> secure;
    for (Subset a = 0; a < (Subset(1) << scheme.n); ++a)
        if (classical_secure(scheme, a)) secure.push_back(a);
    return AdversaryStructure::of(scheme.n, std::move(secure));
}

AdversaryStructure square_structure(const AdversaryStructure& f) {
    std::vector<Subset> unions;
    for (Subset a : f.sets)
        for (Subset b : f.sets) unions.push_back(a | b);
    return AdversaryStructure::of(f.n, std::move(unions));
}

AdversaryStructure input_output_filter(const ProtocolSpec& protocol,
                                       const AdversaryStructure& f, int s, int s2) {
    std::vector<Subset> kept;
    for (Subset a : f.sets)
        if (protocol.joint_input(a, s) == protocol.joint_input(a, s2) &&
            protocol.joint_output(a, s) == protocol.joint_output(a, s2))
            kept.push_back(a);
    return AdversaryStructure::of(f.n, std::move(kept));
}

ProtocolSpec uniformize_randomness(const ProtocolSpec& protocol, int cap) {
    const SharingScheme& core = protocol.core;
    long long g = 0;
    for (long long w : core.rand_weights) g = std::gcd(g, w);
    bool uniform = std::all_of(core.rand_weights.begin(), core.rand_weights.end(),
                               [&](long long w) { return w == core.rand_weights[0]; });
    if (uniform) {
        ProtocolSpec out = protocol;
        std::fill(out.core.rand_weights.begin(), out.core.rand_weights.end(), 1LL);
        return out;
    }
    long long total = 0;
    for (long long w : core.rand_weights) total += w / g;
    if (total > cap)
        throw budget_error("uniformize_randomness: expanded alphabet of " +
                           std::to_string(total) + " atoms exceeds cap");

    ProtocolSpec out = protocol;
    SharingScheme& s = out.core;
    s.rand_values.clear();
    s.rand_weights.clear();
    std::vector<int> copies_of;  // new atom -> source atom
    for (int r = 0; r < core.num_rand(); ++r)
        for (long long c = 0; c < core.rand_weights[r] / g; ++c) {
            s.rand_values.push_back(static_cast<long long>(copies_of.size()));
            s.rand_weights.push_back(1);
            copies_of.push_back(r);
        }
    s.views.resize(static_cast<size_t>(s.n) * s.num_secrets() * s.num_rand());
    for (int party = 0; party < s.n; ++party)
        for (int sec = 0; sec < s.num_secrets(); ++sec)
            for (int r = 0; r < s.num_rand(); ++r)
                s.views[(static_cast<size_t>(party) * s.num_secrets() + sec) * s.num_rand() + r] =
                    core.view(party, sec, copies_of[r]);
    out.validate();
    return out;
}

std::uint64_t table_hash(const ProtocolSpec& protocol) {
    std::ostringstream os;
    const SharingScheme& s = protocol.core;
    os << s.name << "|" << s.n << "|" << s.view_mod << "|" << s.view_len << "|";
    for (size_t i = 0; i < s.secret_values.size(); ++i)
        os << s.secret_values[i] << ":" << s.secret_weights[i] << ",";
    os << "|";
    for (size_t i = 0; i < s.rand_values.size(); ++i)
        os << s.rand_values[i] << ":" << s.rand_weights[i] << ",";
    os << "|";
    for (const auto& v : s.views) {
        for (int sym : v) os << sym;
        os << ",";
    }
    os << "|" << protocol.input_mod << "/" << protocol.no_input << "|";
    for (const auto& per_party : protocol.party_inputs) {
        for (int sym : per_party) os << sym << ".";
        os << ",";
    }
    os << "|" << protocol.out_len << "/" << protocol.out_mod << "|";
    for (const auto& o : protocol.outputs) {
        for (int sym : o) os << sym;
        os << ",";
    }
    std::uint64_t h = 1469598103934665603ULL;
    for (char c : os.str()) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace qsa

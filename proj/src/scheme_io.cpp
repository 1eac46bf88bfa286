#include "qsa/scheme_io.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

namespace qsa {

namespace {

struct Line {
    int number;
    std::string text;
};

[[noreturn]] void fail(int line, const std::string& msg) {
    throw parse_error("line " + std::to_string(line) + ": " + msg);
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

long long parse_int(const std::string& s, int line) {
    if (s.empty()) fail(line, "expected a number");
    for (size_t i = 0; i < s.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(s[i])) && !(i == 0 && s[i] == '-'))
            fail(line, "'" + s + "' is not a number");
    try {
        return std::stoll(s);
    } catch (const std::exception&) {
        fail(line, "'" + s + "' is not a representable number");
    }
}

SymbolString parse_symbols(const std::string& s, int mod, int line) {
    SymbolString out;
    for (char c : s) {
        if (!std::isdigit(static_cast<unsigned char>(c)))
            fail(line, "'" + s + "' is not a symbol string");
        int v = c - '0';
        if (v >= mod) fail(line, "symbol " + std::string(1, c) + " outside alphabet");
        out.push_back(v);
    }
    return out;
}

std::vector<std::string> split_ws(const std::string& s) {
    std::istringstream is(s);
    std::vector<std::string> out;
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

}  // namespace

ProtocolSpec parse_definition(const std::string& text) {
    std::map<std::string, std::vector<Line>> sections;
    std::vector<std::string> order;
    {
        std::istringstream is(text);
        std::string raw;
        int number = 0;
        std::string current;
        while (std::getline(is, raw)) {
            ++number;
            std::string line = raw;
            if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']') fail(number, "unterminated section header");
                current = line.substr(1, line.size() - 2);
                if (sections.count(current)) fail(number, "duplicate section [" + current + "]");
                sections[current];
                order.push_back(current);
                continue;
            }
            if (current.empty()) fail(number, "content before any section header");
            sections[current].push_back({number, line});
        }
    }
    for (const auto& name : order)
        if (name != "meta" && name != "secrets" && name != "randomness" && name != "views" &&
            name != "inputs" && name != "outputs")
            throw parse_error("unknown section [" + name + "]");
    for (const char* required : {"meta", "secrets", "randomness", "views"})
        if (!sections.count(required))
            throw parse_error(std::string("missing section [") + required + "]");

    ProtocolSpec pr;
    SharingScheme& s = pr.core;
    // Defaults resolved after [meta] is read.
    int view_mod = 2, out_mod = -1, out_len = 0, index_base = 1;
    bool have_name = false, have_parties = false, have_view_len = false;
    for (const Line& l : sections["meta"]) {
        auto eq = l.text.find('=');
        if (eq == std::string::npos) fail(l.number, "expected key = value");
        std::string key = trim(l.text.substr(0, eq));
        std::string value = trim(l.text.substr(eq + 1));
        if (key == "name") {
            s.name = value;
            have_name = true;
        } else if (key == "parties") {
            s.n = static_cast<int>(parse_int(value, l.number));
            have_parties = true;
        } else if (key == "view_len") {
            s.view_len = static_cast<int>(parse_int(value, l.number));
            have_view_len = true;
        } else if (key == "view_mod") {
            view_mod = static_cast<int>(parse_int(value, l.number));
        } else if (key == "out_len") {
            out_len = static_cast<int>(parse_int(value, l.number));
        } else if (key == "out_mod") {
            out_mod = static_cast<int>(parse_int(value, l.number));
        } else if (key == "index_base") {
            index_base = static_cast<int>(parse_int(value, l.number));
        } else {
            fail(l.number, "unknown meta key '" + key + "'");
        }
    }
    if (!have_name || !have_parties || !have_view_len)
        throw parse_error("[meta] must set name, parties and view_len");
    if (view_mod < 2 || view_mod > 10) throw parse_error("view_mod must be in 2..10");
    if (index_base != 0 && index_base != 1) throw parse_error("index_base must be 0 or 1");
    s.view_mod = view_mod;
    s.party_index_base = index_base;
    if (out_mod < 0) out_mod = view_mod;
    if (out_mod < 2 || out_mod > 10) throw parse_error("out_mod must be in 2..10");

    std::map<long long, int> secret_of;
    for (const Line& l : sections["secrets"]) {
        // Either a bare value (uniform prior) or value : weight.
        long long v, w = 1;
        if (auto colon = l.text.find(':'); colon != std::string::npos) {
            v = parse_int(trim(l.text.substr(0, colon)), l.number);
            w = parse_int(trim(l.text.substr(colon + 1)), l.number);
            if (w <= 0) fail(l.number, "weight must be positive");
        } else {
            v = parse_int(l.text, l.number);
        }
        if (secret_of.count(v)) fail(l.number, "duplicate secret value");
        secret_of[v] = static_cast<int>(s.secret_values.size());
        s.secret_values.push_back(v);
        s.secret_weights.push_back(w);
    }

    std::map<long long, int> rand_of;
    for (const Line& l : sections["randomness"]) {
        auto colon = l.text.find(':');
        if (colon == std::string::npos) fail(l.number, "expected value : weight");
        long long v = parse_int(trim(l.text.substr(0, colon)), l.number);
        long long w = parse_int(trim(l.text.substr(colon + 1)), l.number);
        if (w <= 0) fail(l.number, "weight must be positive");
        if (rand_of.count(v)) fail(l.number, "duplicate randomness value");
        rand_of[v] = static_cast<int>(s.rand_values.size());
        s.rand_values.push_back(v);
        s.rand_weights.push_back(w);
    }
    if (s.secret_values.empty()) throw parse_error("[secrets] is empty");
    if (s.rand_values.empty()) throw parse_error("[randomness] is empty");

    s.views.assign(static_cast<size_t>(s.n) * s.num_secrets() * s.num_rand(), {});
    std::vector<int> filled(s.views.size(), 0);
    for (const Line& l : sections["views"]) {
        auto arrow = l.text.find("->");
        if (arrow == std::string::npos) fail(l.number, "expected party secret randomness -> symbols");
        auto head = split_ws(l.text.substr(0, arrow));
        if (head.size() != 3) fail(l.number, "expected three cell coordinates");
        int party = static_cast<int>(parse_int(head[0], l.number)) - index_base;
        if (party < 0 || party >= s.n) fail(l.number, "party index out of range");
        auto sit = secret_of.find(parse_int(head[1], l.number));
        if (sit == secret_of.end()) fail(l.number, "unknown secret value");
        auto rit = rand_of.find(parse_int(head[2], l.number));
        if (rit == rand_of.end()) fail(l.number, "unknown randomness value");
        SymbolString v = parse_symbols(trim(l.text.substr(arrow + 2)), view_mod, l.number);
        if (static_cast<int>(v.size()) != s.view_len)
            fail(l.number, "view string must have view_len symbols");
        size_t cell = (static_cast<size_t>(party) * s.num_secrets() + sit->second) * s.num_rand() +
                      rit->second;
        if (filled[cell]++) fail(l.number, "duplicate view cell");
        s.views[cell] = std::move(v);
    }
    for (size_t i = 0; i < filled.size(); ++i)
        if (!filled[i])
            throw parse_error("[views] is missing cells; the table must be exhaustive");

    // Inputs: default input-less.
    bool has_inputs = sections.count("inputs") && !sections["inputs"].empty();
    if (has_inputs) {
        int max_value = -1;
        std::vector<std::vector<std::optional<int>>> given(
            s.n, std::vector<std::optional<int>>(s.num_secrets()));
        for (const Line& l : sections["inputs"]) {
            auto arrow = l.text.find("->");
            if (arrow == std::string::npos) fail(l.number, "expected party secret -> value");
            auto head = split_ws(l.text.substr(0, arrow));
            if (head.size() != 2) fail(l.number, "expected two cell coordinates");
            int party = static_cast<int>(parse_int(head[0], l.number)) - index_base;
            if (party < 0 || party >= s.n) fail(l.number, "party index out of range");
            auto sit = secret_of.find(parse_int(head[1], l.number));
            if (sit == secret_of.end()) fail(l.number, "unknown secret value");
            std::string value = trim(l.text.substr(arrow + 2));
            if (given[party][sit->second]) fail(l.number, "duplicate input cell");
            if (value == "_") {
                given[party][sit->second] = -1;
            } else {
                int v = static_cast<int>(parse_int(value, l.number));
                if (v < 0) fail(l.number, "input symbols must be nonnegative");
                max_value = std::max(max_value, v);
                given[party][sit->second] = v;
            }
        }
        pr.input_mod = max_value + 2;  // reserve one symbol above every value
        pr.no_input = max_value + 1;
        pr.party_inputs.assign(s.n, std::vector<int>(s.num_secrets(), pr.no_input));
        for (int party = 0; party < s.n; ++party)
            for (int sec = 0; sec < s.num_secrets(); ++sec) {
                if (!given[party][sec])
                    throw parse_error("[inputs] is missing cells; the table must be exhaustive");
                if (*given[party][sec] >= 0) pr.party_inputs[party][sec] = *given[party][sec];
            }
    } else {
        pr.input_mod = 1;
        pr.no_input = 0;
        pr.party_inputs.assign(s.n, std::vector<int>(s.num_secrets(), 0));
    }

    pr.out_len = out_len;
    pr.out_mod = out_mod;
    pr.outputs.assign(static_cast<size_t>(s.n) * s.num_secrets(), SymbolString(out_len, 0));
    bool has_outputs = sections.count("outputs") && !sections["outputs"].empty();
    if (has_outputs) {
        if (out_len == 0) throw parse_error("[outputs] present but out_len is 0");
        std::vector<int> given(pr.outputs.size(), 0);
        for (const Line& l : sections["outputs"]) {
            auto arrow = l.text.find("->");
            if (arrow == std::string::npos) fail(l.number, "expected party secret -> symbols");
            auto head = split_ws(l.text.substr(0, arrow));
            if (head.size() != 2) fail(l.number, "expected two cell coordinates");
            int party = static_cast<int>(parse_int(head[0], l.number)) - index_base;
            if (party < 0 || party >= s.n) fail(l.number, "party index out of range");
            auto sit = secret_of.find(parse_int(head[1], l.number));
            if (sit == secret_of.end()) fail(l.number, "unknown secret value");
            SymbolString v = parse_symbols(trim(l.text.substr(arrow + 2)), out_mod, l.number);
            if (static_cast<int>(v.size()) != out_len)
                fail(l.number, "output string must have out_len symbols");
            size_t cell = static_cast<size_t>(party) * s.num_secrets() + sit->second;
            if (given[cell]++) fail(l.number, "duplicate output cell");
            pr.outputs[cell] = std::move(v);
        }
        for (size_t i = 0; i < given.size(); ++i)
            if (!given[i])
                throw parse_error("[outputs] is missing cells; the table must be exhaustive");
    } else if (out_len != 0) {
        throw parse_error("out_len > 0 requires an [outputs] section");
    }

    try {
        pr.validate();
    } catch (const std::exception& e) {
        throw parse_error(std::string("definition rejected: ") + e.what());
    }
    return pr;
}

ProtocolSpec load_definition_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw parse_error("cannot open '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_definition(buffer.str());
}

std::string serialize_definition(const ProtocolSpec& pr) {
    const SharingScheme& s = pr.core;
    std::ostringstream os;
    os << "[meta]\n";
    os << "name = " << s.name << "\n";
    os << "parties = " << s.n << "\n";
    os << "view_len = " << s.view_len << "\n";
    os << "view_mod = " << s.view_mod << "\n";
    os << "out_len = " << pr.out_len << "\n";
    os << "out_mod = " << pr.out_mod << "\n";
    os << "index_base = " << s.party_index_base << "\n";
    os << "[secrets]\n";
    for (size_t i = 0; i < s.secret_values.size(); ++i) {
        os << s.secret_values[i];
        if (s.secret_weights[i] != 1) os << " : " << s.secret_weights[i];
        os << "\n";
    }
    os << "[randomness]\n";
    for (size_t i = 0; i < s.rand_values.size(); ++i)
        os << s.rand_values[i] << " : " << s.rand_weights[i] << "\n";
    os << "[views]\n";
    for (int party = 0; party < s.n; ++party)
        for (int sec = 0; sec < s.num_secrets(); ++sec)
            for (int r = 0; r < s.num_rand(); ++r) {
                os << (party + s.party_index_base) << " " << s.secret_values[sec] << " "
                   << s.rand_values[r] << " -> ";
                for (int sym : s.view(party, sec, r)) os << sym;
                os << "\n";
            }
    bool any_input = false;
    for (const auto& per_party : pr.party_inputs)
        for (int v : per_party)
            if (v != pr.no_input) any_input = true;
    if (any_input) {
        os << "[inputs]\n";
        for (int party = 0; party < s.n; ++party)
            for (int sec = 0; sec < s.num_secrets(); ++sec) {
                os << (party + s.party_index_base) << " " << s.secret_values[sec] << " -> ";
                int v = pr.party_inputs[party][sec];
                if (v == pr.no_input)
                    os << "_";
                else
                    os << v;
                os << "\n";
            }
    }
    if (pr.out_len > 0) {
        os << "[outputs]\n";
        for (int party = 0; party < s.n; ++party)
            for (int sec = 0; sec < s.num_secrets(); ++sec) {
                os << (party + s.party_index_base) << " " << s.secret_values[sec] << " -> ";
                for (int sym : pr.output(party, sec)) os << sym;
                os << "\n";
            }
    }
    return os.str();
}

}  // namespace qsa

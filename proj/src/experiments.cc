#include "qshare/experiments.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "qshare/rng.h"
#include "qshare/sim.h"

namespace qshare {

namespace fs = std::filesystem;

namespace {

std::string join_violations(const std::vector<ConfigViolation> &v) {
    std::string s = "invalid configuration:";
    for (const auto &x : v) {
        s += "\n  " + x.field + ": " + x.message;
    }
    return s;
}

}  // namespace

ConfigError::ConfigError(std::vector<ConfigViolation> violations)
    : std::runtime_error(join_violations(violations)), violations_(std::move(violations)) {}

std::string scenario_name(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::Crosstalk:
            return "crosstalk";
        case ScenarioKind::SwapInject:
            return "swap-inject";
        case ScenarioKind::Sense:
            return "sense";
        case ScenarioKind::Reconstruct:
            return "reconstruct";
        case ScenarioKind::Fingerprint:
            return "fingerprint";
        case ScenarioKind::DefendCompare:
            return "defend-compare";
    }
    return "?";
}

ScenarioKind parse_scenario(const std::string &name) {
    for (auto k : {ScenarioKind::Crosstalk, ScenarioKind::SwapInject, ScenarioKind::Sense, ScenarioKind::Reconstruct,
                   ScenarioKind::Fingerprint, ScenarioKind::DefendCompare}) {
        if (scenario_name(k) == name) {
            return k;
        }
    }
    throw std::invalid_argument("unknown scenario '" + name + "'");
}

// ---------------------------------------------------------------------------
// Circuit specs

namespace {

std::vector<std::string> split(const std::string &s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

uint64_t parse_uint(const std::string &s, const std::string &what) {
    if (s.empty() || s.size() > 19 || s.find_first_not_of("0123456789") != std::string::npos) {
        throw std::invalid_argument("bad " + what + " '" + s + "'");
    }
    return std::stoull(s);
}

}  // namespace

Circuit circuit_from_spec(const std::string &spec) {
    auto parts = split(spec, ':');
    const auto &kind = parts[0];
    auto arity = [&](size_t n) {
        if (parts.size() != n + 1) {
            throw std::invalid_argument("circuit spec '" + spec + "' expects " + std::to_string(n) + " argument(s)");
        }
    };
    auto qubit_count = [&](const std::string &s) {
        uint64_t k = parse_uint(s, "qubit count");
        if (k == 0 || k > 20) {
            throw std::invalid_argument("qubit count in '" + spec + "' must be in [1, 20]");
        }
        return static_cast<uint32_t>(k);
    };
    if (kind == "grover3") {
        arity(1);
        return build_grover3(parts[1]);
    }
    if (kind == "half_adder") {
        arity(0);
        return build_half_adder();
    }
    if (kind == "swap_demo") {
        arity(0);
        return build_swap_demo_victim();
    }
    if (kind == "empty") {
        arity(1);
        return Circuit("empty", qubit_count(parts[1]));
    }
    if (kind == "x_all") {
        arity(1);
        Circuit c("x_all", qubit_count(parts[1]));
        for (uint32_t q = 0; q < c.n_qubits; q++) {
            c.x(q);
        }
        return c;
    }
    if (kind == "chain") {
        arity(1);
        return build_adversary_chain(parse_uint(parts[1], "chain length"));
    }
    if (kind == "random") {
        arity(3);
        return build_random(qubit_count(parts[1]), parse_uint(parts[2], "gate count"),
                            parse_uint(parts[3], "seed"));
    }
    throw std::invalid_argument("unknown circuit spec '" + spec + "'");
}

namespace {

/// Most probable noiseless outcome, lowest index on ties.
std::string noiseless_mode(const Circuit &c) {
    auto amps = statevector(c);
    size_t best = 0;
    for (size_t i = 1; i < amps.size(); i++) {
        if (std::norm(amps[i]) > std::norm(amps[best]) + 1e-12) {
            best = i;
        }
    }
    return bits_to_key(best, c.n_qubits);
}

// ---------------------------------------------------------------------------
// Validation helpers

class Fields {
   public:
    Fields(const Json &obj, std::string path, std::vector<ConfigViolation> &out)
        : obj_(obj), path_(std::move(path)), out_(out) {
        if (!obj_.is_object()) {
            add(path_, "must be an object");
            ok_ = false;
        }
    }

    ~Fields() {
        if (!ok_) {
            return;
        }
        for (auto it = obj_.begin(); it != obj_.end(); ++it) {
            if (!known_.count(it.key())) {
                add(at(it.key()), "unknown key");
            }
        }
    }

    std::string at(const std::string &key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

    void add(const std::string &field, const std::string &msg) {
        out_.push_back({field, msg});
    }

    const Json *get(const std::string &key) {
        known_.insert(key);
        if (!ok_ || !obj_.contains(key)) {
            return nullptr;
        }
        return &obj_.at(key);
    }

    std::vector<ConfigViolation> &sink() {
        return out_;
    }

    bool has(const std::string &key) const {
        return ok_ && obj_.contains(key);
    }

    uint64_t count(const std::string &key, uint64_t def, uint64_t lo = 1, uint64_t hi = UINT64_MAX) {
        const Json *v = get(key);
        if (!v) {
            return def;
        }
        if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<int64_t>() >= 0)) {
            add(at(key), "must be a non-negative integer");
            return def;
        }
        uint64_t x = v->get<uint64_t>();
        if (x < lo || x > hi) {
            add(at(key), "out of range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
            return def;
        }
        return x;
    }

    double number(const std::string &key, double def, double lo, double hi) {
        const Json *v = get(key);
        if (!v) {
            return def;
        }
        if (!v->is_number()) {
            add(at(key), "must be a number");
            return def;
        }
        double x = v->get<double>();
        if (!(x >= lo && x <= hi)) {
            std::ostringstream s;
            s << "out of range [" << lo << ", " << hi << "]";
            add(at(key), s.str());
            return def;
        }
        return x;
    }

    bool flag(const std::string &key, bool def) {
        const Json *v = get(key);
        if (!v) {
            return def;
        }
        if (!v->is_boolean()) {
            add(at(key), "must be true or false");
            return def;
        }
        return v->get<bool>();
    }

    std::string text(const std::string &key, const std::string &def) {
        const Json *v = get(key);
        if (!v) {
            return def;
        }
        if (!v->is_string()) {
            add(at(key), "must be a string");
            return def;
        }
        return v->get<std::string>();
    }

    std::string choice(const std::string &key, const std::string &def, const std::vector<std::string> &allowed) {
        std::string s = text(key, def);
        if (std::find(allowed.begin(), allowed.end(), s) == allowed.end()) {
            std::string list;
            for (const auto &a : allowed) {
                list += (list.empty() ? "" : ", ") + a;
            }
            add(at(key), "must be one of: " + list);
            return def;
        }
        return s;
    }

    /// Qubit indices checked against the device size n (0 skips the check).
    std::vector<uint32_t> qubits(const std::string &key, const std::vector<uint32_t> &def, uint32_t n) {
        const Json *v = get(key);
        if (!v) {
            return def;
        }
        if (!v->is_array()) {
            add(at(key), "must be an array of qubit indices");
            return def;
        }
        std::vector<uint32_t> out;
        for (size_t i = 0; i < v->size(); i++) {
            auto field = at(key) + "[" + std::to_string(i) + "]";
            const auto &e = (*v)[i];
            if (!e.is_number_integer() || e.get<int64_t>() < 0) {
                add(field, "must be a non-negative integer");
                continue;
            }
            uint64_t q = e.get<uint64_t>();
            if (n && q >= n) {
                add(field, "qubit " + std::to_string(q) + " outside device of " + std::to_string(n) + " qubits");
                continue;
            }
            out.push_back(static_cast<uint32_t>(q));
        }
        return out;
    }

    uint32_t qubit(const std::string &key, uint32_t def, uint32_t n) {
        const Json *v = get(key);
        if (!v) {
            if (n && def >= n) {
                add(at(key), "default qubit " + std::to_string(def) + " outside device; set it explicitly");
            }
            return def;
        }
        if (!v->is_number_integer() || v->get<int64_t>() < 0) {
            add(at(key), "must be a non-negative integer");
            return def;
        }
        uint64_t q = v->get<uint64_t>();
        if (n && q >= n) {
            add(at(key), "qubit " + std::to_string(q) + " outside device of " + std::to_string(n) + " qubits");
            return def;
        }
        return static_cast<uint32_t>(q);
    }

    std::vector<uint64_t> counts(const std::string &key, const std::vector<uint64_t> &def) {
        const Json *v = get(key);
        if (!v) {
            return def;
        }
        if (!v->is_array() || v->empty()) {
            add(at(key), "must be a non-empty array of non-negative integers");
            return def;
        }
        std::vector<uint64_t> out;
        for (size_t i = 0; i < v->size(); i++) {
            const auto &e = (*v)[i];
            if (!e.is_number_integer() || e.get<int64_t>() < 0) {
                add(at(key) + "[" + std::to_string(i) + "]", "must be a non-negative integer");
                continue;
            }
            out.push_back(e.get<uint64_t>());
        }
        return out;
    }

    /// Circuit spec string; returns the parsed circuit (empty on error).
    std::string circuit(const std::string &key, const std::string &def, uint32_t n, Circuit &parsed) {
        std::string spec = text(key, def);
        try {
            parsed = circuit_from_spec(spec);
            if (n && parsed.n_qubits > n) {
                add(at(key), "circuit needs " + std::to_string(parsed.n_qubits) + " qubits, device has " +
                                 std::to_string(n));
            }
        } catch (const std::exception &e) {
            add(at(key), e.what());
            parsed = Circuit();
        }
        return spec;
    }

   private:
    const Json &obj_;
    std::string path_;
    std::vector<ConfigViolation> &out_;
    std::set<std::string> known_;
    bool ok_ = true;
};

bool distinct(const std::vector<uint32_t> &v) {
    return std::set<uint32_t>(v.begin(), v.end()).size() == v.size();
}

// ---------------------------------------------------------------------------
// Device

Json canonical_device(const Json &spec, const std::string &path, std::vector<ConfigViolation> &out) {
    if (spec.is_string()) {
        return canonical_device(Json{{"builtin", spec.get<std::string>()}}, path, out);
    }
    Fields f(spec, path, out);
    Json c = Json::object();
    UniformNoise def;
    uint32_t n = 0;
    std::vector<Edge> edges;
    bool graph_ok = false;
    if (f.has("builtin") && (f.has("n") || f.has("edges"))) {
        f.add(path, "give either builtin or n + edges, not both");
    }
    std::string builtin = f.text("builtin", "");
    std::string name = f.text("name", builtin.empty() ? "inline" : builtin);
    c["name"] = name;
    if (!builtin.empty()) {
        c["builtin"] = builtin;
        try {
            auto g = builtin_graph(builtin);
            n = g.n_qubits();
            edges = g.edges();
            graph_ok = true;
        } catch (const std::exception &e) {
            f.add(f.at("builtin"), e.what());
        }
    } else if (f.has("n") || f.has("edges")) {
        n = static_cast<uint32_t>(f.count("n", 0, 1, 64));
        const Json *e = f.get("edges");
        Json ej = Json::array();
        if (!e || !e->is_array()) {
            f.add(f.at("edges"), "required array of [a, b] pairs");
        } else {
            graph_ok = n > 0;
            for (size_t i = 0; i < e->size(); i++) {
                const auto &pair = (*e)[i];
                auto field = f.at("edges") + "[" + std::to_string(i) + "]";
                if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_unsigned() ||
                    !pair[1].is_number_unsigned()) {
                    f.add(field, "must be a pair of qubit indices");
                    graph_ok = false;
                    continue;
                }
                uint64_t a = pair[0].get<uint64_t>(), b = pair[1].get<uint64_t>();
                if (a >= n || b >= n || a == b) {
                    f.add(field, "edge endpoints must be distinct qubits below n");
                    graph_ok = false;
                    continue;
                }
                edges.emplace_back(static_cast<uint32_t>(a), static_cast<uint32_t>(b));
            }
            if (graph_ok) {
                CouplingGraph g(n, edges);
                edges = g.edges();
                for (auto [a, b] : edges) {
                    ej.push_back({a, b});
                }
            }
        }
        c["n"] = n;
        c["edges"] = ej;
    } else {
        f.add(path, "needs builtin or n + edges");
    }
    c["eps_ct"] = f.number("eps_ct", def.eps_ct, 0.0, 0.5);
    c["delta_sense"] = f.number("delta_sense", def.delta_sense, 0.0, 1.0);
    {
        Json r = {{"p01", def.p01}, {"p10", def.p10}};
        if (const Json *rj = f.get("readout")) {
            Fields rf(*rj, f.at("readout"), out);
            r["p01"] = rf.number("p01", def.p01, 0.0, 0.5);
            r["p10"] = rf.number("p10", def.p10, 0.0, 0.5);
        }
        c["readout"] = r;
    }
    c["reset_retain"] = f.number("reset_retain", def.reset_retain, 0.0, 1.0);
    {
        const auto &d = def.durations;
        Json dj = {{"t1q", d.t_1q}, {"t2q", d.t_2q}, {"tro", d.t_readout}, {"trst", d.t_reset}};
        if (const Json *dd = f.get("durations")) {
            Fields df(*dd, f.at("durations"), out);
            dj["t1q"] = df.number("t1q", d.t_1q, 1e-9, 1e6);
            dj["t2q"] = df.number("t2q", d.t_2q, 1e-9, 1e6);
            dj["tro"] = df.number("tro", d.t_readout, 1e-9, 1e6);
            dj["trst"] = df.number("trst", d.t_reset, 1e-9, 1e6);
        }
        c["durations"] = dj;
    }
    c["jitter"] = f.number("jitter", def.timing_jitter, 0.0, 1e6);

    for (const char *key : {"eps_overrides", "delta_overrides"}) {
        Json list = Json::array();
        const bool directed = std::string(key) == "delta_overrides";
        if (const Json *o = f.get(key)) {
            if (!o->is_array()) {
                f.add(f.at(key), "must be an array of [a, b, p] triples");
            } else {
                for (size_t i = 0; i < o->size(); i++) {
                    const auto &t = (*o)[i];
                    auto field = f.at(key) + "[" + std::to_string(i) + "]";
                    if (!t.is_array() || t.size() != 3 || !t[0].is_number_unsigned() ||
                        !t[1].is_number_unsigned() || !t[2].is_number()) {
                        f.add(field, "must be [a, b, p]");
                        continue;
                    }
                    uint64_t a = t[0].get<uint64_t>(), b = t[1].get<uint64_t>();
                    double p = t[2].get<double>();
                    Edge e{static_cast<uint32_t>(std::min(a, b)), static_cast<uint32_t>(std::max(a, b))};
                    if (graph_ok && std::find(edges.begin(), edges.end(), e) == edges.end()) {
                        f.add(field, "qubits " + std::to_string(a) + " and " + std::to_string(b) +
                                         " are not a device edge");
                        continue;
                    }
                    if (!(p >= 0 && p <= (directed ? 1.0 : 0.5))) {
                        f.add(field, "probability out of range");
                        continue;
                    }
                    list.push_back({a, b, p});
                }
            }
        }
        c[key] = list;
    }
    return c;
}

// ---------------------------------------------------------------------------
// Params

Json qubit_json(const std::vector<uint32_t> &v) {
    Json a = Json::array();
    for (auto q : v) {
        a.push_back(q);
    }
    return a;
}

Json expect_block(Fields &f) {
    auto &out = f.sink();
    Json e = Json::object();
    const Json *v = f.get("expect");
    if (!v) {
        return e;
    }
    if (!v->is_object()) {
        f.add(f.at("expect"), "must map metric names to {min, max}");
        return e;
    }
    for (auto it = v->begin(); it != v->end(); ++it) {
        Fields b(it.value(), f.at("expect") + "." + it.key(), out);
        Json bound = Json::object();
        if (b.has("min")) {
            bound["min"] = b.number("min", 0, -1e300, 1e300);
        } else {
            b.get("min");
        }
        if (b.has("max")) {
            bound["max"] = b.number("max", 0, -1e300, 1e300);
        } else {
            b.get("max");
        }
        e[it.key()] = bound;
    }
    return e;
}

Json crosstalk_params(Fields &f, uint32_t n, bool with_mode) {
    Json p = Json::object();
    Circuit victim;
    p["victim"] = f.circuit("victim", "grover3:101", n, victim);
    std::string expected = f.text("expected", "");
    if (victim.n_qubits > 0) {
        if (expected.empty()) {
            expected = noiseless_mode(victim);
        } else if (expected.size() != victim.n_qubits || expected.find_first_not_of("01") != std::string::npos) {
            f.add(f.at("expected"), "must be a bit string of the victim's width");
        }
    }
    p["expected"] = expected;
    auto ns = f.counts("n_values", {0, 5, 10, 15, 20, 25, 30, 35, 40});
    p["n_values"] = ns;
    p["shots"] = f.count("shots", 20000, 1, 100000000);
    if (with_mode) {
        p["mode"] = f.choice("mode", "packed", {"packed", "buffered"});
    }
    auto pair = f.qubits("adversary_pair", {}, n);
    if (!pair.empty() && (pair.size() != 2 || pair[0] == pair[1])) {
        f.add(f.at("adversary_pair"), "must name two distinct qubits");
    }
    p["adversary_pair"] = qubit_json(pair);
    NoiseFlags nf{true, false, true, false};
    if (const Json *nj = f.get("noise")) {
        Fields nfld(*nj, f.at("noise"), f.sink());
        nf.crosstalk = nfld.flag("crosstalk", nf.crosstalk);
        nf.sensing = nfld.flag("sensing", nf.sensing);
        nf.readout = nfld.flag("readout", nf.readout);
        nf.residual = nfld.flag("residual", nf.residual);
    }
    p["noise"] = {{"crosstalk", nf.crosstalk}, {"sensing", nf.sensing}, {"readout", nf.readout},
                  {"residual", nf.residual}};
    return p;
}

Json swap_params(Fields &f, uint32_t n) {
    Json p = Json::object();
    std::string set = f.choice("victim_set", "random", {"random", "demo"});
    p["victim_set"] = set;
    const bool demo = set == "demo";
    if (demo) {
        for (const char *key : {"count", "min_qubits", "max_qubits", "gates_per_qubit"}) {
            if (f.get(key)) {
                f.add(f.at(key), "only applies to the random victim set");
            }
        }
        if (n && n < 4) {
            f.add(f.at("victim_set"), "the demo victim needs 4 qubits");
        }
    } else {
        p["count"] = f.count("count", 100, 1, 100000);
        uint64_t lo = f.count("min_qubits", 4, 1, 20);
        uint64_t hi = f.count("max_qubits", std::min<uint64_t>(10, n ? n : 10), 1, 20);
        if (lo > hi) {
            f.add(f.at("min_qubits"), "must not exceed max_qubits");
        }
        if (n && hi > n) {
            f.add(f.at("max_qubits"), "victims larger than the device");
        }
        p["min_qubits"] = lo;
        p["max_qubits"] = hi;
        p["gates_per_qubit"] = f.count("gates_per_qubit", 3, 1, 100);
    }
    p["policy"] = f.choice("policy", demo ? "exhaustive_best" : "compact_bfs",
                           {"degree_greedy", "compact_bfs", "exhaustive_best"});
    auto occupied = f.qubits("occupied", {}, n);
    uint64_t top_k = f.count("occupy_top_k", 0, 0, 64);
    if (!occupied.empty() && top_k) {
        f.add(f.at("occupy_top_k"), "give either occupied or occupy_top_k");
    }
    if (n && top_k > n) {
        f.add(f.at("occupy_top_k"), "exceeds the device size");
    }
    p["occupied"] = qubit_json(occupied);
    p["occupy_top_k"] = top_k;
    std::vector<uint32_t> window;
    if (!demo) {
        for (uint32_t q = 0; q < std::min<uint32_t>(n, kExhaustiveMaxFree); q++) {
            window.push_back(q);
        }
    }
    window = f.qubits("oracle_window", window, n);
    if (window.size() > kExhaustiveMaxFree || !distinct(window)) {
        f.add(f.at("oracle_window"), "must be at most " + std::to_string(kExhaustiveMaxFree) + " distinct qubits");
    }
    p["oracle_window"] = qubit_json(window);
    return p;
}

Json sense_params(Fields &f, const Json &device, uint32_t n, bool with_mask) {
    Json p = Json::object();
    uint32_t adversary = f.qubit("adversary", 2, n);
    auto victims = f.qubits("victims", {0}, n);
    if (victims.empty() || victims.size() > 4 || !distinct(victims) ||
        std::find(victims.begin(), victims.end(), adversary) != victims.end()) {
        f.add(f.at("victims"), "must be one to four distinct qubits other than the adversary");
    } else if (n && adversary < n) {
        auto g = device_from_json(device).graph;
        for (auto v : victims) {
            if (!g.are_adjacent(v, adversary)) {
                f.add(f.at("victims"), "qubit " + std::to_string(v) + " is not adjacent to the adversary");
            }
        }
    }
    p["adversary"] = adversary;
    p["victims"] = qubit_json(victims);
    p["trials"] = f.count("trials", 200, 1, 1000000);
    p["shots"] = f.count("shots", 8192, 1, 100000000);
    p["calibration_shots"] = f.count("calibration_shots", 50000, 1, 100000000);
    p["random_input"] = f.flag("random_input", true);
    if (with_mask) {
        p["mask_defense"] = f.flag("mask_defense", false);
    }
    return p;
}

Json reconstruct_params(Fields &f, uint32_t n) {
    Json p = Json::object();
    Json cands = Json::array({"empty:1", "x_all:1"});
    auto probes = f.qubits("probe_qubits", {0}, n);
    if (probes.empty() || !distinct(probes)) {
        f.add(f.at("probe_qubits"), "must be distinct qubits");
    }
    if (const Json *c = f.get("candidates")) {
        if (!c->is_array() || c->size() != 2 || !(*c)[0].is_string() || !(*c)[1].is_string()) {
            f.add(f.at("candidates"), "must be two circuit specs");
        } else {
            cands = *c;
        }
    }
    for (size_t i = 0; i < 2; i++) {
        try {
            auto circuit = circuit_from_spec(cands[i].get<std::string>());
            if (circuit.n_qubits != probes.size()) {
                f.add(f.at("candidates") + "[" + std::to_string(i) + "]",
                      "width must equal the number of probe qubits");
            }
        } catch (const std::exception &e) {
            f.add(f.at("candidates") + "[" + std::to_string(i) + "]", e.what());
        }
    }
    p["candidates"] = cands;
    p["probe_qubits"] = qubit_json(probes);
    p["trials"] = f.count("trials", 500, 1, 1000000);
    p["shots"] = f.count("shots", 4096, 1, 100000000);
    p["training_runs"] = f.count("training_runs", 8, 1, 100000);
    return p;
}

Json fingerprint_params(Fields &f, const Json &device) {
    Json p = Json::object();
    std::string mode = f.choice("mode", "crosstalk", {"crosstalk", "timing"});
    p["mode"] = mode;
    const bool timing = mode == "timing";
    Json profiles = Json::array();
    if (const Json *pr = f.get("profiles")) {
        if (!pr->is_array() || pr->size() < 2) {
            f.add(f.at("profiles"), "must list at least two device profiles");
        } else {
            for (size_t i = 0; i < pr->size(); i++) {
                profiles.push_back(canonical_device((*pr)[i], f.at("profiles") + "[" + std::to_string(i) + "]",
                                                    f.sink()));
            }
        }
    } else if (timing) {
        for (double extra : {0.0, 0.019}) {
            Json d = device;
            double tro = d["durations"]["tro"].get<double>() + extra;
            d["durations"]["tro"] = tro;
            std::ostringstream name;
            name << device["name"].get<std::string>() << "-tro" << tro;
            d["name"] = name.str();
            profiles.push_back(d);
        }
    } else {
        for (double eps : {0.02, 0.03, 0.04}) {
            Json d = device;
            d["eps_ct"] = eps;
            std::ostringstream name;
            name << device["name"].get<std::string>() << "-eps" << eps;
            d["name"] = name.str();
            profiles.push_back(d);
        }
    }
    if (!timing && profiles.size() >= 2) {
        try {
            auto g0 = device_from_json(profiles[0]).graph;
            for (size_t i = 1; i < profiles.size(); i++) {
                if (!(device_from_json(profiles[i]).graph == g0)) {
                    f.add(f.at("profiles"), "crosstalk fingerprinting needs one coupling graph");
                    break;
                }
            }
        } catch (const std::exception &) {
            // Already reported by the profile validation.
        }
    }
    p["profiles"] = profiles;
    p["samples"] = f.count("samples", timing ? 10 : 20000, 1, 100000000);
    p["training_samples"] = f.count("training_samples", 20000, 1, 100000000);
    p["trials"] = f.count("trials", 200, 1, 1000000);
    p["chain_length"] = f.count("chain_length", 10, 1, 1000);
    Circuit ref;
    p["reference"] = f.circuit("reference", "half_adder", 0, ref);
    return p;
}

Json defend_params(Fields &f, const Json &device, uint32_t n) {
    std::string defense = f.choice("defense", "buffer", {"buffer", "mask", "anomaly", "reschedule"});
    Json p;
    if (defense == "buffer") {
        p = crosstalk_params(f, n, false);
    } else if (defense == "mask") {
        p = sense_params(f, device, n, false);
    } else if (defense == "anomaly") {
        p = Json::object();
        p["tenants"] = f.count("tenants", 10, 1, 1000);
        p["submissions"] = f.count("submissions", 20, 1, 100000);
        p["seeds"] = f.count("seeds", 100, 1, 100000);
        p["hub_k"] = f.count("hub_k", 4, 1, n ? n : 64);
        p["window"] = f.count("window", 10, 1, 100000);
        p["threshold"] = f.number("threshold", kAnomalyThreshold, 0.0, 1.0);
    } else {
        p = Json::object();
        p["schedules"] = f.count("schedules", 50, 1, 100000);
        p["qubits_per_tenant"] = f.count("qubits_per_tenant", 4, 1, 20);
        p["gates"] = f.count("gates", 20, 1, 100000);
        if (n && 2 * p["qubits_per_tenant"].get<uint64_t>() > n) {
            f.add(f.at("qubits_per_tenant"), "two tenants do not fit the device");
        }
    }
    Json out = Json::object();
    out["defense"] = defense;
    for (auto it = p.begin(); it != p.end(); ++it) {
        out[it.key()] = it.value();
    }
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------

DeviceProfile device_from_json(const Json &spec) {
    std::vector<ConfigViolation> v;
    Json c = spec.contains("eps_overrides") ? spec : canonical_device(spec, "device", v);
    if (!v.empty()) {
        throw ConfigError(v);
    }
    CouplingGraph g;
    if (c.contains("builtin")) {
        g = builtin_graph(c["builtin"].get<std::string>());
    } else {
        std::vector<Edge> edges;
        for (const auto &e : c["edges"]) {
            edges.emplace_back(e[0].get<uint32_t>(), e[1].get<uint32_t>());
        }
        g = CouplingGraph(c["n"].get<uint32_t>(), edges);
    }
    UniformNoise noise;
    noise.eps_ct = c["eps_ct"].get<double>();
    noise.delta_sense = c["delta_sense"].get<double>();
    noise.p01 = c["readout"]["p01"].get<double>();
    noise.p10 = c["readout"]["p10"].get<double>();
    noise.reset_retain = c["reset_retain"].get<double>();
    noise.durations.t_1q = c["durations"]["t1q"].get<double>();
    noise.durations.t_2q = c["durations"]["t2q"].get<double>();
    noise.durations.t_readout = c["durations"]["tro"].get<double>();
    noise.durations.t_reset = c["durations"]["trst"].get<double>();
    noise.timing_jitter = c["jitter"].get<double>();
    auto d = uniform_profile(c["name"].get<std::string>(), g, noise);
    for (const auto &o : c["eps_overrides"]) {
        d.set_eps(o[0].get<uint32_t>(), o[1].get<uint32_t>(), o[2].get<double>());
    }
    for (const auto &o : c["delta_overrides"]) {
        d.set_delta(o[0].get<uint32_t>(), o[1].get<uint32_t>(), o[2].get<double>());
    }
    d.check();
    return d;
}

DeviceProfile ScenarioConfig::profile() const {
    return device_from_json(device);
}

bool ScenarioConfig::operator==(const ScenarioConfig &o) const {
    return scenario == o.scenario && device == o.device && params == o.params && seed == o.seed && out == o.out;
}

ScenarioConfig load_config(const std::string &document) {
    Json doc;
    try {
        doc = Json::parse(document);
    } catch (const Json::parse_error &e) {
        throw ConfigError({{"document", std::string("JSON parse error: ") + e.what()}});
    }
    std::vector<ConfigViolation> v;
    ScenarioConfig cfg;
    {
        Fields top(doc, "", v);
        if (!doc.is_object()) {
            throw ConfigError(v);
        }
        bool kind_ok = false;
        if (!top.has("scenario")) {
            top.get("scenario");
            top.add("scenario", "required");
        } else {
            std::string name = top.text("scenario", "");
            try {
                cfg.scenario = parse_scenario(name);
                kind_ok = true;
            } catch (const std::exception &) {
                top.add("scenario", "unknown scenario '" + name +
                                        "' (crosstalk, swap-inject, sense, reconstruct, fingerprint, defend-compare)");
            }
        }
        if (!top.has("seed")) {
            top.get("seed");
            top.add("seed", "required");
        } else {
            cfg.seed = top.count("seed", 0, 0);
        }
        cfg.out = top.text("out", "results");
        uint32_t n = 0;
        if (const Json *d = top.get("device")) {
            size_t before = v.size();
            cfg.device = canonical_device(*d, "device", v);
            if (v.size() == before) {
                try {
                    n = device_from_json(cfg.device).n_qubits();
                } catch (const std::exception &e) {
                    top.add("device", e.what());
                }
            }
        } else {
            top.add("device", "required");
        }
        const Json empty = Json::object();
        const Json *pj = top.get("params");
        // Params are only checked against a usable device.
        if (kind_ok && n > 0) {
            Fields pf(pj ? *pj : empty, "params", v);
            switch (cfg.scenario) {
                case ScenarioKind::Crosstalk:
                    cfg.params = crosstalk_params(pf, n, true);
                    break;
                case ScenarioKind::SwapInject:
                    cfg.params = swap_params(pf, n);
                    break;
                case ScenarioKind::Sense:
                    cfg.params = sense_params(pf, cfg.device, n, true);
                    break;
                case ScenarioKind::Reconstruct:
                    cfg.params = reconstruct_params(pf, n);
                    break;
                case ScenarioKind::Fingerprint:
                    cfg.params = fingerprint_params(pf, cfg.device);
                    break;
                case ScenarioKind::DefendCompare:
                    cfg.params = defend_params(pf, cfg.device, n);
                    break;
            }
            cfg.params["expect"] = expect_block(pf);
        }
    }
    if (!v.empty()) {
        throw ConfigError(v);
    }
    return cfg;
}

ScenarioConfig load_config_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError({{"path", "cannot read config file '" + path + "'"}});
    }
    std::ostringstream s;
    s << in.rdbuf();
    return load_config(s.str());
}

std::string serialize(const ScenarioConfig &cfg) {
    Json j = Json::object();
    j["scenario"] = scenario_name(cfg.scenario);
    j["device"] = cfg.device;
    j["params"] = cfg.params;
    j["seed"] = cfg.seed;
    j["out"] = cfg.out;
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Workloads

AttackReport run_anomaly_workload(const CouplingGraph &g, const AnomalyWorkloadParams &p, uint64_t seed) {
    if (p.benign_tenants == 0 || p.submissions == 0 || p.seeds == 0) {
        throw std::invalid_argument("anomaly workload needs tenants, submissions and seeds >= 1");
    }
    const auto hubs = top_k_degree(g, p.hub_k);
    const uint32_t n = g.n_qubits();
    std::vector<double> adversary_score(p.seeds), benign_max(p.seeds);
    std::vector<uint64_t> adversary_flag(p.seeds), benign_flags(p.seeds), skipped(p.seeds);
    parallel_for(p.seeds, p.threads, [&](size_t s) {
        const uint64_t ss = derive(seed, {kTagWorkload, s});
        SubmissionLog log;
        for (size_t r = 0; r < p.submissions; r++) {
            for (uint32_t t = 0; t < p.benign_tenants; t++) {
                const uint64_t w = derive(ss, {r, t});
                const uint32_t k = 2 + static_cast<uint32_t>(w % 3);
                Circuit c = build_random(k, 3 * k, derive(w, {1}), false, false);
                // Other tenants already hold a random subset of the device.
                std::vector<uint32_t> order(n);
                for (uint32_t q = 0; q < n; q++) {
                    order[q] = q;
                }
                const uint32_t busy = std::min<uint32_t>(n - k, 4 + static_cast<uint32_t>((w >> 16) % 5));
                for (uint32_t i = 0; i < busy; i++) {
                    uint32_t j = i + static_cast<uint32_t>(derive(w, {2, i}) % (n - i));
                    std::swap(order[i], order[j]);
                }
                std::vector<uint32_t> free(order.begin() + busy, order.end());
                std::sort(free.begin(), free.end());
                try {
                    auto layout = allocate(c, g, free, AllocationPolicy::CompactBfs);
                    log.append("benign" + std::to_string(t), layout.image(), c.gates.size());
                } catch (const std::exception &) {
                    skipped[s]++;
                }
            }
            log.append("adversary", hubs, 3 * hubs.size());
        }
        auto scores = anomaly_scores(log, g, p.window);
        adversary_score[s] = scores.at("adversary");
        adversary_flag[s] = adversary_score[s] > p.threshold;
        double mx = 0;
        uint64_t flagged = 0;
        for (const auto &[tenant, score] : scores) {
            if (tenant != "adversary") {
                mx = std::max(mx, score);
                flagged += score > p.threshold;
            }
        }
        benign_max[s] = mx;
        benign_flags[s] = flagged;
    });

    AttackReport r;
    r.scenario = "anomaly";
    r.param("hubs", [&] {
        std::string h;
        for (auto q : hubs) {
            h += (h.empty() ? "" : ",") + std::to_string(q);
        }
        return h;
    }());
    r.param("benign_tenants", std::to_string(p.benign_tenants));
    r.param("submissions", std::to_string(p.submissions));
    r.param("seeds", std::to_string(p.seeds));
    r.param("window", std::to_string(p.window));
    r.seeds = {seed};
    Curve adv{"adversary_score", {}}, ben{"benign_max_score", {}};
    uint64_t tp = 0, fp = 0, skip = 0;
    for (size_t s = 0; s < p.seeds; s++) {
        adv.points.push_back({static_cast<double>(s), adversary_score[s], adversary_score[s], adversary_score[s]});
        ben.points.push_back({static_cast<double>(s), benign_max[s], benign_max[s], benign_max[s]});
        tp += adversary_flag[s];
        fp += benign_flags[s];
        skip += skipped[s];
    }
    r.curves = {adv, ben};
    const double benign_total = static_cast<double>(p.seeds) * p.benign_tenants;
    r.set("tpr", static_cast<double>(tp) / static_cast<double>(p.seeds));
    r.set("fpr", static_cast<double>(fp) / benign_total);
    r.set("threshold", p.threshold);
    r.set("mean_adversary_score",
          std::accumulate(adversary_score.begin(), adversary_score.end(), 0.0) / static_cast<double>(p.seeds));
    r.set("max_benign_score", *std::max_element(benign_max.begin(), benign_max.end()));
    r.set("skipped_submissions", static_cast<double>(skip));
    return r;
}

AttackReport run_reschedule_workload(const DeviceProfile &device, const RescheduleWorkloadParams &p, uint64_t seed) {
    if (p.schedules == 0 || 2 * p.qubits_per_tenant > device.n_qubits()) {
        throw std::invalid_argument("reschedule workload needs schedules >= 1 and room for two tenants");
    }
    std::vector<uint64_t> before(p.schedules), after(p.schedules), depth_before(p.schedules),
        depth_after(p.schedules);
    std::vector<char> preserved(p.schedules, 1);
    parallel_for(p.schedules, p.threads, [&](size_t s) {
        std::vector<TenantJob> jobs;
        for (uint64_t t = 0; t < 2; t++) {
            TenantJob j;
            j.tenant = "tenant" + std::to_string(t);
            j.circuit = build_random(p.qubits_per_tenant, p.gates, derive(seed, {kTagWorkload, s, t}), false, true);
            j.shots = 1;
            jobs.push_back(j);
        }
        auto plain = admit(jobs, device, PlanMode::Packed);
        auto aware = admit(jobs, device, PlanMode::Packed, AdmitOptions{true});
        before[s] = crosstalk_conflicts(plain.schedule, device.graph);
        after[s] = crosstalk_conflicts(aware.schedule, device.graph);
        depth_before[s] = plain.schedule.depth();
        depth_after[s] = aware.schedule.depth();
        for (uint32_t t = 0; t < 2; t++) {
            if (!(tenant_gates(aware.schedule, t).gates == tenant_gates(plain.schedule, t).gates)) {
                preserved[s] = 0;
            }
        }
    });
    AttackReport r;
    r.scenario = "reschedule";
    r.param("device", device.name);
    r.param("schedules", std::to_string(p.schedules));
    r.param("qubits_per_tenant", std::to_string(p.qubits_per_tenant));
    r.param("gates", std::to_string(p.gates));
    r.seeds = {seed};
    Curve cb{"conflicts_before", {}}, ca{"conflicts_after", {}};
    double sum_b = 0, sum_a = 0, db = 0, da = 0;
    for (size_t s = 0; s < p.schedules; s++) {
        double x = static_cast<double>(s);
        cb.points.push_back({x, static_cast<double>(before[s]), static_cast<double>(before[s]),
                             static_cast<double>(before[s])});
        ca.points.push_back({x, static_cast<double>(after[s]), static_cast<double>(after[s]),
                             static_cast<double>(after[s])});
        sum_b += static_cast<double>(before[s]);
        sum_a += static_cast<double>(after[s]);
        db += static_cast<double>(depth_before[s]);
        da += static_cast<double>(depth_after[s]);
    }
    r.curves = {cb, ca};
    r.set("conflicts_before", sum_b);
    r.set("conflicts_after", sum_a);
    r.set("depth_overhead", db > 0 ? da / db - 1.0 : 0.0);
    r.set("order_preserved",
          std::all_of(preserved.begin(), preserved.end(), [](char c) { return c != 0; }) ? 1.0 : 0.0);
    return r;
}

// ---------------------------------------------------------------------------
// Orchestration

namespace {

NoiseFlags noise_from(const Json &j) {
    return {j["crosstalk"].get<bool>(), j["sensing"].get<bool>(), j["readout"].get<bool>(),
            j["residual"].get<bool>()};
}

std::vector<uint32_t> qubits_from(const Json &j) {
    return j.get<std::vector<uint32_t>>();
}

CrosstalkAttackParams crosstalk_from(const Json &p, uint64_t seed, size_t threads) {
    CrosstalkAttackParams c;
    c.victim = circuit_from_spec(p["victim"].get<std::string>());
    c.expected = p["expected"].get<std::string>();
    c.n_values = p["n_values"].get<std::vector<size_t>>();
    c.shots = p["shots"].get<uint64_t>();
    c.seed = seed;
    if (p.contains("mode")) {
        c.mode = parse_mode(p["mode"].get<std::string>());
    }
    c.adversary_pair = qubits_from(p["adversary_pair"]);
    c.noise = noise_from(p["noise"]);
    c.threads = threads;
    return c;
}

SensingParams sensing_from(const Json &p, uint64_t seed, size_t threads) {
    SensingParams s;
    s.adversary = p["adversary"].get<uint32_t>();
    s.victims = qubits_from(p["victims"]);
    s.trials = p["trials"].get<uint64_t>();
    s.shots = p["shots"].get<uint64_t>();
    s.calibration_shots = p["calibration_shots"].get<uint64_t>();
    s.random_input = p["random_input"].get<bool>();
    s.mask_defense = p.value("mask_defense", false);
    s.seed = seed;
    s.threads = threads;
    return s;
}

struct Checker {
    std::vector<CheckResult> &out;

    void add(const std::string &name, bool ok, const std::string &detail) {
        out.push_back({name, ok, detail});
    }
};

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
}

double chance_sigma(const AttackReport &r) {
    double c = r.at("chance");
    return std::sqrt(c * (1 - c) / r.at("trials"));
}

void check_above_chance(Checker &ck, const std::string &name, const AttackReport &r) {
    double acc = r.at("accuracy"), c = r.at("chance"), sigma = chance_sigma(r);
    ck.add(name, acc >= c + 4 * sigma,
           "accuracy " + fmt(acc) + " vs chance " + fmt(c) + " + 4 sigma (" + fmt(c + 4 * sigma) + ")");
}

void check_at_chance(Checker &ck, const std::string &name, const AttackReport &r) {
    double acc = r.at("accuracy"), c = r.at("chance"), sigma = chance_sigma(r);
    ck.add(name, std::abs(acc - c) <= 4 * sigma,
           "accuracy " + fmt(acc) + " within chance " + fmt(c) + " +/- 4 sigma (" + fmt(4 * sigma) + ")");
}

void check_trend(Checker &ck, const AttackReport &r, bool need_crossover) {
    double rho = r.at("spearman_rho");
    ck.add("success_falls_with_n", rho <= -0.9, "spearman rho " + fmt(rho) + " <= -0.9");
    if (need_crossover) {
        double x = r.at("crossover_n");
        ck.add("crossover_exists", x >= 0, x >= 0 ? "wrong exceeds success at n = " + fmt(x) : "no crossover");
    }
}

void check_flat(Checker &ck, const AttackReport &r) {
    double s = r.at("max_shift_sigma");
    ck.add("flat_under_buffer", r.at("flat") == 1.0, "largest shift from n=0 is " + fmt(s) + " sigma (limit 3)");
}

bool sensing_possible(const DeviceProfile &d, const SensingParams &s) {
    for (auto v : s.victims) {
        if (d.delta(v, s.adversary) > 0) {
            return true;
        }
    }
    return false;
}

void evaluate_expect(Checker &ck, const Json &expect, const std::vector<AttackReport> &reports) {
    for (auto it = expect.begin(); it != expect.end(); ++it) {
        std::string key = it.key();
        const AttackReport *rep = &reports.front();
        std::string metric = key;
        auto dot = key.find('.');
        if (dot != std::string::npos) {
            rep = nullptr;
            for (const auto &r : reports) {
                if (r.scenario == key.substr(0, dot)) {
                    rep = &r;
                }
            }
            metric = key.substr(dot + 1);
        }
        auto v = rep ? rep->metric(metric) : std::nullopt;
        if (!v) {
            ck.add("expect " + key, false, "no such metric");
            continue;
        }
        bool ok = !std::isnan(*v);
        std::string detail = key + " = " + fmt(*v);
        if (it.value().contains("min")) {
            double lo = it.value()["min"].get<double>();
            ok = ok && *v >= lo;
            detail += ", min " + fmt(lo);
        }
        if (it.value().contains("max")) {
            double hi = it.value()["max"].get<double>();
            ok = ok && *v <= hi;
            detail += ", max " + fmt(hi);
        }
        ck.add("expect " + key, ok, detail);
    }
}

Json number_json(double v) {
    return std::isfinite(v) ? Json(v) : Json(nullptr);
}

std::string csv_number(double v) {
    return std::isfinite(v) ? Json(v).dump() : "nan";
}

std::string file_stem(const std::string &s) {
    std::string out = s;
    std::replace(out.begin(), out.end(), '-', '_');
    return out;
}

}  // namespace

std::string curve_csv(const Curve &c) {
    std::string s = "x,metric,ci_low,ci_high\n";
    for (const auto &p : c.points) {
        s += csv_number(p.x) + "," + csv_number(p.metric) + "," + csv_number(p.ci_low) + "," +
             csv_number(p.ci_high) + "\n";
    }
    return s;
}

bool ReportBundle::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult &c) { return c.passed; });
}

ReportBundle run_scenario(const ScenarioConfig &cfg, const RunOptions &options) {
    const auto device = cfg.profile();
    const Json &p = cfg.params;
    const size_t threads = std::max<size_t>(1, options.threads);
    ReportBundle b;
    Checker ck{b.checks};
    auto &reports = b.reports;

    switch (cfg.scenario) {
        case ScenarioKind::Crosstalk: {
            auto c = crosstalk_from(p, cfg.seed, threads);
            reports.push_back(run_crosstalk_attack(device, c));
            if (c.mode == PlanMode::Buffered) {
                check_flat(ck, reports[0]);
            } else {
                check_trend(ck, reports[0], true);
            }
            break;
        }
        case ScenarioKind::SwapInject: {
            SwapInjectionParams s;
            const bool demo = p["victim_set"] == "demo";
            if (demo) {
                s.victims = {build_swap_demo_victim()};
            } else {
                const uint64_t lo = p["min_qubits"].get<uint64_t>(), hi = p["max_qubits"].get<uint64_t>();
                const uint64_t gpq = p["gates_per_qubit"].get<uint64_t>();
                for (uint64_t i = 0; i < p["count"].get<uint64_t>(); i++) {
                    uint32_t k = static_cast<uint32_t>(lo + derive(cfg.seed, {kTagCircuit, i, 1}) % (hi - lo + 1));
                    s.victims.push_back(build_random(k, gpq * k, derive(cfg.seed, {kTagCircuit, i})));
                }
            }
            s.policy = parse_policy(p["policy"].get<std::string>());
            s.occupancy.qubits = qubits_from(p["occupied"]);
            if (p["occupy_top_k"].get<uint64_t>() > 0) {
                s.occupancy.top_k = p["occupy_top_k"].get<size_t>();
            }
            s.oracle_window = qubits_from(p["oracle_window"]);
            s.threads = threads;
            auto r = run_swap_injection(device.graph, s);
            r.seeds = {cfg.seed};
            r.param("device", device.name);
            r.param("victim_set", p["victim_set"].get<std::string>());
            const double free_swaps = r.at("total_swaps_free"), occ_swaps = r.at("total_swaps_occupied");
            if (demo) {
                const auto &c = s.victims[0];
                const auto occupied = s.occupancy.resolve(device.graph);
                std::vector<uint32_t> all, rest;
                for (uint32_t q = 0; q < device.n_qubits(); q++) {
                    all.push_back(q);
                    if (std::find(occupied.begin(), occupied.end(), q) == occupied.end()) {
                        rest.push_back(q);
                    }
                }
                ck.add("occupation_injects_swaps", occ_swaps >= free_swaps + 1,
                       "swaps free " + fmt(free_swaps) + ", occupied " + fmt(occ_swaps) + " (need +1)");
                if (c.n_qubits <= kExhaustiveMaxLogical && all.size() <= kExhaustiveMaxFree) {
                    auto oracle = [&](const std::vector<uint32_t> &free) {
                        return static_cast<double>(
                            route(c, allocate(c, device.graph, free, AllocationPolicy::ExhaustiveBest), device.graph)
                                .swap_count);
                    };
                    double of = oracle(all), oo = oracle(rest);
                    r.set("oracle_swaps_free", of);
                    r.set("oracle_swaps_occupied", oo);
                    ck.add("counts_match_oracle", of == free_swaps && oo == occ_swaps,
                           "oracle free " + fmt(of) + ", occupied " + fmt(oo));
                }
            } else {
                double med = r.at("median_relative_increase"), mx = r.at("max_relative_increase");
                ck.add("median_increase_positive", med > 0, "median relative increase " + fmt(med));
                ck.add("max_at_least_median", mx >= med, "max " + fmt(mx) + " vs median " + fmt(med));
                if (!s.oracle_window.empty()) {
                    double eligible = 0;
                    for (const auto &v : s.victims) {
                        eligible += v.n_qubits <= kExhaustiveMaxLogical;
                    }
                    double checked = r.at("oracle_checked"), bad = r.at("oracle_violations");
                    ck.add("oracle_restriction_monotone", bad == 0 && checked == eligible,
                           fmt(checked) + " of " + fmt(eligible) + " small victims checked, " + fmt(bad) +
                               " violations");
                }
            }
            reports.push_back(r);
            break;
        }
        case ScenarioKind::Sense: {
            auto s = sensing_from(p, cfg.seed, threads);
            reports.push_back(run_qubit_sensing(device, s));
            const auto &r = reports[0];
            if (s.mask_defense) {
                check_at_chance(ck, "mask_blinds_adversary", r);
                ck.add("unmask_exact", r.at("unmask_exact") == 1.0, "victim histogram recovered bit-exactly");
            } else if (sensing_possible(device, s)) {
                check_above_chance(ck, "sensing_beats_chance", r);
            } else {
                check_at_chance(ck, "no_signal_is_chance", r);
            }
            break;
        }
        case ScenarioKind::Reconstruct: {
            ReconstructionParams rp;
            rp.candidate0 = circuit_from_spec(p["candidates"][0].get<std::string>());
            rp.candidate1 = circuit_from_spec(p["candidates"][1].get<std::string>());
            rp.probe_qubits = qubits_from(p["probe_qubits"]);
            rp.trials = p["trials"].get<uint64_t>();
            rp.shots = p["shots"].get<uint64_t>();
            rp.training_runs = p["training_runs"].get<uint64_t>();
            rp.seed = cfg.seed;
            rp.threads = threads;
            reports.push_back(run_reconstruction(device, rp));
            bool informative = device.reset_retain > 0 && !(rp.candidate0.gates == rp.candidate1.gates);
            if (informative) {
                check_above_chance(ck, "reconstruction_beats_chance", reports[0]);
            } else {
                check_at_chance(ck, "control_is_chance", reports[0]);
            }
            break;
        }
        case ScenarioKind::Fingerprint: {
            FingerprintParams fp;
            fp.mode = parse_fingerprint_mode(p["mode"].get<std::string>());
            fp.samples = p["samples"].get<uint64_t>();
            fp.training_samples = p["training_samples"].get<uint64_t>();
            fp.trials = p["trials"].get<uint64_t>();
            fp.chain_length = p["chain_length"].get<size_t>();
            fp.reference = circuit_from_spec(p["reference"].get<std::string>());
            fp.seed = cfg.seed;
            fp.threads = threads;
            std::vector<DeviceProfile> profiles;
            for (const auto &d : p["profiles"]) {
                profiles.push_back(device_from_json(d));
            }
            reports.push_back(fingerprint_devices(profiles, fp));
            bool distinguishable = false;
            for (size_t i = 1; i < profiles.size(); i++) {
                auto a = profiles[0], b = profiles[i];
                a.name = b.name;
                distinguishable = distinguishable || !(a == b);
            }
            if (distinguishable) {
                check_above_chance(ck, "fingerprint_beats_chance", reports[0]);
            } else {
                check_at_chance(ck, "identical_profiles_are_chance", reports[0]);
            }
            break;
        }
        case ScenarioKind::DefendCompare: {
            const std::string defense = p["defense"].get<std::string>();
            if (defense == "buffer") {
                auto c = crosstalk_from(p, cfg.seed, threads);
                c.mode = PlanMode::Packed;
                auto packed = run_crosstalk_attack(device, c);
                packed.scenario = "packed";
                c.mode = PlanMode::Buffered;
                auto buffered = run_crosstalk_attack(device, c);
                buffered.scenario = "buffered";
                check_trend(ck, packed, false);
                check_flat(ck, buffered);
                reports = {packed, buffered};
            } else if (defense == "mask") {
                auto s = sensing_from(p, cfg.seed, threads);
                s.mask_defense = false;
                auto open = run_qubit_sensing(device, s);
                open.scenario = "unmasked";
                s.mask_defense = true;
                auto masked = run_qubit_sensing(device, s);
                masked.scenario = "masked";
                if (sensing_possible(device, s)) {
                    check_above_chance(ck, "unmasked_sensing_beats_chance", open);
                }
                check_at_chance(ck, "mask_blinds_adversary", masked);
                ck.add("unmask_exact", masked.at("unmask_exact") == 1.0, "victim histogram recovered bit-exactly");
                reports = {open, masked};
            } else if (defense == "anomaly") {
                AnomalyWorkloadParams a;
                a.benign_tenants = p["tenants"].get<uint32_t>();
                a.submissions = p["submissions"].get<size_t>();
                a.seeds = p["seeds"].get<size_t>();
                a.hub_k = p["hub_k"].get<size_t>();
                a.window = p["window"].get<size_t>();
                a.threshold = p["threshold"].get<double>();
                a.threads = threads;
                auto r = run_anomaly_workload(device.graph, a, cfg.seed);
                ck.add("tpr", r.at("tpr") >= 0.9, "true positive rate " + fmt(r.at("tpr")) + " (min 0.9)");
                ck.add("fpr", r.at("fpr") <= 0.1, "false positive rate " + fmt(r.at("fpr")) + " (max 0.1)");
                reports = {r};
            } else {
                RescheduleWorkloadParams rp;
                rp.schedules = p["schedules"].get<size_t>();
                rp.qubits_per_tenant = p["qubits_per_tenant"].get<uint32_t>();
                rp.gates = p["gates"].get<size_t>();
                rp.threads = threads;
                auto r = run_reschedule_workload(device, rp, cfg.seed);
                ck.add("no_conflicts_after", r.at("conflicts_after") == 0,
                       fmt(r.at("conflicts_before")) + " conflicts before, " + fmt(r.at("conflicts_after")) +
                           " after");
                ck.add("tenant_order_preserved", r.at("order_preserved") == 1.0, "per-tenant gate order");
                reports = {r};
            }
            break;
        }
    }
    evaluate_expect(ck, p["expect"], reports);

    // Machine-readable results.
    Json config = Json::object();
    config["scenario"] = scenario_name(cfg.scenario);
    config["device"] = cfg.device;
    config["params"] = cfg.params;
    config["seed"] = cfg.seed;
    Json reps = Json::array();
    for (const auto &r : reports) {
        Json rj = Json::object();
        rj["name"] = r.scenario;
        Json params = Json::object();
        for (const auto &[k, v] : r.parameters) {
            params[k] = v;
        }
        rj["parameters"] = params;
        Json metrics = Json::object();
        for (const auto &[k, v] : r.metrics) {
            metrics[k] = number_json(v);
        }
        rj["metrics"] = metrics;
        Json curves = Json::object();
        for (const auto &c : r.curves) {
            std::string file = file_stem(r.scenario) + "_" + c.name + ".csv";
            Json pts = Json::array();
            for (const auto &pt : c.points) {
                pts.push_back({number_json(pt.x), number_json(pt.metric), number_json(pt.ci_low),
                               number_json(pt.ci_high)});
            }
            curves[c.name] = {{"file", file}, {"columns", {"x", "metric", "ci_low", "ci_high"}}, {"points", pts}};
            b.curve_files.emplace_back(file, curve_csv(c));
        }
        rj["curves"] = curves;
        if (!r.labels.empty()) {
            rj["labels"] = r.labels;
            rj["confusion"] = r.confusion;
        }
        rj["seeds"] = r.seeds;
        rj["notes"] = r.notes;
        reps.push_back(rj);
    }
    Json checks = Json::array();
    for (const auto &c : b.checks) {
        checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    }
    b.results = Json::object();
    b.results["scenario"] = scenario_name(cfg.scenario);
    b.results["config"] = config;
    b.results["reports"] = reps;
    b.results["checks"] = checks;
    b.results["passed"] = b.passed();

    // Human-readable summary.
    std::ostringstream s;
    s << "scenario: " << scenario_name(cfg.scenario) << "\n";
    s << "device:   " << device.name << " (" << device.n_qubits() << " qubits, " << device.graph.edges().size()
      << " edges)\n";
    s << "seed:     " << cfg.seed << "\n";
    for (const auto &r : reports) {
        s << "\n[" << r.scenario << "]\n";
        for (const auto &[k, v] : r.parameters) {
            s << "  " << k << " = " << v << "\n";
        }
        for (const auto &[k, v] : r.metrics) {
            s << "  " << k << ": " << fmt(v) << "\n";
        }
        for (const auto &n : r.notes) {
            s << "  note: " << n << "\n";
        }
    }
    s << "\nchecks:\n";
    for (const auto &c : b.checks) {
        s << "  " << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
    }
    s << (b.passed() ? "all checks passed\n" : "some checks failed\n");
    b.summary = s.str();
    return b;
}

void write_file_atomic(const std::string &path, const std::string &contents) {
    fs::path target(path);
    if (target.has_parent_path()) {
        fs::create_directories(target.parent_path());
    }
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot write '" + tmp.string() + "'");
        }
        out << contents;
        out.flush();
        if (!out) {
            throw std::runtime_error("write failed for '" + tmp.string() + "'");
        }
    }
    fs::rename(tmp, target);
}

void write_bundle(const ReportBundle &bundle, const std::string &dir) {
    fs::create_directories(dir);
    write_file_atomic((fs::path(dir) / "results.json").string(), bundle.results.dump(2) + "\n");
    for (const auto &[name, contents] : bundle.curve_files) {
        write_file_atomic((fs::path(dir) / name).string(), contents);
    }
    write_file_atomic((fs::path(dir) / "summary.txt").string(), bundle.summary);
}

}  // namespace qshare

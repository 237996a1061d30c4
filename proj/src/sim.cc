#include "qshare/sim.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "qshare/rng.h"

namespace qshare {

std::string bits_to_key(uint64_t bits, uint32_t n_qubits) {
    std::string key(n_qubits, '0');
    for (uint32_t q = 0; q < n_qubits; q++) {
        if ((bits >> q) & 1) {
            key[q] = '1';
        }
    }
    return key;
}

uint64_t key_to_bits(const std::string &key) {
    if (key.size() > 64) {
        throw std::invalid_argument("bitstring longer than 64 bits");
    }
    uint64_t bits = 0;
    for (size_t q = 0; q < key.size(); q++) {
        if (key[q] == '1') {
            bits |= uint64_t{1} << q;
        } else if (key[q] != '0') {
            throw std::invalid_argument("bitstring '" + key + "' contains a non-binary character");
        }
    }
    return bits;
}

void Histogram::add(const std::string &key, uint64_t count) {
    if (key.size() != n_qubits_) {
        throw std::invalid_argument("histogram key '" + key + "' does not have " + std::to_string(n_qubits_) +
                                    " bits");
    }
    key_to_bits(key);
    if (count == 0) {
        return;
    }
    counts_[key] += count;
    shots_ += count;
}

void Histogram::add_bits(uint64_t bits, uint64_t count) {
    if (count == 0) {
        return;
    }
    counts_[bits_to_key(bits, n_qubits_)] += count;
    shots_ += count;
}

uint64_t Histogram::count(const std::string &key) const {
    auto it = counts_.find(key);
    return it == counts_.end() ? 0 : it->second;
}

double Histogram::probability(const std::string &key) const {
    return shots_ == 0 ? 0.0 : static_cast<double>(count(key)) / static_cast<double>(shots_);
}

Histogram Histogram::marginal(const std::vector<uint32_t> &qubits) const {
    Histogram out(static_cast<uint32_t>(qubits.size()));
    for (auto q : qubits) {
        if (q >= n_qubits_) {
            throw std::out_of_range("marginal qubit " + std::to_string(q) + " out of range");
        }
    }
    for (const auto &[key, c] : counts_) {
        std::string sub(qubits.size(), '0');
        for (size_t i = 0; i < qubits.size(); i++) {
            sub[i] = key[qubits[i]];
        }
        out.add(sub, c);
    }
    return out;
}

double Histogram::p_one(uint32_t q) const {
    if (q >= n_qubits_) {
        throw std::out_of_range("qubit " + std::to_string(q) + " out of range");
    }
    uint64_t ones = 0;
    for (const auto &[key, c] : counts_) {
        if (key[q] == '1') {
            ones += c;
        }
    }
    return shots_ == 0 ? 0.0 : static_cast<double>(ones) / static_cast<double>(shots_);
}

Histogram Histogram::xor_keys(const std::string &mask) const {
    if (mask.size() != n_qubits_) {
        throw std::invalid_argument("mask length " + std::to_string(mask.size()) + " != " +
                                    std::to_string(n_qubits_));
    }
    uint64_t m = key_to_bits(mask);
    Histogram out(n_qubits_);
    for (const auto &[key, c] : counts_) {
        out.add_bits(key_to_bits(key) ^ m, c);
    }
    return out;
}

std::string Histogram::str() const {
    std::ostringstream out;
    out << "{";
    bool first = true;
    for (const auto &[key, c] : counts_) {
        out << (first ? "" : ", ") << '"' << key << "\": " << c;
        first = false;
    }
    out << "}";
    return out.str();
}

namespace {

template <typename T>
void apply_gate(std::vector<T> &amps, GateKind kind, const uint32_t *qs, double angle) {
    const size_t size = amps.size();
    switch (kind) {
        case GateKind::X: {
            size_t m = size_t{1} << qs[0];
            for (size_t i = 0; i < size; i++) {
                if (!(i & m)) {
                    std::swap(amps[i], amps[i | m]);
                }
            }
            break;
        }
        case GateKind::H: {
            size_t m = size_t{1} << qs[0];
            const double r = M_SQRT1_2;
            for (size_t i = 0; i < size; i++) {
                if (!(i & m)) {
                    T a = amps[i];
                    T b = amps[i | m];
                    amps[i] = (a + b) * r;
                    amps[i | m] = (a - b) * r;
                }
            }
            break;
        }
        case GateKind::RY: {
            size_t m = size_t{1} << qs[0];
            double c = std::cos(angle / 2);
            double s = std::sin(angle / 2);
            for (size_t i = 0; i < size; i++) {
                if (!(i & m)) {
                    T a = amps[i];
                    T b = amps[i | m];
                    amps[i] = a * c - b * s;
                    amps[i | m] = a * s + b * c;
                }
            }
            break;
        }
        case GateKind::CNOT: {
            size_t c = size_t{1} << qs[0];
            size_t t = size_t{1} << qs[1];
            for (size_t i = 0; i < size; i++) {
                if ((i & c) && !(i & t)) {
                    std::swap(amps[i], amps[i | t]);
                }
            }
            break;
        }
        case GateKind::CCX: {
            size_t c = (size_t{1} << qs[0]) | (size_t{1} << qs[1]);
            size_t t = size_t{1} << qs[2];
            for (size_t i = 0; i < size; i++) {
                if ((i & c) == c && !(i & t)) {
                    std::swap(amps[i], amps[i | t]);
                }
            }
            break;
        }
        case GateKind::SWAP: {
            size_t a = size_t{1} << qs[0];
            size_t b = size_t{1} << qs[1];
            for (size_t i = 0; i < size; i++) {
                if ((i & a) && !(i & b)) {
                    std::swap(amps[i], amps[(i ^ a) | b]);
                }
            }
            break;
        }
    }
}

void check_fits(const Circuit &circuit, uint32_t limit, const char *what) {
    if (circuit.n_qubits > limit) {
        throw std::invalid_argument(std::string(what) + ": " + std::to_string(circuit.n_qubits) +
                                    " qubits exceeds the limit of " + std::to_string(limit));
    }
}

struct VectorHash {
    size_t operator()(const std::vector<uint64_t> &v) const {
        uint64_t h = 0x84222325ULL;
        for (auto w : v) {
            h = mix64(h ^ w);
        }
        return static_cast<size_t>(h);
    }
};

struct ShotResult {
    uint64_t observed;
    uint64_t truth;
};

// A crosstalk opportunity: spectator `qubit` next to operand `operand` of an
// expanded multi-qubit gate.
struct CrosstalkSite {
    uint32_t stream;
    uint64_t ordinal;
    uint32_t qubit;
    uint32_t operand;
    double p;
    // Position in the spectator's block gate list before which the X lands,
    // or -1 when no quantum gate follows and the flip is classical.
    int64_t insert_before;
    uint32_t local;
};

struct QuantumGate {
    GateKind kind;
    uint32_t qs[3];
    double angle;
};

// Qubits touched by at least one quantum gate of one stream, simulated
// jointly. Outcome distributions are cached per (bias, fault pattern).
struct Block {
    uint32_t stream;
    std::vector<uint32_t> qubits;
    std::vector<QuantumGate> gates;
    std::unordered_map<std::vector<uint64_t>, std::vector<double>, VectorHash> cache;
    size_t cached_doubles = 0;
};

constexpr size_t kCacheBudget = size_t{1} << 23;

// Compiled form of a RunSpec: everything that does not change between shots.
class ShotEngine {
   public:
    explicit ShotEngine(const RunSpec &spec) : spec_(spec), n_(spec.device.n_qubits()) {
        spec.device.check();
        require_valid(spec.circuit);
        if (n_ > kMaxDeviceQubits) {
            throw std::invalid_argument("device has more than 64 qubits");
        }
        if (spec.circuit.n_qubits > n_) {
            throw std::invalid_argument("circuit '" + spec.circuit.name + "' uses " +
                                        std::to_string(spec.circuit.n_qubits) + " qubits but device '" +
                                        spec.device.name + "' has " + std::to_string(n_));
        }
        if (spec.shots == 0) {
            throw std::invalid_argument("shots must be at least 1");
        }
        if (!spec.initial_bias.empty() && spec.initial_bias.size() != n_) {
            throw std::invalid_argument("initial_bias needs one angle per device qubit");
        }
        stream_of_.assign(n_, 0);
        if (!spec.stream_of_qubit.empty()) {
            if (spec.stream_of_qubit.size() != n_) {
                throw std::invalid_argument("stream_of_qubit needs one entry per device qubit");
            }
            stream_of_ = spec.stream_of_qubit;
        }
        seeds_ = spec.stream_seeds.empty() ? std::vector<uint64_t>{spec.seed} : spec.stream_seeds;
        for (auto s : stream_of_) {
            if (s >= seeds_.size()) {
                throw std::invalid_argument("stream index without a seed");
            }
        }
        compile();
    }

    ShotResult shot(uint64_t shot, const std::vector<double> &theta) {
        const auto &noise = spec_.noise;
        uint64_t classical = peeled_flips_;

        for (auto &k : keys_) {
            k.clear();
        }
        for (size_t b = 0; b < blocks_.size(); b++) {
            append_bias_key(blocks_[b], theta, keys_[b]);
            flip_starts_[b] = keys_[b].size();
        }
        if (noise.crosstalk) {
            for (const auto &site : sites_) {
                double u = uniform(seeds_[site.stream], {kTagCrosstalk, shot, site.ordinal, site.qubit, site.operand});
                if (u >= site.p) {
                    continue;
                }
                if (site.insert_before < 0) {
                    classical ^= uint64_t{1} << site.qubit;
                } else {
                    keys_[block_of_[site.qubit]].push_back((static_cast<uint64_t>(site.insert_before) << 6) |
                                                           site.local);
                }
            }
        }

        uint64_t truth = 0;
        for (size_t b = 0; b < blocks_.size(); b++) {
            auto &block = blocks_[b];
            canonicalize_flips(keys_[b], flip_starts_[b]);
            const auto &cdf = distribution(block, keys_[b], flip_starts_[b], theta);
            double u = uniform(seeds_[block.stream], {kTagMeasure, shot});
            size_t idx = static_cast<size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
            idx = std::min(idx, cdf.size() - 1);
            for (size_t l = 0; l < block.qubits.size(); l++) {
                if ((idx >> l) & 1) {
                    truth |= uint64_t{1} << block.qubits[l];
                }
            }
        }
        for (auto q : idle_) {
            double t = theta.empty() ? 0.0 : theta[q];
            if (t != 0.0) {
                double s = std::sin(t / 2);
                if (uniform(seeds_[stream_of_[q]], {kTagResidual, shot, q}) < s * s) {
                    truth |= uint64_t{1} << q;
                }
            }
        }
        truth ^= classical;

        uint64_t observed = truth;
        if (noise.sensing) {
            for (uint32_t q = 0; q < n_; q++) {
                for (uint32_t m : spec_.device.graph.neighbors(q)) {
                    if (!((truth >> m) & 1)) {
                        continue;
                    }
                    double d = spec_.device.delta(m, q);
                    if (d > 0 && uniform(seeds_[stream_of_[q]], {kTagSense, shot, m, q}) < d) {
                        observed ^= uint64_t{1} << q;
                    }
                }
            }
        }
        if (noise.readout) {
            for (uint32_t q = 0; q < n_; q++) {
                const auto &r = spec_.device.readout[q];
                double p = ((observed >> q) & 1) ? r.p10 : r.p01;
                if (p > 0 && uniform(seeds_[stream_of_[q]], {kTagReadout, shot, q}) < p) {
                    observed ^= uint64_t{1} << q;
                }
            }
        }
        return {observed, truth};
    }

    uint32_t n_device() const {
        return n_;
    }

   private:
    void compile() {
        // SWAP becomes three CNOTs so crosstalk fires once per physical CNOT.
        std::vector<Gate> expanded;
        for (const auto &g : spec_.circuit.gates) {
            if (g.kind == GateKind::SWAP) {
                uint32_t a = g.qubits[0], b = g.qubits[1];
                expanded.push_back({GateKind::CNOT, {a, b}});
                expanded.push_back({GateKind::CNOT, {b, a}});
                expanded.push_back({GateKind::CNOT, {a, b}});
            } else {
                expanded.push_back(g);
            }
        }

        // X gates after the last other gate on a qubit commute to the
        // measurement and are applied classically.
        std::vector<int64_t> last_non_x(n_, -1);
        for (size_t i = 0; i < expanded.size(); i++) {
            if (expanded[i].kind != GateKind::X) {
                for (auto q : expanded[i].qubits) {
                    last_non_x[q] = static_cast<int64_t>(i);
                }
            }
        }
        std::vector<bool> quantum(expanded.size(), true);
        for (size_t i = 0; i < expanded.size(); i++) {
            const auto &g = expanded[i];
            if (g.kind == GateKind::X && static_cast<int64_t>(i) > last_non_x[g.qubits[0]]) {
                quantum[i] = false;
                peeled_flips_ ^= uint64_t{1} << g.qubits[0];
            }
        }

        std::vector<bool> active(n_, false);
        for (size_t i = 0; i < expanded.size(); i++) {
            const auto &g = expanded[i];
            uint32_t s = stream_of_[g.qubits[0]];
            for (auto q : g.qubits) {
                if (stream_of_[q] != s) {
                    throw std::invalid_argument("gate " + g.str() + " spans two random streams");
                }
            }
            if (quantum[i]) {
                for (auto q : g.qubits) {
                    active[q] = true;
                }
            }
        }

        block_of_.assign(n_, -1);
        local_of_.assign(n_, 0);
        std::map<uint32_t, size_t> block_for_stream;
        for (uint32_t q = 0; q < n_; q++) {
            if (!active[q]) {
                idle_.push_back(q);
                continue;
            }
            auto [it, inserted] = block_for_stream.emplace(stream_of_[q], blocks_.size());
            if (inserted) {
                blocks_.push_back(Block{});
                blocks_.back().stream = stream_of_[q];
            }
            auto &block = blocks_[it->second];
            block_of_[q] = static_cast<int>(it->second);
            local_of_[q] = static_cast<uint32_t>(block.qubits.size());
            block.qubits.push_back(q);
        }
        for (const auto &block : blocks_) {
            if (block.qubits.size() > kMaxSimQubits) {
                throw std::invalid_argument("circuit '" + spec_.circuit.name + "' entangles " +
                                            std::to_string(block.qubits.size()) + " qubits; limit is " +
                                            std::to_string(kMaxSimQubits));
            }
        }

        // Position of each quantum gate inside its block, plus for every qubit
        // the ascending list of (expanded index, block position) of its gates.
        std::vector<std::vector<std::pair<size_t, size_t>>> gates_on(n_);
        for (size_t i = 0; i < expanded.size(); i++) {
            if (!quantum[i]) {
                continue;
            }
            const auto &g = expanded[i];
            auto &block = blocks_[block_of_[g.qubits[0]]];
            QuantumGate qg{g.kind, {0, 0, 0}, g.angle};
            for (size_t k = 0; k < g.qubits.size(); k++) {
                qg.qs[k] = local_of_[g.qubits[k]];
            }
            size_t pos = block.gates.size();
            block.gates.push_back(qg);
            for (auto q : g.qubits) {
                gates_on[q].emplace_back(i, pos);
            }
        }

        std::vector<uint64_t> ordinal_counter(seeds_.size(), 0);
        for (size_t i = 0; i < expanded.size(); i++) {
            const auto &g = expanded[i];
            uint32_t stream = stream_of_[g.qubits[0]];
            uint64_t ordinal = ordinal_counter[stream]++;
            if (!g.is_multi_qubit()) {
                continue;
            }
            for (uint32_t s : g.qubits) {
                for (uint32_t q : spec_.device.graph.neighbors(s)) {
                    if (std::find(g.qubits.begin(), g.qubits.end(), q) != g.qubits.end()) {
                        continue;
                    }
                    double p = spec_.device.eps(q, s);
                    if (p <= 0) {
                        continue;
                    }
                    CrosstalkSite site{stream, ordinal, q, s, p, -1, 0};
                    for (auto [idx, pos] : gates_on[q]) {
                        if (idx > i) {
                            site.insert_before = static_cast<int64_t>(pos);
                            site.local = local_of_[q];
                            break;
                        }
                    }
                    sites_.push_back(site);
                }
            }
        }

        keys_.assign(blocks_.size(), {});
        flip_starts_.assign(blocks_.size(), 0);
    }

    void append_bias_key(const Block &block, const std::vector<double> &theta, std::vector<uint64_t> &key) const {
        if (theta.empty()) {
            key.push_back(0);
            return;
        }
        key.push_back(1);
        for (auto q : block.qubits) {
            key.push_back(std::bit_cast<uint64_t>(theta[q]));
        }
    }

    // Sort the flip codes and drop pairs: two X at the same point cancel.
    static void canonicalize_flips(std::vector<uint64_t> &key, size_t start) {
        std::sort(key.begin() + static_cast<std::ptrdiff_t>(start), key.end());
        size_t w = start;
        for (size_t r = start; r < key.size();) {
            if (r + 1 < key.size() && key[r] == key[r + 1]) {
                r += 2;
            } else {
                key[w++] = key[r++];
            }
        }
        key.resize(w);
    }

    const std::vector<double> &distribution(Block &block, const std::vector<uint64_t> &key, size_t flip_start,
                                            const std::vector<double> &theta) {
        auto it = block.cache.find(key);
        if (it != block.cache.end()) {
            return it->second;
        }
        const size_t size = size_t{1} << block.qubits.size();
        std::vector<double> amps(size, 0.0);
        amps[0] = 1.0;
        if (!theta.empty()) {
            for (size_t l = 0; l < block.qubits.size(); l++) {
                double t = theta[block.qubits[l]];
                if (t != 0.0) {
                    uint32_t lq = static_cast<uint32_t>(l);
                    apply_gate(amps, GateKind::RY, &lq, t);
                }
            }
        }
        size_t f = flip_start;
        for (size_t pos = 0; pos < block.gates.size(); pos++) {
            while (f < key.size() && (key[f] >> 6) == pos) {
                uint32_t lq = static_cast<uint32_t>(key[f] & 63);
                apply_gate(amps, GateKind::X, &lq, 0.0);
                f++;
            }
            const auto &g = block.gates[pos];
            apply_gate(amps, g.kind, g.qs, g.angle);
        }
        std::vector<double> cdf(size);
        double acc = 0;
        for (size_t i = 0; i < size; i++) {
            acc += amps[i] * amps[i];
            cdf[i] = acc;
        }
        if (block.cached_doubles + size > kCacheBudget) {
            scratch_ = std::move(cdf);
            return scratch_;
        }
        block.cached_doubles += size;
        return block.cache.emplace(key, std::move(cdf)).first->second;
    }

    const RunSpec &spec_;
    uint32_t n_;
    std::vector<uint32_t> stream_of_;
    std::vector<uint64_t> seeds_;
    uint64_t peeled_flips_ = 0;
    std::vector<Block> blocks_;
    std::vector<int> block_of_;
    std::vector<uint32_t> local_of_;
    std::vector<uint32_t> idle_;
    std::vector<CrosstalkSite> sites_;
    std::vector<std::vector<uint64_t>> keys_;
    std::vector<size_t> flip_starts_;
    std::vector<double> scratch_;
};

uint64_t circuit_mask(uint32_t n) {
    return n >= 64 ? ~uint64_t{0} : (uint64_t{1} << n) - 1;
}

}  // namespace

std::vector<std::complex<double>> statevector(const Circuit &circuit) {
    check_fits(circuit, kMaxSimQubits, "statevector");
    require_valid(circuit);
    std::vector<std::complex<double>> amps(size_t{1} << circuit.n_qubits, 0.0);
    amps[0] = 1.0;
    for (const auto &g : circuit.gates) {
        apply_gate(amps, g.kind, g.qubits.data(), g.angle);
    }
    return amps;
}

Histogram run(const RunSpec &spec) {
    ShotEngine engine(spec);
    std::vector<double> theta;
    if (spec.noise.residual && !spec.initial_bias.empty()) {
        theta = spec.initial_bias;
    }
    uint64_t keep = circuit_mask(spec.circuit.n_qubits);
    std::unordered_map<uint64_t, uint64_t> tally;
    for (uint64_t s = 0; s < spec.shots; s++) {
        tally[engine.shot(s, theta).observed & keep]++;
    }
    Histogram h(spec.circuit.n_qubits);
    for (auto [bits, c] : tally) {
        h.add_bits(bits, c);
    }
    return h;
}

std::vector<Histogram> run_sequence(const std::vector<RunSpec> &specs) {
    if (specs.empty()) {
        throw std::invalid_argument("run_sequence needs at least one spec");
    }
    for (const auto &s : specs) {
        if (!(s.device == specs.front().device)) {
            throw std::invalid_argument("run_sequence specs must share one device");
        }
    }
    std::vector<ShotEngine> engines;
    engines.reserve(specs.size());
    uint64_t max_shots = 0;
    for (const auto &s : specs) {
        engines.emplace_back(s);
        max_shots = std::max(max_shots, s.shots);
    }
    const auto &device = specs.front().device;
    const uint32_t n = device.n_qubits();
    const double scale = device.reset_retain * M_PI;

    std::vector<std::unordered_map<uint64_t, uint64_t>> tallies(specs.size());
    bool have_previous = false;
    uint64_t previous = 0;
    std::vector<double> theta(n, 0.0);
    const std::vector<double> none;
    for (uint64_t s = 0; s < max_shots; s++) {
        for (size_t k = 0; k < specs.size(); k++) {
            if (s >= specs[k].shots) {
                continue;
            }
            bool biased = specs[k].noise.residual && have_previous && scale != 0.0;
            if (biased) {
                for (uint32_t q = 0; q < n; q++) {
                    theta[q] = ((previous >> q) & 1) ? scale : 0.0;
                }
            }
            auto r = engines[k].shot(s, biased ? theta : none);
            tallies[k][r.observed & circuit_mask(specs[k].circuit.n_qubits)]++;
            previous = r.truth;
            have_previous = true;
        }
    }
    std::vector<Histogram> out;
    for (size_t k = 0; k < specs.size(); k++) {
        Histogram h(specs[k].circuit.n_qubits);
        for (auto [bits, c] : tallies[k]) {
            h.add_bits(bits, c);
        }
        out.push_back(std::move(h));
    }
    return out;
}

double success_probability(const Histogram &h, const std::string &expected) {
    if (expected.size() != h.n_qubits()) {
        throw std::invalid_argument("expected bitstring '" + expected + "' does not match " +
                                    std::to_string(h.n_qubits()) + "-qubit histogram");
    }
    return h.probability(expected);
}

double tvd(const Histogram &a, const Histogram &b) {
    if (a.n_qubits() != b.n_qubits()) {
        throw std::invalid_argument("tvd: histograms have different qubit counts");
    }
    if (a.shots() == 0 || b.shots() == 0) {
        throw std::invalid_argument("tvd: empty histogram");
    }
    double sum = 0;
    for (const auto &[key, c] : a.counts()) {
        sum += std::abs(a.probability(key) - b.probability(key));
    }
    for (const auto &[key, c] : b.counts()) {
        if (a.count(key) == 0) {
            sum += b.probability(key);
        }
    }
    return sum / 2;
}

}  // namespace qshare

#include "qshare/attacks.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <set>
#include <stdexcept>
#include <thread>

#include "qshare/rng.h"

namespace qshare {

void AttackReport::set(const std::string &name, double value) {
    for (auto &[k, v] : metrics) {
        if (k == name) {
            v = value;
            return;
        }
    }
    metrics.emplace_back(name, value);
}

std::optional<double> AttackReport::metric(const std::string &name) const {
    for (const auto &[k, v] : metrics) {
        if (k == name) {
            return v;
        }
    }
    return std::nullopt;
}

double AttackReport::at(const std::string &name) const {
    auto v = metric(name);
    if (!v) {
        throw std::out_of_range("report '" + scenario + "' has no metric '" + name + "'");
    }
    return *v;
}

const Curve &AttackReport::curve(const std::string &name) const {
    for (const auto &c : curves) {
        if (c.name == name) {
            return c;
        }
    }
    throw std::out_of_range("report '" + scenario + "' has no curve '" + name + "'");
}

void AttackReport::param(const std::string &name, const std::string &value) {
    parameters.emplace_back(name, value);
}

std::pair<double, double> wilson_interval(uint64_t k, uint64_t n, double z) {
    if (n == 0) {
        return {0.0, 1.0};
    }
    double nn = static_cast<double>(n);
    double p = static_cast<double>(k) / nn;
    double z2 = z * z;
    double center = (p + z2 / (2 * nn)) / (1 + z2 / nn);
    double half = z * std::sqrt(p * (1 - p) / nn + z2 / (4 * nn * nn)) / (1 + z2 / nn);
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

namespace {

std::vector<double> average_ranks(const std::vector<double> &v) {
    std::vector<size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (size_t i = 0; i < idx.size();) {
        size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) {
            j++;
        }
        double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (size_t k = i; k <= j; k++) {
            ranks[idx[k]] = r;
        }
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman(const std::vector<double> &x, const std::vector<double> &y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw std::invalid_argument("spearman needs two equal-length samples of size >= 2");
    }
    auto rx = average_ranks(x), ry = average_ranks(y);
    double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / static_cast<double>(rx.size());
    double my = std::accumulate(ry.begin(), ry.end(), 0.0) / static_cast<double>(ry.size());
    double sxy = 0, sxx = 0, syy = 0;
    for (size_t i = 0; i < rx.size(); i++) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0 || syy == 0) {
        return std::nan("");
    }
    return sxy / std::sqrt(sxx * syy);
}

void parallel_for(size_t n, size_t threads, const std::function<void(size_t)> &fn) {
    threads = std::max<size_t>(1, std::min(threads, n));
    if (threads == 1) {
        for (size_t i = 0; i < n; i++) {
            fn(i);
        }
        return;
    }
    std::atomic<size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (size_t t = 0; t < threads; t++) {
        pool.emplace_back([&] {
            for (size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) {
                        error = std::current_exception();
                    }
                    next = n;
                }
            }
        });
    }
    for (auto &t : pool) {
        t.join();
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

namespace {

std::string join(const std::vector<uint32_t> &v) {
    std::string s;
    for (size_t i = 0; i < v.size(); i++) {
        s += (i ? "," : "") + std::to_string(v[i]);
    }
    return s;
}

std::string join(const std::vector<size_t> &v) {
    std::string s;
    for (size_t i = 0; i < v.size(); i++) {
        s += (i ? "," : "") + std::to_string(v[i]);
    }
    return s;
}

CurvePoint proportion_point(double x, uint64_t k, uint64_t n) {
    auto [lo, hi] = wilson_interval(k, n);
    return {x, static_cast<double>(k) / static_cast<double>(n), lo, hi};
}

CurvePoint exact_point(double x, double v) {
    return {x, v, v, v};
}

double median(std::vector<double> v) {
    if (v.empty()) {
        return std::nan("");
    }
    std::sort(v.begin(), v.end());
    size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : (v[m - 1] + v[m]) / 2.0;
}

void add_classifier_summary(AttackReport &r, const std::vector<size_t> &truth, const std::vector<size_t> &predicted) {
    const size_t k = r.labels.size();
    r.confusion.assign(k, std::vector<uint64_t>(k, 0));
    uint64_t correct = 0;
    for (size_t t = 0; t < truth.size(); t++) {
        r.confusion[truth[t]][predicted[t]]++;
        correct += truth[t] == predicted[t];
    }
    auto point = proportion_point(static_cast<double>(truth.size()), correct, truth.size());
    r.set("accuracy", point.metric);
    r.set("accuracy_ci_low", point.ci_low);
    r.set("accuracy_ci_high", point.ci_high);
    r.set("trials", static_cast<double>(truth.size()));
    r.set("chance", 1.0 / static_cast<double>(k));
}

}  // namespace

// ---------------------------------------------------------------------------

namespace {

std::vector<uint32_t> best_adjacent_pair(const CouplingGraph &g, const std::vector<uint32_t> &region) {
    std::vector<bool> taken(g.n_qubits(), false);
    for (auto q : region) {
        taken[q] = true;
    }
    size_t best = 0;
    std::vector<uint32_t> pair;
    for (auto [a, b] : g.edges()) {
        if (taken[a] || taken[b]) {
            continue;
        }
        size_t exposure = 0;
        for (auto x : {a, b}) {
            for (auto m : g.neighbors(x)) {
                exposure += taken[m];
            }
        }
        if (exposure > best) {
            best = exposure;
            pair = {a, b};
        }
    }
    return pair;
}

}  // namespace

AttackReport run_crosstalk_attack(const DeviceProfile &device, const CrosstalkAttackParams &p) {
    device.check();
    require_valid(p.victim);
    if (p.expected.size() != p.victim.n_qubits) {
        throw std::invalid_argument("expected outcome length does not match the victim circuit");
    }
    if (p.n_values.empty() || p.shots == 0) {
        throw std::invalid_argument("crosstalk attack needs n values and shots >= 1");
    }
    if (p.mode == PlanMode::Alternating) {
        throw std::invalid_argument("crosstalk attack runs on parallel plans only");
    }
    TenantJob victim;
    victim.tenant = "victim";
    victim.circuit = p.victim;
    victim.shots = p.shots;

    std::vector<uint32_t> pair = p.adversary_pair;
    if (p.mode == PlanMode::Packed && pair.empty()) {
        auto solo = admit({victim}, device, PlanMode::Packed);
        pair = best_adjacent_pair(device.graph, solo.region(0));
        if (pair.empty()) {
            throw std::invalid_argument("no free qubit pair adjacent to the victim on device '" + device.name + "'");
        }
    }
    if (!pair.empty() && (pair.size() != 2 || !device.graph.are_adjacent(pair[0], pair[1]))) {
        throw std::invalid_argument("adversary pair must be a device edge");
    }

    auto jobs_for = [&](size_t n) {
        TenantJob adversary;
        adversary.tenant = "adversary";
        adversary.circuit = build_adversary_chain(n);
        adversary.shots = p.shots;
        if (p.mode == PlanMode::Packed) {
            adversary.requested = pair;
        }
        return std::vector<TenantJob>{victim, adversary};
    };

    const size_t points = p.n_values.size();
    std::vector<uint64_t> hits(points);
    parallel_for(points, p.threads, [&](size_t i) {
        auto plan = admit(jobs_for(p.n_values[i]), device, p.mode);
        auto out = execute_plan(plan, device, p.noise, p.seed);
        hits[i] = out[0].count(p.expected);
    });

    auto plan = admit(jobs_for(p.n_values.front()), device, p.mode);
    AttackReport r;
    r.scenario = "crosstalk";
    r.param("device", device.name);
    r.param("mode", mode_name(p.mode));
    r.param("victim", p.victim.name);
    r.param("expected", p.expected);
    r.param("shots", std::to_string(p.shots));
    r.param("n_values", join(p.n_values));
    r.param("victim_qubits", join(plan.region(0)));
    r.param("adversary_qubits", join(plan.region(1)));
    r.param("buffer_qubits", join(plan.buffer));
    r.seeds = {p.seed};

    Curve success{"success", {}}, wrong{"wrong", {}};
    std::vector<double> xs, ys;
    for (size_t i = 0; i < points; i++) {
        double x = static_cast<double>(p.n_values[i]);
        auto pt = proportion_point(x, hits[i], p.shots);
        success.points.push_back(pt);
        wrong.points.push_back({x, 1.0 - pt.metric, 1.0 - pt.ci_high, 1.0 - pt.ci_low});
        xs.push_back(x);
        ys.push_back(pt.metric);
    }
    r.curves = {success, wrong};

    size_t base = 0;
    for (size_t i = 0; i < points; i++) {
        if (p.n_values[i] == 0) {
            base = i;
            break;
        }
    }
    double p0 = ys[base];
    double max_shift = 0;
    const double N = static_cast<double>(p.shots);
    for (double y : ys) {
        double se = std::sqrt(p0 * (1 - p0) / N + y * (1 - y) / N);
        double diff = std::abs(y - p0);
        double shift = diff == 0 ? 0.0 : (se > 0 ? diff / se : INFINITY);
        max_shift = std::max(max_shift, shift);
    }
    double crossover = -1;
    for (size_t i = 0; i < points; i++) {
        if (1.0 - ys[i] > ys[i]) {
            crossover = xs[i];
            break;
        }
    }
    r.set("success_n0", p0);
    r.set("spearman_rho", points >= 2 ? spearman(xs, ys) : std::nan(""));
    r.set("crossover_n", crossover);
    r.set("max_shift_sigma", max_shift);
    r.set("flat", max_shift <= 3.0 ? 1.0 : 0.0);
    r.set("inter_tenant_edges", static_cast<double>(inter_tenant_edges(plan, device.graph)));
    return r;
}

// ---------------------------------------------------------------------------

std::vector<uint32_t> top_k_degree(const CouplingGraph &g, size_t k) {
    std::vector<uint32_t> order(g.n_qubits());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) { return g.degree(a) > g.degree(b); });
    if (k > order.size()) {
        throw std::invalid_argument("top_k_degree: k exceeds the device size");
    }
    order.resize(k);
    std::sort(order.begin(), order.end());
    return order;
}

std::vector<uint32_t> Occupancy::resolve(const CouplingGraph &g) const {
    if (top_k) {
        return top_k_degree(g, *top_k);
    }
    std::set<uint32_t> s(qubits.begin(), qubits.end());
    for (auto q : s) {
        if (q >= g.n_qubits()) {
            throw std::invalid_argument("occupied qubit " + std::to_string(q) + " outside the device");
        }
    }
    return {s.begin(), s.end()};
}

Circuit build_swap_demo_victim() {
    Circuit c("swap_demo_victim", 4);
    c.h(0).h(1).h(2).h(3);
    c.cnot(0, 1).cnot(1, 2).cnot(0, 1).swap(0, 1).cnot(2, 3).cnot(0, 3);
    return c;
}

namespace {

std::vector<uint32_t> minus(const std::vector<uint32_t> &a, const std::vector<uint32_t> &b) {
    std::vector<uint32_t> out;
    for (auto q : a) {
        if (std::find(b.begin(), b.end(), q) == b.end()) {
            out.push_back(q);
        }
    }
    return out;
}

size_t routed_swaps(const Circuit &c, const CouplingGraph &g, const std::vector<uint32_t> &free,
                    AllocationPolicy policy) {
    return route(c, allocate(c, g, free, policy), g).swap_count;
}

}  // namespace

AttackReport run_swap_injection(const CouplingGraph &g, const SwapInjectionParams &p) {
    if (p.victims.empty()) {
        throw std::invalid_argument("swap injection needs at least one victim");
    }
    const auto occupied = p.occupancy.resolve(g);
    std::vector<uint32_t> all(g.n_qubits());
    std::iota(all.begin(), all.end(), 0);
    const auto free = minus(all, occupied);
    for (size_t i = 0; i < p.victims.size(); i++) {
        if (p.victims[i].n_qubits > free.size()) {
            throw std::invalid_argument("victim " + std::to_string(i) + " no longer fits after occupation");
        }
    }
    const auto window_free = minus(p.oracle_window, occupied);

    const size_t n = p.victims.size();
    std::vector<size_t> swap_free(n), swap_occ(n);
    // -1: not checked, 0: ok, 1: violated
    std::vector<int> oracle(n, -1);
    parallel_for(n, p.threads, [&](size_t i) {
        const auto &c = p.victims[i];
        swap_free[i] = routed_swaps(c, g, all, p.policy);
        swap_occ[i] = routed_swaps(c, g, free, p.policy);
        bool routing = c.multi_qubit_gate_count() > 0;
        if (!p.oracle_window.empty() && c.n_qubits <= kExhaustiveMaxLogical &&
            p.oracle_window.size() <= kExhaustiveMaxFree && c.n_qubits <= window_free.size() &&
            (!routing || (g.is_connected(p.oracle_window) && g.is_connected(window_free)))) {
            size_t wide = routed_swaps(c, g, p.oracle_window, AllocationPolicy::ExhaustiveBest);
            size_t narrow = routed_swaps(c, g, window_free, AllocationPolicy::ExhaustiveBest);
            oracle[i] = narrow < wide ? 1 : 0;
        }
    });

    AttackReport r;
    r.scenario = "swap-inject";
    r.param("policy", policy_name(p.policy));
    r.param("occupied", join(occupied));
    r.param("victims", std::to_string(n));
    r.param("oracle_window", join(p.oracle_window));
    Curve cf{"swap_free", {}}, co{"swap_occupied", {}}, cd{"delta", {}}, cr{"relative_increase", {}};
    std::vector<double> rel;
    double delta_sum = 0;
    size_t negative = 0, positive = 0, oracle_checked = 0, oracle_violations = 0;
    for (size_t i = 0; i < n; i++) {
        double x = static_cast<double>(i);
        double d = static_cast<double>(swap_occ[i]) - static_cast<double>(swap_free[i]);
        cf.points.push_back(exact_point(x, static_cast<double>(swap_free[i])));
        co.points.push_back(exact_point(x, static_cast<double>(swap_occ[i])));
        cd.points.push_back(exact_point(x, d));
        if (swap_free[i] > 0) {
            double ri = d / static_cast<double>(swap_free[i]);
            rel.push_back(ri);
            cr.points.push_back(exact_point(x, ri));
        }
        delta_sum += d;
        negative += d < 0;
        positive += d > 0;
        if (oracle[i] >= 0) {
            oracle_checked++;
            oracle_violations += oracle[i];
        }
    }
    r.curves = {cf, co, cd, cr};
    r.set("median_relative_increase", rel.empty() ? 0.0 : median(rel));
    r.set("max_relative_increase", rel.empty() ? 0.0 : *std::max_element(rel.begin(), rel.end()));
    r.set("mean_delta", delta_sum / static_cast<double>(n));
    r.set("total_swaps_free", std::accumulate(swap_free.begin(), swap_free.end(), 0.0));
    r.set("total_swaps_occupied", std::accumulate(swap_occ.begin(), swap_occ.end(), 0.0));
    r.set("victims_with_increase", static_cast<double>(positive));
    r.set("victims_with_decrease", static_cast<double>(negative));
    r.set("relative_defined", static_cast<double>(rel.size()));
    r.set("oracle_checked", static_cast<double>(oracle_checked));
    r.set("oracle_violations", static_cast<double>(oracle_violations));
    return r;
}

// ---------------------------------------------------------------------------

namespace {

NoiseFlags sensing_noise() {
    return {false, true, true, false};
}

std::vector<std::string> bit_labels(size_t k) {
    std::vector<std::string> labels;
    for (uint64_t v = 0; v < (uint64_t{1} << k); v++) {
        std::string s(k, '0');
        for (size_t i = 0; i < k; i++) {
            // Leftmost character is the most significant so labels sort ascending.
            s[i] = ((v >> (k - 1 - i)) & 1) ? '1' : '0';
        }
        labels.push_back(s);
    }
    return labels;
}

void check_sensing_geometry(const CouplingGraph &g, uint32_t adversary, const std::vector<uint32_t> &victims) {
    if (adversary >= g.n_qubits()) {
        throw std::invalid_argument("adversary qubit outside the device");
    }
    if (victims.empty() || victims.size() > 4) {
        throw std::invalid_argument("sensing supports one to four victim qubits");
    }
    std::set<uint32_t> seen{adversary};
    for (auto v : victims) {
        if (v >= g.n_qubits() || !seen.insert(v).second) {
            throw std::invalid_argument("victim qubits must be distinct device qubits other than the adversary");
        }
        if (!g.are_adjacent(v, adversary)) {
            throw std::invalid_argument("victim qubit " + std::to_string(v) + " is not adjacent to adversary qubit " +
                                        std::to_string(adversary));
        }
    }
}

}  // namespace

SignatureSet calibrate_signatures(const DeviceProfile &device, uint32_t adversary,
                                  const std::vector<uint32_t> &victims, uint64_t shots, uint64_t seed) {
    device.check();
    check_sensing_geometry(device.graph, adversary, victims);
    SignatureSet s;
    s.adversary = adversary;
    s.victims = victims;
    s.labels = bit_labels(victims.size());
    for (size_t l = 0; l < s.labels.size(); l++) {
        Circuit c("signature_" + s.labels[l], device.n_qubits());
        for (size_t i = 0; i < victims.size(); i++) {
            int pad = s.labels[l][i] == '1' ? 5 : 4;
            for (int k = 0; k < pad; k++) {
                c.x(victims[i]);
            }
        }
        c.x(adversary);
        RunSpec spec;
        spec.circuit = c;
        spec.device = device;
        spec.shots = shots;
        spec.seed = derive(seed, {l});
        spec.noise = sensing_noise();
        s.signatures.push_back(run(spec).marginal({adversary}));
    }
    return s;
}

std::string classify_by_signature(const Histogram &observed, const SignatureSet &s) {
    if (s.signatures.empty() || s.labels.size() != s.signatures.size()) {
        throw std::invalid_argument("empty signature set");
    }
    size_t best = 0;
    double best_d = tvd(observed, s.signatures[0]);
    for (size_t i = 1; i < s.signatures.size(); i++) {
        double d = tvd(observed, s.signatures[i]);
        if (d < best_d || (d == best_d && s.labels[i] < s.labels[best])) {
            best = i;
            best_d = d;
        }
    }
    return s.labels[best];
}

AttackReport run_qubit_sensing(const DeviceProfile &device, const SensingParams &p) {
    if (p.trials == 0 || p.shots == 0) {
        throw std::invalid_argument("sensing needs trials and shots >= 1");
    }
    auto sigs = calibrate_signatures(device, p.adversary, p.victims, p.calibration_shots, derive(p.seed, {0xCA1B}));
    const size_t k = p.victims.size();

    std::vector<size_t> truth(p.trials), predicted(p.trials);
    std::vector<char> exact(p.trials, 1);
    parallel_for(p.trials, p.threads, [&](size_t t) {
        std::string input(k, '1'), mask(k, '0');
        for (size_t i = 0; i < k; i++) {
            if (p.random_input) {
                input[i] = (derive(p.seed, {kTagSecret, t, 0, i}) & 1) ? '1' : '0';
            }
            if (p.mask_defense) {
                mask[i] = (derive(p.seed, {kTagSecret, t, 1, i}) & 1) ? '1' : '0';
            }
        }
        TenantJob victim;
        victim.tenant = "victim";
        victim.circuit = Circuit("victim", static_cast<uint32_t>(k));
        for (size_t i = 0; i < k; i++) {
            if (input[i] == '1') {
                victim.circuit.x(static_cast<uint32_t>(i));
            }
        }
        victim.shots = p.shots;
        victim.requested = p.victims;
        if (p.mask_defense) {
            victim.mask = mask;
        }
        TenantJob adversary;
        adversary.tenant = "adversary";
        adversary.circuit = Circuit("probe", 1);
        adversary.circuit.x(0);
        adversary.shots = p.shots;
        adversary.requested = {p.adversary};

        const uint64_t trial_seed = derive(p.seed, {kTagTrial, t});
        auto plan = admit({victim, adversary}, device, PlanMode::Packed);
        auto out = execute_plan(plan, device, sensing_noise(), trial_seed);
        auto label = classify_by_signature(out[1], sigs);
        truth[t] = std::find(sigs.labels.begin(), sigs.labels.end(), input) - sigs.labels.begin();
        predicted[t] = std::find(sigs.labels.begin(), sigs.labels.end(), label) - sigs.labels.begin();
        if (p.mask_defense) {
            victim.mask.clear();
            auto plain = execute_plan(admit({victim, adversary}, device, PlanMode::Packed), device, sensing_noise(),
                                      trial_seed);
            exact[t] = plain[0] == out[0];
        }
    });

    AttackReport r;
    r.scenario = "sense";
    r.param("device", device.name);
    r.param("adversary", std::to_string(p.adversary));
    r.param("victims", join(p.victims));
    r.param("trials", std::to_string(p.trials));
    r.param("shots", std::to_string(p.shots));
    r.param("calibration_shots", std::to_string(p.calibration_shots));
    r.param("random_input", p.random_input ? "true" : "false");
    r.param("mask_defense", p.mask_defense ? "true" : "false");
    r.seeds = {p.seed};
    r.labels = sigs.labels;
    add_classifier_summary(r, truth, predicted);
    Curve acc{"accuracy", {}};
    uint64_t correct = 0;
    for (size_t t = 0; t < p.trials; t++) {
        correct += truth[t] == predicted[t];
    }
    acc.points.push_back(proportion_point(static_cast<double>(p.shots), correct, p.trials));
    Curve sig{"signature_p_one", {}};
    for (size_t l = 0; l < sigs.labels.size(); l++) {
        const auto &h = sigs.signatures[l];
        sig.points.push_back(proportion_point(static_cast<double>(l), h.count("1"), h.shots()));
    }
    r.curves = {acc, sig};
    double min_gap = INFINITY;
    for (size_t a = 0; a < sigs.signatures.size(); a++) {
        for (size_t b = a + 1; b < sigs.signatures.size(); b++) {
            min_gap = std::min(min_gap, tvd(sigs.signatures[a], sigs.signatures[b]));
        }
    }
    r.set("min_signature_tvd", min_gap);
    if (p.mask_defense) {
        r.set("unmask_exact", std::all_of(exact.begin(), exact.end(), [](char e) { return e != 0; }) ? 1.0 : 0.0);
    }
    return r;
}

// ---------------------------------------------------------------------------

AttackReport run_reconstruction(const DeviceProfile &device, const ReconstructionParams &p) {
    device.check();
    const uint32_t k = static_cast<uint32_t>(p.probe_qubits.size());
    if (k == 0 || p.candidate0.n_qubits != k || p.candidate1.n_qubits != k) {
        throw std::invalid_argument("candidates must act on exactly the probe qubits");
    }
    if (p.trials == 0 || p.shots == 0 || p.training_runs == 0) {
        throw std::invalid_argument("reconstruction needs trials, shots and training runs >= 1");
    }
    auto jobs_for = [&](int which) {
        TenantJob victim;
        victim.tenant = "victim";
        victim.circuit = which ? p.candidate1 : p.candidate0;
        victim.shots = p.shots;
        victim.requested = p.probe_qubits;
        TenantJob probe;
        probe.tenant = "attacker";
        probe.circuit = build_probe(k);
        probe.shots = p.shots;
        probe.requested = p.probe_qubits;
        return std::vector<TenantJob>{victim, probe};
    };
    const ExecutionPlan plans[2] = {admit(jobs_for(0), device, PlanMode::Alternating),
                                    admit(jobs_for(1), device, PlanMode::Alternating)};
    const NoiseFlags noise = NoiseFlags::all_on();

    std::vector<Histogram> training(2 * p.training_runs);
    parallel_for(training.size(), p.threads, [&](size_t i) {
        size_t which = i / p.training_runs, run_index = i % p.training_runs;
        training[i] = execute_plan(plans[which], device, noise, derive(p.seed, {kTagTrial, 0x7A, which, run_index}))[1];
    });
    Histogram centroid[2] = {Histogram(k), Histogram(k)};
    for (size_t i = 0; i < training.size(); i++) {
        for (const auto &[key, c] : training[i].counts()) {
            centroid[i / p.training_runs].add(key, c);
        }
    }

    std::vector<size_t> truth(p.trials), predicted(p.trials);
    parallel_for(p.trials, p.threads, [&](size_t t) {
        size_t which = derive(p.seed, {kTagSecret, t}) & 1;
        auto probe = execute_plan(plans[which], device, noise, derive(p.seed, {kTagTrial, t}))[1];
        double d0 = tvd(probe, centroid[0]), d1 = tvd(probe, centroid[1]);
        truth[t] = which;
        predicted[t] = d1 < d0 ? 1 : 0;
    });

    AttackReport r;
    r.scenario = "reconstruct";
    r.param("device", device.name);
    r.param("candidates", p.candidate0.name + "," + p.candidate1.name);
    r.param("probe_qubits", join(p.probe_qubits));
    r.param("trials", std::to_string(p.trials));
    r.param("shots", std::to_string(p.shots));
    r.param("training_runs", std::to_string(p.training_runs));
    r.param("reset_retain", std::to_string(device.reset_retain));
    r.seeds = {p.seed};
    r.labels = {p.candidate0.name, p.candidate1.name};
    if (r.labels[0] == r.labels[1]) {
        r.labels = {"candidate0", "candidate1"};
    }
    add_classifier_summary(r, truth, predicted);
    r.set("centroid_tvd", tvd(centroid[0], centroid[1]));
    uint64_t correct = 0;
    for (size_t t = 0; t < p.trials; t++) {
        correct += truth[t] == predicted[t];
    }
    r.curves = {Curve{"accuracy", {proportion_point(static_cast<double>(p.shots), correct, p.trials)}}};
    if (device.reset_retain == 0.0) {
        r.notes.push_back("warning: reset_retain is 0, the probe carries no information about the victim");
    }
    return r;
}

// ---------------------------------------------------------------------------

std::string fingerprint_mode_name(FingerprintMode m) {
    return m == FingerprintMode::Crosstalk ? "crosstalk" : "timing";
}

FingerprintMode parse_fingerprint_mode(const std::string &name) {
    if (name == "crosstalk") {
        return FingerprintMode::Crosstalk;
    }
    if (name == "timing") {
        return FingerprintMode::Timing;
    }
    throw std::invalid_argument("unknown fingerprint mode '" + name + "'");
}

std::vector<double> crosstalk_features(const DeviceProfile &device, uint64_t shots, size_t chain_length,
                                       uint64_t seed) {
    const auto &g = device.graph;
    std::vector<double> features;
    const double inv = 1.0 / static_cast<double>(chain_length);
    for (size_t e = 0; e < g.edges().size(); e++) {
        auto [a, b] = g.edges()[e];
        std::set<uint32_t> spectators;
        for (auto x : {a, b}) {
            for (auto m : g.neighbors(x)) {
                if (m != a && m != b) {
                    spectators.insert(m);
                }
            }
        }
        if (spectators.empty()) {
            continue;
        }
        Circuit c("edge_probe", g.n_qubits());
        for (size_t i = 0; i < chain_length; i++) {
            c.cnot(a, b);
        }
        RunSpec spec;
        spec.circuit = c;
        spec.device = device;
        spec.shots = shots;
        spec.seed = derive(seed, {e});
        spec.noise = {true, false, true, false};
        auto h = run(spec);
        for (auto s : spectators) {
            double q = std::min(h.p_one(s), 0.4999);
            features.push_back((1.0 - std::pow(1.0 - 2.0 * q, inv)) / 2.0);
        }
    }
    return features;
}

double job_duration(const Circuit &c, const DeviceProfile &device) {
    const auto &d = device.durations;
    double t = d.t_readout + d.t_reset;
    for (const auto &g : c.gates) {
        switch (g.kind) {
            case GateKind::X:
            case GateKind::H:
            case GateKind::RY:
                t += d.t_1q;
                break;
            case GateKind::CNOT:
                t += d.t_2q;
                break;
            case GateKind::SWAP:
                t += 3 * d.t_2q;
                break;
            case GateKind::CCX:
                t += 6 * d.t_2q;
                break;
        }
    }
    return t;
}

double sample_duration(const Circuit &c, const DeviceProfile &device, uint64_t seed, uint64_t index) {
    double u1 = 1.0 - uniform(seed, {kTagJitter, index, 0});
    double u2 = uniform(seed, {kTagJitter, index, 1});
    double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    return job_duration(c, device) + device.timing_jitter * z;
}

namespace {

double l1(const std::vector<double> &a, const std::vector<double> &b) {
    double s = 0;
    for (size_t i = 0; i < a.size(); i++) {
        s += std::abs(a[i] - b[i]);
    }
    return s;
}

double mean_duration(const Circuit &c, const DeviceProfile &d, uint64_t seed, uint64_t samples) {
    double sum = 0;
    for (uint64_t i = 0; i < samples; i++) {
        sum += sample_duration(c, d, seed, i);
    }
    return sum / static_cast<double>(samples);
}

}  // namespace

AttackReport fingerprint_devices(const std::vector<DeviceProfile> &profiles, const FingerprintParams &p) {
    if (profiles.size() < 2) {
        throw std::invalid_argument("fingerprinting needs at least two profiles");
    }
    for (const auto &d : profiles) {
        d.check();
    }
    if (p.trials == 0 || p.samples == 0 || p.training_samples == 0) {
        throw std::invalid_argument("fingerprinting needs trials and samples >= 1");
    }
    if (p.mode == FingerprintMode::Crosstalk) {
        for (const auto &d : profiles) {
            if (!(d.graph == profiles.front().graph)) {
                throw std::invalid_argument("crosstalk fingerprinting needs profiles on one coupling graph");
            }
        }
        if (p.chain_length == 0) {
            throw std::invalid_argument("chain_length must be >= 1");
        }
    }
    const Circuit reference = p.reference.n_qubits == 0 ? build_half_adder() : p.reference;
    const size_t k = profiles.size();

    // Training vectors (crosstalk) or means (timing) per device.
    std::vector<std::vector<double>> centroid(k);
    parallel_for(k, p.threads, [&](size_t d) {
        uint64_t s = derive(p.seed, {kTagTrial, 0x7A, d});
        if (p.mode == FingerprintMode::Crosstalk) {
            centroid[d] = crosstalk_features(profiles[d], p.training_samples, p.chain_length, s);
        } else {
            centroid[d] = {mean_duration(reference, profiles[d], s, p.training_samples)};
        }
    });

    std::vector<size_t> truth(p.trials), predicted(p.trials);
    parallel_for(p.trials, p.threads, [&](size_t t) {
        size_t d = derive(p.seed, {kTagSecret, t}) % k;
        uint64_t s = derive(p.seed, {kTagTrial, t});
        std::vector<double> observed;
        if (p.mode == FingerprintMode::Crosstalk) {
            observed = crosstalk_features(profiles[d], p.samples, p.chain_length, s);
        } else {
            observed = {mean_duration(reference, profiles[d], s, p.samples)};
        }
        size_t best = 0;
        double best_d = l1(observed, centroid[0]);
        for (size_t c = 1; c < k; c++) {
            double dist = l1(observed, centroid[c]);
            if (dist < best_d) {
                best = c;
                best_d = dist;
            }
        }
        truth[t] = d;
        predicted[t] = best;
    });

    AttackReport r;
    r.scenario = "fingerprint";
    r.param("mode", fingerprint_mode_name(p.mode));
    r.param("samples", std::to_string(p.samples));
    r.param("training_samples", std::to_string(p.training_samples));
    r.param("trials", std::to_string(p.trials));
    if (p.mode == FingerprintMode::Crosstalk) {
        r.param("chain_length", std::to_string(p.chain_length));
    } else {
        r.param("reference", reference.name);
    }
    r.seeds = {p.seed};
    std::set<std::string> names;
    for (size_t d = 0; d < k; d++) {
        std::string name = profiles[d].name;
        if (!names.insert(name).second) {
            name += "#" + std::to_string(d);
            names.insert(name);
        }
        r.labels.push_back(name);
    }
    add_classifier_summary(r, truth, predicted);

    // Separation between devices in the classifier's own feature space.
    double min_sep = INFINITY;
    for (size_t a = 0; a < k; a++) {
        for (size_t b = a + 1; b < k; b++) {
            if (p.mode == FingerprintMode::Crosstalk) {
                double s = 0;
                for (size_t e = 0; e < profiles[a].eps_ct.size(); e++) {
                    s += std::abs(profiles[a].eps_ct[e] - profiles[b].eps_ct[e]);
                }
                min_sep = std::min(min_sep, s);
            } else {
                double gap = std::abs(job_duration(reference, profiles[a]) - job_duration(reference, profiles[b]));
                double sigma = std::max(profiles[a].timing_jitter, profiles[b].timing_jitter);
                min_sep = std::min(min_sep, sigma > 0 ? gap / (sigma / std::sqrt(static_cast<double>(p.samples)))
                                                      : INFINITY);
            }
        }
    }
    r.set(p.mode == FingerprintMode::Crosstalk ? "min_rate_l1" : "min_gap_over_stderr", min_sep);
    Curve means{"centroid", {}};
    for (size_t d = 0; d < k; d++) {
        double v = std::accumulate(centroid[d].begin(), centroid[d].end(), 0.0);
        if (p.mode == FingerprintMode::Crosstalk && !centroid[d].empty()) {
            v /= static_cast<double>(centroid[d].size());
        }
        means.points.push_back(exact_point(static_cast<double>(d), v));
    }
    uint64_t correct = 0;
    for (size_t t = 0; t < p.trials; t++) {
        correct += truth[t] == predicted[t];
    }
    r.curves = {Curve{"accuracy", {proportion_point(static_cast<double>(p.samples), correct, p.trials)}}, means};
    return r;
}

}  // namespace qshare

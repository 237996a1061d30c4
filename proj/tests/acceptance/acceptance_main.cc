// One pass/fail line per acceptance criterion; exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.h"
#include "qshare/experiments.h"
#include "qshare/rng.h"

using namespace qshare;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int precision = 4) {
    std::ostringstream s;
    s.precision(precision);
    s << v;
    return s.str();
}

std::string scenario_path(const std::string &name) {
    return std::string(QSHARE_SCENARIO_DIR) + "/" + name + ".json";
}

// Every bundle produced here, kept for the reproducibility criterion.
std::map<std::string, ReportBundle> g_bundles;

const ReportBundle &scenario(const std::string &name) {
    auto it = g_bundles.find(name);
    if (it == g_bundles.end()) {
        it = g_bundles.emplace(name, run_scenario(load_config_file(scenario_path(name)))).first;
    }
    return it->second;
}

double metric(const std::string &name, const std::string &m, size_t report = 0) {
    return scenario(name).reports.at(report).at(m);
}

bool in_band(double v, double lo, double hi) {
    return v >= lo && v <= hi;
}

double tvd_exact(const Histogram &h, const std::vector<oracle::cd> &amps, uint32_t n) {
    double d = 0;
    for (size_t i = 0; i < amps.size(); i++) {
        d += std::abs(h.probability(bits_to_key(i, n)) - std::norm(amps[i]));
    }
    return d / 2;
}

// --- 1 ---------------------------------------------------------------------
Outcome simulator_oracle() {
    double worst_amp = 0, worst_tvd = 0;
    for (uint64_t s = 0; s < 25; s++) {
        size_t gates = 1 + derive(101, {s}) % 20;
        auto c = build_random(4, gates, derive(102, {s}));
        auto want = oracle::dense_state(c);
        auto got = statevector(c);
        for (size_t i = 0; i < want.size(); i++) {
            worst_amp = std::max(worst_amp, std::abs(want[i] - got[i]));
        }
        RunSpec spec;
        spec.circuit = c;
        spec.device = noiseless_profile("line", line(4));
        spec.shots = 100000;
        spec.seed = derive(103, {s});
        spec.noise = NoiseFlags::all_off();
        worst_tvd = std::max(worst_tvd, tvd_exact(run(spec), want, 4));
    }
    return {worst_amp < 1e-10 && worst_tvd < 0.02,
            "max amplitude deviation " + fmt(worst_amp) + " (< 1e-10), max TVD " + fmt(worst_tvd) + " (< 0.02)"};
}

// --- 2 ---------------------------------------------------------------------
Outcome crosstalk_closed_form() {
    const double shots = 100000;
    double worst = 0;
    for (double eps : {0.01, 0.05}) {
        for (int n : {1, 5, 20}) {
            auto c = build_adversary_chain(n);
            c.n_qubits = 3;
            auto dev = noiseless_profile("line", line(3));
            for (size_t e = 0; e < dev.eps_ct.size(); e++) {
                dev.eps_ct[e] = eps;
            }
            RunSpec spec;
            spec.circuit = c;
            spec.device = dev;
            spec.shots = static_cast<uint64_t>(shots);
            spec.seed = derive(201, {static_cast<uint64_t>(eps * 1000), static_cast<uint64_t>(n)});
            spec.noise = NoiseFlags::only_crosstalk();
            double p = run(spec).p_one(2);
            double want = oracle::parity_flip(eps, n);
            worst = std::max(worst, std::abs(p - want) / oracle::binomial_sigma(want, shots));
        }
    }
    return {worst <= 3.0, "largest deviation " + fmt(worst) + " sigma over 6 (eps, n) cells (limit 3)"};
}

// --- 3 ---------------------------------------------------------------------
Outcome crosstalk_trend() {
    auto t0 = std::chrono::steady_clock::now();
    double rho = metric("crosstalk_ibmqx2", "spearman_rho");
    double cross = metric("crosstalk_ibmqx2", "crossover_n");
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {rho <= -0.9 && cross >= 0 && secs < 60,
            "spearman rho " + fmt(rho) + " (<= -0.9), crossover n* = " + fmt(cross) + ", " + fmt(secs, 3) + " s"};
}

// --- 4 ---------------------------------------------------------------------
Outcome buffer_soundness() {
    const auto &b = scenario("defend_buffer_grid");
    const auto &buffered = b.reports.at(1);
    double shift = buffered.at("max_shift_sigma");
    return {buffered.scenario == "buffered" && buffered.at("flat") == 1.0 && b.passed(),
            "buffered grid:3x3 max shift " + fmt(shift) + " sigma (limit 3), built-in checks " +
                (b.passed() ? "pass" : "fail")};
}

// --- 5 ---------------------------------------------------------------------
Outcome swap_demo_case() {
    const auto &r = scenario("swap_inject_demo").reports.at(0);
    double free = r.at("total_swaps_free"), occ = r.at("total_swaps_occupied");
    double of = r.at("oracle_swaps_free"), oo = r.at("oracle_swaps_occupied");
    return {occ >= free + 1 && of == free && oo == occ,
            "burlington swaps free " + fmt(free) + ", Q2 occupied " + fmt(occ) + " (need +1); oracle " + fmt(of) +
                " / " + fmt(oo)};
}

// --- 6 ---------------------------------------------------------------------
Outcome swap_suite() {
    const auto &b = scenario("swap_inject_suite");
    const auto &r = b.reports.at(0);
    double med = r.at("median_relative_increase"), mx = r.at("max_relative_increase");
    double checked = r.at("oracle_checked"), bad = r.at("oracle_violations");
    return {med > 0 && mx >= med && bad == 0 && b.passed(),
            "median relative increase " + fmt(med) + ", max " + fmt(mx) + "; oracle monotone on " + fmt(checked) +
                " small victims, " + fmt(bad) + " violations"};
}

// --- 7 ---------------------------------------------------------------------
Outcome qubit_sensing() {
    double single = metric("sense_single", "accuracy");
    double zero = metric("sense_zero_delta", "accuracy");
    double two = metric("sense_two_victims", "accuracy");
    double trials = metric("sense_two_victims", "trials");
    double bar = 0.25 + 4 * std::sqrt(0.25 * 0.75 / trials);
    return {single >= 0.95 && in_band(zero, 0.45, 0.55) && two >= bar,
            "delta 0.05: " + fmt(single) + " (>= 0.95); delta 0: " + fmt(zero) + " (in [0.45, 0.55]); two victims: " +
                fmt(two) + " (>= " + fmt(bar) + ")"};
}

// --- 8 ---------------------------------------------------------------------
Outcome mask_defense() {
    const auto &b = scenario("defend_mask");
    double masked = b.reports.at(1).at("accuracy");
    double exact = b.reports.at(1).at("unmask_exact");
    double open = b.reports.at(0).at("accuracy");
    return {in_band(masked, 0.45, 0.55) && exact == 1.0,
            "masked accuracy " + fmt(masked) + " (in [0.45, 0.55]), unmasked " + fmt(open) + ", unmask exact " +
                (exact == 1.0 ? "yes" : "no")};
}

// --- 9 ---------------------------------------------------------------------
Outcome reconstruction() {
    double acc = metric("reconstruct", "accuracy");
    double trials = metric("reconstruct", "trials");
    double r0 = metric("reconstruct_r0", "accuracy");
    double same = metric("reconstruct_identical", "accuracy");
    return {acc > 0.60 && trials == 500 && in_band(r0, 0.45, 0.55) && in_band(same, 0.45, 0.55),
            "r=0.2: " + fmt(acc) + " (> 0.60 over " + fmt(trials) + " trials); r=0: " + fmt(r0) +
                "; identical: " + fmt(same)};
}

// --- 10 --------------------------------------------------------------------
Outcome fingerprinting() {
    double ct = metric("fingerprint_crosstalk", "accuracy");
    const auto &cfg = load_config_file(scenario_path("fingerprint_timing"));
    uint64_t samples = cfg.params["samples"].get<uint64_t>();
    double gap = metric("fingerprint_timing", "min_gap_over_stderr");
    double timing = metric("fingerprint_timing", "accuracy");
    double same = metric("fingerprint_identical", "accuracy");
    return {ct >= 0.95 && samples == 10 && gap >= 3.0 && timing >= 0.90 && in_band(same, 0.45, 0.55),
            "crosstalk 3-device: " + fmt(ct) + " (>= 0.95); timing, " + std::to_string(samples) + " samples, gap " +
                fmt(gap) + " stderr: " + fmt(timing) + " (>= 0.90); identical: " + fmt(same)};
}

// --- 11 --------------------------------------------------------------------
Outcome transpiler_semantics() {
    const std::vector<CouplingGraph> devices{builtin_ibmqx2(), builtin_burlington(), line(5), grid(2, 3)};
    size_t illegal = 0, mismatched = 0;
    for (uint64_t s = 0; s < 50; s++) {
        const auto &g = devices[s % devices.size()];
        uint32_t n = 2 + static_cast<uint32_t>(derive(1101, {s}) % 4);
        auto c = build_random(n, 12, derive(1102, {s}));
        std::vector<uint32_t> all;
        for (uint32_t q = 0; q < g.n_qubits(); q++) {
            all.push_back(q);
        }
        auto rc = route(c, allocate(c, g, all, AllocationPolicy::CompactBfs), g);
        auto physical = decompose_swaps(rc);
        illegal += !is_adjacency_legal(physical, g);
        auto want = oracle::dense_state(c);
        auto got = statevector(physical);
        std::vector<bool> hit(got.size(), false);
        double worst = 0;
        for (size_t L = 0; L < want.size(); L++) {
            size_t P = 0;
            for (uint32_t l = 0; l < n; l++) {
                if ((L >> l) & 1) {
                    P |= size_t{1} << rc.final_layout[l];
                }
            }
            hit[P] = true;
            worst = std::max(worst, std::abs(want[L] - got[P]));
        }
        for (size_t P = 0; P < got.size(); P++) {
            if (!hit[P]) {
                worst = std::max(worst, std::abs(got[P]));
            }
        }
        mismatched += worst > 1e-10;
    }
    return {illegal == 0 && mismatched == 0,
            "50 circuits: " + std::to_string(illegal) + " adjacency violations, " + std::to_string(mismatched) +
                " statevector mismatches"};
}

// --- 12 --------------------------------------------------------------------
Outcome rescheduling() {
    const auto &r = scenario("defend_reschedule").reports.at(0);
    double before = r.at("conflicts_before"), after = r.at("conflicts_after"), order = r.at("order_preserved");
    return {after == 0 && order == 1.0,
            "50 schedules: conflicts " + fmt(before) + " -> " + fmt(after) + ", tenant order " +
                (order == 1.0 ? "preserved" : "broken")};
}

// --- 13 --------------------------------------------------------------------
Outcome anomaly_detection() {
    double tpr = metric("defend_anomaly", "tpr"), fpr = metric("defend_anomaly", "fpr");
    return {tpr >= 0.9 && fpr <= 0.1, "TPR " + fmt(tpr) + " (>= 0.9), FPR " + fmt(fpr) + " (<= 0.1)"};
}

// --- 14 --------------------------------------------------------------------
std::map<std::string, std::string> written(const ReportBundle &b, const fs::path &dir) {
    fs::remove_all(dir);
    write_bundle(b, dir.string());
    std::map<std::string, std::string> files;
    for (const auto &e : fs::directory_iterator(dir)) {
        std::ifstream in(e.path(), std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        files[e.path().filename().string()] = s.str();
    }
    fs::remove_all(dir);
    return files;
}

Outcome reproducibility() {
    size_t configs = 0, differing = 0;
    std::string first_bad;
    const auto base = fs::temp_directory_path() / "qshare_acceptance";
    for (const auto &e : fs::directory_iterator(QSHARE_SCENARIO_DIR)) {
        if (e.path().extension() != ".json") {
            continue;
        }
        configs++;
        std::string name = e.path().stem().string();
        auto cfg = load_config_file(e.path().string());
        const auto &once = scenario(name);
        auto again = run_scenario(cfg, {1});
        auto threaded = run_scenario(cfg, {3});
        auto a = written(once, base / "a");
        bool same = a == written(again, base / "b") && a == written(threaded, base / "c");
        if (!same) {
            differing++;
            first_bad = name;
        }
    }
    return {configs > 0 && differing == 0,
            std::to_string(configs) + " shipped configs rerun at 1 and 3 threads, " + std::to_string(differing) +
                " differ" + (first_bad.empty() ? "" : " (first: " + first_bad + ")")};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"simulator matches dense-matrix oracle", simulator_oracle},
        {"crosstalk parity closed form", crosstalk_closed_form},
        {"crosstalk attack trend on ibmqx2", crosstalk_trend},
        {"buffer defense keeps success flat", buffer_soundness},
        {"swap injection demo on burlington", swap_demo_case},
        {"swap injection suite on grid 4x5", swap_suite},
        {"qubit sensing accuracy and controls", qubit_sensing},
        {"output mask defense", mask_defense},
        {"reconstruction through reset residue", reconstruction},
        {"device fingerprinting", fingerprinting},
        {"transpiler legality and semantics", transpiler_semantics},
        {"crosstalk-aware rescheduling", rescheduling},
        {"anomaly detection on synthetic workload", anomaly_detection},
        {"byte-identical reruns", reproducibility},
    };
    int failures = 0;
    for (size_t i = 0; i < criteria.size(); i++) {
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception &e) {
            o = {false, std::string("error: ") + e.what()};
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failures += !o.pass;
        std::printf("[%s] %2zu %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}

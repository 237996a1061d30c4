#include "qshare/attacks.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>

#include "oracles.h"
#include "qshare/rng.h"

using namespace qshare;
using oracle::binomial_sigma;
using oracle::parity_flip;

namespace {

// Roots of (phat - p)^2 = z^2 p (1 - p) / n, solved as a plain quadratic.
std::pair<double, double> wilson_roots(double k, double n, double z) {
    double phat = k / n, z2n = z * z / n;
    double a = 1 + z2n, b = -(2 * phat + z2n), c = phat * phat;
    double disc = std::sqrt(b * b - 4 * a * c);
    return {(-b - disc) / (2 * a), (-b + disc) / (2 * a)};
}

double pearson(const std::vector<double> &x, const std::vector<double> &y) {
    double mx = 0, my = 0;
    for (size_t i = 0; i < x.size(); i++) {
        mx += x[i] / x.size();
        my += y[i] / y.size();
    }
    double sxy = 0, sxx = 0, syy = 0;
    for (size_t i = 0; i < x.size(); i++) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

DeviceProfile ibmqx2(UniformNoise noise = {}) {
    return uniform_profile("ibmqx2", builtin_ibmqx2(), noise);
}

CrosstalkAttackParams grover_sweep(std::vector<size_t> ns, uint64_t shots) {
    CrosstalkAttackParams p;
    p.victim = build_grover3("101");
    p.expected = "101";
    p.n_values = std::move(ns);
    p.shots = shots;
    p.seed = 21;
    return p;
}

SensingParams sensing(std::vector<uint32_t> victims, uint64_t trials, uint64_t shots) {
    SensingParams p;
    p.adversary = 2;
    p.victims = std::move(victims);
    p.trials = trials;
    p.shots = shots;
    p.seed = 31;
    return p;
}

ReconstructionParams flip_vs_idle() {
    ReconstructionParams p;
    p.candidate0 = Circuit("idle", 1);
    p.candidate1 = Circuit("flip", 1);
    p.candidate1.x(0);
    p.probe_qubits = {0};
    p.trials = 300;
    p.shots = 2048;
    p.training_runs = 4;
    p.seed = 41;
    return p;
}

}  // namespace

TEST(Stats, WilsonMatchesQuadraticRoots) {
    for (auto [k, n] : std::vector<std::pair<uint64_t, uint64_t>>{{50, 100}, {3, 40}, {997, 1000}, {1, 7}}) {
        auto [lo, hi] = wilson_interval(k, n);
        auto [rlo, rhi] = wilson_roots(static_cast<double>(k), static_cast<double>(n), 1.96);
        EXPECT_NEAR(lo, rlo, 1e-12);
        EXPECT_NEAR(hi, rhi, 1e-12);
    }
    auto [lo0, hi0] = wilson_interval(0, 10);
    EXPECT_EQ(lo0, 0.0);
    EXPECT_GT(hi0, 0.0);
    auto [lon, hin] = wilson_interval(10, 10);
    EXPECT_LT(lon, 1.0);
    EXPECT_EQ(hin, 1.0);
    auto [lz, hz] = wilson_interval(0, 0);
    EXPECT_EQ(lz, 0.0);
    EXPECT_EQ(hz, 1.0);
}

TEST(Stats, SpearmanRanks) {
    std::vector<double> x{1, 2, 3, 4, 5};
    EXPECT_DOUBLE_EQ(spearman(x, {2, 4, 8, 16, 32}), 1.0);
    EXPECT_DOUBLE_EQ(spearman(x, {5, 3, 1, 0, -7}), -1.0);
    // Ties take the average of the ranks they span.
    std::vector<double> y{1, 1, 2, 2, 9};
    EXPECT_NEAR(spearman(x, y), pearson({1, 2, 3, 4, 5}, {1.5, 1.5, 3.5, 3.5, 5}), 1e-12);
    EXPECT_TRUE(std::isnan(spearman(x, {3, 3, 3, 3, 3})));
    EXPECT_THROW(spearman({1}, {1}), std::invalid_argument);
    EXPECT_THROW(spearman({1, 2}, {1, 2, 3}), std::invalid_argument);
}

TEST(Stats, ParallelForCoversEverySlotOnce) {
    for (size_t threads : {1, 2, 5}) {
        std::vector<std::atomic<int>> hits(37);
        parallel_for(hits.size(), threads, [&](size_t i) { hits[i]++; });
        for (auto &h : hits) {
            EXPECT_EQ(h.load(), 1);
        }
    }
    EXPECT_THROW(parallel_for(10, 3,
                              [](size_t i) {
                                  if (i == 4) {
                                      throw std::runtime_error("boom");
                                  }
                              }),
                 std::runtime_error);
}

TEST(CrosstalkAttack, IdleAdversaryLeavesVictimUntouched) {
    auto dev = ibmqx2();
    auto p = grover_sweep({0}, 20000);
    auto r = run_crosstalk_attack(dev, p);

    TenantJob victim;
    victim.tenant = "victim";
    victim.circuit = p.victim;
    victim.shots = p.shots;
    auto solo = execute_plan(admit({victim}, dev, PlanMode::Packed), dev, p.noise, p.seed);
    EXPECT_DOUBLE_EQ(r.at("success_n0"), solo[0].count("101") / 20000.0);
}

TEST(CrosstalkAttack, SuccessFallsWithChainLength) {
    auto r = run_crosstalk_attack(ibmqx2(), grover_sweep({0, 10, 20, 30, 40}, 10000));
    EXPECT_LE(r.at("spearman_rho"), -0.9);
    EXPECT_GT(r.at("crossover_n"), 0);
    EXPECT_EQ(r.at("flat"), 0.0);
    const auto &s = r.curve("success").points;
    const auto &w = r.curve("wrong").points;
    ASSERT_EQ(s.size(), 5u);
    for (size_t i = 0; i < s.size(); i++) {
        EXPECT_NEAR(s[i].metric + w[i].metric, 1.0, 1e-12);
        EXPECT_LE(s[i].ci_low, s[i].metric);
        EXPECT_GE(s[i].ci_high, s[i].metric);
    }
    // Packed placement puts the adversary next to the victim.
    EXPECT_GT(r.at("inter_tenant_edges"), 0);
}

TEST(CrosstalkAttack, BufferedPlanIsFlat) {
    auto dev = uniform_profile("grid", grid(3, 3));
    auto p = grover_sweep({0, 20, 40}, 10000);
    p.mode = PlanMode::Buffered;
    auto r = run_crosstalk_attack(dev, p);
    EXPECT_EQ(r.at("flat"), 1.0);
    EXPECT_LE(r.at("max_shift_sigma"), 3.0);
    EXPECT_EQ(r.at("inter_tenant_edges"), 0);
    EXPECT_EQ(r.at("crossover_n"), -1);
}

TEST(CrosstalkAttack, Errors) {
    auto dev = ibmqx2();
    auto p = grover_sweep({0}, 100);
    p.expected = "10";
    EXPECT_THROW(run_crosstalk_attack(dev, p), std::invalid_argument);
    p = grover_sweep({}, 100);
    EXPECT_THROW(run_crosstalk_attack(dev, p), std::invalid_argument);
    p = grover_sweep({0}, 100);
    p.adversary_pair = {0, 4};
    EXPECT_THROW(run_crosstalk_attack(dev, p), std::invalid_argument);
    // The victim fills line(4) except one qubit: no free pair exists.
    p = grover_sweep({0}, 100);
    auto small = uniform_profile("line", line(4));
    EXPECT_THROW(run_crosstalk_attack(small, p), std::invalid_argument);
}

TEST(SwapInjection, TopKDegree) {
    EXPECT_EQ(top_k_degree(grid(4, 5), 4), (std::vector<uint32_t>{6, 7, 8, 11}));
    EXPECT_EQ(top_k_degree(builtin_ibmqx2(), 1), (std::vector<uint32_t>{2}));
    EXPECT_THROW(top_k_degree(line(3), 4), std::invalid_argument);
    Occupancy o;
    o.qubits = {3, 1, 3};
    EXPECT_EQ(o.resolve(line(5)), (std::vector<uint32_t>{1, 3}));
    o.qubits = {9};
    EXPECT_THROW(o.resolve(line(5)), std::invalid_argument);
}

TEST(SwapInjection, EmptyOccupancyChangesNothing) {
    SwapInjectionParams p;
    for (uint64_t s = 0; s < 10; s++) {
        p.victims.push_back(build_random(5, 12, s, true, true));
    }
    auto r = run_swap_injection(grid(4, 5), p);
    for (const auto &pt : r.curve("delta").points) {
        EXPECT_EQ(pt.metric, 0.0);
    }
    EXPECT_EQ(r.at("mean_delta"), 0.0);
}

TEST(SwapInjection, OccupyingHubsCostsSwaps) {
    SwapInjectionParams p;
    p.occupancy.top_k = 4;
    size_t small = 0;
    for (uint64_t s = 0; s < 40; s++) {
        uint32_t n = 4 + static_cast<uint32_t>(derive(5, {s}) % 7);
        small += n <= 6;
        p.victims.push_back(build_random(n, 3 * n, derive(5, {s, 1}), true, true));
    }
    for (uint32_t q = 0; q < 10; q++) {
        p.oracle_window.push_back(q);
    }
    auto r = run_swap_injection(grid(4, 5), p);
    EXPECT_GT(r.at("median_relative_increase"), 0.0);
    EXPECT_GE(r.at("max_relative_increase"), r.at("median_relative_increase"));
    EXPECT_EQ(r.at("oracle_checked"), static_cast<double>(small));
    EXPECT_EQ(r.at("oracle_violations"), 0.0);
}

TEST(SwapInjection, DemoVictimAndErrors) {
    auto c = build_swap_demo_victim();
    EXPECT_EQ(c.n_qubits, 4u);
    EXPECT_EQ(c.multi_qubit_gate_count(), 6u);
    SwapInjectionParams p;
    p.victims = {c};
    p.occupancy.qubits = {0, 1};
    EXPECT_THROW(run_swap_injection(line(5), p), std::invalid_argument);
    p.victims.clear();
    EXPECT_THROW(run_swap_injection(line(5), p), std::invalid_argument);
}

TEST(Signatures, ZeroSensingGivesIndistinguishableSignatures) {
    UniformNoise noise;
    noise.delta_sense = 0.0;
    auto s = calibrate_signatures(ibmqx2(noise), 2, {0}, 50000, 3);
    ASSERT_EQ(s.labels, (std::vector<std::string>{"0", "1"}));
    EXPECT_LT(tvd(s.signatures[0], s.signatures[1]), 0.02);
}

TEST(Signatures, AdversaryReadingMatchesSenseAndReadoutComposition) {
    auto s = calibrate_signatures(ibmqx2(), 2, {0}, 50000, 3);
    // Sensed flip with probability delta, then readout flips with p10 / p01.
    const double delta = 0.08, pe = 0.01;
    const double want1 = (1 - delta) * (1 - pe) + delta * pe;
    const double want0 = 1 - pe;
    EXPECT_NEAR(s.signatures[1].p_one(0), want1, 3 * binomial_sigma(want1, 50000));
    EXPECT_NEAR(s.signatures[0].p_one(0), want0, 3 * binomial_sigma(want0, 50000));
}

TEST(Signatures, TwoVictimsGiveFourDistinctSignatures) {
    auto dev = ibmqx2();
    dev.set_delta(0, 2, 0.05);
    dev.set_delta(1, 2, 0.12);
    auto s = calibrate_signatures(dev, 2, {0, 1}, 50000, 9);
    ASSERT_EQ(s.labels, (std::vector<std::string>{"00", "01", "10", "11"}));
    for (size_t a = 0; a < 4; a++) {
        for (size_t b = a + 1; b < 4; b++) {
            EXPECT_GT(tvd(s.signatures[a], s.signatures[b]), 0.02) << a << " " << b;
        }
    }
    EXPECT_THROW(calibrate_signatures(dev, 0, {4}, 100, 1), std::invalid_argument);
    EXPECT_THROW(calibrate_signatures(dev, 2, {}, 100, 1), std::invalid_argument);
    EXPECT_THROW(calibrate_signatures(dev, 2, {0, 0}, 100, 1), std::invalid_argument);
}

TEST(Signatures, ClassifyPicksNearestAndBreaksTiesLow) {
    SignatureSet s;
    s.labels = {"0", "1"};
    Histogram a(1), b(1);
    a.add("0", 90);
    a.add("1", 10);
    b.add("0", 10);
    b.add("1", 90);
    s.signatures = {a, b};
    Histogram obs(1);
    obs.add("0", 20);
    obs.add("1", 80);
    EXPECT_EQ(classify_by_signature(obs, s), "1");
    s.signatures = {a, a};
    EXPECT_EQ(classify_by_signature(obs, s), "0");
    EXPECT_THROW(classify_by_signature(obs, SignatureSet{}), std::invalid_argument);
}

TEST(Sensing, SeparatedSensingRecoversTheBit) {
    UniformNoise noise;
    noise.delta_sense = 0.05;
    auto r = run_qubit_sensing(ibmqx2(noise), sensing({0}, 100, 8192));
    EXPECT_GE(r.at("accuracy"), 0.95);
    ASSERT_EQ(r.confusion.size(), 2u);
    uint64_t total = 0;
    for (const auto &row : r.confusion) {
        total = std::accumulate(row.begin(), row.end(), total);
    }
    EXPECT_EQ(total, 100u);
}

TEST(Sensing, ZeroSensingIsChance) {
    UniformNoise noise;
    noise.delta_sense = 0.0;
    auto r = run_qubit_sensing(ibmqx2(noise), sensing({0}, 1000, 2048));
    EXPECT_NEAR(r.at("accuracy"), 0.5, 4 * binomial_sigma(0.5, 1000));
}

TEST(Sensing, AccuracyGrowsWithShots) {
    UniformNoise noise;
    noise.delta_sense = 0.02;
    auto dev = ibmqx2(noise);
    std::vector<double> acc;
    for (uint64_t shots : {512, 2048, 8192}) {
        acc.push_back(run_qubit_sensing(dev, sensing({0}, 300, shots)).at("accuracy"));
    }
    EXPECT_LT(acc[0], acc[2]);
    for (size_t i = 1; i < acc.size(); i++) {
        EXPECT_GE(acc[i], acc[i - 1] - 2 * binomial_sigma(acc[i - 1], 300));
    }
}

TEST(Sensing, MaskDefenseBlindsAdversaryButNotVictim) {
    UniformNoise noise;
    noise.delta_sense = 0.05;
    auto p = sensing({0}, 1000, 2048);
    p.mask_defense = true;
    auto r = run_qubit_sensing(ibmqx2(noise), p);
    EXPECT_NEAR(r.at("accuracy"), 0.5, 4 * binomial_sigma(0.5, 1000));
    EXPECT_EQ(r.at("unmask_exact"), 1.0);
}

TEST(Reconstruction, ResidueSeparatesCandidates) {
    auto r = run_reconstruction(ibmqx2(), flip_vs_idle());
    EXPECT_GT(r.at("accuracy"), 0.6);
    EXPECT_GT(r.at("centroid_tvd"), 0.05);
    EXPECT_TRUE(r.notes.empty());
    EXPECT_EQ(r.labels, (std::vector<std::string>{"idle", "flip"}));
}

TEST(Reconstruction, ControlsAreChance) {
    auto p = flip_vs_idle();
    p.trials = 1000;
    auto dev = ibmqx2();
    dev.reset_retain = 0.0;
    auto r0 = run_reconstruction(dev, p);
    EXPECT_NEAR(r0.at("accuracy"), 0.5, 4 * binomial_sigma(0.5, 1000));
    ASSERT_EQ(r0.notes.size(), 1u);

    p.candidate1 = p.candidate0;
    auto same = run_reconstruction(ibmqx2(), p);
    EXPECT_NEAR(same.at("accuracy"), 0.5, 4 * binomial_sigma(0.5, 1000));
}

TEST(Reconstruction, Errors) {
    auto p = flip_vs_idle();
    p.probe_qubits = {0, 1};
    EXPECT_THROW(run_reconstruction(ibmqx2(), p), std::invalid_argument);
    p = flip_vs_idle();
    p.trials = 0;
    EXPECT_THROW(run_reconstruction(ibmqx2(), p), std::invalid_argument);
}

TEST(Fingerprint, ModeNames) {
    EXPECT_EQ(parse_fingerprint_mode(fingerprint_mode_name(FingerprintMode::Timing)), FingerprintMode::Timing);
    EXPECT_EQ(parse_fingerprint_mode("crosstalk"), FingerprintMode::Crosstalk);
    EXPECT_THROW(parse_fingerprint_mode("power"), std::invalid_argument);
}

TEST(Fingerprint, FeaturesEstimatePerGateRate) {
    // On a line every spectator touches one operand, so the feature is eps.
    UniformNoise noise;
    noise.eps_ct = 0.03;
    auto dev = uniform_profile("line", line(4), noise);
    auto f = crosstalk_features(dev, 100000, 10, 7);
    // Edges (0,1): {2}; (1,2): {0,3}; (2,3): {1}.
    ASSERT_EQ(f.size(), 4u);
    // Chain parity flip then readout, inverted for the per-gate rate.
    const double pe = 0.01;
    const double flipped = parity_flip(0.03, 10);
    const double observed = flipped * (1 - pe) + (1 - flipped) * pe;
    const double expect = (1 - std::pow(1 - 2 * observed, 0.1)) / 2;
    for (double v : f) {
        EXPECT_NEAR(v, expect, 0.003);
    }
}

TEST(Fingerprint, DurationModel) {
    auto dev = ibmqx2();
    Circuit c("mix", 3);
    c.x(0).h(1).cnot(0, 1).swap(1, 2).ccx(0, 1, 2);
    const double want = 2 * 0.05 + 0.3 + 3 * 0.3 + 6 * 0.3 + 1.0 + 1.0;
    EXPECT_NEAR(job_duration(c, dev), want, 1e-12);
    double sum = 0, sq = 0;
    const int n = 20000;
    for (int i = 0; i < n; i++) {
        double d = sample_duration(c, dev, 4, i) - want;
        sum += d;
        sq += d * d;
    }
    EXPECT_NEAR(sum / n, 0.0, 4 * 0.02 / std::sqrt(n));
    EXPECT_NEAR(std::sqrt(sq / n), 0.02, 0.001);
    EXPECT_EQ(sample_duration(c, dev, 4, 17), sample_duration(c, dev, 4, 17));
}

TEST(Fingerprint, CrosstalkProfilesAreSeparable) {
    std::vector<DeviceProfile> ps;
    for (double e : {0.02, 0.03, 0.04}) {
        UniformNoise noise;
        noise.eps_ct = e;
        ps.push_back(uniform_profile("eps" + std::to_string(static_cast<int>(e * 100)), builtin_ibmqx2(), noise));
    }
    FingerprintParams p;
    p.trials = 60;
    p.samples = 10000;
    p.seed = 2;
    auto r = fingerprint_devices(ps, p);
    EXPECT_GE(r.at("accuracy"), 0.95);
    EXPECT_EQ(r.labels.size(), 3u);
}

TEST(Fingerprint, TimingAndControls) {
    std::vector<DeviceProfile> ps;
    for (double ro : {1.0, 1.019}) {
        UniformNoise noise;
        noise.durations.t_readout = ro;
        ps.push_back(uniform_profile("ro", builtin_ibmqx2(), noise));
    }
    FingerprintParams p;
    p.mode = FingerprintMode::Timing;
    p.samples = 10;
    p.trials = 300;
    p.seed = 8;
    auto r = fingerprint_devices(ps, p);
    EXPECT_GE(r.at("min_gap_over_stderr"), 3.0);
    EXPECT_GE(r.at("accuracy"), 0.88);
    // Duplicate names are disambiguated.
    EXPECT_NE(r.labels[0], r.labels[1]);

    p.trials = 1000;
    auto same = fingerprint_devices({ps[0], ps[0]}, p);
    EXPECT_NEAR(same.at("accuracy"), 0.5, 4 * binomial_sigma(0.5, 1000));

    EXPECT_THROW(fingerprint_devices({ps[0]}, p), std::invalid_argument);
    p.mode = FingerprintMode::Crosstalk;
    EXPECT_THROW(fingerprint_devices({ps[0], uniform_profile("l", line(5))}, p), std::invalid_argument);
}

TEST(Reports, DeterministicAcrossThreadCounts) {
    UniformNoise noise;
    noise.delta_sense = 0.03;
    auto dev = ibmqx2(noise);
    auto p = sensing({0, 1}, 40, 1024);
    auto one = run_qubit_sensing(dev, p);
    p.threads = 3;
    EXPECT_EQ(one, run_qubit_sensing(dev, p));

    auto c = grover_sweep({0, 15, 30}, 2000);
    auto c1 = run_crosstalk_attack(ibmqx2(), c);
    c.threads = 2;
    EXPECT_EQ(c1, run_crosstalk_attack(ibmqx2(), c));

    auto rp = flip_vs_idle();
    rp.trials = 50;
    auto r1 = run_reconstruction(ibmqx2(), rp);
    rp.threads = 4;
    EXPECT_EQ(r1, run_reconstruction(ibmqx2(), rp));
}

#include "qshare/transpiler.h"

#include <gtest/gtest.h>

#include <numeric>

#include "oracles.h"
#include "qshare/rng.h"

using namespace qshare;

namespace {

std::vector<uint32_t> all_qubits(uint32_t n) {
    std::vector<uint32_t> v(n);
    std::iota(v.begin(), v.end(), 0);
    return v;
}

Layout identity_layout(uint32_t n_logical, uint32_t n_physical) {
    return Layout{all_qubits(n_logical), all_qubits(n_physical)};
}

// Replays the SWAPs of a routed circuit on the initial layout.
std::vector<uint32_t> replay_swaps(const RoutedCircuit &rc) {
    std::vector<uint32_t> where = rc.initial.physical;
    for (const auto &g : rc.circuit.gates) {
        if (g.kind != GateKind::SWAP) {
            continue;
        }
        for (auto &p : where) {
            if (p == g.qubits[0]) {
                p = g.qubits[1];
            } else if (p == g.qubits[1]) {
                p = g.qubits[0];
            }
        }
    }
    return where;
}

// Logical amplitude at index L lives at the physical index whose bit
// final[l] equals bit l of L; all other physical qubits stay |0>.
void expect_equivalent(const Circuit &logical, const RoutedCircuit &rc) {
    auto want = oracle::dense_state(logical);
    auto got = statevector(decompose_swaps(rc));
    std::vector<bool> touched(got.size(), false);
    for (size_t L = 0; L < want.size(); L++) {
        size_t P = 0;
        for (uint32_t l = 0; l < logical.n_qubits; l++) {
            if ((L >> l) & 1) {
                P |= size_t{1} << rc.final_layout[l];
            }
        }
        touched[P] = true;
        ASSERT_LT(std::abs(want[L] - got[P]), 1e-10) << logical.str();
    }
    for (size_t P = 0; P < got.size(); P++) {
        if (!touched[P]) {
            ASSERT_LT(std::abs(got[P]), 1e-10);
        }
    }
}

std::vector<CouplingGraph> small_devices() {
    return {builtin_ibmqx2(), builtin_burlington(), line(5), grid(2, 3), grid(3, 3)};
}

}  // namespace

TEST(transpiler, policy_names) {
    for (auto p : {AllocationPolicy::DegreeGreedy, AllocationPolicy::CompactBfs, AllocationPolicy::ExhaustiveBest}) {
        EXPECT_EQ(parse_policy(policy_name(p)), p);
    }
    EXPECT_THROW(parse_policy("random"), std::invalid_argument);
}

TEST(transpiler, degree_greedy_takes_hub) {
    Circuit one("one", 1);
    one.x(0);
    auto g = builtin_ibmqx2();
    auto layout = allocate(one, g, all_qubits(5), AllocationPolicy::DegreeGreedy);
    EXPECT_EQ(layout.physical, (std::vector<uint32_t>{2}));
}

TEST(transpiler, compact_bfs_grows_around_hub) {
    auto g = builtin_burlington();
    Circuit c("four", 4);
    c.cnot(0, 1).cnot(2, 3);
    auto layout = allocate(c, g, all_qubits(5), AllocationPolicy::CompactBfs);
    EXPECT_EQ(layout.image(), (std::vector<uint32_t>{0, 1, 2, 3}));
    EXPECT_EQ(layout.physical[0], 1u);
}

TEST(transpiler, full_free_set_is_forced) {
    auto g = builtin_burlington();
    auto c = build_random(5, 12, 4, false);
    for (auto p : {AllocationPolicy::DegreeGreedy, AllocationPolicy::CompactBfs, AllocationPolicy::ExhaustiveBest}) {
        EXPECT_EQ(allocate(c, g, all_qubits(5), p).image(), all_qubits(5));
    }
}

TEST(transpiler, allocate_errors) {
    auto g = builtin_ibmqx2();
    auto c = build_half_adder();
    EXPECT_THROW(allocate(c, g, {0, 1}, AllocationPolicy::CompactBfs), std::invalid_argument);
    auto big = build_random(7, 10, 1);
    auto grid_g = grid(3, 4);
    EXPECT_THROW(allocate(big, grid_g, all_qubits(12), AllocationPolicy::ExhaustiveBest), std::invalid_argument);
    EXPECT_THROW(allocate(c, grid_g, all_qubits(12), AllocationPolicy::ExhaustiveBest), std::invalid_argument);
}

TEST(transpiler, route_examples) {
    auto g = builtin_burlington();
    Circuit adj("adj", 5);
    adj.cnot(0, 1);
    EXPECT_EQ(route(adj, identity_layout(5, 5), g).swap_count, 0u);

    Circuit far("far", 5);
    far.cnot(0, 4);
    auto rc = route(far, identity_layout(5, 5), g);
    EXPECT_EQ(rc.swap_count, 2u);
    EXPECT_EQ(rc.circuit.gates[0], (Gate{GateKind::SWAP, {0, 1}}));
    EXPECT_EQ(rc.circuit.gates[1], (Gate{GateKind::SWAP, {1, 3}}));
    EXPECT_EQ(rc.circuit.gates[2], (Gate{GateKind::CNOT, {3, 4}}));
    EXPECT_EQ(rc.final_layout[0], 3u);
}

TEST(transpiler, single_qubit_gates_never_swap) {
    Circuit c("ones", 3);
    c.x(0).h(1).ry(2, 0.3).x(2);
    Layout layout{{0, 4, 2}, all_qubits(5)};
    EXPECT_EQ(route(c, layout, builtin_burlington()).swap_count, 0u);
}

TEST(transpiler, route_errors) {
    auto g = builtin_burlington();
    Circuit c("c", 2);
    c.cnot(0, 1);
    EXPECT_THROW(route(c, Layout{{0, 4}, {0, 2, 4}}, g), RoutingError);
    EXPECT_THROW(route(c, Layout{{0, 0}, all_qubits(5)}, g), std::invalid_argument);
    EXPECT_THROW(route(c, Layout{{0, 3}, {0, 1, 2}}, g), std::invalid_argument);
}

TEST(transpiler, routed_circuits_are_legal_and_equivalent) {
    auto devices = small_devices();
    for (uint64_t seed = 0; seed < 50; seed++) {
        const auto &g = devices[seed % devices.size()];
        uint32_t n = 2 + static_cast<uint32_t>(seed % 4);
        bool logical_swaps = seed % 3 == 0;
        auto c = build_random(n, 15, 300 + seed, true, logical_swaps);
        auto policy = seed % 2 ? AllocationPolicy::CompactBfs : AllocationPolicy::DegreeGreedy;
        auto rc = route(c, allocate(c, g, all_qubits(g.n_qubits()), policy), g);
        EXPECT_TRUE(is_adjacency_legal(rc.circuit, g));
        EXPECT_TRUE(is_adjacency_legal(decompose_swaps(rc), g));
        EXPECT_EQ(rc.circuit.count(GateKind::SWAP), c.count(GateKind::SWAP) + rc.swap_count);
        if (!logical_swaps) {
            EXPECT_EQ(replay_swaps(rc), rc.final_layout.physical);
        }
        expect_equivalent(c, rc);
    }
}

TEST(transpiler, ccx_operands_become_connected) {
    // Grid graphs have no triangles; a connected operand path suffices.
    auto g = grid(3, 3);
    auto c = build_grover3("111", 2);
    auto rc = route(c, Layout{{0, 8, 2}, all_qubits(9)}, g);
    EXPECT_TRUE(is_adjacency_legal(rc.circuit, g));
    EXPECT_GT(rc.swap_count, 0u);
    expect_equivalent(c, rc);
}

TEST(transpiler, decompose_swaps) {
    Circuit c("s", 2);
    c.swap(0, 1);
    auto d = decompose_swaps(c);
    ASSERT_EQ(d.gates.size(), 3u);
    EXPECT_EQ(d.gates[0], (Gate{GateKind::CNOT, {0, 1}}));
    EXPECT_EQ(d.gates[1], (Gate{GateKind::CNOT, {1, 0}}));
    EXPECT_EQ(d.gates[2], (Gate{GateKind::CNOT, {0, 1}}));
    auto plain = build_half_adder();
    EXPECT_EQ(decompose_swaps(plain), plain);
    for (uint64_t seed = 0; seed < 10; seed++) {
        auto r = build_random(4, 20, seed, true, true);
        auto a = oracle::dense_state(r);
        auto b = statevector(decompose_swaps(r));
        for (size_t i = 0; i < a.size(); i++) {
            EXPECT_LT(std::abs(a[i] - b[i]), 1e-10);
        }
    }
}

TEST(transpiler, exhaustive_dominates_compact_bfs) {
    size_t bfs_total = 0, exhaustive_total = 0;
    auto devices = small_devices();
    for (uint64_t seed = 0; seed < 30; seed++) {
        const auto &g = devices[seed % devices.size()];
        uint32_t n = 3 + static_cast<uint32_t>(seed % 3);
        auto c = build_random(n, 12, 900 + seed);
        auto free = all_qubits(g.n_qubits());
        auto best = route(c, allocate(c, g, free, AllocationPolicy::ExhaustiveBest), g).swap_count;
        auto bfs = route(c, allocate(c, g, free, AllocationPolicy::CompactBfs), g).swap_count;
        EXPECT_LE(best, bfs) << c.str();
        bfs_total += bfs;
        exhaustive_total += best;
    }
    EXPECT_LT(exhaustive_total, bfs_total);
}

TEST(transpiler, exhaustive_matches_brute_force) {
    // Independent enumeration of all injective maps over the free set.
    auto g = builtin_burlington();
    for (uint64_t seed = 0; seed < 8; seed++) {
        auto c = build_random(3, 10, 40 + seed, false);
        std::vector<uint32_t> free{0, 1, 3, 4};
        size_t best = SIZE_MAX;
        for (uint32_t a : free) {
            for (uint32_t b : free) {
                for (uint32_t d : free) {
                    if (a == b || b == d || a == d) {
                        continue;
                    }
                    best = std::min(best, route(c, Layout{{a, b, d}, free}, g).swap_count);
                }
            }
        }
        auto layout = allocate(c, g, free, AllocationPolicy::ExhaustiveBest);
        EXPECT_EQ(route(c, layout, g).swap_count, best);
    }
}

TEST(transpiler, exhaustive_monotone_under_restriction) {
    auto g = grid(4, 5);
    std::vector<uint32_t> wide = all_qubits(10);
    std::vector<uint32_t> narrow{0, 1, 2, 3, 4, 5, 9};
    ASSERT_TRUE(g.is_connected(narrow));
    for (uint64_t seed = 0; seed < 10; seed++) {
        uint32_t n = 3 + static_cast<uint32_t>(seed % 3);
        auto c = build_random(n, 12, 70 + seed);
        auto over_wide = route(c, allocate(c, g, wide, AllocationPolicy::ExhaustiveBest), g).swap_count;
        auto over_narrow = route(c, allocate(c, g, narrow, AllocationPolicy::ExhaustiveBest), g).swap_count;
        EXPECT_GE(over_narrow, over_wide);
    }
}

TEST(transpiler, to_logical_follows_final_layout) {
    Histogram h(5);
    h.add("00010", 7);
    auto logical = to_logical(h, Layout{{3, 0}, all_qubits(5)});
    EXPECT_EQ(logical.count("10"), 7u);
}

TEST(transpiler, schedule_examples) {
    Circuit a("a", 3), b("b", 3);
    a.x(0);
    b.x(2);
    auto s = schedule({{0, a}, {1, b}}, 3);
    EXPECT_EQ(s.depth(), 1u);
    EXPECT_EQ(s.gate_count(), 2u);

    Circuit seq("seq", 1);
    seq.x(0).h(0).x(0);
    EXPECT_EQ(schedule({{0, seq}}, 1).depth(), 3u);
    EXPECT_EQ(schedule({{0, build_half_adder()}}, 3).depth(), 3u);

    Circuit clash("clash", 3);
    clash.x(0);
    EXPECT_THROW(schedule({{0, a}, {1, clash}}, 3), std::invalid_argument);
    EXPECT_THROW(schedule({{0, a}, {0, b}}, 3), std::invalid_argument);
}

TEST(transpiler, reschedule_splits_single_conflict) {
    auto g = line(4);
    Circuit a("a", 4), b("b", 4);
    a.cnot(0, 1);
    b.cnot(2, 3);
    auto s = schedule({{0, a}, {1, b}}, 4);
    ASSERT_EQ(s.depth(), 1u);
    EXPECT_EQ(crosstalk_conflicts(s, g), 1u);
    auto r = crosstalk_aware_reschedule(s, g);
    EXPECT_EQ(r.depth(), 2u);
    EXPECT_EQ(crosstalk_conflicts(r, g), 0u);
    EXPECT_EQ(r.layers[0][0].tenant, 0u);
    EXPECT_EQ(r.layers[1][0].tenant, 1u);

    auto quiet = schedule({{0, a}}, 4);
    EXPECT_EQ(crosstalk_aware_reschedule(quiet, g), quiet);
}

TEST(transpiler, reschedule_property) {
    auto g = grid(3, 4);
    for (uint64_t seed = 0; seed < 50; seed++) {
        // Tenant 0 on the left two columns, tenant 1 on the right two.
        std::vector<uint32_t> left{0, 1, 4, 5, 8, 9}, right{2, 3, 6, 7, 10, 11};
        std::vector<TenantCircuit> jobs;
        for (uint32_t t = 0; t < 2; t++) {
            const auto &region = t == 0 ? left : right;
            Circuit c("t" + std::to_string(t), 12);
            for (int k = 0; k < 25; k++) {
                uint64_t r = derive(seed, {t, static_cast<uint64_t>(k)});
                uint32_t a = region[r % 6];
                auto nbrs = g.neighbors(a);
                std::vector<uint32_t> inside;
                for (auto q : nbrs) {
                    if (std::find(region.begin(), region.end(), q) != region.end()) {
                        inside.push_back(q);
                    }
                }
                if ((r >> 8) % 3 == 0 || inside.empty()) {
                    c.h(a);
                } else {
                    c.cnot(a, inside[(r >> 16) % inside.size()]);
                }
            }
            jobs.push_back({t, c});
        }
        auto s = schedule(jobs, 12);
        auto r = crosstalk_aware_reschedule(s, g);
        EXPECT_EQ(crosstalk_conflicts(r, g), 0u);
        EXPECT_GE(r.depth(), s.depth());
        EXPECT_EQ(r.gate_count(), s.gate_count());
        for (const auto &job : jobs) {
            EXPECT_EQ(tenant_gates(r, job.tenant).gates, job.circuit.gates);
        }
        // Per qubit, gates of each tenant appear in increasing program order.
        std::vector<int64_t> last(12, -1);
        for (const auto &layer : r.layers) {
            for (const auto &sg : layer) {
                for (auto q : sg.gate.qubits) {
                    EXPECT_LT(last[q], static_cast<int64_t>(sg.index));
                    last[q] = static_cast<int64_t>(sg.index);
                }
            }
        }
        for (const auto &layer : r.layers) {
            std::vector<int> used(12, 0);
            for (const auto &sg : layer) {
                for (auto q : sg.gate.qubits) {
                    EXPECT_EQ(used[q]++, 0);
                }
            }
        }
    }
}

TEST(transpiler, output_mask) {
    auto c = build_half_adder();
    EXPECT_EQ(apply_output_mask(c, "000"), c);
    auto masked = apply_output_mask(c, "010");
    EXPECT_EQ(masked.gates.back(), (Gate{GateKind::X, {1}}));
    EXPECT_THROW(apply_output_mask(c, "01"), std::invalid_argument);

    auto d = uniform_profile("ibmqx2", builtin_ibmqx2());
    RunSpec s;
    s.device = d;
    s.shots = 500;
    s.seed = 3;
    s.noise = NoiseFlags::all_off();
    s.circuit = masked;
    auto h = run(s);
    EXPECT_EQ(h.count("100"), 500u);
    EXPECT_EQ(unmask(h, "010").count("110"), 500u);

    Histogram any(3);
    any.add("101", 4);
    any.add("011", 9);
    EXPECT_EQ(unmask(unmask(any, "110"), "110"), any);
    EXPECT_EQ(unmask(any, "000"), any);
    EXPECT_THROW(unmask(any, "1"), std::invalid_argument);
}

TEST(transpiler, mask_then_unmask_is_exact_without_noise) {
    auto d = uniform_profile("ibmqx2", builtin_ibmqx2());
    for (uint64_t seed = 0; seed < 8; seed++) {
        auto c = build_random(5, 20, 500 + seed, false);
        std::string mask = bits_to_key(derive(seed, {1}) & 31, 5);
        RunSpec plain;
        plain.device = d;
        plain.shots = 2000;
        plain.seed = seed;
        plain.noise = NoiseFlags::all_off();
        plain.circuit = c;
        RunSpec masked = plain;
        masked.circuit = apply_output_mask(c, mask);
        EXPECT_EQ(unmask(run(masked), mask), run(plain)) << mask;
    }
}

#include "qshare/transpiler.h"

#include <algorithm>
#include <deque>
#include <limits>
#include <set>

namespace qshare {

std::string policy_name(AllocationPolicy p) {
    switch (p) {
        case AllocationPolicy::DegreeGreedy:
            return "degree_greedy";
        case AllocationPolicy::CompactBfs:
            return "compact_bfs";
        case AllocationPolicy::ExhaustiveBest:
            return "exhaustive_best";
    }
    return "?";
}

AllocationPolicy parse_policy(const std::string &name) {
    if (name == "degree_greedy") {
        return AllocationPolicy::DegreeGreedy;
    }
    if (name == "compact_bfs") {
        return AllocationPolicy::CompactBfs;
    }
    if (name == "exhaustive_best") {
        return AllocationPolicy::ExhaustiveBest;
    }
    throw std::invalid_argument("unknown allocation policy '" + name + "'");
}

std::vector<uint32_t> Layout::image() const {
    auto out = physical;
    std::sort(out.begin(), out.end());
    return out;
}

void check_layout(const Layout &layout, uint32_t n_physical) {
    std::vector<bool> allowed(n_physical, false);
    for (auto p : layout.allowed) {
        if (p >= n_physical) {
            throw std::invalid_argument("allowed qubit " + std::to_string(p) + " out of range");
        }
        allowed[p] = true;
    }
    std::vector<bool> used(n_physical, false);
    for (size_t l = 0; l < layout.physical.size(); l++) {
        uint32_t p = layout.physical[l];
        if (p >= n_physical || !allowed[p]) {
            throw std::invalid_argument("logical " + std::to_string(l) + " mapped outside the allowed set");
        }
        if (used[p]) {
            throw std::invalid_argument("layout is not injective at physical " + std::to_string(p));
        }
        used[p] = true;
    }
}

namespace {

// Shortest-path tables restricted to one allowed set.
class Router {
   public:
    Router(const CouplingGraph &g, const std::vector<uint32_t> &allowed) : g_(g), n_(g.n_qubits()) {
        mask_.assign(n_, false);
        for (auto q : allowed) {
            mask_[q] = true;
        }
        dist_.resize(static_cast<size_t>(n_) * n_, -1);
        for (auto q : allowed) {
            auto d = g.distances_from(q, mask_);
            std::copy(d.begin(), d.end(), dist_.begin() + static_cast<std::ptrdiff_t>(q) * n_);
        }
    }

    int dist(uint32_t a, uint32_t b) const {
        return dist_[a * n_ + b];
    }

    bool adjacent(uint32_t a, uint32_t b) const {
        return g_.are_adjacent(a, b);
    }

    uint32_t next_hop(uint32_t from, uint32_t to) const {
        int d = dist(from, to);
        for (uint32_t v : g_.neighbors(from)) {
            if (mask_[v] && dist(v, to) == d - 1) {
                return v;
            }
        }
        throw RoutingError("no next hop");
    }

    // Routes `c` starting from `where` (logical -> physical, updated in place).
    // Returns the inserted SWAP count, or stops early and returns
    // `abort_above + 1` once the count exceeds `abort_above`.
    size_t run(const Circuit &c, std::vector<uint32_t> &where, Circuit *out, size_t abort_above) const {
        std::vector<int64_t> occupant(n_, -1);
        for (size_t l = 0; l < where.size(); l++) {
            occupant[where[l]] = static_cast<int64_t>(l);
        }
        size_t swaps = 0;
        auto do_swap = [&](uint32_t a, uint32_t b) {
            std::swap(occupant[a], occupant[b]);
            if (occupant[a] >= 0) {
                where[occupant[a]] = a;
            }
            if (occupant[b] >= 0) {
                where[occupant[b]] = b;
            }
            if (out) {
                out->swap(a, b);
            }
            swaps++;
        };
        auto walk = [&](uint32_t logical, uint32_t toward, auto done, size_t gate_index) {
            while (!done()) {
                uint32_t from = where[logical];
                if (dist(from, toward) < 0) {
                    throw RoutingError("gate " + std::to_string(gate_index) + " (" + c.gates[gate_index].str() +
                                       "): operands are disconnected inside the allowed set");
                }
                do_swap(from, next_hop(from, toward));
                if (swaps > abort_above) {
                    return false;
                }
            }
            return true;
        };

        for (size_t i = 0; i < c.gates.size(); i++) {
            const auto &gate = c.gates[i];
            if (gate.is_multi_qubit()) {
                uint32_t a = gate.qubits[0], b = gate.qubits[1];
                bool ok = walk(a, where[b], [&] { return adjacent(where[a], where[b]); }, i);
                if (ok && gate.kind == GateKind::CCX) {
                    uint32_t t = gate.qubits[2];
                    uint32_t pa = where[a], pb = where[b];
                    int da = dist(where[t], pa), db = dist(where[t], pb);
                    if (da < 0 || db < 0) {
                        throw RoutingError("gate " + std::to_string(i) + " (" + gate.str() +
                                           "): unroutable CCX, third operand cannot reach the pair");
                    }
                    uint32_t toward = (da < db || (da == db && pa < pb)) ? pa : pb;
                    ok = walk(t, toward, [&] { return adjacent(where[t], pa) || adjacent(where[t], pb); }, i);
                }
                if (!ok) {
                    return swaps;
                }
            }
            if (out) {
                Gate phys = gate;
                for (auto &q : phys.qubits) {
                    q = where[q];
                }
                out->append(std::move(phys));
            }
        }
        return swaps;
    }

   private:
    const CouplingGraph &g_;
    uint32_t n_;
    std::vector<bool> mask_;
    std::vector<int> dist_;
};

std::vector<uint32_t> checked_free(const Circuit &c, const CouplingGraph &g, const std::vector<uint32_t> &free) {
    std::vector<uint32_t> sorted = free;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw std::invalid_argument("free set has duplicates");
    }
    for (auto q : sorted) {
        if (q >= g.n_qubits()) {
            throw std::invalid_argument("free qubit " + std::to_string(q) + " out of range");
        }
    }
    if (sorted.size() < c.n_qubits) {
        throw std::invalid_argument("not enough free qubits: circuit '" + c.name + "' needs " +
                                    std::to_string(c.n_qubits) + ", " + std::to_string(sorted.size()) +
                                    " free");
    }
    return sorted;
}

bool by_degree(const CouplingGraph &g, uint32_t a, uint32_t b) {
    if (g.degree(a) != g.degree(b)) {
        return g.degree(a) > g.degree(b);
    }
    return a < b;
}

std::vector<uint32_t> bfs_order(const CouplingGraph &g, const std::vector<uint32_t> &free, size_t want) {
    std::vector<bool> is_free(g.n_qubits(), false);
    for (auto q : free) {
        is_free[q] = true;
    }
    std::vector<uint32_t> by_deg = free;
    std::sort(by_deg.begin(), by_deg.end(), [&](uint32_t a, uint32_t b) { return by_degree(g, a, b); });
    // A component too small for the circuit is skipped; if none is large
    // enough the components are concatenated in start order.
    std::vector<bool> seen(g.n_qubits(), false);
    std::vector<uint32_t> fallback;
    for (auto start : by_deg) {
        if (seen[start]) {
            continue;
        }
        std::vector<uint32_t> order;
        std::deque<uint32_t> queue{start};
        seen[start] = true;
        while (!queue.empty()) {
            uint32_t u = queue.front();
            queue.pop_front();
            order.push_back(u);
            for (auto v : g.neighbors(u)) {
                if (is_free[v] && !seen[v]) {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        if (order.size() >= want) {
            order.resize(want);
            return order;
        }
        fallback.insert(fallback.end(), order.begin(), order.end());
    }
    fallback.resize(std::min(fallback.size(), want));
    return fallback;
}

bool needs_routing(const Circuit &c) {
    return c.multi_qubit_gate_count() > 0;
}

}  // namespace

Layout allocate(const Circuit &c, const CouplingGraph &g, const std::vector<uint32_t> &free,
                AllocationPolicy policy) {
    auto pool = checked_free(c, g, free);
    Layout layout;
    layout.allowed = pool;
    switch (policy) {
        case AllocationPolicy::DegreeGreedy: {
            auto order = pool;
            std::sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) { return by_degree(g, a, b); });
            layout.physical.assign(order.begin(), order.begin() + c.n_qubits);
            break;
        }
        case AllocationPolicy::CompactBfs: {
            layout.physical = bfs_order(g, pool, c.n_qubits);
            break;
        }
        case AllocationPolicy::ExhaustiveBest: {
            if (c.n_qubits > kExhaustiveMaxLogical || pool.size() > kExhaustiveMaxFree) {
                throw std::invalid_argument("exhaustive_best is limited to " + std::to_string(kExhaustiveMaxLogical) +
                                            " logical and " + std::to_string(kExhaustiveMaxFree) +
                                            " free qubits");
            }
            if (needs_routing(c) && !g.is_connected(pool)) {
                throw RoutingError("exhaustive_best: free set is disconnected");
            }
            Router router(g, pool);
            size_t best = std::numeric_limits<size_t>::max();
            std::vector<uint32_t> current, best_layout;
            std::vector<bool> used(pool.size(), false);
            // Lexicographic enumeration; only a strictly better count replaces the incumbent.
            auto search = [&](auto &self) -> void {
                if (current.size() == c.n_qubits) {
                    auto where = current;
                    size_t swaps = router.run(c, where, nullptr, best - 1);
                    if (swaps < best) {
                        best = swaps;
                        best_layout = current;
                    }
                    return;
                }
                for (size_t k = 0; k < pool.size() && best != 0; k++) {
                    if (used[k]) {
                        continue;
                    }
                    used[k] = true;
                    current.push_back(pool[k]);
                    self(self);
                    current.pop_back();
                    used[k] = false;
                }
            };
            search(search);
            layout.physical = best_layout;
            break;
        }
    }
    return layout;
}

RoutedCircuit route(const Circuit &c, const Layout &layout, const CouplingGraph &g) {
    require_valid(c);
    check_layout(layout, g.n_qubits());
    if (layout.size() != c.n_qubits) {
        throw std::invalid_argument("layout size does not match circuit '" + c.name + "'");
    }
    if (needs_routing(c) && !g.is_connected(layout.allowed)) {
        throw RoutingError("allowed set is disconnected; cannot route '" + c.name + "'");
    }
    Router router(g, layout.allowed);
    RoutedCircuit rc;
    rc.circuit = Circuit(c.name, g.n_qubits());
    rc.initial = layout;
    auto where = layout.physical;
    rc.swap_count = router.run(c, where, &rc.circuit, std::numeric_limits<size_t>::max() - 1);
    rc.final_layout = Layout{where, layout.allowed};
    return rc;
}

bool is_adjacency_legal(const Circuit &physical, const CouplingGraph &g) {
    for (const auto &gate : physical.gates) {
        if (!gate.is_multi_qubit()) {
            continue;
        }
        if (gate.qubits.size() == 2) {
            if (!g.are_adjacent(gate.qubits[0], gate.qubits[1])) {
                return false;
            }
        } else if (!g.is_connected(gate.qubits)) {
            return false;
        }
    }
    return true;
}

Circuit decompose_swaps(const Circuit &c) {
    Circuit out(c.name, c.n_qubits);
    for (const auto &gate : c.gates) {
        if (gate.kind == GateKind::SWAP) {
            uint32_t a = gate.qubits[0], b = gate.qubits[1];
            out.cnot(a, b).cnot(b, a).cnot(a, b);
        } else {
            out.append(gate);
        }
    }
    return out;
}

Circuit decompose_swaps(const RoutedCircuit &rc) {
    return decompose_swaps(rc.circuit);
}

Histogram to_logical(const Histogram &physical, const Layout &final_layout) {
    return physical.marginal(final_layout.physical);
}

size_t GateSchedule::gate_count() const {
    size_t n = 0;
    for (const auto &layer : layers) {
        n += layer.size();
    }
    return n;
}

GateSchedule schedule(const std::vector<TenantCircuit> &circuits, uint32_t n_qubits) {
    std::vector<int64_t> owner(n_qubits, -1);
    std::set<uint32_t> tenants;
    for (const auto &tc : circuits) {
        if (!tenants.insert(tc.tenant).second) {
            throw std::invalid_argument("duplicate tenant id " + std::to_string(tc.tenant));
        }
        for (const auto &gate : tc.circuit.gates) {
            for (auto q : gate.qubits) {
                if (q >= n_qubits) {
                    throw std::invalid_argument("tenant " + std::to_string(tc.tenant) + " uses qubit " +
                                                std::to_string(q) + " outside the device");
                }
                if (owner[q] >= 0 && owner[q] != tc.tenant) {
                    throw std::invalid_argument("tenants " + std::to_string(owner[q]) + " and " +
                                                std::to_string(tc.tenant) + " overlap on qubit " +
                                                std::to_string(q));
                }
                owner[q] = tc.tenant;
            }
        }
    }
    auto ordered = circuits;
    std::sort(ordered.begin(), ordered.end(),
              [](const TenantCircuit &a, const TenantCircuit &b) { return a.tenant < b.tenant; });

    GateSchedule s;
    s.n_qubits = n_qubits;
    std::vector<size_t> next_free(n_qubits, 0);
    for (const auto &tc : ordered) {
        for (size_t i = 0; i < tc.circuit.gates.size(); i++) {
            const auto &gate = tc.circuit.gates[i];
            size_t layer = 0;
            for (auto q : gate.qubits) {
                layer = std::max(layer, next_free[q]);
            }
            if (s.layers.size() <= layer) {
                s.layers.resize(layer + 1);
            }
            s.layers[layer].push_back({tc.tenant, i, gate});
            for (auto q : gate.qubits) {
                next_free[q] = layer + 1;
            }
        }
    }
    return s;
}

namespace {

bool operands_touch(const Gate &a, const Gate &b, const CouplingGraph &g) {
    for (auto p : a.qubits) {
        for (auto q : b.qubits) {
            if (p == q || g.are_adjacent(p, q)) {
                return true;
            }
        }
    }
    return false;
}

bool conflicts(const ScheduledGate &a, const ScheduledGate &b, const CouplingGraph &g) {
    return a.tenant != b.tenant && a.gate.is_multi_qubit() && b.gate.is_multi_qubit() &&
           operands_touch(a.gate, b.gate, g);
}

}  // namespace

size_t crosstalk_conflicts(const GateSchedule &s, const CouplingGraph &g) {
    size_t n = 0;
    for (const auto &layer : s.layers) {
        for (size_t i = 0; i < layer.size(); i++) {
            for (size_t j = i + 1; j < layer.size(); j++) {
                n += conflicts(layer[i], layer[j], g);
            }
        }
    }
    return n;
}

GateSchedule crosstalk_aware_reschedule(const GateSchedule &s, const CouplingGraph &g) {
    if (crosstalk_conflicts(s, g) == 0) {
        return s;
    }
    GateSchedule out;
    out.n_qubits = s.n_qubits;
    std::vector<size_t> next_free(s.n_qubits, 0);
    for (const auto &layer : s.layers) {
        auto ordered = layer;
        std::stable_sort(ordered.begin(), ordered.end(),
                         [](const ScheduledGate &a, const ScheduledGate &b) { return a.tenant < b.tenant; });
        for (const auto &sg : ordered) {
            size_t target = 0;
            for (auto q : sg.gate.qubits) {
                target = std::max(target, next_free[q]);
            }
            while (true) {
                if (out.layers.size() <= target) {
                    out.layers.resize(target + 1);
                }
                bool clash = false;
                for (const auto &other : out.layers[target]) {
                    if (conflicts(sg, other, g)) {
                        clash = true;
                        break;
                    }
                }
                if (!clash) {
                    break;
                }
                target++;
            }
            out.layers[target].push_back(sg);
            for (auto q : sg.gate.qubits) {
                next_free[q] = target + 1;
            }
        }
    }
    for (auto &layer : out.layers) {
        std::stable_sort(layer.begin(), layer.end(), [](const ScheduledGate &a, const ScheduledGate &b) {
            return a.tenant != b.tenant ? a.tenant < b.tenant : a.index < b.index;
        });
    }
    return out;
}

Circuit flatten(const GateSchedule &s, std::string name) {
    Circuit out(std::move(name), s.n_qubits);
    for (const auto &layer : s.layers) {
        for (const auto &sg : layer) {
            out.append(sg.gate);
        }
    }
    return out;
}

Circuit tenant_gates(const GateSchedule &s, uint32_t tenant) {
    std::vector<const ScheduledGate *> mine;
    for (const auto &layer : s.layers) {
        for (const auto &sg : layer) {
            if (sg.tenant == tenant) {
                mine.push_back(&sg);
            }
        }
    }
    std::stable_sort(mine.begin(), mine.end(),
                     [](const ScheduledGate *a, const ScheduledGate *b) { return a->index < b->index; });
    Circuit out("tenant_" + std::to_string(tenant), s.n_qubits);
    for (const auto *sg : mine) {
        out.append(sg->gate);
    }
    return out;
}

Circuit apply_output_mask(const Circuit &c, const std::string &mask) {
    if (mask.size() != c.n_qubits) {
        throw std::invalid_argument("mask length " + std::to_string(mask.size()) + " does not match " +
                                    std::to_string(c.n_qubits) + " qubits");
    }
    key_to_bits(mask);
    Circuit out = c;
    for (uint32_t q = 0; q < c.n_qubits; q++) {
        if (mask[q] == '1') {
            out.x(q);
        }
    }
    return out;
}

Histogram unmask(const Histogram &h, const std::string &mask) {
    return h.xor_keys(mask);
}

}  // namespace qshare

#ifndef QSHARE_TRANSPILER_H
#define QSHARE_TRANSPILER_H

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "qshare/circuit.h"
#include "qshare/sim.h"
#include "qshare/topology.h"

namespace qshare {

struct RoutingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class AllocationPolicy { DegreeGreedy, CompactBfs, ExhaustiveBest };

std::string policy_name(AllocationPolicy p);
AllocationPolicy parse_policy(const std::string &name);

/// Logical-to-physical assignment together with the physical qubits the
/// owner may touch (SWAP routing never leaves `allowed`).
struct Layout {
    std::vector<uint32_t> physical;
    std::vector<uint32_t> allowed;

    uint32_t operator[](uint32_t logical) const {
        return physical.at(logical);
    }
    size_t size() const {
        return physical.size();
    }
    /// Sorted physical image.
    std::vector<uint32_t> image() const;
    bool operator==(const Layout &) const = default;
};

/// Throws std::invalid_argument unless the layout is injective and its image
/// lies inside `allowed`.
void check_layout(const Layout &layout, uint32_t n_physical);

struct RoutedCircuit {
    Circuit circuit;  // physical, n_qubits = device size
    Layout initial;
    Layout final_layout;
    size_t swap_count = 0;
};

/// Exhaustive search limits.
constexpr size_t kExhaustiveMaxLogical = 6;
constexpr size_t kExhaustiveMaxFree = 10;

Layout allocate(const Circuit &c, const CouplingGraph &g, const std::vector<uint32_t> &free, AllocationPolicy policy);

/// Greedy per-gate router. Non-adjacent operands are brought together by
/// SWAPs along the lexicographically smallest shortest path inside the
/// allowed set: the first operand walks toward the second, and for CCX the
/// third operand then walks toward the nearer of the pair. A CCX is legal once
/// its operands induce a connected subgraph.
RoutedCircuit route(const Circuit &c, const Layout &layout, const CouplingGraph &g);

/// Whether every multi-qubit gate is executable on `g` (2-qubit gates on an
/// edge, CCX operands connected).
bool is_adjacency_legal(const Circuit &physical, const CouplingGraph &g);

/// SWAP(a,b) -> CNOT(a,b) CNOT(b,a) CNOT(a,b).
Circuit decompose_swaps(const Circuit &c);
Circuit decompose_swaps(const RoutedCircuit &rc);

/// Re-express a histogram over physical qubits in logical order.
Histogram to_logical(const Histogram &physical, const Layout &final_layout);

struct TenantCircuit {
    uint32_t tenant;
    Circuit circuit;  // physical
};

struct ScheduledGate {
    uint32_t tenant;
    size_t index;  // position in the tenant's circuit
    Gate gate;
    bool operator==(const ScheduledGate &) const = default;
};

struct GateSchedule {
    uint32_t n_qubits = 0;
    std::vector<std::vector<ScheduledGate>> layers;

    size_t depth() const {
        return layers.size();
    }
    size_t gate_count() const;
    bool operator==(const GateSchedule &) const = default;
};

/// ASAP layering of circuits acting on disjoint physical qubit sets.
GateSchedule schedule(const std::vector<TenantCircuit> &circuits, uint32_t n_qubits);

/// Pairs of multi-qubit gates from different tenants sharing a layer whose
/// operand sets are joined by a graph edge.
size_t crosstalk_conflicts(const GateSchedule &s, const CouplingGraph &g);

/// Defers gates until no layer holds a cross-tenant conflict. The higher
/// tenant id is the one deferred.
GateSchedule crosstalk_aware_reschedule(const GateSchedule &s, const CouplingGraph &g);

/// All gates in layer order, tenants ascending within a layer.
Circuit flatten(const GateSchedule &s, std::string name = "schedule");
/// One tenant's gates in program order (by recorded index).
Circuit tenant_gates(const GateSchedule &s, uint32_t tenant);

/// Append X to each qubit whose mask bit is 1.
Circuit apply_output_mask(const Circuit &c, const std::string &mask);
Histogram unmask(const Histogram &h, const std::string &mask);

}  // namespace qshare

#endif

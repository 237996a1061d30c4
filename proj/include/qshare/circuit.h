#ifndef QSHARE_CIRCUIT_H
#define QSHARE_CIRCUIT_H

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qshare {

enum class GateKind : uint8_t { X, H, RY, CNOT, CCX, SWAP };

size_t gate_arity(GateKind kind);
std::string_view gate_name(GateKind kind);

struct Gate {
    GateKind kind;
    // Controls first, target last.
    std::vector<uint32_t> qubits;
    // Only meaningful for RY.
    double angle = 0.0;

    bool is_multi_qubit() const {
        return qubits.size() > 1;
    }
    bool operator==(const Gate &other) const = default;
    std::string str() const;
};

/// An ordered gate list over `n_qubits` logical qubits. Every circuit ends
/// with an implicit measurement of all qubits.
///
/// Builder methods do not range-check operands; call `validate` when the
/// circuit comes from an untrusted source.
struct Circuit {
    std::string name;
    uint32_t n_qubits = 0;
    std::vector<Gate> gates;

    Circuit() = default;
    Circuit(std::string name, uint32_t n_qubits) : name(std::move(name)), n_qubits(n_qubits) {
    }

    Circuit &x(uint32_t q);
    Circuit &h(uint32_t q);
    Circuit &ry(uint32_t q, double angle);
    Circuit &cnot(uint32_t control, uint32_t target);
    Circuit &ccx(uint32_t c1, uint32_t c2, uint32_t target);
    Circuit &swap(uint32_t a, uint32_t b);
    Circuit &append(Gate gate);

    size_t multi_qubit_gate_count() const;
    size_t count(GateKind kind) const;
    size_t count_on(GateKind kind, uint32_t q) const;
    /// Number of ASAP layers when gates on disjoint qubits run together.
    size_t depth() const;

    bool operator==(const Circuit &other) const = default;
    std::string str() const;
};

struct Violation {
    size_t gate_index;
    std::string message;
};

/// Every invariant violation in `c`; empty means the circuit is well formed.
std::vector<Violation> validate(const Circuit &c);

/// Throws std::invalid_argument listing the violations, if any.
void require_valid(const Circuit &c);

Circuit build_half_adder();
Circuit build_adversary_chain(size_t n);
/// Grover search over 3 qubits. `marked` is given in display order (qubit 0 leftmost).
Circuit build_grover3(std::string_view marked, size_t iterations = 2);
/// The two reference-signature calibration circuits: qubit 0 is a stand-in
/// padded with 4 (ends in |0>) or 5 (ends in |1>) X gates, qubit 1 is the
/// adversary applying a single X last.
std::pair<Circuit, Circuit> build_reference_signature_pair();
Circuit build_probe(uint32_t n_qubits);

/// Random circuit over {X, H, RY, CNOT, CCX, SWAP} with the given gate count.
/// `allow_ccx` and `allow_swap` restrict the kinds drawn.
Circuit build_random(uint32_t n_qubits, size_t n_gates, uint64_t seed, bool allow_ccx = true,
                     bool allow_swap = true);

}  // namespace qshare

#endif

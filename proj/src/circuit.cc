#include "qshare/circuit.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "qshare/rng.h"

namespace qshare {

size_t gate_arity(GateKind kind) {
    switch (kind) {
        case GateKind::X:
        case GateKind::H:
        case GateKind::RY:
            return 1;
        case GateKind::CNOT:
        case GateKind::SWAP:
            return 2;
        case GateKind::CCX:
            return 3;
    }
    throw std::invalid_argument("unknown gate kind");
}

std::string_view gate_name(GateKind kind) {
    switch (kind) {
        case GateKind::X:
            return "X";
        case GateKind::H:
            return "H";
        case GateKind::RY:
            return "RY";
        case GateKind::CNOT:
            return "CNOT";
        case GateKind::CCX:
            return "CCX";
        case GateKind::SWAP:
            return "SWAP";
    }
    return "?";
}

std::string Gate::str() const {
    std::ostringstream out;
    out << gate_name(kind);
    if (kind == GateKind::RY) {
        out << "[" << angle << "]";
    }
    out << "(";
    for (size_t k = 0; k < qubits.size(); k++) {
        if (k) {
            out << ",";
        }
        out << qubits[k];
    }
    out << ")";
    return out.str();
}

Circuit &Circuit::x(uint32_t q) {
    return append({GateKind::X, {q}});
}
Circuit &Circuit::h(uint32_t q) {
    return append({GateKind::H, {q}});
}
Circuit &Circuit::ry(uint32_t q, double angle) {
    return append({GateKind::RY, {q}, angle});
}
Circuit &Circuit::cnot(uint32_t control, uint32_t target) {
    return append({GateKind::CNOT, {control, target}});
}
Circuit &Circuit::ccx(uint32_t c1, uint32_t c2, uint32_t target) {
    return append({GateKind::CCX, {c1, c2, target}});
}
Circuit &Circuit::swap(uint32_t a, uint32_t b) {
    return append({GateKind::SWAP, {a, b}});
}

Circuit &Circuit::append(Gate gate) {
    if (gate.qubits.size() != gate_arity(gate.kind)) {
        throw std::invalid_argument(std::string(gate_name(gate.kind)) + " takes " +
                                    std::to_string(gate_arity(gate.kind)) + " operands, got " +
                                    std::to_string(gate.qubits.size()));
    }
    gates.push_back(std::move(gate));
    return *this;
}

size_t Circuit::multi_qubit_gate_count() const {
    size_t n = 0;
    for (const auto &g : gates) {
        n += g.is_multi_qubit();
    }
    return n;
}

size_t Circuit::count(GateKind kind) const {
    size_t n = 0;
    for (const auto &g : gates) {
        n += g.kind == kind;
    }
    return n;
}

size_t Circuit::count_on(GateKind kind, uint32_t q) const {
    size_t n = 0;
    for (const auto &g : gates) {
        if (g.kind == kind && g.qubits.size() == 1 && g.qubits[0] == q) {
            n++;
        }
    }
    return n;
}

size_t Circuit::depth() const {
    std::vector<size_t> level(n_qubits, 0);
    size_t result = 0;
    for (const auto &g : gates) {
        size_t d = 0;
        for (auto q : g.qubits) {
            d = std::max(d, level.at(q));
        }
        d++;
        for (auto q : g.qubits) {
            level[q] = d;
        }
        result = std::max(result, d);
    }
    return result;
}

std::string Circuit::str() const {
    std::ostringstream out;
    out << name << "[" << n_qubits << "]:";
    for (const auto &g : gates) {
        out << " " << g.str();
    }
    return out.str();
}

std::vector<Violation> validate(const Circuit &c) {
    std::vector<Violation> out;
    if (c.n_qubits == 0) {
        out.push_back({0, "circuit has no qubits"});
    }
    for (size_t i = 0; i < c.gates.size(); i++) {
        const auto &g = c.gates[i];
        if (g.qubits.size() != gate_arity(g.kind)) {
            out.push_back({i, g.str() + ": wrong operand count"});
        }
        for (size_t a = 0; a < g.qubits.size(); a++) {
            if (g.qubits[a] >= c.n_qubits) {
                out.push_back({i, g.str() + ": operand " + std::to_string(g.qubits[a]) +
                                      " out of range for " + std::to_string(c.n_qubits) + " qubits"});
            }
            for (size_t b = a + 1; b < g.qubits.size(); b++) {
                if (g.qubits[a] == g.qubits[b]) {
                    out.push_back({i, g.str() + ": duplicate operand " + std::to_string(g.qubits[a])});
                }
            }
        }
        if (g.kind == GateKind::RY && !std::isfinite(g.angle)) {
            out.push_back({i, g.str() + ": angle is not finite"});
        }
    }
    return out;
}

void require_valid(const Circuit &c) {
    auto violations = validate(c);
    if (violations.empty()) {
        return;
    }
    std::string msg = "invalid circuit '" + c.name + "':";
    for (const auto &v : violations) {
        msg += "\n  gate " + std::to_string(v.gate_index) + ": " + v.message;
    }
    throw std::invalid_argument(msg);
}

Circuit build_half_adder() {
    Circuit c("half_adder", 3);
    c.x(0).ccx(0, 1, 2).cnot(0, 1);
    return c;
}

Circuit build_adversary_chain(size_t n) {
    Circuit c("adversary_chain", 2);
    for (size_t k = 0; k < n; k++) {
        c.cnot(0, 1);
    }
    return c;
}

namespace {

void append_ccz(Circuit &c) {
    c.h(2).ccx(0, 1, 2).h(2);
}

}  // namespace

Circuit build_grover3(std::string_view marked, size_t iterations) {
    if (marked.size() != 3 || marked.find_first_not_of("01") != std::string_view::npos) {
        throw std::invalid_argument("grover3: marked must be a 3-character bitstring, got '" +
                                    std::string(marked) + "'");
    }
    Circuit c("grover3_" + std::string(marked), 3);
    for (uint32_t q = 0; q < 3; q++) {
        c.h(q);
    }
    for (size_t it = 0; it < iterations; it++) {
        // Oracle: phase-flip |marked> by conjugating CCZ with X on the zero bits.
        for (uint32_t q = 0; q < 3; q++) {
            if (marked[q] == '0') {
                c.x(q);
            }
        }
        append_ccz(c);
        for (uint32_t q = 0; q < 3; q++) {
            if (marked[q] == '0') {
                c.x(q);
            }
        }
        // Diffusion.
        for (uint32_t q = 0; q < 3; q++) {
            c.h(q);
        }
        for (uint32_t q = 0; q < 3; q++) {
            c.x(q);
        }
        append_ccz(c);
        for (uint32_t q = 0; q < 3; q++) {
            c.x(q);
        }
        for (uint32_t q = 0; q < 3; q++) {
            c.h(q);
        }
    }
    return c;
}

std::pair<Circuit, Circuit> build_reference_signature_pair() {
    Circuit zero("reference_signature_0", 2);
    Circuit one("reference_signature_1", 2);
    for (int k = 0; k < 4; k++) {
        zero.x(0);
    }
    for (int k = 0; k < 5; k++) {
        one.x(0);
    }
    zero.x(1);
    one.x(1);
    return {zero, one};
}

Circuit build_probe(uint32_t n_qubits) {
    if (n_qubits == 0) {
        throw std::invalid_argument("probe needs at least one qubit");
    }
    Circuit c("probe", n_qubits);
    for (uint32_t q = 0; q < n_qubits; q++) {
        c.h(q);
    }
    return c;
}

Circuit build_random(uint32_t n_qubits, size_t n_gates, uint64_t seed, bool allow_ccx, bool allow_swap) {
    if (n_qubits == 0) {
        throw std::invalid_argument("random circuit needs at least one qubit");
    }
    std::vector<GateKind> kinds{GateKind::X, GateKind::H, GateKind::RY};
    if (n_qubits >= 2) {
        kinds.push_back(GateKind::CNOT);
        kinds.push_back(GateKind::CNOT);
        if (allow_swap) {
            kinds.push_back(GateKind::SWAP);
        }
    }
    if (n_qubits >= 3 && allow_ccx) {
        kinds.push_back(GateKind::CCX);
    }
    Circuit c("random_" + std::to_string(seed), n_qubits);
    uint64_t counter = 0;
    auto next = [&](uint64_t bound) {
        return derive(seed, {kTagCircuit, counter++}) % bound;
    };
    for (size_t i = 0; i < n_gates; i++) {
        GateKind kind = kinds[next(kinds.size())];
        std::vector<uint32_t> qs;
        while (qs.size() < gate_arity(kind)) {
            auto q = static_cast<uint32_t>(next(n_qubits));
            if (std::find(qs.begin(), qs.end(), q) == qs.end()) {
                qs.push_back(q);
            }
        }
        double angle = 0;
        if (kind == GateKind::RY) {
            angle = (to_unit(derive(seed, {kTagCircuit, counter++})) * 2 - 1) * M_PI;
        }
        c.append({kind, std::move(qs), angle});
    }
    return c;
}

}  // namespace qshare

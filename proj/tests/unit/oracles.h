// Test-only reference computations. Nothing here calls into the simulator or
// router; expected values in the tests are derived from these routines.
#ifndef QSHARE_TESTS_ORACLES_H
#define QSHARE_TESTS_ORACLES_H

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <deque>
#include <map>
#include <vector>

#include "qshare/circuit.h"

namespace oracle {

using cd = std::complex<double>;
using Matrix = std::vector<std::vector<cd>>;

inline Matrix identity(size_t n) {
    Matrix m(n, std::vector<cd>(n, 0.0));
    for (size_t i = 0; i < n; i++) {
        m[i][i] = 1.0;
    }
    return m;
}

inline Matrix kron(const Matrix &a, const Matrix &b) {
    size_t ra = a.size(), rb = b.size();
    Matrix m(ra * rb, std::vector<cd>(ra * rb, 0.0));
    for (size_t i = 0; i < ra; i++) {
        for (size_t j = 0; j < ra; j++) {
            for (size_t k = 0; k < rb; k++) {
                for (size_t l = 0; l < rb; l++) {
                    m[i * rb + k][j * rb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    return m;
}

inline Matrix add(const Matrix &a, const Matrix &b, cd scale_b = 1.0) {
    Matrix m = a;
    for (size_t i = 0; i < a.size(); i++) {
        for (size_t j = 0; j < a.size(); j++) {
            m[i][j] += scale_b * b[i][j];
        }
    }
    return m;
}

inline Matrix mul(const Matrix &a, const Matrix &b) {
    size_t n = a.size();
    Matrix m(n, std::vector<cd>(n, 0.0));
    for (size_t i = 0; i < n; i++) {
        for (size_t k = 0; k < n; k++) {
            if (a[i][k] == cd(0.0)) {
                continue;
            }
            for (size_t j = 0; j < n; j++) {
                m[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    return m;
}

inline Matrix pauli_x() {
    return {{0.0, 1.0}, {1.0, 0.0}};
}
inline Matrix pauli_y() {
    return {{0.0, cd(0, -1)}, {cd(0, 1), 0.0}};
}
inline Matrix pauli_z() {
    return {{1.0, 0.0}, {0.0, -1.0}};
}
inline Matrix proj0() {
    return {{1.0, 0.0}, {0.0, 0.0}};
}
inline Matrix proj1() {
    return {{0.0, 0.0}, {0.0, 1.0}};
}

// Full operator as a Kronecker product. Basis index bit q is qubit q, so
// the Kronecker factors run from qubit n-1 (most significant) down to 0.
inline Matrix embed(size_t n, const std::map<uint32_t, Matrix> &factors) {
    Matrix m = {{1.0}};
    for (size_t k = n; k-- > 0;) {
        auto it = factors.find(static_cast<uint32_t>(k));
        m = kron(m, it == factors.end() ? identity(2) : it->second);
    }
    return m;
}

inline Matrix gate_matrix(const qshare::Gate &g, size_t n) {
    const auto &q = g.qubits;
    const double r = 1.0 / std::sqrt(2.0);
    switch (g.kind) {
        case qshare::GateKind::X:
            return embed(n, {{q[0], pauli_x()}});
        case qshare::GateKind::H:
            return embed(n, {{q[0], Matrix{{r, r}, {r, -r}}}});
        case qshare::GateKind::RY: {
            double c = std::cos(g.angle / 2), s = std::sin(g.angle / 2);
            return embed(n, {{q[0], Matrix{{c, -s}, {s, c}}}});
        }
        case qshare::GateKind::CNOT:
            return add(embed(n, {{q[0], proj0()}}), embed(n, {{q[0], proj1()}, {q[1], pauli_x()}}));
        case qshare::GateKind::CCX: {
            Matrix both = embed(n, {{q[0], proj1()}, {q[1], proj1()}});
            Matrix flip = embed(n, {{q[0], proj1()}, {q[1], proj1()}, {q[2], pauli_x()}});
            return add(add(identity(size_t{1} << n), both, -1.0), flip);
        }
        case qshare::GateKind::SWAP: {
            Matrix m = identity(size_t{1} << n);
            m = add(m, embed(n, {{q[0], pauli_x()}, {q[1], pauli_x()}}));
            m = add(m, embed(n, {{q[0], pauli_y()}, {q[1], pauli_y()}}));
            m = add(m, embed(n, {{q[0], pauli_z()}, {q[1], pauli_z()}}));
            for (auto &row : m) {
                for (auto &v : row) {
                    v *= 0.5;
                }
            }
            return m;
        }
    }
    return identity(size_t{1} << n);
}

/// Final state by multiplying dense gate matrices onto |0...0>.
inline std::vector<cd> dense_state(const qshare::Circuit &c) {
    Matrix u = identity(size_t{1} << c.n_qubits);
    for (const auto &g : c.gates) {
        u = mul(gate_matrix(g, c.n_qubits), u);
    }
    std::vector<cd> out(u.size());
    for (size_t i = 0; i < u.size(); i++) {
        out[i] = u[i][0];
    }
    return out;
}

/// All-pairs distances by boolean matrix powering: d(a,b) is the smallest k
/// with (A+I)^k[a][b] != 0.
inline std::vector<std::vector<int>> matrix_power_distances(uint32_t n, const std::vector<std::pair<uint32_t, uint32_t>> &edges) {
    std::vector<std::vector<int>> reach(n, std::vector<int>(n, 0));
    std::vector<std::vector<int>> step(n, std::vector<int>(n, 0));
    for (uint32_t i = 0; i < n; i++) {
        reach[i][i] = 1;
        step[i][i] = 1;
    }
    for (auto [a, b] : edges) {
        step[a][b] = step[b][a] = 1;
    }
    std::vector<std::vector<int>> dist(n, std::vector<int>(n, -1));
    for (int k = 0; k <= static_cast<int>(n); k++) {
        for (uint32_t i = 0; i < n; i++) {
            for (uint32_t j = 0; j < n; j++) {
                if (reach[i][j] && dist[i][j] < 0) {
                    dist[i][j] = k;
                }
            }
        }
        std::vector<std::vector<int>> next(n, std::vector<int>(n, 0));
        for (uint32_t i = 0; i < n; i++) {
            for (uint32_t l = 0; l < n; l++) {
                if (!reach[i][l]) {
                    continue;
                }
                for (uint32_t j = 0; j < n; j++) {
                    next[i][j] |= step[l][j];
                }
            }
        }
        reach = next;
    }
    return dist;
}

/// Closed form for a spectator flipped independently with probability eps
/// at each of n events: probability of an odd number of flips.
inline double parity_flip(double eps, int n) {
    return (1.0 - std::pow(1.0 - 2.0 * eps, n)) / 2.0;
}

/// Binomial standard error of a proportion.
inline double binomial_sigma(double p, double shots) {
    return std::sqrt(p * (1.0 - p) / shots);
}

inline double grover_success(int iterations) {
    double theta = std::asin(1.0 / std::sqrt(8.0));
    double s = std::sin((2 * iterations + 1) * theta);
    return s * s;
}

}  // namespace oracle

#endif

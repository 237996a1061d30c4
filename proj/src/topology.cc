#include "qshare/topology.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace qshare {

CouplingGraph::CouplingGraph(uint32_t n_qubits, const std::vector<Edge> &edges) : n_(n_qubits) {
    for (auto [a, b] : edges) {
        if (a == b) {
            throw std::invalid_argument("self-loop on qubit " + std::to_string(a));
        }
        if (a >= n_ || b >= n_) {
            throw std::invalid_argument("edge (" + std::to_string(a) + "," + std::to_string(b) +
                                        ") out of range for " + std::to_string(n_) + " qubits");
        }
        edges_.emplace_back(std::min(a, b), std::max(a, b));
    }
    std::sort(edges_.begin(), edges_.end());
    edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());

    adjacency_.assign(n_, {});
    edge_lookup_.assign(static_cast<size_t>(n_) * n_, -1);
    for (size_t e = 0; e < edges_.size(); e++) {
        auto [a, b] = edges_[e];
        adjacency_[a].push_back(b);
        adjacency_[b].push_back(a);
        edge_lookup_[a * n_ + b] = static_cast<int>(e);
        edge_lookup_[b * n_ + a] = static_cast<int>(e);
    }
    for (auto &adj : adjacency_) {
        std::sort(adj.begin(), adj.end());
    }
}

void CouplingGraph::check_qubit(uint32_t q) const {
    if (q >= n_) {
        throw std::out_of_range("qubit " + std::to_string(q) + " out of range for " + std::to_string(n_) +
                                "-qubit graph");
    }
}

const std::vector<uint32_t> &CouplingGraph::neighbors(uint32_t q) const {
    check_qubit(q);
    return adjacency_[q];
}

bool CouplingGraph::are_adjacent(uint32_t a, uint32_t b) const {
    return edge_index(a, b) >= 0;
}

int CouplingGraph::edge_index(uint32_t a, uint32_t b) const {
    check_qubit(a);
    check_qubit(b);
    return edge_lookup_[a * n_ + b];
}

std::vector<int> CouplingGraph::distances_from(uint32_t source, const std::vector<bool> &allowed) const {
    check_qubit(source);
    std::vector<int> dist(n_, -1);
    auto ok = [&](uint32_t q) {
        return allowed.empty() || allowed[q];
    };
    if (!ok(source)) {
        return dist;
    }
    std::deque<uint32_t> queue{source};
    dist[source] = 0;
    while (!queue.empty()) {
        uint32_t u = queue.front();
        queue.pop_front();
        for (uint32_t v : adjacency_[u]) {
            if (dist[v] < 0 && ok(v)) {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    return dist;
}

std::optional<std::vector<uint32_t>> CouplingGraph::shortest_path(uint32_t a, uint32_t b,
                                                                  const std::vector<bool> &allowed) const {
    check_qubit(a);
    auto dist = distances_from(b, allowed);
    if (dist[a] < 0) {
        return std::nullopt;
    }
    std::vector<uint32_t> path{a};
    uint32_t u = a;
    while (u != b) {
        // Neighbors are sorted, so the first one on a shortest path is the smallest.
        for (uint32_t v : adjacency_[u]) {
            if (dist[v] == dist[u] - 1) {
                u = v;
                break;
            }
        }
        path.push_back(u);
    }
    return path;
}

bool CouplingGraph::is_connected(const std::vector<uint32_t> &qubits) const {
    if (qubits.empty()) {
        return true;
    }
    std::vector<bool> mask(n_, false);
    for (auto q : qubits) {
        check_qubit(q);
        mask[q] = true;
    }
    auto dist = distances_from(qubits.front(), mask);
    return std::all_of(qubits.begin(), qubits.end(), [&](uint32_t q) { return dist[q] >= 0; });
}

CouplingGraph builtin_ibmqx2() {
    return CouplingGraph(5, {{0, 1}, {0, 2}, {1, 2}, {3, 2}, {3, 4}, {4, 2}});
}

CouplingGraph builtin_burlington() {
    return CouplingGraph(5, {{0, 1}, {1, 2}, {1, 3}, {3, 4}});
}

CouplingGraph grid(uint32_t rows, uint32_t cols) {
    if (rows == 0 || cols == 0) {
        throw std::invalid_argument("grid dimensions must be positive");
    }
    std::vector<Edge> edges;
    for (uint32_t r = 0; r < rows; r++) {
        for (uint32_t c = 0; c < cols; c++) {
            uint32_t q = r * cols + c;
            if (c + 1 < cols) {
                edges.emplace_back(q, q + 1);
            }
            if (r + 1 < rows) {
                edges.emplace_back(q, q + cols);
            }
        }
    }
    return CouplingGraph(rows * cols, edges);
}

CouplingGraph line(uint32_t n) {
    return grid(1, n);
}

double DeviceProfile::eps(uint32_t a, uint32_t b) const {
    int e = graph.edge_index(a, b);
    return e < 0 ? 0.0 : eps_ct[e];
}

double DeviceProfile::delta(uint32_t from, uint32_t to) const {
    return delta_sense[static_cast<size_t>(from) * n_qubits() + to];
}

void DeviceProfile::set_eps(uint32_t a, uint32_t b, double p) {
    int e = graph.edge_index(a, b);
    if (e < 0) {
        throw std::invalid_argument("set_eps: (" + std::to_string(a) + "," + std::to_string(b) +
                                    ") is not an edge");
    }
    eps_ct[e] = p;
}

void DeviceProfile::set_delta(uint32_t from, uint32_t to, double p) {
    if (!graph.are_adjacent(from, to)) {
        throw std::invalid_argument("set_delta: (" + std::to_string(from) + "," + std::to_string(to) +
                                    ") is not an edge");
    }
    delta_sense[static_cast<size_t>(from) * n_qubits() + to] = p;
}

namespace {

void check_probability(double p, const std::string &what) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw std::invalid_argument(what + " must be a probability in [0,1], got " + std::to_string(p));
    }
}

void check_duration(double t, const std::string &what) {
    if (!(t >= 0.0) || !std::isfinite(t)) {
        throw std::invalid_argument(what + " must be a non-negative duration, got " + std::to_string(t));
    }
}

}  // namespace

void DeviceProfile::check() const {
    uint32_t n = n_qubits();
    if (eps_ct.size() != graph.edges().size()) {
        throw std::invalid_argument("eps_ct needs one value per edge");
    }
    if (delta_sense.size() != static_cast<size_t>(n) * n) {
        throw std::invalid_argument("delta_sense needs an n*n table");
    }
    if (readout.size() != n) {
        throw std::invalid_argument("readout needs one entry per qubit");
    }
    for (auto p : eps_ct) {
        check_probability(p, "eps_ct");
    }
    for (uint32_t m = 0; m < n; m++) {
        for (uint32_t q = 0; q < n; q++) {
            double d = delta_sense[m * n + q];
            check_probability(d, "delta_sense");
            if (d != 0.0 && !graph.are_adjacent(m, q)) {
                throw std::invalid_argument("delta_sense defined on non-edge (" + std::to_string(m) + "," +
                                            std::to_string(q) + ")");
            }
        }
    }
    for (const auto &r : readout) {
        check_probability(r.p01, "readout p01");
        check_probability(r.p10, "readout p10");
    }
    check_probability(reset_retain, "reset_retain");
    check_duration(durations.t_1q, "t_1q");
    check_duration(durations.t_2q, "t_2q");
    check_duration(durations.t_readout, "t_readout");
    check_duration(durations.t_reset, "t_reset");
    check_duration(timing_jitter, "timing_jitter");
}

DeviceProfile uniform_profile(std::string name, CouplingGraph graph, const UniformNoise &noise) {
    DeviceProfile p;
    p.name = std::move(name);
    uint32_t n = graph.n_qubits();
    p.eps_ct.assign(graph.edges().size(), noise.eps_ct);
    p.delta_sense.assign(static_cast<size_t>(n) * n, 0.0);
    for (auto [a, b] : graph.edges()) {
        p.delta_sense[a * n + b] = noise.delta_sense;
        p.delta_sense[b * n + a] = noise.delta_sense;
    }
    p.readout.assign(n, ReadoutError{noise.p01, noise.p10});
    p.reset_retain = noise.reset_retain;
    p.durations = noise.durations;
    p.timing_jitter = noise.timing_jitter;
    p.graph = std::move(graph);
    p.check();
    return p;
}

DeviceProfile noiseless_profile(std::string name, CouplingGraph graph) {
    UniformNoise none;
    none.eps_ct = 0;
    none.delta_sense = 0;
    none.p01 = 0;
    none.p10 = 0;
    none.reset_retain = 0;
    none.timing_jitter = 0;
    return uniform_profile(std::move(name), std::move(graph), none);
}

CouplingGraph builtin_graph(const std::string &name) {
    if (name == "ibmqx2") {
        return builtin_ibmqx2();
    }
    if (name == "burlington" || name == "ibmq_burlington") {
        return builtin_burlington();
    }
    auto parse_count = [&](const std::string &s) -> uint32_t {
        if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos || s.size() > 4) {
            throw std::invalid_argument("bad device name '" + name + "'");
        }
        return static_cast<uint32_t>(std::stoul(s));
    };
    if (name.rfind("grid:", 0) == 0) {
        auto spec = name.substr(5);
        auto x = spec.find('x');
        if (x == std::string::npos) {
            throw std::invalid_argument("bad device name '" + name + "', expected grid:RxC");
        }
        return grid(parse_count(spec.substr(0, x)), parse_count(spec.substr(x + 1)));
    }
    if (name.rfind("line:", 0) == 0) {
        return line(parse_count(name.substr(5)));
    }
    throw std::invalid_argument("unknown device '" + name + "'");
}

std::vector<std::string> builtin_device_names() {
    return {"ibmqx2", "burlington", "grid:RxC", "line:N"};
}

}  // namespace qshare

#ifndef QSHARE_TOPOLOGY_H
#define QSHARE_TOPOLOGY_H

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace qshare {

using Edge = std::pair<uint32_t, uint32_t>;

/// Undirected qubit connectivity. Edges are stored normalized (a < b), sorted
/// and deduplicated.
class CouplingGraph {
   public:
    CouplingGraph() = default;
    CouplingGraph(uint32_t n_qubits, const std::vector<Edge> &edges);

    uint32_t n_qubits() const {
        return n_;
    }
    const std::vector<Edge> &edges() const {
        return edges_;
    }
    /// Sorted ascending.
    const std::vector<uint32_t> &neighbors(uint32_t q) const;
    bool are_adjacent(uint32_t a, uint32_t b) const;
    size_t degree(uint32_t q) const {
        return neighbors(q).size();
    }
    /// Index into edges(), or -1.
    int edge_index(uint32_t a, uint32_t b) const;

    /// BFS distances from `source`; -1 marks unreachable qubits. When
    /// `allowed` is non-empty it is a membership mask restricting the walk.
    std::vector<int> distances_from(uint32_t source, const std::vector<bool> &allowed = {}) const;

    /// Lexicographically smallest among the shortest paths from a to b, or
    /// nullopt when b is unreachable. Both endpoints must be allowed.
    std::optional<std::vector<uint32_t>> shortest_path(uint32_t a, uint32_t b,
                                                       const std::vector<bool> &allowed = {}) const;

    /// Whether `qubits` induces a connected subgraph. The empty set is connected.
    bool is_connected(const std::vector<uint32_t> &qubits) const;

    bool operator==(const CouplingGraph &other) const {
        return n_ == other.n_ && edges_ == other.edges_;
    }

   private:
    void check_qubit(uint32_t q) const;

    uint32_t n_ = 0;
    std::vector<Edge> edges_;
    std::vector<std::vector<uint32_t>> adjacency_;
    std::vector<int> edge_lookup_;
};

CouplingGraph builtin_ibmqx2();
CouplingGraph builtin_burlington();
CouplingGraph grid(uint32_t rows, uint32_t cols);
CouplingGraph line(uint32_t n);

struct ReadoutError {
    double p01 = 0.0;  // reads 1 when the qubit is 0
    double p10 = 0.0;  // reads 0 when the qubit is 1
    bool operator==(const ReadoutError &) const = default;
};

struct GateDurations {
    double t_1q = 0.05;
    double t_2q = 0.3;
    double t_readout = 1.0;
    double t_reset = 1.0;
    bool operator==(const GateDurations &) const = default;
};

/// Coupling graph plus every noise and timing parameter the simulator uses.
/// Probabilities are indexed as follows:
///   eps_ct[e]          spectator flip probability across edge e (graph edge index)
///   delta_sense[m*n+q] flip of q's reading when neighbor m reads 1
struct DeviceProfile {
    std::string name;
    CouplingGraph graph;
    std::vector<double> eps_ct;
    std::vector<double> delta_sense;
    std::vector<ReadoutError> readout;
    double reset_retain = 0.0;
    GateDurations durations;
    double timing_jitter = 0.0;

    uint32_t n_qubits() const {
        return graph.n_qubits();
    }
    double eps(uint32_t a, uint32_t b) const;
    double delta(uint32_t from, uint32_t to) const;
    void set_eps(uint32_t a, uint32_t b, double p);
    void set_delta(uint32_t from, uint32_t to, double p);

    /// Throws std::invalid_argument describing the first broken invariant.
    void check() const;

    bool operator==(const DeviceProfile &) const = default;
};

struct UniformNoise {
    double eps_ct = 0.02;
    double delta_sense = 0.08;
    double p01 = 0.01;
    double p10 = 0.01;
    double reset_retain = 0.2;
    GateDurations durations{};
    double timing_jitter = 0.02;
};

/// Same parameters on every edge / ordered edge pair / qubit. The defaults
/// are the calibration used by the bundled experiments.
DeviceProfile uniform_profile(std::string name, CouplingGraph graph, const UniformNoise &noise = {});

/// Profile with every noise source and the reset residual zeroed.
DeviceProfile noiseless_profile(std::string name, CouplingGraph graph);

/// Graph for a builtin device name: "ibmqx2", "burlington", "grid:RxC", "line:N".
CouplingGraph builtin_graph(const std::string &name);
std::vector<std::string> builtin_device_names();

}  // namespace qshare

#endif

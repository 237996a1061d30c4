#ifndef QSHARE_MULTITENANT_H
#define QSHARE_MULTITENANT_H

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qshare/circuit.h"
#include "qshare/sim.h"
#include "qshare/topology.h"
#include "qshare/transpiler.h"

namespace qshare {

struct TenantJob {
    std::string tenant;
    Circuit circuit;  // logical
    uint64_t shots = 1000;
    /// Explicit physical placement, logical i -> requested[i]. Empty means
    /// allocate with `policy`.
    std::vector<uint32_t> requested;
    AllocationPolicy policy = AllocationPolicy::CompactBfs;
    /// Secret output mask over the logical qubits; empty means none.
    std::string mask;
};

enum class PlanMode { Packed, Buffered, Alternating };

std::string mode_name(PlanMode m);
PlanMode parse_mode(const std::string &name);

/// Raised when a buffered plan cannot keep every pair of tenants edge-free.
struct IsolationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PlannedJob {
    TenantJob job;
    RoutedCircuit routed;  // includes the output mask when job.mask is set
};

struct ExecutionPlan {
    PlanMode mode = PlanMode::Packed;
    std::string device_name;
    uint32_t n_qubits = 0;
    std::vector<PlannedJob> jobs;
    /// Idle qubits adjacent to a tenant (buffered plans only).
    std::vector<uint32_t> buffer;
    /// Parallel modes: tenant t of the schedule is jobs[t].
    GateSchedule schedule;

    bool parallel() const {
        return mode != PlanMode::Alternating;
    }
    /// Sorted physical qubits job j may touch.
    std::vector<uint32_t> region(size_t j) const;
};

struct AdmitOptions {
    /// Defer cross-tenant gates on adjacent qubits to separate layers.
    bool crosstalk_aware = false;
};

/// First-come admission. Requested sets are honored verbatim, otherwise each
/// job's policy allocates over the remaining free qubits. Buffered plans keep
/// every tenant set free of edges to other tenants, first greedily and then
/// by exhaustive search when at most kExhaustiveMaxFree qubits are free.
ExecutionPlan admit(const std::vector<TenantJob> &jobs, const DeviceProfile &device, PlanMode mode,
                    const AdmitOptions &options = {});

/// Per-tenant random stream: root ^ hash(tenant id).
uint64_t tenant_seed(uint64_t root, std::string_view tenant);

/// One logical-order histogram per job (masks removed). Parallel plans run as
/// one device-wide circuit with a random stream per tenant and require equal
/// shot counts; alternating plans interleave shots through run_sequence.
std::vector<Histogram> execute_plan(const ExecutionPlan &plan, const DeviceProfile &device, NoiseFlags noise,
                                    uint64_t seed);

/// Checks partition soundness (and isolation for buffered plans); throws
/// std::invalid_argument naming the broken invariant.
void check_plan(const ExecutionPlan &plan, const CouplingGraph &g);

/// Number of graph edges joining qubits of different tenants.
size_t inter_tenant_edges(const ExecutionPlan &plan, const CouplingGraph &g);

struct Submission {
    std::string tenant;
    std::vector<uint32_t> qubits;  // sorted
    size_t gate_count = 0;
    uint64_t time = 0;
};

class SubmissionLog {
   public:
    void append(std::string tenant, std::vector<uint32_t> qubits, size_t gate_count);
    /// Records the image of every job in the plan.
    void append_plan(const ExecutionPlan &plan);
    const std::vector<Submission> &records() const {
        return records_;
    }
    bool empty() const {
        return records_.empty();
    }

   private:
    std::vector<Submission> records_;
};

/// Highest-degree qubits: degree above the 75th percentile, or equal to it
/// when nothing lies above.
std::vector<uint32_t> top_quartile_degree(const CouplingGraph &g);

constexpr double kAnomalyThreshold = 0.7;

/// Per tenant over its last `window` submissions:
///   0.5 * mean fraction of occupied qubits in the top-quartile set
/// + 0.5 * mean Jaccard similarity of consecutive sets (0 for one submission).
std::map<std::string, double> anomaly_scores(const SubmissionLog &log, const CouplingGraph &g, size_t window = 10);

std::vector<std::string> flagged_tenants(const std::map<std::string, double> &scores,
                                         double threshold = kAnomalyThreshold);

}  // namespace qshare

#endif

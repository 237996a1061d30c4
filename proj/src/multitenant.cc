#include "qshare/multitenant.h"

#include <algorithm>
#include <functional>
#include <optional>
#include <set>

#include "qshare/rng.h"

namespace qshare {

std::string mode_name(PlanMode m) {
    switch (m) {
        case PlanMode::Packed:
            return "packed";
        case PlanMode::Buffered:
            return "buffered";
        case PlanMode::Alternating:
            return "alternating";
    }
    return "?";
}

PlanMode parse_mode(const std::string &name) {
    for (auto m : {PlanMode::Packed, PlanMode::Buffered, PlanMode::Alternating}) {
        if (mode_name(m) == name) {
            return m;
        }
    }
    throw std::invalid_argument("unknown plan mode '" + name + "'");
}

std::vector<uint32_t> ExecutionPlan::region(size_t j) const {
    return jobs.at(j).routed.initial.allowed;
}

uint64_t tenant_seed(uint64_t root, std::string_view tenant) {
    return root ^ hash_name(tenant);
}

namespace {

bool has_multi_qubit_gate(const Circuit &c) {
    return c.multi_qubit_gate_count() > 0;
}

void check_jobs(const std::vector<TenantJob> &jobs, uint32_t n) {
    if (jobs.empty()) {
        throw std::invalid_argument("no jobs to admit");
    }
    std::set<std::string> ids;
    for (const auto &job : jobs) {
        if (!ids.insert(job.tenant).second) {
            throw std::invalid_argument("duplicate tenant id '" + job.tenant + "'");
        }
        if (job.shots == 0) {
            throw std::invalid_argument("tenant '" + job.tenant + "' requests zero shots");
        }
        require_valid(job.circuit);
        if (job.circuit.n_qubits > n) {
            throw std::invalid_argument("tenant '" + job.tenant + "' needs " + std::to_string(job.circuit.n_qubits) +
                                        " qubits; device has " + std::to_string(n));
        }
        if (!job.mask.empty() && job.mask.size() != job.circuit.n_qubits) {
            throw std::invalid_argument("tenant '" + job.tenant + "' mask length does not match its circuit");
        }
        if (!job.requested.empty()) {
            if (job.requested.size() != job.circuit.n_qubits) {
                throw std::invalid_argument("tenant '" + job.tenant + "' requested " +
                                            std::to_string(job.requested.size()) + " qubits for a " +
                                            std::to_string(job.circuit.n_qubits) + "-qubit circuit");
            }
            std::set<uint32_t> distinct(job.requested.begin(), job.requested.end());
            if (distinct.size() != job.requested.size() || *distinct.rbegin() >= n) {
                throw std::invalid_argument("tenant '" + job.tenant + "' requested an invalid qubit set");
            }
        }
    }
}

std::vector<uint32_t> sorted(std::vector<uint32_t> v) {
    std::sort(v.begin(), v.end());
    return v;
}

// Unowned qubits adjacent to any owned qubit.
std::vector<uint32_t> boundary(const CouplingGraph &g, const std::vector<int> &owner) {
    std::vector<uint32_t> out;
    for (uint32_t q = 0; q < g.n_qubits(); q++) {
        if (owner[q] >= 0) {
            continue;
        }
        for (auto m : g.neighbors(q)) {
            if (owner[m] >= 0) {
                out.push_back(q);
                break;
            }
        }
    }
    return out;
}

bool touches_other_tenant(const CouplingGraph &g, const std::vector<int> &owner, uint32_t q, int self) {
    for (auto m : g.neighbors(q)) {
        if (owner[m] >= 0 && owner[m] != self) {
            return true;
        }
    }
    return false;
}

// Placement per job: the region (allowed set) and the initial layout.
struct Placement {
    std::vector<uint32_t> region;
    std::vector<uint32_t> physical;
};

Placement place_in(const TenantJob &job, const CouplingGraph &g, const std::vector<uint32_t> &pool) {
    Layout layout = allocate(job.circuit, g, pool, job.policy);
    return {layout.image(), layout.physical};
}

// Greedy placement; nullopt when a buffered job finds no isolated room.
std::optional<std::vector<Placement>> greedy(const std::vector<TenantJob> &jobs, const CouplingGraph &g,
                                             bool isolate) {
    const uint32_t n = g.n_qubits();
    std::vector<int> owner(n, -1);
    std::vector<Placement> out;
    for (size_t j = 0; j < jobs.size(); j++) {
        const auto &job = jobs[j];
        Placement p;
        if (!job.requested.empty()) {
            for (auto q : job.requested) {
                if (owner[q] >= 0) {
                    throw std::invalid_argument("tenant '" + job.tenant + "' requested qubit " + std::to_string(q) +
                                                " already held by tenant '" + jobs[owner[q]].tenant + "'");
                }
                if (isolate && touches_other_tenant(g, owner, q, static_cast<int>(j))) {
                    return std::nullopt;
                }
            }
            p = {sorted(job.requested), job.requested};
        } else {
            std::vector<uint32_t> pool;
            for (uint32_t q = 0; q < n; q++) {
                if (owner[q] < 0 && !(isolate && touches_other_tenant(g, owner, q, static_cast<int>(j)))) {
                    pool.push_back(q);
                }
            }
            if (pool.size() < job.circuit.n_qubits) {
                if (isolate) {
                    return std::nullopt;
                }
                throw std::invalid_argument("capacity exceeded admitting tenant '" + job.tenant + "'");
            }
            p = place_in(job, g, pool);
        }
        if (isolate && has_multi_qubit_gate(job.circuit) && !g.is_connected(p.region)) {
            return std::nullopt;
        }
        for (auto q : p.region) {
            owner[q] = static_cast<int>(j);
        }
        out.push_back(std::move(p));
    }
    return out;
}

// Exhaustive isolated placement minimizing the buffer size; enumeration is
// lexicographic so the first minimum wins.
std::optional<std::vector<Placement>> exhaustive_isolated(const std::vector<TenantJob> &jobs, const CouplingGraph &g) {
    const uint32_t n = g.n_qubits();
    std::vector<int> owner(n, -1);
    std::vector<std::vector<uint32_t>> sets(jobs.size()), best_sets;
    size_t best = SIZE_MAX;

    std::function<void(size_t)> assign = [&](size_t j) {
        if (j == jobs.size()) {
            size_t b = boundary(g, owner).size();
            if (b < best) {
                best = b;
                best_sets = sets;
            }
            return;
        }
        const auto &job = jobs[j];
        const int self = static_cast<int>(j);
        auto accept = [&](const std::vector<uint32_t> &set) {
            if (has_multi_qubit_gate(job.circuit) && !g.is_connected(set)) {
                return;
            }
            for (auto q : set) {
                owner[q] = self;
            }
            sets[j] = set;
            assign(j + 1);
            for (auto q : set) {
                owner[q] = -1;
            }
        };
        if (!job.requested.empty()) {
            for (auto q : job.requested) {
                if (owner[q] >= 0 || touches_other_tenant(g, owner, q, self)) {
                    return;
                }
            }
            accept(sorted(job.requested));
            return;
        }
        std::vector<uint32_t> pool;
        for (uint32_t q = 0; q < n; q++) {
            if (owner[q] < 0 && !touches_other_tenant(g, owner, q, self)) {
                pool.push_back(q);
            }
        }
        const size_t k = job.circuit.n_qubits;
        if (pool.size() < k) {
            return;
        }
        std::vector<uint32_t> set;
        std::function<void(size_t)> choose = [&](size_t from) {
            if (set.size() == k) {
                accept(set);
                return;
            }
            for (size_t i = from; i + (k - set.size()) <= pool.size(); i++) {
                set.push_back(pool[i]);
                choose(i + 1);
                set.pop_back();
            }
        };
        choose(0);
    };
    assign(0);
    if (best_sets.empty()) {
        return std::nullopt;
    }
    std::vector<Placement> out;
    for (size_t j = 0; j < jobs.size(); j++) {
        if (!jobs[j].requested.empty()) {
            out.push_back({best_sets[j], jobs[j].requested});
        } else {
            out.push_back(place_in(jobs[j], g, best_sets[j]));
        }
    }
    return out;
}

Circuit masked_circuit(const TenantJob &job) {
    return job.mask.empty() ? job.circuit : apply_output_mask(job.circuit, job.mask);
}

}  // namespace

ExecutionPlan admit(const std::vector<TenantJob> &jobs, const DeviceProfile &device, PlanMode mode,
                    const AdmitOptions &options) {
    device.check();
    const auto &g = device.graph;
    const uint32_t n = g.n_qubits();
    check_jobs(jobs, n);

    ExecutionPlan plan;
    plan.mode = mode;
    plan.device_name = device.name;
    plan.n_qubits = n;

    std::vector<Placement> placements;
    if (mode == PlanMode::Alternating) {
        std::vector<uint32_t> all(n);
        for (uint32_t q = 0; q < n; q++) {
            all[q] = q;
        }
        for (const auto &job : jobs) {
            auto physical = job.requested.empty() ? allocate(job.circuit, g, all, job.policy).physical : job.requested;
            placements.push_back({all, physical});
        }
    } else {
        size_t total = 0;
        for (const auto &job : jobs) {
            total += job.circuit.n_qubits;
        }
        if (total > n) {
            throw std::invalid_argument("capacity exceeded: jobs need " + std::to_string(total) + " qubits, device '" +
                                        device.name + "' has " + std::to_string(n));
        }
        if (mode == PlanMode::Packed) {
            placements = *greedy(jobs, g, false);
        } else {
            auto found = greedy(jobs, g, true);
            if (!found) {
                size_t requested = 0;
                for (const auto &job : jobs) {
                    requested += job.requested.size();
                }
                if (n - requested > kExhaustiveMaxFree) {
                    throw IsolationError("buffered isolation unsatisfiable on device '" + device.name +
                                         "': greedy placement failed and the free set is too large to search");
                }
                found = exhaustive_isolated(jobs, g);
            }
            if (!found) {
                throw IsolationError("buffered isolation unsatisfiable on device '" + device.name +
                                     "': no placement keeps every tenant edge-free from the others");
            }
            placements = std::move(*found);
        }
    }

    for (size_t j = 0; j < jobs.size(); j++) {
        PlannedJob pj;
        pj.job = jobs[j];
        pj.routed = route(masked_circuit(jobs[j]), Layout{placements[j].physical, placements[j].region}, g);
        plan.jobs.push_back(std::move(pj));
    }

    if (plan.parallel()) {
        std::vector<int> owner(n, -1);
        std::vector<TenantCircuit> circuits;
        for (size_t j = 0; j < plan.jobs.size(); j++) {
            for (auto q : plan.region(j)) {
                owner[q] = static_cast<int>(j);
            }
            circuits.push_back({static_cast<uint32_t>(j), plan.jobs[j].routed.circuit});
        }
        if (mode == PlanMode::Buffered) {
            plan.buffer = boundary(g, owner);
        }
        plan.schedule = schedule(circuits, n);
        if (options.crosstalk_aware) {
            plan.schedule = crosstalk_aware_reschedule(plan.schedule, g);
        }
    }
    check_plan(plan, g);
    return plan;
}

size_t inter_tenant_edges(const ExecutionPlan &plan, const CouplingGraph &g) {
    std::vector<int> owner(g.n_qubits(), -1);
    for (size_t j = 0; j < plan.jobs.size(); j++) {
        for (auto q : plan.region(j)) {
            owner[q] = static_cast<int>(j);
        }
    }
    size_t count = 0;
    for (auto [a, b] : g.edges()) {
        if (owner[a] >= 0 && owner[b] >= 0 && owner[a] != owner[b]) {
            count++;
        }
    }
    return count;
}

void check_plan(const ExecutionPlan &plan, const CouplingGraph &g) {
    if (plan.n_qubits != g.n_qubits()) {
        throw std::invalid_argument("plan was built for a different device size");
    }
    if (!plan.parallel()) {
        return;
    }
    std::vector<int> owner(g.n_qubits(), -1);
    for (size_t j = 0; j < plan.jobs.size(); j++) {
        for (auto q : plan.region(j)) {
            if (q >= g.n_qubits() || owner[q] >= 0) {
                throw std::invalid_argument("tenant regions overlap on qubit " + std::to_string(q));
            }
            owner[q] = static_cast<int>(j);
        }
    }
    for (auto q : plan.buffer) {
        if (q >= g.n_qubits() || owner[q] >= 0) {
            throw std::invalid_argument("buffer qubit " + std::to_string(q) + " is assigned to a tenant");
        }
    }
    if (plan.mode == PlanMode::Buffered && inter_tenant_edges(plan, g) != 0) {
        throw std::invalid_argument("buffered plan has an edge between tenants");
    }
}

std::vector<Histogram> execute_plan(const ExecutionPlan &plan, const DeviceProfile &device, NoiseFlags noise,
                                    uint64_t seed) {
    if (plan.n_qubits != device.n_qubits() || plan.device_name != device.name) {
        throw std::invalid_argument("plan does not match device '" + device.name + "'");
    }
    if (plan.jobs.empty()) {
        throw std::invalid_argument("empty plan");
    }
    std::vector<Histogram> raw;
    if (plan.parallel()) {
        const uint64_t shots = plan.jobs.front().job.shots;
        RunSpec spec;
        spec.device = device;
        spec.shots = shots;
        spec.seed = seed;
        spec.noise = noise;
        spec.circuit = flatten(plan.schedule, "plan");
        spec.circuit.n_qubits = plan.n_qubits;
        spec.stream_of_qubit.assign(plan.n_qubits, 0);
        spec.stream_seeds = {seed};
        for (size_t j = 0; j < plan.jobs.size(); j++) {
            if (plan.jobs[j].job.shots != shots) {
                throw std::invalid_argument("parallel plans need equal shot counts across tenants");
            }
            spec.stream_seeds.push_back(tenant_seed(seed, plan.jobs[j].job.tenant));
            for (auto q : plan.region(j)) {
                spec.stream_of_qubit[q] = static_cast<uint32_t>(j + 1);
            }
        }
        auto h = run(spec);
        raw.assign(plan.jobs.size(), h);
    } else {
        std::vector<RunSpec> specs;
        for (const auto &pj : plan.jobs) {
            RunSpec s;
            s.device = device;
            s.shots = pj.job.shots;
            s.seed = tenant_seed(seed, pj.job.tenant);
            s.noise = noise;
            s.circuit = pj.routed.circuit;
            specs.push_back(std::move(s));
        }
        raw = run_sequence(specs);
    }
    std::vector<Histogram> out;
    for (size_t j = 0; j < plan.jobs.size(); j++) {
        const auto &pj = plan.jobs[j];
        auto h = to_logical(raw[j], pj.routed.final_layout);
        out.push_back(pj.job.mask.empty() ? h : unmask(h, pj.job.mask));
    }
    return out;
}

void SubmissionLog::append(std::string tenant, std::vector<uint32_t> qubits, size_t gate_count) {
    uint64_t t = records_.empty() ? 0 : records_.back().time + 1;
    records_.push_back({std::move(tenant), sorted(std::move(qubits)), gate_count, t});
}

void SubmissionLog::append_plan(const ExecutionPlan &plan) {
    for (const auto &pj : plan.jobs) {
        append(pj.job.tenant, pj.routed.initial.image(), pj.job.circuit.gates.size());
    }
}

std::vector<uint32_t> top_quartile_degree(const CouplingGraph &g) {
    const uint32_t n = g.n_qubits();
    if (n == 0) {
        return {};
    }
    std::vector<size_t> degrees(n);
    for (uint32_t q = 0; q < n; q++) {
        degrees[q] = g.degree(q);
    }
    auto ordered = degrees;
    std::sort(ordered.begin(), ordered.end());
    size_t cut = ordered[(3 * (n - 1)) / 4];
    bool any_above = ordered.back() > cut;
    std::vector<uint32_t> out;
    for (uint32_t q = 0; q < n; q++) {
        if (any_above ? degrees[q] > cut : degrees[q] >= cut) {
            out.push_back(q);
        }
    }
    return out;
}

namespace {

double jaccard(const std::vector<uint32_t> &a, const std::vector<uint32_t> &b) {
    std::vector<uint32_t> both, either;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(either));
    return either.empty() ? 1.0 : static_cast<double>(both.size()) / static_cast<double>(either.size());
}

}  // namespace

std::map<std::string, double> anomaly_scores(const SubmissionLog &log, const CouplingGraph &g, size_t window) {
    if (window == 0) {
        throw std::invalid_argument("anomaly window must be at least 1");
    }
    if (log.empty()) {
        throw std::invalid_argument("empty submission log");
    }
    std::vector<bool> hub(g.n_qubits(), false);
    for (auto q : top_quartile_degree(g)) {
        hub[q] = true;
    }
    std::map<std::string, std::vector<const Submission *>> by_tenant;
    for (const auto &r : log.records()) {
        by_tenant[r.tenant].push_back(&r);
    }
    std::map<std::string, double> scores;
    for (auto &[tenant, subs] : by_tenant) {
        size_t first = subs.size() > window ? subs.size() - window : 0;
        double degree_term = 0;
        size_t counted = 0;
        for (size_t i = first; i < subs.size(); i++) {
            const auto &qs = subs[i]->qubits;
            if (qs.empty()) {
                continue;
            }
            size_t in_hub = 0;
            for (auto q : qs) {
                in_hub += q < hub.size() && hub[q];
            }
            degree_term += static_cast<double>(in_hub) / static_cast<double>(qs.size());
            counted++;
        }
        degree_term = counted ? degree_term / static_cast<double>(counted) : 0.0;
        double similarity = 0;
        size_t pairs = 0;
        for (size_t i = first + 1; i < subs.size(); i++) {
            similarity += jaccard(subs[i - 1]->qubits, subs[i]->qubits);
            pairs++;
        }
        similarity = pairs ? similarity / static_cast<double>(pairs) : 0.0;
        scores[tenant] = 0.5 * degree_term + 0.5 * similarity;
    }
    return scores;
}

std::vector<std::string> flagged_tenants(const std::map<std::string, double> &scores, double threshold) {
    std::vector<std::string> out;
    for (const auto &[tenant, score] : scores) {
        if (score > threshold) {
            out.push_back(tenant);
        }
    }
    return out;
}

}  // namespace qshare

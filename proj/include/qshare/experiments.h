#ifndef QSHARE_EXPERIMENTS_H
#define QSHARE_EXPERIMENTS_H

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "qshare/attacks.h"
#include "qshare/topology.h"

namespace qshare {

using Json = nlohmann::ordered_json;

struct ConfigViolation {
    std::string field;  // dotted path, e.g. "params.victims[1]"
    std::string message;
};

/// Malformed or invalid configuration; carries every violation found.
class ConfigError : public std::runtime_error {
   public:
    explicit ConfigError(std::vector<ConfigViolation> violations);
    const std::vector<ConfigViolation> &violations() const {
        return violations_;
    }

   private:
    std::vector<ConfigViolation> violations_;
};

enum class ScenarioKind { Crosstalk, SwapInject, Sense, Reconstruct, Fingerprint, DefendCompare };

std::string scenario_name(ScenarioKind k);
ScenarioKind parse_scenario(const std::string &name);

/// Fully resolved configuration. `device` and `params` hold the canonical
/// JSON with every default filled in, so serialize/load round-trips.
struct ScenarioConfig {
    ScenarioKind scenario = ScenarioKind::Crosstalk;
    Json device;
    Json params;
    uint64_t seed = 0;
    std::string out;

    DeviceProfile profile() const;
    bool operator==(const ScenarioConfig &o) const;
};

/// Parses and validates. Throws ConfigError listing every violation (a JSON
/// syntax error is reported as a single violation on field "document").
ScenarioConfig load_config(const std::string &document);
ScenarioConfig load_config_file(const std::string &path);
std::string serialize(const ScenarioConfig &cfg);

/// Canonical device JSON to profile. Accepts a builtin name string, or an
/// object with either "builtin" or "n" + "edges" plus optional noise fields.
DeviceProfile device_from_json(const Json &spec);

/// Circuit from a short spec: "grover3:101", "half_adder", "empty:K",
/// "x_all:K", "chain:N", "swap_demo", "random:N:GATES:SEED".
Circuit circuit_from_spec(const std::string &spec);

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct ReportBundle {
    Json results;
    /// File name and contents for each curve file.
    std::vector<std::pair<std::string, std::string>> curve_files;
    std::string summary;
    std::vector<CheckResult> checks;
    std::vector<AttackReport> reports;

    bool passed() const;
};

struct RunOptions {
    size_t threads = 1;
};

/// Runs the scenario and evaluates its built-in checks plus any "expect"
/// bounds from the params. Output is a pure function of the config.
ReportBundle run_scenario(const ScenarioConfig &cfg, const RunOptions &options = {});

/// Writes results.json, one CSV per curve and summary.txt into `dir`, each
/// through a temporary file and a rename.
void write_bundle(const ReportBundle &bundle, const std::string &dir);

/// Header `x,metric,ci_low,ci_high`, LF line endings, numbers formatted
/// exactly as in results.json.
std::string curve_csv(const Curve &c);

void write_file_atomic(const std::string &path, const std::string &contents);

// ---------------------------------------------------------------------------
// Synthetic anomaly-detection workload

struct AnomalyWorkloadParams {
    uint32_t benign_tenants = 10;
    size_t submissions = 20;
    size_t seeds = 100;
    /// The adversary requests the hub_k highest-degree qubits every time.
    size_t hub_k = 4;
    size_t window = 10;
    double threshold = kAnomalyThreshold;
    size_t threads = 1;
};

/// Benign tenants allocate with compact_bfs around randomly occupied qubits;
/// metrics tpr (adversaries flagged) and fpr (benign tenants flagged).
AttackReport run_anomaly_workload(const CouplingGraph &g, const AnomalyWorkloadParams &p, uint64_t seed);

// ---------------------------------------------------------------------------
// Crosstalk-aware rescheduling workload

struct RescheduleWorkloadParams {
    size_t schedules = 50;
    uint32_t qubits_per_tenant = 4;
    size_t gates = 20;
    size_t threads = 1;
};

/// Packs two random tenants side by side and compares cross-tenant conflicts
/// before and after the crosstalk-aware pass.
AttackReport run_reschedule_workload(const DeviceProfile &device, const RescheduleWorkloadParams &p, uint64_t seed);

}  // namespace qshare

#endif

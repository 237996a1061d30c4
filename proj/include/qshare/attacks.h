#ifndef QSHARE_ATTACKS_H
#define QSHARE_ATTACKS_H

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qshare/circuit.h"
#include "qshare/multitenant.h"
#include "qshare/sim.h"
#include "qshare/topology.h"
#include "qshare/transpiler.h"

namespace qshare {

struct CurvePoint {
    double x = 0;
    double metric = 0;
    double ci_low = 0;
    double ci_high = 0;
    bool operator==(const CurvePoint &) const = default;
};

struct Curve {
    std::string name;
    std::vector<CurvePoint> points;
    bool operator==(const Curve &) const = default;
};

/// Outcome of one attack or defense scenario. Everything in here is a pure
/// function of the parameters and seeds.
struct AttackReport {
    std::string scenario;
    std::vector<std::pair<std::string, std::string>> parameters;
    std::vector<Curve> curves;
    /// Ordered summary metrics.
    std::vector<std::pair<std::string, double>> metrics;
    /// Classifier labels and confusion[true][predicted], when applicable.
    std::vector<std::string> labels;
    std::vector<std::vector<uint64_t>> confusion;
    std::vector<uint64_t> seeds;
    std::vector<std::string> notes;

    void set(const std::string &name, double value);
    std::optional<double> metric(const std::string &name) const;
    /// Throws std::out_of_range for unknown metrics.
    double at(const std::string &name) const;
    const Curve &curve(const std::string &name) const;
    void param(const std::string &name, const std::string &value);
    bool operator==(const AttackReport &) const = default;
};

/// 95% Wilson score interval for k successes out of n.
std::pair<double, double> wilson_interval(uint64_t k, uint64_t n, double z = 1.96);

/// Spearman rank correlation with average ranks for ties. NaN when either
/// side is constant.
double spearman(const std::vector<double> &x, const std::vector<double> &y);

/// Splits [0, n) over up to `threads` workers; fn(i) must only write slot i.
void parallel_for(size_t n, size_t threads, const std::function<void(size_t)> &fn);

// ---------------------------------------------------------------------------
// Crosstalk injection

struct CrosstalkAttackParams {
    Circuit victim;
    std::string expected;
    std::vector<size_t> n_values;
    uint64_t shots = 20000;
    uint64_t seed = 0;
    /// Packed lets the adversary sit on `adversary_pair` (or the free edge
    /// touching the victim most); buffered lets the defense place it.
    PlanMode mode = PlanMode::Packed;
    std::vector<uint32_t> adversary_pair;
    NoiseFlags noise{true, false, true, false};
    size_t threads = 1;
};

/// Curves "success" and "wrong" over n. Metrics: spearman_rho, crossover_n
/// (-1 when wrong never exceeds success), success_n0, max_shift_sigma (largest
/// |p_n - p_0| in combined binomial standard errors) and flat (1 when every
/// point is within 3 of those).
AttackReport run_crosstalk_attack(const DeviceProfile &device, const CrosstalkAttackParams &p);

// ---------------------------------------------------------------------------
// SWAP injection

struct Occupancy {
    /// Explicit qubits, or the k highest-degree qubits when `top_k` is set.
    std::vector<uint32_t> qubits;
    std::optional<size_t> top_k;

    std::vector<uint32_t> resolve(const CouplingGraph &g) const;
};

/// The k highest-degree qubits, ties to the lower index.
std::vector<uint32_t> top_k_degree(const CouplingGraph &g, size_t k);

struct SwapInjectionParams {
    std::vector<Circuit> victims;
    Occupancy occupancy;
    AllocationPolicy policy = AllocationPolicy::CompactBfs;
    /// When non-empty, every victim that fits the exhaustive guard is also
    /// routed with exhaustive_best over this window and over the window minus
    /// the occupied qubits, checking that restriction never helps.
    std::vector<uint32_t> oracle_window;
    size_t threads = 1;
};

/// Curves "swap_free", "swap_occupied", "delta" and "relative_increase" over
/// victim index. Metrics: median/max relative increase, mean delta, counts.
AttackReport run_swap_injection(const CouplingGraph &g, const SwapInjectionParams &p);

/// The four-qubit victim of the classic SWAP-injection illustration.
Circuit build_swap_demo_victim();

// ---------------------------------------------------------------------------
// Qubit sensing

struct SignatureSet {
    uint32_t adversary = 0;
    std::vector<uint32_t> victims;
    /// Victim bit patterns in display order, ascending.
    std::vector<std::string> labels;
    /// One-qubit histograms of the adversary reading per label.
    std::vector<Histogram> signatures;
};

/// Calibration runs: each victim qubit is X-padded to end in its label bit,
/// the adversary qubit holds 1, sensing and readout noise are on.
SignatureSet calibrate_signatures(const DeviceProfile &device, uint32_t adversary,
                                  const std::vector<uint32_t> &victims, uint64_t shots, uint64_t seed);

/// Label of the signature nearest in TVD; ties go to the smallest label.
std::string classify_by_signature(const Histogram &observed, const SignatureSet &s);

struct SensingParams {
    uint32_t adversary = 0;
    std::vector<uint32_t> victims;
    uint64_t trials = 200;
    uint64_t shots = 8192;
    uint64_t calibration_shots = 50000;
    uint64_t seed = 0;
    /// Draw the victim's bits per trial; otherwise the victim always holds 1s.
    bool random_input = true;
    /// Victim applies a fresh secret output mask every trial.
    bool mask_defense = false;
    size_t threads = 1;
};

/// Accuracy of recovering the victim's legitimate bits from the adversary's
/// own reading. With the mask defense the report also checks that the victim's
/// unmasked histogram equals an unmasked run bit-for-bit (metric unmask_exact).
AttackReport run_qubit_sensing(const DeviceProfile &device, const SensingParams &p);

// ---------------------------------------------------------------------------
// Reconstruction through reset residue

struct ReconstructionParams {
    Circuit candidate0;
    Circuit candidate1;
    /// Physical qubits shared by the candidate and the probe.
    std::vector<uint32_t> probe_qubits;
    uint64_t trials = 500;
    uint64_t shots = 4096;
    uint64_t training_runs = 8;
    uint64_t seed = 0;
    size_t threads = 1;
};

AttackReport run_reconstruction(const DeviceProfile &device, const ReconstructionParams &p);

// ---------------------------------------------------------------------------
// Device fingerprinting

enum class FingerprintMode { Crosstalk, Timing };

std::string fingerprint_mode_name(FingerprintMode m);
FingerprintMode parse_fingerprint_mode(const std::string &name);

struct FingerprintParams {
    FingerprintMode mode = FingerprintMode::Crosstalk;
    /// Shots per probed edge (crosstalk) or duration measurements (timing).
    uint64_t samples = 20000;
    uint64_t trials = 200;
    /// Training budget, in the same unit as `samples`.
    uint64_t training_samples = 20000;
    /// CNOTs per edge probe.
    size_t chain_length = 10;
    /// Timing mode reference job.
    Circuit reference;
    uint64_t seed = 0;
    size_t threads = 1;
};

/// Per-CNOT spectator flip rate estimates for one device, one entry per
/// (edge, spectator) pair in edge order then spectator order.
std::vector<double> crosstalk_features(const DeviceProfile &device, uint64_t shots, size_t chain_length,
                                       uint64_t seed);

/// Noise-free duration of one shot of `c` on `device`.
double job_duration(const Circuit &c, const DeviceProfile &device);

/// One jittered duration measurement.
double sample_duration(const Circuit &c, const DeviceProfile &device, uint64_t seed, uint64_t index);

AttackReport fingerprint_devices(const std::vector<DeviceProfile> &profiles, const FingerprintParams &p);

}  // namespace qshare

#endif

#ifndef QSHARE_SIM_H
#define QSHARE_SIM_H

#include <complex>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "qshare/circuit.h"
#include "qshare/topology.h"

namespace qshare {

/// Largest register `statevector` (and each independent block inside `run`) accepts.
constexpr uint32_t kMaxSimQubits = 14;
/// Largest device `run` accepts; outcomes are packed into 64-bit words.
constexpr uint32_t kMaxDeviceQubits = 64;

/// Display-order key for a packed outcome: qubit 0 is the leftmost character.
std::string bits_to_key(uint64_t bits, uint32_t n_qubits);
uint64_t key_to_bits(const std::string &key);

/// Measurement-count distribution over bitstrings.
class Histogram {
   public:
    Histogram() = default;
    explicit Histogram(uint32_t n_qubits) : n_qubits_(n_qubits) {
    }

    void add(const std::string &key, uint64_t count = 1);
    void add_bits(uint64_t bits, uint64_t count = 1);

    uint32_t n_qubits() const {
        return n_qubits_;
    }
    uint64_t shots() const {
        return shots_;
    }
    uint64_t count(const std::string &key) const;
    double probability(const std::string &key) const;
    const std::map<std::string, uint64_t> &counts() const {
        return counts_;
    }

    /// Distribution over `qubits`; qubit i of the result is qubits[i] here.
    Histogram marginal(const std::vector<uint32_t> &qubits) const;
    /// Marginal probability of reading 1 on qubit q.
    double p_one(uint32_t q) const;
    /// XOR every key with `mask`.
    Histogram xor_keys(const std::string &mask) const;

    bool operator==(const Histogram &other) const = default;
    std::string str() const;

   private:
    uint32_t n_qubits_ = 0;
    uint64_t shots_ = 0;
    std::map<std::string, uint64_t> counts_;
};

struct NoiseFlags {
    bool crosstalk = true;
    bool sensing = true;
    bool readout = true;
    bool residual = true;

    static NoiseFlags all_off() {
        return {false, false, false, false};
    }
    static NoiseFlags all_on() {
        return {};
    }
    static NoiseFlags only_crosstalk() {
        return {true, false, false, false};
    }
    bool operator==(const NoiseFlags &) const = default;
};

/// One simulation request. `circuit` is a physical circuit: its qubit k is
/// device qubit k.
///
/// Qubits can be split into independent random streams (one per tenant) with
/// `stream_of_qubit`/`stream_seeds`. No gate may span two streams. When left
/// empty every qubit belongs to stream 0 seeded by `seed`.
struct RunSpec {
    Circuit circuit;
    DeviceProfile device;
    uint64_t shots = 1000;
    uint64_t seed = 0;
    NoiseFlags noise;
    /// Per device qubit residual rotation angle; empty means none.
    std::vector<double> initial_bias;
    std::vector<uint32_t> stream_of_qubit;
    std::vector<uint64_t> stream_seeds;
};

/// Exact final amplitudes of a noiseless execution. Index bit k is qubit k.
std::vector<std::complex<double>> statevector(const Circuit &circuit);

/// Shot-based noisy execution. Per shot: residual-biased preparation, gates
/// with spectator crosstalk flips after each multi-qubit gate (SWAP counts as
/// three CNOTs), projective measurement, neighbor-conditioned sensing flips
/// and finally readout flips. The histogram covers circuit qubits
/// 0..circuit.n_qubits-1.
Histogram run(const RunSpec &spec);

/// Interleaves shots of several runs on one device (shot 1 of each spec, then
/// shot 2, ...). Before each shot every qubit carries the residual rotation
/// reset_retain*pi*b where b is that qubit's true outcome in the previous shot.
std::vector<Histogram> run_sequence(const std::vector<RunSpec> &specs);

double success_probability(const Histogram &h, const std::string &expected);

/// Total variation distance between the empirical distributions.
double tvd(const Histogram &a, const Histogram &b);

}  // namespace qshare

#endif

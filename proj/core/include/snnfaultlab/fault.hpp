#pragma once

#include <cstdint>
#include <set>
#include <vector>

#include "snnfaultlab/circuit.hpp"

namespace snnfaultlab::fault {

enum class AttackKind {
    InputSpikeCorruption,  // Attack 1: per-spike membrane change (theta)
    ELThreshold,           // Attack 2: excitatory-layer threshold change
    ILThreshold,           // Attack 3: inhibitory-layer threshold change
    BothThreshold,         // Attack 4: both layers, full coverage
    GlobalVdd,             // Attack 5: shared power domain, both channels
};

enum class AttackPhase { TrainAndTest, TestOnly, TrainOnly };

// How the affected subset of a layer is chosen.
enum class MaskMode { Random, ContiguousBlock };

const char* to_string(AttackKind kind);
const char* to_string(AttackPhase phase);

// Declarative attack description. `delta` drives kinds 1-4 directly;
// kind 5 derives both channels from `v_dd` through the circuit models.
struct AttackSpec {
    AttackKind kind = AttackKind::GlobalVdd;
    double delta = 0.0;               // fraction in [-0.20, +0.20]
    double v_dd = 1.0;                // volts, kind 5 only
    double fraction_affected = 1.0;   // [0, 1]
    circuit::NeuronKind neuron_kind = circuit::NeuronKind::AxonHillock;
    std::set<circuit::DefenseVariant> defenses;
    AttackPhase phase = AttackPhase::TrainAndTest;
    std::uint64_t seed = 0;
    MaskMode mask_mode = MaskMode::Random;

    void validate() const;
};

// Resolved per-neuron effect of one attack. Multipliers scale the threshold
// margin of affected neurons; psp_scale scales the input synaptic drive.
struct FaultPlan {
    double psp_scale = 1.0;
    std::vector<double> el_threshold_multipliers;
    std::vector<double> il_threshold_multipliers;
    std::vector<std::uint8_t> el_mask;
    std::vector<std::uint8_t> il_mask;
    AttackPhase phase = AttackPhase::TrainAndTest;

    static FaultPlan identity(std::size_t n_exc = 100, std::size_t n_inh = 100);

    bool is_identity() const;
    bool active_during_training() const { return phase != AttackPhase::TestOnly; }
    bool active_during_test() const { return phase != AttackPhase::TrainOnly; }
};

FaultPlan build_fault_plan(const AttackSpec& spec, std::size_t n_exc = 100,
                           std::size_t n_inh = 100);

// Sweep grid; kinds 1-4 consume the delta axis, kind 5 the v_dd axis.
struct SweepGrid {
    std::vector<AttackKind> kinds;
    std::vector<double> deltas;
    std::vector<double> v_dds;
    std::vector<double> fractions = {1.0};
    std::vector<std::set<circuit::DefenseVariant>> defense_sets = {{}};
    std::vector<std::uint64_t> seeds;
    circuit::NeuronKind neuron_kind = circuit::NeuronKind::AxonHillock;
    AttackPhase phase = AttackPhase::TrainAndTest;
    MaskMode mask_mode = MaskMode::Random;
};

// Cartesian product in stable (kind, delta|v_dd, fraction, defense, seed) order.
std::vector<AttackSpec> sweep(const SweepGrid& grid);

}  // namespace snnfaultlab::fault

#include "snnfaultlab/fault.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "snnfaultlab/rng.hpp"

namespace snnfaultlab::fault {

namespace {

using circuit::DefenseVariant;
using circuit::NeuronKind;

// Draw floor(fraction * n) distinct indices and flag them in the mask.
std::vector<std::uint8_t> make_mask(std::size_t n, double fraction, std::uint64_t seed,
                                    MaskMode mode) {
    const std::size_t k = static_cast<std::size_t>(std::floor(fraction * double(n) + 1e-9));
    std::vector<std::uint8_t> mask(n, 0);
    if (k == 0) return mask;
    if (mode == MaskMode::ContiguousBlock) {
        Rng rng(Rng::derive(seed, 0xB10C));
        const std::size_t start = static_cast<std::size_t>(rng.below(n - k + 1));
        std::fill(mask.begin() + start, mask.begin() + start + k, std::uint8_t{1});
        return mask;
    }
    std::vector<std::uint32_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0u);
    Rng rng(Rng::derive(seed, 0x3A5C));
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
        std::swap(idx[i], idx[j]);
    }
    for (std::size_t i = 0; i < k; ++i) mask[idx[i]] = 1;
    return mask;
}

void apply_masked(std::vector<double>& mult, const std::vector<std::uint8_t>& mask,
                  double value) {
    for (std::size_t i = 0; i < mult.size(); ++i)
        if (mask[i]) mult[i] = value;
}

// Split the defense set into the amplitude-channel and threshold-channel
// picks and reject combinations incompatible with the neuron kind.
struct Channels {
    DefenseVariant amplitude = DefenseVariant::NoDefense;
    DefenseVariant threshold = DefenseVariant::NoDefense;
};

Channels resolve_defenses(const std::set<DefenseVariant>& defenses, NeuronKind kind) {
    Channels ch;
    for (DefenseVariant d : defenses) {
        switch (d) {
            case DefenseVariant::NoDefense:
                break;
            case DefenseVariant::RobustDriver:
                ch.amplitude = DefenseVariant::RobustDriver;
                break;
            case DefenseVariant::BandgapThreshold:
                if (kind != NeuronKind::VoltageAmpIF)
                    throw circuit::ConfigError("bandgap-threshold applies only to voltage-amp-if");
                ch.threshold = d;
                break;
            case DefenseVariant::SizedW32:
            case DefenseVariant::Comparator:
                if (kind != NeuronKind::AxonHillock)
                    throw circuit::ConfigError(std::string(circuit::to_string(d)) +
                                               " applies only to axon-hillock");
                if (ch.threshold != DefenseVariant::NoDefense)
                    throw circuit::ConfigError("multiple threshold-channel defenses selected");
                ch.threshold = d;
                break;
        }
    }
    return ch;
}

}  // namespace

const char* to_string(AttackKind kind) {
    switch (kind) {
        case AttackKind::InputSpikeCorruption: return "input-spike-corruption";
        case AttackKind::ELThreshold: return "el-threshold";
        case AttackKind::ILThreshold: return "il-threshold";
        case AttackKind::BothThreshold: return "both-threshold";
        case AttackKind::GlobalVdd: return "global-vdd";
    }
    return "?";
}

const char* to_string(AttackPhase phase) {
    switch (phase) {
        case AttackPhase::TrainAndTest: return "train-and-test";
        case AttackPhase::TestOnly: return "test-only";
        case AttackPhase::TrainOnly: return "train-only";
    }
    return "?";
}

void AttackSpec::validate() const {
    if (kind != AttackKind::GlobalVdd && (delta < -0.20 || delta > 0.20))
        throw circuit::DomainError("AttackSpec: delta outside calibrated [-0.20, 0.20]");
    if (kind == AttackKind::GlobalVdd && (v_dd < 0.8 || v_dd > 1.2))
        throw circuit::DomainError("AttackSpec: v_dd outside calibrated [0.8, 1.2]");
    if (fraction_affected < 0.0 || fraction_affected > 1.0)
        throw circuit::DomainError("AttackSpec: fraction_affected outside [0, 1]");
}

FaultPlan FaultPlan::identity(std::size_t n_exc, std::size_t n_inh) {
    FaultPlan plan;
    plan.el_threshold_multipliers.assign(n_exc, 1.0);
    plan.il_threshold_multipliers.assign(n_inh, 1.0);
    plan.el_mask.assign(n_exc, 0);
    plan.il_mask.assign(n_inh, 0);
    return plan;
}

bool FaultPlan::is_identity() const {
    if (psp_scale != 1.0) return false;
    auto all_one = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [](double m) { return m == 1.0; });
    };
    return all_one(el_threshold_multipliers) && all_one(il_threshold_multipliers);
}

FaultPlan build_fault_plan(const AttackSpec& spec, std::size_t n_exc, std::size_t n_inh) {
    spec.validate();
    FaultPlan plan = FaultPlan::identity(n_exc, n_inh);
    plan.phase = spec.phase;

    switch (spec.kind) {
        case AttackKind::InputSpikeCorruption:
            plan.psp_scale = 1.0 + spec.delta;
            break;
        case AttackKind::ELThreshold:
            plan.el_mask = make_mask(n_exc, spec.fraction_affected, spec.seed, spec.mask_mode);
            apply_masked(plan.el_threshold_multipliers, plan.el_mask, 1.0 + spec.delta);
            break;
        case AttackKind::ILThreshold:
            plan.il_mask = make_mask(n_inh, spec.fraction_affected, spec.seed, spec.mask_mode);
            apply_masked(plan.il_threshold_multipliers, plan.il_mask, 1.0 + spec.delta);
            break;
        case AttackKind::BothThreshold: {
            plan.el_mask.assign(n_exc, 1);
            plan.il_mask.assign(n_inh, 1);
            apply_masked(plan.el_threshold_multipliers, plan.el_mask, 1.0 + spec.delta);
            apply_masked(plan.il_threshold_multipliers, plan.il_mask, 1.0 + spec.delta);
            break;
        }
        case AttackKind::GlobalVdd: {
            const Channels ch = resolve_defenses(spec.defenses, spec.neuron_kind);
            plan.psp_scale = circuit::amplitude_to_psp_scale(
                circuit::driver_current(spec.v_dd, ch.amplitude));
            const double mult =
                1.0 + circuit::threshold_shift(spec.v_dd, spec.neuron_kind, ch.threshold);
            plan.el_mask.assign(n_exc, 1);
            plan.il_mask.assign(n_inh, 1);
            apply_masked(plan.el_threshold_multipliers, plan.el_mask, mult);
            apply_masked(plan.il_threshold_multipliers, plan.il_mask, mult);
            break;
        }
    }
    return plan;
}

std::vector<AttackSpec> sweep(const SweepGrid& grid) {
    if (grid.kinds.empty() || grid.fractions.empty() || grid.defense_sets.empty() ||
        grid.seeds.empty())
        throw circuit::ConfigError("sweep: empty axis");

    std::vector<AttackSpec> specs;
    for (AttackKind kind : grid.kinds) {
        const bool vdd_kind = kind == AttackKind::GlobalVdd;
        const std::vector<double>& primary = vdd_kind ? grid.v_dds : grid.deltas;
        if (primary.empty())
            throw circuit::ConfigError(std::string("sweep: empty ") +
                                       (vdd_kind ? "v_dd" : "delta") + " axis for " +
                                       to_string(kind));
        for (double value : primary)
            for (double fraction : grid.fractions)
                for (const auto& defenses : grid.defense_sets)
                    for (std::uint64_t seed : grid.seeds) {
                        AttackSpec spec;
                        spec.kind = kind;
                        if (vdd_kind)
                            spec.v_dd = value;
                        else
                            spec.delta = value;
                        spec.fraction_affected = fraction;
                        spec.neuron_kind = grid.neuron_kind;
                        spec.defenses = defenses;
                        spec.phase = grid.phase;
                        spec.seed = seed;
                        spec.mask_mode = grid.mask_mode;
                        spec.validate();
                        specs.push_back(std::move(spec));
                    }
    }
    return specs;
}

}  // namespace snnfaultlab::fault

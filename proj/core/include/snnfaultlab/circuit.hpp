#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace snnfaultlab::circuit {

// The two analog neuron flavors modeled behaviorally.
enum class NeuronKind { AxonHillock, VoltageAmpIF };

enum class DefenseVariant {
    NoDefense,
    RobustDriver,       // amplitude channel: constant-current driver
    BandgapThreshold,   // threshold channel, VoltageAmpIF only
    SizedW32,           // threshold channel, AxonHillock only (W/L = 32:1)
    Comparator,         // threshold channel, AxonHillock only
};

const char* to_string(NeuronKind kind);
const char* to_string(DefenseVariant defense);

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// Behavioral constants of one analog neuron. SI units throughout.
struct CircuitParams {
    double c_mem_farads;
    double v_thr_volts;
    double v_dd_nominal_volts = 1.0;
    double leak_current_amps = 0.0;
    double refractory_offset_seconds = 0.0;

    void validate() const;
};

// Periodic input-current spike train.
struct DriveParams {
    double amplitude_amps;
    double pulse_width_seconds;
    double period_seconds;

    void validate() const;
};

// Piecewise-linear VDD -> relative parameter shift calibration.
// Anchors must be strictly increasing in v_dd, contain (1.0, 0.0) and span
// at least [0.8, 1.2]. Evaluation outside the anchor span is an error: the
// calibration data does not exist there.
class TransductionCurve {
public:
    TransductionCurve(std::vector<std::pair<double, double>> anchors);

    double evaluate(double v_dd) const;

    const std::vector<std::pair<double, double>>& anchors() const { return anchors_; }

private:
    std::vector<std::pair<double, double>> anchors_;
};

inline constexpr double kNominalDriveAmps = 200e-9;

// Nominal neuron/drive constants used by the calibrated models.
CircuitParams nominal_neuron(NeuronKind kind);
DriveParams nominal_drive(NeuronKind kind);

// Current-driver output amplitude at the given supply voltage.
// NoDefense follows the calibrated linear curve (0.8 V -> 136 nA,
// 1.0 V -> 200 nA, 1.2 V -> 264 nA); RobustDriver pins 200 nA.
double driver_current(double v_dd, DefenseVariant defense);

// Relative membrane-threshold shift at the given supply voltage.
double threshold_shift(double v_dd, NeuronKind kind, DefenseVariant defense);

// Per-input-spike membrane charge scale relative to the nominal 200 nA drive.
double amplitude_to_psp_scale(double amplitude_amps);

// Ideal-integrator time to first output spike:
//   n = ceil(v_thr * c_mem / (amplitude * pulse_width - leak * period))
//   t = n * period + refractory_offset
// Throws DomainError when the net charge per period is not positive.
double time_to_first_spike(const DriveParams& drive, const CircuitParams& neuron);

struct DummyCount {
    long long count = 0;
    bool never_spiked = false;
};

// Output-spike count of the constantly driven dummy neuron over a sampling
// window, with the drive amplitude and threshold transduced from v_dd.
DummyCount dummy_spike_count(double v_dd, double window_seconds, NeuronKind kind,
                             DefenseVariant defense);

// True iff |observed - baseline| / baseline >= threshold_frac.
bool detect_vdd_anomaly(long long observed, long long baseline, double threshold_frac = 0.10);

// Calibration tables as (kind, defense, curve) rows, for --dump-calibration.
struct CalibrationRow {
    std::string channel;
    std::string kind;
    std::string defense;
    double v_dd;
    double relative_shift;
};
std::vector<CalibrationRow> calibration_table();

}  // namespace snnfaultlab::circuit

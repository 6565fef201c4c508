#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "snnfaultlab/fault.hpp"
#include "snnfaultlab/mnist.hpp"
#include "snnfaultlab/rng.hpp"

namespace snnfaultlab::snn {

struct EncodeParams {
    double duration_ms = 250.0;
    double dt_ms = 1.0;
    double max_rate_hz = 128.0;  // firing rate of a saturated (255) pixel

    int steps() const;
    void validate() const;
};

// Binary T x n_channels spike matrix, row-major by time step.
struct SpikeTrain {
    int steps = 0;
    int n_channels = 0;
    double dt_ms = 1.0;
    std::vector<std::uint8_t> spikes;

    bool at(int t, int i) const { return spikes[std::size_t(t) * n_channels + i] != 0; }
};

// Rate coding: pixel p fires as an independent Bernoulli process with
// per-step probability (p/255 * max_rate_hz) * dt / 1000.
SpikeTrain encode_poisson(std::span<const std::uint8_t> image, const EncodeParams& params,
                          Rng& rng);

struct LifParams {
    double v_rest_mv = -65.0;
    double v_reset_mv = -60.0;
    double v_thresh_mv = -52.0;
    double tc_decay_ms = 100.0;
    double refrac_ms = 5.0;

    void validate() const;
};

struct AdaptiveLifParams {
    LifParams lif;
    double theta_plus_mv = 0.05;
    double tc_theta_decay_ms = 1e7;
};

struct LifState {
    double v_mv = 0.0;
    double refrac_ms_left = 0.0;
};

struct AdaptiveLifState {
    LifState lif;
    double theta_mv = 0.0;
};

// One Euler step: exponential decay toward rest, input increment, inclusive
// threshold test. `margin_mult` scales the rest-to-threshold margin (the
// fault channel); during refractory the input is ignored.
bool lif_step(LifState& state, double input, const LifParams& params, double dt_ms,
              double margin_mult = 1.0);

// As lif_step with effective threshold v_thresh + theta; theta grows by
// theta_plus on each spike (when adapting) and decays with tc_theta_decay.
bool adaptive_lif_step(AdaptiveLifState& state, double input, const AdaptiveLifParams& params,
                       double dt_ms, bool adapt = true, double margin_mult = 1.0);

// Event-driven pair-based STDP on the input->excitatory matrix
// (n_input x n_exc, row-major by input). Traces are decayed spike memories
// maintained by the caller.
void stdp_update(std::span<double> weights, std::size_t n_input, std::size_t n_exc,
                 std::span<const double> pre_trace, std::span<const double> post_trace,
                 std::span<const std::uint16_t> pre_spikes,
                 std::span<const std::uint16_t> post_spikes, double lr_pre, double lr_post,
                 double w_max);

// Rescale each excitatory neuron's incoming column to sum to `norm`;
// all-zero columns are left alone.
void normalize_weights(std::span<double> weights, std::size_t n_input, std::size_t n_exc,
                       double norm);

struct NetworkConfig {
    std::size_t n_input = 784;
    std::size_t n_exc = 100;
    std::size_t n_inh = 100;
    double w_max = 1.0;
    double init_w_min = 0.0;
    double init_w_max = 0.3;
    double norm = 78.4;
    double w_exc_inh = 22.5;
    double w_inh_exc = -120.0;
    double lr_pre = 0.0004;
    double lr_post = 0.0002;
    int batch = 32;
    double tc_trace_ms = 20.0;
    // Trace amplitude on a spike (traces are set, not accumulated). The
    // asymmetry makes potentiation dominate depression at the fixed rates.
    double pre_trace_plus = 395.0;
    double post_trace_plus = 1.98;
    AdaptiveLifParams exc;
    // The inhibitory cell recovers to within 1 mV of threshold: a fault that
    // trims the threshold margin by ~17% or more drops the threshold below
    // the post-refractory voltage and the cell free-runs, which is the
    // failure mode the threshold attacks exploit.
    LifParams inh{.v_rest_mv = -60.0,
                  .v_reset_mv = -41.0,
                  .v_thresh_mv = -40.0,
                  .tc_decay_ms = 22.0,
                  .refrac_ms = 2.0};

    void validate() const;
};

struct TrainedModel {
    std::vector<double> weights;          // n_input x n_exc
    std::vector<double> theta_mv;         // n_exc
    std::vector<std::uint8_t> assignments;  // n_exc, values 0..9
    std::uint64_t config_fingerprint = 0;
    std::uint64_t seed = 0;
};

struct SampleResult {
    std::vector<std::uint32_t> el_counts;
    std::vector<std::uint32_t> il_counts;
};

// The three-layer topology: input all-to-all into the excitatory layer,
// excitatory one-to-one into the inhibitory layer, inhibitory back to every
// excitatory neuron except its source.
class Network {
public:
    Network(NetworkConfig config, std::uint64_t seed);
    Network(NetworkConfig config, const TrainedModel& model);

    // Simulates one sample from a reset membrane state. The plan is a
    // non-destructive overlay; the identity plan reproduces the unfaulted
    // network exactly. When `learning`, STDP runs every step and the weight
    // columns are re-normalized at the end of the sample.
    SampleResult run_sample(const SpikeTrain& train, const fault::FaultPlan& plan,
                            bool learning);

    const NetworkConfig& config() const { return config_; }
    const std::vector<double>& weights() const { return weights_; }
    std::vector<double>& weights() { return weights_; }
    const std::vector<double>& theta_mv() const { return theta_mv_; }

private:
    NetworkConfig config_;
    std::vector<double> weights_;
    std::vector<double> theta_mv_;
};

TrainedModel train(const NetworkConfig& config, const EncodeParams& encode,
                   const mnist::ImageSet& images, const mnist::LabelSet& labels,
                   std::uint64_t seed, const fault::FaultPlan& plan);

// Inference passes over a labeled set; each neuron gets the class with the
// highest mean spike count, ties to the lowest class index.
std::vector<std::uint8_t> assign_labels(Network& net, const EncodeParams& encode,
                                        const mnist::ImageSet& images,
                                        const mnist::LabelSet& labels, std::uint64_t seed,
                                        const fault::FaultPlan& plan);

int classify(std::span<const std::uint8_t> assignments,
             std::span<const std::uint32_t> el_counts);

double evaluate(const NetworkConfig& config, const EncodeParams& encode,
                const TrainedModel& model, const mnist::ImageSet& images,
                const mnist::LabelSet& labels, const fault::FaultPlan& plan,
                std::uint64_t seed);

std::uint64_t config_fingerprint(const NetworkConfig& config, const EncodeParams& encode);

}  // namespace snnfaultlab::snn

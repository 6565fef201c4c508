#include "snnfaultlab/snn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace snnfaultlab::snn {

namespace {

struct DimError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

double effective_threshold(const LifParams& p, double margin_mult, double theta_mv) {
    return p.v_rest_mv + (p.v_thresh_mv - p.v_rest_mv) * margin_mult + theta_mv;
}

}  // namespace

int EncodeParams::steps() const {
    return static_cast<int>(std::llround(duration_ms / dt_ms));
}

void EncodeParams::validate() const {
    if (dt_ms <= 0 || duration_ms <= 0) throw std::invalid_argument("encode: dt, duration > 0");
    const double ratio = duration_ms / dt_ms;
    if (std::fabs(ratio - std::llround(ratio)) > 1e-9 || std::llround(ratio) < 1)
        throw std::invalid_argument("encode: duration/dt must be a positive integer");
    if (max_rate_hz <= 0) throw std::invalid_argument("encode: max_rate_hz > 0");
}

SpikeTrain encode_poisson(std::span<const std::uint8_t> image, const EncodeParams& params,
                          Rng& rng) {
    params.validate();
    SpikeTrain train;
    train.steps = params.steps();
    train.n_channels = static_cast<int>(image.size());
    train.dt_ms = params.dt_ms;
    train.spikes.assign(std::size_t(train.steps) * train.n_channels, 0);
    const double rate_scale = params.max_rate_hz / 255.0 * params.dt_ms / 1000.0;
    for (int t = 0; t < train.steps; ++t) {
        std::uint8_t* row = train.spikes.data() + std::size_t(t) * train.n_channels;
        for (int i = 0; i < train.n_channels; ++i) {
            if (image[i] == 0) continue;
            if (rng.uniform() < image[i] * rate_scale) row[i] = 1;
        }
    }
    return train;
}

void LifParams::validate() const {
    if (!(v_reset_mv < v_thresh_mv && v_rest_mv < v_thresh_mv))
        throw std::invalid_argument("lif: require v_reset and v_rest below v_thresh");
    if (tc_decay_ms <= 0) throw std::invalid_argument("lif: tc_decay > 0");
    if (refrac_ms < 0) throw std::invalid_argument("lif: refrac >= 0");
}

bool lif_step(LifState& state, double input, const LifParams& params, double dt_ms,
              double margin_mult) {
    if (state.refrac_ms_left > 0) {
        state.refrac_ms_left -= dt_ms;
        state.v_mv = params.v_rest_mv + (state.v_mv - params.v_rest_mv) *
                                            std::exp(-dt_ms / params.tc_decay_ms);
        return false;
    }
    state.v_mv = params.v_rest_mv +
                 (state.v_mv - params.v_rest_mv) * std::exp(-dt_ms / params.tc_decay_ms);
    state.v_mv += input;
    if (state.v_mv >= effective_threshold(params, margin_mult, 0.0)) {
        state.v_mv = params.v_reset_mv;
        state.refrac_ms_left = params.refrac_ms;
        return true;
    }
    return false;
}

bool adaptive_lif_step(AdaptiveLifState& state, double input, const AdaptiveLifParams& params,
                       double dt_ms, bool adapt, double margin_mult) {
    const LifParams& p = params.lif;
    state.theta_mv *= std::exp(-dt_ms / params.tc_theta_decay_ms);
    if (state.lif.refrac_ms_left > 0) {
        state.lif.refrac_ms_left -= dt_ms;
        state.lif.v_mv =
            p.v_rest_mv + (state.lif.v_mv - p.v_rest_mv) * std::exp(-dt_ms / p.tc_decay_ms);
        return false;
    }
    state.lif.v_mv =
        p.v_rest_mv + (state.lif.v_mv - p.v_rest_mv) * std::exp(-dt_ms / p.tc_decay_ms);
    state.lif.v_mv += input;
    if (state.lif.v_mv >= effective_threshold(p, margin_mult, state.theta_mv)) {
        state.lif.v_mv = p.v_reset_mv;
        state.lif.refrac_ms_left = p.refrac_ms;
        if (adapt) state.theta_mv += params.theta_plus_mv;
        return true;
    }
    return false;
}

void stdp_update(std::span<double> weights, std::size_t n_input, std::size_t n_exc,
                 std::span<const double> pre_trace, std::span<const double> post_trace,
                 std::span<const std::uint16_t> pre_spikes,
                 std::span<const std::uint16_t> post_spikes, double lr_pre, double lr_post,
                 double w_max) {
    if (weights.size() != n_input * n_exc) throw DimError("stdp_update: weight shape");
    for (std::uint16_t i : pre_spikes) {
        double* row = weights.data() + std::size_t(i) * n_exc;
        for (std::size_t j = 0; j < n_exc; ++j)
            row[j] = std::max(0.0, row[j] - lr_pre * post_trace[j]);
    }
    for (std::uint16_t j : post_spikes) {
        for (std::size_t i = 0; i < n_input; ++i) {
            double& w = weights[i * n_exc + j];
            w = std::min(w_max, w + lr_post * pre_trace[i]);
        }
    }
}

void normalize_weights(std::span<double> weights, std::size_t n_input, std::size_t n_exc,
                       double norm) {
    if (weights.size() != n_input * n_exc) throw DimError("normalize_weights: weight shape");
    for (std::size_t j = 0; j < n_exc; ++j) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n_input; ++i) sum += weights[i * n_exc + j];
        if (sum == 0.0) continue;
        const double scale = norm / sum;
        for (std::size_t i = 0; i < n_input; ++i) weights[i * n_exc + j] *= scale;
    }
}

void NetworkConfig::validate() const {
    if (n_input == 0 || n_exc == 0 || n_inh == 0)
        throw std::invalid_argument("network: layer sizes > 0");
    if (lr_pre < 0 || lr_post < 0) throw std::invalid_argument("network: lr >= 0");
    if (pre_trace_plus < 0 || post_trace_plus < 0)
        throw std::invalid_argument("network: trace amplitudes >= 0");
    if (!(w_inh_exc < 0.0 && w_exc_inh > 0.0))
        throw std::invalid_argument("network: require w_inh_exc < 0 < w_exc_inh");
    if (w_max <= 0 || norm <= 0) throw std::invalid_argument("network: w_max, norm > 0");
    if (init_w_min < 0 || init_w_max < init_w_min)
        throw std::invalid_argument("network: bad init weight range");
    exc.lif.validate();
    inh.validate();
}

Network::Network(NetworkConfig config, std::uint64_t seed) : config_(std::move(config)) {
    config_.validate();
    Rng rng(Rng::derive(seed, 0x11171));
    weights_.resize(config_.n_input * config_.n_exc);
    for (double& w : weights_) w = rng.uniform(config_.init_w_min, config_.init_w_max);
    normalize_weights(weights_, config_.n_input, config_.n_exc, config_.norm);
    theta_mv_.assign(config_.n_exc, 0.0);
}

Network::Network(NetworkConfig config, const TrainedModel& model) : config_(std::move(config)) {
    config_.validate();
    if (model.weights.size() != config_.n_input * config_.n_exc ||
        model.theta_mv.size() != config_.n_exc)
        throw DimError("Network: model dimensions do not match config");
    weights_ = model.weights;
    theta_mv_ = model.theta_mv;
}

SampleResult Network::run_sample(const SpikeTrain& train, const fault::FaultPlan& plan,
                                 bool learning) {
    const std::size_t n_in = config_.n_input;
    const std::size_t n_exc = config_.n_exc;
    const std::size_t n_inh = config_.n_inh;
    if (std::size_t(train.n_channels) != n_in)
        throw DimError("run_sample: spike train channel count");
    if (plan.el_threshold_multipliers.size() != n_exc ||
        plan.il_threshold_multipliers.size() != n_inh)
        throw DimError("run_sample: fault plan dimensions");
    const double dt = train.dt_ms;

    std::vector<AdaptiveLifState> el(n_exc);
    std::vector<LifState> il(n_inh);
    for (std::size_t j = 0; j < n_exc; ++j) {
        el[j].lif.v_mv = config_.exc.lif.v_rest_mv;
        el[j].theta_mv = theta_mv_[j];
    }
    for (std::size_t j = 0; j < n_inh; ++j) il[j].v_mv = config_.inh.v_rest_mv;

    std::vector<double> pre_trace(n_in, 0.0), post_trace(n_exc, 0.0);
    const double trace_decay = std::exp(-dt / config_.tc_trace_ms);

    SampleResult result;
    result.el_counts.assign(n_exc, 0);
    result.il_counts.assign(n_inh, 0);

    std::vector<std::uint16_t> active, el_spiked;
    std::vector<std::uint8_t> il_prev(n_inh, 0);
    std::vector<double> el_input(n_exc);
    std::uint32_t il_prev_total = 0;

    for (int t = 0; t < train.steps; ++t) {
        active.clear();
        const std::uint8_t* row = train.spikes.data() + std::size_t(t) * n_in;
        for (std::size_t i = 0; i < n_in; ++i)
            if (row[i]) active.push_back(static_cast<std::uint16_t>(i));

        std::fill(el_input.begin(), el_input.end(), 0.0);
        for (std::uint16_t i : active) {
            const double* wrow = weights_.data() + std::size_t(i) * n_exc;
            for (std::size_t j = 0; j < n_exc; ++j) el_input[j] += wrow[j];
        }
        if (plan.psp_scale != 1.0)
            for (double& x : el_input) x *= plan.psp_scale;
        // Lateral inhibition from the previous step, all-except-partner.
        if (il_prev_total > 0) {
            for (std::size_t j = 0; j < n_exc; ++j) {
                const std::uint32_t sources =
                    il_prev_total - (j < n_inh ? il_prev[j] : std::uint8_t{0});
                el_input[j] += config_.w_inh_exc * sources;
            }
        }

        el_spiked.clear();
        for (std::size_t j = 0; j < n_exc; ++j) {
            if (adaptive_lif_step(el[j], el_input[j], config_.exc, dt, learning,
                                  plan.el_threshold_multipliers[j])) {
                ++result.el_counts[j];
                el_spiked.push_back(static_cast<std::uint16_t>(j));
            }
        }

        il_prev_total = 0;
        for (std::size_t j = 0; j < n_inh; ++j) {
            const bool partner_spiked =
                j < n_exc && std::binary_search(el_spiked.begin(), el_spiked.end(),
                                                static_cast<std::uint16_t>(j));
            const double drive = partner_spiked ? config_.w_exc_inh : 0.0;
            const bool spiked =
                lif_step(il[j], drive, config_.inh, dt, plan.il_threshold_multipliers[j]);
            il_prev[j] = spiked ? 1 : 0;
            if (spiked) {
                ++result.il_counts[j];
                ++il_prev_total;
            }
        }

        if (learning) {
            for (double& x : pre_trace) x *= trace_decay;
            for (double& x : post_trace) x *= trace_decay;
            for (std::uint16_t i : active) pre_trace[i] = config_.pre_trace_plus;
            stdp_update(weights_, n_in, n_exc, pre_trace, post_trace, active, el_spiked,
                        config_.lr_pre, config_.lr_post, config_.w_max);
            for (std::uint16_t j : el_spiked) post_trace[j] = config_.post_trace_plus;
        }
    }

    if (learning) {
        normalize_weights(weights_, n_in, n_exc, config_.norm);
        for (std::size_t j = 0; j < n_exc; ++j) theta_mv_[j] = el[j].theta_mv;
    }
    return result;
}

TrainedModel train(const NetworkConfig& config, const EncodeParams& encode,
                   const mnist::ImageSet& images, const mnist::LabelSet& labels,
                   std::uint64_t seed, const fault::FaultPlan& plan) {
    if (images.count == 0) throw std::invalid_argument("train: empty dataset");
    if (images.count != labels.count) throw DimError("train: image/label count mismatch");
    const fault::FaultPlan identity = fault::FaultPlan::identity(config.n_exc, config.n_inh);
    const fault::FaultPlan& train_plan = plan.active_during_training() ? plan : identity;

    Network net(config, seed);
    for (std::uint32_t i = 0; i < images.count; ++i) {
        Rng rng(Rng::derive(seed, 0x100000 + i));
        const SpikeTrain spikes = encode_poisson(images.image(i), encode, rng);
        net.run_sample(spikes, train_plan, /*learning=*/true);
    }

    TrainedModel model;
    model.weights = net.weights();
    model.theta_mv = net.theta_mv();
    model.assignments =
        assign_labels(net, encode, images, labels, Rng::derive(seed, 0x2A551), train_plan);
    model.config_fingerprint = config_fingerprint(config, encode);
    model.seed = seed;
    return model;
}

std::vector<std::uint8_t> assign_labels(Network& net, const EncodeParams& encode,
                                        const mnist::ImageSet& images,
                                        const mnist::LabelSet& labels, std::uint64_t seed,
                                        const fault::FaultPlan& plan) {
    const std::size_t n_exc = net.config().n_exc;
    std::vector<double> sums(n_exc * 10, 0.0);
    std::vector<std::uint32_t> class_count(10, 0);
    for (std::uint32_t i = 0; i < images.count; ++i) {
        Rng rng(Rng::derive(seed, 0x300000 + i));
        const SpikeTrain spikes = encode_poisson(images.image(i), encode, rng);
        const SampleResult r = net.run_sample(spikes, plan, /*learning=*/false);
        const std::uint8_t cls = labels.labels[i];
        ++class_count[cls];
        for (std::size_t j = 0; j < n_exc; ++j) sums[j * 10 + cls] += r.el_counts[j];
    }
    std::vector<std::uint8_t> assignments(n_exc, 0);
    for (std::size_t j = 0; j < n_exc; ++j) {
        double best = -1.0;
        std::uint8_t best_cls = 0;
        for (std::uint8_t c = 0; c < 10; ++c) {
            const double avg = class_count[c] ? sums[j * 10 + c] / class_count[c] : 0.0;
            if (avg > best) {
                best = avg;
                best_cls = c;
            }
        }
        assignments[j] = best_cls;
    }
    return assignments;
}

int classify(std::span<const std::uint8_t> assignments,
             std::span<const std::uint32_t> el_counts) {
    if (assignments.size() != el_counts.size())
        throw DimError("classify: assignment/count size mismatch");
    double best = -1.0;
    int best_cls = 0;
    for (int c = 0; c < 10; ++c) {
        double sum = 0.0;
        std::uint32_t members = 0;
        for (std::size_t j = 0; j < assignments.size(); ++j) {
            if (assignments[j] == c) {
                sum += el_counts[j];
                ++members;
            }
        }
        const double mean = members ? sum / members : 0.0;
        if (mean > best) {
            best = mean;
            best_cls = c;
        }
    }
    return best_cls;
}

double evaluate(const NetworkConfig& config, const EncodeParams& encode,
                const TrainedModel& model, const mnist::ImageSet& images,
                const mnist::LabelSet& labels, const fault::FaultPlan& plan,
                std::uint64_t seed) {
    if (images.count == 0) throw std::invalid_argument("evaluate: empty dataset");
    const fault::FaultPlan identity = fault::FaultPlan::identity(config.n_exc, config.n_inh);
    const fault::FaultPlan& eval_plan = plan.active_during_test() ? plan : identity;

    Network net(config, model);
    std::uint32_t correct = 0;
    for (std::uint32_t i = 0; i < images.count; ++i) {
        Rng rng(Rng::derive(seed, 0x700000 + i));
        const SpikeTrain spikes = encode_poisson(images.image(i), encode, rng);
        const SampleResult r = net.run_sample(spikes, eval_plan, /*learning=*/false);
        if (classify(model.assignments, r.el_counts) == labels.labels[i]) ++correct;
    }
    return double(correct) / images.count;
}

std::uint64_t config_fingerprint(const NetworkConfig& config, const EncodeParams& encode) {
    char buf[1024];
    std::snprintf(
        buf, sizeof(buf),
        "%zu|%zu|%zu|%.17g|%.17g|%.17g|%.17g|%.17g|%.17g|%.17g|%.17g|%d|%.17g|%.17g|%.17g|"
        "%.17g|%.17g|%.17g|%.17g|%.17g|%.17g|%.17g|"
        "%.17g|%.17g|%.17g|%.17g|%.17g|"
        "%.17g|%.17g|%.17g",
        config.n_input, config.n_exc, config.n_inh, config.w_max, config.init_w_min,
        config.init_w_max, config.norm, config.w_exc_inh, config.w_inh_exc, config.lr_pre,
        config.lr_post, config.batch, config.tc_trace_ms, config.pre_trace_plus,
        config.post_trace_plus, config.exc.lif.v_rest_mv,
        config.exc.lif.v_reset_mv, config.exc.lif.v_thresh_mv, config.exc.lif.tc_decay_ms,
        config.exc.lif.refrac_ms, config.exc.theta_plus_mv, config.exc.tc_theta_decay_ms,
        config.inh.v_rest_mv, config.inh.v_reset_mv, config.inh.v_thresh_mv,
        config.inh.tc_decay_ms, config.inh.refrac_ms, encode.duration_ms, encode.dt_ms,
        encode.max_rate_hz);
    return fnv1a(buf);
}

}  // namespace snnfaultlab::snn

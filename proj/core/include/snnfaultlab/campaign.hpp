#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "snnfaultlab/fault.hpp"
#include "snnfaultlab/snn.hpp"

namespace snnfaultlab::campaign {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Full campaign description, loaded from the sectioned key-value config
// format. Unknown keys are rejected.
struct CampaignConfig {
    std::string train_images, train_labels, test_images, test_labels;
    snn::NetworkConfig network;
    snn::EncodeParams encode;
    fault::SweepGrid grid;
    std::vector<std::uint64_t> seeds = {1};
    std::size_t train_size = 1000;
    std::size_t eval_size = 1000;
    std::string out_dir = ".";
    // Detector settings.
    circuit::NeuronKind detect_neuron_kind = circuit::NeuronKind::AxonHillock;
    double detect_window_ms = 100.0;
    std::vector<double> detect_v_dds = {0.8, 1.0, 1.2};
    double detect_threshold_frac = 0.10;
};

// Parse/serialize. Dataset paths fall back to $SNN_FAULTLAB_DATA when a
// [dataset] key is absent; load_config validates that the files exist.
CampaignConfig parse_config(const std::string& text);
CampaignConfig load_config(const std::string& path);
std::string dump_config(const CampaignConfig& config);

struct ResultRow {
    std::string attack;    // attack kind, or "baseline"
    std::string layer;     // el, il, both, input, all, -
    double delta = 0.0;
    double v_dd = 1.0;
    double fraction = 0.0;
    std::string defenses;  // "none" or '+'-joined defense names
    std::uint64_t seed = 0;
    double accuracy = 0.0;
    double baseline = 0.0;
    double relative_degradation = 0.0;
};

std::string to_csv(const std::vector<ResultRow>& rows);
void write_csv(const std::vector<ResultRow>& rows, const std::string& path);
std::vector<ResultRow> parse_csv(const std::string& text);

// Binary model snapshot: magic "SNFL", u16 version, little-endian payload,
// trailing 64-bit FNV-1a checksum.
void save_model(const snn::TrainedModel& model, const std::string& path);
snn::TrainedModel load_model(const std::string& path);

// Train a baseline per seed, then evaluate every sweep point. Baseline rows
// carry identity-plan coordinates. Points run on a worker pool; rows come
// back in sweep order regardless of completion order.
std::vector<ResultRow> run_campaign(const CampaignConfig& config, int n_workers = 0);

// Train one baseline model for a seed (no attack).
snn::TrainedModel train_baseline(const CampaignConfig& config, std::uint64_t seed);

// The deterministic per-seed training and held-out evaluation subsets used
// by run_campaign.
std::pair<mnist::ImageSet, mnist::LabelSet> train_subset(const CampaignConfig& config,
                                                         std::uint64_t seed);
std::pair<mnist::ImageSet, mnist::LabelSet> eval_subset(const CampaignConfig& config,
                                                        std::uint64_t seed);

struct DetectorRow {
    std::string layer;
    double v_dd = 1.0;
    long long observed = 0;
    long long baseline = 0;
    double deviation = 0.0;
    bool flagged = false;
};

// Dummy-neuron detector sweep over the configured v_dd list, one row per
// monitored layer per voltage.
std::vector<DetectorRow> detect_report(const CampaignConfig& config);

}  // namespace snnfaultlab::campaign

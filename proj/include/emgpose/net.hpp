#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "emgpose/hand_model.hpp"

namespace emgpose {

// EMG window: (8 x T) of normalized samples in [-1, 1].
using EmgWindow = Eigen::MatrixXd;

struct ModelConfig {
    int in_channels = 8;
    int conv_mid_channels = 16;
    int feat_channels = 32;
    int conv_kernel = 5;
    std::array<int, 2> conv_strides = {2, 2};
    int tds_stages = 2;
    int tds_kernel = 5;
    int tds_groups = 8;   // feat_channels = groups * sub-channels
    int ff_hidden = 128;
    int lstm_hidden = 64;
    int mlp_hidden = 64;
    int out_dof = kNumJoints;
    int chunk_len = 400;  // T*, the trained window length
    JointVector limit_lo;  // integration clamp box
    JointVector limit_hi;

    ModelConfig();  // limits default to the canonical hand's

    // Decoder LSTM input: encoder features plus the fed-back previous pose.
    int lstm_input() const { return feat_channels + out_dof; }
    int min_input_len() const { return 4 * conv_kernel; }
    void validate() const;
    bool operator==(const ModelConfig&) const = default;
};

// Feature map (channels x time). time_scale = input samples per step.
struct FeatureSeq {
    Eigen::MatrixXd values;
    int time_scale = 1;
};

struct ConvBlockParams {
    Eigen::MatrixXd w;  // out_c x (in_c * kernel), column index c*kernel + k
    Eigen::VectorXd b;
    Eigen::VectorXd ln_gain, ln_bias;
};

struct TdsStageParams {
    Eigen::MatrixXd conv_w;  // groups x (groups * kernel)
    Eigen::VectorXd conv_b;
    Eigen::VectorXd ln1_gain, ln1_bias;  // over feat_channels
    Eigen::MatrixXd ff1_w;               // ff_hidden x feat_channels
    Eigen::VectorXd ff1_b;
    Eigen::MatrixXd ff2_w;               // feat_channels x ff_hidden
    Eigen::VectorXd ff2_b;
    Eigen::VectorXd ln2_gain, ln2_bias;
};

struct LstmParams {
    Eigen::MatrixXd w_ih;  // 4H x lstm_input, gate order i, f, g, o
    Eigen::MatrixXd w_hh;  // 4H x H
    Eigen::VectorXd b_ih, b_hh;
};

struct NetworkParams {
    ModelConfig config;
    ConvBlockParams conv1, conv2;
    std::vector<TdsStageParams> tds;
    LstmParams lstm;
    Eigen::MatrixXd mlp1_w;  // mlp_hidden x H
    Eigen::VectorXd mlp1_b;
    Eigen::MatrixXd mlp2_w;  // out_dof x mlp_hidden
    Eigen::VectorXd mlp2_b;
    JointVector rest_pose;   // theta_0

    static NetworkParams zeros(const ModelConfig& cfg);
    static NetworkParams random(const ModelConfig& cfg, std::uint64_t seed);
};

// All parameter arrays in their declared (= serialized) order.
std::vector<std::pair<double*, std::size_t>> param_spans(NetworkParams& p);
std::vector<std::pair<const double*, std::size_t>> param_spans(const NetworkParams& p);
std::size_t param_count(const NetworkParams& p);

struct DecoderState {
    Eigen::VectorXd h, c;  // LSTM hidden / cell
    HandPose last_pose;    // theta_{t-1} carried across chunks
};

// Fresh state: zero LSTM state, last_pose = rest pose.
DecoderState initial_state(const NetworkParams& params);

struct DecoderOutput {
    Eigen::MatrixXd poses;       // out_dof x n
    Eigen::MatrixXd velocities;  // out_dof x n
    DecoderState state;
};

FeatureSeq encoder_forward(const NetworkParams& params, const EmgWindow& emg);
FeatureSeq tds_stage_forward(const ModelConfig& cfg, const TdsStageParams& stage,
                             const FeatureSeq& x);
FeatureSeq resample_linear(const FeatureSeq& x, int target_len);

// Integrates predicted joint velocities: poses[t] = clamp(poses[t-1] + v[t]),
// starting from state.last_pose. `clamp_poses` off disables the limit box.
DecoderOutput decoder_forward(const NetworkParams& params, const FeatureSeq& feats,
                              const DecoderState& state, bool clamp_poses = true);

struct ForwardResult {
    Eigen::MatrixXd chunk;  // out_dof x emit_len
    DecoderState state;
};

// encoder -> resample(T) -> decoder over the last emit_len positions.
// emit_len <= 0 means the full chunk (T* = T).
ForwardResult model_forward(const NetworkParams& params, const EmgWindow& emg,
                            const DecoderState& state, int emit_len = -1,
                            bool clamp_poses = true);

// One training sample: a window of EMG with pose labels on the same timeline
// and the anchor pose just before the window.
struct WindowSample {
    Eigen::MatrixXd emg;       // 8 x W
    Eigen::MatrixXd theta_gt;  // 22 x W
    JointVector theta0;
};

struct LossResult {
    double loss = 0.0;
    NetworkParams grads;
};

// Velocity MSE + lambda * pose MSE, averaged over the batch; reverse-mode
// gradients for every parameter array. `clamp_poses` off keeps the loss
// surface smooth (used by the finite-difference gate).
LossResult loss_and_grad(const NetworkParams& params, const std::vector<WindowSample>& batch,
                         double lambda = 1.0, bool clamp_poses = true);

double loss_only(const NetworkParams& params, const std::vector<WindowSample>& batch,
                 double lambda = 1.0, bool clamp_poses = true);

struct OptimizerConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int batch_size = 16;
    int epochs = 10;
    double clip_norm = 5.0;
    double lambda = 1.0;          // pose-term weight in the loss
    double anchor_jitter = 0.0;   // stddev of training-time theta0 noise, radians
    std::uint64_t seed = 0;
    bool train_rest_pose = false;
    bool verbose = false;
};

struct TrainReport {
    std::vector<double> train_loss;  // per epoch
    std::vector<double> val_loss;
};

// Adam with seeded shuffling and fixed-order accumulation; deterministic for
// a given seed. Throws training_error on divergence (loss > 1e6).
TrainReport train(NetworkParams& params, const std::vector<WindowSample>& train_set,
                  const std::vector<WindowSample>& val_set, const OptimizerConfig& opt);

// emgpose-net/1 container: header (magic, version, config) followed by
// little-endian float64 arrays in declared order.
void save_params(const NetworkParams& params, const std::string& path);
NetworkParams load_params(const std::string& path);

}  // namespace emgpose

#pragma once

// Forward caches shared between the forward pass and the hand-written
// backward pass. Not part of the public API.

#include <Eigen/Core>
#include <vector>

#include "emgpose/net.hpp"

namespace emgpose::detail {

inline constexpr double kLnEps = 1e-5;

struct ConvCache {
    Eigen::MatrixXd cols;     // im2col, (in_c * k) x T_out
    Eigen::MatrixXd y;        // pre-ReLU conv output
    Eigen::MatrixXd n;        // layer-normalized activations (pre gain/bias)
    Eigen::VectorXd inv_std;  // per time step
    int t_in = 0;
};

struct TdsCache {
    Eigen::MatrixXd x;                  // stage input
    std::vector<Eigen::MatrixXd> cols;  // per sub-channel im2col, (G*k) x L
    Eigen::MatrixXd ypre;               // pre-ReLU conv output, feat x L
    Eigen::MatrixXd n1;
    Eigen::VectorXd inv1;
    Eigen::MatrixXd v;   // post-LN1 (feedforward input)
    Eigen::MatrixXd f1;  // pre-ReLU hidden
    Eigen::MatrixXd hr;  // ReLU(f1)
    Eigen::MatrixXd n2;
    Eigen::VectorXd inv2;
};

struct EncoderCache {
    ConvCache c1, c2;
    std::vector<TdsCache> tds;
};

struct ResampleCache {
    int in_len = 0;
    std::vector<int> i0;
    std::vector<double> alpha;
};

struct DecoderCache {
    Eigen::MatrixXd x;                   // LSTM inputs, lstm_input x n
    Eigen::MatrixXd gi, gf, gg, go;      // gate activations, H x n
    Eigen::MatrixXd c, tanh_c, h;        // H x n
    Eigen::MatrixXd f1m, m;              // MLP hidden pre/post ReLU
    Eigen::MatrixXd clamp_pass;          // 1 where the limit clamp let dtheta through
    Eigen::VectorXd h0, c0;
    JointVector theta_prev0;
};

FeatureSeq encoder_forward_cached(const NetworkParams& params, const EmgWindow& emg,
                                  EncoderCache& cache);
FeatureSeq tds_stage_forward_cached(const ModelConfig& cfg, const TdsStageParams& stage,
                                    const FeatureSeq& x, TdsCache& cache);
FeatureSeq resample_linear_cached(const FeatureSeq& x, int target_len, ResampleCache& cache);
DecoderOutput decoder_forward_cached(const NetworkParams& params, const FeatureSeq& feats,
                                     const DecoderState& state, bool clamp_poses,
                                     DecoderCache& cache);

// Backward passes. Each accumulates parameter gradients into `grads` and
// returns the gradient w.r.t. its input.
Eigen::MatrixXd decoder_backward(const NetworkParams& params, const DecoderCache& cache,
                                 const Eigen::MatrixXd& d_vel, const Eigen::MatrixXd& d_poses,
                                 NetworkParams& grads);
Eigen::MatrixXd resample_backward(const ResampleCache& cache, const Eigen::MatrixXd& d_out);
Eigen::MatrixXd encoder_backward(const NetworkParams& params, const EmgWindow& emg,
                                 const EncoderCache& cache, const Eigen::MatrixXd& d_feat,
                                 NetworkParams& grads);

}  // namespace emgpose::detail

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <vector>

#include "emgpose/net.hpp"

namespace emgpose {

struct StreamConfig {
    int window = 400;    // W, must match the network's trained window
    int execute = 20;    // E, frames emitted per inference
    bool realtime = false;
    double rate_hz = 500.0;

    void validate() const;
};

struct WristPose {
    Vec3 position = Vec3::Zero();              // meters
    Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();
};

// delta = prev^-1 o curr, expressed in the prev frame. Composing prev o delta
// reproduces curr.
WristPose wrist_increment(const WristPose& prev, const WristPose& curr);
WristPose wrist_compose(const WristPose& base, const WristPose& delta);

struct LatencyStats {
    std::int64_t chunks = 0;
    double min_us = 0.0;
    double mean_us = 0.0;
    double p95_us = 0.0;
    double max_us = 0.0;
    // Mean sample-to-command delay: buffering of the emitted frames plus the
    // inference itself.
    double end_to_end_us = 0.0;
    std::int64_t deadline_misses = 0;  // realtime mode only

    bool empty() const { return chunks == 0; }
};

// Sliding-window inference engine. Buffers normalized EMG samples; once W are
// buffered and E new ones arrived since the last inference, runs the model on
// the latest W samples and emits the E chunk frames aligned to the newest E
// inputs, carrying the decoder state (LSTM state and last emitted pose)
// forward. Emission is warm-up gated: nothing comes out before W samples.
class StreamEngine {
public:
    StreamEngine(NetworkParams params, const StreamConfig& cfg);

    // Feeds n samples (8 x n); returns every pose emitted during this push
    // (22 x m). Output is identical regardless of push granularity.
    Eigen::MatrixXd push_samples(const Eigen::Ref<const Eigen::MatrixXd>& samples);

    LatencyStats latency_stats() const;
    std::int64_t samples_seen() const { return total_; }
    std::int64_t poses_emitted() const { return emitted_; }
    const DecoderState& decoder_state() const { return state_; }
    void reset();

private:
    void infer_into(std::vector<Eigen::MatrixXd>& chunks);

    NetworkParams params_;
    StreamConfig cfg_;
    Eigen::MatrixXd ring_;  // 8 x W, column total_ % W is the newest sample
    std::int64_t total_ = 0;
    std::int64_t since_last_ = 0;
    std::int64_t emitted_ = 0;
    DecoderState state_;
    std::vector<double> chunk_us_;
};

}  // namespace emgpose

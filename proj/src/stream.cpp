#include "emgpose/stream.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace emgpose {

void StreamConfig::validate() const {
    if (execute < 1 || execute > window)
        throw validation_error("stream: execute must satisfy 1 <= E <= W");
    if (window % 4 != 0) throw validation_error("stream: window must be divisible by 4");
    if (!(rate_hz > 0.0)) throw validation_error("stream: rate must be positive");
}

namespace {

void check_unit(const Eigen::Quaterniond& q, const char* who) {
    if (std::abs(q.norm() - 1.0) > 1e-9)
        throw validation_error(std::string("wrist_increment: ") + who +
                               " quaternion is not unit length");
}

}  // namespace

WristPose wrist_increment(const WristPose& prev, const WristPose& curr) {
    check_unit(prev.orientation, "prev");
    check_unit(curr.orientation, "curr");
    WristPose delta;
    const Eigen::Quaterniond inv = prev.orientation.conjugate();
    delta.orientation = inv * curr.orientation;
    delta.position = inv * (curr.position - prev.position);
    return delta;
}

WristPose wrist_compose(const WristPose& base, const WristPose& delta) {
    check_unit(base.orientation, "base");
    check_unit(delta.orientation, "delta");
    WristPose out;
    out.orientation = base.orientation * delta.orientation;
    out.position = base.position + base.orientation * delta.position;
    return out;
}

StreamEngine::StreamEngine(NetworkParams params, const StreamConfig& cfg)
    : params_(std::move(params)), cfg_(cfg) {
    cfg_.validate();
    params_.config.validate();
    if (cfg_.window < params_.config.min_input_len())
        throw validation_error("stream: window shorter than the network's receptive field");
    ring_.setZero(params_.config.in_channels, cfg_.window);
    state_ = initial_state(params_);
}

void StreamEngine::reset() {
    ring_.setZero();
    total_ = 0;
    since_last_ = 0;
    emitted_ = 0;
    state_ = initial_state(params_);
    chunk_us_.clear();
}

void StreamEngine::infer_into(std::vector<Eigen::MatrixXd>& chunks) {
    const int w = cfg_.window;
    Eigen::MatrixXd win(params_.config.in_channels, w);
    for (int i = 0; i < w; ++i)
        win.col(i) = ring_.col(static_cast<Eigen::Index>((total_ - w + i) % w));

    const auto t0 = std::chrono::steady_clock::now();
    ForwardResult res = model_forward(params_, win, state_, cfg_.execute);
    const auto t1 = std::chrono::steady_clock::now();
    chunk_us_.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());

    state_ = std::move(res.state);
    emitted_ += res.chunk.cols();
    chunks.push_back(std::move(res.chunk));
    since_last_ = 0;
}

Eigen::MatrixXd StreamEngine::push_samples(const Eigen::Ref<const Eigen::MatrixXd>& samples) {
    if (ring_.size() == 0) throw state_error("stream: engine not initialized");
    if (samples.rows() != params_.config.in_channels)
        throw validation_error("stream: expected 8-channel samples");
    if (!samples.allFinite()) throw validation_error("stream: non-finite samples");

    std::vector<Eigen::MatrixXd> chunks;
    for (Eigen::Index i = 0; i < samples.cols(); ++i) {
        ring_.col(static_cast<Eigen::Index>(total_ % cfg_.window)) = samples.col(i);
        ++total_;
        ++since_last_;
        if (total_ >= cfg_.window && since_last_ >= cfg_.execute) infer_into(chunks);
    }

    Eigen::Index m = 0;
    for (const auto& c : chunks) m += c.cols();
    Eigen::MatrixXd out(params_.config.out_dof, m);
    Eigen::Index at = 0;
    for (const auto& c : chunks) {
        out.middleCols(at, c.cols()) = c;
        at += c.cols();
    }
    return out;
}

LatencyStats StreamEngine::latency_stats() const {
    LatencyStats s;
    s.chunks = static_cast<std::int64_t>(chunk_us_.size());
    if (chunk_us_.empty()) return s;

    std::vector<double> sorted = chunk_us_;
    std::sort(sorted.begin(), sorted.end());
    s.min_us = sorted.front();
    s.max_us = sorted.back();
    double sum = 0.0;
    for (double v : sorted) sum += v;
    s.mean_us = sum / double(sorted.size());
    const size_t rank =
        std::min(sorted.size() - 1, static_cast<size_t>(std::ceil(0.95 * double(sorted.size()))) - 1);
    s.p95_us = sorted[std::max<size_t>(rank, 0)];

    // Emitted frames wait 0..(E-1) sample periods before the inference runs.
    const double period_us = 1e6 / cfg_.rate_hz;
    s.end_to_end_us = s.mean_us + 0.5 * double(cfg_.execute - 1) * period_us;

    if (cfg_.realtime) {
        const double deadline_us = double(cfg_.execute) * period_us;
        for (double v : chunk_us_)
            if (v > deadline_us) ++s.deadline_misses;
    }
    return s;
}

}  // namespace emgpose

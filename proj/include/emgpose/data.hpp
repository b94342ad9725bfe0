#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "emgpose/hand_model.hpp"
#include "emgpose/net.hpp"

namespace emgpose {

// Raw paired capture: EMG on its own clock, poses on theirs.
struct Recording {
    double emg_rate = 500.0;   // Hz
    double pose_rate = 120.0;  // Hz
    std::vector<std::int64_t> emg_t_us;
    Eigen::MatrixXd emg;  // 8 x N_e, normalized to [-1, 1]
    std::vector<std::int64_t> pose_t_us;
    Eigen::MatrixXd poses;  // 22 x N_p, radians
    std::string subject, session, task;

    void validate() const;  // throws validation_error
};

// Poses interpolated onto the EMG timeline.
struct SyncedRecording {
    double emg_rate = 500.0;
    std::vector<std::int64_t> t_us;
    Eigen::MatrixXd emg;    // 8 x M
    Eigen::MatrixXd poses;  // 22 x M
    int truncated_samples = 0;  // EMG samples dropped outside the pose span
    std::string subject, session, task;
};

SyncedRecording synchronize(const Recording& rec);

// Sliding windows of length `window`, advancing by `stride`. theta0 of window
// k is the pose at sample k*stride - 1 (rest_pose for the first window).
std::vector<WindowSample> make_windows(const SyncedRecording& rec, int window, int stride,
                                       const JointVector& rest_pose);

// v[0] = theta[0] - theta0, v[t] = theta[t] - theta[t-1].
Eigen::MatrixXd velocity_labels(const Eigen::MatrixXd& theta_gt, const JointVector& theta0);

// Synthetic muscle-synergy generator: a low-dimensional activation drives both
// the pose (theta = clamp(theta_mid + S a)) and the EMG envelopes
// (channel c ~ envelope(sum_k |W_ck| |a_k'|) x band-limited carrier + noise).
struct SynthConfig {
    std::uint64_t seed = 0;
    int n_synergies = 6;
    Eigen::MatrixXd synergy_to_pose;  // 22 x K; empty = seeded random
    Eigen::MatrixXd synergy_to_emg;   // 8 x K; empty = seeded random
    double carrier_lo_hz = 20.0;
    double carrier_hi_hz = 150.0;
    double noise_snr_db = 20.0;
    double duration_s = 60.0;
    double emg_rate = 500.0;
    double pose_rate = 120.0;
    double activation_amplitude = 1.0;  // 0 freezes the hand at the mid pose
    double pose_range_fraction = 0.25;  // per-joint stddev as a fraction of half-range
    std::string task = "synth";

    void validate() const;
};

// Deterministic for a given config. Generated poses are limit-clamped and
// projected to the collision-free manifold of `hand`.
Recording gen_synth(const SynthConfig& cfg, const KinematicModel& hand);

// emgpose-rec/1 binary container (.eprc).
void save_recording(const Recording& rec, const std::string& path);
Recording load_recording(const std::string& path);

// JSONL mirror: one record per line {"t_us":..., "emg":[8]?, "pose":[22]?},
// preceded by a header line carrying rates and labels.
void save_recording_jsonl(const Recording& rec, const std::string& path);
Recording load_recording_jsonl(const std::string& path);

}  // namespace emgpose

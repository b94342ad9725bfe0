#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "emgpose/hand_model.hpp"

namespace emgpose {

struct RetargetConfig {
    Eigen::VectorXd weights;        // per-correspondence-keypoint; empty = defaults
    int max_iters = 50;
    double tol_step = 1e-5;         // radians, infinity norm
    double tol_residual = 1e-4;     // meters, weighted RMS
    double damping = 1e-3;          // initial Levenberg parameter (0 = pure Gauss-Newton)
    double fd_step = 1e-6;          // radians, Jacobian central difference
    std::vector<int> active_joints; // empty = all 22; others held at q_init
    bool apply_safety_clamp = true; // project result onto the collision-free manifold

    void validate() const;
};

struct RetargetResult {
    HandPose pose;
    double residual = 0.0;   // weighted RMS keypoint distance, meters
    int iterations = 0;
    bool clamped = false;    // safety clamp engaged
    bool converged = false;
};

// Default weights for a correspondence set: fingertips 1.0, palm center 0.5.
Eigen::VectorXd default_weights(const KinematicModel& model);

// Solves min_q sum_i w_i |p_i^h - p_i^r(q)|^2 over the correspondence set by
// Levenberg-Marquardt with finite-difference Jacobians. Iterates are clamped
// to joint limits; the final pose is projected to the safe manifold unless
// config.apply_safety_clamp is off.
RetargetResult retarget_pose(const KinematicModel& model, const KeypointSet& human_keypoints,
                             const RetargetConfig& config, const HandPose& q_init);

// Largest collision-free pose along the segment q_prev_safe -> q_star, to an
// angular resolution of 1e-4 rad. Throws state_error if q_prev_safe itself is
// in collision.
HandPose clamp_to_safe_manifold(const KinematicModel& model, const HandPose& q_star,
                                const HandPose& q_prev_safe);

// Rigidly aligns raw human keypoints to the hand-base convention: wrist at the
// origin, palm normal +z, wrist->INDEX_CMC along +x, uniformly scaled so the
// palm width (INDEX_CMC to PINKY_CMC) matches `robot_palm_width`. Requires
// WRIST, INDEX_CMC and PINKY_CMC labels.
KeypointSet normalize_human_frame(const KeypointSet& raw, double robot_palm_width);

}  // namespace emgpose

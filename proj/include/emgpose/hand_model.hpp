#pragma once

#include <Eigen/Core>
#include <array>
#include <string>
#include <vector>

#include "emgpose/error.hpp"

namespace emgpose {

inline constexpr int kNumJoints = 22;
inline constexpr int kNumKeypoints = 35;
// Index of the derived palm-center point (centroid of the four finger CMC
// keypoints). Valid inside a correspondence set but not part of the 35
// physical keypoint frames.
inline constexpr int kPalmCenterIndex = 35;

using JointVector = Eigen::Matrix<double, kNumJoints, 1>;
using Vec3 = Eigen::Vector3d;

struct HandPose {
    JointVector angles = JointVector::Zero();  // radians

    HandPose() = default;
    explicit HandPose(const JointVector& a) : angles(a) {}
    bool finite() const { return angles.allFinite(); }
};

// One revolute joint. Frames carry no fixed rotation: the rest layout of the
// hand is the composition of origin offsets.
struct JointSpec {
    std::string name;
    Vec3 axis = Vec3::UnitY();     // unit, in the parent link frame
    int parent_link = -1;          // -1 = hand base, otherwise a joint index < this one
    Vec3 origin_offset = Vec3::Zero();  // meters, in parent link frame
    double limit_lo = 0.0;         // radians
    double limit_hi = 0.0;
};

// Capsule attached to a link (-1 = base). Endpoints in the link frame.
struct Capsule {
    std::string name;
    int link = -1;
    Vec3 p0 = Vec3::Zero();
    Vec3 p1 = Vec3::Zero();
    double radius = 0.0;  // meters
};

// Named point rigidly attached to a link (-1 = base).
struct KeypointFrame {
    std::string name;
    int link = -1;
    Vec3 offset = Vec3::Zero();
};

struct KinematicModel {
    std::vector<JointSpec> joints;            // exactly 22, topologically ordered
    std::vector<std::vector<int>> fingers;    // 5 serial chains of joint indices
    std::vector<Capsule> capsules;
    std::vector<KeypointFrame> keypoint_frames;  // exactly 35
    std::vector<int> correspondence_set;     // keypoint indices (may include kPalmCenterIndex)
    std::vector<std::pair<int, int>> collision_skip;  // capsule index pairs never checked
    double collision_margin = 0.002;         // meters

    // Derived at load/build time.
    std::vector<std::pair<int, int>> collision_pairs;  // capsule pairs that are checked
    double palm_width = 0.0;  // |INDEX_CMC - PINKY_CMC| at rest

    int joint_index(const std::string& name) const;      // -1 if unknown
    int keypoint_index(const std::string& name) const;   // -1 if unknown
    JointVector limits_lo() const;
    JointVector limits_hi() const;
    JointVector mid_pose() const;  // midpoint of the limit box

    // Validates invariants and (re)computes derived fields. Throws
    // validation_error on a malformed model.
    void finalize();
};

struct KeypointSet {
    Eigen::Matrix3Xd points;  // meters, hand-base frame
    std::vector<std::string> labels;

    Eigen::Index size() const { return points.cols(); }
};

struct CollisionResult {
    bool free = true;            // min_clearance >= margin over all checked pairs
    double min_clearance = 0.0;  // meters; distance between capsule surfaces
    int pair_a = -1;             // capsule indices of the tightest pair
    int pair_b = -1;
};

// The canonical 22-DOF / 35-keypoint hand used throughout. A stand-in with
// plausible segment lengths; the real robot's dimensions are unpublished.
KinematicModel make_canonical_hand();

// emgpose-hand/1 JSON schema.
KinematicModel model_from_json(const std::string& json_text);
std::string model_to_json(const KinematicModel& model);
KinematicModel load_model(const std::string& path);
void save_model(const KinematicModel& model, const std::string& path);

// Forward kinematics: world transforms of every link, as 3x4 [R|t] blocks.
void fk_link_transforms(const KinematicModel& model, const HandPose& pose,
                        std::vector<Eigen::Matrix<double, 3, 4>>& out);

// Positions of the 35 keypoint frames.
KeypointSet fk_keypoints(const KinematicModel& model, const HandPose& pose);

// Positions of the correspondence-set keypoints (palm center materialized
// when the set references it).
KeypointSet fk_correspondence(const KinematicModel& model, const HandPose& pose);

HandPose clamp_limits(const KinematicModel& model, const HandPose& pose);
bool within_limits(const KinematicModel& model, const HandPose& pose);

CollisionResult collision_free(const KinematicModel& model, const HandPose& pose);

}  // namespace emgpose

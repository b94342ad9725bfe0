#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Geometry>
#include <cstring>
#include <random>

#include "emgpose/hand_model.hpp"
#include "emgpose/retarget.hpp"

using namespace emgpose;

namespace {

// Independent FK oracle: walk the chain with full 4x4 homogeneous transforms.
Eigen::Matrix3Xd fk_oracle(const KinematicModel& m, const HandPose& pose) {
    std::vector<Eigen::Matrix4d> tf(m.joints.size());
    for (size_t i = 0; i < m.joints.size(); ++i) {
        const JointSpec& j = m.joints[i];
        Eigen::Matrix4d local = Eigen::Matrix4d::Identity();
        local.block<3, 3>(0, 0) =
            Eigen::AngleAxisd(pose.angles[static_cast<int>(i)], j.axis).toRotationMatrix();
        local.block<3, 1>(0, 3) = j.origin_offset;
        tf[i] = (j.parent_link >= 0 ? tf[static_cast<size_t>(j.parent_link)]
                                    : Eigen::Matrix4d::Identity()) *
                local;
    }
    Eigen::Matrix3Xd out(3, static_cast<Eigen::Index>(m.keypoint_frames.size()));
    for (size_t i = 0; i < m.keypoint_frames.size(); ++i) {
        const auto& kf = m.keypoint_frames[i];
        Eigen::Vector4d h;
        h << kf.offset, 1.0;
        const Eigen::Vector4d w =
            (kf.link >= 0 ? tf[static_cast<size_t>(kf.link)] : Eigen::Matrix4d::Identity()) * h;
        out.col(static_cast<Eigen::Index>(i)) = w.head<3>();
    }
    return out;
}

// Dense-sampling capsule distance oracle: coarse 50x50 point grid per segment
// pair, refined twice around the best cell. Independent of the production
// segment-segment routine.
double sampled_segment_distance(const Vec3& a0, const Vec3& a1, const Vec3& b0, const Vec3& b1) {
    constexpr int n = 50;
    double lo_s = 0.0, hi_s = 1.0, lo_t = 0.0, hi_t = 1.0;
    double best = std::numeric_limits<double>::infinity();
    double best_s = 0.0, best_t = 0.0;
    for (int level = 0; level < 3; ++level) {
        for (int i = 0; i < n; ++i) {
            const double s = lo_s + (hi_s - lo_s) * double(i) / double(n - 1);
            const Vec3 pa = a0 + s * (a1 - a0);
            for (int j = 0; j < n; ++j) {
                const double t = lo_t + (hi_t - lo_t) * double(j) / double(n - 1);
                const double d2 = (pa - (b0 + t * (b1 - b0))).squaredNorm();
                if (d2 < best) {
                    best = d2;
                    best_s = s;
                    best_t = t;
                }
            }
        }
        const double step_s = (hi_s - lo_s) / double(n - 1);
        const double step_t = (hi_t - lo_t) / double(n - 1);
        lo_s = std::max(0.0, best_s - step_s);
        hi_s = std::min(1.0, best_s + step_s);
        lo_t = std::max(0.0, best_t - step_t);
        hi_t = std::min(1.0, best_t + step_t);
    }
    return std::sqrt(best);
}

double oracle_min_clearance(const KinematicModel& m, const HandPose& pose) {
    std::vector<Eigen::Matrix<double, 3, 4>> tf;
    fk_link_transforms(m, pose, tf);
    auto world = [&](int link, const Vec3& p) -> Vec3 {
        if (link < 0) return p;
        return tf[static_cast<size_t>(link)].leftCols<3>() * p + tf[static_cast<size_t>(link)].col(3);
    };
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [a, b] : m.collision_pairs) {
        const auto& ca = m.capsules[static_cast<size_t>(a)];
        const auto& cb = m.capsules[static_cast<size_t>(b)];
        const double d =
            sampled_segment_distance(world(ca.link, ca.p0), world(ca.link, ca.p1),
                                     world(cb.link, cb.p0), world(cb.link, cb.p1));
        best = std::min(best, d - ca.radius - cb.radius);
    }
    return best;
}

JointVector random_pose_in_limits(const KinematicModel& m, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    JointVector q;
    for (int j = 0; j < kNumJoints; ++j)
        q[j] = m.joints[j].limit_lo + u(rng) * (m.joints[j].limit_hi - m.joints[j].limit_lo);
    return q;
}

}  // namespace

TEST_CASE("canonical model shape and invariants") {
    const KinematicModel m = make_canonical_hand();
    CHECK(m.joints.size() == 22);
    CHECK(m.keypoint_frames.size() == 35);
    CHECK(m.fingers.size() == 5);
    CHECK(!m.correspondence_set.empty());
    for (const auto& c : m.capsules) CHECK(c.radius > 0.0);
    for (const auto& j : m.joints) {
        CHECK(j.limit_lo < j.limit_hi);
        CHECK(std::abs(j.axis.norm() - 1.0) < 1e-9);
    }
    CHECK(m.joint_index("THUMB_CMC_FE") == 0);
    CHECK(m.joint_index("INDEX_MCP_FE") >= 0);
    CHECK(m.palm_width > 0.03);
}

TEST_CASE("fk at zero pose composes origin offsets") {
    const KinematicModel m = make_canonical_hand();
    const KeypointSet kp = fk_keypoints(m, HandPose{});
    // Rest layout computed by plain offset accumulation.
    std::vector<Vec3> link_pos(m.joints.size());
    for (size_t i = 0; i < m.joints.size(); ++i) {
        const auto& j = m.joints[i];
        link_pos[i] = (j.parent_link >= 0 ? link_pos[static_cast<size_t>(j.parent_link)]
                                          : Vec3::Zero()) +
                      j.origin_offset;
    }
    for (size_t i = 0; i < m.keypoint_frames.size(); ++i) {
        const auto& kf = m.keypoint_frames[i];
        const Vec3 expected =
            (kf.link >= 0 ? link_pos[static_cast<size_t>(kf.link)] : Vec3::Zero()) + kf.offset;
        CHECK((kp.points.col(static_cast<Eigen::Index>(i)) - expected).norm() < 1e-15);
    }
}

TEST_CASE("single-joint rotation moves only distal keypoints") {
    const KinematicModel m = make_canonical_hand();
    const int joint = m.joint_index("INDEX_MCP_FE");
    REQUIRE(joint >= 0);
    const KeypointSet rest = fk_keypoints(m, HandPose{});
    HandPose pose;
    pose.angles[joint] = M_PI_2;
    const KeypointSet bent = fk_keypoints(m, pose);

    auto is_descendant = [&](int link) {
        while (link >= 0) {
            if (link == joint) return true;
            link = m.joints[static_cast<size_t>(link)].parent_link;
        }
        return false;
    };

    const Vec3 origin = rest.points.col(m.keypoint_index("INDEX_MCP"));
    const Eigen::Matrix3d rot =
        Eigen::AngleAxisd(M_PI_2, m.joints[static_cast<size_t>(joint)].axis).toRotationMatrix();
    for (size_t i = 0; i < m.keypoint_frames.size(); ++i) {
        const auto col = static_cast<Eigen::Index>(i);
        if (is_descendant(m.keypoint_frames[i].link)) {
            const Vec3 expected = origin + rot * (rest.points.col(col) - origin);
            CHECK((bent.points.col(col) - expected).norm() < 1e-12);
        } else {
            CHECK((bent.points.col(col) - rest.points.col(col)).norm() < 1e-12);
        }
    }
}

TEST_CASE("fk matches homogeneous-transform oracle on random poses") {
    const KinematicModel m = make_canonical_hand();
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 20; ++trial) {
        const HandPose q(random_pose_in_limits(m, rng));
        const KeypointSet kp = fk_keypoints(m, q);
        const Eigen::Matrix3Xd expect = fk_oracle(m, q);
        CHECK((kp.points - expect).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("fk determinism and input validation") {
    const KinematicModel m = make_canonical_hand();
    std::mt19937_64 rng(9);
    const HandPose q(random_pose_in_limits(m, rng));
    const KeypointSet a = fk_keypoints(m, q);
    const KeypointSet b = fk_keypoints(m, q);
    CHECK(std::memcmp(a.points.data(), b.points.data(),
                      sizeof(double) * static_cast<size_t>(a.points.size())) == 0);

    HandPose bad;
    bad.angles[3] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(fk_keypoints(m, bad), validation_error);
}

TEST_CASE("fk locality under per-joint perturbation") {
    const KinematicModel m = make_canonical_hand();
    std::mt19937_64 rng(11);
    const JointVector base = random_pose_in_limits(m, rng);
    const KeypointSet ref = fk_keypoints(m, HandPose(base));
    for (int j = 0; j < kNumJoints; ++j) {
        JointVector q = base;
        q[j] += 0.2;
        const KeypointSet moved = fk_keypoints(m, HandPose(q));
        auto is_descendant = [&](int link) {
            while (link >= 0) {
                if (link == j) return true;
                link = m.joints[static_cast<size_t>(link)].parent_link;
            }
            return false;
        };
        for (size_t i = 0; i < m.keypoint_frames.size(); ++i)
            if (!is_descendant(m.keypoint_frames[i].link))
                CHECK((moved.points.col(static_cast<Eigen::Index>(i)) -
                       ref.points.col(static_cast<Eigen::Index>(i)))
                          .norm() < 1e-12);
    }
}

TEST_CASE("fk finite-difference jacobian is stable across step sizes") {
    const KinematicModel m = make_canonical_hand();
    std::mt19937_64 rng(13);
    const JointVector base = random_pose_in_limits(m, rng);
    auto jac = [&](double h) {
        Eigen::MatrixXd out(3 * 35, kNumJoints);
        for (int j = 0; j < kNumJoints; ++j) {
            JointVector qp = base, qm = base;
            qp[j] += h;
            qm[j] -= h;
            const KeypointSet hi = fk_keypoints(m, HandPose(qp));
            const KeypointSet lo = fk_keypoints(m, HandPose(qm));
            Eigen::MatrixXd diff = (hi.points - lo.points) / (2.0 * h);
            out.col(j) = Eigen::Map<Eigen::VectorXd>(diff.data(), diff.size());
        }
        return out;
    };
    const Eigen::MatrixXd j6 = jac(1e-6), j5 = jac(1e-5);
    const double denom = std::max(j6.norm(), 1e-12);
    CHECK((j6 - j5).norm() / denom < 1e-4);
}

TEST_CASE("clamp_limits saturates and is idempotent") {
    const KinematicModel m = make_canonical_hand();
    const HandPose inside(m.mid_pose());
    CHECK(clamp_limits(m, inside).angles == inside.angles);

    HandPose over = inside;
    over.angles[5] = m.joints[5].limit_hi + 0.5;
    CHECK(clamp_limits(m, over).angles[5] == m.joints[5].limit_hi);

    HandPose under;
    under.angles.setConstant(-10.0);
    const HandPose clamped = clamp_limits(m, under);
    for (int j = 0; j < kNumJoints; ++j) CHECK(clamped.angles[j] == m.joints[j].limit_lo);
    CHECK(clamp_limits(m, clamped).angles == clamped.angles);
}

TEST_CASE("rest pose is collision-free with margin") {
    const KinematicModel m = make_canonical_hand();
    const CollisionResult rest = collision_free(m, HandPose{});
    CHECK(rest.free);
    CHECK(rest.min_clearance >= m.collision_margin);
    // The mid pose anchors the synthetic generator; it must be safe too.
    CHECK(collision_free(m, HandPose(m.mid_pose())).free);
}

TEST_CASE("retargeting both fingertips to one point produces a detected collision") {
    KinematicModel m = make_canonical_hand();
    m.correspondence_set = {m.keypoint_index("THUMB_TIP"), m.keypoint_index("INDEX_TIP")};
    m.finalize();

    const KeypointSet rest = fk_keypoints(m, HandPose{});
    const Vec3 target = 0.5 * (rest.points.col(m.keypoint_index("THUMB_TIP")) +
                               rest.points.col(m.keypoint_index("INDEX_TIP")));
    KeypointSet targets;
    targets.points.resize(3, 2);
    targets.points.col(0) = target;
    targets.points.col(1) = target;

    RetargetConfig cfg;
    cfg.apply_safety_clamp = false;  // we want the raw interpenetrating optimum
    cfg.max_iters = 80;
    const RetargetResult res = retarget_pose(m, targets, cfg, HandPose{});
    CHECK(res.residual < 0.01);

    const CollisionResult col = collision_free(m, res.pose);
    CHECK_FALSE(col.free);
    // Cross-check with the sampling oracle.
    CHECK(oracle_min_clearance(m, res.pose) < m.collision_margin);
}

TEST_CASE("collision boolean agrees with dense-sampling oracle on random poses") {
    const KinematicModel m = make_canonical_hand();
    std::mt19937_64 rng(7);
    int checked = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const HandPose q(random_pose_in_limits(m, rng));
        const CollisionResult res = collision_free(m, q);
        const double oracle = oracle_min_clearance(m, q);
        CHECK(std::abs(res.min_clearance - oracle) < 1e-6);
        if (std::abs(res.min_clearance - m.collision_margin) > 1e-6) {
            ++checked;
            CHECK(res.free == (oracle >= m.collision_margin));
        }
    }
    CHECK(checked > 900);  // the margin band is measure-tiny
}

TEST_CASE("collision check is idempotent and order-independent") {
    KinematicModel m = make_canonical_hand();
    std::mt19937_64 rng(21);
    const HandPose q(random_pose_in_limits(m, rng));
    const CollisionResult a = collision_free(m, q);
    const CollisionResult b = collision_free(m, q);
    CHECK(a.free == b.free);
    CHECK(a.min_clearance == b.min_clearance);

    std::reverse(m.collision_pairs.begin(), m.collision_pairs.end());
    const CollisionResult c = collision_free(m, q);
    CHECK(c.free == a.free);
    CHECK(c.min_clearance == doctest::Approx(a.min_clearance).epsilon(1e-15));
}

TEST_CASE("model json round trip and schema guards") {
    const KinematicModel m = make_canonical_hand();
    const std::string text = model_to_json(m);
    CHECK(text.find("emgpose-hand/1") != std::string::npos);
    const KinematicModel back = model_from_json(text);
    CHECK(back.joints.size() == m.joints.size());
    for (size_t i = 0; i < m.joints.size(); ++i) {
        CHECK(back.joints[i].name == m.joints[i].name);
        CHECK(back.joints[i].axis == m.joints[i].axis);
        CHECK(back.joints[i].origin_offset == m.joints[i].origin_offset);
        CHECK(back.joints[i].limit_lo == m.joints[i].limit_lo);
    }
    CHECK(back.capsules.size() == m.capsules.size());
    CHECK(back.correspondence_set == m.correspondence_set);
    CHECK(model_to_json(back) == text);

    CHECK_THROWS_AS(model_from_json("{\"format\":\"bogus/9\"}"), io_error);
    CHECK_THROWS_AS(model_from_json("not json"), io_error);
}

TEST_CASE("model validation rejects malformed specs") {
    KinematicModel m = make_canonical_hand();
    m.joints[0].limit_lo = m.joints[0].limit_hi;
    CHECK_THROWS_AS(m.finalize(), validation_error);

    m = make_canonical_hand();
    m.joints[4].axis *= 1.5;
    CHECK_THROWS_AS(m.finalize(), validation_error);

    m = make_canonical_hand();
    m.joints[3].parent_link = 10;  // forward reference
    CHECK_THROWS_AS(m.finalize(), validation_error);

    m = make_canonical_hand();
    m.correspondence_set.clear();
    CHECK_THROWS_AS(m.finalize(), validation_error);

    m = make_canonical_hand();
    m.capsules[2].radius = 0.0;
    CHECK_THROWS_AS(m.finalize(), validation_error);
}

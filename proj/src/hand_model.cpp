#include "emgpose/hand_model.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace emgpose {

namespace {

constexpr double kAxisUnitTol = 1e-9;

Eigen::Matrix3d axis_rotation(const Vec3& axis, double angle) {
    return Eigen::AngleAxisd(angle, axis).toRotationMatrix();
}

// Shortest distance between two segments [p0,p1] and [q0,q1].
// Standard clamped closest-point parameterization.
double segment_segment_distance(const Vec3& p0, const Vec3& p1, const Vec3& q0, const Vec3& q1) {
    const Vec3 d1 = p1 - p0;
    const Vec3 d2 = q1 - q0;
    const Vec3 r = p0 - q0;
    const double a = d1.dot(d1);
    const double e = d2.dot(d2);
    const double f = d2.dot(r);

    double s = 0.0, t = 0.0;
    constexpr double eps = 1e-18;
    if (a <= eps && e <= eps) {
        return r.norm();
    }
    if (a <= eps) {
        t = std::clamp(f / e, 0.0, 1.0);
    } else {
        const double c = d1.dot(r);
        if (e <= eps) {
            s = std::clamp(-c / a, 0.0, 1.0);
        } else {
            const double b = d1.dot(d2);
            const double denom = a * e - b * b;
            if (denom > eps) {
                s = std::clamp((b * f - c * e) / denom, 0.0, 1.0);
            }
            t = (b * s + f) / e;
            if (t < 0.0) {
                t = 0.0;
                s = std::clamp(-c / a, 0.0, 1.0);
            } else if (t > 1.0) {
                t = 1.0;
                s = std::clamp((b - c) / a, 0.0, 1.0);
            }
        }
    }
    return (p0 + s * d1 - (q0 + t * d2)).norm();
}

}  // namespace

int KinematicModel::joint_index(const std::string& name) const {
    for (size_t i = 0; i < joints.size(); ++i)
        if (joints[i].name == name) return static_cast<int>(i);
    return -1;
}

int KinematicModel::keypoint_index(const std::string& name) const {
    for (size_t i = 0; i < keypoint_frames.size(); ++i)
        if (keypoint_frames[i].name == name) return static_cast<int>(i);
    if (name == "PALM_CENTER") return kPalmCenterIndex;
    return -1;
}

JointVector KinematicModel::limits_lo() const {
    JointVector v;
    for (int i = 0; i < kNumJoints; ++i) v[i] = joints[i].limit_lo;
    return v;
}

JointVector KinematicModel::limits_hi() const {
    JointVector v;
    for (int i = 0; i < kNumJoints; ++i) v[i] = joints[i].limit_hi;
    return v;
}

JointVector KinematicModel::mid_pose() const {
    return 0.5 * (limits_lo() + limits_hi());
}

void KinematicModel::finalize() {
    if (joints.size() != kNumJoints)
        throw validation_error("model: expected 22 joints, got " + std::to_string(joints.size()));
    if (keypoint_frames.size() != kNumKeypoints)
        throw validation_error("model: expected 35 keypoint frames, got " +
                               std::to_string(keypoint_frames.size()));
    for (size_t i = 0; i < joints.size(); ++i) {
        const auto& j = joints[i];
        if (!(j.limit_lo < j.limit_hi))
            throw validation_error("joint " + j.name + ": limit_lo must be < limit_hi");
        if (std::abs(j.axis.norm() - 1.0) > kAxisUnitTol)
            throw validation_error("joint " + j.name + ": axis is not unit length");
        if (j.parent_link < -1 || j.parent_link >= static_cast<int>(i))
            throw validation_error("joint " + j.name + ": parent must precede it");
    }
    for (const auto& c : capsules)
        if (!(c.radius > 0.0))
            throw validation_error("capsule " + c.name + ": radius must be > 0");
    for (const auto& k : keypoint_frames)
        if (k.link < -1 || k.link >= kNumJoints)
            throw validation_error("keypoint " + k.name + ": bad link index");
    if (correspondence_set.empty())
        throw validation_error("model: correspondence_set must be non-empty");
    for (int idx : correspondence_set)
        if (idx < 0 || idx > kPalmCenterIndex)
            throw validation_error("model: correspondence index out of range");

    // Checked capsule pairs: everything except same-link pairs and the
    // explicit skip list (bone pairs that touch at a shared joint).
    collision_pairs.clear();
    auto skipped = [&](int a, int b) {
        for (const auto& [x, y] : collision_skip)
            if ((x == a && y == b) || (x == b && y == a)) return true;
        return false;
    };
    for (int a = 0; a < static_cast<int>(capsules.size()); ++a)
        for (int b = a + 1; b < static_cast<int>(capsules.size()); ++b) {
            if (capsules[a].link == capsules[b].link) continue;
            if (skipped(a, b)) continue;
            collision_pairs.emplace_back(a, b);
        }

    const int icmc = keypoint_index("INDEX_CMC");
    const int pcmc = keypoint_index("PINKY_CMC");
    if (icmc >= 0 && pcmc >= 0) {
        const KeypointSet rest = fk_keypoints(*this, HandPose{});
        palm_width = (rest.points.col(icmc) - rest.points.col(pcmc)).norm();
    }
}

void fk_link_transforms(const KinematicModel& model, const HandPose& pose,
                        std::vector<Eigen::Matrix<double, 3, 4>>& out) {
    if (!pose.finite()) throw validation_error("fk: pose has non-finite angles");
    out.resize(model.joints.size());
    for (size_t i = 0; i < model.joints.size(); ++i) {
        const JointSpec& j = model.joints[i];
        Eigen::Matrix3d parent_r = Eigen::Matrix3d::Identity();
        Vec3 parent_t = Vec3::Zero();
        if (j.parent_link >= 0) {
            parent_r = out[j.parent_link].leftCols<3>();
            parent_t = out[j.parent_link].col(3);
        }
        out[i].leftCols<3>().noalias() = parent_r * axis_rotation(j.axis, pose.angles[i]);
        out[i].col(3).noalias() = parent_t + parent_r * j.origin_offset;
    }
}

static Vec3 point_in_world(const std::vector<Eigen::Matrix<double, 3, 4>>& tf, int link,
                           const Vec3& local) {
    if (link < 0) return local;
    return tf[link].leftCols<3>() * local + tf[link].col(3);
}

KeypointSet fk_keypoints(const KinematicModel& model, const HandPose& pose) {
    std::vector<Eigen::Matrix<double, 3, 4>> tf;
    fk_link_transforms(model, pose, tf);
    KeypointSet out;
    out.points.resize(3, model.keypoint_frames.size());
    out.labels.reserve(model.keypoint_frames.size());
    for (size_t i = 0; i < model.keypoint_frames.size(); ++i) {
        const auto& kf = model.keypoint_frames[i];
        out.points.col(static_cast<Eigen::Index>(i)) = point_in_world(tf, kf.link, kf.offset);
        out.labels.push_back(kf.name);
    }
    return out;
}

KeypointSet fk_correspondence(const KinematicModel& model, const HandPose& pose) {
    const KeypointSet full = fk_keypoints(model, pose);
    KeypointSet out;
    out.points.resize(3, static_cast<Eigen::Index>(model.correspondence_set.size()));
    for (size_t i = 0; i < model.correspondence_set.size(); ++i) {
        const int idx = model.correspondence_set[i];
        if (idx == kPalmCenterIndex) {
            Vec3 c = Vec3::Zero();
            for (const char* name : {"INDEX_CMC", "MIDDLE_CMC", "RING_CMC", "PINKY_CMC"})
                c += full.points.col(model.keypoint_index(name));
            out.points.col(static_cast<Eigen::Index>(i)) = c / 4.0;
            out.labels.push_back("PALM_CENTER");
        } else {
            out.points.col(static_cast<Eigen::Index>(i)) = full.points.col(idx);
            out.labels.push_back(full.labels[idx]);
        }
    }
    return out;
}

HandPose clamp_limits(const KinematicModel& model, const HandPose& pose) {
    if (!pose.finite()) throw validation_error("clamp_limits: pose has non-finite angles");
    HandPose out = pose;
    for (int i = 0; i < kNumJoints; ++i)
        out.angles[i] = std::clamp(pose.angles[i], model.joints[i].limit_lo, model.joints[i].limit_hi);
    return out;
}

bool within_limits(const KinematicModel& model, const HandPose& pose) {
    for (int i = 0; i < kNumJoints; ++i)
        if (pose.angles[i] < model.joints[i].limit_lo || pose.angles[i] > model.joints[i].limit_hi)
            return false;
    return true;
}

CollisionResult collision_free(const KinematicModel& model, const HandPose& pose) {
    std::vector<Eigen::Matrix<double, 3, 4>> tf;
    fk_link_transforms(model, pose, tf);

    std::vector<Vec3> e0(model.capsules.size()), e1(model.capsules.size());
    for (size_t i = 0; i < model.capsules.size(); ++i) {
        const Capsule& c = model.capsules[i];
        e0[i] = point_in_world(tf, c.link, c.p0);
        e1[i] = point_in_world(tf, c.link, c.p1);
    }

    CollisionResult res;
    res.min_clearance = std::numeric_limits<double>::infinity();
    for (const auto& [a, b] : model.collision_pairs) {
        const double d = segment_segment_distance(e0[a], e1[a], e0[b], e1[b]);
        const double clearance = d - model.capsules[a].radius - model.capsules[b].radius;
        if (clearance < res.min_clearance) {
            res.min_clearance = clearance;
            res.pair_a = a;
            res.pair_b = b;
        }
    }
    res.free = res.min_clearance >= model.collision_margin;
    return res;
}

// ---------------------------------------------------------------------------
// Canonical hand

namespace {

struct ChainSpec {
    std::string finger;      // THUMB / INDEX / ...
    double cmc_x, cmc_y, cmc_z;
    Vec3 dir;                // bone direction at rest (unit)
    double meta_len, prox_len, mid_len, dist_len;  // mid_len = 0 for thumb
    bool has_cmc_joint;      // ring/pinky palm arch
    bool is_thumb;
};

}  // namespace

KinematicModel make_canonical_hand() {
    KinematicModel m;

    const Vec3 thumb_dir = Vec3(0.50, 0.84, -0.20).normalized();
    const std::vector<ChainSpec> chains = {
        {"THUMB", 0.008, 0.048, -0.004, thumb_dir, 0.040, 0.030, 0.0, 0.025, false, true},
        {"INDEX", 0.018, 0.030, 0.0, Vec3::UnitX(), 0.046, 0.040, 0.026, 0.022, false, false},
        {"MIDDLE", 0.018, 0.010, 0.0, Vec3::UnitX(), 0.050, 0.044, 0.028, 0.023, false, false},
        {"RING", 0.016, -0.010, 0.0, Vec3::UnitX(), 0.047, 0.040, 0.027, 0.022, true, false},
        {"PINKY", 0.014, -0.030, 0.0, Vec3::UnitX(), 0.041, 0.032, 0.021, 0.020, true, false},
    };

    const Vec3 fe_axis = Vec3::UnitY();       // finger flexion: +q curls toward the palm (-z)
    const Vec3 aa_axis = Vec3::UnitZ();       // finger spread in the palm plane
    // Thumb flexion axis: perpendicular to the thumb bone, in the palm plane.
    const Vec3 thumb_fe = Vec3(-thumb_dir.y(), thumb_dir.x(), 0.0).normalized();

    auto add_joint = [&](const std::string& name, const Vec3& axis, int parent, const Vec3& offset,
                         double lo, double hi) {
        JointSpec j;
        j.name = name;
        j.axis = axis;
        j.parent_link = parent;
        j.origin_offset = offset;
        j.limit_lo = lo;
        j.limit_hi = hi;
        m.joints.push_back(j);
        return static_cast<int>(m.joints.size()) - 1;
    };
    auto add_capsule = [&](const std::string& name, int link, const Vec3& p0, const Vec3& p1,
                           double r) {
        m.capsules.push_back(Capsule{name, link, p0, p1, r});
        return static_cast<int>(m.capsules.size()) - 1;
    };
    auto add_keypoint = [&](const std::string& name, int link, const Vec3& off) {
        m.keypoint_frames.push_back(KeypointFrame{name, link, off});
    };

    const int palm_capsule = add_capsule("PALM", -1, Vec3(0.004, 0.0, 0.0), Vec3(0.040, 0.0, 0.0), 0.010);

    for (const ChainSpec& c : chains) {
        const Vec3 cmc(c.cmc_x, c.cmc_y, c.cmc_z);
        std::vector<int> chain;
        int bone_link;       // link carrying the metacarpal bone
        Vec3 meta_from;      // metacarpal start in that link's frame
        int first_caps;

        if (c.is_thumb) {
            const int fe = add_joint("THUMB_CMC_FE", thumb_fe, -1, cmc, -0.20, 1.00);
            const int aa = add_joint("THUMB_CMC_AA", aa_axis, fe, Vec3::Zero(), -0.90, 0.50);
            const int mcp = add_joint("THUMB_MCP_FE", thumb_fe, aa, c.meta_len * c.dir, -0.30, 1.10);
            const int ip = add_joint("THUMB_IP_FE", thumb_fe, mcp, c.prox_len * c.dir, -0.20, 1.30);
            chain = {fe, aa, mcp, ip};
            bone_link = aa;
            meta_from = Vec3::Zero();

            first_caps = add_capsule("THUMB_META", aa, Vec3::Zero(), c.meta_len * c.dir, 0.008);
            const int prox = add_capsule("THUMB_PROX", mcp, Vec3::Zero(), c.prox_len * c.dir, 0.0075);
            const int dist = add_capsule("THUMB_DIST", ip, Vec3::Zero(), c.dist_len * c.dir, 0.007);
            m.collision_skip.emplace_back(first_caps, prox);
            m.collision_skip.emplace_back(prox, dist);
            m.collision_skip.emplace_back(palm_capsule, first_caps);

            // 7 keypoint frames along the chain.
            add_keypoint("THUMB_CMC", -1, cmc);
            add_keypoint("THUMB_META_MID", aa, 0.5 * c.meta_len * c.dir);
            add_keypoint("THUMB_MCP", mcp, Vec3::Zero());
            add_keypoint("THUMB_IP", ip, Vec3::Zero());
            add_keypoint("THUMB_DISTAL_MID", ip, 0.5 * c.dist_len * c.dir);
            add_keypoint("THUMB_TIP_JOINT", ip, 0.75 * c.dist_len * c.dir);
            add_keypoint("THUMB_TIP", ip, c.dist_len * c.dir);
        } else {
            int parent = -1;
            Vec3 mcp_offset = cmc + c.meta_len * c.dir;
            int cmc_joint = -1;
            if (c.has_cmc_joint) {
                cmc_joint = add_joint(c.finger + "_CMC_FE", fe_axis, -1, cmc, 0.0, 0.50);
                parent = cmc_joint;
                mcp_offset = c.meta_len * c.dir;  // now expressed in the CMC link frame
            }
            const double aa_range = (c.finger == "INDEX")    ? 0.35
                                    : (c.finger == "MIDDLE") ? 0.25
                                    : (c.finger == "RING")   ? 0.30
                                                             : 0.40;
            const int aa = add_joint(c.finger + "_MCP_AA", aa_axis, parent, mcp_offset, -aa_range, aa_range);
            const int fe = add_joint(c.finger + "_MCP_FE", fe_axis, aa, Vec3::Zero(), -0.26, 1.60);
            const int pip = add_joint(c.finger + "_PIP_FE", fe_axis, fe, c.prox_len * c.dir, 0.0, 1.92);
            const int dip = add_joint(c.finger + "_DIP_FE", fe_axis, pip, c.mid_len * c.dir, 0.0, 1.40);
            chain.clear();
            if (cmc_joint >= 0) chain.push_back(cmc_joint);
            chain.insert(chain.end(), {aa, fe, pip, dip});
            bone_link = cmc_joint;  // -1 for index/middle: metacarpal is rigid in the base
            meta_from = (cmc_joint >= 0) ? Vec3::Zero() : cmc;

            first_caps = add_capsule(c.finger + "_META", bone_link, meta_from,
                                     meta_from + c.meta_len * c.dir, 0.0075);
            const int prox = add_capsule(c.finger + "_PROX", fe, Vec3::Zero(), c.prox_len * c.dir, 0.0075);
            const int midc = add_capsule(c.finger + "_MID", pip, Vec3::Zero(), c.mid_len * c.dir, 0.007);
            const int dist = add_capsule(c.finger + "_DIST", dip, Vec3::Zero(), c.dist_len * c.dir, 0.007);
            m.collision_skip.emplace_back(first_caps, prox);
            m.collision_skip.emplace_back(prox, midc);
            m.collision_skip.emplace_back(midc, dist);
            m.collision_skip.emplace_back(palm_capsule, first_caps);

            add_keypoint(c.finger + "_CMC", (cmc_joint >= 0) ? cmc_joint : -1,
                         (cmc_joint >= 0) ? Vec3::Zero() : cmc);
            add_keypoint(c.finger + "_META_MID", bone_link, meta_from + 0.5 * c.meta_len * c.dir);
            add_keypoint(c.finger + "_MCP", fe, Vec3::Zero());
            add_keypoint(c.finger + "_PIP", pip, Vec3::Zero());
            add_keypoint(c.finger + "_DIP", dip, Vec3::Zero());
            add_keypoint(c.finger + "_TIP_JOINT", dip, 0.5 * c.dist_len * c.dir);
            add_keypoint(c.finger + "_TIP", dip, c.dist_len * c.dir);
        }
        m.fingers.push_back(chain);
    }

    m.correspondence_set = {
        m.keypoint_index("THUMB_TIP"), m.keypoint_index("INDEX_TIP"),
        m.keypoint_index("MIDDLE_TIP"), m.keypoint_index("RING_TIP"),
        m.keypoint_index("PINKY_TIP"), kPalmCenterIndex,
    };

    m.finalize();
    return m;
}

// ---------------------------------------------------------------------------
// emgpose-hand/1 JSON schema

using nlohmann::json;

static json vec3_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

static Vec3 vec3_from_json(const json& j) {
    if (!j.is_array() || j.size() != 3) throw validation_error("model json: expected a 3-vector");
    return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

std::string model_to_json(const KinematicModel& m) {
    json j;
    j["format"] = "emgpose-hand/1";
    j["collision_margin"] = m.collision_margin;
    j["joints"] = json::array();
    for (const auto& js : m.joints)
        j["joints"].push_back({{"name", js.name},
                               {"axis", vec3_to_json(js.axis)},
                               {"parent_link", js.parent_link},
                               {"origin_offset", vec3_to_json(js.origin_offset)},
                               {"limit_lo", js.limit_lo},
                               {"limit_hi", js.limit_hi}});
    j["fingers"] = m.fingers;
    j["capsules"] = json::array();
    for (const auto& c : m.capsules)
        j["capsules"].push_back({{"name", c.name},
                                 {"link", c.link},
                                 {"p0", vec3_to_json(c.p0)},
                                 {"p1", vec3_to_json(c.p1)},
                                 {"radius", c.radius}});
    j["keypoint_frames"] = json::array();
    for (const auto& k : m.keypoint_frames)
        j["keypoint_frames"].push_back(
            {{"name", k.name}, {"link", k.link}, {"offset", vec3_to_json(k.offset)}});
    j["correspondence_set"] = m.correspondence_set;
    j["collision_skip"] = json::array();
    for (const auto& [a, b] : m.collision_skip) j["collision_skip"].push_back(json::array({a, b}));
    return j.dump(2);
}

KinematicModel model_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw io_error(std::string("model json: ") + e.what(), static_cast<long long>(e.byte));
    }
    if (!j.contains("format") || j["format"] != "emgpose-hand/1")
        throw io_error("model json: missing or unsupported format tag (want emgpose-hand/1)");
    KinematicModel m;
    m.collision_margin = j.value("collision_margin", 0.002);
    for (const auto& js : j.at("joints")) {
        JointSpec s;
        s.name = js.at("name").get<std::string>();
        s.axis = vec3_from_json(js.at("axis"));
        s.parent_link = js.at("parent_link").get<int>();
        s.origin_offset = vec3_from_json(js.at("origin_offset"));
        s.limit_lo = js.at("limit_lo").get<double>();
        s.limit_hi = js.at("limit_hi").get<double>();
        m.joints.push_back(s);
    }
    m.fingers = j.at("fingers").get<std::vector<std::vector<int>>>();
    for (const auto& jc : j.at("capsules")) {
        Capsule c;
        c.name = jc.at("name").get<std::string>();
        c.link = jc.at("link").get<int>();
        c.p0 = vec3_from_json(jc.at("p0"));
        c.p1 = vec3_from_json(jc.at("p1"));
        c.radius = jc.at("radius").get<double>();
        m.capsules.push_back(c);
    }
    for (const auto& jk : j.at("keypoint_frames")) {
        KeypointFrame k;
        k.name = jk.at("name").get<std::string>();
        k.link = jk.at("link").get<int>();
        k.offset = vec3_from_json(jk.at("offset"));
        m.keypoint_frames.push_back(k);
    }
    m.correspondence_set = j.at("correspondence_set").get<std::vector<int>>();
    for (const auto& jp : j.at("collision_skip"))
        m.collision_skip.emplace_back(jp[0].get<int>(), jp[1].get<int>());
    m.finalize();
    return m;
}

KinematicModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open model file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return model_from_json(ss.str());
}

void save_model(const KinematicModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write model file: " + path);
    out << model_to_json(model) << "\n";
}

}  // namespace emgpose

#include "emgpose/retarget.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace emgpose {

void RetargetConfig::validate() const {
    if (max_iters < 1) throw validation_error("retarget: max_iters must be >= 1");
    if (!(tol_step > 0.0) || !(tol_residual > 0.0))
        throw validation_error("retarget: tolerances must be > 0");
    if (damping < 0.0) throw validation_error("retarget: damping must be >= 0");
    if (!(fd_step > 0.0)) throw validation_error("retarget: fd_step must be > 0");
    if (weights.size() > 0 && weights.maxCoeff() <= 0.0)
        throw validation_error("retarget: at least one weight must be > 0");
    if (weights.size() > 0 && weights.minCoeff() < 0.0)
        throw validation_error("retarget: weights must be nonnegative");
    for (int a : active_joints)
        if (a < 0 || a >= kNumJoints) throw validation_error("retarget: active joint out of range");
}

Eigen::VectorXd default_weights(const KinematicModel& model) {
    Eigen::VectorXd w(static_cast<Eigen::Index>(model.correspondence_set.size()));
    for (size_t i = 0; i < model.correspondence_set.size(); ++i)
        w[static_cast<Eigen::Index>(i)] = (model.correspondence_set[i] == kPalmCenterIndex) ? 0.5 : 1.0;
    return w;
}

namespace {

// Weighted residual vector: sqrt(w_i) * (target_i - fk_i(q)), stacked.
void residual_vector(const KinematicModel& model, const HandPose& q,
                     const Eigen::Matrix3Xd& targets, const Eigen::VectorXd& sqrt_w,
                     Eigen::VectorXd& out) {
    const KeypointSet pts = fk_correspondence(model, q);
    const Eigen::Index n = targets.cols();
    out.resize(3 * n);
    for (Eigen::Index i = 0; i < n; ++i)
        out.segment<3>(3 * i) = sqrt_w[i] * (targets.col(i) - pts.points.col(i));
}

double weighted_rms(const Eigen::VectorXd& r, double weight_sum) {
    return std::sqrt(r.squaredNorm() / weight_sum);
}

}  // namespace

RetargetResult retarget_pose(const KinematicModel& model, const KeypointSet& human_keypoints,
                             const RetargetConfig& config, const HandPose& q_init) {
    config.validate();
    if (!q_init.finite()) throw validation_error("retarget: q_init has non-finite angles");
    if (!human_keypoints.points.allFinite())
        throw validation_error("retarget: target keypoints have non-finite coordinates");
    const Eigen::Index n_kp = static_cast<Eigen::Index>(model.correspondence_set.size());
    if (human_keypoints.points.cols() != n_kp)
        throw validation_error("retarget: expected " + std::to_string(n_kp) +
                               " correspondence keypoints, got " +
                               std::to_string(human_keypoints.points.cols()));

    Eigen::VectorXd w = config.weights.size() ? config.weights : default_weights(model);
    if (w.size() != n_kp) throw validation_error("retarget: weight count mismatch");
    const double weight_sum = w.sum();
    const Eigen::VectorXd sqrt_w = w.cwiseSqrt();

    std::vector<int> active = config.active_joints;
    if (active.empty()) {
        active.resize(kNumJoints);
        for (int i = 0; i < kNumJoints; ++i) active[i] = i;
    }
    const int n_act = static_cast<int>(active.size());

    HandPose q = clamp_limits(model, q_init);
    Eigen::VectorXd r;
    residual_vector(model, q, human_keypoints.points, sqrt_w, r);
    double cost = r.squaredNorm();

    RetargetResult res;
    res.pose = q;
    res.residual = weighted_rms(r, weight_sum);
    res.converged = res.residual < config.tol_residual;

    double lambda = config.damping;
    Eigen::MatrixXd jac(r.size(), n_act);
    Eigen::VectorXd r_lo, r_hi;

    for (int iter = 0; !res.converged && iter < config.max_iters; ++iter) {
        // Central-difference Jacobian of the weighted residual.
        for (int a = 0; a < n_act; ++a) {
            HandPose qp = q, qm = q;
            qp.angles[active[a]] += config.fd_step;
            qm.angles[active[a]] -= config.fd_step;
            residual_vector(model, qp, human_keypoints.points, sqrt_w, r_hi);
            residual_vector(model, qm, human_keypoints.points, sqrt_w, r_lo);
            jac.col(a) = (r_hi - r_lo) / (2.0 * config.fd_step);
        }
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd jtr = jac.transpose() * r;

        bool accepted = false;
        for (int attempt = 0; attempt < 8 && !accepted; ++attempt) {
            Eigen::MatrixXd h = jtj;
            h.diagonal().array() += lambda;
            // residual is (target - fk), so the descent step is +H^-1 J^T r.
            const Eigen::VectorXd step = h.ldlt().solve(jtr);
            HandPose q_try = q;
            for (int a = 0; a < n_act; ++a) q_try.angles[active[a]] += step[a];
            q_try = clamp_limits(model, q_try);

            Eigen::VectorXd r_try;
            residual_vector(model, q_try, human_keypoints.points, sqrt_w, r_try);
            const double cost_try = r_try.squaredNorm();
            if (cost_try <= cost) {
                const double step_inf = (q_try.angles - q.angles).cwiseAbs().maxCoeff();
                q = q_try;
                r.swap(r_try);
                cost = cost_try;
                accepted = true;
                if (lambda > 0.0) lambda = std::max(lambda * 0.1, 1e-12);
                res.residual = weighted_rms(r, weight_sum);
                if (step_inf < config.tol_step || res.residual < config.tol_residual)
                    res.converged = true;
            } else {
                lambda = (lambda == 0.0) ? 1e-6 : lambda * 10.0;
            }
        }
        res.iterations = iter + 1;
        if (!accepted) break;  // damping exhausted, stuck at a stationary point
    }

    res.pose = q;
    if (config.apply_safety_clamp) {
        const HandPose safe_ref = clamp_limits(model, q_init);
        if (!collision_free(model, safe_ref).free) {
            // Fall back to the rest pose as the known-safe anchor.
            const HandPose rest{};
            res.pose = clamp_to_safe_manifold(model, q, rest);
        } else {
            res.pose = clamp_to_safe_manifold(model, q, safe_ref);
        }
        res.clamped = (res.pose.angles - q.angles).cwiseAbs().maxCoeff() > 0.0;
        if (res.clamped) {
            residual_vector(model, res.pose, human_keypoints.points, sqrt_w, r);
            res.residual = weighted_rms(r, weight_sum);
        }
    }
    return res;
}

HandPose clamp_to_safe_manifold(const KinematicModel& model, const HandPose& q_star,
                                const HandPose& q_prev_safe) {
    if (!q_star.finite() || !q_prev_safe.finite())
        throw validation_error("clamp_to_safe_manifold: non-finite pose");
    if (!collision_free(model, q_prev_safe).free)
        throw state_error("clamp_to_safe_manifold: q_prev_safe is not collision-free");
    if (collision_free(model, q_star).free) return q_star;

    const JointVector delta = q_star.angles - q_prev_safe.angles;
    const double span = delta.cwiseAbs().maxCoeff();
    constexpr double kResolution = 1e-4;  // radians
    double t_lo = 0.0, t_hi = 1.0;
    while ((t_hi - t_lo) * span > kResolution) {
        const double t_mid = 0.5 * (t_lo + t_hi);
        const HandPose q_mid(q_prev_safe.angles + t_mid * delta);
        if (collision_free(model, q_mid).free)
            t_lo = t_mid;
        else
            t_hi = t_mid;
    }
    return HandPose(q_prev_safe.angles + t_lo * delta);
}

KeypointSet normalize_human_frame(const KeypointSet& raw, double robot_palm_width) {
    if (!raw.points.allFinite())
        throw validation_error("normalize_human_frame: non-finite keypoints");
    auto find = [&](const char* name) -> Eigen::Index {
        for (size_t i = 0; i < raw.labels.size(); ++i)
            if (raw.labels[i] == name) return static_cast<Eigen::Index>(i);
        throw validation_error(std::string("normalize_human_frame: missing keypoint label ") + name);
    };
    const Vec3 wrist = raw.points.col(find("WRIST"));
    const Vec3 index_cmc = raw.points.col(find("INDEX_CMC"));
    const Vec3 pinky_cmc = raw.points.col(find("PINKY_CMC"));

    const Vec3 t = index_cmc - wrist;          // distal, ~+x
    const Vec3 s = index_cmc - pinky_cmc;      // across the palm, ~+y
    const Vec3 zr = t.cross(s);
    if (zr.norm() < 1e-12 || t.norm() < 1e-12)
        throw validation_error("normalize_human_frame: degenerate palm (collinear keypoints)");
    const Vec3 z = zr.normalized();
    const Vec3 x = (t - t.dot(z) * z).normalized();
    const Vec3 y = z.cross(x);

    Eigen::Matrix3d r;  // world -> normalized
    r.row(0) = x.transpose();
    r.row(1) = y.transpose();
    r.row(2) = z.transpose();

    const double human_palm_width = s.norm();
    if (human_palm_width < 1e-9)
        throw validation_error("normalize_human_frame: zero palm width");
    const double scale = robot_palm_width / human_palm_width;

    KeypointSet out;
    out.labels = raw.labels;
    out.points.resize(3, raw.points.cols());
    for (Eigen::Index i = 0; i < raw.points.cols(); ++i)
        out.points.col(i) = scale * (r * (raw.points.col(i) - wrist));
    return out;
}

}  // namespace emgpose

#pragma once

#include <Eigen/Core>
#include <map>
#include <string>
#include <vector>

#include "emgpose/hand_model.hpp"

namespace emgpose {

struct EvalReport {
    double overall_mae = 0.0;         // radians; mean of per_joint_mae
    JointVector per_joint_mae = JointVector::Zero();
    std::map<std::string, double> per_task_mae;
    std::int64_t frames = 0;
};

// MAE between predicted and ground-truth pose streams (22 x F each).
// task_labels, when non-empty, must have one label per frame.
EvalReport evaluate(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& gt,
                    const std::vector<std::string>& task_labels = {});

// CSV of ground-truth vs predicted trajectories for the named joints:
// header "frame,<joint>_gt,<joint>_pred,...", full-precision decimal values.
void export_joint_csv(const Eigen::MatrixXd& poses_pred, const Eigen::MatrixXd& poses_gt,
                      const std::vector<std::string>& joints, const KinematicModel& model,
                      const std::string& path);

}  // namespace emgpose

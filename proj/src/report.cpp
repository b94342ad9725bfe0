#include "emgpose/report.hpp"

#include <cstdio>
#include <fstream>

namespace emgpose {

EvalReport evaluate(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& gt,
                    const std::vector<std::string>& task_labels) {
    if (pred.rows() != kNumJoints || gt.rows() != kNumJoints)
        throw validation_error("evaluate: pose streams must have 22 joints");
    if (pred.cols() != gt.cols()) throw validation_error("evaluate: frame count mismatch");
    if (!task_labels.empty() && static_cast<Eigen::Index>(task_labels.size()) != pred.cols())
        throw validation_error("evaluate: one task label per frame required");
    if (pred.cols() == 0) throw validation_error("evaluate: empty pose streams");

    EvalReport r;
    r.frames = pred.cols();
    const Eigen::MatrixXd err = (pred - gt).cwiseAbs();
    r.per_joint_mae = err.rowwise().mean();
    r.overall_mae = r.per_joint_mae.mean();

    if (!task_labels.empty()) {
        std::map<std::string, std::pair<double, std::int64_t>> acc;
        for (Eigen::Index f = 0; f < err.cols(); ++f) {
            auto& [sum, count] = acc[task_labels[static_cast<size_t>(f)]];
            sum += err.col(f).mean();
            ++count;
        }
        for (const auto& [task, sc] : acc) r.per_task_mae[task] = sc.first / double(sc.second);
    }
    return r;
}

void export_joint_csv(const Eigen::MatrixXd& poses_pred, const Eigen::MatrixXd& poses_gt,
                      const std::vector<std::string>& joints, const KinematicModel& model,
                      const std::string& path) {
    if (poses_pred.cols() != poses_gt.cols())
        throw validation_error("export_joint_csv: frame count mismatch");
    std::vector<int> idx;
    for (const auto& name : joints) {
        const int j = model.joint_index(name);
        if (j < 0) {
            std::string valid;
            for (const auto& js : model.joints) valid += (valid.empty() ? "" : ", ") + js.name;
            throw validation_error("export_joint_csv: unknown joint '" + name +
                                   "'; valid joints: " + valid);
        }
        idx.push_back(j);
    }

    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("cannot write csv: " + path);
    os << "frame";
    for (const auto& name : joints) os << "," << name << "_gt," << name << "_pred";
    os << "\n";
    char buf[32];
    for (Eigen::Index f = 0; f < poses_pred.cols(); ++f) {
        os << f;
        for (int j : idx) {
            std::snprintf(buf, sizeof(buf), "%.17g", poses_gt(j, f));
            os << "," << buf;
            std::snprintf(buf, sizeof(buf), "%.17g", poses_pred(j, f));
            os << "," << buf;
        }
        os << "\n";
    }
    if (!os) throw io_error("failed writing csv: " + path);
}

}  // namespace emgpose

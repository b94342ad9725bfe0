#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "emgpose/net.hpp"

namespace emgpose {

namespace {

struct AdamSlot {
    Eigen::VectorXd m, v;
};

}  // namespace

TrainReport train(NetworkParams& params, const std::vector<WindowSample>& train_set,
                  const std::vector<WindowSample>& val_set, const OptimizerConfig& opt) {
    if (train_set.empty()) throw validation_error("train: empty training set");
    if (opt.epochs < 0 || opt.batch_size < 1) throw validation_error("train: bad optimizer config");

    auto spans = param_spans(params);
    const size_t rest_pose_span = spans.size() - 1;  // declared last
    std::vector<AdamSlot> slots(spans.size());
    for (size_t i = 0; i < spans.size(); ++i) {
        slots[i].m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(spans[i].second));
        slots[i].v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(spans[i].second));
    }

    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> jitter(0.0, 1.0);
    std::vector<size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), size_t{0});

    TrainReport report;
    long long step = 0;
    for (int epoch = 0; epoch < opt.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        int batches = 0;

        for (size_t start = 0; start < order.size(); start += size_t(opt.batch_size)) {
            const size_t end = std::min(order.size(), start + size_t(opt.batch_size));
            std::vector<WindowSample> batch;
            batch.reserve(end - start);
            for (size_t i = start; i < end; ++i) {
                batch.push_back(train_set[order[i]]);
                if (opt.anchor_jitter > 0.0)
                    for (int j = 0; j < kNumJoints; ++j)
                        batch.back().theta0[j] += opt.anchor_jitter * jitter(rng);
            }

            LossResult lr = loss_and_grad(params, batch, opt.lambda);
            if (lr.loss > 1e6)
                throw training_error("train: diverged (loss " + std::to_string(lr.loss) +
                                     " at epoch " + std::to_string(epoch) + ")");
            epoch_loss += lr.loss;
            ++batches;

            auto gspans = param_spans(lr.grads);
            double sq = 0.0;
            for (size_t i = 0; i < gspans.size(); ++i) {
                if (i == rest_pose_span && !opt.train_rest_pose) continue;
                sq += Eigen::Map<const Eigen::VectorXd>(gspans[i].first,
                                                        static_cast<Eigen::Index>(gspans[i].second))
                          .squaredNorm();
            }
            const double gnorm = std::sqrt(sq);
            const double gscale = (opt.clip_norm > 0.0 && gnorm > opt.clip_norm)
                                      ? opt.clip_norm / gnorm
                                      : 1.0;

            ++step;
            const double bc1 = 1.0 - std::pow(opt.beta1, double(step));
            const double bc2 = 1.0 - std::pow(opt.beta2, double(step));
            for (size_t i = 0; i < spans.size(); ++i) {
                if (i == rest_pose_span && !opt.train_rest_pose) continue;
                Eigen::Map<Eigen::VectorXd> p(spans[i].first,
                                              static_cast<Eigen::Index>(spans[i].second));
                Eigen::Map<const Eigen::VectorXd> g(gspans[i].first,
                                                    static_cast<Eigen::Index>(gspans[i].second));
                auto& s = slots[i];
                s.m = opt.beta1 * s.m + (1.0 - opt.beta1) * (gscale * g);
                s.v = opt.beta2 * s.v.array().matrix() +
                      (1.0 - opt.beta2) * (gscale * g).cwiseAbs2();
                const Eigen::VectorXd mh = s.m / bc1;
                const Eigen::VectorXd vh = s.v / bc2;
                p -= opt.lr * (mh.array() / (vh.array().sqrt() + opt.eps)).matrix();
            }
        }

        report.train_loss.push_back(epoch_loss / std::max(batches, 1));
        if (!val_set.empty())
            report.val_loss.push_back(loss_only(params, val_set, opt.lambda));
        if (opt.verbose) {
            std::printf("epoch %3d  train %.6f", epoch, report.train_loss.back());
            if (!report.val_loss.empty()) std::printf("  val %.6f", report.val_loss.back());
            std::printf("\n");
            std::fflush(stdout);
        }
    }
    return report;
}

}  // namespace emgpose

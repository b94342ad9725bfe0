#include <Eigen/Core>
#include <cmath>

#include "emgpose/net.hpp"
#include "net_internal.hpp"

namespace emgpose {
namespace detail {

namespace {

// Backward of y = gain .* n + bias with n = (a - mean) * inv_std computed over
// rows per column.
void layer_norm_backward(const Eigen::MatrixXd& dz, const Eigen::MatrixXd& n,
                         const Eigen::VectorXd& inv_std, const Eigen::VectorXd& gain,
                         Eigen::MatrixXd& da, Eigen::VectorXd& g_gain, Eigen::VectorXd& g_bias) {
    const Eigen::Index rows = dz.rows(), cols = dz.cols();
    da.resize(rows, cols);
    for (Eigen::Index t = 0; t < cols; ++t) {
        g_gain += dz.col(t).cwiseProduct(n.col(t));
        g_bias += dz.col(t);
        const Eigen::VectorXd dn = gain.cwiseProduct(dz.col(t));
        const double mean_dn = dn.mean();
        const double mean_dn_n = dn.cwiseProduct(n.col(t)).mean();
        da.col(t) = inv_std[t] * (dn.array() - mean_dn - n.col(t).array() * mean_dn_n);
    }
}

// Backward of the strided causal conv + ReLU + LN block. Returns d(input).
Eigen::MatrixXd conv_block_backward(const ConvBlockParams& p, const ConvCache& cache, int kernel,
                                    int stride, const Eigen::MatrixXd& dz, ConvBlockParams& g) {
    Eigen::MatrixXd da;
    layer_norm_backward(dz, cache.n, cache.inv_std, p.ln_gain, da, g.ln_gain, g.ln_bias);
    const Eigen::MatrixXd dy = da.cwiseProduct((cache.y.array() > 0.0).cast<double>().matrix());

    g.w.noalias() += dy * cache.cols.transpose();
    g.b += dy.rowwise().sum();

    const Eigen::MatrixXd dcols = p.w.transpose() * dy;
    const int c_in = static_cast<int>(cache.cols.rows()) / kernel;
    const int t_out = static_cast<int>(dy.cols());
    const int pad = kernel - 1;
    Eigen::MatrixXd dx = Eigen::MatrixXd::Zero(c_in, cache.t_in);
    for (int t = 0; t < t_out; ++t)
        for (int kk = 0; kk < kernel; ++kk) {
            const int src = t * stride + kk - pad;
            if (src < 0) continue;
            for (int c = 0; c < c_in; ++c) dx(c, src) += dcols(c * kernel + kk, t);
        }
    return dx;
}

Eigen::MatrixXd tds_stage_backward(const ModelConfig& cfg, const TdsStageParams& p,
                                   const TdsCache& cache, const Eigen::MatrixXd& dz,
                                   TdsStageParams& g) {
    Eigen::MatrixXd dp;
    layer_norm_backward(dz, cache.n2, cache.inv2, p.ln2_gain, dp, g.ln2_gain, g.ln2_bias);

    // p = ff2(relu(ff1(v))) + v
    Eigen::MatrixXd dv = dp;
    g.ff2_w.noalias() += dp * cache.hr.transpose();
    g.ff2_b += dp.rowwise().sum();
    const Eigen::MatrixXd dhr = p.ff2_w.transpose() * dp;
    const Eigen::MatrixXd df1 =
        dhr.cwiseProduct((cache.f1.array() > 0.0).cast<double>().matrix());
    g.ff1_w.noalias() += df1 * cache.v.transpose();
    g.ff1_b += df1.rowwise().sum();
    dv.noalias() += p.ff1_w.transpose() * df1;

    Eigen::MatrixXd du;
    layer_norm_backward(dv, cache.n1, cache.inv1, p.ln1_gain, du, g.ln1_gain, g.ln1_bias);

    // u = relu(conv2d(x)) + x
    Eigen::MatrixXd dx = du;
    const Eigen::MatrixXd dy =
        du.cwiseProduct((cache.ypre.array() > 0.0).cast<double>().matrix());

    const int grp = cfg.tds_groups;
    const int sub = cfg.feat_channels / grp;
    const int len = static_cast<int>(dz.cols());
    const int off = (cfg.tds_kernel - 1) / 2;
    Eigen::MatrixXd dyslice(grp, len);
    for (int s = 0; s < sub; ++s) {
        for (int gg = 0; gg < grp; ++gg) dyslice.row(gg) = dy.row(gg * sub + s);
        g.conv_w.noalias() += dyslice * cache.cols[s].transpose();
        g.conv_b += dyslice.rowwise().sum();
        const Eigen::MatrixXd dcols = p.conv_w.transpose() * dyslice;
        for (int t = 0; t < len; ++t)
            for (int kk = 0; kk < cfg.tds_kernel; ++kk) {
                const int src = t + kk - off;
                if (src < 0 || src >= len) continue;
                for (int c = 0; c < grp; ++c) dx(c * sub + s, src) += dcols(c * cfg.tds_kernel + kk, t);
            }
    }
    return dx;
}

}  // namespace

Eigen::MatrixXd decoder_backward(const NetworkParams& params, const DecoderCache& cache,
                                 const Eigen::MatrixXd& d_vel, const Eigen::MatrixXd& d_poses,
                                 NetworkParams& grads) {
    const ModelConfig& cfg = params.config;
    const int n = static_cast<int>(d_vel.cols());
    const int hid = cfg.lstm_hidden;
    const int dof = cfg.out_dof;

    Eigen::MatrixXd dfeat(cfg.feat_channels, n);
    Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(hid);
    Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(hid);
    Eigen::VectorXd dtheta_carry = Eigen::VectorXd::Zero(dof);
    Eigen::VectorXd da(4 * hid);

    for (int t = n - 1; t >= 0; --t) {
        const Eigen::VectorXd dtheta = d_poses.col(t) + dtheta_carry;
        const Eigen::VectorXd dtheta_raw = dtheta.cwiseProduct(cache.clamp_pass.col(t));
        const Eigen::VectorXd dv = d_vel.col(t) + dtheta_raw;

        // MLP
        grads.mlp2_w.noalias() += dv * cache.m.col(t).transpose();
        grads.mlp2_b += dv;
        Eigen::VectorXd dm = params.mlp2_w.transpose() * dv;
        const Eigen::VectorXd df1m =
            dm.cwiseProduct((cache.f1m.col(t).array() > 0.0).cast<double>().matrix());
        grads.mlp1_w.noalias() += df1m * cache.h.col(t).transpose();
        grads.mlp1_b += df1m;
        Eigen::VectorXd dh = params.mlp1_w.transpose() * df1m + dh_next;

        // LSTM cell
        const auto i = cache.gi.col(t);
        const auto f = cache.gf.col(t);
        const auto g = cache.gg.col(t);
        const auto o = cache.go.col(t);
        const auto tc = cache.tanh_c.col(t);
        const Eigen::VectorXd c_prev = (t > 0) ? cache.c.col(t - 1) : cache.c0;
        const Eigen::VectorXd h_prev = (t > 0) ? cache.h.col(t - 1) : cache.h0;

        const Eigen::VectorXd do_ = dh.cwiseProduct(tc);
        const Eigen::VectorXd dc =
            dh.cwiseProduct(o).cwiseProduct((1.0 - tc.array().square()).matrix()) + dc_next;
        const Eigen::VectorXd di = dc.cwiseProduct(g);
        const Eigen::VectorXd dg = dc.cwiseProduct(i);
        const Eigen::VectorXd df = dc.cwiseProduct(c_prev);
        dc_next = dc.cwiseProduct(f);

        da.segment(0, hid) = di.array() * i.array() * (1.0 - i.array());
        da.segment(hid, hid) = df.array() * f.array() * (1.0 - f.array());
        da.segment(2 * hid, hid) = dg.array() * (1.0 - g.array().square());
        da.segment(3 * hid, hid) = do_.array() * o.array() * (1.0 - o.array());

        grads.lstm.w_ih.noalias() += da * cache.x.col(t).transpose();
        grads.lstm.w_hh.noalias() += da * h_prev.transpose();
        grads.lstm.b_ih += da;
        grads.lstm.b_hh += da;
        dh_next.noalias() = params.lstm.w_hh.transpose() * da;
        const Eigen::VectorXd dx = params.lstm.w_ih.transpose() * da;

        dfeat.col(t) = dx.head(cfg.feat_channels);
        // theta_{t-1} feeds both the integrator and the next LSTM input.
        dtheta_carry = dtheta_raw + dx.tail(dof);
    }
    return dfeat;
}

Eigen::MatrixXd resample_backward(const ResampleCache& cache, const Eigen::MatrixXd& d_out) {
    Eigen::MatrixXd dx = Eigen::MatrixXd::Zero(d_out.rows(), cache.in_len);
    for (int j = 0; j < static_cast<int>(cache.i0.size()); ++j) {
        const double a = cache.alpha[j];
        dx.col(cache.i0[j]) += (1.0 - a) * d_out.col(j);
        if (a != 0.0) dx.col(cache.i0[j] + 1) += a * d_out.col(j);
    }
    return dx;
}

Eigen::MatrixXd encoder_backward(const NetworkParams& params, const EmgWindow& emg,
                                 const EncoderCache& cache, const Eigen::MatrixXd& d_feat,
                                 NetworkParams& grads) {
    const ModelConfig& cfg = params.config;
    Eigen::MatrixXd d = d_feat;
    for (int i = static_cast<int>(params.tds.size()) - 1; i >= 0; --i)
        d = tds_stage_backward(cfg, params.tds[i], cache.tds[i], d, grads.tds[i]);
    d = conv_block_backward(params.conv2, cache.c2, cfg.conv_kernel, cfg.conv_strides[1], d,
                            grads.conv2);
    d = conv_block_backward(params.conv1, cache.c1, cfg.conv_kernel, cfg.conv_strides[0], d,
                            grads.conv1);
    return d;  // d(emg), unused by training but cheap to form
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Loss

namespace {

// Per-step pose deltas: v[0] = theta[0] - theta0, v[t] = theta[t] - theta[t-1].
Eigen::MatrixXd pose_deltas(const Eigen::MatrixXd& theta_gt, const JointVector& theta0) {
    Eigen::MatrixXd v(theta_gt.rows(), theta_gt.cols());
    v.col(0) = theta_gt.col(0) - theta0;
    for (Eigen::Index t = 1; t < theta_gt.cols(); ++t)
        v.col(t) = theta_gt.col(t) - theta_gt.col(t - 1);
    return v;
}

void check_sample(const WindowSample& s, const ModelConfig& cfg, size_t index) {
    if (s.emg.rows() != cfg.in_channels || s.theta_gt.rows() != cfg.out_dof ||
        s.emg.cols() != s.theta_gt.cols())
        throw validation_error("loss: sample " + std::to_string(index) + " has mismatched shapes");
}

}  // namespace

LossResult loss_and_grad(const NetworkParams& params, const std::vector<WindowSample>& batch,
                         double lambda, bool clamp_poses) {
    if (batch.empty()) throw validation_error("loss: empty batch");
    const ModelConfig& cfg = params.config;

    LossResult res;
    res.grads = NetworkParams::zeros(cfg);
    res.grads.rest_pose.setZero();  // zeros() seeds it with the mid pose

    const double inv_batch = 1.0 / double(batch.size());
    for (size_t s = 0; s < batch.size(); ++s) {
        const WindowSample& sample = batch[s];
        check_sample(sample, cfg, s);
        const int n = static_cast<int>(sample.emg.cols());

        detail::EncoderCache enc_cache;
        detail::ResampleCache rs_cache;
        detail::DecoderCache dec_cache;
        const FeatureSeq feat = detail::encoder_forward_cached(params, sample.emg, enc_cache);
        const FeatureSeq up = detail::resample_linear_cached(feat, n, rs_cache);
        DecoderState anchor;
        anchor.h = Eigen::VectorXd::Zero(cfg.lstm_hidden);
        anchor.c = Eigen::VectorXd::Zero(cfg.lstm_hidden);
        anchor.last_pose = HandPose(sample.theta0);
        const DecoderOutput out =
            detail::decoder_forward_cached(params, up, anchor, clamp_poses, dec_cache);

        const Eigen::MatrixXd v_gt = pose_deltas(sample.theta_gt, sample.theta0);
        const Eigen::MatrixXd v_err = out.velocities - v_gt;
        const Eigen::MatrixXd p_err = out.poses - sample.theta_gt;
        const double denom = double(cfg.out_dof) * double(n);
        const double sample_loss =
            v_err.squaredNorm() / denom + lambda * p_err.squaredNorm() / denom;
        if (!std::isfinite(sample_loss))
            throw training_error("loss: non-finite loss at sample " + std::to_string(s),
                                 static_cast<long long>(s));
        res.loss += sample_loss * inv_batch;

        const double scale = 2.0 * inv_batch / denom;
        const Eigen::MatrixXd d_vel = scale * v_err;
        const Eigen::MatrixXd d_poses = (lambda * scale) * p_err;

        const Eigen::MatrixXd d_feat_up =
            detail::decoder_backward(params, dec_cache, d_vel, d_poses, res.grads);
        const Eigen::MatrixXd d_feat = detail::resample_backward(rs_cache, d_feat_up);
        detail::encoder_backward(params, sample.emg, enc_cache, d_feat, res.grads);
    }
    return res;
}

double loss_only(const NetworkParams& params, const std::vector<WindowSample>& batch,
                 double lambda, bool clamp_poses) {
    if (batch.empty()) throw validation_error("loss: empty batch");
    const ModelConfig& cfg = params.config;
    double loss = 0.0;
    for (size_t s = 0; s < batch.size(); ++s) {
        const WindowSample& sample = batch[s];
        check_sample(sample, cfg, s);
        const int n = static_cast<int>(sample.emg.cols());
        const FeatureSeq feat = encoder_forward(params, sample.emg);
        const FeatureSeq up = resample_linear(feat, n);
        DecoderState anchor;
        anchor.h = Eigen::VectorXd::Zero(cfg.lstm_hidden);
        anchor.c = Eigen::VectorXd::Zero(cfg.lstm_hidden);
        anchor.last_pose = HandPose(sample.theta0);
        const DecoderOutput out = decoder_forward(params, up, anchor, clamp_poses);
        const Eigen::MatrixXd v_gt = pose_deltas(sample.theta_gt, sample.theta0);
        const double denom = double(cfg.out_dof) * double(n);
        const double sample_loss = (out.velocities - v_gt).squaredNorm() / denom +
                                   lambda * (out.poses - sample.theta_gt).squaredNorm() / denom;
        if (!std::isfinite(sample_loss))
            throw training_error("loss: non-finite loss at sample " + std::to_string(s),
                                 static_cast<long long>(s));
        loss += sample_loss / double(batch.size());
    }
    return loss;
}

}  // namespace emgpose

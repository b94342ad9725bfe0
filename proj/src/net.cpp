#include "emgpose/net.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "net_internal.hpp"

namespace emgpose {

using detail::kLnEps;

ModelConfig::ModelConfig() {
    const KinematicModel hand = make_canonical_hand();
    limit_lo = hand.limits_lo();
    limit_hi = hand.limits_hi();
}

void ModelConfig::validate() const {
    if (in_channels != 8) throw validation_error("config: in_channels must be 8");
    if (out_dof != kNumJoints) throw validation_error("config: out_dof must be 22");
    if (conv_strides[0] * conv_strides[1] != 4)
        throw validation_error("config: conv strides must multiply to 4");
    if (feat_channels % tds_groups != 0)
        throw validation_error("config: feat_channels must divide into tds_groups");
    if (conv_kernel < 1 || tds_kernel < 1 || tds_kernel % 2 == 0)
        throw validation_error("config: kernels must be positive (tds kernel odd)");
    if (lstm_hidden < 1 || mlp_hidden < 1 || ff_hidden < 1 || chunk_len < 1)
        throw validation_error("config: layer sizes must be positive");
    for (int i = 0; i < kNumJoints; ++i)
        if (!(limit_lo[i] < limit_hi[i])) throw validation_error("config: bad joint limits");
}

// ---------------------------------------------------------------------------
// Parameter containers

NetworkParams NetworkParams::zeros(const ModelConfig& cfg) {
    cfg.validate();
    NetworkParams p;
    p.config = cfg;
    auto conv = [](int out_c, int in_c, int k) {
        ConvBlockParams c;
        c.w = Eigen::MatrixXd::Zero(out_c, in_c * k);
        c.b = Eigen::VectorXd::Zero(out_c);
        c.ln_gain = Eigen::VectorXd::Zero(out_c);
        c.ln_bias = Eigen::VectorXd::Zero(out_c);
        return c;
    };
    p.conv1 = conv(cfg.conv_mid_channels, cfg.in_channels, cfg.conv_kernel);
    p.conv2 = conv(cfg.feat_channels, cfg.conv_mid_channels, cfg.conv_kernel);
    p.tds.resize(cfg.tds_stages);
    for (auto& s : p.tds) {
        s.conv_w = Eigen::MatrixXd::Zero(cfg.tds_groups, cfg.tds_groups * cfg.tds_kernel);
        s.conv_b = Eigen::VectorXd::Zero(cfg.tds_groups);
        s.ln1_gain = Eigen::VectorXd::Zero(cfg.feat_channels);
        s.ln1_bias = Eigen::VectorXd::Zero(cfg.feat_channels);
        s.ff1_w = Eigen::MatrixXd::Zero(cfg.ff_hidden, cfg.feat_channels);
        s.ff1_b = Eigen::VectorXd::Zero(cfg.ff_hidden);
        s.ff2_w = Eigen::MatrixXd::Zero(cfg.feat_channels, cfg.ff_hidden);
        s.ff2_b = Eigen::VectorXd::Zero(cfg.feat_channels);
        s.ln2_gain = Eigen::VectorXd::Zero(cfg.feat_channels);
        s.ln2_bias = Eigen::VectorXd::Zero(cfg.feat_channels);
    }
    p.lstm.w_ih = Eigen::MatrixXd::Zero(4 * cfg.lstm_hidden, cfg.lstm_input());
    p.lstm.w_hh = Eigen::MatrixXd::Zero(4 * cfg.lstm_hidden, cfg.lstm_hidden);
    p.lstm.b_ih = Eigen::VectorXd::Zero(4 * cfg.lstm_hidden);
    p.lstm.b_hh = Eigen::VectorXd::Zero(4 * cfg.lstm_hidden);
    p.mlp1_w = Eigen::MatrixXd::Zero(cfg.mlp_hidden, cfg.lstm_hidden);
    p.mlp1_b = Eigen::VectorXd::Zero(cfg.mlp_hidden);
    p.mlp2_w = Eigen::MatrixXd::Zero(cfg.out_dof, cfg.mlp_hidden);
    p.mlp2_b = Eigen::VectorXd::Zero(cfg.out_dof);
    p.rest_pose = 0.5 * (cfg.limit_lo + cfg.limit_hi);
    return p;
}

NetworkParams NetworkParams::random(const ModelConfig& cfg, std::uint64_t seed) {
    NetworkParams p = zeros(cfg);
    std::mt19937_64 rng(seed);
    auto fill = [&rng](Eigen::MatrixXd& m, double scale) {
        std::uniform_real_distribution<double> dist(-scale, scale);
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = dist(rng);
    };
    auto fillv = [&rng](Eigen::VectorXd& v, double scale) {
        std::uniform_real_distribution<double> dist(-scale, scale);
        for (Eigen::Index r = 0; r < v.size(); ++r) v[r] = dist(rng);
    };
    fill(p.conv1.w, 1.0 / std::sqrt(double(cfg.in_channels * cfg.conv_kernel)));
    p.conv1.ln_gain.setOnes();
    fill(p.conv2.w, 1.0 / std::sqrt(double(cfg.conv_mid_channels * cfg.conv_kernel)));
    p.conv2.ln_gain.setOnes();
    for (auto& s : p.tds) {
        fill(s.conv_w, 1.0 / std::sqrt(double(cfg.tds_groups * cfg.tds_kernel)));
        s.ln1_gain.setOnes();
        fill(s.ff1_w, 1.0 / std::sqrt(double(cfg.feat_channels)));
        fillv(s.ff1_b, 1.0 / std::sqrt(double(cfg.feat_channels)));
        fill(s.ff2_w, 1.0 / std::sqrt(double(cfg.ff_hidden)));
        fillv(s.ff2_b, 1.0 / std::sqrt(double(cfg.ff_hidden)));
        s.ln2_gain.setOnes();
    }
    const double ls = 1.0 / std::sqrt(double(cfg.lstm_hidden));
    fill(p.lstm.w_ih, ls);
    fill(p.lstm.w_hh, ls);
    fillv(p.lstm.b_ih, ls);
    fillv(p.lstm.b_hh, ls);
    p.lstm.b_ih.segment(cfg.lstm_hidden, cfg.lstm_hidden).array() += 1.0;  // forget gate
    fill(p.mlp1_w, 1.0 / std::sqrt(double(cfg.lstm_hidden)));
    fillv(p.mlp1_b, 1.0 / std::sqrt(double(cfg.lstm_hidden)));
    // Small output head: keeps early velocity predictions (and the integrated
    // random walk) inside the limit box.
    fill(p.mlp2_w, 0.05 / std::sqrt(double(cfg.mlp_hidden)));
    p.mlp2_b.setZero();
    return p;
}

template <typename Params, typename Span>
static std::vector<Span> spans_impl(Params& p) {
    std::vector<Span> s;
    auto add = [&s](auto& arr) { s.emplace_back(arr.data(), static_cast<std::size_t>(arr.size())); };
    add(p.conv1.w);
    add(p.conv1.b);
    add(p.conv1.ln_gain);
    add(p.conv1.ln_bias);
    add(p.conv2.w);
    add(p.conv2.b);
    add(p.conv2.ln_gain);
    add(p.conv2.ln_bias);
    for (auto& t : p.tds) {
        add(t.conv_w);
        add(t.conv_b);
        add(t.ln1_gain);
        add(t.ln1_bias);
        add(t.ff1_w);
        add(t.ff1_b);
        add(t.ff2_w);
        add(t.ff2_b);
        add(t.ln2_gain);
        add(t.ln2_bias);
    }
    add(p.lstm.w_ih);
    add(p.lstm.w_hh);
    add(p.lstm.b_ih);
    add(p.lstm.b_hh);
    add(p.mlp1_w);
    add(p.mlp1_b);
    add(p.mlp2_w);
    add(p.mlp2_b);
    add(p.rest_pose);
    return s;
}

std::vector<std::pair<double*, std::size_t>> param_spans(NetworkParams& p) {
    return spans_impl<NetworkParams, std::pair<double*, std::size_t>>(p);
}
std::vector<std::pair<const double*, std::size_t>> param_spans(const NetworkParams& p) {
    return spans_impl<const NetworkParams, std::pair<const double*, std::size_t>>(p);
}
std::size_t param_count(const NetworkParams& p) {
    std::size_t n = 0;
    for (const auto& [ptr, len] : param_spans(p)) n += len;
    return n;
}

DecoderState initial_state(const NetworkParams& params) {
    DecoderState s;
    s.h = Eigen::VectorXd::Zero(params.config.lstm_hidden);
    s.c = Eigen::VectorXd::Zero(params.config.lstm_hidden);
    s.last_pose = HandPose(params.rest_pose);
    return s;
}

// ---------------------------------------------------------------------------
// Layer primitives

namespace {

// Layer norm over rows (channels), one column at a time. A constant column
// maps to zero before gain/bias.
void layer_norm(const Eigen::MatrixXd& a, const Eigen::VectorXd& gain, const Eigen::VectorXd& bias,
                Eigen::MatrixXd& n, Eigen::VectorXd& inv_std, Eigen::MatrixXd& out) {
    const Eigen::Index rows = a.rows(), cols = a.cols();
    n.resize(rows, cols);
    out.resize(rows, cols);
    inv_std.resize(cols);
    for (Eigen::Index t = 0; t < cols; ++t) {
        const double mu = a.col(t).mean();
        const double var = (a.col(t).array() - mu).square().sum() / double(rows);
        const double inv = 1.0 / std::sqrt(var + kLnEps);
        inv_std[t] = inv;
        n.col(t) = (a.col(t).array() - mu) * inv;
        out.col(t) = gain.cwiseProduct(n.col(t)) + bias;
    }
}

// Strided causal conv via im2col: cols((c*k+kk), t) = x(c, t*stride + kk - (k-1)).
void im2col_causal(const Eigen::MatrixXd& x, int kernel, int stride, Eigen::MatrixXd& cols) {
    const int c_in = static_cast<int>(x.rows());
    const int t_out = static_cast<int>(x.cols()) / stride;
    const int pad = kernel - 1;
    cols.setZero(c_in * kernel, t_out);
    for (int t = 0; t < t_out; ++t)
        for (int kk = 0; kk < kernel; ++kk) {
            const int src = t * stride + kk - pad;
            if (src < 0) continue;
            for (int c = 0; c < c_in; ++c) cols(c * kernel + kk, t) = x(c, src);
        }
}

Eigen::MatrixXd conv_block_forward(const ConvBlockParams& p, const Eigen::MatrixXd& x, int kernel,
                                   int stride, detail::ConvCache& cache) {
    cache.t_in = static_cast<int>(x.cols());
    im2col_causal(x, kernel, stride, cache.cols);
    cache.y = (p.w * cache.cols).colwise() + p.b;
    const Eigen::MatrixXd a = cache.y.cwiseMax(0.0);
    Eigen::MatrixXd out;
    layer_norm(a, p.ln_gain, p.ln_bias, cache.n, cache.inv_std, out);
    return out;
}

// Centered same-padding im2col over one (groups x L) slice.
void im2col_same(const Eigen::MatrixXd& slice, int kernel, Eigen::MatrixXd& cols) {
    const int g = static_cast<int>(slice.rows());
    const int len = static_cast<int>(slice.cols());
    const int off = (kernel - 1) / 2;
    cols.setZero(g * kernel, len);
    for (int t = 0; t < len; ++t)
        for (int kk = 0; kk < kernel; ++kk) {
            const int src = t + kk - off;
            if (src < 0 || src >= len) continue;
            for (int c = 0; c < g; ++c) cols(c * kernel + kk, t) = slice(c, src);
        }
}

}  // namespace

namespace detail {

FeatureSeq tds_stage_forward_cached(const ModelConfig& cfg, const TdsStageParams& stage,
                                    const FeatureSeq& x, TdsCache& cache) {
    if (x.values.rows() != cfg.feat_channels)
        throw validation_error("tds: expected " + std::to_string(cfg.feat_channels) + " channels");
    if (!x.values.allFinite()) throw validation_error("tds: non-finite input");
    const int g = cfg.tds_groups;
    const int sub = cfg.feat_channels / g;
    const int len = static_cast<int>(x.values.cols());

    cache.x = x.values;
    cache.cols.resize(sub);
    cache.ypre.resize(cfg.feat_channels, len);

    // Row layout: channel c = group * sub + s. Each sub-channel slice is a
    // (groups x len) image convolved over time with weights shared across
    // slices.
    Eigen::MatrixXd slice(g, len);
    for (int s = 0; s < sub; ++s) {
        for (int gg = 0; gg < g; ++gg) slice.row(gg) = x.values.row(gg * sub + s);
        im2col_same(slice, cfg.tds_kernel, cache.cols[s]);
        const Eigen::MatrixXd y = (stage.conv_w * cache.cols[s]).colwise() + stage.conv_b;
        for (int gg = 0; gg < g; ++gg) cache.ypre.row(gg * sub + s) = y.row(gg);
    }

    const Eigen::MatrixXd u = cache.ypre.cwiseMax(0.0) + x.values;  // residual
    Eigen::MatrixXd v;
    layer_norm(u, stage.ln1_gain, stage.ln1_bias, cache.n1, cache.inv1, v);
    cache.v = v;

    cache.f1 = (stage.ff1_w * v).colwise() + stage.ff1_b;
    cache.hr = cache.f1.cwiseMax(0.0);
    const Eigen::MatrixXd p = ((stage.ff2_w * cache.hr).colwise() + stage.ff2_b) + v;  // residual
    Eigen::MatrixXd out;
    layer_norm(p, stage.ln2_gain, stage.ln2_bias, cache.n2, cache.inv2, out);
    return FeatureSeq{out, x.time_scale};
}

FeatureSeq encoder_forward_cached(const NetworkParams& params, const EmgWindow& emg,
                                  EncoderCache& cache) {
    const ModelConfig& cfg = params.config;
    if (emg.rows() != cfg.in_channels)
        throw validation_error("encoder: expected " + std::to_string(cfg.in_channels) +
                               " EMG channels, got " + std::to_string(emg.rows()));
    const int t = static_cast<int>(emg.cols());
    if (t % 4 != 0) throw validation_error("encoder: window length must be divisible by 4");
    if (t < cfg.min_input_len())
        throw validation_error("encoder: window shorter than the receptive field");
    if (!emg.allFinite()) throw validation_error("encoder: non-finite EMG input");

    const Eigen::MatrixXd z1 =
        conv_block_forward(params.conv1, emg, cfg.conv_kernel, cfg.conv_strides[0], cache.c1);
    const Eigen::MatrixXd z2 =
        conv_block_forward(params.conv2, z1, cfg.conv_kernel, cfg.conv_strides[1], cache.c2);

    FeatureSeq feat{z2, cfg.conv_strides[0] * cfg.conv_strides[1]};
    cache.tds.resize(params.tds.size());
    for (size_t i = 0; i < params.tds.size(); ++i)
        feat = tds_stage_forward_cached(cfg, params.tds[i], feat, cache.tds[i]);
    return feat;
}

FeatureSeq resample_linear_cached(const FeatureSeq& x, int target_len, ResampleCache& cache) {
    if (target_len < 1) throw validation_error("resample: target length must be >= 1");
    const int len = static_cast<int>(x.values.cols());
    if (len < 2) throw validation_error("resample: input length must be >= 2");

    cache.in_len = len;
    cache.i0.resize(target_len);
    cache.alpha.resize(target_len);
    FeatureSeq out;
    out.values.resize(x.values.rows(), target_len);
    out.time_scale = 1;
    for (int j = 0; j < target_len; ++j) {
        double pos = (target_len == 1) ? 0.0 : double(j) * double(len - 1) / double(target_len - 1);
        int i0 = static_cast<int>(pos);
        double a = pos - i0;
        if (i0 >= len - 1) {
            i0 = len - 1;
            a = 0.0;
        }
        cache.i0[j] = i0;
        cache.alpha[j] = a;
        if (a == 0.0)
            out.values.col(j) = x.values.col(i0);
        else
            out.values.col(j) = (1.0 - a) * x.values.col(i0) + a * x.values.col(i0 + 1);
    }
    return out;
}

DecoderOutput decoder_forward_cached(const NetworkParams& params, const FeatureSeq& feats,
                                     const DecoderState& state, bool clamp_poses,
                                     DecoderCache& cache) {
    const ModelConfig& cfg = params.config;
    if (feats.values.rows() != cfg.feat_channels)
        throw validation_error("decoder: feature channel mismatch");
    if (!feats.values.allFinite()) throw validation_error("decoder: non-finite features");
    const int n = static_cast<int>(feats.values.cols());
    const int hid = cfg.lstm_hidden;
    const int in = cfg.lstm_input();

    cache.x.resize(in, n);
    cache.gi.resize(hid, n);
    cache.gf.resize(hid, n);
    cache.gg.resize(hid, n);
    cache.go.resize(hid, n);
    cache.c.resize(hid, n);
    cache.tanh_c.resize(hid, n);
    cache.h.resize(hid, n);
    cache.f1m.resize(cfg.mlp_hidden, n);
    cache.m.resize(cfg.mlp_hidden, n);
    cache.clamp_pass.setOnes(cfg.out_dof, n);
    cache.h0 = state.h;
    cache.c0 = state.c;
    cache.theta_prev0 = state.last_pose.angles;

    DecoderOutput out;
    out.poses.resize(cfg.out_dof, n);
    out.velocities.resize(cfg.out_dof, n);

    Eigen::VectorXd h = state.h, c = state.c;
    if (h.size() != hid || c.size() != hid)
        throw validation_error("decoder: state size mismatch");
    JointVector theta = state.last_pose.angles;
    Eigen::VectorXd gates(4 * hid);

    for (int t = 0; t < n; ++t) {
        cache.x.col(t).head(cfg.feat_channels) = feats.values.col(t);
        cache.x.col(t).tail(cfg.out_dof) = theta;

        gates.noalias() = params.lstm.w_ih * cache.x.col(t);
        gates.noalias() += params.lstm.w_hh * h;
        gates += params.lstm.b_ih + params.lstm.b_hh;

        auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
        for (int j = 0; j < hid; ++j) {
            cache.gi(j, t) = sig(gates[j]);
            cache.gf(j, t) = sig(gates[hid + j]);
            cache.gg(j, t) = std::tanh(gates[2 * hid + j]);
            cache.go(j, t) = sig(gates[3 * hid + j]);
        }
        c = cache.gf.col(t).cwiseProduct(c) + cache.gi.col(t).cwiseProduct(cache.gg.col(t));
        cache.c.col(t) = c;
        cache.tanh_c.col(t) = c.array().tanh();
        h = cache.go.col(t).cwiseProduct(cache.tanh_c.col(t));
        cache.h.col(t) = h;

        cache.f1m.col(t).noalias() = params.mlp1_w * h;
        cache.f1m.col(t) += params.mlp1_b;
        cache.m.col(t) = cache.f1m.col(t).cwiseMax(0.0);
        Eigen::VectorXd vel = params.mlp2_w * cache.m.col(t) + params.mlp2_b;
        out.velocities.col(t) = vel;

        JointVector raw = theta + vel;
        if (clamp_poses) {
            for (int j = 0; j < cfg.out_dof; ++j) {
                const double clamped = std::clamp(raw[j], cfg.limit_lo[j], cfg.limit_hi[j]);
                if (clamped != raw[j]) cache.clamp_pass(j, t) = 0.0;
                raw[j] = clamped;
            }
        }
        theta = raw;
        out.poses.col(t) = theta;
    }

    out.state.h = h;
    out.state.c = c;
    out.state.last_pose = HandPose(theta);
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Public forward API

FeatureSeq encoder_forward(const NetworkParams& params, const EmgWindow& emg) {
    detail::EncoderCache cache;
    return detail::encoder_forward_cached(params, emg, cache);
}

FeatureSeq tds_stage_forward(const ModelConfig& cfg, const TdsStageParams& stage,
                             const FeatureSeq& x) {
    detail::TdsCache cache;
    return detail::tds_stage_forward_cached(cfg, stage, x, cache);
}

FeatureSeq resample_linear(const FeatureSeq& x, int target_len) {
    detail::ResampleCache cache;
    return detail::resample_linear_cached(x, target_len, cache);
}

DecoderOutput decoder_forward(const NetworkParams& params, const FeatureSeq& feats,
                              const DecoderState& state, bool clamp_poses) {
    detail::DecoderCache cache;
    return detail::decoder_forward_cached(params, feats, state, clamp_poses, cache);
}

ForwardResult model_forward(const NetworkParams& params, const EmgWindow& emg,
                            const DecoderState& state, int emit_len, bool clamp_poses) {
    const int t = static_cast<int>(emg.cols());
    if (emit_len <= 0) emit_len = t;
    if (emit_len > t) throw validation_error("model_forward: emit_len exceeds window length");

    const FeatureSeq feat = encoder_forward(params, emg);
    const FeatureSeq up = resample_linear(feat, t);
    FeatureSeq tail;
    tail.values = up.values.rightCols(emit_len);
    tail.time_scale = 1;
    DecoderOutput dec = decoder_forward(params, tail, state, clamp_poses);

    ForwardResult res;
    res.chunk = std::move(dec.poses);
    res.state = std::move(dec.state);
    return res;
}

// ---------------------------------------------------------------------------
// emgpose-net/1 serialization

namespace {

constexpr char kMagic[4] = {'E', 'P', 'N', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::istream& is, T& v, const char* section) {
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is)
        throw io_error(std::string("net params: truncated while reading ") + section,
                       static_cast<long long>(is.gcount()));
}

}  // namespace

void save_params(const NetworkParams& params, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("cannot write params file: " + path);
    os.write(kMagic, 4);
    write_pod(os, kVersion);
    const ModelConfig& c = params.config;
    for (int v : {c.in_channels, c.conv_mid_channels, c.feat_channels, c.conv_kernel,
                  c.conv_strides[0], c.conv_strides[1], c.tds_stages, c.tds_kernel, c.tds_groups,
                  c.ff_hidden, c.lstm_hidden, c.mlp_hidden, c.out_dof, c.chunk_len})
        write_pod(os, static_cast<std::int32_t>(v));
    os.write(reinterpret_cast<const char*>(c.limit_lo.data()), kNumJoints * sizeof(double));
    os.write(reinterpret_cast<const char*>(c.limit_hi.data()), kNumJoints * sizeof(double));
    write_pod(os, static_cast<std::uint64_t>(param_count(params)));
    for (const auto& [ptr, len] : param_spans(params))
        os.write(reinterpret_cast<const char*>(ptr), static_cast<std::streamsize>(len * sizeof(double)));
    if (!os) throw io_error("failed writing params file: " + path);
}

NetworkParams load_params(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw io_error("cannot open params file: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw io_error("net params: bad magic (not an emgpose-net/1 file)", 0);
    std::uint32_t version = 0;
    read_pod(is, version, "version");
    if (version != kVersion)
        throw io_error("net params: unsupported version " + std::to_string(version), 4);

    ModelConfig c;
    auto read_i32 = [&is](const char* what) {
        std::int32_t v;
        read_pod(is, v, what);
        return static_cast<int>(v);
    };
    c.in_channels = read_i32("config");
    c.conv_mid_channels = read_i32("config");
    c.feat_channels = read_i32("config");
    c.conv_kernel = read_i32("config");
    c.conv_strides[0] = read_i32("config");
    c.conv_strides[1] = read_i32("config");
    c.tds_stages = read_i32("config");
    c.tds_kernel = read_i32("config");
    c.tds_groups = read_i32("config");
    c.ff_hidden = read_i32("config");
    c.lstm_hidden = read_i32("config");
    c.mlp_hidden = read_i32("config");
    c.out_dof = read_i32("config");
    c.chunk_len = read_i32("config");
    is.read(reinterpret_cast<char*>(c.limit_lo.data()), kNumJoints * sizeof(double));
    is.read(reinterpret_cast<char*>(c.limit_hi.data()), kNumJoints * sizeof(double));
    if (!is) throw io_error("net params: truncated in section 'limits'");

    NetworkParams p = NetworkParams::zeros(c);
    std::uint64_t total = 0;
    read_pod(is, total, "array count");
    if (total != param_count(p))
        throw io_error("net params: array count mismatch (file " + std::to_string(total) +
                       ", config " + std::to_string(param_count(p)) + ")");
    for (const auto& [ptr, len] : param_spans(p)) {
        is.read(reinterpret_cast<char*>(ptr), static_cast<std::streamsize>(len * sizeof(double)));
        if (!is) throw io_error("net params: truncated in section 'arrays'");
    }
    return p;
}

}  // namespace emgpose

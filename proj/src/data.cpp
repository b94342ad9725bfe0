#include "emgpose/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>

#include <json.hpp>

#include "emgpose/retarget.hpp"

namespace emgpose {

void Recording::validate() const {
    if (emg.rows() != 8) throw validation_error("recording: EMG must have 8 channels");
    if (poses.rows() != kNumJoints && poses.cols() > 0)
        throw validation_error("recording: poses must have 22 joints");
    if (static_cast<Eigen::Index>(emg_t_us.size()) != emg.cols())
        throw validation_error("recording: EMG timestamp count mismatch");
    if (static_cast<Eigen::Index>(pose_t_us.size()) != poses.cols())
        throw validation_error("recording: pose timestamp count mismatch");
    for (size_t i = 1; i < emg_t_us.size(); ++i)
        if (emg_t_us[i] <= emg_t_us[i - 1])
            throw validation_error("recording: EMG timestamps not strictly increasing");
    for (size_t i = 1; i < pose_t_us.size(); ++i)
        if (pose_t_us[i] <= pose_t_us[i - 1])
            throw validation_error("recording: pose timestamps not strictly increasing");
    if (emg.size() > 0 && (emg.minCoeff() < -1.0 - 1e-12 || emg.maxCoeff() > 1.0 + 1e-12))
        throw validation_error("recording: EMG values outside [-1, 1]");
    if (!emg.allFinite() || !poses.allFinite())
        throw validation_error("recording: non-finite values");
}

SyncedRecording synchronize(const Recording& rec) {
    rec.validate();
    if (rec.pose_t_us.empty() || rec.emg_t_us.empty())
        throw validation_error("synchronize: empty EMG or pose stream");

    const std::int64_t lo = rec.pose_t_us.front();
    const std::int64_t hi = rec.pose_t_us.back();

    SyncedRecording out;
    out.emg_rate = rec.emg_rate;
    out.subject = rec.subject;
    out.session = rec.session;
    out.task = rec.task;

    std::vector<Eigen::Index> keep;
    keep.reserve(rec.emg_t_us.size());
    for (size_t i = 0; i < rec.emg_t_us.size(); ++i) {
        if (rec.emg_t_us[i] < lo || rec.emg_t_us[i] > hi) continue;
        keep.push_back(static_cast<Eigen::Index>(i));
    }
    out.truncated_samples = static_cast<int>(rec.emg_t_us.size() - keep.size());

    const Eigen::Index m = static_cast<Eigen::Index>(keep.size());
    out.t_us.resize(m);
    out.emg.resize(8, m);
    out.poses.resize(kNumJoints, m);

    size_t seg = 0;  // pose interval index; timestamps are sorted
    for (Eigen::Index j = 0; j < m; ++j) {
        const std::int64_t t = rec.emg_t_us[keep[j]];
        out.t_us[j] = t;
        out.emg.col(j) = rec.emg.col(keep[j]);
        while (seg + 1 < rec.pose_t_us.size() && rec.pose_t_us[seg + 1] < t) ++seg;
        if (rec.pose_t_us[seg] == t || seg + 1 >= rec.pose_t_us.size()) {
            out.poses.col(j) = rec.poses.col(static_cast<Eigen::Index>(seg));
        } else {
            const std::int64_t t0 = rec.pose_t_us[seg];
            const std::int64_t t1 = rec.pose_t_us[seg + 1];
            if (t1 == t) {
                out.poses.col(j) = rec.poses.col(static_cast<Eigen::Index>(seg + 1));
            } else {
                const double a = double(t - t0) / double(t1 - t0);
                out.poses.col(j) = (1.0 - a) * rec.poses.col(static_cast<Eigen::Index>(seg)) +
                                   a * rec.poses.col(static_cast<Eigen::Index>(seg + 1));
            }
        }
    }
    return out;
}

std::vector<WindowSample> make_windows(const SyncedRecording& rec, int window, int stride,
                                       const JointVector& rest_pose) {
    const int n = static_cast<int>(rec.emg.cols());
    if (window < 1 || stride < 1) throw validation_error("make_windows: window/stride must be >= 1");
    if (window > n)
        throw validation_error("make_windows: window (" + std::to_string(window) +
                               ") exceeds recording length (" + std::to_string(n) + ")");
    const int count = (n - window) / stride + 1;
    std::vector<WindowSample> out;
    out.reserve(static_cast<size_t>(count));
    for (int k = 0; k < count; ++k) {
        const int start = k * stride;
        WindowSample s;
        s.emg = rec.emg.middleCols(start, window);
        s.theta_gt = rec.poses.middleCols(start, window);
        s.theta0 = (start == 0) ? rest_pose : JointVector(rec.poses.col(start - 1));
        out.push_back(std::move(s));
    }
    return out;
}

Eigen::MatrixXd velocity_labels(const Eigen::MatrixXd& theta_gt, const JointVector& theta0) {
    if (!theta_gt.allFinite()) throw validation_error("velocity_labels: non-finite poses");
    Eigen::MatrixXd v(theta_gt.rows(), theta_gt.cols());
    if (theta_gt.cols() == 0) return v;
    v.col(0) = theta_gt.col(0) - theta0;
    for (Eigen::Index t = 1; t < theta_gt.cols(); ++t)
        v.col(t) = theta_gt.col(t) - theta_gt.col(t - 1);
    return v;
}

// ---------------------------------------------------------------------------
// Synthetic generator

void SynthConfig::validate() const {
    if (n_synergies < 1) throw validation_error("synth: need at least one synergy");
    if (!(emg_rate > 0.0) || !(pose_rate > 0.0) || !(duration_s > 0.0))
        throw validation_error("synth: rates and duration must be positive");
    if (!(carrier_lo_hz > 0.0) || !(carrier_hi_hz <= emg_rate / 2.0) ||
        !(carrier_lo_hz < carrier_hi_hz))
        throw validation_error("synth: carrier band must lie inside (0, emg_rate/2)");
    if (synergy_to_pose.size() > 0 &&
        (synergy_to_pose.rows() != kNumJoints || synergy_to_pose.cols() != n_synergies))
        throw validation_error("synth: synergy_to_pose must be 22 x K");
    if (synergy_to_emg.size() > 0 &&
        (synergy_to_emg.rows() != 8 || synergy_to_emg.cols() != n_synergies))
        throw validation_error("synth: synergy_to_emg must be 8 x K");
    if (!synergy_to_pose.allFinite() || !synergy_to_emg.allFinite())
        throw validation_error("synth: non-finite mixing matrices");
    if (activation_amplitude < 0.0) throw validation_error("synth: negative amplitude");
}

namespace {

// Sum of a few slow sinusoids with unit analytic variance.
struct SynergyWave {
    std::vector<double> amp, freq_hz, phase;

    double value(double t) const {
        double v = 0.0;
        for (size_t j = 0; j < amp.size(); ++j)
            v += amp[j] * std::sin(2.0 * std::numbers::pi * freq_hz[j] * t + phase[j]);
        return v;
    }
    double derivative(double t) const {
        double v = 0.0;
        for (size_t j = 0; j < amp.size(); ++j) {
            const double w = 2.0 * std::numbers::pi * freq_hz[j];
            v += amp[j] * w * std::cos(w * t + phase[j]);
        }
        return v;
    }
};

// RBJ constant-skirt bandpass biquad.
struct Biquad {
    double b0, b1, b2, a1, a2;
    double z1 = 0.0, z2 = 0.0;

    static Biquad bandpass(double f0_hz, double bandwidth_hz, double rate_hz) {
        const double w0 = 2.0 * std::numbers::pi * f0_hz / rate_hz;
        const double q = f0_hz / bandwidth_hz;
        const double alpha = std::sin(w0) / (2.0 * q);
        const double a0 = 1.0 + alpha;
        Biquad f{};
        f.b0 = alpha / a0;
        f.b1 = 0.0;
        f.b2 = -alpha / a0;
        f.a1 = -2.0 * std::cos(w0) / a0;
        f.a2 = (1.0 - alpha) / a0;
        return f;
    }
    double step(double x) {
        const double y = b0 * x + z1;
        z1 = b1 * x - a1 * y + z2;
        z2 = b2 * x - a2 * y;
        return y;
    }
};

}  // namespace

Recording gen_synth(const SynthConfig& cfg, const KinematicModel& hand) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int k_syn = cfg.n_synergies;

    // Synergy activations.
    std::vector<SynergyWave> waves(static_cast<size_t>(k_syn));
    std::uniform_int_distribution<int> n_sin_dist(3, 5);
    for (auto& w : waves) {
        const int n_sin = n_sin_dist(rng);
        double power = 0.0;
        for (int j = 0; j < n_sin; ++j) {
            w.amp.push_back(0.5 + 0.5 * unif(rng));
            w.freq_hz.push_back(0.2 + 1.8 * unif(rng));
            w.phase.push_back(2.0 * std::numbers::pi * unif(rng));
            power += 0.5 * w.amp.back() * w.amp.back();
        }
        const double scale = cfg.activation_amplitude / std::sqrt(power);
        for (auto& a : w.amp) a *= scale;
    }

    // Mixing matrices. Pose rows are scaled so each joint's stddev is a fixed
    // fraction of its half-range.
    const JointVector mid = hand.mid_pose();
    const JointVector half_range = 0.5 * (hand.limits_hi() - hand.limits_lo());
    Eigen::MatrixXd s_pose = cfg.synergy_to_pose;
    if (s_pose.size() == 0) {
        s_pose.resize(kNumJoints, k_syn);
        for (int j = 0; j < kNumJoints; ++j)
            for (int k = 0; k < k_syn; ++k) s_pose(j, k) = gauss(rng);
        for (int j = 0; j < kNumJoints; ++j) {
            const double norm = s_pose.row(j).norm();
            if (norm > 0.0)
                s_pose.row(j) *= cfg.pose_range_fraction * half_range[j] / norm;
        }
    }
    Eigen::MatrixXd s_emg = cfg.synergy_to_emg;
    if (s_emg.size() == 0) {
        s_emg.resize(8, k_syn);
        for (int c = 0; c < 8; ++c)
            for (int k = 0; k < k_syn; ++k) s_emg(c, k) = gauss(rng);
    }

    const int n_emg = static_cast<int>(std::floor(cfg.duration_s * cfg.emg_rate));
    // Pose span must cover the EMG span so synchronize() keeps every sample.
    const double emg_end_s = double(n_emg - 1) / cfg.emg_rate;
    const int n_pose = static_cast<int>(std::floor(emg_end_s * cfg.pose_rate)) + 2;

    Recording rec;
    rec.emg_rate = cfg.emg_rate;
    rec.pose_rate = cfg.pose_rate;
    rec.subject = "synth";
    rec.session = "seed-" + std::to_string(cfg.seed);
    rec.task = cfg.task;

    // Pose trajectory through the safety pipeline: limit clamp, then the
    // collision clamp against the previous safe pose.
    rec.pose_t_us.resize(static_cast<size_t>(n_pose));
    rec.poses.resize(kNumJoints, n_pose);
    HandPose prev_safe(mid);
    {
        const CollisionResult rest_check = collision_free(hand, prev_safe);
        if (!rest_check.free)
            throw state_error("gen_synth: mid-range pose is not collision-free");
    }
    Eigen::VectorXd act(k_syn);
    for (int i = 0; i < n_pose; ++i) {
        const double t = double(i) / cfg.pose_rate;
        rec.pose_t_us[static_cast<size_t>(i)] = std::llround(t * 1e6);
        for (int k = 0; k < k_syn; ++k) act[k] = waves[static_cast<size_t>(k)].value(t);
        HandPose raw(mid + s_pose * act);
        HandPose clamped = clamp_limits(hand, raw);
        if (!collision_free(hand, clamped).free)
            clamped = clamp_to_safe_manifold(hand, clamped, prev_safe);
        prev_safe = clamped;
        rec.poses.col(i) = clamped.angles;
    }

    // EMG: per-channel rectified-synergy envelope times a band-limited
    // carrier, plus sensor noise, renormalized to [-1, 1].
    rec.emg_t_us.resize(static_cast<size_t>(n_emg));
    rec.emg.resize(8, n_emg);
    const double f0 = std::sqrt(cfg.carrier_lo_hz * cfg.carrier_hi_hz);
    const double bw = cfg.carrier_hi_hz - cfg.carrier_lo_hz;
    for (int c = 0; c < 8; ++c) {
        Biquad filt = Biquad::bandpass(f0, bw, cfg.emg_rate);
        Eigen::VectorXd carrier(n_emg);
        for (int i = 0; i < n_emg; ++i) carrier[i] = filt.step(gauss(rng));
        const double cstd = std::sqrt(carrier.squaredNorm() / double(n_emg));
        if (cstd > 0.0) carrier /= cstd;

        Eigen::VectorXd raw(n_emg);
        for (int i = 0; i < n_emg; ++i) {
            const double t = double(i) / cfg.emg_rate;
            double env = 0.0;
            for (int k = 0; k < k_syn; ++k)
                env += std::abs(s_emg(c, k)) * std::abs(waves[static_cast<size_t>(k)].derivative(t));
            raw[i] = env * carrier[i];
        }
        const double sig_power = raw.squaredNorm() / double(n_emg);
        const double noise_std =
            std::sqrt(std::max(sig_power, 1e-8) * std::pow(10.0, -cfg.noise_snr_db / 10.0));
        for (int i = 0; i < n_emg; ++i) raw[i] += noise_std * gauss(rng);

        const double peak = raw.cwiseAbs().maxCoeff();
        if (peak > 0.0) raw /= peak;
        rec.emg.row(c) = raw.transpose();
    }
    for (int i = 0; i < n_emg; ++i)
        rec.emg_t_us[static_cast<size_t>(i)] = std::llround(double(i) / cfg.emg_rate * 1e6);

    rec.validate();
    return rec;
}

// ---------------------------------------------------------------------------
// emgpose-rec/1 binary container

namespace {

constexpr char kMagic[4] = {'E', 'P', 'R', 'C'};
constexpr std::uint32_t kVersion = 1;

void write_bytes(std::ostream& os, const void* p, std::size_t n) {
    os.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void read_section(std::istream& is, void* p, std::size_t n, const char* section) {
    is.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!is)
        throw io_error(std::string("recording: truncated in section '") + section + "'",
                       static_cast<long long>(is.gcount()));
}

void write_string(std::ostream& os, const std::string& s) {
    const std::uint32_t n = static_cast<std::uint32_t>(s.size());
    write_bytes(os, &n, sizeof(n));
    write_bytes(os, s.data(), s.size());
}

std::string read_string(std::istream& is, const char* section) {
    std::uint32_t n = 0;
    read_section(is, &n, sizeof(n), section);
    if (n > (1u << 20)) throw io_error("recording: implausible string length");
    std::string s(n, '\0');
    read_section(is, s.data(), n, section);
    return s;
}

}  // namespace

void save_recording(const Recording& rec, const std::string& path) {
    rec.validate();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("cannot write recording: " + path);
    write_bytes(os, kMagic, 4);
    write_bytes(os, &kVersion, sizeof(kVersion));
    write_bytes(os, &rec.emg_rate, sizeof(double));
    write_bytes(os, &rec.pose_rate, sizeof(double));
    write_string(os, rec.subject);
    write_string(os, rec.session);
    write_string(os, rec.task);
    const std::uint64_t n_emg = static_cast<std::uint64_t>(rec.emg.cols());
    const std::uint64_t n_pose = static_cast<std::uint64_t>(rec.poses.cols());
    write_bytes(os, &n_emg, sizeof(n_emg));
    write_bytes(os, &n_pose, sizeof(n_pose));
    write_bytes(os, rec.emg_t_us.data(), rec.emg_t_us.size() * sizeof(std::int64_t));
    write_bytes(os, rec.emg.data(), static_cast<std::size_t>(rec.emg.size()) * sizeof(double));
    write_bytes(os, rec.pose_t_us.data(), rec.pose_t_us.size() * sizeof(std::int64_t));
    write_bytes(os, rec.poses.data(), static_cast<std::size_t>(rec.poses.size()) * sizeof(double));
    if (!os) throw io_error("failed writing recording: " + path);
}

Recording load_recording(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw io_error("cannot open recording: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw io_error("recording: bad magic (not an emgpose-rec/1 file)", 0);
    std::uint32_t version = 0;
    read_section(is, &version, sizeof(version), "version");
    if (version != kVersion)
        throw io_error("recording: unsupported version " + std::to_string(version), 4);

    Recording rec;
    read_section(is, &rec.emg_rate, sizeof(double), "rates");
    read_section(is, &rec.pose_rate, sizeof(double), "rates");
    rec.subject = read_string(is, "meta");
    rec.session = read_string(is, "meta");
    rec.task = read_string(is, "meta");
    std::uint64_t n_emg = 0, n_pose = 0;
    read_section(is, &n_emg, sizeof(n_emg), "counts");
    read_section(is, &n_pose, sizeof(n_pose), "counts");
    if (n_emg > (1ull << 32) || n_pose > (1ull << 32))
        throw io_error("recording: implausible sample counts");

    rec.emg_t_us.resize(n_emg);
    rec.emg.resize(8, static_cast<Eigen::Index>(n_emg));
    rec.pose_t_us.resize(n_pose);
    rec.poses.resize(kNumJoints, static_cast<Eigen::Index>(n_pose));
    read_section(is, rec.emg_t_us.data(), n_emg * sizeof(std::int64_t), "emg_t");
    read_section(is, rec.emg.data(), n_emg * 8 * sizeof(double), "emg");
    read_section(is, rec.pose_t_us.data(), n_pose * sizeof(std::int64_t), "pose_t");
    read_section(is, rec.poses.data(), n_pose * kNumJoints * sizeof(double), "poses");
    rec.validate();
    return rec;
}

// ---------------------------------------------------------------------------
// JSONL mirror

using nlohmann::json;

void save_recording_jsonl(const Recording& rec, const std::string& path) {
    rec.validate();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("cannot write recording: " + path);
    json header = {{"format", "emgpose-rec/1"},
                   {"emg_rate", rec.emg_rate},
                   {"pose_rate", rec.pose_rate},
                   {"subject", rec.subject},
                   {"session", rec.session},
                   {"task", rec.task}};
    os << header.dump() << "\n";

    size_t ie = 0, ip = 0;
    const size_t ne = rec.emg_t_us.size(), np = rec.pose_t_us.size();
    while (ie < ne || ip < np) {
        json line;
        const bool take_emg =
            ie < ne && (ip >= np || rec.emg_t_us[ie] <= rec.pose_t_us[ip]);
        const std::int64_t t = take_emg ? rec.emg_t_us[ie] : rec.pose_t_us[ip];
        line["t_us"] = t;
        if (ie < ne && rec.emg_t_us[ie] == t) {
            auto arr = json::array();
            for (int c = 0; c < 8; ++c) arr.push_back(rec.emg(c, static_cast<Eigen::Index>(ie)));
            line["emg"] = arr;
            ++ie;
        }
        if (ip < np && rec.pose_t_us[ip] == t) {
            auto arr = json::array();
            for (int j = 0; j < kNumJoints; ++j)
                arr.push_back(rec.poses(j, static_cast<Eigen::Index>(ip)));
            line["pose"] = arr;
            ++ip;
        }
        os << line.dump() << "\n";
    }
    if (!os) throw io_error("failed writing recording: " + path);
}

Recording load_recording_jsonl(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw io_error("cannot open recording: " + path);
    Recording rec;
    std::vector<Eigen::VectorXd> emg_cols, pose_cols;
    std::string line;
    size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw io_error("recording jsonl line " + std::to_string(line_no) + ": " + e.what());
        }
        if (j.contains("format")) {
            if (j["format"] != "emgpose-rec/1")
                throw io_error("recording jsonl: unsupported format tag");
            rec.emg_rate = j.value("emg_rate", rec.emg_rate);
            rec.pose_rate = j.value("pose_rate", rec.pose_rate);
            rec.subject = j.value("subject", "");
            rec.session = j.value("session", "");
            rec.task = j.value("task", "");
            continue;
        }
        const std::int64_t t = j.at("t_us").get<std::int64_t>();
        if (j.contains("emg")) {
            const auto& arr = j["emg"];
            if (arr.size() != 8)
                throw io_error("recording jsonl line " + std::to_string(line_no) +
                               ": emg must have 8 channels");
            Eigen::VectorXd v(8);
            for (int c = 0; c < 8; ++c) v[c] = arr[static_cast<size_t>(c)].get<double>();
            rec.emg_t_us.push_back(t);
            emg_cols.push_back(v);
        }
        if (j.contains("pose")) {
            const auto& arr = j["pose"];
            if (arr.size() != kNumJoints)
                throw io_error("recording jsonl line " + std::to_string(line_no) +
                               ": pose must have 22 joints");
            Eigen::VectorXd v(kNumJoints);
            for (int c = 0; c < kNumJoints; ++c) v[c] = arr[static_cast<size_t>(c)].get<double>();
            rec.pose_t_us.push_back(t);
            pose_cols.push_back(v);
        }
    }
    rec.emg.resize(8, static_cast<Eigen::Index>(emg_cols.size()));
    for (size_t i = 0; i < emg_cols.size(); ++i) rec.emg.col(static_cast<Eigen::Index>(i)) = emg_cols[i];
    rec.poses.resize(kNumJoints, static_cast<Eigen::Index>(pose_cols.size()));
    for (size_t i = 0; i < pose_cols.size(); ++i)
        rec.poses.col(static_cast<Eigen::Index>(i)) = pose_cols[i];
    rec.validate();
    return rec;
}

}  // namespace emgpose

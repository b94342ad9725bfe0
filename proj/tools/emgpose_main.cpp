// emgpose: synthetic-data generation, training, evaluation, retargeting and
// streaming inference as one binary. Flags override --config JSON values.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>

#include "emgpose/data.hpp"
#include "emgpose/hand_model.hpp"
#include "emgpose/net.hpp"
#include "emgpose/report.hpp"
#include "emgpose/retarget.hpp"
#include "emgpose/stream.hpp"

using nlohmann::json;
using namespace emgpose;

namespace {

struct CommonOpts {
    std::string config_path;
    json config = json::object();

    void load() {
        if (config_path.empty()) return;
        std::ifstream is(config_path);
        if (!is) throw io_error("cannot open config: " + config_path);
        try {
            is >> config;
        } catch (const json::parse_error& e) {
            throw io_error("config json: " + std::string(e.what()));
        }
    }

    // Flag wins when the user passed it; otherwise the config value; otherwise
    // the compiled default already stored in `value`.
    template <typename T>
    void merge(const CLI::Option* opt, const char* key, T& value) const {
        if (opt->count() > 0) return;
        if (config.contains(key)) value = config.at(key).get<T>();
    }
};

Recording load_recording_any(const std::string& path) {
    if (path.size() >= 6 && path.substr(path.size() - 6) == ".jsonl")
        return load_recording_jsonl(path);
    return load_recording(path);
}

std::string sibling_jsonl(const std::string& path) {
    const auto dot = path.find_last_of('.');
    return (dot == std::string::npos ? path : path.substr(0, dot)) + ".jsonl";
}

KinematicModel load_hand(const std::string& model_path) {
    return model_path.empty() ? make_canonical_hand() : load_model(model_path);
}

json per_joint_json(const KinematicModel& hand, const JointVector& v) {
    json j = json::object();
    for (int i = 0; i < kNumJoints; ++i) j[hand.joints[i].name] = v[i];
    return j;
}

json physical_disclosure() {
    return {{"reproduced", false},
            {"note", "Grasp success/drop rates and long-horizon task metrics require the "
                     "physical hand and teleoperation rig; they are not measured here. The "
                     "synthetic end-to-end MAE and the property/acceptance suites stand in "
                     "for them."}};
}

// Aligned (pred, gt) streams from a full engine replay over a recording slice.
struct ReplayResult {
    Eigen::MatrixXd pred, gt;
};

ReplayResult replay_stream(const NetworkParams& params, const SyncedRecording& synced,
                           const StreamConfig& scfg, StreamEngine* engine_out = nullptr) {
    StreamEngine engine(params, scfg);
    const Eigen::MatrixXd emitted = engine.push_samples(synced.emg);
    const Eigen::Index first = scfg.window - scfg.execute;
    ReplayResult r;
    r.pred = emitted;
    r.gt = synced.poses.middleCols(first, emitted.cols());
    if (engine_out) *engine_out = std::move(engine);
    return r;
}

json latency_json(const LatencyStats& s) {
    if (s.empty()) return {{"chunks", 0}, {"empty", true}};
    return {{"chunks", s.chunks},         {"min_us", s.min_us},
            {"mean_us", s.mean_us},       {"p95_us", s.p95_us},
            {"max_us", s.max_us},         {"end_to_end_us", s.end_to_end_us},
            {"deadline_misses", s.deadline_misses}};
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("cannot write: " + path);
    os << text;
    if (!os) throw io_error("failed writing: " + path);
}

// ---------------------------------------------------------------------------

int cmd_export_model(const std::string& out) {
    save_model(make_canonical_hand(), out);
    std::cout << json{{"model", out}}.dump(2) << "\n";
    return 0;
}

int cmd_gen_synth(const CommonOpts& common, CLI::App* app, std::uint64_t seed, double duration,
                  double snr_db, int synergies, double pose_range, double amplitude,
                  std::string out, std::string model_path, std::string task) {
    common.merge(app->get_option("--seed"), "seed", seed);
    common.merge(app->get_option("--duration"), "duration_s", duration);
    common.merge(app->get_option("--snr"), "noise_snr_db", snr_db);
    common.merge(app->get_option("--synergies"), "n_synergies", synergies);
    common.merge(app->get_option("--pose-range"), "pose_range_fraction", pose_range);
    common.merge(app->get_option("--amplitude"), "activation_amplitude", amplitude);
    common.merge(app->get_option("--out"), "out", out);

    SynthConfig cfg;
    cfg.seed = seed;
    cfg.duration_s = duration;
    cfg.noise_snr_db = snr_db;
    cfg.n_synergies = synergies;
    cfg.pose_range_fraction = pose_range;
    cfg.activation_amplitude = amplitude;
    cfg.task = task;

    const KinematicModel hand = load_hand(model_path);
    const Recording rec = gen_synth(cfg, hand);
    save_recording(rec, out);
    const std::string jsonl = sibling_jsonl(out);
    save_recording_jsonl(rec, jsonl);

    std::cout << json{{"recording", out},
                      {"jsonl", jsonl},
                      {"emg_samples", rec.emg.cols()},
                      {"pose_samples", rec.poses.cols()},
                      {"seed", seed}}
                     .dump(2)
              << "\n";
    return 0;
}

struct TrainArgs {
    std::string data, out = "net.epnt", report, model_path;
    std::uint64_t seed = 0;
    int window = 400, stride = 100, epochs = 12, batch = 16;
    int lstm_hidden = 64, mlp_hidden = 64;
    double lr = 1e-3, val_frac = 0.2, lambda = 1.0, anchor_jitter = 0.02;
    bool quiet = false;
};

int cmd_train(const CommonOpts& common, CLI::App* app, TrainArgs a) {
    common.merge(app->get_option("--seed"), "seed", a.seed);
    common.merge(app->get_option("--window"), "window", a.window);
    common.merge(app->get_option("--stride"), "stride", a.stride);
    common.merge(app->get_option("--epochs"), "epochs", a.epochs);
    common.merge(app->get_option("--batch"), "batch_size", a.batch);
    common.merge(app->get_option("--lr"), "learning_rate", a.lr);
    common.merge(app->get_option("--val-frac"), "val_frac", a.val_frac);
    common.merge(app->get_option("--lstm-hidden"), "lstm_hidden", a.lstm_hidden);
    common.merge(app->get_option("--mlp-hidden"), "mlp_hidden", a.mlp_hidden);
    common.merge(app->get_option("--lambda"), "lambda", a.lambda);
    common.merge(app->get_option("--anchor-jitter"), "anchor_jitter", a.anchor_jitter);
    common.merge(app->get_option("--out"), "out", a.out);

    const KinematicModel hand = load_hand(a.model_path);
    const Recording rec = load_recording_any(a.data);
    const SyncedRecording synced = synchronize(rec);
    const int n = static_cast<int>(synced.emg.cols());
    const int split = static_cast<int>(std::llround(double(n) * (1.0 - a.val_frac)));
    if (split < a.window || (a.val_frac > 0.0 && n - split < a.window))
        throw validation_error("train: recording too short for this window/split");

    SyncedRecording train_part = synced, val_part = synced;
    train_part.emg = synced.emg.leftCols(split);
    train_part.poses = synced.poses.leftCols(split);
    train_part.t_us.assign(synced.t_us.begin(), synced.t_us.begin() + split);
    val_part.emg = synced.emg.rightCols(n - split);
    val_part.poses = synced.poses.rightCols(n - split);
    val_part.t_us.assign(synced.t_us.begin() + split, synced.t_us.end());

    ModelConfig cfg;
    cfg.chunk_len = a.window;
    cfg.lstm_hidden = a.lstm_hidden;
    cfg.mlp_hidden = a.mlp_hidden;
    cfg.limit_lo = hand.limits_lo();
    cfg.limit_hi = hand.limits_hi();
    NetworkParams params = NetworkParams::random(cfg, a.seed);

    const JointVector rest = params.rest_pose;
    const std::vector<WindowSample> train_windows = make_windows(train_part, a.window, a.stride, rest);
    const std::vector<WindowSample> val_windows =
        (a.val_frac > 0.0) ? make_windows(val_part, a.window, a.window, rest)
                           : std::vector<WindowSample>{};

    OptimizerConfig opt;
    opt.lr = a.lr;
    opt.epochs = a.epochs;
    opt.batch_size = a.batch;
    opt.seed = a.seed;
    opt.lambda = a.lambda;
    opt.anchor_jitter = a.anchor_jitter;
    opt.verbose = !a.quiet;
    const TrainReport tr = train(params, train_windows, val_windows, opt);

    save_params(params, a.out);
    json report = {{"schema", "emgpose-report/1"},
                   {"kind", "training"},
                   {"params_file", a.out},
                   {"seed", a.seed},
                   {"window", a.window},
                   {"stride", a.stride},
                   {"epochs", a.epochs},
                   {"train_windows", train_windows.size()},
                   {"val_windows", val_windows.size()},
                   {"train_loss", tr.train_loss},
                   {"val_loss", tr.val_loss}};
    if (!a.report.empty()) write_text(a.report, report.dump(2) + "\n");
    std::cout << report.dump(2) << "\n";
    return 0;
}

struct EvalArgs {
    std::string data, params, out = "report.json", csv, joints_csv, model_path;
    int window = 400, stride = 0, execute = 20;  // stride 0 = non-overlapping
    double holdout = 0.2;
};

int cmd_eval(const CommonOpts& common, CLI::App* app, EvalArgs a) {
    common.merge(app->get_option("--window"), "window", a.window);
    common.merge(app->get_option("--execute"), "execute", a.execute);
    common.merge(app->get_option("--holdout"), "holdout", a.holdout);
    common.merge(app->get_option("--out"), "report_out", a.out);

    const KinematicModel hand = load_hand(a.model_path);
    const NetworkParams params = load_params(a.params);
    const Recording rec = load_recording_any(a.data);
    const SyncedRecording synced = synchronize(rec);
    const int n = static_cast<int>(synced.emg.cols());
    const int start = static_cast<int>(std::llround(double(n) * (1.0 - a.holdout)));

    SyncedRecording hold = synced;
    hold.emg = synced.emg.rightCols(n - start);
    hold.poses = synced.poses.rightCols(n - start);
    hold.t_us.assign(synced.t_us.begin() + start, synced.t_us.end());
    if (static_cast<int>(hold.emg.cols()) < a.window)
        throw validation_error("eval: held-out segment shorter than one window");

    // Windowed protocol: anchored open-loop prediction over each window,
    // ground-truth anchor per the window contract.
    const int stride = (a.stride > 0) ? a.stride : a.window;
    const std::vector<WindowSample> windows =
        make_windows(hold, a.window, stride, params.rest_pose);
    Eigen::MatrixXd pred(kNumJoints, static_cast<Eigen::Index>(windows.size()) * a.window);
    Eigen::MatrixXd gt(kNumJoints, pred.cols());
    Eigen::Index at = 0;
    for (const auto& w : windows) {
        DecoderState anchor;
        anchor.h = Eigen::VectorXd::Zero(params.config.lstm_hidden);
        anchor.c = Eigen::VectorXd::Zero(params.config.lstm_hidden);
        anchor.last_pose = HandPose(w.theta0);
        const ForwardResult fr = model_forward(params, w.emg, anchor);
        pred.middleCols(at, a.window) = fr.chunk;
        gt.middleCols(at, a.window) = w.theta_gt;
        at += a.window;
    }
    std::vector<std::string> labels(static_cast<size_t>(pred.cols()), rec.task);
    const EvalReport windowed = evaluate(pred, gt, rec.task.empty() ? std::vector<std::string>{} : labels);

    // Streaming protocol: continuous engine replay over the held-out segment.
    StreamConfig scfg;
    scfg.window = a.window;
    scfg.execute = a.execute;
    scfg.rate_hz = synced.emg_rate;
    const ReplayResult rr = replay_stream(params, hold, scfg);
    const EvalReport streaming = evaluate(rr.pred, rr.gt);

    // Constant mid-pose baseline over the same frames.
    const Eigen::MatrixXd mid_pred = hand.mid_pose().replicate(1, gt.cols());
    const EvalReport baseline = evaluate(mid_pred, gt);

    json report = {{"schema", "emgpose-report/1"},
                   {"kind", "evaluation"},
                   {"overall_mae_rad", windowed.overall_mae},
                   {"per_joint_mae_rad", per_joint_json(hand, windowed.per_joint_mae)},
                   {"frames", windowed.frames},
                   {"protocol",
                    {{"window", a.window},
                     {"stride", stride},
                     {"holdout_fraction", a.holdout},
                     {"anchoring", "ground-truth pose at window start - 1"}}},
                   {"streaming",
                    {{"overall_mae_rad", streaming.overall_mae}, {"frames", streaming.frames}}},
                   {"baselines", {{"constant_mid_pose_mae_rad", baseline.overall_mae}}},
                   {"physical_experiments", physical_disclosure()}};
    if (!windowed.per_task_mae.empty()) report["per_task_mae_rad"] = windowed.per_task_mae;

    write_text(a.out, report.dump(2) + "\n");
    std::cout << report.dump(2) << "\n";

    if (!a.csv.empty()) {
        std::vector<std::string> joint_names;
        if (a.joints_csv.empty()) {
            joint_names = {"THUMB_CMC_FE", "INDEX_MCP_FE"};
        } else {
            std::stringstream ss(a.joints_csv);
            std::string item;
            while (std::getline(ss, item, ',')) joint_names.push_back(item);
        }
        export_joint_csv(pred, gt, joint_names, hand, a.csv);
    }
    return 0;
}

struct RetargetArgs {
    std::string input, out = "poses.jsonl", model_path;
    bool raw = false;
    int max_iters = 50;
    double damping = 1e-3;
};

int cmd_retarget(const CommonOpts& common, CLI::App* app, RetargetArgs a) {
    common.merge(app->get_option("--out"), "out", a.out);

    const KinematicModel hand = load_hand(a.model_path);
    std::ifstream is(a.input);
    if (!is) throw io_error("cannot open keypoint stream: " + a.input);
    std::ofstream os(a.out, std::ios::binary);
    if (!os) throw io_error("cannot write pose stream: " + a.out);

    RetargetConfig cfg;
    cfg.max_iters = a.max_iters;
    cfg.damping = a.damping;

    HandPose q_prev;  // rest; also the warm start
    std::string line;
    size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw io_error("keypoints line " + std::to_string(line_no) + ": " + e.what());
        }
        KeypointSet kps;
        const auto& pts = j.at("points");
        kps.points.resize(3, static_cast<Eigen::Index>(pts.size()));
        for (size_t i = 0; i < pts.size(); ++i)
            for (int c = 0; c < 3; ++c)
                kps.points(c, static_cast<Eigen::Index>(i)) = pts[i][static_cast<size_t>(c)].get<double>();
        if (j.contains("labels")) kps.labels = j["labels"].get<std::vector<std::string>>();

        KeypointSet targets = kps;
        if (a.raw) {
            const KeypointSet normalized = normalize_human_frame(kps, hand.palm_width);
            // Reduce to the correspondence set by label.
            targets.points.resize(3, static_cast<Eigen::Index>(hand.correspondence_set.size()));
            targets.labels.clear();
            for (size_t i = 0; i < hand.correspondence_set.size(); ++i) {
                const int idx = hand.correspondence_set[i];
                const std::string name =
                    (idx == kPalmCenterIndex) ? "PALM_CENTER" : hand.keypoint_frames[idx].name;
                bool found = false;
                for (size_t k = 0; k < normalized.labels.size(); ++k)
                    if (normalized.labels[k] == name) {
                        targets.points.col(static_cast<Eigen::Index>(i)) =
                            normalized.points.col(static_cast<Eigen::Index>(k));
                        found = true;
                        break;
                    }
                if (!found)
                    throw validation_error("retarget: input lacks correspondence keypoint " + name);
                targets.labels.push_back(name);
            }
        }

        const RetargetResult res = retarget_pose(hand, targets, cfg, q_prev);
        q_prev = res.pose;
        json out_line = {{"t_us", j.value("t_us", std::int64_t(line_no))},
                         {"pose", std::vector<double>(res.pose.angles.data(),
                                                      res.pose.angles.data() + kNumJoints)},
                         {"residual_m", res.residual},
                         {"iterations", res.iterations},
                         {"converged", res.converged},
                         {"clamped", res.clamped}};
        os << out_line.dump() << "\n";
    }
    return 0;
}

struct StreamArgs {
    std::string input, params, out = "stream_poses.jsonl", stats_out;
    int window = 400, execute = 20;
    bool realtime = false;
};

int cmd_stream(const CommonOpts& common, CLI::App* app, StreamArgs a) {
    common.merge(app->get_option("--window"), "window", a.window);
    common.merge(app->get_option("--execute"), "execute", a.execute);
    common.merge(app->get_option("--out"), "out", a.out);

    const NetworkParams params = load_params(a.params);
    const Recording rec = load_recording_any(a.input);
    const SyncedRecording synced = synchronize(rec);

    StreamConfig scfg;
    scfg.window = a.window;
    scfg.execute = a.execute;
    scfg.realtime = a.realtime;
    scfg.rate_hz = rec.emg_rate;

    StreamEngine engine(params, scfg);
    const Eigen::MatrixXd emitted = engine.push_samples(synced.emg);

    std::ofstream os(a.out, std::ios::binary);
    if (!os) throw io_error("cannot write pose stream: " + a.out);
    const Eigen::Index first = a.window - a.execute;
    for (Eigen::Index m = 0; m < emitted.cols(); ++m) {
        json line = {{"t_us", synced.t_us[static_cast<size_t>(first + m)]},
                     {"pose", std::vector<double>(emitted.col(m).data(),
                                                  emitted.col(m).data() + kNumJoints)}};
        os << line.dump() << "\n";
    }

    const json stats = latency_json(engine.latency_stats());
    if (!a.stats_out.empty()) write_text(a.stats_out, stats.dump(2) + "\n");
    std::cout << stats.dump(2) << "\n";
    return 0;
}

struct BenchArgs {
    std::string params;
    std::uint64_t seed = 0;
    int window = 400, execute = 20, chunks = 200;
    double rate = 500.0;
};

int cmd_bench(const CommonOpts& common, CLI::App* app, BenchArgs a) {
    common.merge(app->get_option("--seed"), "seed", a.seed);
    common.merge(app->get_option("--window"), "window", a.window);
    common.merge(app->get_option("--execute"), "execute", a.execute);
    common.merge(app->get_option("--chunks"), "chunks", a.chunks);

    NetworkParams params = [&] {
        if (!a.params.empty()) return load_params(a.params);
        ModelConfig cfg;
        cfg.chunk_len = a.window;
        return NetworkParams::random(cfg, a.seed);
    }();

    StreamConfig scfg;
    scfg.window = a.window;
    scfg.execute = a.execute;
    scfg.realtime = true;
    scfg.rate_hz = a.rate;
    StreamEngine engine(params, scfg);

    std::mt19937_64 rng(a.seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    const int total = a.window + a.execute * (a.chunks - 1);
    Eigen::MatrixXd samples(8, total);
    for (Eigen::Index c = 0; c < samples.cols(); ++c)
        for (int r = 0; r < 8; ++r) samples(r, c) = dist(rng);
    engine.push_samples(samples);

    json stats = latency_json(engine.latency_stats());
    stats["budget_us"] = double(a.execute) / a.rate * 1e6;
    std::cout << stats.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sEMG-driven hand-pose pipeline: synthetic data, training, retargeting, "
                 "streaming inference"};
    app.require_subcommand(1);
    CommonOpts common;
    app.add_option("--config", common.config_path, "JSON config; flags override its values")
        ->expected(1);

    // export-model
    auto* sc_model = app.add_subcommand("export-model", "Write the canonical hand model JSON");
    std::string model_out = "hand22.json";
    sc_model->add_option("--out", model_out, "Output path");

    // gen-synth
    auto* sc_gen = app.add_subcommand("gen-synth", "Generate a synthetic muscle-synergy recording");
    std::uint64_t g_seed = 0;
    double g_duration = 60.0, g_snr = 20.0, g_pose_range = 0.25, g_amp = 1.0;
    int g_synergies = 6;
    std::string g_out = "synth.eprc", g_model, g_task = "synth";
    sc_gen->add_option("--seed", g_seed, "RNG seed");
    sc_gen->add_option("--duration", g_duration, "Recording length, seconds");
    sc_gen->add_option("--snr", g_snr, "Sensor noise SNR, dB");
    sc_gen->add_option("--synergies", g_synergies, "Number of synergies");
    sc_gen->add_option("--pose-range", g_pose_range, "Joint stddev as a fraction of half-range");
    sc_gen->add_option("--amplitude", g_amp, "Activation amplitude (0 = static pose)");
    sc_gen->add_option("--out", g_out, "Output .eprc path (a .jsonl sibling is also written)");
    sc_gen->add_option("--model", g_model, "Hand model JSON (default: canonical)");
    sc_gen->add_option("--task", g_task, "Task label");

    // train
    auto* sc_train = app.add_subcommand("train", "Train the EMG-to-pose network");
    TrainArgs t;
    sc_train->add_option("--data", t.data, "Recording (.eprc or .jsonl)")->required();
    sc_train->add_option("--out", t.out, "Output params file");
    sc_train->add_option("--report", t.report, "Also write the training report JSON here");
    sc_train->add_option("--model", t.model_path, "Hand model JSON");
    sc_train->add_option("--seed", t.seed, "RNG seed");
    sc_train->add_option("--window", t.window, "Training window length, samples");
    sc_train->add_option("--stride", t.stride, "Training window stride, samples");
    sc_train->add_option("--epochs", t.epochs, "Training epochs");
    sc_train->add_option("--batch", t.batch, "Batch size");
    sc_train->add_option("--lr", t.lr, "Learning rate");
    sc_train->add_option("--val-frac", t.val_frac, "Held-out tail fraction");
    sc_train->add_option("--lstm-hidden", t.lstm_hidden, "LSTM hidden size");
    sc_train->add_option("--mlp-hidden", t.mlp_hidden, "MLP hidden size");
    sc_train->add_option("--lambda", t.lambda, "Pose-term weight in the loss");
    sc_train->add_option("--anchor-jitter", t.anchor_jitter, "Training-time anchor noise, rad");
    sc_train->add_flag("--quiet", t.quiet, "Suppress per-epoch output");

    // eval
    auto* sc_eval = app.add_subcommand("eval", "Evaluate held-out MAE and write a report");
    EvalArgs e;
    sc_eval->add_option("--data", e.data, "Recording (.eprc or .jsonl)")->required();
    sc_eval->add_option("--params", e.params, "Network params file")->required();
    sc_eval->add_option("--out", e.out, "Report JSON path");
    sc_eval->add_option("--model", e.model_path, "Hand model JSON");
    sc_eval->add_option("--window", e.window, "Evaluation window length");
    sc_eval->add_option("--stride", e.stride, "Window stride (0 = non-overlapping)");
    sc_eval->add_option("--execute", e.execute, "Streaming chunk size");
    sc_eval->add_option("--holdout", e.holdout, "Evaluate on this trailing fraction");
    sc_eval->add_option("--csv", e.csv, "Export joint trajectories CSV here");
    sc_eval->add_option("--joints", e.joints_csv, "Comma-separated joints for the CSV");

    // retarget
    auto* sc_rt = app.add_subcommand("retarget", "Keypoint JSONL stream -> pose JSONL stream");
    RetargetArgs r;
    sc_rt->add_option("--input", r.input, "Keypoint JSONL")->required();
    sc_rt->add_option("--out", r.out, "Pose JSONL");
    sc_rt->add_option("--model", r.model_path, "Hand model JSON");
    sc_rt->add_flag("--raw", r.raw, "Inputs are raw labeled human keypoints; normalize first");
    sc_rt->add_option("--max-iters", r.max_iters, "Solver iteration cap");
    sc_rt->add_option("--damping", r.damping, "Initial Levenberg damping");

    // stream
    auto* sc_stream = app.add_subcommand("stream", "Replay a recording through the engine");
    StreamArgs s;
    sc_stream->add_option("--input", s.input, "Recording (.eprc or .jsonl)")->required();
    sc_stream->add_option("--params", s.params, "Network params file")->required();
    sc_stream->add_option("--window", s.window, "Window length W");
    sc_stream->add_option("--execute", s.execute, "Frames emitted per inference E");
    sc_stream->add_flag("--realtime", s.realtime, "Count deadline misses against E/rate");
    sc_stream->add_option("--out", s.out, "Pose JSONL path");
    sc_stream->add_option("--stats-out", s.stats_out, "Also write latency stats JSON here");

    // bench
    auto* sc_bench = app.add_subcommand("bench", "Measure chunk inference latency");
    BenchArgs b;
    sc_bench->add_option("--params", b.params, "Params file (default: random net)");
    sc_bench->add_option("--seed", b.seed, "RNG seed");
    sc_bench->add_option("--window", b.window, "Window length W");
    sc_bench->add_option("--execute", b.execute, "Chunk size E");
    sc_bench->add_option("--chunks", b.chunks, "Chunks to run");
    sc_bench->add_option("--rate", b.rate, "Sample rate, Hz");

    CLI11_PARSE(app, argc, argv);

    try {
        common.load();
        if (sc_model->parsed()) return cmd_export_model(model_out);
        if (sc_gen->parsed())
            return cmd_gen_synth(common, sc_gen, g_seed, g_duration, g_snr, g_synergies,
                                 g_pose_range, g_amp, g_out, g_model, g_task);
        if (sc_train->parsed()) return cmd_train(common, sc_train, t);
        if (sc_eval->parsed()) return cmd_eval(common, sc_eval, e);
        if (sc_rt->parsed()) return cmd_retarget(common, sc_rt, r);
        if (sc_stream->parsed()) return cmd_stream(common, sc_stream, s);
        if (sc_bench->parsed()) return cmd_bench(common, sc_bench, b);
    } catch (const io_error& ex) {
        json err = {{"error", "io"}, {"message", ex.what()}};
        if (ex.byte_offset >= 0) err["byte_offset"] = ex.byte_offset;
        std::cerr << err.dump() << "\n";
        return 2;
    } catch (const validation_error& ex) {
        std::cerr << json{{"error", "validation"}, {"message", ex.what()}}.dump() << "\n";
        return 1;
    } catch (const std::exception& ex) {
        std::cerr << json{{"error", "internal"}, {"message", ex.what()}}.dump() << "\n";
        return 1;
    }
    return 0;
}

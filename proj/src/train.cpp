#include "skelpt/train.hpp"

#include "skelpt/config_io.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace skelpt {

namespace {

using nlohmann::json;

constexpr uint64_t kOrderTag = 0x6f72646572ull;     // epoch shuffle stream
constexpr uint64_t kSubsetTag = 0x737562736574ull;  // per-sample resampling stream

void check_positive(double v, const char* name) {
    if (!(v > 0.0)) {
        throw std::invalid_argument(std::string(name) + " must be positive");
    }
}

// ---- checkpoint binary io ----

void write_u64(std::ostream& out, uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

uint64_t read_u64(std::istream& in) {
    uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

void write_tensor(std::ostream& out, const MatXf& t) {
    out.write(reinterpret_cast<const char*>(t.data()),
              static_cast<std::streamsize>(sizeof(float) * t.size()));
}

void read_tensor(std::istream& in, MatXf& t, Eigen::Index rows, Eigen::Index cols) {
    t.resize(rows, cols);
    in.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(sizeof(float) * t.size()));
}

// ---- training loop ----

PointCloud draw_input_subset(const DatasetSample& sample, int input_points, uint64_t seed,
                             int epoch) {
    RngStream stream({seed, kSubsetTag, static_cast<uint64_t>(epoch), fnv1a64(sample.id)});
    return sample_point_rows(sample.surface, input_points, stream);
}

void adam_step(const AdamConfig& cfg, std::vector<TensorRef>& params,
               const std::vector<MatXf>& grads, std::vector<MatXf>& m, std::vector<MatXf>& v,
               int64_t& steps) {
    ++steps;
    const float b1 = static_cast<float>(cfg.beta1);
    const float b2 = static_cast<float>(cfg.beta2);
    const float eps = static_cast<float>(cfg.epsilon);
    // Fold the first-moment bias correction into the step size.
    const float step = static_cast<float>(cfg.lr / (1.0 - std::pow(cfg.beta1, steps)));
    const float vc = static_cast<float>(1.0 / (1.0 - std::pow(cfg.beta2, steps)));
    for (size_t i = 0; i < params.size(); ++i) {
        const auto g = grads[i].array();
        m[i].array() = b1 * m[i].array() + (1.0f - b1) * g;
        v[i].array() = b2 * v[i].array() + (1.0f - b2) * g.square();
        params[i].data->array() -= step * m[i].array() / ((vc * v[i].array()).sqrt() + eps);
    }
}

Checkpoint snapshot(const SkeletonNet& net, const AdamConfig& adam, uint64_t seed, int epoch,
                    const std::vector<MatXf>& m, const std::vector<MatXf>& v, int64_t steps) {
    Checkpoint ckpt;
    ckpt.encoder = net.config();
    ckpt.adam = adam;
    ckpt.seed = seed;
    ckpt.epoch = epoch;
    for (const TensorRef& t : net.tensors()) {
        ckpt.param_names.push_back(t.name);
        ckpt.params.push_back(*t.data);
    }
    ckpt.adam_m = m;
    ckpt.adam_v = v;
    ckpt.adam_steps = steps;
    return ckpt;
}

void load_parameters(SkeletonNet& net, const Checkpoint& ckpt) {
    std::vector<TensorRef> tensors = net.tensors();
    if (tensors.size() != ckpt.params.size()) {
        throw std::invalid_argument("checkpoint holds " + std::to_string(ckpt.params.size()) +
                                    " tensors, network expects " + std::to_string(tensors.size()));
    }
    for (size_t i = 0; i < tensors.size(); ++i) {
        if (tensors[i].name != ckpt.param_names[i]) {
            throw std::invalid_argument("checkpoint tensor \"" + ckpt.param_names[i] +
                                        "\" does not match network tensor \"" + tensors[i].name +
                                        "\"");
        }
        if (tensors[i].data->rows() != ckpt.params[i].rows() ||
            tensors[i].data->cols() != ckpt.params[i].cols()) {
            throw std::invalid_argument("checkpoint tensor \"" + ckpt.param_names[i] +
                                        "\" has mismatched shape");
        }
        *tensors[i].data = ckpt.params[i];
    }
}

std::string join_ids(const std::vector<DatasetSample>& samples, const std::vector<int>& order,
                     size_t lo, size_t hi) {
    std::string out;
    for (size_t i = lo; i < hi; ++i) {
        if (!out.empty()) out += ", ";
        out += samples[order[i]].id;
    }
    return out;
}

TrainResult run_loop(const TrainConfig& cfg, const std::vector<DatasetSample>& samples,
                     const std::filesystem::path& out_dir, const EpochCallback& on_epoch,
                     SkeletonNet net, std::vector<MatXf> m, std::vector<MatXf> v, int64_t steps,
                     int start_epoch, bool append_log) {
    const int n = static_cast<int>(samples.size());
    if (n == 0 && start_epoch <= cfg.epochs) {
        throw std::invalid_argument("training requires at least one sample");
    }

    std::ofstream log;
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        log.open(out_dir / "train_log.jsonl", append_log ? std::ios::app : std::ios::trunc);
        if (!log) {
            throw std::runtime_error("cannot open training log in " + out_dir.string());
        }
    }

    TrainResult result;
    std::vector<TensorRef> params = net.tensors();
    std::vector<MatXf> grads = net.zero_like_params();
    const int skel_count = cfg.encoder.m;
    PointSet grad_points(skel_count, 3);
    Eigen::VectorXd grad_radii(skel_count);

    const auto save = [&](int epoch) {
        if (out_dir.empty()) return;
        save_checkpoint(snapshot(net, cfg.adam, cfg.seed, epoch, m, v, steps),
                        out_dir / "checkpoint.bin");
    };

    for (int epoch = start_epoch; epoch <= cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        const std::vector<int> order =
            RngStream({cfg.seed, kOrderTag, static_cast<uint64_t>(epoch)}).permutation(n);
        LossBreakdown sums;
        for (size_t lo = 0; lo < order.size(); lo += static_cast<size_t>(cfg.batch_size)) {
            const size_t hi = std::min(lo + static_cast<size_t>(cfg.batch_size), order.size());
            for (MatXf& g : grads) g.setZero();
            double batch_total = 0.0;
            for (size_t i = lo; i < hi; ++i) {
                const DatasetSample& sample = samples[order[i]];
                const PointCloud cloud =
                    draw_input_subset(sample, cfg.input_points, cfg.seed, epoch);
                ForwardCache cache;
                const WeightMatrix& w = net.forward_cached(cloud, cache);
                const SkeletonForward fwd = forward_skeleton(cloud, w);
                SkeletalModel pred;
                pred.skel_points = fwd.skel_points;
                pred.radii = fwd.radii;
                const LossBreakdown lb = composite_loss_grad(
                    pred, cloud, sample.gt_srep, cfg.loss, epoch, grad_points, grad_radii);
                const Eigen::MatrixXd dw = backward_skeleton(cloud, w, fwd, grad_points,
                                                             grad_radii, cfg.encoder.stop_radius_grad);
                net.backward(cache, dw, grads);
                sums.total += lb.total;
                sums.cd += lb.cd;
                sums.spread += lb.spread;
                sums.medial += lb.medial;
                sums.p2s += lb.p2s;
                batch_total += lb.total;
            }
            if (!std::isfinite(batch_total)) {
                std::ostringstream msg;
                msg << "non-finite training loss at epoch " << epoch << ", batch "
                    << (lo / static_cast<size_t>(cfg.batch_size)) << " (samples: "
                    << join_ids(samples, order, lo, hi) << ")";
                throw std::runtime_error(msg.str());
            }
            const float scale = 1.0f / static_cast<float>(hi - lo);
            for (MatXf& g : grads) g *= scale;
            adam_step(cfg.adam, params, grads, m, v, steps);
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.mean.total = sums.total / n;
        rec.mean.cd = sums.cd / n;
        rec.mean.spread = sums.spread / n;
        rec.mean.medial = sums.medial / n;
        rec.mean.p2s = sums.p2s / n;
        rec.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.history.push_back(rec);
        if (log) {
            log << json{{"epoch", rec.epoch},
                        {"total", rec.mean.total},
                        {"cd", rec.mean.cd},
                        {"spread", rec.mean.spread},
                        {"medial", rec.mean.medial},
                        {"p2s", rec.mean.p2s},
                        {"wall_s", rec.wall_seconds}}
                       .dump()
                << "\n"
                << std::flush;
        }
        if (on_epoch) on_epoch(rec);
        if (cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0 &&
            epoch != cfg.epochs) {
            save(epoch);
        }
    }

    result.checkpoint = snapshot(net, cfg.adam, cfg.seed, cfg.epochs, m, v, steps);
    save(cfg.epochs);
    return result;
}

}  // namespace

void AdamConfig::validate() const {
    check_positive(lr, "adam.lr");
    check_positive(epsilon, "adam.epsilon");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw std::invalid_argument("adam betas must lie in [0, 1)");
    }
}

void TrainConfig::validate() const {
    encoder.validate();
    adam.validate();
    loss.validate();
    if (epochs < 0) throw std::invalid_argument("epochs must be nonnegative");
    if (batch_size <= 0) throw std::invalid_argument("batch_size must be positive");
    if (checkpoint_every < 0) throw std::invalid_argument("checkpoint_every must be nonnegative");
    if (input_points < encoder.min_input_points()) {
        throw std::invalid_argument("input_points (" + std::to_string(input_points) +
                                    ") is below the encoder sampling requirement (" +
                                    std::to_string(encoder.min_input_points()) + ")");
    }
}

void require_matching_architecture(const EncoderConfig& ours, const EncoderConfig& theirs) {
    const auto fail = [](const std::string& what) {
        throw std::invalid_argument("checkpoint architecture mismatch: " + what);
    };
    if (ours.m != theirs.m) {
        fail("skeletal point count (m) " + std::to_string(theirs.m) + " vs " +
             std::to_string(ours.m));
    }
    if (ours.levels.size() != theirs.levels.size()) fail("set-abstraction level count");
    for (size_t i = 0; i < ours.levels.size(); ++i) {
        const auto& a = ours.levels[i];
        const auto& b = theirs.levels[i];
        if (a.npoint != b.npoint || a.radius != b.radius || a.max_neighbors != b.max_neighbors ||
            a.mlp != b.mlp) {
            fail("set-abstraction level " + std::to_string(i));
        }
    }
    if (ours.fp_widths != theirs.fp_widths) fail("feature propagation widths");
    if (ours.head_widths != theirs.head_widths) fail("head widths");
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& file) {
    json tensors = json::array();
    for (size_t i = 0; i < ckpt.params.size(); ++i) {
        tensors.push_back({{"name", ckpt.param_names[i]},
                           {"rows", ckpt.params[i].rows()},
                           {"cols", ckpt.params[i].cols()}});
    }
    const std::string header = json{{"encoder", to_json(ckpt.encoder)},
                                    {"adam", to_json(ckpt.adam)},
                                    {"seed", ckpt.seed},
                                    {"epoch", ckpt.epoch},
                                    {"adam_steps", ckpt.adam_steps},
                                    {"tensors", tensors}}
                                   .dump();

    const std::filesystem::path tmp = file.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot write checkpoint " + file.string());
        }
        out << kCheckpointFormatVersion << "\n";
        write_u64(out, header.size());
        out.write(header.data(), static_cast<std::streamsize>(header.size()));
        for (const MatXf& t : ckpt.params) write_tensor(out, t);
        for (const MatXf& t : ckpt.adam_m) write_tensor(out, t);
        for (const MatXf& t : ckpt.adam_v) write_tensor(out, t);
        if (!out) {
            throw std::runtime_error("short write to checkpoint " + file.string());
        }
    }
    std::filesystem::rename(tmp, file);
}

Checkpoint load_checkpoint(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open checkpoint " + file.string());
    }
    std::string magic(std::strlen(kCheckpointFormatVersion), '\0');
    in.read(magic.data(), static_cast<std::streamsize>(magic.size()));
    char newline = 0;
    in.get(newline);
    if (!in || magic != kCheckpointFormatVersion || newline != '\n') {
        throw std::runtime_error(file.string() + " is not a " +
                                 std::string(kCheckpointFormatVersion) + " checkpoint");
    }
    const uint64_t header_len = read_u64(in);
    std::string header(header_len, '\0');
    in.read(header.data(), static_cast<std::streamsize>(header_len));
    if (!in) {
        throw std::runtime_error("truncated checkpoint header in " + file.string());
    }

    json j;
    try {
        j = json::parse(header);
    } catch (const json::exception& e) {
        throw std::runtime_error("corrupt checkpoint header in " + file.string() + ": " +
                                 e.what());
    }
    Checkpoint ckpt;
    ckpt.encoder = encoder_config_from_json(j.at("encoder"), "checkpoint.encoder");
    ckpt.adam = adam_config_from_json(j.at("adam"), "checkpoint.adam");
    ckpt.seed = j.at("seed").get<uint64_t>();
    ckpt.epoch = j.at("epoch").get<int>();
    ckpt.adam_steps = j.at("adam_steps").get<int64_t>();
    std::vector<std::pair<Eigen::Index, Eigen::Index>> shapes;
    for (const json& t : j.at("tensors")) {
        ckpt.param_names.push_back(t.at("name").get<std::string>());
        shapes.emplace_back(t.at("rows").get<Eigen::Index>(), t.at("cols").get<Eigen::Index>());
    }

    const auto read_group = [&](std::vector<MatXf>& group) {
        group.resize(shapes.size());
        for (size_t i = 0; i < shapes.size(); ++i) {
            read_tensor(in, group[i], shapes[i].first, shapes[i].second);
        }
    };
    read_group(ckpt.params);
    read_group(ckpt.adam_m);
    read_group(ckpt.adam_v);
    if (!in) {
        throw std::runtime_error("truncated tensor data in " + file.string());
    }
    in.peek();
    if (!in.eof()) {
        throw std::runtime_error("trailing bytes in " + file.string());
    }
    return ckpt;
}

SkeletonNet restore_network(const Checkpoint& ckpt) {
    SkeletonNet net(ckpt.encoder, ckpt.seed);
    load_parameters(net, ckpt);
    return net;
}

TrainResult train(const TrainConfig& cfg, const std::vector<DatasetSample>& samples,
                  const std::filesystem::path& out_dir, const EpochCallback& on_epoch) {
    cfg.validate();
    SkeletonNet net(cfg.encoder, cfg.seed);
    std::vector<MatXf> m = net.zero_like_params();
    std::vector<MatXf> v = net.zero_like_params();
    return run_loop(cfg, samples, out_dir, on_epoch, std::move(net), std::move(m), std::move(v),
                    0, 1, /*append_log=*/false);
}

TrainResult fine_tune(const Checkpoint& start, const TrainConfig& cfg,
                      const std::vector<DatasetSample>& samples,
                      const std::filesystem::path& out_dir, const EpochCallback& on_epoch) {
    cfg.validate();
    require_matching_architecture(cfg.encoder, start.encoder);
    SkeletonNet net(cfg.encoder, cfg.seed);
    load_parameters(net, start);
    std::vector<MatXf> m = net.zero_like_params();
    std::vector<MatXf> v = net.zero_like_params();
    return run_loop(cfg, samples, out_dir, on_epoch, std::move(net), std::move(m), std::move(v),
                    0, 1, /*append_log=*/false);
}

TrainResult resume_training(const TrainConfig& cfg, const std::vector<DatasetSample>& samples,
                            const std::filesystem::path& out_dir, const EpochCallback& on_epoch) {
    cfg.validate();
    const Checkpoint ckpt = load_checkpoint(out_dir / "checkpoint.bin");
    require_matching_architecture(cfg.encoder, ckpt.encoder);
    if (ckpt.seed != cfg.seed) {
        throw std::invalid_argument("cannot resume: checkpoint seed " +
                                    std::to_string(ckpt.seed) + " differs from configured seed " +
                                    std::to_string(cfg.seed));
    }
    if (ckpt.epoch >= cfg.epochs) {
        TrainResult done;
        done.checkpoint = ckpt;
        return done;
    }
    SkeletonNet net(cfg.encoder, cfg.seed);
    load_parameters(net, ckpt);
    return run_loop(cfg, samples, out_dir, on_epoch, std::move(net), ckpt.adam_m, ckpt.adam_v,
                    ckpt.adam_steps, ckpt.epoch + 1, /*append_log=*/true);
}

}  // namespace skelpt

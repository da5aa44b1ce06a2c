#include "skelpt/config_io.hpp"
#include "skelpt/evaluate.hpp"
#include "skelpt/point_io.hpp"
#include "skelpt/srep_io.hpp"
#include "skelpt/synthetic.hpp"
#include "skelpt/train.hpp"
#include "skelpt/viz.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace skelpt;
namespace fs = std::filesystem;

constexpr uint64_t kPredictTag = 0x70726564ull;  // prediction resampling stream

std::vector<DatasetSample> filter_split(std::vector<DatasetSample> samples,
                                        const std::string& split) {
    if (split == "all") return samples;
    Split want;
    if (split == "train") {
        want = Split::Train;
    } else if (split == "val") {
        want = Split::Val;
    } else if (split == "test") {
        want = Split::Test;
    } else {
        throw std::invalid_argument("unknown split \"" + split +
                                    "\" (expected train, val, test, or all)");
    }
    std::erase_if(samples, [want](const DatasetSample& s) { return split_of(s.id) != want; });
    if (samples.empty()) {
        throw std::invalid_argument("split \"" + split + "\" selects no samples");
    }
    return samples;
}

EpochCallback progress_printer(int total_epochs) {
    return [total_epochs](const EpochRecord& r) {
        std::fprintf(stderr,
                     "epoch %d/%d  total=%.6f  cd=%.6f  spread=%.6f  medial=%.6f  p2s=%.6f"
                     "  (%.1fs)\n",
                     r.epoch, total_epochs, r.mean.total, r.mean.cd, r.mean.spread,
                     r.mean.medial, r.mean.p2s, r.wall_seconds);
    };
}

struct GenDataOpts {
    int count = 10;
    uint64_t seed = 0;
    std::string out;
    double a = 2.0, b = 1.5, c = 1.0;
    int surface_samples = 2000;
    int skeletal_samples = 100;
    bool force = false;
};

void cmd_gen_data(const GenDataOpts& o) {
    EllipsoidSpec spec;
    spec.a = o.a;
    spec.b = o.b;
    spec.c = o.c;
    spec.surface_samples = o.surface_samples;
    spec.skeletal_samples = o.skeletal_samples;
    spec.validate();
    const auto samples = sample_dataset(o.count, spec, o.seed);
    write_dataset(o.out, samples, spec, o.seed, o.force);
    std::printf("wrote %d samples to %s\n", o.count, o.out.c_str());
}

struct TrainOpts {
    std::string config;
    std::string data;
    std::string out;
    std::string from;  // finetune only
    std::optional<int> epochs;
    std::optional<uint64_t> seed;
    bool resume = false;
};

RunConfig resolve_run_config(const TrainOpts& o) {
    RunConfig rc = read_run_config(o.config);
    if (!o.data.empty()) rc.dataset_dir = o.data;
    if (!o.out.empty()) rc.out_dir = o.out;
    if (o.epochs) rc.train.epochs = *o.epochs;
    if (o.seed) rc.train.seed = *o.seed;
    if (rc.dataset_dir.empty()) {
        throw std::invalid_argument("no dataset directory: set dataset_dir in the config or pass --data");
    }
    rc.validate();
    return rc;
}

void cmd_train(const TrainOpts& o, bool finetune) {
    RunConfig rc = resolve_run_config(o);
    if (rc.out_dir.empty()) {
        throw std::invalid_argument("no output directory: set out_dir in the config or pass --out");
    }
    const auto dataset = load_dataset(rc.dataset_dir);
    const auto samples = filter_split(dataset.samples, "train");
    std::fprintf(stderr, "training on %zu samples (%d epochs, seed %llu)\n", samples.size(),
                 rc.train.epochs, static_cast<unsigned long long>(rc.train.seed));
    const auto cb = progress_printer(rc.train.epochs);

    TrainResult result;
    if (finetune) {
        const Checkpoint start = load_checkpoint(o.from);
        result = fine_tune(start, rc.train, samples, rc.out_dir, cb);
    } else if (o.resume) {
        result = resume_training(rc.train, samples, rc.out_dir, cb);
    } else {
        result = train(rc.train, samples, rc.out_dir, cb);
    }
    std::printf("checkpoint at epoch %d: %s\n", result.checkpoint.epoch,
                (fs::path(rc.out_dir) / "checkpoint.bin").string().c_str());
}

struct EvalOpts {
    std::string ckpt;
    std::string data;
    std::string split = "test";
    std::string out = "metrics.csv";
    std::string config;  // ablation protocol
    std::optional<int> input_points;
    std::optional<uint64_t> seed;
    bool ablation = false;
    bool plot = false;
};

void emit_plots(const SkeletonNet& net, const std::vector<DatasetSample>& samples,
                int input_points, uint64_t seed, const fs::path& dir) {
    fs::create_directories(dir);
    for (const DatasetSample& sample : samples) {
        RngStream stream({seed, 0x6576616cull, fnv1a64(sample.id)});  // the evaluate() stream
        const PointCloud cloud = sample_point_rows(sample.surface, input_points, stream);
        const SkeletalModel pred = predict_skeleton(cloud, net.forward(cloud));
        const PointSet* reference =
            sample.gt_srep.size() > 0 ? &sample.gt_srep.skel_points : nullptr;
        render_skeleton_overlay(cloud, reference, &pred.skel_points,
                                dir / (sample.id + ".png"));
    }
}

void cmd_eval(const EvalOpts& o) {
    const auto dataset = load_dataset(o.data);
    const auto eval_samples = filter_split(dataset.samples, o.split);

    if (o.ablation) {
        if (o.config.empty()) {
            throw std::invalid_argument("--ablation requires --config for the training protocol");
        }
        RunConfig rc = read_run_config(o.config);
        if (o.seed) rc.train.seed = *o.seed;
        const auto train_samples = filter_split(dataset.samples, "train");
        const fs::path row_dir = rc.out_dir.empty() ? fs::path{} : fs::path(rc.out_dir);
        const auto rows = run_ablation(rc.train, train_samples, eval_samples, row_dir,
                                       progress_printer(rc.train.epochs));
        write_ablation_csv(rows, o.out);
        for (const auto& row : rows) {
            std::printf("%-14s skel_cd=%.5f skel_hd=%.5f surf_cd=%.5f surf_hd=%.5f\n",
                        ablation_row_name(row).c_str(), row.report.aggregate.skel_cd,
                        row.report.aggregate.skel_hd, row.report.aggregate.surf_cd,
                        row.report.aggregate.surf_hd);
        }
        return;
    }

    if (o.ckpt.empty()) {
        throw std::invalid_argument("--ckpt is required unless --ablation is given");
    }
    const Checkpoint ckpt = load_checkpoint(o.ckpt);
    const SkeletonNet net = restore_network(ckpt);
    const int n = o.input_points.value_or(1000);
    const uint64_t seed = o.seed.value_or(ckpt.seed);
    for (const DatasetSample& s : eval_samples) {
        if (s.gt_srep.size() == 0) {
            std::fprintf(stderr, "warning: %s has no reference s-rep; skeleton columns left empty\n",
                         s.id.c_str());
        }
    }
    const MetricsReport report = evaluate(net, eval_samples, n, seed);
    write_metrics_csv(report, o.out);
    std::printf("%zu samples: skel_cd=%.5f skel_hd=%.5f surf_cd=%.5f surf_hd=%.5f srep_cd=%.5f"
                " srep_hd=%.5f\n",
                report.rows.size(), report.aggregate.skel_cd, report.aggregate.skel_hd,
                report.aggregate.surf_cd, report.aggregate.surf_hd, report.aggregate.srep_cd,
                report.aggregate.srep_hd);
    if (o.plot) {
        const fs::path dir = fs::path(o.out).parent_path() / "plots";
        emit_plots(net, eval_samples, n, seed, dir);
        std::printf("plots in %s\n", dir.string().c_str());
    }
}

struct PredictOpts {
    std::string ckpt;
    std::string in;
    std::string out;
    std::optional<int> input_points;
    uint64_t seed = 0;
};

void cmd_predict(const PredictOpts& o) {
    const auto t0 = std::chrono::steady_clock::now();
    const Checkpoint ckpt = load_checkpoint(o.ckpt);
    const SkeletonNet net = restore_network(ckpt);
    const PointCloud raw = read_point_file(o.in);
    const int n = o.input_points.value_or(1000);
    if (raw.rows() < n) {
        std::fprintf(stderr, "warning: %s has %lld points, fewer than %d; sampling with replacement\n",
                     o.in.c_str(), static_cast<long long>(raw.rows()), n);
    }
    const auto [normalized, tf] = normalize_cloud(raw);
    RngStream stream({o.seed, kPredictTag});
    const PointCloud cloud = sample_point_rows(normalized, n, stream);
    const SkeletalModel pred = predict_skeleton(cloud, net.forward(cloud));

    fs::create_directories(o.out);
    SrepFile srep = SrepFile::from_model(pred, SrepProvenance::Predicted);
    srep.skel_points = tf.to_original(srep.skel_points);
    srep.radii *= tf.scale;  // unit spoke directions are scale-free
    srep.has_normalization = true;
    srep.normalization = tf;
    write_srep_json(fs::path(o.out) / "srep.json", srep);
    write_ply(fs::path(o.out) / "reconstruction.ply", tf.to_original(reconstruct_surface(pred)));

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("predicted %d skeletal points from %s in %.2fs -> %s\n", pred.size(),
                o.in.c_str(), wall, o.out.c_str());
}

}  // namespace

int main(int argc, char** argv) {
    if (const char* device = std::getenv("SKELPT_DEVICE");
        device != nullptr && std::string(device) != "cpu") {
        std::fprintf(stderr, "error: SKELPT_DEVICE=%s is not available in this build (cpu only)\n",
                     device);
        return 1;
    }

    CLI::App app{"skeletal representation prediction from surface point clouds"};
    app.require_subcommand(1);

    GenDataOpts gen;
    auto* gen_cmd = app.add_subcommand("gen-data", "generate a deformed-ellipsoid dataset");
    gen_cmd->add_option("--count", gen.count, "number of samples")->required();
    gen_cmd->add_option("--seed", gen.seed, "generation seed");
    gen_cmd->add_option("--out", gen.out, "dataset directory")->required();
    gen_cmd->add_option("--a", gen.a, "base semi-axis a");
    gen_cmd->add_option("--b", gen.b, "base semi-axis b");
    gen_cmd->add_option("--c", gen.c, "base semi-axis c");
    gen_cmd->add_option("--surface-samples", gen.surface_samples, "surface points per sample");
    gen_cmd->add_option("--skeletal-samples", gen.skeletal_samples, "sheet samples per sample");
    gen_cmd->add_flag("--force", gen.force, "overwrite a partial or existing dataset");
    gen_cmd->callback([&gen] { cmd_gen_data(gen); });

    TrainOpts tr;
    auto* train_cmd = app.add_subcommand("train", "train from scratch");
    TrainOpts ft;
    auto* finetune_cmd = app.add_subcommand("finetune", "continue from a pretrained checkpoint");
    for (auto& [cmd, opts] : {std::pair{train_cmd, &tr}, {finetune_cmd, &ft}}) {
        cmd->add_option("--config", opts->config, "run configuration file")->required();
        cmd->add_option("--data", opts->data, "dataset directory (overrides config)");
        cmd->add_option("--out", opts->out, "output directory (overrides config)");
        cmd->add_option("--epochs", opts->epochs, "epoch count (overrides config)");
        cmd->add_option("--seed", opts->seed, "run seed (overrides config)");
    }
    train_cmd->add_flag("--resume", tr.resume, "continue from <out>/checkpoint.bin");
    finetune_cmd->add_option("--from", ft.from, "pretrained checkpoint")->required();
    train_cmd->callback([&tr] { cmd_train(tr, /*finetune=*/false); });
    finetune_cmd->callback([&ft] { cmd_train(ft, /*finetune=*/true); });

    EvalOpts ev;
    auto* eval_cmd = app.add_subcommand("eval", "score a checkpoint on a dataset split");
    eval_cmd->add_option("--ckpt", ev.ckpt, "checkpoint file");
    eval_cmd->add_option("--data", ev.data, "dataset directory")->required();
    eval_cmd->add_option("--split", ev.split, "train, val, test, or all");
    eval_cmd->add_option("--out", ev.out, "metrics csv path");
    eval_cmd->add_option("--config", ev.config, "run configuration (ablation protocol)");
    eval_cmd->add_option("--input-points", ev.input_points, "points fed to the network");
    eval_cmd->add_option("--seed", ev.seed, "evaluation resampling seed");
    eval_cmd->add_flag("--ablation", ev.ablation, "train and score the four loss-term rows");
    eval_cmd->add_flag("--plot", ev.plot, "emit per-sample skeleton overlay images");
    eval_cmd->callback([&ev] { cmd_eval(ev); });

    PredictOpts pr;
    auto* predict_cmd = app.add_subcommand("predict", "predict an s-rep for one shape file");
    predict_cmd->add_option("--ckpt", pr.ckpt, "checkpoint file")->required();
    predict_cmd->add_option("--in", pr.in, "input shape (.obj, .ply, or .xyz)")->required();
    predict_cmd->add_option("--out", pr.out, "output directory")->required();
    predict_cmd->add_option("--input-points", pr.input_points, "points fed to the network");
    predict_cmd->add_option("--seed", pr.seed, "resampling seed");
    predict_cmd->callback([&pr] { cmd_predict(pr); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}

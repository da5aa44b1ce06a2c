#pragma once

#include "skelpt/losses.hpp"
#include "skelpt/model.hpp"
#include "skelpt/synthetic.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace skelpt {

inline constexpr const char* kCheckpointFormatVersion = "SKELPT-CKPT-v1";

/// Adam update rule; betas and epsilon are the conventional defaults.
struct AdamConfig {
    double lr = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const;
};

struct TrainConfig {
    EncoderConfig encoder = EncoderConfig::defaults();
    AdamConfig adam;
    LossWeights loss;
    int epochs = 200;
    int batch_size = 6;
    int input_points = 1000;    // fresh subset drawn from each cloud every epoch
    uint64_t seed = 0;
    int checkpoint_every = 25;  // epochs between periodic checkpoints; 0 = final only

    void validate() const;
};

/// Everything needed to restore a network or resume its training run exactly:
/// architecture, parameters, optimizer moments, and position in the schedule.
struct Checkpoint {
    EncoderConfig encoder;
    AdamConfig adam;
    uint64_t seed = 0;
    int epoch = 0;  // completed epochs
    std::vector<std::string> param_names;
    std::vector<MatXf> params;
    std::vector<MatXf> adam_m;
    std::vector<MatXf> adam_v;
    int64_t adam_steps = 0;
};

/// Binary, versioned, atomic (written to a temp file and renamed into place).
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& file);
Checkpoint load_checkpoint(const std::filesystem::path& file);

/// Builds the network described by the checkpoint and loads its parameters.
SkeletonNet restore_network(const Checkpoint& ckpt);

/// Throws std::invalid_argument naming the first differing architecture field
/// (skeletal point count first, since the head width depends on it).
void require_matching_architecture(const EncoderConfig& ours, const EncoderConfig& theirs);

struct EpochRecord {
    int epoch = 0;       // 1-based
    LossBreakdown mean;  // per-sample average over the epoch
    double wall_seconds = 0.0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

struct TrainResult {
    Checkpoint checkpoint;
    std::vector<EpochRecord> history;
};

/// Minibatch Adam on the composite loss. Per epoch, sample order is
/// reshuffled and a fresh input_points-subset of every cloud is drawn, both
/// from streams keyed on (seed, epoch, sample id) so dataset order is
/// irrelevant. If out_dir is nonempty, appends one JSON line per epoch to
/// <out_dir>/train_log.jsonl and writes <out_dir>/checkpoint.bin at the
/// configured cadence and at the end. Throws on a non-finite batch loss,
/// naming the epoch, batch, and sample ids.
TrainResult train(const TrainConfig& cfg, const std::vector<DatasetSample>& samples,
                  const std::filesystem::path& out_dir = {},
                  const EpochCallback& on_epoch = nullptr);

/// Same loop started from a pretrained checkpoint's parameters, with a fresh
/// optimizer and the epoch counter reset. The checkpoint architecture must
/// match cfg.encoder exactly.
TrainResult fine_tune(const Checkpoint& start, const TrainConfig& cfg,
                      const std::vector<DatasetSample>& samples,
                      const std::filesystem::path& out_dir = {},
                      const EpochCallback& on_epoch = nullptr);

/// Picks up an interrupted run from <out_dir>/checkpoint.bin and continues
/// through cfg.epochs, replaying optimizer state so the loss curve has no seam.
TrainResult resume_training(const TrainConfig& cfg, const std::vector<DatasetSample>& samples,
                            const std::filesystem::path& out_dir,
                            const EpochCallback& on_epoch = nullptr);

}  // namespace skelpt

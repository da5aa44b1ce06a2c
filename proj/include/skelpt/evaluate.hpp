#pragma once

#include "skelpt/train.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace skelpt {

/// Chamfer/Hausdorff pairs for one held-out sample. skel_* compares predicted
/// skeletal points against the reference sheet samples; surf_* compares the
/// spoke-reconstructed surface against the network's input cloud; srep_*
/// compares that reconstruction against the reference spoke endpoints.
/// Columns whose reference is unavailable hold NaN.
struct SampleMetrics {
    std::string id;
    double skel_cd = 0.0;
    double skel_hd = 0.0;
    double surf_cd = 0.0;
    double surf_hd = 0.0;
    double srep_cd = 0.0;
    double srep_hd = 0.0;
};

struct MetricsReport {
    SampleMetrics aggregate;  // id "mean"; NaN columns excluded per-column
    std::vector<SampleMetrics> rows;
};

/// Deterministic held-out evaluation: for each sample, draw input_points
/// surface points from a stream keyed on (seed, sample id), predict, and
/// score. Samples lacking a reference s-rep get NaN in the skel/srep columns.
MetricsReport evaluate(const SkeletonNet& net, const std::vector<DatasetSample>& samples,
                       int input_points, uint64_t seed);

/// Header, one aggregate row, then one row per sample; NaN cells left empty.
void write_metrics_csv(const MetricsReport& report, const std::filesystem::path& file);

/// One training run of the spread/medial on-off grid.
struct AblationRow {
    bool spread = false;
    bool medial = false;
    MetricsReport report;
};

/// Trains the four spread/medial combinations (off-off, on-off, off-on,
/// on-on) from the same seed and data, then evaluates each on eval_samples.
/// Rows whose term is "off" run with that weight forced to zero; "on" keeps
/// the weight from base.loss. Checkpoints and logs land in
/// <out_dir>/<row name> when out_dir is nonempty.
std::vector<AblationRow> run_ablation(const TrainConfig& base,
                                      const std::vector<DatasetSample>& train_samples,
                                      const std::vector<DatasetSample>& eval_samples,
                                      const std::filesystem::path& out_dir = {},
                                      const EpochCallback& on_epoch = nullptr);

std::string ablation_row_name(const AblationRow& row);

/// Four rows, aggregate columns only.
void write_ablation_csv(const std::vector<AblationRow>& rows, const std::filesystem::path& file);

}  // namespace skelpt

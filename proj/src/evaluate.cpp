#include "skelpt/evaluate.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <utility>

namespace skelpt {

namespace {

constexpr uint64_t kEvalTag = 0x6576616cull;  // evaluation resampling stream

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

/// Per-column mean over the finite entries; NaN if a column has none.
SampleMetrics column_means(const std::vector<SampleMetrics>& rows) {
    SampleMetrics mean;
    mean.id = "mean";
    const auto reduce = [&rows](double SampleMetrics::* field) {
        double sum = 0.0;
        int n = 0;
        for (const SampleMetrics& r : rows) {
            if (std::isfinite(r.*field)) {
                sum += r.*field;
                ++n;
            }
        }
        return n > 0 ? sum / n : kNan;
    };
    mean.skel_cd = reduce(&SampleMetrics::skel_cd);
    mean.skel_hd = reduce(&SampleMetrics::skel_hd);
    mean.surf_cd = reduce(&SampleMetrics::surf_cd);
    mean.surf_hd = reduce(&SampleMetrics::surf_hd);
    mean.srep_cd = reduce(&SampleMetrics::srep_cd);
    mean.srep_hd = reduce(&SampleMetrics::srep_hd);
    return mean;
}

void append_cell(std::string& line, double v) {
    line += ',';
    if (!std::isfinite(v)) return;  // absent reference -> empty cell
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    line += buf;
}

std::string metrics_row(const SampleMetrics& m) {
    std::string line = m.id;
    append_cell(line, m.skel_cd);
    append_cell(line, m.skel_hd);
    append_cell(line, m.surf_cd);
    append_cell(line, m.surf_hd);
    append_cell(line, m.srep_cd);
    append_cell(line, m.srep_hd);
    return line;
}

}  // namespace

MetricsReport evaluate(const SkeletonNet& net, const std::vector<DatasetSample>& samples,
                       int input_points, uint64_t seed) {
    MetricsReport report;
    report.rows.reserve(samples.size());
    for (const DatasetSample& sample : samples) {
        RngStream stream({seed, kEvalTag, fnv1a64(sample.id)});
        const PointCloud cloud = sample_point_rows(sample.surface, input_points, stream);
        const SkeletalModel pred = predict_skeleton(cloud, net.forward(cloud));
        const PointSet recon = reconstruct_surface(pred);

        SampleMetrics m;
        m.id = sample.id;
        m.surf_cd = chamfer_distance(recon, cloud);
        m.surf_hd = hausdorff_distance(recon, cloud);
        if (sample.gt_srep.size() > 0) {
            m.skel_cd = chamfer_distance(pred.skel_points, sample.gt_srep.skel_points);
            m.skel_hd = hausdorff_distance(pred.skel_points, sample.gt_srep.skel_points);
            const PointSet gt_surface = sample.gt_srep.reconstructed_surface();
            m.srep_cd = chamfer_distance(recon, gt_surface);
            m.srep_hd = hausdorff_distance(recon, gt_surface);
        } else {
            m.skel_cd = m.skel_hd = m.srep_cd = m.srep_hd = kNan;
        }
        report.rows.push_back(std::move(m));
    }
    report.aggregate = column_means(report.rows);
    return report;
}

void write_metrics_csv(const MetricsReport& report, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write metrics csv " + file.string());
    }
    out << "id,skel_cd,skel_hd,surf_cd,surf_hd,srep_cd,srep_hd\n";
    out << metrics_row(report.aggregate) << "\n";
    for (const SampleMetrics& m : report.rows) {
        out << metrics_row(m) << "\n";
    }
}

std::string ablation_row_name(const AblationRow& row) {
    if (row.spread && row.medial) return "spread_medial";
    if (row.spread) return "spread";
    if (row.medial) return "medial";
    return "baseline";
}

std::vector<AblationRow> run_ablation(const TrainConfig& base,
                                      const std::vector<DatasetSample>& train_samples,
                                      const std::vector<DatasetSample>& eval_samples,
                                      const std::filesystem::path& out_dir,
                                      const EpochCallback& on_epoch) {
    std::vector<AblationRow> rows;
    constexpr std::pair<bool, bool> grid[] = {
        {false, false}, {true, false}, {false, true}, {true, true}};
    for (const auto& [spread, medial] : grid) {
        AblationRow row;
        row.spread = spread;
        row.medial = medial;
        TrainConfig cfg = base;
        if (!spread) cfg.loss.w_spread = 0.0;
        if (!medial) cfg.loss.w_medial = 0.0;
        const std::filesystem::path row_dir =
            out_dir.empty() ? out_dir : out_dir / ablation_row_name(row);
        const TrainResult result = train(cfg, train_samples, row_dir, on_epoch);
        const SkeletonNet net = restore_network(result.checkpoint);
        row.report = evaluate(net, eval_samples, base.input_points, base.seed);
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_ablation_csv(const std::vector<AblationRow>& rows,
                        const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write ablation csv " + file.string());
    }
    out << "row,spread,medial,skel_cd,skel_hd,surf_cd,surf_hd,srep_cd,srep_hd\n";
    for (const AblationRow& row : rows) {
        std::string line = ablation_row_name(row);
        line += row.spread ? ",on" : ",off";
        line += row.medial ? ",on" : ",off";
        const std::string agg = metrics_row(row.report.aggregate);
        line += agg.substr(agg.find(','));  // aggregate columns minus the id
        out << line << "\n";
    }
}

}  // namespace skelpt

#pragma once

#include "skelpt/geometry.hpp"

#include <filesystem>

namespace skelpt {

inline constexpr const char* kSrepFormatVersion = "SKELPT-SREP-v1";

/// Superset of the predicted and reference skeletal file contents. Predicted
/// files carry radii + unit spokes; reference files carry up/down spokes.
/// Empty matrices / vectors mark absent optional blocks.
struct SrepFile {
    PointSet skel_points;        // M x 3, required
    Eigen::VectorXd radii;       // M or empty
    PointSet spokes;             // M x 3 unit directions or 0 x 3
    PointSet up_spokes;          // M x 3 direction-times-length or 0 x 3
    PointSet down_spokes;        // M x 3 or 0 x 3
    SrepProvenance provenance = SrepProvenance::Predicted;
    bool has_normalization = false;
    NormalizationTransform normalization;  // prediction frame -> source frame

    int size() const { return static_cast<int>(skel_points.rows()); }
    void validate() const;

    static SrepFile from_model(const SkeletalModel& model, SrepProvenance provenance);
    static SrepFile from_ground_truth(const GroundTruthSrep& gt);
    SkeletalModel to_model() const;        // requires radii + spokes
    GroundTruthSrep to_ground_truth() const;  // requires up/down spokes
};

void write_srep_json(const std::filesystem::path& path, const SrepFile& srep);
SrepFile read_srep_json(const std::filesystem::path& path);

}  // namespace skelpt

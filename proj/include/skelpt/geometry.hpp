#pragma once

#include "skelpt/common.hpp"

#include <string>
#include <utility>
#include <vector>

namespace skelpt {

/// Maps a normalized cloud back to its source frame: original = p * scale + translation.
struct NormalizationTransform {
    Vec3 translation = Vec3::Zero();
    double scale = 1.0;

    PointSet to_original(const PointSet& pts) const;
    PointSet to_normalized(const PointSet& pts) const;
    Vec3 to_original(const Vec3& p) const { return p * scale + translation; }
    Vec3 to_normalized(const Vec3& p) const { return (p - translation) / scale; }
};

/// Skeletal points with per-point sphere radii and unit spoke directions.
struct SkeletalModel {
    PointSet skel_points;    // M x 3
    Eigen::VectorXd radii;   // M, nonnegative
    PointSet spokes;         // M x 3, unit norm

    int size() const { return static_cast<int>(skel_points.rows()); }
    void validate() const;  // throws std::invalid_argument on broken invariants
};

enum class SrepProvenance { Analytic, ExternalFit, Predicted };

std::string to_string(SrepProvenance p);
SrepProvenance srep_provenance_from_string(const std::string& s);

/// Reference skeletal sheet samples with two-sided spokes (direction times length).
struct GroundTruthSrep {
    PointSet skel_points;
    PointSet up_spokes;
    PointSet down_spokes;
    SrepProvenance provenance = SrepProvenance::Analytic;

    int size() const { return static_cast<int>(skel_points.rows()); }
    void validate() const;

    /// Spoke endpoints on both sides, 2M x 3.
    PointSet reconstructed_surface() const;
};

/// Centers the cloud and scales it so the farthest point sits on the unit sphere.
/// Throws on an empty cloud, non-finite coordinates, or an all-identical cloud.
std::pair<PointCloud, NormalizationTransform> normalize_cloud(const PointCloud& cloud);

/// Symmetric Chamfer distance: mean squared nearest-neighbor distance in both
/// directions, summed.
double chamfer_distance(const PointSet& a, const PointSet& b);

/// Symmetric Hausdorff distance (unsquared): max of the two directed maxima.
double hausdorff_distance(const PointSet& a, const PointSet& b);

struct KnnResult {
    Eigen::MatrixXi indices;     // Q x k, ties broken by lower reference index
    Eigen::MatrixXd distances;   // Q x k, nondecreasing per row
};

/// Exact k-nearest neighbors of each query row among the reference rows.
KnnResult nearest_neighbors(const PointSet& query, const PointSet& reference, int k);

/// Index of the nearest reference row for each query row (tie: lower index).
std::vector<int> nearest_index(const PointSet& query, const PointSet& reference);

/// count rows drawn from the cloud: a permutation prefix when the cloud is
/// large enough (no repeats), otherwise uniform draws with replacement.
PointCloud sample_point_rows(const PointCloud& cloud, int count, RngStream& stream);

void validate_weight_matrix(const WeightMatrix& w, double column_sum_tol = 1e-5);

/// S = W^T P. Validates shapes and column stochasticity.
PointSet convex_combination(const WeightMatrix& w, const PointCloud& points);

}  // namespace skelpt

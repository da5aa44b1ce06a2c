#pragma once

#include "skelpt/geometry.hpp"

namespace skelpt {

struct MatOracleResult {
    PointSet centers;       // cell centers of accepted maximal-sphere sites
    Eigen::VectorXd radii;  // exact distance from each center to the cloud
    double voxel_width = 0.0;
};

/// Brute-force medial-axis estimate of the solid enclosed by a sampled
/// surface. Voxelizes the bounding box, flood-fills the exterior, and keeps
/// interior cells whose distance field stops growing along the direction away
/// from the nearest surface sample (a maximality test) and whose inscribed
/// sphere touches the surface at two well-separated witness clusters. Test
/// instrumentation only: cost grows with the cube of the resolution.
///
/// Throws if the surface does not enclose any interior at this resolution
/// (open or too sparsely sampled) or the inputs are degenerate.
MatOracleResult brute_force_mat_oracle(const PointCloud& cloud, int grid_resolution);

}  // namespace skelpt

#pragma once

#include "skelpt/geometry.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace skelpt {

/// Axis-aligned ellipsoid x^2/a^2 + y^2/b^2 + z^2/c^2 = 1 with a >= b >= c > 0.
struct EllipsoidSpec {
    double a = 2.0;
    double b = 1.5;
    double c = 1.0;
    int surface_samples = 2000;
    int skeletal_samples = 100;

    void validate() const;
    bool is_sphere() const { return a - c <= 1e-12 * a; }
};

struct DeformationParams {
    Vec3 scales = Vec3::Ones();  // per-axis stretch, applied first
    double bend = 0.0;           // total turning angle of the long axis, radians
    double twist = 0.0;          // total rotation about the long axis, radians
    uint64_t seed = 0;           // stream the parameters were drawn from

    void validate() const;
};

struct DatasetSample {
    std::string id;
    PointCloud surface;        // normalized: zero mean, max radius 1
    GroundTruthSrep gt_srep;   // same normalized frame
    DeformationParams params;
};

/// Quasi-uniform surface samples: Fibonacci-sphere points scaled onto the axes.
PointCloud base_ellipsoid(const EllipsoidSpec& spec);

/// Closed-form skeletal sheet of the ellipsoid: the elliptical disk z = 0 with
/// semi-axes alpha = (a^2-c^2)/a, beta = (b^2-c^2)/b, sampled in a golden-angle
/// spiral strictly inside the rim. Up/down spokes run to the two tangency
/// points of each maximally inscribed sphere. A sphere degenerates to a single
/// skeletal point at the origin with r = a.
GroundTruthSrep analytic_medial_sheet(const EllipsoidSpec& spec);

/// Applies scale, then a linear-ramp twist about the x axis, then an arc bend
/// of the x axis, identically to surface points, skeletal points, and spoke
/// endpoints (spokes recomputed as endpoint - skeletal point). The twist/bend
/// ramps are parameterized by the surface cloud's x range after scaling.
/// Identity parameters reproduce the inputs exactly.
std::pair<PointCloud, GroundTruthSrep> deform(const PointCloud& cloud,
                                              const GroundTruthSrep& srep,
                                              const DeformationParams& params);

/// Scales ~ N(1, 0.15) per axis (resampled while nonpositive), bend ~
/// N(pi/3, pi/8), twist ~ N(pi/6, pi/8), all from a stream derived from
/// (seed, sample index) so generation order never matters.
DeformationParams draw_deformation_params(uint64_t seed, uint64_t sample_index);

/// Deterministic function of (count, base, seed); each sample deformed then
/// normalized to zero mean and unit max radius.
std::vector<DatasetSample> sample_dataset(int count, const EllipsoidSpec& base, uint64_t seed);

// ---- on-disk dataset ----

inline constexpr const char* kDatasetFormatVersion = "SKELPT-DATA-v1";

enum class Split { Train, Val, Test };

std::string to_string(Split s);

/// Stable id-hash split: 80% train, 10% val, 10% test.
Split split_of(const std::string& sample_id);

/// Layout: <dir>/<id>/{surface.ply, srep.json, params.json} plus a top-level
/// manifest.json written last as the completion marker. Refuses to touch a
/// directory holding prior samples unless force is set.
void write_dataset(const std::filesystem::path& dir, const std::vector<DatasetSample>& samples,
                   const EllipsoidSpec& base, uint64_t seed, bool force = false);

struct LoadedDataset {
    std::vector<DatasetSample> samples;
    EllipsoidSpec base;
    uint64_t seed = 0;
};

/// Reads a manifest-complete dataset; throws if the manifest is absent or the
/// format version does not match.
LoadedDataset load_dataset(const std::filesystem::path& dir);

}  // namespace skelpt

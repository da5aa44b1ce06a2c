#include "skelpt/synthetic.hpp"

#include "skelpt/point_io.hpp"
#include "skelpt/srep_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace skelpt {

namespace {

using nlohmann::json;

const double kGoldenAngle = std::numbers::pi * (3.0 - std::sqrt(5.0));

}  // namespace

void EllipsoidSpec::validate() const {
    if (!(a >= b && b >= c && c > 0.0)) {
        throw std::invalid_argument("ellipsoid spec: semi-axes must satisfy a >= b >= c > 0");
    }
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c)) {
        throw std::invalid_argument("ellipsoid spec: semi-axes must be finite");
    }
    if (surface_samples < 1 || skeletal_samples < 1) {
        throw std::invalid_argument("ellipsoid spec: sample counts must be >= 1");
    }
}

void DeformationParams::validate() const {
    if (!(scales.array() > 0.0).all() || !scales.allFinite()) {
        throw std::invalid_argument("deformation: scales must be positive and finite");
    }
    if (!std::isfinite(bend) || !std::isfinite(twist)) {
        throw std::invalid_argument("deformation: angles must be finite");
    }
}

PointCloud base_ellipsoid(const EllipsoidSpec& spec) {
    spec.validate();
    const int n = spec.surface_samples;
    PointCloud pts(n, 3);
    for (int k = 0; k < n; ++k) {
        const double z = 1.0 - 2.0 * (k + 0.5) / n;
        const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = kGoldenAngle * k;
        pts(k, 0) = spec.a * rho * std::cos(phi);
        pts(k, 1) = spec.b * rho * std::sin(phi);
        pts(k, 2) = spec.c * z;
    }
    return pts;
}

GroundTruthSrep analytic_medial_sheet(const EllipsoidSpec& spec) {
    spec.validate();
    GroundTruthSrep srep;
    srep.provenance = SrepProvenance::Analytic;

    if (spec.is_sphere()) {
        // all maximal spheres coincide with the shape; the skeleton is the center
        srep.skel_points = PointSet::Zero(1, 3);
        srep.up_spokes.resize(1, 3);
        srep.up_spokes << 0.0, 0.0, spec.a;
        srep.down_spokes = -srep.up_spokes;
        return srep;
    }

    // A surface point (x, y, z) owns the maximal sphere centered at
    // (x(a^2-c^2)/a^2, y(b^2-c^2)/b^2, 0); parameterizing the surface as
    // x = a t cos(theta), y = b t sin(theta), z = c sqrt(1-t^2) sweeps the
    // whole sheet as t runs over [0, 1).
    const int m = spec.skeletal_samples;
    srep.skel_points.resize(m, 3);
    srep.up_spokes.resize(m, 3);
    srep.down_spokes.resize(m, 3);
    const double fx = (spec.a * spec.a - spec.c * spec.c) / (spec.a * spec.a);
    const double fy = (spec.b * spec.b - spec.c * spec.c) / (spec.b * spec.b);
    for (int k = 0; k < m; ++k) {
        const double t = std::sqrt((k + 0.5) / m);
        const double theta = kGoldenAngle * k;
        const double x = spec.a * t * std::cos(theta);
        const double y = spec.b * t * std::sin(theta);
        const double z = spec.c * std::sqrt(std::max(0.0, 1.0 - t * t));
        const double u = x * fx;
        const double v = y * fy;
        srep.skel_points.row(k) << u, v, 0.0;
        srep.up_spokes.row(k) << x - u, y - v, z;
        srep.down_spokes.row(k) << x - u, y - v, -z;
    }
    return srep;
}

namespace {

struct DeformMap {
    Vec3 scales;
    double twist = 0.0;
    double bend = 0.0;
    double x_min = 0.0;
    double x_len = 1.0;  // of the scaled surface cloud

    Vec3 operator()(const Vec3& p) const {
        Vec3 q = p.cwiseProduct(scales);
        if (twist != 0.0) {
            const double angle = twist * (q.x() - x_min) / x_len;
            const double cs = std::cos(angle);
            const double sn = std::sin(angle);
            const double y = q.y() * cs - q.z() * sn;
            const double z = q.y() * sn + q.z() * cs;
            q.y() = y;
            q.z() = z;
        }
        if (bend != 0.0) {
            // carry the cross-section at arc length s rigidly along a circular
            // arc; radius chosen so the full length turns by the bend angle
            const double radius = x_len / bend;
            const double phi = (q.x() - x_min) / radius;
            const double cs = std::cos(phi);
            const double sn = std::sin(phi);
            const double x = x_min + radius * sn - q.z() * sn;
            const double z = radius * (1.0 - cs) + q.z() * cs;
            q.x() = x;
            q.z() = z;
        }
        return q;
    }
};

PointSet apply_map(const DeformMap& map, const PointSet& pts) {
    PointSet out(pts.rows(), 3);
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        out.row(i) = map(Vec3(pts.row(i))).transpose();
    }
    return out;
}

}  // namespace

std::pair<PointCloud, GroundTruthSrep> deform(const PointCloud& cloud,
                                              const GroundTruthSrep& srep,
                                              const DeformationParams& params) {
    params.validate();
    srep.validate();
    if (cloud.rows() == 0) throw std::invalid_argument("deform: empty cloud");

    DeformMap map;
    map.scales = params.scales;
    map.twist = params.twist;
    map.bend = params.bend;
    const double x_min = cloud.col(0).minCoeff() * params.scales.x();
    const double x_max = cloud.col(0).maxCoeff() * params.scales.x();
    map.x_min = std::min(x_min, x_max);  // negative scale is rejected upstream, keep robust
    map.x_len = std::abs(x_max - x_min);
    if (map.x_len <= 1e-12) {
        throw std::invalid_argument("deform: surface has zero extent along the long axis");
    }

    PointCloud out_cloud = apply_map(map, cloud);
    GroundTruthSrep out_srep;
    out_srep.provenance = srep.provenance;
    out_srep.skel_points = apply_map(map, srep.skel_points);
    out_srep.up_spokes =
        apply_map(map, PointSet(srep.skel_points + srep.up_spokes)) - out_srep.skel_points;
    out_srep.down_spokes =
        apply_map(map, PointSet(srep.skel_points + srep.down_spokes)) - out_srep.skel_points;
    return {std::move(out_cloud), std::move(out_srep)};
}

DeformationParams draw_deformation_params(uint64_t seed, uint64_t sample_index) {
    const uint64_t stream = mix_seed({seed, 0x73616d706c65ull, sample_index});
    RngStream rng(stream);
    DeformationParams params;
    params.seed = stream;
    for (int axis = 0; axis < 3; ++axis) {
        double s = rng.normal(1.0, 0.15);
        while (s <= 0.0) s = rng.normal(1.0, 0.15);  // nonpositive tail rejected
        params.scales(axis) = s;
    }
    params.bend = rng.normal(std::numbers::pi / 3.0, std::numbers::pi / 8.0);
    params.twist = rng.normal(std::numbers::pi / 6.0, std::numbers::pi / 8.0);
    return params;
}

std::vector<DatasetSample> sample_dataset(int count, const EllipsoidSpec& base, uint64_t seed) {
    if (count < 1) throw std::invalid_argument("sample_dataset: count must be >= 1");
    base.validate();
    const PointCloud surface = base_ellipsoid(base);
    const GroundTruthSrep sheet = analytic_medial_sheet(base);

    std::vector<DatasetSample> samples;
    samples.reserve(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) {
        DatasetSample sample;
        sample.params = draw_deformation_params(seed, static_cast<uint64_t>(i));
        auto [cloud, srep] = deform(surface, sheet, sample.params);

        auto [normalized, tf] = normalize_cloud(cloud);
        sample.surface = std::move(normalized);
        sample.gt_srep.provenance = srep.provenance;
        sample.gt_srep.skel_points = tf.to_normalized(srep.skel_points);
        sample.gt_srep.up_spokes = srep.up_spokes / tf.scale;
        sample.gt_srep.down_spokes = srep.down_spokes / tf.scale;

        char id[32];
        std::snprintf(id, sizeof(id), "sample_%05d", i);
        sample.id = id;
        samples.push_back(std::move(sample));
    }
    return samples;
}

std::string to_string(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Val: return "val";
        case Split::Test: return "test";
    }
    throw std::logic_error("unknown split");
}

Split split_of(const std::string& sample_id) {
    const uint64_t bucket = fnv1a64(sample_id) % 10;
    if (bucket < 8) return Split::Train;
    return bucket == 8 ? Split::Val : Split::Test;
}

namespace {

json spec_to_json(const EllipsoidSpec& spec) {
    return json{{"a", spec.a},
                {"b", spec.b},
                {"c", spec.c},
                {"surface_samples", spec.surface_samples},
                {"skeletal_samples", spec.skeletal_samples}};
}

EllipsoidSpec spec_from_json(const json& j) {
    EllipsoidSpec spec;
    spec.a = j.at("a").get<double>();
    spec.b = j.at("b").get<double>();
    spec.c = j.at("c").get<double>();
    spec.surface_samples = j.at("surface_samples").get<int>();
    spec.skeletal_samples = j.at("skeletal_samples").get<int>();
    return spec;
}

void write_json_file(const std::filesystem::path& path, const json& doc) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << doc.dump(2) << "\n";
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw std::runtime_error("invalid json in " + path.string() + ": " + e.what());
    }
    return doc;
}

bool has_sample_dirs(const std::filesystem::path& dir) {
    if (!std::filesystem::exists(dir)) return false;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_directory() && entry.path().filename().string().rfind("sample_", 0) == 0) {
            return true;
        }
    }
    return false;
}

}  // namespace

void write_dataset(const std::filesystem::path& dir, const std::vector<DatasetSample>& samples,
                   const EllipsoidSpec& base, uint64_t seed, bool force) {
    if (samples.empty()) throw std::invalid_argument("write_dataset: no samples");
    const auto manifest_path = dir / "manifest.json";
    if (!force) {
        if (std::filesystem::exists(manifest_path)) {
            throw std::runtime_error("dataset already exists at " + dir.string() +
                                     " (use force to overwrite)");
        }
        if (has_sample_dirs(dir)) {
            throw std::runtime_error("partial dataset (samples without manifest) at " +
                                     dir.string() + " (use force to overwrite)");
        }
    }
    std::filesystem::create_directories(dir);

    json ids = json::array();
    for (const auto& sample : samples) {
        const auto sample_dir = dir / sample.id;
        std::filesystem::create_directories(sample_dir);
        write_ply(sample_dir / "surface.ply", sample.surface);
        write_srep_json(sample_dir / "srep.json", SrepFile::from_ground_truth(sample.gt_srep));
        write_json_file(sample_dir / "params.json",
                        json{{"scales",
                              {sample.params.scales.x(), sample.params.scales.y(),
                               sample.params.scales.z()}},
                             {"bend", sample.params.bend},
                             {"twist", sample.params.twist},
                             {"seed", sample.params.seed}});
        ids.push_back(sample.id);
    }

    // the manifest is written last so its presence marks a complete dataset
    write_json_file(manifest_path, json{{"format", kDatasetFormatVersion},
                                        {"seed", seed},
                                        {"count", samples.size()},
                                        {"base", spec_to_json(base)},
                                        {"ids", ids}});
}

LoadedDataset load_dataset(const std::filesystem::path& dir) {
    const auto manifest_path = dir / "manifest.json";
    if (!std::filesystem::exists(manifest_path)) {
        throw std::runtime_error("no dataset manifest at " + manifest_path.string() +
                                 (has_sample_dirs(dir) ? " (generation incomplete?)" : ""));
    }
    const json manifest = read_json_file(manifest_path);
    if (!manifest.contains("format") ||
        manifest["format"].get<std::string>() != kDatasetFormatVersion) {
        throw std::runtime_error("unsupported dataset format in " + manifest_path.string());
    }

    LoadedDataset out;
    out.base = spec_from_json(manifest.at("base"));
    out.seed = manifest.at("seed").get<uint64_t>();
    for (const auto& id : manifest.at("ids")) {
        DatasetSample sample;
        sample.id = id.get<std::string>();
        const auto sample_dir = dir / sample.id;
        sample.surface = read_ply(sample_dir / "surface.ply");
        sample.gt_srep = read_srep_json(sample_dir / "srep.json").to_ground_truth();
        const json params = read_json_file(sample_dir / "params.json");
        const auto& scales = params.at("scales");
        sample.params.scales = Vec3(scales.at(0).get<double>(), scales.at(1).get<double>(),
                                    scales.at(2).get<double>());
        sample.params.bend = params.at("bend").get<double>();
        sample.params.twist = params.at("twist").get<double>();
        sample.params.seed = params.at("seed").get<uint64_t>();
        out.samples.push_back(std::move(sample));
    }
    if (out.samples.size() != manifest.at("count").get<size_t>()) {
        throw std::runtime_error("dataset count disagrees with manifest in " + dir.string());
    }
    return out;
}

}  // namespace skelpt

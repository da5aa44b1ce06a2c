#include "skelpt/srep_io.hpp"

#include <json.hpp>

#include <fstream>
#include <stdexcept>

namespace skelpt {

namespace {

using nlohmann::json;

json points_to_json(const PointSet& pts) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        rows.push_back({pts(i, 0), pts(i, 1), pts(i, 2)});
    }
    return rows;
}

PointSet points_from_json(const json& rows, const char* field) {
    if (!rows.is_array()) {
        throw std::invalid_argument(std::string("srep json: ") + field + " must be an array");
    }
    PointSet pts(static_cast<Eigen::Index>(rows.size()), 3);
    Eigen::Index i = 0;
    for (const auto& row : rows) {
        if (!row.is_array() || row.size() != 3) {
            throw std::invalid_argument(std::string("srep json: ") + field +
                                        " rows must be [x, y, z] triples");
        }
        for (int c = 0; c < 3; ++c) pts(i, c) = row[static_cast<size_t>(c)].get<double>();
        ++i;
    }
    return pts;
}

json vector_to_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

Eigen::VectorXd vector_from_json(const json& arr, const char* field) {
    if (!arr.is_array()) {
        throw std::invalid_argument(std::string("srep json: ") + field + " must be an array");
    }
    Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
    Eigen::Index i = 0;
    for (const auto& x : arr) v(i++) = x.get<double>();
    return v;
}

}  // namespace

void SrepFile::validate() const {
    const Eigen::Index m = skel_points.rows();
    if (m == 0) throw std::invalid_argument("srep: no skeletal points");
    if (!skel_points.allFinite()) throw std::invalid_argument("srep: non-finite skeletal points");
    auto check_rows = [&](const PointSet& block, const char* name) {
        if (block.rows() != 0 && block.rows() != m) {
            throw std::invalid_argument(std::string("srep: ") + name +
                                        " row count must match skeletal points");
        }
        if (!block.allFinite()) {
            throw std::invalid_argument(std::string("srep: non-finite ") + name);
        }
    };
    check_rows(spokes, "spokes");
    check_rows(up_spokes, "up spokes");
    check_rows(down_spokes, "down spokes");
    if (radii.size() != 0 && radii.size() != m) {
        throw std::invalid_argument("srep: radii length must match skeletal points");
    }
    if ((up_spokes.rows() == 0) != (down_spokes.rows() == 0)) {
        throw std::invalid_argument("srep: up/down spokes must be present together");
    }
    if (spokes.rows() == 0 && up_spokes.rows() == 0) {
        throw std::invalid_argument("srep: need unit spokes or up/down spokes");
    }
}

SrepFile SrepFile::from_model(const SkeletalModel& model, SrepProvenance provenance) {
    model.validate();
    SrepFile out;
    out.skel_points = model.skel_points;
    out.radii = model.radii;
    out.spokes = model.spokes;
    out.up_spokes.resize(0, 3);
    out.down_spokes.resize(0, 3);
    out.provenance = provenance;
    return out;
}

SrepFile SrepFile::from_ground_truth(const GroundTruthSrep& gt) {
    gt.validate();
    SrepFile out;
    out.skel_points = gt.skel_points;
    out.up_spokes = gt.up_spokes;
    out.down_spokes = gt.down_spokes;
    out.radii = 0.5 * (gt.up_spokes.rowwise().norm() + gt.down_spokes.rowwise().norm());
    out.spokes.resize(0, 3);
    out.provenance = gt.provenance;
    return out;
}

SkeletalModel SrepFile::to_model() const {
    if (radii.size() == 0 || spokes.rows() == 0) {
        throw std::invalid_argument("srep: file lacks radii/spokes required for a skeletal model");
    }
    SkeletalModel model;
    model.skel_points = skel_points;
    model.radii = radii;
    model.spokes = spokes;
    model.validate();
    return model;
}

GroundTruthSrep SrepFile::to_ground_truth() const {
    if (up_spokes.rows() == 0) {
        throw std::invalid_argument("srep: file lacks the up/down spokes of a reference srep");
    }
    GroundTruthSrep gt;
    gt.skel_points = skel_points;
    gt.up_spokes = up_spokes;
    gt.down_spokes = down_spokes;
    gt.provenance = provenance;
    gt.validate();
    return gt;
}

void write_srep_json(const std::filesystem::path& path, const SrepFile& srep) {
    srep.validate();
    json doc;
    doc["format"] = kSrepFormatVersion;
    doc["m"] = srep.size();
    doc["skel_points"] = points_to_json(srep.skel_points);
    if (srep.radii.size() > 0) doc["radii"] = vector_to_json(srep.radii);
    if (srep.spokes.rows() > 0) doc["spokes"] = points_to_json(srep.spokes);
    if (srep.up_spokes.rows() > 0) {
        doc["up_spokes"] = points_to_json(srep.up_spokes);
        doc["down_spokes"] = points_to_json(srep.down_spokes);
    }
    doc["provenance"] = to_string(srep.provenance);
    if (srep.has_normalization) {
        doc["normalization"] = {
            {"translation", {srep.normalization.translation.x(), srep.normalization.translation.y(),
                             srep.normalization.translation.z()}},
            {"scale", srep.normalization.scale},
        };
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << doc.dump(2) << "\n";
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

SrepFile read_srep_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw std::runtime_error("invalid json in " + path.string() + ": " + e.what());
    }
    if (!doc.contains("format") || doc["format"].get<std::string>() != kSrepFormatVersion) {
        throw std::runtime_error("unsupported srep format in " + path.string());
    }
    SrepFile srep;
    srep.skel_points = points_from_json(doc.at("skel_points"), "skel_points");
    srep.radii = doc.contains("radii") ? vector_from_json(doc["radii"], "radii") : Eigen::VectorXd();
    srep.spokes =
        doc.contains("spokes") ? points_from_json(doc["spokes"], "spokes") : PointSet(0, 3);
    if (doc.contains("up_spokes") || doc.contains("down_spokes")) {
        srep.up_spokes = points_from_json(doc.at("up_spokes"), "up_spokes");
        srep.down_spokes = points_from_json(doc.at("down_spokes"), "down_spokes");
    } else {
        srep.up_spokes.resize(0, 3);
        srep.down_spokes.resize(0, 3);
    }
    srep.provenance = srep_provenance_from_string(doc.at("provenance").get<std::string>());
    if (doc.contains("normalization")) {
        const auto& tf = doc["normalization"];
        const auto& t = tf.at("translation");
        srep.normalization.translation =
            Vec3(t.at(0).get<double>(), t.at(1).get<double>(), t.at(2).get<double>());
        srep.normalization.scale = tf.at("scale").get<double>();
        srep.has_normalization = true;
    }
    if (static_cast<int>(doc.at("m").get<int>()) != srep.size()) {
        throw std::runtime_error("srep m field disagrees with skeletal point count in " +
                                 path.string());
    }
    srep.validate();
    return srep;
}

}  // namespace skelpt

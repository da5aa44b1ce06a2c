#include "skelpt/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace skelpt {

PointSet NormalizationTransform::to_original(const PointSet& pts) const {
    PointSet out = pts * scale;
    out.rowwise() += translation.transpose();
    return out;
}

PointSet NormalizationTransform::to_normalized(const PointSet& pts) const {
    PointSet out = pts;
    out.rowwise() -= translation.transpose();
    out /= scale;
    return out;
}

void SkeletalModel::validate() const {
    const auto m = skel_points.rows();
    if (radii.size() != m || spokes.rows() != m) {
        throw std::invalid_argument("SkeletalModel: skel_points, radii and spokes must have equal length");
    }
    if ((radii.array() < 0.0).any()) {
        throw std::invalid_argument("SkeletalModel: radii must be nonnegative");
    }
    for (Eigen::Index j = 0; j < m; ++j) {
        if (std::abs(spokes.row(j).norm() - 1.0) > 1e-6) {
            throw std::invalid_argument("SkeletalModel: spokes must have unit norm");
        }
    }
}

std::string to_string(SrepProvenance p) {
    switch (p) {
        case SrepProvenance::Analytic: return "analytic";
        case SrepProvenance::ExternalFit: return "external-fit";
        case SrepProvenance::Predicted: return "predicted";
    }
    throw std::logic_error("unknown provenance");
}

SrepProvenance srep_provenance_from_string(const std::string& s) {
    if (s == "analytic") return SrepProvenance::Analytic;
    if (s == "external-fit") return SrepProvenance::ExternalFit;
    if (s == "predicted") return SrepProvenance::Predicted;
    throw std::invalid_argument("unknown srep provenance: " + s);
}

void GroundTruthSrep::validate() const {
    if (up_spokes.rows() != skel_points.rows() || down_spokes.rows() != skel_points.rows()) {
        throw std::invalid_argument("GroundTruthSrep: spoke counts must match skeletal point count");
    }
}

PointSet GroundTruthSrep::reconstructed_surface() const {
    const auto m = skel_points.rows();
    PointSet out(2 * m, 3);
    out.topRows(m) = skel_points + up_spokes;
    out.bottomRows(m) = skel_points + down_spokes;
    return out;
}

std::pair<PointCloud, NormalizationTransform> normalize_cloud(const PointCloud& cloud) {
    if (cloud.rows() == 0) {
        throw std::invalid_argument("normalize_cloud: empty cloud");
    }
    if (!cloud.allFinite()) {
        throw std::invalid_argument("normalize_cloud: non-finite coordinates");
    }
    const Vec3 centroid = cloud.colwise().mean();
    PointCloud centered = cloud;
    centered.rowwise() -= centroid.transpose();
    const double max_norm = centered.rowwise().norm().maxCoeff();
    if (max_norm <= 0.0) {
        throw std::invalid_argument("normalize_cloud: degenerate cloud (all points identical)");
    }
    centered /= max_norm;
    return {std::move(centered), NormalizationTransform{centroid, max_norm}};
}

namespace {

// Squared distance between rows; kept scalar so the nearest-neighbor scans
// stay branch-light and exact.
inline double sq_dist(const PointSet& a, Eigen::Index i, const PointSet& b, Eigen::Index j) {
    const double dx = a(i, 0) - b(j, 0);
    const double dy = a(i, 1) - b(j, 1);
    const double dz = a(i, 2) - b(j, 2);
    return dx * dx + dy * dy + dz * dz;
}

void require_non_empty(const PointSet& a, const PointSet& b, const char* who) {
    if (a.rows() == 0 || b.rows() == 0) {
        throw std::invalid_argument(std::string(who) + ": point sets must be non-empty");
    }
}

}  // namespace

double chamfer_distance(const PointSet& a, const PointSet& b) {
    require_non_empty(a, b, "chamfer_distance");
    double fwd = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < b.rows(); ++j) {
            best = std::min(best, sq_dist(a, i, b, j));
        }
        fwd += best;
    }
    double bwd = 0.0;
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            best = std::min(best, sq_dist(b, j, a, i));
        }
        bwd += best;
    }
    return fwd / static_cast<double>(a.rows()) + bwd / static_cast<double>(b.rows());
}

double hausdorff_distance(const PointSet& a, const PointSet& b) {
    require_non_empty(a, b, "hausdorff_distance");
    double fwd = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < b.rows(); ++j) {
            best = std::min(best, sq_dist(a, i, b, j));
        }
        fwd = std::max(fwd, best);
    }
    double bwd = 0.0;
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            best = std::min(best, sq_dist(b, j, a, i));
        }
        bwd = std::max(bwd, best);
    }
    return std::sqrt(std::max(fwd, bwd));
}

KnnResult nearest_neighbors(const PointSet& query, const PointSet& reference, int k) {
    if (query.rows() == 0 || reference.rows() == 0) {
        throw std::invalid_argument("nearest_neighbors: point sets must be non-empty");
    }
    if (k <= 0 || k > reference.rows()) {
        throw std::invalid_argument("nearest_neighbors: k must satisfy 1 <= k <= |reference|");
    }
    const Eigen::Index q = query.rows();
    const Eigen::Index n = reference.rows();
    KnnResult out;
    out.indices.resize(q, k);
    out.distances.resize(q, k);

    std::vector<std::pair<double, int>> heap;  // max-heap of (sq dist, index)
    heap.reserve(static_cast<size_t>(k));
    // (d1, i1) worse than (d2, i2) if farther, or equal distance with higher index.
    auto worse = [](const std::pair<double, int>& x, const std::pair<double, int>& y) {
        return x.first < y.first || (x.first == y.first && x.second < y.second);
    };
    for (Eigen::Index qi = 0; qi < q; ++qi) {
        heap.clear();
        for (Eigen::Index ri = 0; ri < n; ++ri) {
            const double d = sq_dist(query, qi, reference, ri);
            const std::pair<double, int> cand{d, static_cast<int>(ri)};
            if (static_cast<int>(heap.size()) < k) {
                heap.push_back(cand);
                std::push_heap(heap.begin(), heap.end(), worse);
            } else if (worse(cand, heap.front())) {
                std::pop_heap(heap.begin(), heap.end(), worse);
                heap.back() = cand;
                std::push_heap(heap.begin(), heap.end(), worse);
            }
        }
        std::sort_heap(heap.begin(), heap.end(), worse);
        for (int c = 0; c < k; ++c) {
            out.indices(qi, c) = heap[static_cast<size_t>(c)].second;
            out.distances(qi, c) = std::sqrt(heap[static_cast<size_t>(c)].first);
        }
    }
    return out;
}

std::vector<int> nearest_index(const PointSet& query, const PointSet& reference) {
    if (query.rows() == 0 || reference.rows() == 0) {
        throw std::invalid_argument("nearest_index: point sets must be non-empty");
    }
    std::vector<int> out(static_cast<size_t>(query.rows()));
    for (Eigen::Index qi = 0; qi < query.rows(); ++qi) {
        double best = std::numeric_limits<double>::infinity();
        int best_idx = 0;
        for (Eigen::Index ri = 0; ri < reference.rows(); ++ri) {
            const double d = sq_dist(query, qi, reference, ri);
            if (d < best) {
                best = d;
                best_idx = static_cast<int>(ri);
            }
        }
        out[static_cast<size_t>(qi)] = best_idx;
    }
    return out;
}

PointCloud sample_point_rows(const PointCloud& cloud, int count, RngStream& stream) {
    const int n = static_cast<int>(cloud.rows());
    if (n == 0) {
        throw std::invalid_argument("cannot sample from an empty cloud");
    }
    if (count <= 0) {
        throw std::invalid_argument("sample count must be positive");
    }
    PointCloud out(count, 3);
    if (n >= count) {
        const std::vector<int> perm = stream.permutation(n);
        for (int i = 0; i < count; ++i) {
            out.row(i) = cloud.row(perm[i]);
        }
    } else {
        for (int i = 0; i < count; ++i) {
            out.row(i) = cloud.row(static_cast<int>(stream.uniform_index(static_cast<uint64_t>(n))));
        }
    }
    return out;
}

void validate_weight_matrix(const WeightMatrix& w, double column_sum_tol) {
    if (w.rows() == 0 || w.cols() == 0) {
        throw std::invalid_argument("weight matrix: must be non-empty");
    }
    if (!w.allFinite()) {
        throw std::invalid_argument("weight matrix: non-finite entries");
    }
    if ((w.array() < 0.0).any()) {
        throw std::invalid_argument("weight matrix: negative entries");
    }
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
        if (std::abs(w.col(j).sum() - 1.0) > column_sum_tol) {
            throw std::invalid_argument("weight matrix: column " + std::to_string(j) +
                                        " does not sum to 1");
        }
    }
}

PointSet convex_combination(const WeightMatrix& w, const PointCloud& points) {
    if (w.rows() != points.rows()) {
        throw std::invalid_argument("convex_combination: weight rows must match point count");
    }
    validate_weight_matrix(w);
    return w.transpose() * points;
}

}  // namespace skelpt

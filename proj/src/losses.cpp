#include "skelpt/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace skelpt {

namespace {

inline double sign_of(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

constexpr double kDegenerateDist = 1e-12;

}  // namespace

void LossWeights::validate() const {
    if (w_cd < 0.0 || w_spread < 0.0 || w_medial < 0.0 || w_p2s < 0.0) {
        throw std::invalid_argument("loss weights must be nonnegative");
    }
    if (cd_start_epoch < 0 || spread_start_epoch < 0 || medial_start_epoch < 0 ||
        p2s_start_epoch < 0) {
        throw std::invalid_argument("loss activation epochs must be nonnegative");
    }
}

double loss_chamfer_supervision(const PointSet& pred, const PointSet& gt) {
    return chamfer_distance(pred, gt);
}

double loss_chamfer_supervision_grad(const PointSet& pred, const PointSet& gt,
                                     PointSet& grad_pred, double weight) {
    if (pred.rows() == 0 || gt.rows() == 0) {
        throw std::invalid_argument("loss_chamfer_supervision: empty input");
    }
    const double inv_pred = 1.0 / static_cast<double>(pred.rows());
    const double inv_gt = 1.0 / static_cast<double>(gt.rows());
    double total = 0.0;
    // forward: each predicted point to its nearest reference point
    const auto pred_to_gt = nearest_index(pred, gt);
    for (Eigen::Index i = 0; i < pred.rows(); ++i) {
        const Vec3 diff = pred.row(i) - gt.row(pred_to_gt[static_cast<size_t>(i)]);
        total += diff.squaredNorm() * inv_pred;
        grad_pred.row(i) += weight * 2.0 * inv_pred * diff.transpose();
    }
    // backward: each reference point pulls its nearest predicted point
    const auto gt_to_pred = nearest_index(gt, pred);
    for (Eigen::Index j = 0; j < gt.rows(); ++j) {
        const Eigen::Index i = gt_to_pred[static_cast<size_t>(j)];
        const Vec3 diff = pred.row(i) - gt.row(j);
        total += diff.squaredNorm() * inv_gt;
        grad_pred.row(i) += weight * 2.0 * inv_gt * diff.transpose();
    }
    return total;
}

double loss_spread(const PointSet& s) {
    if (s.rows() == 0) {
        throw std::invalid_argument("loss_spread: empty input");
    }
    const Eigen::Index m = s.rows();
    double sum = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = i + 1; j < m; ++j) {
            sum += 2.0 * (s.row(i) - s.row(j)).norm();  // ordered pairs (i,j) and (j,i)
        }
    }
    return -sum / static_cast<double>(m * m);
}

double loss_spread_grad(const PointSet& s, PointSet& grad, double weight) {
    if (s.rows() == 0) {
        throw std::invalid_argument("loss_spread: empty input");
    }
    const Eigen::Index m = s.rows();
    const double scale = weight * 2.0 / static_cast<double>(m * m);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = i + 1; j < m; ++j) {
            const Vec3 diff = s.row(i) - s.row(j);
            const double d = diff.norm();
            sum += 2.0 * d;
            if (d > kDegenerateDist) {
                const Vec3 g = diff / d;
                grad.row(i) -= scale * g.transpose();
                grad.row(j) += scale * g.transpose();
            }
        }
    }
    return -sum / static_cast<double>(m * m);
}

double loss_medial(const SkeletalModel& model, const PointCloud& cloud) {
    if (cloud.rows() < 3) {
        throw std::invalid_argument("loss_medial: need at least 3 surface points");
    }
    const auto knn = nearest_neighbors(model.skel_points, cloud, 3);
    double total = 0.0;
    for (Eigen::Index j = 0; j < model.skel_points.rows(); ++j) {
        for (int c = 0; c < 3; ++c) {
            total += std::abs(knn.distances(j, c) - model.radii(j));
        }
    }
    return total;
}

double loss_medial_grad(const SkeletalModel& model, const PointCloud& cloud,
                        PointSet& grad_points, Eigen::VectorXd& grad_radii, double weight) {
    if (cloud.rows() < 3) {
        throw std::invalid_argument("loss_medial: need at least 3 surface points");
    }
    const auto knn = nearest_neighbors(model.skel_points, cloud, 3);
    double total = 0.0;
    for (Eigen::Index j = 0; j < model.skel_points.rows(); ++j) {
        for (int c = 0; c < 3; ++c) {
            const double dist = knn.distances(j, c);
            const double term = dist - model.radii(j);
            total += std::abs(term);
            const double sgn = sign_of(term);
            grad_radii(j) -= weight * sgn;
            if (dist > kDegenerateDist) {
                const Vec3 diff = model.skel_points.row(j) - cloud.row(knn.indices(j, c));
                grad_points.row(j) += weight * sgn / dist * diff.transpose();
            }
        }
    }
    return total;
}

double loss_point2sphere(const SkeletalModel& model, const PointCloud& cloud) {
    if (cloud.rows() == 0 || model.skel_points.rows() == 0) {
        throw std::invalid_argument("loss_point2sphere: empty input");
    }
    const auto point_to_skel = nearest_index(cloud, model.skel_points);
    double surface_term = 0.0;
    for (Eigen::Index i = 0; i < cloud.rows(); ++i) {
        const Eigen::Index j = point_to_skel[static_cast<size_t>(i)];
        const double dist = (cloud.row(i) - model.skel_points.row(j)).norm();
        surface_term += std::abs(dist - model.radii(j));
    }
    const auto skel_to_point = nearest_index(model.skel_points, cloud);
    double skel_term = 0.0;
    for (Eigen::Index j = 0; j < model.skel_points.rows(); ++j) {
        const double dist =
            (cloud.row(skel_to_point[static_cast<size_t>(j)]) - model.skel_points.row(j)).norm();
        skel_term += std::abs(dist - model.radii(j));
    }
    return surface_term / static_cast<double>(cloud.rows()) +
           skel_term / static_cast<double>(model.skel_points.rows());
}

double loss_point2sphere_grad(const SkeletalModel& model, const PointCloud& cloud,
                              PointSet& grad_points, Eigen::VectorXd& grad_radii, double weight) {
    if (cloud.rows() == 0 || model.skel_points.rows() == 0) {
        throw std::invalid_argument("loss_point2sphere: empty input");
    }
    const double inv_n = 1.0 / static_cast<double>(cloud.rows());
    const double inv_m = 1.0 / static_cast<double>(model.skel_points.rows());
    double total = 0.0;

    const auto point_to_skel = nearest_index(cloud, model.skel_points);
    for (Eigen::Index i = 0; i < cloud.rows(); ++i) {
        const Eigen::Index j = point_to_skel[static_cast<size_t>(i)];
        const Vec3 diff = model.skel_points.row(j) - cloud.row(i);
        const double dist = diff.norm();
        const double term = dist - model.radii(j);
        total += std::abs(term) * inv_n;
        const double sgn = sign_of(term);
        grad_radii(j) -= weight * sgn * inv_n;
        if (dist > kDegenerateDist) {
            grad_points.row(j) += weight * sgn * inv_n / dist * diff.transpose();
        }
    }

    const auto skel_to_point = nearest_index(model.skel_points, cloud);
    for (Eigen::Index j = 0; j < model.skel_points.rows(); ++j) {
        const Vec3 diff = model.skel_points.row(j) - cloud.row(skel_to_point[static_cast<size_t>(j)]);
        const double dist = diff.norm();
        const double term = dist - model.radii(j);
        total += std::abs(term) * inv_m;
        const double sgn = sign_of(term);
        grad_radii(j) -= weight * sgn * inv_m;
        if (dist > kDegenerateDist) {
            grad_points.row(j) += weight * sgn * inv_m / dist * diff.transpose();
        }
    }
    return total;
}

LossBreakdown composite_loss(const SkeletalModel& pred, const PointCloud& cloud,
                             const GroundTruthSrep& gt, const LossWeights& weights, int epoch) {
    weights.validate();
    LossBreakdown out;
    if (weights.cd_active(epoch)) {
        out.cd = loss_chamfer_supervision(pred.skel_points, gt.skel_points);
        out.total += weights.w_cd * out.cd;
    }
    if (weights.spread_active(epoch)) {
        out.spread = loss_spread(pred.skel_points);
        out.total += weights.w_spread * out.spread;
    }
    if (weights.medial_active(epoch)) {
        out.medial = loss_medial(pred, cloud);
        out.total += weights.w_medial * out.medial;
    }
    if (weights.p2s_active(epoch)) {
        out.p2s = loss_point2sphere(pred, cloud);
        out.total += weights.w_p2s * out.p2s;
    }
    return out;
}

LossBreakdown composite_loss_grad(const SkeletalModel& pred, const PointCloud& cloud,
                                  const GroundTruthSrep& gt, const LossWeights& weights,
                                  int epoch, PointSet& grad_points, Eigen::VectorXd& grad_radii) {
    weights.validate();
    grad_points.setZero(pred.skel_points.rows(), 3);
    grad_radii.setZero(pred.skel_points.rows());
    LossBreakdown out;
    if (weights.cd_active(epoch)) {
        out.cd = loss_chamfer_supervision_grad(pred.skel_points, gt.skel_points, grad_points,
                                               weights.w_cd);
        out.total += weights.w_cd * out.cd;
    }
    if (weights.spread_active(epoch)) {
        out.spread = loss_spread_grad(pred.skel_points, grad_points, weights.w_spread);
        out.total += weights.w_spread * out.spread;
    }
    if (weights.medial_active(epoch)) {
        out.medial = loss_medial_grad(pred, cloud, grad_points, grad_radii, weights.w_medial);
        out.total += weights.w_medial * out.medial;
    }
    if (weights.p2s_active(epoch)) {
        out.p2s = loss_point2sphere_grad(pred, cloud, grad_points, grad_radii, weights.w_p2s);
        out.total += weights.w_p2s * out.p2s;
    }
    return out;
}

}  // namespace skelpt

#pragma once

#include "skelpt/geometry.hpp"

namespace skelpt {

/// Per-term weights and the epoch at which each term switches on.
struct LossWeights {
    double w_cd = 0.3;
    double w_spread = 0.1;
    double w_medial = 0.002;
    double w_p2s = 1.0;
    int cd_start_epoch = 0;
    int spread_start_epoch = 20;
    int medial_start_epoch = 20;
    int p2s_start_epoch = 0;

    void validate() const;
    bool cd_active(int epoch) const { return w_cd > 0.0 && epoch >= cd_start_epoch; }
    bool spread_active(int epoch) const { return w_spread > 0.0 && epoch >= spread_start_epoch; }
    bool medial_active(int epoch) const { return w_medial > 0.0 && epoch >= medial_start_epoch; }
    bool p2s_active(int epoch) const { return w_p2s > 0.0 && epoch >= p2s_start_epoch; }
};

struct LossBreakdown {
    double total = 0.0;
    double cd = 0.0;
    double spread = 0.0;
    double medial = 0.0;
    double p2s = 0.0;
};

/// Symmetric squared Chamfer distance between predicted and reference skeletal points.
double loss_chamfer_supervision(const PointSet& pred, const PointSet& gt);

/// Negative mean pairwise distance over all ordered index pairs; <= 0.
double loss_spread(const PointSet& s);

/// Sum over skeletal points of |dist - radius| to each of the three nearest
/// surface points. Requires at least 3 surface points.
double loss_medial(const SkeletalModel& model, const PointCloud& cloud);

/// Two-sided absolute deviation from the nearest skeletal sphere: mean over
/// surface points plus mean over skeletal points.
double loss_point2sphere(const SkeletalModel& model, const PointCloud& cloud);

LossBreakdown composite_loss(const SkeletalModel& pred, const PointCloud& cloud,
                             const GroundTruthSrep& gt, const LossWeights& weights, int epoch);

// Gradient companions. Each returns the loss value and accumulates (adds into)
// the gradients w.r.t. skeletal point positions and, where applicable, radii.
// Buffers must be pre-sized; nearest-neighbor assignments are treated as
// locally constant.
double loss_chamfer_supervision_grad(const PointSet& pred, const PointSet& gt,
                                     PointSet& grad_pred, double weight = 1.0);
double loss_spread_grad(const PointSet& s, PointSet& grad, double weight = 1.0);
double loss_medial_grad(const SkeletalModel& model, const PointCloud& cloud,
                        PointSet& grad_points, Eigen::VectorXd& grad_radii, double weight = 1.0);
double loss_point2sphere_grad(const SkeletalModel& model, const PointCloud& cloud,
                              PointSet& grad_points, Eigen::VectorXd& grad_radii,
                              double weight = 1.0);

/// Weighted sum of the active terms; gradients written (not accumulated) into
/// grad_points / grad_radii.
LossBreakdown composite_loss_grad(const SkeletalModel& pred, const PointCloud& cloud,
                                  const GroundTruthSrep& gt, const LossWeights& weights,
                                  int epoch, PointSet& grad_points, Eigen::VectorXd& grad_radii);

}  // namespace skelpt

#pragma once

#include "skelpt/geometry.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace skelpt {

using MatXf = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct SetAbstractionSpec {
    int npoint = 0;         // centers sampled at this level
    double radius = 0.0;    // ball query radius, normalized units
    int max_neighbors = 8;  // cap per center; padded by repeating the nearest
    std::vector<int> mlp;   // per-layer output widths
};

enum class FpsSeeding {
    Geometry,  // start at the point farthest from the centroid (permutation-consistent)
    RunSeed,   // start index drawn from the model seed
};

struct EncoderConfig {
    std::vector<SetAbstractionSpec> levels;
    std::vector<int> fp_widths;    // feature propagation output widths, coarse-to-fine
    std::vector<int> head_widths;  // hidden widths of the shared per-point head
    int m = 100;                   // skeletal point count (head output width)
    bool stop_radius_grad = false; // block the radius gradient path through d_i
    FpsSeeding fps_seeding = FpsSeeding::Geometry;

    static EncoderConfig defaults();
    void validate() const;
    int min_input_points() const;
    int feature_width() const { return fp_widths.back(); }
};

// ---- deterministic sampling / grouping primitives ----

/// Index of the point farthest from the centroid; ties resolved by
/// lexicographic coordinate comparison so the choice is order-independent.
int geometry_start_index(const PointSet& pts);

/// Exact farthest point sampling; argmax ties broken by lower index.
std::vector<int> farthest_point_sample(const PointSet& pts, int count, int start_index);

/// Up to max_neighbors nearest points within radius of each center (rows of
/// `pts` named by center_idx), sorted by distance, padded by repeating the
/// nearest entry. A center always finds at least itself.
Eigen::MatrixXi ball_query(const PointSet& pts, const std::vector<int>& center_idx,
                           double radius, int max_neighbors);

// ---- network ----

struct LinearLayer {
    MatXf w;  // in x out
    MatXf b;  // 1 x out
};

struct LayerCache {
    MatXf input;
    MatXf output;  // post-activation (raw logits for the final head layer)
};

struct SaCache {
    std::vector<int> centers;
    Eigen::MatrixXi neighbors;  // npoint x K, indices into the level's point rows
    std::vector<LayerCache> layers;
    Eigen::MatrixXi argmax;     // npoint x C_out, grouped-row index of each max
    MatXf pooled;               // npoint x C_out
};

struct FpCache {
    Eigen::MatrixXi idx;  // fine x 3, indices into coarse rows
    MatXf wgt;            // fine x 3, inverse-distance weights
    LayerCache layer;     // input = [interpolated | skip]
    int interp_cols = 0;
};

struct ForwardCache {
    std::vector<PointSet> level_coords;  // level 0 = input cloud
    std::vector<SaCache> sa;
    std::vector<FpCache> fp;             // in execution order, coarse to fine
    std::vector<LayerCache> head;
    Eigen::MatrixXd weights;             // N x M, column-stochastic
};

struct TensorRef {
    std::string name;
    MatXf* data;
};

/// Point-set encoder (two-scale set abstraction + feature propagation) with a
/// shared per-point head producing one column-stochastic weight per skeletal point.
class SkeletonNet {
public:
    SkeletonNet(EncoderConfig cfg, uint64_t init_seed);

    const EncoderConfig& config() const { return cfg_; }
    uint64_t init_seed() const { return init_seed_; }

    /// Per-point feature matrix (N x F). Throws if N is below the sampling requirement.
    MatXf encode(const PointCloud& cloud) const;

    /// Softmax over the point axis per skeletal column; entries strictly positive.
    WeightMatrix predict_weights(const MatXf& features) const;

    WeightMatrix forward(const PointCloud& cloud) const;

    const WeightMatrix& forward_cached(const PointCloud& cloud, ForwardCache& cache) const;

    /// Accumulates parameter gradients (aligned with tensors()) from dL/dW.
    void backward(const ForwardCache& cache, const Eigen::MatrixXd& weight_grad,
                  std::vector<MatXf>& param_grads) const;

    std::vector<TensorRef> tensors();
    std::vector<TensorRef> tensors() const;  // refs remain mutable internally; used for io
    std::vector<MatXf> zero_like_params() const;
    int64_t parameter_count() const;

private:
    void encode_impl(const PointCloud& cloud, ForwardCache& cache) const;
    void head_impl(const MatXf& features, ForwardCache& cache) const;

    EncoderConfig cfg_;
    uint64_t init_seed_ = 0;
    std::vector<std::vector<LinearLayer>> sa_mlps_;
    std::vector<LinearLayer> fp_layers_;
    std::vector<LinearLayer> head_layers_;
};

// ---- skeleton construction from weights ----

struct SkeletonForward {
    PointSet skel_points;      // M x 3
    Eigen::VectorXd d;         // per input point: distance to nearest skeletal point
    std::vector<int> d_nn;     // index of that nearest skeletal point
    Eigen::VectorXd radii;     // M
};

SkeletonForward forward_skeleton(const PointCloud& cloud, const WeightMatrix& w);

/// dL/dW from (dL/dS, dL/dr); nearest assignments treated as constant.
Eigen::MatrixXd backward_skeleton(const PointCloud& cloud, const WeightMatrix& w,
                                  const SkeletonForward& fwd, const PointSet& grad_points,
                                  const Eigen::VectorXd& grad_radii, bool stop_radius_grad);

/// Full prediction: S = W^T P, radii as the weight-averaged point-to-skeleton
/// distances, spokes toward each column's highest-weight input point.
SkeletalModel predict_skeleton(const PointCloud& cloud, const WeightMatrix& w);

/// Unit direction from each skeletal point to its column's highest-weight
/// input point (ties: lowest index). Throws if the two coincide.
PointSet predict_spokes(const WeightMatrix& w, const PointCloud& cloud, const PointSet& skel);

/// One reconstructed surface point per skeletal point: s + r * spoke.
PointSet reconstruct_surface(const SkeletalModel& model);

}  // namespace skelpt

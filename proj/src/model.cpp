#include "skelpt/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace skelpt {

EncoderConfig EncoderConfig::defaults() {
    EncoderConfig cfg;
    cfg.levels = {
        {512, 0.2, 8, {32, 64}},
        {128, 0.4, 8, {64, 128}},
    };
    cfg.fp_widths = {128, 128};
    cfg.head_widths = {64};
    cfg.m = 100;
    return cfg;
}

void EncoderConfig::validate() const {
    if (m < 1) throw std::invalid_argument("encoder config: m must be >= 1");
    if (levels.empty()) throw std::invalid_argument("encoder config: at least one level required");
    int prev = std::numeric_limits<int>::max();
    for (const auto& level : levels) {
        if (level.npoint < 1 || level.npoint > prev) {
            throw std::invalid_argument("encoder config: sample counts must be positive and nonincreasing");
        }
        if (level.radius <= 0.0) throw std::invalid_argument("encoder config: level radius must be > 0");
        if (level.max_neighbors < 1) throw std::invalid_argument("encoder config: max_neighbors must be >= 1");
        if (level.mlp.empty()) throw std::invalid_argument("encoder config: level mlp must be non-empty");
        for (int w : level.mlp) {
            if (w < 1) throw std::invalid_argument("encoder config: feature widths must be >= 1");
        }
        prev = level.npoint;
    }
    if (fp_widths.size() != levels.size()) {
        throw std::invalid_argument("encoder config: need one fp width per level");
    }
    for (int w : fp_widths) {
        if (w < 1) throw std::invalid_argument("encoder config: fp widths must be >= 1");
    }
    for (int w : head_widths) {
        if (w < 1) throw std::invalid_argument("encoder config: head widths must be >= 1");
    }
}

int EncoderConfig::min_input_points() const {
    int largest = 1;
    for (const auto& level : levels) largest = std::max(largest, level.npoint);
    return largest;
}

int geometry_start_index(const PointSet& pts) {
    const Vec3 centroid = pts.colwise().mean();
    int best = 0;
    double best_d = -1.0;
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        const double d = (pts.row(i).transpose() - centroid).squaredNorm();
        bool take = d > best_d;
        if (d == best_d) {
            // order-independent tie break: lexicographically larger coordinates win
            for (int c = 0; c < 3; ++c) {
                if (pts(i, c) != pts(best, c)) {
                    take = pts(i, c) > pts(best, c);
                    break;
                }
            }
        }
        if (take) {
            best = static_cast<int>(i);
            best_d = d;
        }
    }
    return best;
}

std::vector<int> farthest_point_sample(const PointSet& pts, int count, int start_index) {
    const Eigen::Index n = pts.rows();
    if (count < 1 || count > n) {
        throw std::invalid_argument("farthest_point_sample: count must satisfy 1 <= count <= N");
    }
    if (start_index < 0 || start_index >= n) {
        throw std::invalid_argument("farthest_point_sample: start index out of range");
    }
    std::vector<int> selected;
    selected.reserve(static_cast<size_t>(count));
    selected.push_back(start_index);
    Eigen::VectorXd min_d2 = (pts.rowwise() - pts.row(start_index)).rowwise().squaredNorm();
    for (int t = 1; t < count; ++t) {
        int next = 0;
        double best = -1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (min_d2(i) > best) {
                best = min_d2(i);
                next = static_cast<int>(i);
            }
        }
        selected.push_back(next);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double d2 = (pts.row(i) - pts.row(next)).squaredNorm();
            if (d2 < min_d2(i)) min_d2(i) = d2;
        }
    }
    return selected;
}

Eigen::MatrixXi ball_query(const PointSet& pts, const std::vector<int>& center_idx,
                           double radius, int max_neighbors) {
    const double r2 = radius * radius;
    Eigen::MatrixXi out(static_cast<Eigen::Index>(center_idx.size()), max_neighbors);
    std::vector<std::pair<double, int>> found;
    auto closer = [](const std::pair<double, int>& a, const std::pair<double, int>& b) {
        return a.first < b.first || (a.first == b.first && a.second < b.second);
    };
    for (size_t c = 0; c < center_idx.size(); ++c) {
        found.clear();
        const Eigen::Index ci = center_idx[c];
        for (Eigen::Index i = 0; i < pts.rows(); ++i) {
            const double d2 = (pts.row(i) - pts.row(ci)).squaredNorm();
            if (d2 <= r2) found.emplace_back(d2, static_cast<int>(i));
        }
        const int keep = std::min<int>(max_neighbors, static_cast<int>(found.size()));
        std::partial_sort(found.begin(), found.begin() + keep, found.end(), closer);
        for (int k = 0; k < max_neighbors; ++k) {
            out(static_cast<Eigen::Index>(c), k) = found[static_cast<size_t>(std::min(k, keep - 1))].second;
        }
    }
    return out;
}

namespace {

LinearLayer make_layer(int in, int out, double stddev, RngStream& rng) {
    LinearLayer layer;
    layer.w.resize(in, out);
    for (Eigen::Index i = 0; i < layer.w.size(); ++i) {
        layer.w.data()[i] = static_cast<float>(rng.normal(0.0, stddev));
    }
    layer.b = MatXf::Zero(1, out);
    return layer;
}

inline void linear_forward(const LinearLayer& layer, const MatXf& in, MatXf& out, bool relu) {
    out.noalias() = in * layer.w;
    out.rowwise() += layer.b.row(0);
    if (relu) out = out.cwiseMax(0.0f);
}

// dOut already masked by the activation where applicable.
inline void linear_backward(const LinearLayer& layer, const MatXf& in, const MatXf& d_out,
                            MatXf& d_w, MatXf& d_b, MatXf* d_in) {
    d_w.noalias() += in.transpose() * d_out;
    d_b.row(0) += d_out.colwise().sum();
    if (d_in) d_in->noalias() = d_out * layer.w.transpose();
}

inline MatXf relu_mask_apply(const MatXf& post_act, const MatXf& d_out) {
    return (post_act.array() > 0.0f).select(d_out, 0.0f);
}

}  // namespace

SkeletonNet::SkeletonNet(EncoderConfig cfg, uint64_t init_seed)
    : cfg_(std::move(cfg)), init_seed_(init_seed) {
    cfg_.validate();
    uint64_t layer_id = 0;
    auto next_rng = [&]() { return RngStream({init_seed_, 0x6c61796572ull, layer_id++}); };

    int skip_width = 0;  // feature width carried at the current level
    std::vector<int> level_widths;  // SA output width per level
    for (const auto& level : cfg_.levels) {
        std::vector<LinearLayer> mlp;
        int in = 3 + skip_width;  // relative xyz concatenated with neighbor features
        for (int out : level.mlp) {
            auto rng = next_rng();
            mlp.push_back(make_layer(in, out, std::sqrt(2.0 / in), rng));
            in = out;
        }
        sa_mlps_.push_back(std::move(mlp));
        skip_width = level.mlp.back();
        level_widths.push_back(skip_width);
    }

    // feature propagation, coarsest to finest; level 0 skips raw xyz
    int coarse_width = level_widths.back();
    for (size_t step = 0; step < cfg_.levels.size(); ++step) {
        const size_t fine_level = cfg_.levels.size() - 1 - step;
        const int skip = fine_level == 0 ? 3 : level_widths[fine_level - 1];
        const int in = coarse_width + skip;
        const int out = cfg_.fp_widths[step];
        auto rng = next_rng();
        fp_layers_.push_back(make_layer(in, out, std::sqrt(2.0 / in), rng));
        coarse_width = out;
    }

    int in = cfg_.feature_width();
    for (int out : cfg_.head_widths) {
        auto rng = next_rng();
        head_layers_.push_back(make_layer(in, out, std::sqrt(2.0 / in), rng));
        in = out;
    }
    {
        // small final init keeps the initial weight columns near uniform
        auto rng = next_rng();
        head_layers_.push_back(make_layer(in, cfg_.m, 0.01, rng));
    }
}

void SkeletonNet::encode_impl(const PointCloud& cloud, ForwardCache& cache) const {
    const Eigen::Index n = cloud.rows();
    if (n < cfg_.min_input_points()) {
        throw std::invalid_argument("encode: cloud has fewer points than the largest level sample count");
    }
    if (!cloud.allFinite()) {
        throw std::invalid_argument("encode: non-finite coordinates");
    }

    cache.level_coords.assign(1, cloud);
    cache.sa.assign(cfg_.levels.size(), SaCache{});
    cache.fp.assign(cfg_.levels.size(), FpCache{});

    // set abstraction
    for (size_t l = 0; l < cfg_.levels.size(); ++l) {
        const auto& spec = cfg_.levels[l];
        const PointSet& pts = cache.level_coords[l];
        SaCache& sa = cache.sa[l];

        int start = 0;
        if (cfg_.fps_seeding == FpsSeeding::Geometry) {
            start = geometry_start_index(pts);
        } else {
            RngStream rng({init_seed_, 0x667073ull, static_cast<uint64_t>(l)});
            start = static_cast<int>(rng.uniform_index(static_cast<uint64_t>(pts.rows())));
        }
        sa.centers = farthest_point_sample(pts, spec.npoint, start);
        sa.neighbors = ball_query(pts, sa.centers, spec.radius, spec.max_neighbors);

        const MatXf* feats = l == 0 ? nullptr : &cache.sa[l - 1].pooled;
        const int feat_cols = feats ? static_cast<int>(feats->cols()) : 0;
        const int k = spec.max_neighbors;

        sa.layers.assign(spec.mlp.size(), LayerCache{});
        MatXf& grouped = sa.layers[0].input;
        grouped.resize(static_cast<Eigen::Index>(spec.npoint) * k, 3 + feat_cols);
        for (int c = 0; c < spec.npoint; ++c) {
            const Eigen::Index center = sa.centers[static_cast<size_t>(c)];
            for (int slot = 0; slot < k; ++slot) {
                const Eigen::Index nb = sa.neighbors(c, slot);
                const Eigen::Index row = static_cast<Eigen::Index>(c) * k + slot;
                grouped(row, 0) = static_cast<float>(pts(nb, 0) - pts(center, 0));
                grouped(row, 1) = static_cast<float>(pts(nb, 1) - pts(center, 1));
                grouped(row, 2) = static_cast<float>(pts(nb, 2) - pts(center, 2));
                if (feats) grouped.row(row).tail(feat_cols) = feats->row(nb);
            }
        }
        for (size_t li = 0; li < sa_mlps_[l].size(); ++li) {
            linear_forward(sa_mlps_[l][li], sa.layers[li].input, sa.layers[li].output, true);
            if (li + 1 < sa_mlps_[l].size()) sa.layers[li + 1].input = sa.layers[li].output;
        }

        // max pool over each center's neighbor rows
        const MatXf& last = sa.layers.back().output;
        const int c_out = static_cast<int>(last.cols());
        sa.pooled.resize(spec.npoint, c_out);
        sa.argmax.resize(spec.npoint, c_out);
        for (int c = 0; c < spec.npoint; ++c) {
            const Eigen::Index base = static_cast<Eigen::Index>(c) * k;
            for (int ch = 0; ch < c_out; ++ch) {
                float best = last(base, ch);
                Eigen::Index best_row = base;
                for (int slot = 1; slot < k; ++slot) {
                    if (last(base + slot, ch) > best) {
                        best = last(base + slot, ch);
                        best_row = base + slot;
                    }
                }
                sa.pooled(c, ch) = best;
                sa.argmax(c, ch) = static_cast<int>(best_row);
            }
        }

        PointSet next_coords(spec.npoint, 3);
        for (int c = 0; c < spec.npoint; ++c) {
            next_coords.row(c) = pts.row(sa.centers[static_cast<size_t>(c)]);
        }
        cache.level_coords.push_back(std::move(next_coords));
    }

    // feature propagation back to the input points
    const MatXf* coarse_feats = &cache.sa.back().pooled;
    for (size_t step = 0; step < cfg_.levels.size(); ++step) {
        const size_t fine_level = cfg_.levels.size() - 1 - step;
        const PointSet& fine_pts = cache.level_coords[fine_level];
        const PointSet& coarse_pts = cache.level_coords[fine_level + 1];
        FpCache& fp = cache.fp[step];

        const int kk = static_cast<int>(std::min<Eigen::Index>(3, coarse_pts.rows()));
        const auto knn = nearest_neighbors(fine_pts, coarse_pts, kk);
        const Eigen::Index fine_n = fine_pts.rows();
        fp.idx.resize(fine_n, 3);
        fp.wgt.resize(fine_n, 3);
        for (Eigen::Index i = 0; i < fine_n; ++i) {
            double inv[3] = {0.0, 0.0, 0.0};
            double total = 0.0;
            for (int c = 0; c < 3; ++c) {
                const int cc = std::min(c, kk - 1);
                fp.idx(i, c) = knn.indices(i, cc);
                inv[c] = c < kk ? 1.0 / std::max(knn.distances(i, cc), 1e-10) : 0.0;
                total += inv[c];
            }
            for (int c = 0; c < 3; ++c) {
                fp.wgt(i, c) = static_cast<float>(inv[c] / total);
            }
        }

        const int coarse_cols = static_cast<int>(coarse_feats->cols());
        fp.interp_cols = coarse_cols;
        const MatXf* skip = fine_level == 0 ? nullptr : &cache.sa[fine_level - 1].pooled;
        const int skip_cols = skip ? static_cast<int>(skip->cols()) : 3;
        MatXf& concat = fp.layer.input;
        concat.setZero(fine_n, coarse_cols + skip_cols);
        for (Eigen::Index i = 0; i < fine_n; ++i) {
            for (int c = 0; c < 3; ++c) {
                concat.row(i).head(coarse_cols) += fp.wgt(i, c) * coarse_feats->row(fp.idx(i, c));
            }
            if (skip) {
                concat.row(i).tail(skip_cols) = skip->row(i);
            } else {
                concat(i, coarse_cols + 0) = static_cast<float>(fine_pts(i, 0));
                concat(i, coarse_cols + 1) = static_cast<float>(fine_pts(i, 1));
                concat(i, coarse_cols + 2) = static_cast<float>(fine_pts(i, 2));
            }
        }
        linear_forward(fp_layers_[step], concat, fp.layer.output, true);
        coarse_feats = &fp.layer.output;
    }
}

void SkeletonNet::head_impl(const MatXf& features, ForwardCache& cache) const {
    if (!features.allFinite()) {
        throw std::invalid_argument("predict_weights: non-finite features");
    }
    cache.head.assign(head_layers_.size(), LayerCache{});
    const MatXf* in = &features;
    for (size_t li = 0; li < head_layers_.size(); ++li) {
        const bool relu = li + 1 < head_layers_.size();
        cache.head[li].input = *in;
        linear_forward(head_layers_[li], cache.head[li].input, cache.head[li].output, relu);
        in = &cache.head[li].output;
    }

    // softmax over the point axis, per skeletal column, in double
    const MatXf& logits = cache.head.back().output;
    const Eigen::Index n = logits.rows();
    const Eigen::Index m = logits.cols();
    cache.weights.resize(n, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        double max_logit = -std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < n; ++i) {
            max_logit = std::max(max_logit, static_cast<double>(logits(i, j)));
        }
        double sum = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double e = std::exp(static_cast<double>(logits(i, j)) - max_logit);
            cache.weights(i, j) = e;
            sum += e;
        }
        cache.weights.col(j) /= sum;
    }
}

MatXf SkeletonNet::encode(const PointCloud& cloud) const {
    ForwardCache cache;
    encode_impl(cloud, cache);
    return cache.fp.back().layer.output;
}

WeightMatrix SkeletonNet::predict_weights(const MatXf& features) const {
    ForwardCache cache;
    head_impl(features, cache);
    return cache.weights;
}

WeightMatrix SkeletonNet::forward(const PointCloud& cloud) const {
    ForwardCache cache;
    return forward_cached(cloud, cache);
}

const WeightMatrix& SkeletonNet::forward_cached(const PointCloud& cloud, ForwardCache& cache) const {
    encode_impl(cloud, cache);
    head_impl(cache.fp.back().layer.output, cache);
    return cache.weights;
}

void SkeletonNet::backward(const ForwardCache& cache, const Eigen::MatrixXd& weight_grad,
                           std::vector<MatXf>& param_grads) const {
    const Eigen::Index n = cache.weights.rows();
    const Eigen::Index m = cache.weights.cols();

    // softmax backward per column: dz = w .* (g - <g, w>)
    MatXf d_logits(n, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        const double dot = weight_grad.col(j).dot(cache.weights.col(j));
        for (Eigen::Index i = 0; i < n; ++i) {
            d_logits(i, j) =
                static_cast<float>(cache.weights(i, j) * (weight_grad(i, j) - dot));
        }
    }

    // grad slots follow tensors() order: sa levels, fp steps, head layers
    auto grad_at = [&](size_t base, size_t layer_idx) -> std::pair<MatXf&, MatXf&> {
        const size_t s = base + 2 * layer_idx;
        return {param_grads[s], param_grads[s + 1]};
    };
    size_t sa_base = 0;
    std::vector<size_t> sa_bases;
    for (const auto& mlp : sa_mlps_) {
        sa_bases.push_back(sa_base);
        sa_base += 2 * mlp.size();
    }
    const size_t fp_base = sa_base;
    const size_t head_base = fp_base + 2 * fp_layers_.size();

    // head backward; d_cur ends as the gradient w.r.t. the encoder features
    MatXf d_cur = d_logits;
    for (size_t li = head_layers_.size(); li-- > 0;) {
        if (li + 1 < head_layers_.size()) {
            d_cur = relu_mask_apply(cache.head[li].output, d_cur);
        }
        auto [d_w, d_b] = grad_at(head_base, li);
        MatXf d_in;
        linear_backward(head_layers_[li], cache.head[li].input, d_cur, d_w, d_b, &d_in);
        d_cur = std::move(d_in);
    }

    // feature propagation backward, fine to coarse
    std::vector<MatXf> d_sa_pooled(cfg_.levels.size());
    for (size_t step = cfg_.levels.size(); step-- > 0;) {
        const size_t fine_level = cfg_.levels.size() - 1 - step;
        const FpCache& fp = cache.fp[step];
        d_cur = relu_mask_apply(fp.layer.output, d_cur);
        auto [d_w, d_b] = grad_at(fp_base, step);
        MatXf d_concat;
        linear_backward(fp_layers_[step], fp.layer.input, d_cur, d_w, d_b, &d_concat);

        if (fine_level > 0) {
            // skip connection feeds this level's pooled features
            MatXf& d_skip = d_sa_pooled[fine_level - 1];
            const int skip_cols = static_cast<int>(d_concat.cols()) - fp.interp_cols;
            if (d_skip.size() == 0) {
                d_skip = MatXf::Zero(cache.sa[fine_level - 1].pooled.rows(),
                                     cache.sa[fine_level - 1].pooled.cols());
            }
            d_skip += d_concat.rightCols(skip_cols);
        }
        // scatter interpolation gradient onto the coarse features
        MatXf d_coarse;
        const Eigen::Index coarse_rows = cache.level_coords[fine_level + 1].rows();
        d_coarse = MatXf::Zero(coarse_rows, fp.interp_cols);
        for (Eigen::Index i = 0; i < d_concat.rows(); ++i) {
            for (int c = 0; c < 3; ++c) {
                d_coarse.row(fp.idx(i, c)) += fp.wgt(i, c) * d_concat.row(i).head(fp.interp_cols);
            }
        }
        if (step == 0) {
            // coarsest features are the last SA level's pooled output
            MatXf& d_pool = d_sa_pooled[cfg_.levels.size() - 1];
            if (d_pool.size() == 0) d_pool = std::move(d_coarse);
            else d_pool += d_coarse;
        } else {
            d_cur = std::move(d_coarse);  // gradient w.r.t. the previous fp step's output
        }
    }

    // set abstraction backward, deep to shallow
    for (size_t l = cfg_.levels.size(); l-- > 0;) {
        const SaCache& sa = cache.sa[l];
        const auto& spec = cfg_.levels[l];
        const MatXf& d_pool = d_sa_pooled[l];

        // route pooled gradients back to the argmax rows
        const MatXf& last = sa.layers.back().output;
        MatXf d_grouped = MatXf::Zero(last.rows(), last.cols());
        for (Eigen::Index c = 0; c < d_pool.rows(); ++c) {
            for (Eigen::Index ch = 0; ch < d_pool.cols(); ++ch) {
                d_grouped(sa.argmax(c, ch), ch) += d_pool(c, ch);
            }
        }

        for (size_t li = sa_mlps_[l].size(); li-- > 0;) {
            d_grouped = relu_mask_apply(sa.layers[li].output, d_grouped);
            auto [d_w, d_b] = grad_at(sa_bases[l], li);
            MatXf d_in;
            const bool need_input_grad = li > 0 || l > 0;
            linear_backward(sa_mlps_[l][li], sa.layers[li].input, d_grouped, d_w, d_b,
                            need_input_grad ? &d_in : nullptr);
            if (need_input_grad) d_grouped = std::move(d_in);
        }

        if (l > 0) {
            // grouped columns beyond rel-xyz came from the previous level's features
            MatXf& d_prev = d_sa_pooled[l - 1];
            if (d_prev.size() == 0) {
                d_prev = MatXf::Zero(cache.sa[l - 1].pooled.rows(), cache.sa[l - 1].pooled.cols());
            }
            const int feat_cols = static_cast<int>(d_prev.cols());
            const int k = spec.max_neighbors;
            for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(sa.centers.size()); ++c) {
                for (int slot = 0; slot < k; ++slot) {
                    const Eigen::Index row = c * k + slot;
                    d_prev.row(sa.neighbors(c, slot)) += d_grouped.row(row).tail(feat_cols);
                }
            }
        }
    }
}

std::vector<TensorRef> SkeletonNet::tensors() {
    std::vector<TensorRef> out;
    for (size_t l = 0; l < sa_mlps_.size(); ++l) {
        for (size_t i = 0; i < sa_mlps_[l].size(); ++i) {
            const std::string base = "sa" + std::to_string(l) + "." + std::to_string(i);
            out.push_back({base + ".w", &sa_mlps_[l][i].w});
            out.push_back({base + ".b", &sa_mlps_[l][i].b});
        }
    }
    for (size_t i = 0; i < fp_layers_.size(); ++i) {
        const std::string base = "fp" + std::to_string(i);
        out.push_back({base + ".w", &fp_layers_[i].w});
        out.push_back({base + ".b", &fp_layers_[i].b});
    }
    for (size_t i = 0; i < head_layers_.size(); ++i) {
        const std::string base = "head" + std::to_string(i);
        out.push_back({base + ".w", &head_layers_[i].w});
        out.push_back({base + ".b", &head_layers_[i].b});
    }
    return out;
}

std::vector<TensorRef> SkeletonNet::tensors() const {
    return const_cast<SkeletonNet*>(this)->tensors();
}

std::vector<MatXf> SkeletonNet::zero_like_params() const {
    std::vector<MatXf> out;
    for (const auto& ref : tensors()) {
        out.push_back(MatXf::Zero(ref.data->rows(), ref.data->cols()));
    }
    return out;
}

int64_t SkeletonNet::parameter_count() const {
    int64_t total = 0;
    for (const auto& ref : tensors()) total += ref.data->size();
    return total;
}

SkeletonForward forward_skeleton(const PointCloud& cloud, const WeightMatrix& w) {
    if (w.rows() != cloud.rows()) {
        throw std::invalid_argument("forward_skeleton: weight rows must match point count");
    }
    SkeletonForward fwd;
    fwd.skel_points = w.transpose() * cloud;
    fwd.d_nn = nearest_index(cloud, fwd.skel_points);
    fwd.d.resize(cloud.rows());
    for (Eigen::Index i = 0; i < cloud.rows(); ++i) {
        fwd.d(i) = (cloud.row(i) - fwd.skel_points.row(fwd.d_nn[static_cast<size_t>(i)])).norm();
    }
    fwd.radii = w.transpose() * fwd.d;
    return fwd;
}

Eigen::MatrixXd backward_skeleton(const PointCloud& cloud, const WeightMatrix& w,
                                  const SkeletonForward& fwd, const PointSet& grad_points,
                                  const Eigen::VectorXd& grad_radii, bool stop_radius_grad) {
    Eigen::MatrixXd d_w = fwd.d * grad_radii.transpose();  // radius term, direct path

    PointSet grad_s = grad_points;
    if (!stop_radius_grad) {
        const Eigen::VectorXd grad_d = w * grad_radii;
        for (Eigen::Index i = 0; i < cloud.rows(); ++i) {
            if (fwd.d(i) > 1e-12) {
                const Eigen::Index j = fwd.d_nn[static_cast<size_t>(i)];
                grad_s.row(j) += grad_d(i) / fwd.d(i) * (fwd.skel_points.row(j) - cloud.row(i));
            }
        }
    }
    d_w.noalias() += cloud * grad_s.transpose();
    return d_w;
}

SkeletalModel predict_skeleton(const PointCloud& cloud, const WeightMatrix& w) {
    validate_weight_matrix(w);
    const auto fwd = forward_skeleton(cloud, w);
    SkeletalModel model;
    model.skel_points = fwd.skel_points;
    model.radii = fwd.radii;
    model.spokes = predict_spokes(w, cloud, fwd.skel_points);
    return model;
}

PointSet predict_spokes(const WeightMatrix& w, const PointCloud& cloud, const PointSet& skel) {
    if (w.rows() != cloud.rows() || w.cols() != skel.rows()) {
        throw std::invalid_argument("predict_spokes: shape mismatch");
    }
    PointSet spokes(skel.rows(), 3);
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
        Eigen::Index best = 0;
        for (Eigen::Index i = 1; i < w.rows(); ++i) {
            if (w(i, j) > w(best, j)) best = i;  // ties keep the lower index
        }
        const Vec3 dir = cloud.row(best) - skel.row(j);
        const double len = dir.norm();
        if (len <= 1e-9) {
            throw std::invalid_argument("predict_spokes: highest-weight point coincides with skeletal point " +
                                        std::to_string(j));
        }
        spokes.row(j) = (dir / len).transpose();
    }
    return spokes;
}

PointSet reconstruct_surface(const SkeletalModel& model) {
    return model.skel_points + model.radii.asDiagonal() * model.spokes;
}

}  // namespace skelpt

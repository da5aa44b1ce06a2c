#include "skelpt/mat_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace skelpt {

namespace {

// Acceptance constants, in voxel widths unless noted. The floor and growth
// threshold form a cheap grid prefilter (ordinary interior cells see the
// distance field grow at unit rate along the away-from-surface direction;
// across a medial sheet the rate drops). Surviving candidates are re-centered
// by an exact-distance gradient ascent that must stall within a short budget
// (the maximality test), and the stalled point must see the surface in two
// directions at least the witness angle apart.
constexpr double kDepthFloorCells = 4.0;
constexpr double kGrowthRateLimit = 0.8;
constexpr double kAscentStepCells = 0.5;
constexpr int kAscentMaxSteps = 12;
constexpr double kAscentStallRate = 0.75;
constexpr double kWitnessSlackCells = 0.75;
constexpr double kMinWitnessAngleRad = 35.0 * std::numbers::pi / 180.0;

struct Grid {
    int nx = 0, ny = 0, nz = 0;
    double h = 0.0;
    Vec3 origin = Vec3::Zero();

    int64_t size() const { return int64_t(nx) * ny * nz; }
    int64_t index(int i, int j, int k) const { return (int64_t(i) * ny + j) * nz + k; }
    bool contains(int i, int j, int k) const {
        return i >= 0 && i < nx && j >= 0 && j < ny && k >= 0 && k < nz;
    }
    Vec3 center(int i, int j, int k) const {
        return origin + Vec3((i + 0.5) * h, (j + 0.5) * h, (k + 0.5) * h);
    }
};

struct Site {
    int16_t x = -1, y = -1, z = -1;
    bool valid() const { return x >= 0; }
};

// Exact squared Euclidean feature transform on the cell lattice: for every
// cell, the nearest marked cell. Separable lower-envelope passes over squared
// parabolas, carrying the winning site through each axis.
void feature_transform(const Grid& g, const std::vector<uint8_t>& marked, std::vector<Site>& site) {
    const int64_t inf = std::numeric_limits<int64_t>::max() / 4;
    std::vector<int64_t> dist(static_cast<size_t>(g.size()), inf);
    site.assign(static_cast<size_t>(g.size()), Site{});

    // pass 1: along z (contiguous), plain two-sweep over point sites
    for (int i = 0; i < g.nx; ++i) {
        for (int j = 0; j < g.ny; ++j) {
            const int64_t base = g.index(i, j, 0);
            int last = -1;
            for (int k = 0; k < g.nz; ++k) {
                if (marked[static_cast<size_t>(base + k)]) last = k;
                if (last >= 0) {
                    const int64_t d = k - last;
                    dist[static_cast<size_t>(base + k)] = d * d;
                    site[static_cast<size_t>(base + k)] = {int16_t(i), int16_t(j), int16_t(last)};
                }
            }
            last = -1;
            for (int k = g.nz - 1; k >= 0; --k) {
                if (marked[static_cast<size_t>(base + k)]) last = k;
                if (last >= 0) {
                    const int64_t d = last - k;
                    if (d * d < dist[static_cast<size_t>(base + k)]) {
                        dist[static_cast<size_t>(base + k)] = d * d;
                        site[static_cast<size_t>(base + k)] =
                            {int16_t(i), int16_t(j), int16_t(last)};
                    }
                }
            }
        }
    }

    // passes 2 and 3: lower envelope of parabolas rooted at the previous
    // pass's distances, along y then x
    const int max_n = std::max(g.nx, g.ny);
    std::vector<int> v(static_cast<size_t>(max_n));       // parabola roots
    std::vector<double> zb(static_cast<size_t>(max_n) + 1);  // envelope breakpoints
    std::vector<int64_t> f(static_cast<size_t>(max_n));
    std::vector<Site> row_site(static_cast<size_t>(max_n));
    std::vector<int64_t> row_out(static_cast<size_t>(max_n));
    std::vector<Site> row_out_site(static_cast<size_t>(max_n));

    auto envelope_pass = [&](int n, auto load, auto store) {
        for (int q = 0; q < n; ++q) f[static_cast<size_t>(q)] = load(q);
        int m = -1;
        for (int q = 0; q < n; ++q) {
            if (f[static_cast<size_t>(q)] >= inf) continue;
            double s;
            while (true) {
                if (m < 0) break;
                const int p = v[static_cast<size_t>(m)];
                s = (double(f[static_cast<size_t>(q)] - f[static_cast<size_t>(p)]) +
                     double(int64_t(q) * q - int64_t(p) * p)) /
                    (2.0 * (q - p));
                if (s > zb[static_cast<size_t>(m)]) break;
                --m;
            }
            if (m < 0) {
                m = 0;
                v[0] = q;
                zb[0] = -std::numeric_limits<double>::infinity();
                zb[1] = std::numeric_limits<double>::infinity();
            } else {
                ++m;
                v[static_cast<size_t>(m)] = q;
                zb[static_cast<size_t>(m)] = s;
                zb[static_cast<size_t>(m) + 1] = std::numeric_limits<double>::infinity();
            }
        }
        if (m < 0) {
            for (int q = 0; q < n; ++q) store(q, inf, Site{});
            return;
        }
        int idx = 0;
        for (int q = 0; q < n; ++q) {
            while (zb[static_cast<size_t>(idx) + 1] < q) ++idx;
            const int p = v[static_cast<size_t>(idx)];
            const int64_t d = q - p;
            store(q, f[static_cast<size_t>(p)] + d * d, row_site[static_cast<size_t>(p)]);
        }
    };

    for (int i = 0; i < g.nx; ++i) {
        for (int k = 0; k < g.nz; ++k) {
            envelope_pass(
                g.ny,
                [&](int j) {
                    row_site[static_cast<size_t>(j)] = site[static_cast<size_t>(g.index(i, j, k))];
                    return dist[static_cast<size_t>(g.index(i, j, k))];
                },
                [&](int j, int64_t d, Site s) {
                    row_out[static_cast<size_t>(j)] = d;
                    row_out_site[static_cast<size_t>(j)] = s;
                });
            for (int j = 0; j < g.ny; ++j) {
                dist[static_cast<size_t>(g.index(i, j, k))] = row_out[static_cast<size_t>(j)];
                site[static_cast<size_t>(g.index(i, j, k))] = row_out_site[static_cast<size_t>(j)];
            }
        }
    }
    for (int j = 0; j < g.ny; ++j) {
        for (int k = 0; k < g.nz; ++k) {
            envelope_pass(
                g.nx,
                [&](int i) {
                    row_site[static_cast<size_t>(i)] = site[static_cast<size_t>(g.index(i, j, k))];
                    return dist[static_cast<size_t>(g.index(i, j, k))];
                },
                [&](int i, int64_t d, Site s) {
                    row_out[static_cast<size_t>(i)] = d;
                    row_out_site[static_cast<size_t>(i)] = s;
                });
            for (int i = 0; i < g.nx; ++i) {
                dist[static_cast<size_t>(g.index(i, j, k))] = row_out[static_cast<size_t>(i)];
                site[static_cast<size_t>(g.index(i, j, k))] = row_out_site[static_cast<size_t>(i)];
            }
        }
    }
}

double site_distance(const Grid& g, const Site& s, int i, int j, int k) {
    const double dx = double(i - s.x), dy = double(j - s.y), dz = double(k - s.z);
    return g.h * std::sqrt(dx * dx + dy * dy + dz * dz);
}

}  // namespace

MatOracleResult brute_force_mat_oracle(const PointCloud& cloud, int grid_resolution) {
    if (cloud.rows() < 4) {
        throw std::invalid_argument("mat oracle: need a sampled closed surface");
    }
    if (!cloud.allFinite()) {
        throw std::invalid_argument("mat oracle: non-finite coordinates");
    }
    if (grid_resolution < 8) {
        throw std::invalid_argument("mat oracle: resolution must be >= 8");
    }

    const Vec3 lo = cloud.colwise().minCoeff();
    const Vec3 hi = cloud.colwise().maxCoeff();
    const Vec3 extent = hi - lo;
    const double max_extent = extent.maxCoeff();
    if (max_extent <= 0.0) {
        throw std::invalid_argument("mat oracle: degenerate (zero-extent) cloud");
    }

    Grid g;
    g.h = max_extent / grid_resolution;
    const int pad = 2;
    g.nx = int(std::ceil(extent.x() / g.h)) + 2 * pad;
    g.ny = int(std::ceil(extent.y() / g.h)) + 2 * pad;
    g.nz = int(std::ceil(extent.z() / g.h)) + 2 * pad;
    g.origin = lo - Vec3::Constant(pad * g.h);
    if (std::max({g.nx, g.ny, g.nz}) > 20000) {
        throw std::invalid_argument("mat oracle: grid too large");
    }

    auto cell_of = [&](const Vec3& p, int& i, int& j, int& k) {
        i = int(std::floor((p.x() - g.origin.x()) / g.h));
        j = int(std::floor((p.y() - g.origin.y()) / g.h));
        k = int(std::floor((p.z() - g.origin.z()) / g.h));
    };

    // The shell must be watertight even when the sample spacing exceeds the
    // voxel width, so each sample marks a ball sized from the measured
    // inter-sample spacing (95th percentile of nearest-neighbor distances).
    double spacing = 0.0;
    {
        const Eigen::Index probes = std::min<Eigen::Index>(cloud.rows(), 2000);
        const Eigen::Index stride = std::max<Eigen::Index>(1, cloud.rows() / probes);
        std::vector<double> nn;
        for (Eigen::Index r = 0; r < cloud.rows(); r += stride) {
            double best = std::numeric_limits<double>::infinity();
            for (Eigen::Index q = 0; q < cloud.rows(); ++q) {
                if (q == r) continue;
                best = std::min(best, (cloud.row(r) - cloud.row(q)).squaredNorm());
            }
            nn.push_back(std::sqrt(best));
        }
        std::sort(nn.begin(), nn.end());
        spacing = nn[static_cast<size_t>(0.95 * double(nn.size() - 1))];
    }
    if (spacing > max_extent / 8.0) {
        throw std::invalid_argument("mat oracle: surface sampling too sparse for this shape");
    }
    // largest surface holes run ~1.2x the nearest-neighbor spacing, so the
    // balls must comfortably exceed that to seal the shell
    const double shell_r = std::max(1.25 * spacing, 0.87 * g.h);
    const int shell_reach = int(std::ceil(shell_r / g.h)) + 1;

    std::vector<uint8_t> shell(static_cast<size_t>(g.size()), 0);
    for (Eigen::Index r = 0; r < cloud.rows(); ++r) {
        const Vec3 p = cloud.row(r);
        int ci, cj, ck;
        cell_of(p, ci, cj, ck);
        for (int i = std::max(0, ci - shell_reach); i <= std::min(g.nx - 1, ci + shell_reach); ++i) {
            for (int j = std::max(0, cj - shell_reach); j <= std::min(g.ny - 1, cj + shell_reach);
                 ++j) {
                for (int k = std::max(0, ck - shell_reach);
                     k <= std::min(g.nz - 1, ck + shell_reach); ++k) {
                    if ((g.center(i, j, k) - p).norm() <= shell_r) {
                        shell[static_cast<size_t>(g.index(i, j, k))] = 1;
                    }
                }
            }
        }
    }

    // flood the exterior from a padded corner; what survives is the interior
    std::vector<uint8_t> exterior(static_cast<size_t>(g.size()), 0);
    {
        std::vector<int64_t> stack;
        stack.push_back(0);
        exterior[0] = 1;
        const int64_t strides[3] = {int64_t(g.ny) * g.nz, int64_t(g.nz), 1};
        while (!stack.empty()) {
            const int64_t cur = stack.back();
            stack.pop_back();
            const int i = int(cur / (int64_t(g.ny) * g.nz));
            const int j = int((cur / g.nz) % g.ny);
            const int k = int(cur % g.nz);
            const int coord[3] = {i, j, k};
            const int dims[3] = {g.nx, g.ny, g.nz};
            for (int axis = 0; axis < 3; ++axis) {
                for (int step = -1; step <= 1; step += 2) {
                    if (coord[axis] + step < 0 || coord[axis] + step >= dims[axis]) continue;
                    const int64_t nb = cur + step * strides[axis];
                    if (!exterior[static_cast<size_t>(nb)] && !shell[static_cast<size_t>(nb)]) {
                        exterior[static_cast<size_t>(nb)] = 1;
                        stack.push_back(nb);
                    }
                }
            }
        }
    }

    std::vector<Site> site;
    feature_transform(g, shell, site);

    // directions for the growth probe: integer offsets up to 2 cells, fine
    // enough that quantizing the away-from-surface direction costs < ~8 deg
    std::vector<Eigen::Vector3i> offsets;
    for (int i = -2; i <= 2; ++i) {
        for (int j = -2; j <= 2; ++j) {
            for (int k = -2; k <= 2; ++k) {
                if (i || j || k) offsets.emplace_back(i, j, k);
            }
        }
    }
    std::vector<Vec3> offset_dirs;
    offset_dirs.reserve(offsets.size());
    for (const auto& o : offsets) offset_dirs.push_back(o.cast<double>().normalized());

    std::vector<Vec3> candidates;
    int64_t interior_cells = 0;
    for (int i = 0; i < g.nx; ++i) {
        for (int j = 0; j < g.ny; ++j) {
            for (int k = 0; k < g.nz; ++k) {
                const int64_t idx = g.index(i, j, k);
                if (shell[static_cast<size_t>(idx)] || exterior[static_cast<size_t>(idx)]) continue;
                ++interior_cells;
                const Site& s = site[static_cast<size_t>(idx)];
                if (!s.valid()) continue;
                const double depth = site_distance(g, s, i, j, k);
                if (depth < kDepthFloorCells * g.h) continue;

                const Vec3 away =
                    Vec3(double(i - s.x), double(j - s.y), double(k - s.z)).normalized();
                size_t best = 0;
                double best_dot = -2.0;
                for (size_t o = 0; o < offset_dirs.size(); ++o) {
                    const double dot = away.dot(offset_dirs[o]);
                    if (dot > best_dot) {
                        best_dot = dot;
                        best = o;
                    }
                }
                const Eigen::Vector3i& q = offsets[best];
                const int ni = i + q.x(), nj = j + q.y(), nk = k + q.z();
                if (!g.contains(ni, nj, nk)) continue;
                const Site& ns = site[static_cast<size_t>(g.index(ni, nj, nk))];
                if (!ns.valid()) continue;
                const double step_len = g.h * q.cast<double>().norm();
                const double growth = site_distance(g, ns, ni, nj, nk) - depth;
                if (growth >= kGrowthRateLimit * step_len) continue;  // still growing: not maximal

                candidates.push_back(g.center(i, j, k));
            }
        }
    }
    if (interior_cells == 0) {
        throw std::invalid_argument(
            "mat oracle: surface encloses no interior at this resolution (open surface?)");
    }

    // exact confirmation against the cloud samples
    const double cos_limit = std::cos(kMinWitnessAngleRad);
    const double step = kAscentStepCells * g.h;
    std::vector<Vec3> accepted;
    std::vector<double> radii;
    Eigen::VectorXd d2(cloud.rows());
    std::vector<Eigen::Index> witnesses;
    for (const Vec3& c : candidates) {
        // ascend the exact distance field; a maximal-sphere center is where
        // the growth stalls (the gradient direction starts running into the
        // opposite side of the surface)
        Vec3 p = c;
        d2 = (cloud.rowwise() - p.transpose()).rowwise().squaredNorm();
        Eigen::Index nn = 0;
        double d = std::sqrt(d2.minCoeff(&nn));
        bool stalled = false;
        for (int it = 0; it < kAscentMaxSteps && !stalled; ++it) {
            const Vec3 dir = (p - Vec3(cloud.row(nn))) / d;
            const Vec3 next = p + step * dir;
            d2 = (cloud.rowwise() - next.transpose()).rowwise().squaredNorm();
            Eigen::Index nn_next = 0;
            const double d_next = std::sqrt(d2.minCoeff(&nn_next));
            if (d_next - d < kAscentStallRate * step) {
                // straddle the crossing rather than keep the overshoot
                p = 0.5 * (p + next);
                stalled = true;
            } else {
                p = next;
            }
            d = d_next;
            nn = nn_next;
        }
        if (!stalled) continue;

        d2 = (cloud.rowwise() - p.transpose()).rowwise().squaredNorm();
        const double dmin = std::sqrt(d2.minCoeff());
        const double reach = dmin + kWitnessSlackCells * g.h;
        witnesses.clear();
        for (Eigen::Index r = 0; r < cloud.rows(); ++r) {
            if (d2(r) <= reach * reach) witnesses.push_back(r);
        }
        bool separated = false;
        for (size_t a = 0; a < witnesses.size() && !separated; ++a) {
            const Vec3 da = (Vec3(cloud.row(witnesses[a])) - p).normalized();
            for (size_t b = a + 1; b < witnesses.size(); ++b) {
                const Vec3 db = (Vec3(cloud.row(witnesses[b])) - p).normalized();
                if (da.dot(db) <= cos_limit) {
                    separated = true;
                    break;
                }
            }
        }
        if (!separated) continue;
        accepted.push_back(p);
        radii.push_back(dmin);
    }

    MatOracleResult result;
    result.voxel_width = g.h;
    result.centers.resize(static_cast<Eigen::Index>(accepted.size()), 3);
    result.radii.resize(static_cast<Eigen::Index>(accepted.size()));
    for (size_t r = 0; r < accepted.size(); ++r) {
        result.centers.row(static_cast<Eigen::Index>(r)) = accepted[r].transpose();
        result.radii(static_cast<Eigen::Index>(r)) = radii[r];
    }
    return result;
}

}  // namespace skelpt

#pragma once

// Brute-force reference implementations shared across the test suites.
// Everything here favors obviousness over speed: direct double sums, dense
// linear algebra, literal definitions. Nothing from this header ships.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "sdeblur/sdeblur.hpp"

namespace oracle {

using sdeblur::BinaryMask;
using sdeblur::BlurKernel;
using sdeblur::DeconvParams;
using sdeblur::GradientField;
using sdeblur::PlanarImage;
using sdeblur::Rect;

inline int wrap(int v, int n) { return ((v % n) + n) % n; }

inline PlanarImage random_image(int w, int h, int channels, unsigned seed, double lo = 0.0,
                                double hi = 1.0) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    PlanarImage img(w, h, channels);
    for (double& v : img.data) v = dist(gen);
    return img;
}

inline BlurKernel random_kernel(int size, unsigned seed) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    BlurKernel k(size);
    for (double& v : k.w) v = dist(gen);
    k.normalize();
    return k;
}

// True convolution with wraparound indexing, by the direct double sum.
inline PlanarImage circ_convolve(const PlanarImage& img, const BlurKernel& k) {
    PlanarImage out(img.width, img.height, img.channels);
    int c = k.center();
    for (int ch = 0; ch < img.channels; ++ch)
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) {
                double acc = 0.0;
                for (int ky = 0; ky < k.size; ++ky)
                    for (int kx = 0; kx < k.size; ++kx)
                        acc += k.at(kx, ky) * img.at(wrap(x - (kx - c), img.width),
                                                     wrap(y - (ky - c), img.height), ch);
                out.at(x, y, ch) = acc;
            }
    return out;
}

// Forward differences with wraparound.
inline PlanarImage wrap_dx(const PlanarImage& img) {
    PlanarImage out(img.width, img.height, 1);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            out.at(x, y) = img.at(wrap(x + 1, img.width), y) - img.at(x, y);
    return out;
}

inline PlanarImage wrap_dy(const PlanarImage& img) {
    PlanarImage out(img.width, img.height, 1);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            out.at(x, y) = img.at(x, wrap(y + 1, img.height)) - img.at(x, y);
    return out;
}

// Largest interior offset that is immune to boundary handling for kernel k.
inline double interior_max_diff(const PlanarImage& a, const PlanarImage& b, int margin) {
    double worst = 0.0;
    for (int ch = 0; ch < a.channels; ++ch)
        for (int y = margin; y < a.height - margin; ++y)
            for (int x = margin; x < a.width - margin; ++x)
                worst = std::max(worst, std::abs(a.at(x, y, ch) - b.at(x, y, ch)));
    return worst;
}

inline double max_abs_diff(const PlanarImage& a, const PlanarImage& b) {
    double worst = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i)
        worst = std::max(worst, std::abs(a.data[i] - b.data[i]));
    return worst;
}

// ---------------------------------------------------------------------------
// Largest all-zero rectangle by exhaustive O(n^4) enumeration. Candidates are
// ranked by area, then smaller y, x, and height, the same total order the
// library promises.
// ---------------------------------------------------------------------------

inline bool rect_better(const Rect& a, const Rect& b) {
    if (a.area() != b.area()) return a.area() > b.area();
    return std::tie(a.y, a.x, a.h) < std::tie(b.y, b.x, b.h);
}

inline bool brute_best_rect(const BinaryMask& mask, int min_side, Rect& best) {
    int w = mask.width, h = mask.height;
    // summed-area table of set bits, so the all-zero test is O(1)
    std::vector<long long> sat((w + 1) * (h + 1), 0);
    auto sat_at = [&](int x, int y) -> long long& { return sat[y * (w + 1) + x]; };
    for (int y = 1; y <= h; ++y)
        for (int x = 1; x <= w; ++x)
            sat_at(x, y) = (mask.at(x - 1, y - 1) ? 1 : 0) + sat_at(x - 1, y) +
                           sat_at(x, y - 1) - sat_at(x - 1, y - 1);
    bool found = false;
    best = Rect{0, 0, 0, 0};
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int rh = min_side; y + rh <= h; ++rh)
                for (int rw = min_side; x + rw <= w; ++rw) {
                    long long ones = sat_at(x + rw, y + rh) - sat_at(x, y + rh) -
                                     sat_at(x + rw, y) + sat_at(x, y);
                    if (ones > 0) break;  // wider rectangles only add cells
                    Rect r{x, y, rw, rh};
                    if (!found || rect_better(r, best)) {
                        best = r;
                        found = true;
                    }
                }
    return found;
}

// ---------------------------------------------------------------------------
// Diffusion term assembled the long way round: T = c_eta eta eta^T +
// c_xi xi xi^T as an explicit 2x2 matrix, then trace(T H).
// ---------------------------------------------------------------------------

inline PlanarImage tensor_trace(const PlanarImage& img) {
    PlanarImage out(img.width, img.height, 1);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            double gx = (img.at_r(x + 1, y) - img.at_r(x - 1, y)) / 2.0;
            double gy = (img.at_r(x, y + 1) - img.at_r(x, y - 1)) / 2.0;
            double hxx = img.at_r(x + 1, y) - 2.0 * img.at(x, y) + img.at_r(x - 1, y);
            double hyy = img.at_r(x, y + 1) - 2.0 * img.at(x, y) + img.at_r(x, y - 1);
            double hxy = (img.at_r(x + 1, y + 1) - img.at_r(x + 1, y - 1) -
                          img.at_r(x - 1, y + 1) + img.at_r(x - 1, y - 1)) /
                         4.0;
            double m2 = gx * gx + gy * gy;
            double m = std::sqrt(m2);
            Eigen::Matrix2d t;
            if (m < 1e-8) {
                t.setIdentity();
            } else {
                Eigen::Vector2d eta(gx / m, gy / m);
                Eigen::Vector2d xi(-eta.y(), eta.x());
                t = (1.0 / (1.0 + m2)) * (eta * eta.transpose()) +
                    (1.0 / std::sqrt(1.0 + m2)) * (xi * xi.transpose());
            }
            Eigen::Matrix2d hess;
            hess << hxx, hxy, hxy, hyy;
            out.at(x, y) = (t * hess).trace();
        }
    return out;
}

// ---------------------------------------------------------------------------
// Dense (circulant) linear algebra for the deconvolution normal equations.
// Images are flattened row-major; every operator becomes an explicit n x n
// matrix, so the solve is a plain LDLT factorization.
// ---------------------------------------------------------------------------

inline Eigen::VectorXd flatten(const PlanarImage& img) {
    return Eigen::Map<const Eigen::VectorXd>(img.data.data(),
                                             static_cast<Eigen::Index>(img.data.size()));
}

inline PlanarImage unflatten(const Eigen::VectorXd& v, int w, int h) {
    PlanarImage img(w, h, 1);
    Eigen::Map<Eigen::VectorXd>(img.data.data(), v.size()) = v;
    return img;
}

inline Eigen::MatrixXd conv_matrix(const BlurKernel& k, int w, int h) {
    int n = w * h;
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    int c = k.center();
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            int row = y * w + x;
            for (int ky = 0; ky < k.size; ++ky)
                for (int kx = 0; kx < k.size; ++kx) {
                    int sx = wrap(x - (kx - c), w);
                    int sy = wrap(y - (ky - c), h);
                    m(row, sy * w + sx) += k.at(kx, ky);
                }
        }
    return m;
}

inline Eigen::MatrixXd dx_matrix(int w, int h) {
    int n = w * h;
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            int row = y * w + x;
            m(row, row) -= 1.0;
            m(row, y * w + wrap(x + 1, w)) += 1.0;
        }
    return m;
}

inline Eigen::MatrixXd dy_matrix(int w, int h) {
    int n = w * h;
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            int row = y * w + x;
            m(row, row) -= 1.0;
            m(row, wrap(y + 1, h) * w + x) += 1.0;
        }
    return m;
}

// Minimizer of sum_i omega_i ||D_i (K L - B)||^2 + alpha ||grad L - v||^2
// with circular boundaries, solved densely. No clamping: callers pick
// instances whose solution stays inside (0, 1).
inline PlanarImage dense_solve_L(const PlanarImage& B, const BlurKernel& K,
                                 const GradientField& v, const DeconvParams& p) {
    int w = B.width, h = B.height, n = w * h;
    Eigen::MatrixXd Km = conv_matrix(K, w, h);
    Eigen::MatrixXd Dx = dx_matrix(w, h), Dy = dy_matrix(w, h);
    Eigen::MatrixXd Gx = Dx.transpose() * Dx, Gy = Dy.transpose() * Dy;
    Eigen::MatrixXd W = p.omega[0] * Eigen::MatrixXd::Identity(n, n) + p.omega[1] * Gx +
                        p.omega[2] * Gy + p.omega[3] * Gx * Gx + p.omega[4] * Gy * Gy +
                        p.omega[5] * Gx * Gy;
    Eigen::MatrixXd A = Km.transpose() * W * Km + p.alpha * (Gx + Gy);
    Eigen::VectorXd rhs = Km.transpose() * W * flatten(B) +
                          p.alpha * (Dx.transpose() * flatten(v.dx) +
                                     Dy.transpose() * flatten(v.dy));
    return unflatten(A.ldlt().solve(rhs), w, h);
}

// Noiseless estimation instance: blur a latent image circularly with a known
// kernel, then derive the five gradient pairs with wraparound differences so
// db_i == k (*) p_i holds exactly.
inline sdeblur::GradientPairs true_pairs(const PlanarImage& latent, const BlurKernel& k) {
    PlanarImage blurry = circ_convolve(latent, k);
    sdeblur::GradientPairs pairs;
    PlanarImage gx = wrap_dx(latent), gy = wrap_dy(latent);
    pairs.p[0] = gx;
    pairs.p[1] = gy;
    pairs.p[2] = wrap_dx(gx);
    pairs.p[3] = wrap_dy(gy);
    PlanarImage mixed = wrap_dx(gy), mixed2 = wrap_dy(gx);
    for (size_t i = 0; i < mixed.data.size(); ++i)
        mixed.data[i] = (mixed.data[i] + mixed2.data[i]) / 2.0;
    pairs.p[4] = std::move(mixed);
    PlanarImage bx = wrap_dx(blurry), by = wrap_dy(blurry);
    pairs.db[0] = bx;
    pairs.db[1] = by;
    pairs.db[2] = wrap_dx(bx);
    pairs.db[3] = wrap_dy(by);
    PlanarImage bmixed = wrap_dx(by), bmixed2 = wrap_dy(bx);
    for (size_t i = 0; i < bmixed.data.size(); ++i)
        bmixed.data[i] = (bmixed.data[i] + bmixed2.data[i]) / 2.0;
    pairs.db[4] = std::move(bmixed);
    return pairs;
}

// ---------------------------------------------------------------------------
// Direction-binned gradient selection by literal sorting.
// ---------------------------------------------------------------------------

inline GradientField select_gradients(const PlanarImage& img, int kernel_size, double r) {
    PlanarImage gx(img.width, img.height, 1), gy(img.width, img.height, 1);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            gx.at(x, y) = img.at_r(x + 1, y) - img.at(x, y);
            gy.at(x, y) = img.at_r(x, y + 1) - img.at(x, y);
        }
    long target = std::max<long>(
        1, std::lround(r * kernel_size * std::sqrt(static_cast<double>(img.width) *
                                                   img.height)));
    auto bin_of = [](double dx, double dy) {
        double a = std::atan2(dy, dx);
        if (a < 0) a += 2.0 * M_PI;
        return std::min(static_cast<int>(a / (M_PI / 2.0)), 3);
    };
    std::array<std::vector<double>, 4> mags;
    for (size_t i = 0; i < gx.data.size(); ++i) {
        double m = std::hypot(gx.data[i], gy.data[i]);
        if (m > 0) mags[bin_of(gx.data[i], gy.data[i])].push_back(m);
    }
    std::array<double, 4> cut{0, 0, 0, 0};
    for (int b = 0; b < 4; ++b) {
        std::sort(mags[b].begin(), mags[b].end(), std::greater<>());
        if (static_cast<long>(mags[b].size()) > target) cut[b] = mags[b][target - 1];
    }
    for (size_t i = 0; i < gx.data.size(); ++i) {
        double m = std::hypot(gx.data[i], gy.data[i]);
        if (m <= 0 || m < cut[bin_of(gx.data[i], gy.data[i])]) {
            gx.data[i] = 0;
            gy.data[i] = 0;
        }
    }
    return {std::move(gx), std::move(gy)};
}

}  // namespace oracle

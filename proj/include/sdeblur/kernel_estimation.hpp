#pragma once

#include <array>
#include <numbers>

#include "sdeblur/convolve.hpp"
#include "sdeblur/fft.hpp"
#include "sdeblur/image.hpp"
#include "sdeblur/kernel.hpp"

namespace sdeblur {

struct KernelEstParams {
    double theta = 5.0;  // Tikhonov weight of the kernel energy
    double gamma = 5.0;  // ridge added to the FFT denominator (same role as theta)
    int D = 160;         // kernel-denoising area divisor
    double r = 2.0;      // gradient-threshold target factor
    std::array<double, 5> w = {25.0, 25.0, 12.5, 12.5, 12.5};
};

/// The five (P_*, dB_*) grids entering the kernel energy, with their weights.
struct GradientPairs {
    std::array<PlanarImage, 5> p;
    std::array<PlanarImage, 5> db;
    std::array<double, 5> w = {25.0, 25.0, 12.5, 12.5, 12.5};

    int width() const { return p[0].width; }
    int height() const { return p[0].height; }
};

/// Keeps only the strongest gradients, binned by direction quadrant so that
/// every orientation retains at least r * kernel_size * sqrt(area) pixels.
inline GradientField threshold_gradients(const PlanarImage& predicted, int kernel_size,
                                         double r) {
    if (predicted.channels != 1) throw Error("threshold_gradients expects a single channel");
    if (r < 0) throw Error("r must be non-negative");
    GradientField g{derivative(predicted, Deriv::dx), derivative(predicted, Deriv::dy)};
    long target = std::max<long>(
        1, std::lround(r * kernel_size *
                       std::sqrt(static_cast<double>(predicted.width) * predicted.height)));
    std::array<std::vector<double>, 4> bins;
    auto bin_of = [](double gx, double gy) {
        double a = std::atan2(gy, gx);
        if (a < 0) a += 2.0 * std::numbers::pi;
        int b = static_cast<int>(a / (std::numbers::pi / 2.0));
        return std::min(b, 3);
    };
    for (size_t i = 0; i < g.dx.data.size(); ++i) {
        double gx = g.dx.data[i], gy = g.dy.data[i];
        double m = std::hypot(gx, gy);
        if (m > 0) bins[bin_of(gx, gy)].push_back(m);
    }
    std::array<double, 4> threshold{0, 0, 0, 0};
    for (int b = 0; b < 4; ++b) {
        if (static_cast<long>(bins[b].size()) <= target) continue;  // keep the whole bin
        std::nth_element(bins[b].begin(), bins[b].begin() + (target - 1), bins[b].end(),
                         std::greater<>());
        threshold[b] = bins[b][target - 1];
    }
    for (size_t i = 0; i < g.dx.data.size(); ++i) {
        double gx = g.dx.data[i], gy = g.dy.data[i];
        double m = std::hypot(gx, gy);
        if (m <= 0 || m < threshold[bin_of(gx, gy)]) {
            g.dx.data[i] = 0;
            g.dy.data[i] = 0;
        }
    }
    return g;
}

/// Literal gradient pairs: (Px, dxB), (Py, dyB), (dxPx, dxxB), (dyPy, dyyB),
/// ((dxPy + dyPx)/2, dxyB).
inline GradientPairs make_gradient_pairs(const GradientField& g, const PlanarImage& blurry,
                                         const std::array<double, 5>& w = {25.0, 25.0, 12.5,
                                                                           12.5, 12.5}) {
    if (blurry.channels != 1) throw Error("make_gradient_pairs expects a single channel");
    if (!g.dx.same_shape(blurry)) throw Error("gradient dimensions do not match image");
    GradientPairs pairs;
    pairs.w = w;
    pairs.p[0] = g.dx;
    pairs.p[1] = g.dy;
    pairs.p[2] = derivative(g.dx, Deriv::dx);
    pairs.p[3] = derivative(g.dy, Deriv::dy);
    PlanarImage mixed = derivative(g.dy, Deriv::dx);
    PlanarImage mixed2 = derivative(g.dx, Deriv::dy);
    for (size_t i = 0; i < mixed.data.size(); ++i)
        mixed.data[i] = (mixed.data[i] + mixed2.data[i]) / 2.0;
    pairs.p[4] = std::move(mixed);
    pairs.db[0] = derivative(blurry, Deriv::dx);
    pairs.db[1] = derivative(blurry, Deriv::dy);
    pairs.db[2] = derivative(blurry, Deriv::dxx);
    pairs.db[3] = derivative(blurry, Deriv::dyy);
    pairs.db[4] = derivative(blurry, Deriv::dxy);
    return pairs;
}

/// Pairs for in-pipeline estimation: a cosine border taper (width =
/// kernel_size) on every grid hides the replicate-vs-circular boundary
/// mismatch from the FFT solver.
inline GradientPairs build_gradient_pairs(const GradientField& g, const PlanarImage& blurry,
                                          int kernel_size,
                                          const std::array<double, 5>& w = {25.0, 25.0, 12.5,
                                                                            12.5, 12.5}) {
    GradientPairs pairs = make_gradient_pairs(g, blurry, w);
    int W = pairs.width(), H = pairs.height();
    int m = std::max(1, std::min({kernel_size, W / 2, H / 2}));
    auto ramp = [m](int i, int n) {
        int d = std::min(i, n - 1 - i);
        if (d >= m) return 1.0;
        return 0.5 - 0.5 * std::cos(std::numbers::pi * (d + 0.5) / m);
    };
    std::vector<double> wx(W), wy(H);
    for (int x = 0; x < W; ++x) wx[x] = ramp(x, W);
    for (int y = 0; y < H; ++y) wy[y] = ramp(y, H);
    for (int i = 0; i < 5; ++i)
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                pairs.p[i].at(x, y) *= wx[x] * wy[y];
                pairs.db[i].at(x, y) *= wx[x] * wy[y];
            }
    return pairs;
}

/// Raw FFT least-squares solution over the whole pair grid (circular
/// semantics): real(ifft(sum w conj(F(P)) F(dB) / (sum w |F(P)|^2 + gamma))).
inline PlanarImage estimate_kernel_field(const GradientPairs& pairs,
                                         const KernelEstParams& params) {
    int W = pairs.width(), H = pairs.height();
    double structure = 0;
    for (int i = 0; i < 5; ++i) {
        if (pairs.p[i].width != W || pairs.p[i].height != H || pairs.db[i].width != W ||
            pairs.db[i].height != H)
            throw Error("gradient pair dimensions do not match");
        for (double v : pairs.p[i].data) structure = std::max(structure, std::abs(v));
    }
    if (structure <= 0) throw Error("no structure");
    Spectrum num(W, H), den(W, H);
    for (int i = 0; i < 5; ++i) {
        Spectrum fp = fft_forward(pairs.p[i]);
        Spectrum fb = fft_forward(pairs.db[i]);
        for (size_t j = 0; j < num.c.size(); ++j) {
            num.c[j] += pairs.w[i] * std::conj(fp.c[j]) * fb.c[j];
            den.c[j] += pairs.w[i] * std::norm(fp.c[j]);
        }
    }
    for (size_t j = 0; j < num.c.size(); ++j) num.c[j] /= den.c[j] + params.gamma;
    return fft_inverse(num);
}

/// Kernel estimate: the FFT solution cropped around the zero-shift position
/// with wraparound, negatives clamped, normalized to sum 1.
inline BlurKernel estimate_kernel(const GradientPairs& pairs, const KernelEstParams& params,
                                  int kernel_size) {
    if (kernel_size < 1 || kernel_size % 2 == 0) throw Error("kernel size must be odd");
    if (pairs.width() < kernel_size || pairs.height() < kernel_size)
        throw Error("pair grids smaller than kernel");
    PlanarImage field = estimate_kernel_field(pairs, params);
    int c = kernel_size / 2;
    BlurKernel k(kernel_size);
    for (int oy = -c; oy <= c; ++oy)
        for (int ox = -c; ox <= c; ++ox) {
            int sx = ((ox % field.width) + field.width) % field.width;
            int sy = ((oy % field.height) + field.height) % field.height;
            k.at(ox + c, oy + c) = std::max(0.0, field.at(sx, sy));
        }
    k.normalize();
    return k;
}

/// Kernel energy sum w_i ||K (*) P_i - dB_i||^2 + gamma ||K||^2 under the same
/// circular semantics the FFT solver minimizes.
inline double kernel_energy(const GradientPairs& pairs, const PlanarImage& kernel_field,
                            const KernelEstParams& params) {
    int W = pairs.width(), H = pairs.height();
    if (kernel_field.width != W || kernel_field.height != H)
        throw Error("kernel field dimensions do not match pairs");
    Spectrum fk = fft_forward(kernel_field);
    double e = 0;
    for (int i = 0; i < 5; ++i) {
        Spectrum fp = fft_forward(pairs.p[i]);
        for (size_t j = 0; j < fp.c.size(); ++j) fp.c[j] *= fk.c[j];
        PlanarImage conv = fft_inverse(fp);
        double s = 0;
        for (size_t j = 0; j < conv.data.size(); ++j) {
            double d = conv.data[j] - pairs.db[i].data[j];
            s += d * d;
        }
        e += pairs.w[i] * s;
    }
    double k2 = 0;
    for (double v : kernel_field.data) k2 += v * v;
    return e + params.gamma * k2;
}

inline double kernel_energy(const GradientPairs& pairs, const BlurKernel& kernel,
                            const KernelEstParams& params) {
    return kernel_energy(pairs, embed_kernel_wrapped(kernel, pairs.width(), pairs.height()),
                         params);
}

/// Denoising rule: zero weights below max/20, drop 8-connected components
/// with area below size^2 / D (keeping the largest if all would vanish),
/// renormalize.
inline BlurKernel denoise_kernel(const BlurKernel& k, int D) {
    if (D < 1) throw Error("D must be positive");
    double mx = k.max_weight();
    if (mx <= 0) throw Error("degenerate kernel: all weights zero");
    BlurKernel out = k;
    for (double& v : out.w)
        if (v < mx / 20.0) v = 0;

    int n = out.size;
    std::vector<int> label(static_cast<size_t>(n) * n, -1);
    std::vector<int> area;
    std::vector<int> stack;
    for (int i = 0; i < n * n; ++i) {
        if (out.w[i] <= 0 || label[i] >= 0) continue;
        int id = static_cast<int>(area.size());
        area.push_back(0);
        stack.assign(1, i);
        label[i] = id;
        while (!stack.empty()) {
            int j = stack.back();
            stack.pop_back();
            ++area[id];
            int x = j % n, y = j / n;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    int nx = x + dx, ny = y + dy;
                    if (nx < 0 || nx >= n || ny < 0 || ny >= n) continue;
                    int nj = ny * n + nx;
                    if (out.w[nj] > 0 && label[nj] < 0) {
                        label[nj] = id;
                        stack.push_back(nj);
                    }
                }
        }
    }
    double min_area = static_cast<double>(n) * n / D;
    std::vector<bool> keep(area.size());
    bool any = false;
    for (size_t id = 0; id < area.size(); ++id) {
        keep[id] = area[id] >= min_area;
        any = any || keep[id];
    }
    if (!any && !area.empty()) {
        // every component is tiny: keep the largest (first on ties)
        size_t best = 0;
        for (size_t id = 1; id < area.size(); ++id)
            if (area[id] > area[best]) best = id;
        keep[best] = true;
    }
    for (int i = 0; i < n * n; ++i)
        if (out.w[i] > 0 && !keep[label[i]]) out.w[i] = 0;
    out.normalize();
    return out;
}

}  // namespace sdeblur

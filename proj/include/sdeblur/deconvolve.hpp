#pragma once

#include <array>

#include "sdeblur/convolve.hpp"
#include "sdeblur/fft.hpp"
#include "sdeblur/image.hpp"
#include "sdeblur/kernel.hpp"

namespace sdeblur {

struct AlphaSchedule {
    double alpha0 = 0.2;
    double mu = 0.9;
};

struct DeconvParams {
    double alpha = 0.2;  // gradient-similarity weight for a single solve
    double beta = 1.0;   // sparsity weight
    std::array<double, 6> omega = {50.0, 25.0, 25.0, 12.5, 12.5, 12.5};
    int inner_iterations = 3;
    Boundary boundary = Boundary::taper;
};

/// Shrinkage update: v = (g/|g|) * max(|g| - beta/(2 alpha), 0) per pixel.
inline GradientField update_v(const PlanarImage& L, double alpha, double beta,
                              Boundary boundary = Boundary::replicate) {
    if (L.channels != 1) throw Error("update_v expects a single channel");
    if (alpha <= 0) throw Error("alpha must be positive");
    GradientField v{PlanarImage(L.width, L.height, 1), PlanarImage(L.width, L.height, 1)};
    bool wrap = boundary == Boundary::circular;
    double cut = beta / (2.0 * alpha);
    for (int y = 0; y < L.height; ++y)
        for (int x = 0; x < L.width; ++x) {
            double gx, gy;
            if (wrap) {
                gx = L.at((x + 1) % L.width, y) - L.at(x, y);
                gy = L.at(x, (y + 1) % L.height) - L.at(x, y);
            } else {
                gx = L.at_r(x + 1, y) - L.at(x, y);
                gy = L.at_r(x, y + 1) - L.at(x, y);
            }
            double m = std::hypot(gx, gy);
            if (m > cut) {
                double s = (m - cut) / m;
                v.dx.at(x, y) = gx * s;
                v.dy.at(x, y) = gy * s;
            }
        }
    return v;
}

namespace detail {

/// Delta(w) = sum omega_i |F(d_i)|^2 over {identity, dx, dy, dxx, dyy, dxy}.
inline std::vector<double> deconv_delta(int w, int h, const std::array<double, 6>& omega) {
    Spectrum dx = dx_spectrum(w, h), dy = dy_spectrum(w, h);
    std::vector<double> delta(dx.c.size());
    for (size_t i = 0; i < delta.size(); ++i) {
        double ax = std::norm(dx.c[i]), ay = std::norm(dy.c[i]);
        delta[i] = omega[0] + omega[1] * ax + omega[2] * ay + omega[3] * ax * ax +
                   omega[4] * ay * ay + omega[5] * ax * ay;
    }
    return delta;
}

}  // namespace detail

/// Closed-form FFT update of the latent image for fixed v. Circular boundary
/// solves on the image grid directly; replicate/taper modes pad first and the
/// auxiliary gradients are zero-extended into the pad ring.
inline PlanarImage solve_L(const PlanarImage& B, const BlurKernel& K, const GradientField& v,
                           const DeconvParams& params) {
    if (B.channels != 1) throw Error("solve_L expects a single channel");
    if (std::abs(K.sum() - 1.0) > 1e-6) throw Error("kernel must be normalized");
    if (!v.dx.same_shape(B) || !v.dy.same_shape(B))
        throw Error("gradient dimensions do not match image");
    int pad = params.boundary == Boundary::circular ? 0 : K.size;
    PlanarImage Bp = edge_taper_pad(B, pad, params.boundary);
    int W = Bp.width, H = Bp.height;
    PlanarImage vx(W, H, 1), vy(W, H, 1);
    for (int y = 0; y < B.height; ++y)
        for (int x = 0; x < B.width; ++x) {
            vx.at(x + pad, y + pad) = v.dx.at(x, y);
            vy.at(x + pad, y + pad) = v.dy.at(x, y);
        }
    Spectrum fb = fft_forward(Bp);
    Spectrum fk = fft_forward(embed_kernel_wrapped(K, W, H));
    Spectrum fvx = fft_forward(vx);
    Spectrum fvy = fft_forward(vy);
    Spectrum dx = dx_spectrum(W, H), dy = dy_spectrum(W, H);
    std::vector<double> delta = detail::deconv_delta(W, H, params.omega);
    Spectrum fl(W, H);
    for (size_t i = 0; i < fl.c.size(); ++i) {
        std::complex<double> num = std::conj(fk.c[i]) * fb.c[i] * delta[i] +
                                   params.alpha * (std::conj(dx.c[i]) * fvx.c[i] +
                                                   std::conj(dy.c[i]) * fvy.c[i]);
        double den = std::norm(fk.c[i]) * delta[i] +
                     params.alpha * (std::norm(dx.c[i]) + std::norm(dy.c[i]));
        if (den < 1e-12) den += 1e-12;
        fl.c[i] = num / den;
    }
    PlanarImage Lp = fft_inverse(fl);
    PlanarImage L(B.width, B.height, 1);
    for (int y = 0; y < B.height; ++y)
        for (int x = 0; x < B.width; ++x)
            L.at(x, y) = std::clamp(Lp.at(x + pad, y + pad), 0.0, 1.0);
    return L;
}

/// Alternating minimization: v-shrinkage then FFT solve, alpha decaying by mu
/// each round. Color channels share the kernel and run independently.
inline PlanarImage deconvolve(const PlanarImage& B, const BlurKernel& K,
                              const AlphaSchedule& schedule, const DeconvParams& params) {
    if (params.inner_iterations < 0) throw Error("inner_iterations must be non-negative");
    PlanarImage out(B.width, B.height, B.channels);
    Boundary grad_boundary =
        params.boundary == Boundary::circular ? Boundary::circular : Boundary::replicate;
    for (int ch = 0; ch < B.channels; ++ch) {
        PlanarImage Bc = extract_channel(B, ch);
        PlanarImage L = Bc;
        double alpha = schedule.alpha0;
        for (int it = 0; it < params.inner_iterations; ++it) {
            GradientField v = update_v(L, alpha, params.beta, grad_boundary);
            DeconvParams p = params;
            p.alpha = alpha;
            L = solve_L(Bc, K, v, p);
            alpha *= schedule.mu;
        }
        for (int y = 0; y < B.height; ++y)
            for (int x = 0; x < B.width; ++x) out.at(x, y, ch) = L.at(x, y);
    }
    return out;
}

/// Objective value under circular semantics:
/// sum omega_i ||d_i(K (*) L) - d_i B||^2 + alpha ||grad L - v||^2 + beta sum |v|.
inline double energy_deconv(const PlanarImage& B, const BlurKernel& K, const PlanarImage& L,
                            const GradientField& v, double alpha, double beta,
                            const std::array<double, 6>& omega = {50.0, 25.0, 25.0, 12.5,
                                                                  12.5, 12.5}) {
    if (B.channels != 1 || L.channels != 1) throw Error("energy_deconv expects single channels");
    if (!L.same_shape(B)) throw Error("image dimensions do not match");
    int W = B.width, H = B.height;
    Spectrum fb = fft_forward(B);
    Spectrum fl = fft_forward(L);
    Spectrum fk = fft_forward(embed_kernel_wrapped(K, W, H));
    Spectrum dxs = dx_spectrum(W, H), dys = dy_spectrum(W, H);
    double e = 0;
    for (int i = 0; i < 6; ++i) {
        Spectrum r(W, H);
        for (size_t j = 0; j < r.c.size(); ++j) {
            std::complex<double> d;
            switch (i) {
                case 0: d = 1.0; break;
                case 1: d = dxs.c[j]; break;
                case 2: d = dys.c[j]; break;
                case 3: d = dxs.c[j] * dxs.c[j]; break;
                case 4: d = dys.c[j] * dys.c[j]; break;
                default: d = dxs.c[j] * dys.c[j]; break;
            }
            r.c[j] = d * (fk.c[j] * fl.c[j] - fb.c[j]);
        }
        PlanarImage res = fft_inverse(r);
        double s = 0;
        for (double t : res.data) s += t * t;
        e += omega[i] * s;
    }
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            double gx = L.at((x + 1) % W, y) - L.at(x, y);
            double gy = L.at(x, (y + 1) % H) - L.at(x, y);
            double ddx = gx - v.dx.at(x, y);
            double ddy = gy - v.dy.at(x, y);
            e += alpha * (ddx * ddx + ddy * ddy);
            e += beta * std::hypot(v.dx.at(x, y), v.dy.at(x, y));
        }
    return e;
}

}  // namespace sdeblur

#pragma once

#include "sdeblur/image.hpp"
#include "sdeblur/parallel.hpp"

namespace sdeblur {

struct PredictParams {
    double lambda = 1.0;        // edge-enhancement strength, follows the outer schedule
    double sigma_spatial = 2.0;
    double sigma_range = 0.1;
    int pde_iterations = 1;
};

inline PlanarImage bilateral_filter(const PlanarImage& image, double sigma_spatial,
                                    double sigma_range) {
    if (image.channels != 1) throw Error("bilateral_filter expects a single channel");
    if (sigma_spatial <= 0 || sigma_range <= 0) throw Error("bilateral sigma must be positive");
    int radius = static_cast<int>(std::ceil(2.0 * sigma_spatial));
    double inv_s2 = 1.0 / (2.0 * sigma_spatial * sigma_spatial);
    double inv_r2 = 1.0 / (2.0 * sigma_range * sigma_range);
    std::vector<double> spatial((2 * radius + 1) * (2 * radius + 1));
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
            spatial[(dy + radius) * (2 * radius + 1) + (dx + radius)] =
                std::exp(-(dx * dx + dy * dy) * inv_s2);
    PlanarImage out(image.width, image.height, 1);
    parallel_rows(image.height, [&](int y0, int y1) {
        for (int y = y0; y < y1; ++y)
            for (int x = 0; x < image.width; ++x) {
                double center = image.at(x, y);
                double num = 0, den = 0;
                for (int dy = -radius; dy <= radius; ++dy)
                    for (int dx = -radius; dx <= radius; ++dx) {
                        double v = image.at_r(x + dx, y + dy);
                        double d = v - center;
                        double w = spatial[(dy + radius) * (2 * radius + 1) + (dx + radius)] *
                                   std::exp(-d * d * inv_r2);
                        num += w * v;
                        den += w;
                    }
                out.at(x, y) = num / den;
            }
    });
    return out;
}

/// Per-pixel geometry of the anisotropic enhancement flow. Central-difference
/// stencils throughout; eta/xi are zeroed where the gradient degenerates and
/// the flow falls back to the plain Laplacian there.
struct PdeTensors {
    PlanarImage grad_x, grad_y, magnitude;
    PlanarImage eta_x, eta_y, xi_x, xi_y;
    PlanarImage c_eta, c_xi;
    PlanarImage ixx, ixy, iyy;
    PlanarImage delta;  // trace(T H)

    explicit PdeTensors(int w, int h)
        : grad_x(w, h, 1), grad_y(w, h, 1), magnitude(w, h, 1),
          eta_x(w, h, 1), eta_y(w, h, 1), xi_x(w, h, 1), xi_y(w, h, 1),
          c_eta(w, h, 1), c_xi(w, h, 1),
          ixx(w, h, 1), ixy(w, h, 1), iyy(w, h, 1), delta(w, h, 1) {}
};

inline PdeTensors pde_tensors(const PlanarImage& image) {
    if (image.channels != 1) throw Error("pde_tensors expects a single channel");
    PdeTensors t(image.width, image.height);
    parallel_rows(image.height, [&](int y0, int y1) {
        for (int y = y0; y < y1; ++y)
            for (int x = 0; x < image.width; ++x) {
                double gx = (image.at_r(x + 1, y) - image.at_r(x - 1, y)) / 2.0;
                double gy = (image.at_r(x, y + 1) - image.at_r(x, y - 1)) / 2.0;
                double hxx = image.at_r(x + 1, y) - 2.0 * image.at(x, y) + image.at_r(x - 1, y);
                double hyy = image.at_r(x, y + 1) - 2.0 * image.at(x, y) + image.at_r(x, y - 1);
                double hxy = (image.at_r(x + 1, y + 1) - image.at_r(x + 1, y - 1) -
                              image.at_r(x - 1, y + 1) + image.at_r(x - 1, y - 1)) /
                             4.0;
                double m2 = gx * gx + gy * gy;
                double m = std::sqrt(m2);
                t.grad_x.at(x, y) = gx;
                t.grad_y.at(x, y) = gy;
                t.magnitude.at(x, y) = m;
                t.ixx.at(x, y) = hxx;
                t.ixy.at(x, y) = hxy;
                t.iyy.at(x, y) = hyy;
                double ce = 1.0 / (1.0 + m2);
                double cx = 1.0 / std::sqrt(1.0 + m2);
                t.c_eta.at(x, y) = ce;
                t.c_xi.at(x, y) = cx;
                if (m < 1e-8) {
                    // degenerate gradient: T = identity, flow is isotropic
                    t.delta.at(x, y) = hxx + hyy;
                } else {
                    double ex = gx / m, ey = gy / m;
                    t.eta_x.at(x, y) = ex;
                    t.eta_y.at(x, y) = ey;
                    t.xi_x.at(x, y) = -ey;
                    t.xi_y.at(x, y) = ex;
                    double i_eta = ex * ex * hxx + 2.0 * ex * ey * hxy + ey * ey * hyy;
                    double i_xi = ey * ey * hxx - 2.0 * ex * ey * hxy + ex * ex * hyy;
                    t.delta.at(x, y) = cx * i_xi + ce * i_eta;
                }
            }
    });
    return t;
}

/// Bilateral pre-smoothing followed by reverse-diffusion steps
/// I <- clamp(I - lambda * trace(T H)). Optionally hands back the final edge
/// map -lambda * trace(T H).
inline PlanarImage predict_latent(const PlanarImage& image, const PredictParams& params,
                                  PlanarImage* edge_map = nullptr) {
    if (image.channels != 1) throw Error("predict_latent expects a single channel");
    PlanarImage cur = bilateral_filter(image, params.sigma_spatial, params.sigma_range);
    if (edge_map) *edge_map = PlanarImage(image.width, image.height, 1);
    for (int it = 0; it < params.pde_iterations; ++it) {
        PdeTensors t = pde_tensors(cur);
        for (size_t i = 0; i < cur.data.size(); ++i) {
            double e = -params.lambda * t.delta.data[i];
            if (edge_map) edge_map->data[i] = e;
            cur.data[i] = std::clamp(cur.data[i] + e, 0.0, 1.0);
        }
    }
    return cur;
}

/// Classic shock filter with minmod-upwind gradient; binary steps are fixed
/// points under these stencils.
inline PlanarImage shock_filter(const PlanarImage& image, double dt, int iterations) {
    if (image.channels != 1) throw Error("shock_filter expects a single channel");
    if (dt <= 0 || dt > 1) throw Error("dt must be in (0, 1]");
    auto minmod = [](double a, double b) {
        if (a * b <= 0) return 0.0;
        return std::abs(a) < std::abs(b) ? a : b;
    };
    PlanarImage cur = image;
    PlanarImage next(image.width, image.height, 1);
    for (int it = 0; it < iterations; ++it) {
        parallel_rows(image.height, [&](int y0, int y1) {
            for (int y = y0; y < y1; ++y)
                for (int x = 0; x < image.width; ++x) {
                    double c = cur.at(x, y);
                    double lap = cur.at_r(x + 1, y) + cur.at_r(x - 1, y) +
                                 cur.at_r(x, y + 1) + cur.at_r(x, y - 1) - 4.0 * c;
                    double gx = minmod(c - cur.at_r(x - 1, y), cur.at_r(x + 1, y) - c);
                    double gy = minmod(c - cur.at_r(x, y - 1), cur.at_r(x, y + 1) - c);
                    double mag = std::sqrt(gx * gx + gy * gy);
                    double sgn = lap > 0 ? 1.0 : (lap < 0 ? -1.0 : 0.0);
                    next.at(x, y) = std::clamp(c - sgn * mag * dt, 0.0, 1.0);
                }
        });
        std::swap(cur, next);
    }
    return cur;
}

}  // namespace sdeblur

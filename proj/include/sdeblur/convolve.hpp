#pragma once

#include <cmath>
#include <vector>

#include "sdeblur/fft.hpp"
#include "sdeblur/image.hpp"
#include "sdeblur/kernel.hpp"
#include "sdeblur/parallel.hpp"

namespace sdeblur {

enum class ConvMode { spatial, fft };
enum class Boundary { replicate, taper, circular };

/// Replicate-pads by `pad` on every side. In taper mode the pad ring is
/// additionally blended toward the image mean with a cosine ramp, so the
/// periodic extension seen by the FFT has no hard seam.
inline PlanarImage edge_taper_pad(const PlanarImage& img, int pad, Boundary boundary) {
    if (pad <= 0) return img;
    PlanarImage out(img.width + 2 * pad, img.height + 2 * pad, img.channels);
    for (int c = 0; c < img.channels; ++c) {
        double mean = 0.0;
        if (boundary == Boundary::taper) {
            for (size_t i = 0; i < img.plane_size(); ++i)
                mean += img.data[img.plane_size() * c + i];
            mean /= static_cast<double>(img.plane_size());
        }
        for (int y = 0; y < out.height; ++y) {
            for (int x = 0; x < out.width; ++x) {
                int sx = x - pad, sy = y - pad;
                double v = img.at_r(sx, sy, c);
                if (boundary == Boundary::taper) {
                    int dx = std::max({-sx, sx - (img.width - 1), 0});
                    int dy = std::max({-sy, sy - (img.height - 1), 0});
                    int d = std::max(dx, dy);
                    if (d > 0) {
                        double t = static_cast<double>(d) / pad;
                        double wgt = 0.5 * (1.0 + std::cos(M_PI * t));
                        v = wgt * v + (1.0 - wgt) * mean;
                    }
                }
                out.at(x, y, c) = v;
            }
        }
    }
    return out;
}

inline PlanarImage crop_center(const PlanarImage& img, int pad, int w, int h) {
    return crop(img, Rect{pad, pad, w, h});
}

/// Embeds a kernel into a w*h grid with its center cell at index (0,0),
/// wrapping negative offsets (the zero-shift convention used by all
/// FFT-domain solves here).
inline PlanarImage embed_kernel_wrapped(const BlurKernel& k, int w, int h) {
    if (k.size > w || k.size > h) throw Error("kernel larger than embedding grid");
    PlanarImage out(w, h, 1);
    int c = k.center();
    for (int ky = 0; ky < k.size; ++ky)
        for (int kx = 0; kx < k.size; ++kx) {
            int x = ((kx - c) % w + w) % w;
            int y = ((ky - c) % h + h) % h;
            out.at(x, y) += k.at(kx, ky);
        }
    return out;
}

namespace detail {

inline PlanarImage convolve_spatial(const PlanarImage& img, const BlurKernel& k,
                                    Boundary boundary) {
    PlanarImage out(img.width, img.height, img.channels);
    int c = k.center();
    bool wrap = boundary == Boundary::circular;
    auto sample = [&](int x, int y, int ch) {
        if (!wrap) return img.at_r(x, y, ch);
        return img.at(((x % img.width) + img.width) % img.width,
                      ((y % img.height) + img.height) % img.height, ch);
    };
    for (int ch = 0; ch < img.channels; ++ch) {
        parallel_rows(img.height, [&, ch](int y0, int y1) {
            for (int y = y0; y < y1; ++y)
                for (int x = 0; x < img.width; ++x) {
                    double acc = 0.0;
                    for (int ky = 0; ky < k.size; ++ky)
                        for (int kx = 0; kx < k.size; ++kx)
                            acc += k.at(kx, ky) * sample(x - (kx - c), y - (ky - c), ch);
                    out.at(x, y, ch) = acc;
                }
        });
    }
    return out;
}

inline PlanarImage convolve_fft(const PlanarImage& img, const BlurKernel& k,
                                Boundary boundary) {
    int pad = boundary == Boundary::circular ? 0 : k.center();
    PlanarImage padded = edge_taper_pad(img, pad, boundary);
    Spectrum kf = fft_forward(embed_kernel_wrapped(k, padded.width, padded.height));
    PlanarImage out(img.width, img.height, img.channels);
    for (int ch = 0; ch < img.channels; ++ch) {
        Spectrum f = fft_forward(extract_channel(padded, ch));
        for (size_t i = 0; i < f.c.size(); ++i) f.c[i] *= kf.c[i];
        PlanarImage conv = fft_inverse(f);
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                out.at(x, y, ch) = conv.at(x + pad, y + pad);
    }
    return out;
}

}  // namespace detail

/// True convolution with a centered kernel. Spatial mode is the direct
/// double-sum (replicate or wraparound indexing); fft mode pads (replicate
/// or edge-tapered; none when circular), multiplies spectra and crops back,
/// matching spatial mode on the interior.
inline PlanarImage convolve(const PlanarImage& img, const BlurKernel& k,
                            ConvMode mode = ConvMode::fft,
                            Boundary boundary = Boundary::replicate) {
    if (k.size > std::min(img.width, img.height))
        throw Error("kernel larger than image");
    return mode == ConvMode::spatial ? detail::convolve_spatial(img, k, boundary)
                                     : detail::convolve_fft(img, k, boundary);
}

enum class Deriv { d0, dx, dy, dxx, dyy, dxy };

/// Forward-difference derivatives ([-1,1] stencils, replicate boundary).
/// Second derivatives are literal compositions of the first differences.
inline PlanarImage derivative(const PlanarImage& img, Deriv which) {
    if (img.channels != 1) throw Error("derivative expects a single channel");
    switch (which) {
        case Deriv::d0:
            return img;
        case Deriv::dx: {
            PlanarImage out(img.width, img.height, 1);
            for (int y = 0; y < img.height; ++y)
                for (int x = 0; x < img.width; ++x)
                    out.at(x, y) = img.at_r(x + 1, y) - img.at(x, y);
            return out;
        }
        case Deriv::dy: {
            PlanarImage out(img.width, img.height, 1);
            for (int y = 0; y < img.height; ++y)
                for (int x = 0; x < img.width; ++x)
                    out.at(x, y) = img.at_r(x, y + 1) - img.at(x, y);
            return out;
        }
        case Deriv::dxx:
            return derivative(derivative(img, Deriv::dx), Deriv::dx);
        case Deriv::dyy:
            return derivative(derivative(img, Deriv::dy), Deriv::dy);
        case Deriv::dxy:
            return derivative(derivative(img, Deriv::dx), Deriv::dy);
    }
    throw Error("unknown derivative");
}

struct ScaleLevel {
    int width = 0;
    int height = 0;
    int kernel_size = 0;
};

namespace detail {
inline int nearest_odd(double x) {
    int lo = 2 * static_cast<int>(std::floor((x - 1.0) / 2.0)) + 1;
    int hi = lo + 2;
    return (x - lo <= hi - x) ? lo : hi;
}
}  // namespace detail

/// Coarse-to-fine schedule: the kernel size shrinks by `factor` per level
/// (rounded to the nearest odd) until it reaches min_kernel; image
/// dimensions scale proportionally. Levels are ordered coarse -> fine and
/// the finest level equals the original dimensions.
inline std::vector<ScaleLevel> build_pyramid(int width, int height, int kernel_size,
                                             int min_kernel, double factor) {
    if (factor <= 0.0 || factor >= 1.0) throw Error("pyramid factor must be in (0,1)");
    if (min_kernel < 3) min_kernel = 3;
    if (min_kernel % 2 == 0) ++min_kernel;
    std::vector<int> ksizes;  // fine -> coarse
    int k = kernel_size;
    ksizes.push_back(k);
    while (k > min_kernel) {
        int next = detail::nearest_odd(k * factor);
        if (next >= k) next = k - 2;
        k = std::max(next, min_kernel);
        ksizes.push_back(k);
    }
    std::vector<ScaleLevel> levels;
    for (auto it = ksizes.rbegin(); it != ksizes.rend(); ++it) {
        ScaleLevel lv;
        lv.kernel_size = *it;
        if (*it == kernel_size) {
            lv.width = width;
            lv.height = height;
        } else {
            double s = static_cast<double>(*it) / kernel_size;
            lv.width = std::max(*it, static_cast<int>(std::lround(width * s)));
            lv.height = std::max(*it, static_cast<int>(std::lround(height * s)));
        }
        levels.push_back(lv);
    }
    return levels;
}

}  // namespace sdeblur

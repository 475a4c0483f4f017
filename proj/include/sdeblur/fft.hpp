#pragma once

#include <complex>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

#include <fftw3.h>

#include "sdeblur/image.hpp"

namespace sdeblur {

/// Half-spectrum of a real 2D grid (FFTW r2c layout: height rows of
/// width/2+1 complex columns). `width`/`height` are the spatial dims.
struct Spectrum {
    int width = 0;
    int height = 0;
    std::vector<std::complex<double>> c;

    Spectrum() = default;
    Spectrum(int w, int h)
        : width(w), height(h),
          c(static_cast<size_t>(h) * (w / 2 + 1), {0.0, 0.0}) {}

    int cols() const { return width / 2 + 1; }
    std::complex<double>& at(int x, int y) { return c[static_cast<size_t>(y) * cols() + x]; }
    std::complex<double> at(int x, int y) const { return c[static_cast<size_t>(y) * cols() + x]; }
    bool same_shape(const Spectrum& o) const { return width == o.width && height == o.height; }
};

namespace detail {

// Plans are cached per (w, h, direction). Creation is serialized (the FFTW
// planner is not thread-safe); execution via the new-array interface is.
class FftPlans {
public:
    static FftPlans& instance() {
        static FftPlans p;
        return p;
    }

    fftw_plan forward(int w, int h) { return get(w, h, true); }
    fftw_plan inverse(int w, int h) { return get(w, h, false); }

private:
    std::mutex mu_;
    std::map<std::tuple<int, int, bool>, fftw_plan> plans_;

    fftw_plan get(int w, int h, bool fwd) {
        std::scoped_lock lock(mu_);
        auto key = std::make_tuple(w, h, fwd);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        size_t n = static_cast<size_t>(w) * h;
        double* re = fftw_alloc_real(n);
        fftw_complex* cx = fftw_alloc_complex(static_cast<size_t>(h) * (w / 2 + 1));
        fftw_plan p = fwd
            ? fftw_plan_dft_r2c_2d(h, w, re, cx, FFTW_ESTIMATE | FFTW_UNALIGNED)
            : fftw_plan_dft_c2r_2d(h, w, cx, re, FFTW_ESTIMATE | FFTW_UNALIGNED);
        fftw_free(re);
        fftw_free(cx);
        if (!p) throw Error("FFTW plan creation failed");
        plans_[key] = p;
        return p;
    }
};

}  // namespace detail

inline Spectrum fft_forward(const PlanarImage& img) {
    if (img.channels != 1) throw Error("fft_forward expects a single channel");
    Spectrum out(img.width, img.height);
    fftw_plan p = detail::FftPlans::instance().forward(img.width, img.height);
    std::vector<double> in(img.data);
    fftw_execute_dft_r2c(p, in.data(), reinterpret_cast<fftw_complex*>(out.c.data()));
    return out;
}

/// Inverse transform, scaled by 1/(w*h) so fft_inverse(fft_forward(x)) == x.
inline PlanarImage fft_inverse(const Spectrum& spec) {
    PlanarImage out(spec.width, spec.height, 1);
    fftw_plan p = detail::FftPlans::instance().inverse(spec.width, spec.height);
    // c2r destroys its input, so run on a copy
    std::vector<std::complex<double>> tmp(spec.c);
    fftw_execute_dft_c2r(p, reinterpret_cast<fftw_complex*>(tmp.data()), out.data.data());
    double scale = 1.0 / (static_cast<double>(spec.width) * spec.height);
    for (double& v : out.data) v *= scale;
    return out;
}

/// Spectrum of the forward-difference filter along x: F{[-1,1]}.
inline Spectrum dx_spectrum(int w, int h) {
    Spectrum s(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < s.cols(); ++x) {
            double ang = 2.0 * M_PI * x / w;
            s.at(x, y) = std::complex<double>(std::cos(ang) - 1.0, std::sin(ang));
        }
    return s;
}

/// Spectrum of the forward-difference filter along y.
inline Spectrum dy_spectrum(int w, int h) {
    Spectrum s(w, h);
    for (int y = 0; y < h; ++y) {
        double ang = 2.0 * M_PI * y / h;
        std::complex<double> v(std::cos(ang) - 1.0, std::sin(ang));
        for (int x = 0; x < s.cols(); ++x) s.at(x, y) = v;
    }
    return s;
}

}  // namespace sdeblur

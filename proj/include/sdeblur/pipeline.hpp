#pragma once

#include <fstream>
#include <optional>
#include <utility>

#include "sdeblur/convolve.hpp"
#include "sdeblur/deconvolve.hpp"
#include "sdeblur/image.hpp"
#include "sdeblur/kernel.hpp"
#include "sdeblur/kernel_estimation.hpp"
#include "sdeblur/predict.hpp"
#include "sdeblur/saliency.hpp"

namespace sdeblur {

struct DeblurConfig {
    int kernel_size = 15;
    double pyramid_factor = 0.7071067811865476;  // 1/sqrt(2)
    int min_kernel = 3;
    int iterations_per_scale = 7;
    double lambda0 = 1.0;
    double lambda_decay = 0.9;
    double alpha0 = 0.2;
    double mu = 0.9;
    double beta = 1.0;
    double theta = 5.0;
    double gamma = 5.0;
    std::array<double, 5> w = {25.0, 25.0, 12.5, 12.5, 12.5};
    std::array<double, 6> omega = {50.0, 25.0, 25.0, 12.5, 12.5, 12.5};
    int D = 160;
    double r = 0.4;  // scales how many strong gradients survive thresholding
    double threshold_scale = 2.0;
    int dilate_radius = 0;  // 0: derive ceil(kernel_size / 2)
    double sigma_spatial = 2.0;
    double sigma_range = 0.1;
    // For unit-range images the shrinkage cut beta/(2 alpha) exceeds any pixel
    // gradient, so extra alternations only decay alpha and amplify noise.
    int inner_iterations = 1;
    int pde_iterations = 1;

    int effective_dilate_radius() const {
        return dilate_radius > 0 ? dilate_radius : (kernel_size + 1) / 2;
    }

    KernelEstParams kernel_params() const { return {theta, gamma, D, r, w}; }

    void validate() const {
        if (kernel_size < 3 || kernel_size % 2 == 0) throw Error("kernel size must be odd");
        if (pyramid_factor <= 0 || pyramid_factor >= 1)
            throw Error("pyramid factor must be in (0,1)");
        if (iterations_per_scale < 1) throw Error("no iterations configured");
        if (D < 128 || D > 256) throw Error("D must be between 128 and 256");
        if (lambda0 <= 0 || lambda_decay <= 0 || alpha0 <= 0 || mu <= 0 || beta < 0 ||
            theta <= 0 || gamma <= 0 || r < 0 || threshold_scale <= 0 || sigma_spatial <= 0 ||
            sigma_range <= 0 || inner_iterations < 1 || pde_iterations < 1 || min_kernel < 3)
            throw Error("invalid configuration value");
    }
};

/// Working set of one coarse-to-fine level.
struct ScaleState {
    int level = 0;
    PlanarImage blurry;
    int kernel_size = 0;
    BlurKernel kernel{1};
    PlanarImage latent;
    double lambda = 1.0;
    double alpha = 0.2;
};

/// One row of the per-iteration diagnostics trace.
struct TraceRow {
    int level = 0;
    int kernel_size = 0;
    int iteration = 0;
    double lambda = 0;
    double alpha = 0;
    double f_kernel = 0;  // kernel energy at the freshly estimated kernel
    double f_latent = 0;  // deconvolution objective at the new latent image
};

inline void write_trace_csv(const std::vector<TraceRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open file for writing: " + path);
    out << "scale,iter,lambda,alpha,fK_energy,fL_energy\n";
    out.precision(12);
    for (const TraceRow& r : rows)
        out << r.level << "," << r.iteration << "," << r.lambda << "," << r.alpha << ","
            << r.f_kernel << "," << r.f_latent << "\n";
}

/// Coarse-to-fine kernel estimation on a grayscale image: per level and
/// iteration, predict the latent image, keep the strongest gradients, solve
/// for the kernel in the FFT domain, denoise it, and refresh the latent
/// image with a one-step deconvolution.
inline BlurKernel estimate_kernel_multiscale(const PlanarImage& gray, const DeblurConfig& cfg,
                                             std::vector<TraceRow>* trace = nullptr) {
    cfg.validate();
    if (gray.channels != 1) throw Error("estimate_kernel_multiscale expects a single channel");
    if (gray.width < 3 * cfg.kernel_size || gray.height < 3 * cfg.kernel_size)
        throw Error("image too small");
    std::vector<ScaleLevel> levels = build_pyramid(gray.width, gray.height, cfg.kernel_size,
                                                   cfg.min_kernel, cfg.pyramid_factor);
    KernelEstParams kep = cfg.kernel_params();
    ScaleState st;
    st.kernel = delta_kernel(levels.front().kernel_size);
    for (size_t li = 0; li < levels.size(); ++li) {
        const ScaleLevel& lv = levels[li];
        st.level = static_cast<int>(li);
        st.blurry = resize(gray, lv.width, lv.height);
        st.latent = li == 0 ? st.blurry : resize(st.latent, lv.width, lv.height);
        if (li > 0 && st.kernel.size != lv.kernel_size)
            st.kernel = denoise_kernel(resize_kernel(st.kernel, lv.kernel_size), cfg.D);
        st.kernel_size = lv.kernel_size;
        st.lambda = cfg.lambda0;
        st.alpha = cfg.alpha0;
        for (int n = 0; n < cfg.iterations_per_scale; ++n) {
            PlanarImage pred = predict_latent(
                st.latent, {st.lambda, cfg.sigma_spatial, cfg.sigma_range, cfg.pde_iterations});
            GradientField g = threshold_gradients(pred, lv.kernel_size, cfg.r);
            GradientPairs pairs = build_gradient_pairs(g, st.blurry, lv.kernel_size, cfg.w);
            // Recentring after every estimate keeps the kernel/latent shift
            // ambiguity from compounding across iterations and scales.
            st.kernel = align_kernel(denoise_kernel(estimate_kernel(pairs, kep, lv.kernel_size),
                                                    cfg.D));
            DeconvParams dp{st.alpha, cfg.beta, cfg.omega, 1, Boundary::taper};
            st.latent = deconvolve(st.blurry, st.kernel, {st.alpha, cfg.mu}, dp);
            if (trace) {
                GradientField vv = update_v(st.latent, st.alpha, cfg.beta);
                trace->push_back({st.level, lv.kernel_size, n, st.lambda, st.alpha,
                                  kernel_energy(pairs, st.kernel, kep),
                                  energy_deconv(st.blurry, st.kernel, st.latent, vv, st.alpha,
                                                cfg.beta, cfg.omega)});
            }
            st.lambda *= cfg.lambda_decay;
            st.alpha *= cfg.mu;
        }
    }
    return st.kernel;
}

/// Blind uniform deblurring: multi-scale kernel estimation followed by the
/// final full deconvolution.
inline std::pair<PlanarImage, BlurKernel> deblur_uniform(const PlanarImage& B,
                                                         const DeblurConfig& cfg,
                                                         std::vector<TraceRow>* trace = nullptr) {
    cfg.validate();
    PlanarImage gray = B.channels == 3 ? rgb_to_gray(B) : B;
    BlurKernel K = estimate_kernel_multiscale(gray, cfg, trace);
    DeconvParams dp{cfg.alpha0, cfg.beta, cfg.omega, cfg.inner_iterations, Boundary::taper};
    PlanarImage out = deconvolve(B, K, {cfg.alpha0, cfg.mu}, dp);
    return {std::move(out), std::move(K)};
}

enum class SvMode { sharp_foreground, blurry_foreground };

struct SvResult {
    PlanarImage output;
    BlurKernel kernel{1};
    BinaryMask mask;  // the saliency (or injected) foreground mask
};

namespace detail {

/// Shared spatially-variant core. blurry_mask marks the pixels considered
/// uniformly blurred; the complement is kept from the original untouched.
/// Returns the globally deconvolved frame plus the kernel so callers can
/// compose region selections themselves.
inline std::pair<PlanarImage, BlurKernel> deblur_region(const PlanarImage& image,
                                                        const BinaryMask& blurry_mask,
                                                        const DeblurConfig& cfg) {
    BinaryMask sharp_mask = complement(blurry_mask);
    Rect rect = largest_background_rectangle(sharp_mask, 3 * cfg.kernel_size);
    PlanarImage patch = crop(image, rect);
    PlanarImage gray = patch.channels == 3 ? rgb_to_gray(patch) : patch;
    BlurKernel K = estimate_kernel_multiscale(gray, cfg);
    PlanarImage fused = fuse_compensate(image, sharp_mask, K);
    DeconvParams dp{cfg.alpha0, cfg.beta, cfg.omega, cfg.inner_iterations, Boundary::taper};
    PlanarImage deblurred = deconvolve(fused, K, {cfg.alpha0, cfg.mu}, dp);
    return {std::move(deblurred), std::move(K)};
}

}  // namespace detail

/// Saliency-guided spatially-variant deblurring. In sharp_foreground mode the
/// salient object is kept and the background is deblurred; blurry_foreground
/// swaps the roles. An injected mask overrides saliency detection.
inline SvResult deblur_spatially_variant(const PlanarImage& image, const DeblurConfig& cfg,
                                         SvMode mode,
                                         const std::optional<BinaryMask>& user_mask = {}) {
    cfg.validate();
    BinaryMask map = user_mask ? *user_mask
                               : binarize_and_dilate(saliency_map(image), cfg.threshold_scale,
                                                     cfg.effective_dilate_radius());
    if (map.width != image.width || map.height != image.height)
        throw Error("mask dimensions do not match image");
    size_t n = map.bits.size();
    if (map.count() == 0 || map.count() == n) throw Error("segmentation degenerate");
    BinaryMask blurry = mode == SvMode::sharp_foreground ? complement(map) : map;
    auto [deblurred, K] = detail::deblur_region(image, blurry, cfg);
    PlanarImage out = fuse_final(image, deblurred, complement(blurry));
    return {std::move(out), std::move(K), std::move(map)};
}

/// Independently deblurs several disjoint blurry regions against a sharp
/// background, then composes: each region takes its own deblurred frame and
/// every uncovered pixel keeps the original value exactly.
inline PlanarImage deblur_multi_region(const PlanarImage& image,
                                       const std::vector<BinaryMask>& masks,
                                       const DeblurConfig& cfg) {
    cfg.validate();
    if (masks.empty()) return image;
    std::vector<RegionPlan> plans = multi_region_plan(image, masks);
    std::vector<PlanarImage> deblurred;
    deblurred.reserve(plans.size());
    for (const RegionPlan& plan : plans) {
        try {
            deblurred.push_back(detail::deblur_region(image, plan.mask, cfg).first);
        } catch (const Error& e) {
            if (std::string_view(e.what()) == "background too small")
                throw Error("region too small");
            throw;
        }
    }
    return multi_region_compose(image, masks, deblurred);
}

}  // namespace sdeblur

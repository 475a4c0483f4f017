#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <functional>

#include "oracles.hpp"
#include "sdeblur/sdeblur.hpp"

using namespace sdeblur;

namespace {

// fast settings for structural tests: one or two pyramid levels
DeblurConfig small_config(int kernel_size = 5, int iters = 2) {
    DeblurConfig cfg;
    cfg.kernel_size = kernel_size;
    cfg.iterations_per_scale = iters;
    cfg.inner_iterations = 1;
    return cfg;
}

struct ThreadGuard {
    ~ThreadGuard() { set_threads(1); }
};

std::string expect_error(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.what();
    }
    return "(no error)";
}

}  // namespace

TEST(Config, ValidationMessages) {
    DeblurConfig cfg;
    cfg.kernel_size = 4;
    EXPECT_EQ(expect_error([&] { cfg.validate(); }), "kernel size must be odd");
    cfg = DeblurConfig{};
    cfg.iterations_per_scale = 0;
    EXPECT_EQ(expect_error([&] { cfg.validate(); }), "no iterations configured");
    cfg = DeblurConfig{};
    cfg.D = 100;
    EXPECT_EQ(expect_error([&] { cfg.validate(); }), "D must be between 128 and 256");
    cfg = DeblurConfig{};
    cfg.pyramid_factor = 1.0;
    EXPECT_EQ(expect_error([&] { cfg.validate(); }), "pyramid factor must be in (0,1)");
    cfg = DeblurConfig{};
    cfg.sigma_range = 0.0;
    EXPECT_EQ(expect_error([&] { cfg.validate(); }), "invalid configuration value");
    EXPECT_EQ(DeblurConfig{}.effective_dilate_radius(), 8);  // ceil(15 / 2)
    cfg = DeblurConfig{};
    cfg.dilate_radius = 3;
    EXPECT_EQ(cfg.effective_dilate_radius(), 3);
}

TEST(Multiscale, TraceFollowsTheSchedules) {
    PlanarImage sharp = make_test_image(40, 40, 1, 900);
    BlurKernel truth = synth_kernel({SynthSpec::Family::gaussian, 5, 0, 0, 1.0, 0, 0, 1});
    PlanarImage blurry = convolve(sharp, truth);
    DeblurConfig cfg = small_config(5, 3);
    std::vector<TraceRow> trace;
    BlurKernel est = estimate_kernel_multiscale(blurry, cfg, &trace);
    EXPECT_NEAR(est.sum(), 1.0, 1e-9);

    // two levels (3, 5) x three iterations
    ASSERT_EQ(trace.size(), 6u);
    double lambda = cfg.lambda0, alpha = cfg.alpha0;
    for (int n = 0; n < 3; ++n) {
        for (int level : {0, 1}) {
            const TraceRow& row = trace[static_cast<size_t>(level) * 3 + n];
            EXPECT_EQ(row.level, level);
            EXPECT_EQ(row.iteration, n);
            EXPECT_EQ(row.lambda, lambda);  // exact product chain, reset per level
            EXPECT_EQ(row.alpha, alpha);
            EXPECT_GT(row.f_kernel, 0.0);
            EXPECT_GT(row.f_latent, 0.0);
        }
        lambda *= cfg.lambda_decay;
        alpha *= cfg.mu;
    }
    EXPECT_EQ(trace[0].kernel_size, 3);
    EXPECT_EQ(trace[3].kernel_size, 5);
}

TEST(Multiscale, InputValidation) {
    DeblurConfig cfg = small_config();
    PlanarImage rgb = make_test_image(32, 32, 3, 901);
    EXPECT_EQ(expect_error([&] { estimate_kernel_multiscale(rgb, cfg); }),
              "estimate_kernel_multiscale expects a single channel");
    PlanarImage tiny = make_test_image(14, 14, 1, 902);
    EXPECT_EQ(expect_error([&] { estimate_kernel_multiscale(tiny, cfg); }), "image too small");
    PlanarImage ok = make_test_image(32, 32, 1, 903);
    cfg.iterations_per_scale = 0;
    EXPECT_EQ(expect_error([&] { estimate_kernel_multiscale(ok, cfg); }),
              "no iterations configured");
}

TEST(TraceCsv, PinnedColumns) {
    std::vector<TraceRow> rows{{0, 3, 0, 1.0, 0.2, 12.5, 100.0},
                               {1, 5, 1, 0.9, 0.18, 6.25, 50.0}};
    write_trace_csv(rows, "pipeline_trace.csv");
    std::ifstream in("pipeline_trace.csv");
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "scale,iter,lambda,alpha,fK_energy,fL_energy");
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line.substr(0, 4), "0,0,");
    std::getline(in, line);
    EXPECT_EQ(line.substr(0, 4), "1,1,");
    in.close();
    std::remove("pipeline_trace.csv");
}

TEST(DeblurUniform, DeterministicAcrossRunsAndThreads) {
    ThreadGuard guard;
    PlanarImage sharp = make_test_image(48, 48, 1, 910);
    SynthSpec spec;
    spec.family = SynthSpec::Family::line;
    spec.size = 5;
    spec.length = 4;
    spec.angle_deg = 20;
    spec.noise_sigma = 0.005;
    spec.seed = 3;
    PlanarImage blurry = synth_blur(sharp, spec);
    DeblurConfig cfg = small_config(5, 2);

    set_threads(1);
    auto [out1, k1] = deblur_uniform(blurry, cfg);
    auto [out2, k2] = deblur_uniform(blurry, cfg);
    EXPECT_EQ(oracle::max_abs_diff(out1, out2), 0.0);
    for (size_t i = 0; i < k1.w.size(); ++i) EXPECT_EQ(k1.w[i], k2.w[i]);

    set_threads(4);
    auto [out4, k4] = deblur_uniform(blurry, cfg);
    EXPECT_EQ(oracle::max_abs_diff(out1, out4), 0.0);
    for (size_t i = 0; i < k1.w.size(); ++i) EXPECT_EQ(k1.w[i], k4.w[i]);
    EXPECT_NEAR(k1.sum(), 1.0, 1e-9);
}

TEST(DeblurUniform, RgbUsesGrayForEstimationAndDeblursAllChannels) {
    PlanarImage sharp = make_test_image(48, 48, 3, 911);
    BlurKernel truth = synth_kernel({SynthSpec::Family::gaussian, 5, 0, 0, 0.8, 0, 0, 1});
    PlanarImage blurry = convolve(sharp, truth);
    clamp01(blurry);
    auto [out, k] = deblur_uniform(blurry, small_config(5, 2));
    EXPECT_EQ(out.channels, 3);
    EXPECT_EQ(out.width, 48);
    EXPECT_NEAR(k.sum(), 1.0, 1e-9);
}

TEST(SpatiallyVariant, DegenerateSegmentationAndMaskChecks) {
    DeblurConfig cfg = small_config(3, 1);
    PlanarImage flat(32, 32, 3);
    for (double& v : flat.data) v = 0.5;
    EXPECT_EQ(expect_error([&] {
                  deblur_spatially_variant(flat, cfg, SvMode::sharp_foreground);
              }),
              "segmentation degenerate");

    PlanarImage img = make_test_image(32, 32, 1, 912);
    BinaryMask full(32, 32, 1);
    EXPECT_EQ(expect_error([&] {
                  deblur_spatially_variant(img, cfg, SvMode::blurry_foreground, full);
              }),
              "segmentation degenerate");
    BinaryMask wrong(8, 8);
    wrong.at(1, 1) = 1;
    EXPECT_EQ(expect_error([&] {
                  deblur_spatially_variant(img, cfg, SvMode::blurry_foreground, wrong);
              }),
              "mask dimensions do not match image");
}

TEST(SpatiallyVariant, KeepsMaskSelectedPixelsBitForBit) {
    PlanarImage sharp = make_test_image(64, 64, 1, 913);
    BlurKernel k3 = synth_kernel({SynthSpec::Family::gaussian, 3, 0, 0, 0.7, 0, 0, 1});
    PlanarImage blurred = convolve(sharp, k3);
    clamp01(blurred);
    BinaryMask fg(64, 64);
    for (int y = 24; y < 40; ++y)
        for (int x = 24; x < 40; ++x) fg.at(x, y) = 1;
    // composite: sharp foreground patch over a blurred background
    PlanarImage composite = blurred;
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x)
            if (fg.at(x, y)) composite.at(x, y) = sharp.at(x, y);

    DeblurConfig cfg = small_config(3, 2);
    SvResult res = deblur_spatially_variant(composite, cfg, SvMode::sharp_foreground, fg);
    EXPECT_EQ(res.mask.count(), fg.count());
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x)
            if (fg.at(x, y)) EXPECT_EQ(res.output.at(x, y), composite.at(x, y));
    EXPECT_NEAR(res.kernel.sum(), 1.0, 1e-9);

    // blurry-foreground mode flips the roles: background pixels survive
    SvResult flip = deblur_spatially_variant(composite, cfg, SvMode::blurry_foreground,
                                             complement(fg));
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x)
            if (fg.at(x, y)) EXPECT_EQ(flip.output.at(x, y), composite.at(x, y));
}

TEST(MultiRegion, EmptyListIsIdentity) {
    PlanarImage img = make_test_image(24, 24, 1, 914);
    PlanarImage out = deblur_multi_region(img, {}, small_config(3, 1));
    EXPECT_EQ(oracle::max_abs_diff(img, out), 0.0);
}

TEST(MultiRegion, SingleMaskEqualsBlurryForegroundMode) {
    PlanarImage sharp = make_test_image(72, 72, 1, 915);
    BlurKernel k = synth_kernel({SynthSpec::Family::gaussian, 3, 0, 0, 0.8, 0, 0, 1});
    PlanarImage blurred = convolve(sharp, k);
    clamp01(blurred);
    BinaryMask region(72, 72);
    for (int y = 20; y < 52; ++y)
        for (int x = 20; x < 52; ++x) region.at(x, y) = 1;
    PlanarImage composite = sharp;
    for (int y = 0; y < 72; ++y)
        for (int x = 0; x < 72; ++x)
            if (region.at(x, y)) composite.at(x, y) = blurred.at(x, y);

    DeblurConfig cfg = small_config(3, 2);
    PlanarImage multi = deblur_multi_region(composite, {region}, cfg);
    SvResult sv = deblur_spatially_variant(composite, cfg, SvMode::blurry_foreground, region);
    EXPECT_EQ(oracle::max_abs_diff(multi, sv.output), 0.0);
    // untouched background is preserved exactly
    for (int y = 0; y < 72; ++y)
        for (int x = 0; x < 72; ++x)
            if (!region.at(x, y)) EXPECT_EQ(multi.at(x, y), composite.at(x, y));
}

TEST(MultiRegion, ErrorsForOverlapAndThinRegions) {
    PlanarImage img = make_test_image(48, 48, 1, 916);
    DeblurConfig cfg = small_config(3, 1);
    BinaryMask a(48, 48), b(48, 48);
    for (int y = 4; y < 20; ++y)
        for (int x = 4; x < 20; ++x) a.at(x, y) = 1;
    for (int y = 16; y < 32; ++y)
        for (int x = 16; x < 32; ++x) b.at(x, y) = 1;  // overlaps a at (16..19)
    EXPECT_EQ(expect_error([&] { deblur_multi_region(img, {a, b}, cfg); }), "masks overlap");

    BinaryMask thin(48, 48);
    for (int x = 0; x < 48; ++x)
        for (int y = 10; y < 14; ++y) thin.at(x, y) = 1;  // 4 rows < 3 * kernel_size
    EXPECT_EQ(expect_error([&] { deblur_multi_region(img, {thin}, cfg); }),
              "region too small");
}

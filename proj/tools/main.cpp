#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sdeblur/sdeblur.hpp"

namespace {

using namespace sdeblur;
using json = nlohmann::json;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

void parse_config_file(const std::string& path, DeblurConfig& cfg) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open file: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        auto trim = [](std::string s) {
            size_t a = s.find_first_not_of(" \t\r");
            size_t b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        std::string t = trim(line);
        if (t.empty()) continue;
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw UsageError(path + ":" + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        try {
            if (key == "kernel_size") cfg.kernel_size = std::stoi(value);
            else if (key == "pyramid_factor") cfg.pyramid_factor = std::stod(value);
            else if (key == "min_kernel") cfg.min_kernel = std::stoi(value);
            else if (key == "iterations_per_scale") cfg.iterations_per_scale = std::stoi(value);
            else if (key == "lambda0") cfg.lambda0 = std::stod(value);
            else if (key == "lambda_decay") cfg.lambda_decay = std::stod(value);
            else if (key == "alpha0") cfg.alpha0 = std::stod(value);
            else if (key == "mu") cfg.mu = std::stod(value);
            else if (key == "beta") cfg.beta = std::stod(value);
            else if (key == "theta") cfg.theta = std::stod(value);
            else if (key == "gamma") cfg.gamma = std::stod(value);
            else if (key == "D") cfg.D = std::stoi(value);
            else if (key == "r") cfg.r = std::stod(value);
            else if (key == "threshold_scale") cfg.threshold_scale = std::stod(value);
            else if (key == "dilate_radius") cfg.dilate_radius = std::stoi(value);
            else if (key == "sigma_spatial") cfg.sigma_spatial = std::stod(value);
            else if (key == "sigma_range") cfg.sigma_range = std::stod(value);
            else if (key == "inner_iterations") cfg.inner_iterations = std::stoi(value);
            else if (key == "pde_iterations") cfg.pde_iterations = std::stoi(value);
            else throw UsageError(path + ": unknown config key '" + key + "'");
        } catch (const std::invalid_argument&) {
            throw UsageError(path + ": bad value for '" + key + "'");
        }
    }
}

/// Shared deblurring options. Flags are applied on top of config-file values.
struct DeblurFlags {
    std::string config;
    int threads = 1;
    int ksize = 0;
    int iters = -1, inner = -1, pde = -1, min_kernel = -1, D = -1, dilate = -1;
    double alpha0 = NAN, mu = NAN, beta = NAN, r = NAN, lambda0 = NAN, lambda_decay = NAN,
           threshold_scale = NAN, sigma_spatial = NAN, sigma_range = NAN, factor = NAN;
};

void add_deblur_flags(CLI::App* cmd, DeblurFlags& f, bool need_kernel) {
    cmd->add_option("--config", f.config, "flat key = value config file");
    cmd->add_option("--threads", f.threads, "worker thread count");
    auto* k = cmd->add_option("-k,--kernel-size", f.ksize, "blur kernel size (odd)");
    if (need_kernel) k->required();
    cmd->add_option("--iters", f.iters, "iterations per pyramid scale");
    cmd->add_option("--inner-iters", f.inner, "deconvolution inner iterations");
    cmd->add_option("--pde-iters", f.pde, "prediction PDE iterations");
    cmd->add_option("--min-kernel", f.min_kernel, "coarsest kernel size");
    cmd->add_option("--alpha0", f.alpha0, "initial gradient-similarity weight");
    cmd->add_option("--mu", f.mu, "alpha decay per iteration");
    cmd->add_option("--beta", f.beta, "gradient sparsity weight");
    cmd->add_option("--lambda0", f.lambda0, "initial edge-enhancement strength");
    cmd->add_option("--lambda-decay", f.lambda_decay, "lambda decay per iteration");
    cmd->add_option("--r", f.r, "gradient-threshold target factor");
    cmd->add_option("--D", f.D, "kernel-denoise area divisor");
    cmd->add_option("--threshold-scale", f.threshold_scale, "saliency threshold scale");
    cmd->add_option("--dilate-radius", f.dilate, "saliency mask dilation radius");
    cmd->add_option("--pyramid-factor", f.factor, "per-level kernel shrink factor");
    cmd->add_option("--sigma-spatial", f.sigma_spatial, "bilateral spatial sigma");
    cmd->add_option("--sigma-range", f.sigma_range, "bilateral range sigma");
}

DeblurConfig make_config(const DeblurFlags& f) {
    DeblurConfig cfg;
    if (!f.config.empty()) parse_config_file(f.config, cfg);
    if (f.ksize > 0) cfg.kernel_size = f.ksize;
    if (f.iters >= 0) cfg.iterations_per_scale = f.iters;
    if (f.inner >= 0) cfg.inner_iterations = f.inner;
    if (f.pde >= 0) cfg.pde_iterations = f.pde;
    if (f.min_kernel >= 0) cfg.min_kernel = f.min_kernel;
    if (f.D >= 0) cfg.D = f.D;
    if (f.dilate >= 0) cfg.dilate_radius = f.dilate;
    if (!std::isnan(f.alpha0)) cfg.alpha0 = f.alpha0;
    if (!std::isnan(f.mu)) cfg.mu = f.mu;
    if (!std::isnan(f.beta)) cfg.beta = f.beta;
    if (!std::isnan(f.r)) cfg.r = f.r;
    if (!std::isnan(f.lambda0)) cfg.lambda0 = f.lambda0;
    if (!std::isnan(f.lambda_decay)) cfg.lambda_decay = f.lambda_decay;
    if (!std::isnan(f.threshold_scale)) cfg.threshold_scale = f.threshold_scale;
    if (!std::isnan(f.sigma_spatial)) cfg.sigma_spatial = f.sigma_spatial;
    if (!std::isnan(f.sigma_range)) cfg.sigma_range = f.sigma_range;
    if (!std::isnan(f.factor)) cfg.pyramid_factor = f.factor;
    set_threads(f.threads);
    return cfg;
}

SynthSpec parse_kernel_spec(const std::string& text) {
    std::vector<std::string> parts;
    size_t pos = 0;
    while (pos <= text.size()) {
        size_t next = text.find(':', pos);
        if (next == std::string::npos) next = text.size();
        parts.push_back(text.substr(pos, next - pos));
        pos = next + 1;
    }
    auto odd_at_least = [](double v) {
        int n = std::max(1, static_cast<int>(std::ceil(v)));
        return n % 2 == 0 ? n + 1 : n;
    };
    SynthSpec spec;
    try {
        if (parts[0] == "line") {
            if (parts.size() < 3 || parts.size() > 4)
                throw UsageError("line kernel spec is line:<length>:<angle>[:<size>]");
            spec.family = SynthSpec::Family::line;
            spec.length = std::stod(parts[1]);
            spec.angle_deg = std::stod(parts[2]);
            spec.size = parts.size() == 4 ? std::stoi(parts[3]) : odd_at_least(spec.length);
        } else if (parts[0] == "gaussian") {
            if (parts.size() < 2 || parts.size() > 3)
                throw UsageError("gaussian kernel spec is gaussian:<sigma>[:<size>]");
            spec.family = SynthSpec::Family::gaussian;
            spec.sigma = std::stod(parts[1]);
            spec.size = parts.size() == 3 ? std::stoi(parts[2])
                                          : odd_at_least(6.0 * spec.sigma + 1.0);
        } else if (parts[0] == "disk") {
            if (parts.size() < 2 || parts.size() > 3)
                throw UsageError("disk kernel spec is disk:<radius>[:<size>]");
            spec.family = SynthSpec::Family::disk;
            spec.radius = std::stod(parts[1]);
            spec.size = parts.size() == 3 ? std::stoi(parts[2])
                                          : odd_at_least(2.0 * spec.radius + 3.0);
        } else {
            throw UsageError("unknown kernel family '" + parts[0] + "'");
        }
    } catch (const std::invalid_argument&) {
        throw UsageError("malformed kernel spec '" + text + "'");
    }
    return spec;
}

PlanarImage kernel_to_image(const BlurKernel& k) {
    PlanarImage img(k.size, k.size, 1);
    img.data = k.w;
    double mx = image_max(img);
    if (mx > 0)
        for (double& v : img.data) v /= mx;
    return img;
}

int run(int argc, char** argv) {
    CLI::App app{"Blind motion deblurring with saliency-guided region handling"};
    app.require_subcommand(1);

    // deblur
    DeblurFlags df;
    std::string d_in, d_out, d_kernel_out, d_trace;
    auto* deblur_cmd = app.add_subcommand("deblur", "uniform blind deblurring");
    deblur_cmd->add_option("input", d_in, "blurry image")->required();
    deblur_cmd->add_option("-o,--output", d_out, "deblurred output image")->required();
    add_deblur_flags(deblur_cmd, df, true);
    deblur_cmd->add_option("--dump-kernel", d_kernel_out, "write estimated kernel (text)");
    deblur_cmd->add_option("--trace", d_trace, "write per-iteration energies (csv)");
    deblur_cmd->callback([&] {
        DeblurConfig cfg = make_config(df);
        PlanarImage B = load_image(d_in);
        std::vector<TraceRow> trace;
        double t0 = now_seconds();
        auto [out, K] = deblur_uniform(B, cfg, d_trace.empty() ? nullptr : &trace);
        double dt = now_seconds() - t0;
        save_image(out, d_out);
        if (!d_kernel_out.empty()) save_kernel(K, d_kernel_out);
        if (!d_trace.empty()) write_trace_csv(trace, d_trace);
        std::cerr << "deblur " << B.width << "x" << B.height << " k=" << cfg.kernel_size
                  << " took " << dt << " s\n";
    });

    // deblur-sv
    DeblurFlags svf;
    std::string sv_in, sv_out, sv_mode = "sharp-fg", sv_mask, sv_kernel_out, sv_mask_out;
    auto* sv_cmd = app.add_subcommand("deblur-sv", "spatially-variant deblurring");
    sv_cmd->add_option("input", sv_in, "input image")->required();
    sv_cmd->add_option("-o,--output", sv_out, "output image")->required();
    add_deblur_flags(sv_cmd, svf, true);
    sv_cmd->add_option("--mode", sv_mode, "sharp-fg | blurry-fg")
        ->check(CLI::IsMember({"sharp-fg", "blurry-fg"}));
    sv_cmd->add_option("--mask", sv_mask, "user mask overriding saliency (pgm)");
    sv_cmd->add_option("--dump-kernel", sv_kernel_out, "write estimated kernel (text)");
    sv_cmd->add_option("--mask-out", sv_mask_out, "write the mask used (pgm)");
    sv_cmd->callback([&] {
        DeblurConfig cfg = make_config(svf);
        PlanarImage B = load_image(sv_in);
        std::optional<BinaryMask> user;
        if (!sv_mask.empty()) user = load_mask(sv_mask);
        SvMode mode = sv_mode == "blurry-fg" ? SvMode::blurry_foreground
                                             : SvMode::sharp_foreground;
        double t0 = now_seconds();
        SvResult res = deblur_spatially_variant(B, cfg, mode, user);
        double dt = now_seconds() - t0;
        save_image(res.output, sv_out);
        if (!sv_kernel_out.empty()) save_kernel(res.kernel, sv_kernel_out);
        if (!sv_mask_out.empty()) save_mask(res.mask, sv_mask_out);
        std::cerr << "deblur-sv " << B.width << "x" << B.height << " took " << dt << " s\n";
    });

    // deblur-multi
    DeblurFlags mf;
    std::string m_in, m_out;
    std::vector<std::string> m_masks;
    auto* multi_cmd = app.add_subcommand("deblur-multi", "per-region deblurring");
    multi_cmd->add_option("input", m_in, "input image")->required();
    multi_cmd->add_option("-o,--output", m_out, "output image")->required();
    add_deblur_flags(multi_cmd, mf, true);
    multi_cmd->add_option("--mask", m_masks, "region mask (repeatable, disjoint)");
    multi_cmd->callback([&] {
        DeblurConfig cfg = make_config(mf);
        PlanarImage B = load_image(m_in);
        std::vector<BinaryMask> masks;
        masks.reserve(m_masks.size());
        for (const std::string& p : m_masks) masks.push_back(load_mask(p));
        double t0 = now_seconds();
        PlanarImage out = deblur_multi_region(B, masks, cfg);
        double dt = now_seconds() - t0;
        save_image(out, m_out);
        std::cerr << "deblur-multi " << masks.size() << " region(s) took " << dt << " s\n";
    });

    // saliency
    DeblurFlags sf;
    sf.ksize = 15;  // only feeds the dilation radius default
    std::string s_in, s_out, s_mask_out;
    auto* sal_cmd = app.add_subcommand("saliency", "saliency map and mask");
    sal_cmd->add_option("input", s_in, "input image")->required();
    sal_cmd->add_option("-o,--output", s_out, "saliency map image")->required();
    add_deblur_flags(sal_cmd, sf, false);
    sal_cmd->add_option("--mask-out", s_mask_out, "binary mask output (pgm)");
    sal_cmd->callback([&] {
        DeblurConfig cfg = make_config(sf);
        PlanarImage img = load_image(s_in);
        PlanarImage map = saliency_map(img);
        save_image(map, s_out);
        if (!s_mask_out.empty()) {
            BinaryMask mask = binarize_and_dilate(map, cfg.threshold_scale,
                                                  cfg.effective_dilate_radius());
            save_mask(mask, s_mask_out);
            try {
                Rect rect = largest_background_rectangle(mask, 3 * cfg.kernel_size);
                std::cout << "rect " << rect.x << " " << rect.y << " " << rect.w << " "
                          << rect.h << "\n";
            } catch (const Error& e) {
                std::cerr << "no usable background rectangle: " << e.what() << "\n";
            }
        }
    });

    // predict (edge-map inspection)
    DeblurFlags pf;
    std::string p_in, p_out, p_edges;
    auto* pred_cmd = app.add_subcommand("predict", "latent prediction / edge map dump");
    pred_cmd->add_option("input", p_in, "input image")->required();
    pred_cmd->add_option("-o,--output", p_out, "predicted image")->required();
    add_deblur_flags(pred_cmd, pf, false);
    pred_cmd->add_option("--edges", p_edges, "edge map (-lambda * deltaI) image");
    pred_cmd->callback([&] {
        DeblurConfig cfg = make_config(pf);
        PlanarImage img = load_image(p_in);
        PlanarImage gray = img.channels == 3 ? rgb_to_gray(img) : img;
        PlanarImage edges;
        PredictParams pp{cfg.lambda0, cfg.sigma_spatial, cfg.sigma_range, cfg.pde_iterations};
        PlanarImage pred = predict_latent(gray, pp, p_edges.empty() ? nullptr : &edges);
        save_image(pred, p_out);
        if (!p_edges.empty()) {
            // map signed edge values into the displayable [0,1] range
            for (double& v : edges.data) v = std::clamp(0.5 + v, 0.0, 1.0);
            save_image(edges, p_edges);
        }
    });

    // synth
    std::string sy_in, sy_out, sy_kernel_out, sy_spec;
    double sy_noise = 0.0;
    uint64_t sy_seed = 1;
    int sy_threads = 1;
    auto* synth_cmd = app.add_subcommand("synth", "synthetic blur generator");
    synth_cmd->add_option("input", sy_in, "sharp ground-truth image")->required();
    synth_cmd->add_option("-o,--output", sy_out, "blurry output image")->required();
    synth_cmd->add_option("--kernel", sy_spec, "line:<len>:<deg> | gaussian:<sigma> | disk:<r>")
        ->required();
    synth_cmd->add_option("--noise", sy_noise, "Gaussian noise sigma");
    synth_cmd->add_option("--seed", sy_seed, "noise seed");
    synth_cmd->add_option("--threads", sy_threads, "worker thread count");
    synth_cmd->add_option("--kernel-out", sy_kernel_out, "write the true kernel (text)");
    synth_cmd->callback([&] {
        set_threads(sy_threads);
        SynthSpec spec = parse_kernel_spec(sy_spec);
        spec.noise_sigma = sy_noise;
        spec.seed = sy_seed;
        PlanarImage sharp = load_image(sy_in);
        PlanarImage blurry = synth_blur(sharp, spec);
        save_image(blurry, sy_out);
        if (!sy_kernel_out.empty()) save_kernel(synth_kernel(spec), sy_kernel_out);
    });

    // eval
    std::string e_sharp, e_blurry, e_deblurred, e_ktrue, e_kest, e_json;
    double e_seconds = 0.0;
    auto* eval_cmd = app.add_subcommand("eval", "benchmark report for one image");
    eval_cmd->add_option("--sharp", e_sharp, "ground-truth sharp image")->required();
    eval_cmd->add_option("--blurry", e_blurry, "blurry input image")->required();
    eval_cmd->add_option("--deblurred", e_deblurred, "deblurring result")->required();
    eval_cmd->add_option("--kernel-true", e_ktrue, "ground-truth kernel (text)");
    eval_cmd->add_option("--kernel-est", e_kest, "estimated kernel (text)");
    eval_cmd->add_option("--json", e_json, "report output path");
    eval_cmd->add_option("--seconds", e_seconds, "wall-clock seconds of the deblur run");
    eval_cmd->callback([&] {
        double t0 = now_seconds();
        PlanarImage sharp = load_image(e_sharp);
        PlanarImage blurry = load_image(e_blurry);
        PlanarImage deblurred = load_image(e_deblurred);
        BenchRecord rec;
        rec.id = std::filesystem::path(e_deblurred).stem().string();
        rec.width = sharp.width;
        rec.height = sharp.height;
        rec.rmse_blurry = rmse(blurry, sharp);
        rec.rmse_deblurred = rmse(deblurred, sharp);
        if (!e_ktrue.empty() && !e_kest.empty()) {
            BlurKernel kt = load_kernel(e_ktrue);
            BlurKernel ke = load_kernel(e_kest);
            rec.kernel_size = ke.size;
            rec.kernel_ncc = kernel_ncc(align_kernel(ke), align_kernel(kt));
        }
        rec.seconds = e_seconds > 0 ? e_seconds : now_seconds() - t0;
        std::cout << "rmseBlurry=" << rec.rmse_blurry
                  << " rmseDeblurred=" << rec.rmse_deblurred
                  << " kernelNcc=" << rec.kernel_ncc << "\n";
        if (!e_json.empty()) {
            json j{{"imageId", rec.id},       {"width", rec.width},
                   {"height", rec.height},    {"ksize", rec.kernel_size},
                   {"rmseBlurry", rec.rmse_blurry}, {"rmseDeblurred", rec.rmse_deblurred},
                   {"kernelNcc", rec.kernel_ncc},   {"seconds", rec.seconds}};
            std::ofstream out(e_json);
            if (!out) throw Error("cannot open file for writing: " + e_json);
            out << j.dump(2) << "\n";
        }
    });

    // kernel-png (diagnostic montage of a kernel file)
    std::string kp_in, kp_out;
    auto* kpng_cmd = app.add_subcommand("kernel-png", "render a kernel file as an image");
    kpng_cmd->add_option("input", kp_in, "kernel text file")->required();
    kpng_cmd->add_option("-o,--output", kp_out, "image output")->required();
    kpng_cmd->callback([&] { save_image(kernel_to_image(load_kernel(kp_in)), kp_out); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // collapse CLI11's exit-code zoo: help/version succeed, anything else is usage
        return app.exit(e) == 0 ? 0 : 2;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const sdeblur::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

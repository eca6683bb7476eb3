// FLEXCONN command line: train, predict, evaluate, sweep, phantom, gradcheck.
// Exit codes: 0 success, 1 usage error, 2 data/format error, 3 numeric failure.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "flexconn/gaussian.hpp"
#include "flexconn/inference.hpp"
#include "flexconn/metrics.hpp"
#include "flexconn/model_io.hpp"
#include "flexconn/network.hpp"
#include "flexconn/nifti.hpp"
#include "flexconn/pgm.hpp"
#include "flexconn/phantom.hpp"
#include "flexconn/targets.hpp"
#include "flexconn/training.hpp"

namespace fc = flexconn;
namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct CommonIo {
    int slice_axis = 2;
    double normalize_percentile = 0.99;
    double normalize_clamp = 1.5;
};

void add_io_flags(CLI::App* sub, CommonIo& io) {
    sub->add_option("--slice-axis", io.slice_axis,
                    "axis along which 2D slices are taken (0=x, 1=y, 2=z)")
        ->capture_default_str()
        ->check(CLI::Range(0, 2));
    sub->add_option("--normalize-percentile", io.normalize_percentile,
                    "intensity percentile (of nonzero voxels) used as the unit scale")
        ->capture_default_str();
    sub->add_option("--normalize-clamp", io.normalize_clamp, "upper clamp after normalization")
        ->capture_default_str();
}

void use_config_file(CLI::App* sub, std::string& path) {
    sub->add_option("--config", path,
                    "flat key=value file; keys mirror the long flag names, command-line "
                    "flags override, unknown keys are rejected");
}

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Expand `--config FILE` into synthetic flags appended after the real ones.
// A key present on the command line wins; a key no flag matches is an error.
std::vector<std::string> apply_config_overlay(const CLI::App& app,
                                              std::vector<std::string> args) {
    std::string config_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
    }
    if (config_path.empty()) return args;
    if (args.empty() || args[0].empty() || args[0][0] == '-') return args;

    const CLI::App* sub = app.get_subcommand_no_throw(args[0]);
    if (sub == nullptr) return args;

    std::ifstream in(config_path);
    if (!in) throw std::runtime_error("cannot open config file " + config_path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto strip = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        };
        line = strip(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError("config file " + config_path + " line " + std::to_string(lineno) +
                             ": expected key=value");
        const std::string key = strip(line.substr(0, eq));
        const std::string value = strip(line.substr(eq + 1));
        const std::string flag = "--" + key;
        if (key == "config" || sub->get_option_no_throw(flag) == nullptr)
            throw UsageError("config file " + config_path + ": unknown key \"" + key + "\"");
        bool on_cmdline = false;
        for (const std::string& a : args)
            if (a == flag || a.rfind(flag + "=", 0) == 0) on_cmdline = true;
        if (on_cmdline) continue;
        args.push_back(flag);
        args.push_back(value);
    }
    return args;
}

fc::Volume read_canonical(const std::string& path, const CommonIo& io) {
    fc::Volume v = fc::read_volume(path);
    return fc::move_axis_to_z(v, io.slice_axis);
}

fc::Volume read_normalized(const std::string& path, const CommonIo& io) {
    return fc::normalize_intensity(read_canonical(path, io), io.normalize_percentile,
                                   io.normalize_clamp)
        .volume;
}

void write_canonical(const fc::Volume& canonical, const fc::Volume& header_source,
                     fc::NiftiDatatype dt, const std::string& path, const CommonIo& io) {
    fc::Volume out = fc::move_z_to_axis(canonical, io.slice_axis);
    out.source_header = header_source.source_header;
    fc::write_volume(out, dt, path);
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---------------------------------------------------------------- train ----

struct TrainOpts {
    std::string config;
    std::vector<std::string> t1, flair, mask;
    std::string out_model, out_log;
    std::uint64_t seed = 0;
    int depth = 5;
    int patch_size = 35;
    double membership_sigma = 1.5;
    fc::TrainingConfig tc;
    CommonIo io;
};

int run_train(const TrainOpts& o) {
    if (o.t1.size() != o.flair.size() || o.t1.size() != o.mask.size())
        throw std::runtime_error("--t1, --flair and --mask must list the same number of volumes");

    fc::NetworkConfig nc;
    nc.num_contrasts = 2;
    nc.contrast_pathway = fc::PathwayConfig::with_depth(o.depth);
    nc.fusion_pathway = fc::PathwayConfig::with_depth(o.depth);

    std::vector<fc::PatchSet> sets;
    for (std::size_t i = 0; i < o.t1.size(); ++i) {
        const fc::Volume t1 = read_normalized(o.t1[i], o.io);
        const fc::Volume flair = read_normalized(o.flair[i], o.io);
        const fc::Volume mask = read_canonical(o.mask[i], o.io);
        if (!mask.is_binary())
            throw std::runtime_error("mask is not binary (0/1): " + o.mask[i]);
        const fc::Volume target = fc::make_membership_target(mask, o.membership_sigma);
        sets.push_back(fc::extract_patches({t1, flair}, mask, o.patch_size, o.patch_size, target));
        std::fprintf(stderr, "[train] %s: %d lesion patches\n", o.mask[i].c_str(),
                     sets.back().count());
    }
    const fc::PatchSet data = fc::merge_patch_sets(sets);
    std::fprintf(stderr, "[train] total patches: %d\n", data.count());

    fc::TrainingConfig tc = o.tc;
    tc.seed = o.seed;
    tc.patch_h = tc.patch_w = o.patch_size;

    fc::Network<float> net = fc::build_network<float>(nc, o.seed);
    const fc::TrainingLog log = fc::train(net, data, tc);
    for (std::size_t e = 0; e < log.epochs.size(); ++e)
        std::fprintf(stderr, "[train] epoch %zu: train_loss %.6g  val_loss %.6g  (%.1fs)\n", e + 1,
                     log.epochs[e].train_loss, log.epochs[e].val_loss, log.epochs[e].seconds);

    fc::save_model(net, o.out_model);
    const std::string log_path =
        o.out_log.empty() ? o.out_model + ".train.csv" : o.out_log;
    std::ofstream csv(log_path);
    if (!csv) throw std::runtime_error("cannot create " + log_path);
    fc::write_training_log_csv(log, csv);
    std::fprintf(stderr, "[train] wrote %s and %s\n", o.out_model.c_str(), log_path.c_str());
    return 0;
}

// -------------------------------------------------------------- predict ----

struct PredictOpts {
    std::string config;
    std::string model, model2;
    std::string t1, flair, wm_mask;
    std::string out_membership, out_seg, overlay_dir;
    double threshold = 0.30;
    CommonIo io;
};

int run_predict(const PredictOpts& o) {
    if (o.out_membership.empty() && o.out_seg.empty())
        throw CLI::ValidationError("predict", "at least one of --out-membership/--out-seg needed");

    const fc::Network<float> net = fc::load_model(o.model);
    if (net.config.num_contrasts != 2)
        throw std::runtime_error("model expects " + std::to_string(net.config.num_contrasts) +
                                 " contrasts; this command supplies 2 (--t1 and --flair)");

    fc::Volume t1_raw = fc::read_volume(o.t1);
    const fc::Volume t1 =
        fc::normalize_intensity(fc::move_axis_to_z(t1_raw, o.io.slice_axis),
                                o.io.normalize_percentile, o.io.normalize_clamp)
            .volume;
    const fc::Volume flair = read_normalized(o.flair, o.io);
    if (!t1.same_dims(flair)) throw std::runtime_error("--t1 and --flair dims mismatch");

    fc::Volume membership = fc::predict_membership(net, {t1, flair});
    if (!o.model2.empty()) {
        const fc::Network<float> net2 = fc::load_model(o.model2);
        if (net2.config.num_contrasts != net.config.num_contrasts)
            throw std::runtime_error("--model2 contrast count differs from --model");
        membership = fc::average_memberships(membership, fc::predict_membership(net2, {t1, flair}));
    }

    if (!o.out_membership.empty())
        write_canonical(membership, t1_raw, fc::NiftiDatatype::Float32, o.out_membership, o.io);

    if (!o.out_seg.empty()) {
        fc::InferenceConfig ic;
        ic.threshold = o.threshold;
        fc::Volume wm;
        if (!o.wm_mask.empty()) {
            wm = read_canonical(o.wm_mask, o.io);
            ic.wm_mask = &wm;
        }
        const fc::Volume seg = fc::threshold_membership(membership, ic);
        write_canonical(seg, t1_raw, fc::NiftiDatatype::Uint8, o.out_seg, o.io);
    }

    if (!o.overlay_dir.empty()) {
        fs::create_directories(o.overlay_dir);
        char name[64];
        for (int z = 0; z < membership.nz; ++z) {
            std::snprintf(name, sizeof name, "membership_z%03d.pgm", z);
            fc::write_slice_pgm(membership, z, (fs::path(o.overlay_dir) / name).string());
        }
    }
    return 0;
}

// ------------------------------------------------------------- evaluate ----

struct EvaluateOpts {
    std::string config;
    std::vector<std::string> auto_paths, manual_paths, auto2_paths;
    std::string out_csv;
};

int run_evaluate(const EvaluateOpts& o) {
    if (o.auto_paths.size() != o.manual_paths.size())
        throw std::runtime_error("--auto and --manual must list the same number of volumes");
    if (!o.auto2_paths.empty() && o.auto2_paths.size() != o.auto_paths.size())
        throw std::runtime_error("--auto2 must list the same number of volumes as --auto");

    std::ofstream csv(o.out_csv);
    if (!csv) throw std::runtime_error("cannot create " + o.out_csv);
    csv << "case,dice,lfpr,ltpr,ppv,vd,auto_components,manual_components,"
           "auto_volume_mm3,manual_volume_mm3,score\n";

    std::vector<fc::MetricsReport> reports, reports2;
    std::vector<double> vol_auto, vol_manual;
    char buf[512];
    for (std::size_t i = 0; i < o.auto_paths.size(); ++i) {
        const fc::Volume a = fc::read_volume(o.auto_paths[i]);
        const fc::Volume m = fc::read_volume(o.manual_paths[i]);
        const fc::MetricsReport r = fc::evaluate_pair(a, m);
        reports.push_back(r);
        vol_auto.push_back(static_cast<double>(r.auto_voxels) * a.voxel_volume_mm3());
        vol_manual.push_back(static_cast<double>(r.manual_voxels) * m.voxel_volume_mm3());
        std::snprintf(buf, sizeof buf, "%zu,%.6g,%.6g,%.6g,%.6g,%.6g,%lld,%lld,%.6g,%.6g,%.6g\n",
                      i + 1, r.dice, r.lfpr, r.ltpr, r.ppv, r.vd, r.auto_components,
                      r.manual_components, vol_auto.back(), vol_manual.back(), r.score);
        csv << buf;
        if (!o.auto2_paths.empty())
            reports2.push_back(fc::evaluate_pair(fc::read_volume(o.auto2_paths[i]), m));
    }

    auto column = [&](auto getter, const std::vector<fc::MetricsReport>& rs) {
        std::vector<double> c;
        for (const auto& r : rs) c.push_back(getter(r));
        return c;
    };
    const std::vector<double> dices = column([](const auto& r) { return r.dice; }, reports);
    const std::vector<double> lfprs = column([](const auto& r) { return r.lfpr; }, reports);
    const std::vector<double> ltprs = column([](const auto& r) { return r.ltpr; }, reports);
    const std::vector<double> ppvs = column([](const auto& r) { return r.ppv; }, reports);
    const std::vector<double> vds = column([](const auto& r) { return r.vd; }, reports);

    std::optional<double> volcorr;
    try {
        volcorr = fc::pearson_correlation(vol_auto, vol_manual);
    } catch (const std::exception&) {
        // degenerate cohort: correlation weight gets renormalized away
    }
    fc::MetricsReport med;
    med.dice = median_of(dices);
    med.lfpr = median_of(lfprs);
    med.ltpr = median_of(ltprs);
    med.ppv = median_of(ppvs);
    med.vd = median_of(vds);
    const double cohort_score = fc::challenge_score(med, {}, volcorr);
    std::snprintf(buf, sizeof buf, "median,%.6g,%.6g,%.6g,%.6g,%.6g,,,,,%.6g\n", med.dice, med.lfpr,
                  med.ltpr, med.ppv, med.vd, cohort_score);
    csv << buf;
    if (volcorr) {
        std::snprintf(buf, sizeof buf, "volume_pearson_r,%.6g,,,,,,,,,\n", *volcorr);
        csv << buf;
    }
    try {
        const fc::RobustFit fit = fc::theil_sen(vol_manual, vol_auto);
        std::snprintf(buf, sizeof buf, "volume_fit_slope,%.6g,,,,,,,,,\nvolume_fit_intercept,%.6g,,,,,,,,,\n",
                      fit.slope, fit.intercept);
        csv << buf;
    } catch (const std::exception& e) {
        csv << "volume_fit_warning,\"" << e.what() << "\",,,,,,,,,\n";
    }

    if (!reports2.empty()) {
        auto wilcoxon_row = [&](const char* name, auto getter) {
            const std::vector<double> a = column(getter, reports);
            const std::vector<double> b = column(getter, reports2);
            try {
                const fc::WilcoxonResult w = fc::wilcoxon_signed_rank(a, b);
                std::snprintf(buf, sizeof buf, "wilcoxon_%s,%.6g,%.6g,%d,,,,,,,\n", name,
                              w.w_statistic, w.p_value, w.n_effective);
                csv << buf;
            } catch (const std::exception& e) {
                csv << "wilcoxon_" << name << "_warning,\"" << e.what() << "\",,,,,,,,,\n";
            }
        };
        wilcoxon_row("dice", [](const auto& r) { return r.dice; });
        wilcoxon_row("lfpr", [](const auto& r) { return r.lfpr; });
        wilcoxon_row("ppv", [](const auto& r) { return r.ppv; });
        wilcoxon_row("vd", [](const auto& r) { return r.vd; });
    }
    return 0;
}

// ---------------------------------------------------------------- sweep ----

struct SweepOpts {
    std::string config;
    std::string membership, truth, out_csv;
};

int run_sweep(const SweepOpts& o) {
    const fc::Volume m = fc::read_volume(o.membership);
    const fc::Volume t = fc::read_volume(o.truth);
    if (!t.is_binary()) throw std::runtime_error("truth mask is not binary: " + o.truth);
    const auto rows = fc::sweep_threshold(m, t);
    std::ofstream csv(o.out_csv);
    if (!csv) throw std::runtime_error("cannot create " + o.out_csv);
    csv << "threshold,dice\n";
    char buf[64];
    for (const auto& [tau, d] : rows) {
        std::snprintf(buf, sizeof buf, "%.2f,%.6g\n", tau, d);
        csv << buf;
    }
    return 0;
}

// -------------------------------------------------------------- phantom ----

struct PhantomOpts {
    std::string config;
    std::string out_dir;
    int cases = 1;
    std::vector<int> dims{64, 64, 64};
    std::vector<double> spacing{1.0, 1.0, 1.0};
    fc::PhantomSpec spec;
};

int run_phantom(const PhantomOpts& o) {
    fc::PhantomSpec spec = o.spec;
    if (o.dims.size() != 3) throw CLI::ValidationError("--dims", "expects 3 values");
    if (o.spacing.size() != 3) throw CLI::ValidationError("--spacing", "expects 3 values");
    spec.nx = o.dims[0];
    spec.ny = o.dims[1];
    spec.nz = o.dims[2];
    spec.sx = o.spacing[0];
    spec.sy = o.spacing[1];
    spec.sz = o.spacing[2];

    fs::create_directories(o.out_dir);
    const std::vector<fc::PhantomCase> cases = fc::generate_cohort(o.cases, spec, spec.seed);
    char name[64];
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const auto& c = cases[i];
        std::snprintf(name, sizeof name, "case_%03zu", i + 1);
        const fs::path base = fs::path(o.out_dir) / name;
        fc::write_volume(c.mprage, fc::NiftiDatatype::Float32, base.string() + "_mprage.nii");
        fc::write_volume(c.flair, fc::NiftiDatatype::Float32, base.string() + "_flair.nii");
        fc::write_volume(c.mask, fc::NiftiDatatype::Uint8, base.string() + "_mask.nii");
        std::fprintf(stderr, "[phantom] %s: %lld lesion voxels\n", name,
                     c.mask.count_nonzero());
    }
    return 0;
}

// ------------------------------------------------------------ gradcheck ----

double relative_error(double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    return std::abs(analytic - numeric) / denom;
}

int run_gradcheck(std::uint64_t seed) {
    using T = double;
    fc::Rng rng(seed);
    double worst = 0.0;

    for (int rep = 0; rep < 20; ++rep) {
        const int k = rng.uniform() < 0.5 ? 3 : 5;
        const int c_in = 1 + static_cast<int>(rng.index(3));
        const int c_out = 1 + static_cast<int>(rng.index(3));
        const int h = 5 + static_cast<int>(rng.index(4));
        const int w = 5 + static_cast<int>(rng.index(4));

        auto layer = fc::make_conv_layer<T>(c_out, c_in, k);
        for (T& v : layer.weights.data) v = rng.uniform(-0.5, 0.5);
        for (T& v : layer.bias) v = rng.uniform(-0.5, 0.5);
        fc::Tensor4<T> input(1, c_in, h, w);
        for (T& v : input.data) v = rng.uniform(-1.0, 1.0);
        fc::Tensor4<T> upstream(1, c_out, h, w);
        for (T& v : upstream.data) v = rng.uniform(-1.0, 1.0);

        auto objective = [&]() {
            const fc::Tensor4<T> out = fc::conv2d_forward(input, layer);
            double s = 0.0;
            for (std::size_t i = 0; i < out.size(); ++i)
                s += static_cast<double>(out.data[i]) * static_cast<double>(upstream.data[i]);
            return s;
        };
        const fc::Conv2DGrads<T> g = fc::conv2d_backward(input, layer, upstream);
        const double step = 1e-5;
        auto probe = [&](T& coord, double analytic) {
            const T keep = coord;
            coord = keep + static_cast<T>(step);
            const double hi = objective();
            coord = keep - static_cast<T>(step);
            const double lo = objective();
            coord = keep;
            worst = std::max(worst, relative_error(analytic, (hi - lo) / (2.0 * step)));
        };
        // probe a few coordinates of each gradient against central differences
        for (int t = 0; t < 4; ++t) {
            const std::size_t wi = rng.index(layer.weights.size());
            probe(layer.weights.data[wi], static_cast<double>(g.weights.data[wi]));
            const std::size_t ii = rng.index(input.size());
            probe(input.data[ii], static_cast<double>(g.input.data[ii]));
        }
        const std::size_t bi = rng.index(layer.bias.size());
        probe(layer.bias[bi], static_cast<double>(g.bias[bi]));
    }

    std::printf("gradcheck max relative error: %.3g (threshold 1e-4)\n", worst);
    return worst < 1e-4 ? 0 : kExitNumeric;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"FLEXCONN: fully convolutional lesion segmentation from multi-contrast MRI"};
    app.require_subcommand(1);

    TrainOpts tr;
    CLI::App* train = app.add_subcommand("train", "train a membership-regression network");
    use_config_file(train, tr.config);
    train->add_option("--t1", tr.t1, "MPRAGE/T1-w volumes (one per training case)")
        ->required()
        ->delimiter(',');
    train->add_option("--flair", tr.flair, "FLAIR volumes")->required()->delimiter(',');
    train->add_option("--mask", tr.mask, "binary lesion masks")->required()->delimiter(',');
    train->add_option("--out-model", tr.out_model, "output model file")->required();
    train->add_option("--out-log", tr.out_log, "training CSV (default: <out-model>.train.csv)");
    train->add_option("--seed", tr.seed, "seed for init, split and shuffling")
        ->capture_default_str();
    train->add_option("--depth", tr.depth, "filter banks per pathway (2-6)")
        ->capture_default_str()
        ->check(CLI::Range(2, 6));
    train->add_option("--patch-size", tr.patch_size, "square training patch size (odd)")
        ->capture_default_str();
    train->add_option("--membership-sigma", tr.membership_sigma,
                      "sigma of the 3x3 Gaussian membership kernel")
        ->capture_default_str();
    train->add_option("--epochs", tr.tc.epochs, "training epochs")->capture_default_str();
    train->add_option("--batch-size", tr.tc.batch_size, "training batch size")
        ->capture_default_str();
    train->add_option("--learning-rate", tr.tc.learning_rate, "fixed Adam learning rate")
        ->capture_default_str();
    train->add_option("--validation-fraction", tr.tc.validation_fraction,
                      "fraction of patches held out for validation")
        ->capture_default_str();
    add_io_flags(train, tr.io);

    PredictOpts pr;
    CLI::App* predict = app.add_subcommand("predict", "predict memberships and segment a volume");
    use_config_file(predict, pr.config);
    predict->add_option("--model", pr.model, "model file")->required();
    predict->add_option("--model2", pr.model2, "second-rater model; memberships are averaged");
    predict->add_option("--t1", pr.t1, "MPRAGE/T1-w volume")->required();
    predict->add_option("--flair", pr.flair, "FLAIR volume")->required();
    predict->add_option("--wm-mask", pr.wm_mask, "optional white-matter mask applied after thresholding");
    predict->add_option("--threshold", pr.threshold, "membership threshold")
        ->capture_default_str();
    predict->add_option("--out-membership", pr.out_membership, "float32 membership output");
    predict->add_option("--out-seg", pr.out_seg, "uint8 segmentation output");
    predict->add_option("--overlay-dir", pr.overlay_dir,
                        "write per-slice membership PGM images here");
    add_io_flags(predict, pr.io);

    EvaluateOpts ev;
    CLI::App* evaluate = app.add_subcommand("evaluate", "score segmentations against manual masks");
    use_config_file(evaluate, ev.config);
    evaluate->add_option("--auto", ev.auto_paths, "automated segmentations")
        ->required()
        ->delimiter(',');
    evaluate->add_option("--manual", ev.manual_paths, "manual segmentations")
        ->required()
        ->delimiter(',');
    evaluate->add_option("--auto2", ev.auto2_paths,
                         "second method's segmentations for paired Wilcoxon comparison")
        ->delimiter(',');
    evaluate->add_option("--out-csv", ev.out_csv, "metrics report CSV")->required();

    SweepOpts sw;
    CLI::App* sweep = app.add_subcommand("sweep", "Dice vs threshold table (0.05..0.85)");
    use_config_file(sweep, sw.config);
    sweep->add_option("--membership", sw.membership, "membership volume")->required();
    sweep->add_option("--truth", sw.truth, "binary truth mask")->required();
    sweep->add_option("--out-csv", sw.out_csv, "sweep CSV")->required();

    PhantomOpts ph;
    CLI::App* phantom = app.add_subcommand("phantom", "generate synthetic multi-contrast cases");
    use_config_file(phantom, ph.config);
    phantom->add_option("--out-dir", ph.out_dir, "output directory")->required();
    phantom->add_option("--cases", ph.cases, "number of cases (lesion load varies across cases)")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    phantom->add_option("--dims", ph.dims, "volume dims nx ny nz")
        ->capture_default_str()
        ->expected(3)
        ->delimiter(',');
    phantom->add_option("--spacing", ph.spacing, "voxel spacing mm")
        ->capture_default_str()
        ->expected(3)
        ->delimiter(',');
    phantom->add_option("--n-lesions", ph.spec.n_lesions, "lesions per case (base tier)")
        ->capture_default_str();
    phantom->add_option("--radius-min", ph.spec.radius_min, "min lesion semi-axis (voxels)")
        ->capture_default_str();
    phantom->add_option("--radius-max", ph.spec.radius_max, "max lesion semi-axis (voxels)")
        ->capture_default_str();
    phantom->add_option("--noise-sigma", ph.spec.noise_sigma, "additive Gaussian noise sigma")
        ->capture_default_str();
    phantom->add_option("--seed", ph.spec.seed, "cohort seed")->capture_default_str();

    std::uint64_t gc_seed = 1;
    CLI::App* gradcheck =
        app.add_subcommand("gradcheck", "finite-difference check of the analytic gradients");
    gradcheck->add_option("--seed", gc_seed, "seed")->capture_default_str();

    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        args = apply_config_overlay(app, std::move(args));
        std::reverse(args.begin(), args.end());  // CLI11 consumes reversed vectors
        app.parse(std::move(args));
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }

    try {
        if (train->parsed()) return run_train(tr);
        if (predict->parsed()) return run_predict(pr);
        if (evaluate->parsed()) return run_evaluate(ev);
        if (sweep->parsed()) return run_sweep(sw);
        if (phantom->parsed()) return run_phantom(ph);
        if (gradcheck->parsed()) return run_gradcheck(gc_seed);
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const fc::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return 0;
}

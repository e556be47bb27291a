// ismp command-line driver: dataset generation, training, scoring,
// evaluation, slice projection, filter sweeps, and pairwise registration.
// Every subcommand prints the digest of its effective configuration so runs
// can be tied back to their settings.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ismp/eval/eval.hpp"
#include "ismp/eval/synthetic.hpp"
#include "ismp/geometry/cloud_io.hpp"
#include "ismp/geometry/normals.hpp"
#include "ismp/kernels/kernels.hpp"
#include "ismp/parallel.hpp"
#include "ismp/pipeline/pipeline.hpp"
#include "ismp/sie/sie.hpp"

namespace fs = std::filesystem;

namespace {

struct GlobalOpts {
    unsigned threads = 0;  // 0 = hardware concurrency
    std::string kernels = "auto";
};

void apply_globals(const GlobalOpts& g) {
    ismp::set_thread_count(g.threads);
    if (!ismp::kernels::force_impl(g.kernels.c_str()))
        throw ismp::Error("cli", "BadKernels",
                          "kernel variant '" + g.kernels + "' is not available on this machine");
}

void add_pipeline_options(CLI::App* cmd, ismp::PipelineConfig& cfg) {
    cmd->add_option("--centers", cfg.patch.center_count, "patch centers sampled per cloud");
    cmd->add_option("--patch-k", cfg.patch.k_max, "max members per patch");
    cmd->add_option("--patch-radius", cfg.patch.radius_fraction,
                    "patch radius as a fraction of the bbox diagonal");
    cmd->add_option("--fpfh-bins", cfg.fpfh.bins_per_feature, "bins per FPFH angle feature");
    cmd->add_option("--fpfh-k", cfg.fpfh.k_spfh, "FPFH neighborhood size");
    cmd->add_option("--normals-k", cfg.normals_k, "neighborhood size for normal estimation");
    cmd->add_option("--resolution", cfg.slice_resolution, "projection raster resolution");
    cmd->add_option("--bins", cfg.sie_bins, "histogram bins in the slice descriptor");
    cmd->add_option("--alpha", cfg.filter.alpha, "filter Laplacian weight");
    cmd->add_option("--beta", cfg.filter.beta, "filter similarity decay");
    cmd->add_option("--gamma", cfg.filter.gamma, "filter anomaly-metric weight");
    cmd->add_flag("--sie,!--no-sie", cfg.ablation.use_sie, "fuse the slice global descriptor");
    cmd->add_flag("--filter,!--no-filter", cfg.ablation.use_filter, "apply the feature filter");
    cmd->add_flag("--enhanced,!--no-enhanced", cfg.ablation.use_enhanced,
                  "include the FPFH feature block");
    cmd->add_flag("--external-only", cfg.ablation.external_only,
                  "use only the external slice pair");
    static const std::map<std::string, ismp::ScoreMode> kModes{
        {"raw", ismp::ScoreMode::Raw}, {"calibrated", ismp::ScoreMode::Calibrated}};
    cmd->add_option("--score-mode", cfg.score_mode, "raw | calibrated")
        ->transform(CLI::CheckedTransformer(kModes, CLI::ignore_case));
    cmd->add_option("--ransac-iterations", cfg.ransac.iterations, "registration hypotheses");
    cmd->add_option("--ransac-inlier-frac", cfg.ransac.inlier_fraction_of_diagonal,
                    "inlier threshold as a fraction of the target diagonal");
    cmd->add_option("--ransac-min-inliers", cfg.ransac.min_inlier_fraction,
                    "minimum inlier fraction for success");
    cmd->add_option("--seed", cfg.ransac.seed, "registration RNG seed");
    cmd->add_option("--coreset", cfg.coreset_fraction, "fraction of feature rows kept");
    cmd->add_option("--coord-count", cfg.coord_count, "coordinate bank size");
}

void print_warnings(const ismp::Warnings& w) {
    for (const std::string& msg : w) std::cerr << "warning: " << msg << '\n';
}

void ensure_dir(const std::string& path) {
    std::error_code ec;
    fs::create_directories(path, ec);
    if (ec) throw ismp::Error("cli", "IoError", "cannot create directory: " + path);
}

void write_labels(const std::vector<int>& labels, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ismp::Error("cli", "IoError", "cannot open for writing: " + path);
    for (int l : labels) out << l << '\n';
    if (!out) throw ismp::Error("cli", "IoError", "write failed: " + path);
}

// ---------------------------------------------------------------- gen

struct GenOpts {
    std::string shape = "sphere";
    std::string anomaly = "bulge";
    std::uint64_t seed = 1;
    std::size_t points = 4096;
    double amplitude = 0.1;
    double region = 0.1;
    std::size_t train = 4;
    std::size_t test_normal = 8;
    std::size_t test_anomalous = 8;
    std::string out;
};

int run_gen(const GenOpts& o) {
    std::ostringstream dump;
    dump << "amplitude=" << ismp::format_value(o.amplitude) << '\n'
         << "anomaly=" << o.anomaly << '\n'
         << "points=" << o.points << '\n'
         << "region=" << ismp::format_value(o.region) << '\n'
         << "seed=" << o.seed << '\n'
         << "shape=" << o.shape << '\n'
         << "test_anomalous=" << o.test_anomalous << '\n'
         << "test_normal=" << o.test_normal << '\n'
         << "train=" << o.train << '\n';
    std::cout << "config_digest=" << ismp::fnv1a_hex(dump.str()) << '\n';

    ismp::SynthConfig base;
    base.base_shape = ismp::base_shape_from_name(o.shape);
    base.n_points = o.points;
    base.amplitude = o.amplitude;
    base.region_fraction = o.region;
    const ismp::AnomalyKind anomaly = ismp::anomaly_from_name(o.anomaly);

    ensure_dir(o.out + "/train");
    ensure_dir(o.out + "/test");
    ensure_dir(o.out + "/gt");

    char name[64];
    for (std::size_t i = 0; i < o.train; ++i) {
        ismp::SynthConfig cfg = base;
        cfg.anomaly = ismp::AnomalyKind::None;
        cfg.rng_seed = o.seed + i;
        const ismp::LabeledSample s = ismp::generate_synthetic(cfg);
        std::snprintf(name, sizeof name, "train_%03zu", i);
        ismp::save_cloud_xyz(s.cloud, o.out + "/train/" + name + ".xyz");
    }
    for (std::size_t i = 0; i < o.test_normal; ++i) {
        ismp::SynthConfig cfg = base;
        cfg.anomaly = ismp::AnomalyKind::None;
        cfg.rng_seed = o.seed + 1000 + i;
        const ismp::LabeledSample s = ismp::generate_synthetic(cfg);
        std::snprintf(name, sizeof name, "good_%03zu", i);
        ismp::save_cloud_xyz(s.cloud, o.out + "/test/" + name + ".xyz");
        write_labels(s.point_labels, o.out + "/gt/" + name + ".txt");
    }
    for (std::size_t i = 0; i < o.test_anomalous; ++i) {
        ismp::SynthConfig cfg = base;
        cfg.anomaly = anomaly;
        cfg.rng_seed = o.seed + 2000 + i;
        const ismp::LabeledSample s = ismp::generate_synthetic(cfg);
        std::snprintf(name, sizeof name, "%s_%03zu", o.anomaly.c_str(), i);
        ismp::save_cloud_xyz(s.cloud, o.out + "/test/" + name + ".xyz");
        write_labels(s.point_labels, o.out + "/gt/" + name + ".txt");
    }
    std::cout << "written=" << (o.train + o.test_normal + o.test_anomalous) << " samples to "
              << o.out << '\n';
    return 0;
}

// ---------------------------------------------------------------- fit

struct FitOpts {
    std::string data;
    std::string out;
    std::string category;
    std::string manifest;
    std::size_t template_index = 0;
    bool timings = false;
};

int run_fit(const FitOpts& o, const ismp::PipelineConfig& cfg) {
    std::cout << "config_digest=" << ismp::config_digest(cfg) << '\n';
    ismp::Warnings warnings;
    const ismp::Dataset ds = ismp::load_dataset(o.data, &warnings);
    std::vector<ismp::PointCloud> clouds;
    clouds.reserve(ds.train.size());
    for (const ismp::LabeledSample& s : ds.train) clouds.push_back(s.cloud);

    const std::string category = o.category.empty() ? ds.category : o.category;
    ismp::FitResult result = ismp::fit(clouds, o.template_index, cfg, category, &warnings);
    ismp::save_bank(result.bank, o.out);

    if (!o.manifest.empty()) {
        if (!o.timings) result.manifest.timings_ms.clear();
        ismp::save_manifest(result.manifest, o.manifest);
    }
    print_warnings(warnings);
    std::cout << "category=" << category << '\n'
              << "bank_rows=" << result.bank.feature_bank.rows << '\n'
              << "bank_coords=" << result.bank.coordinate_bank.size() << '\n';
    return 0;
}

// ---------------------------------------------------------------- score

struct ScoreOpts {
    std::string bank;
    std::string input;
    std::string out;
    std::string features_out;
};

int run_score(const ScoreOpts& o, const ismp::PipelineConfig& cfg) {
    std::cout << "config_digest=" << ismp::config_digest(cfg) << '\n';
    ismp::Warnings warnings;
    const ismp::MemoryBank bank = ismp::load_bank(o.bank);
    const ismp::PointCloud cloud = ismp::load_cloud(o.input);
    const ismp::TemplateContext tmpl = ismp::make_template_context(bank, cfg, &warnings);

    if (!o.features_out.empty()) {
        const ismp::SampleFeatures feats = ismp::extract_features(cloud, &tmpl, cfg, &warnings);
        ismp::save_feature_matrix(feats.features, o.features_out);
    }
    const ismp::AnomalyResult result = ismp::score_sample(cloud, bank, tmpl, cfg, &warnings);
    if (!o.out.empty()) {
        std::ofstream out(o.out);
        if (!out) throw ismp::Error("cli", "IoError", "cannot open for writing: " + o.out);
        for (double s : result.point_scores) out << ismp::format_value(s) << '\n';
        if (!out) throw ismp::Error("cli", "IoError", "write failed: " + o.out);
    }
    print_warnings(warnings);
    std::cout << "object_score=" << ismp::format_value(result.object_score) << '\n'
              << "flagged_fraction=" << ismp::format_value(result.flagged_fraction) << '\n';
    return 0;
}

// ---------------------------------------------------------------- eval

struct EvalOpts {
    std::string data;
    std::string bank;
    std::string out;
    std::string method = "ismp";
    std::string scores_dir;
};

int run_eval(const EvalOpts& o, const ismp::PipelineConfig& cfg) {
    std::cout << "config_digest=" << ismp::config_digest(cfg) << '\n';
    ismp::Warnings warnings;
    const ismp::Dataset ds = ismp::load_dataset(o.data, &warnings);
    const ismp::MemoryBank bank = ismp::load_bank(o.bank);
    const ismp::TemplateContext tmpl = ismp::make_template_context(bank, cfg, &warnings);
    if (!o.scores_dir.empty()) ensure_dir(o.scores_dir);

    std::vector<ismp::AnomalyResult> results;
    results.reserve(ds.test.size());
    for (const ismp::LabeledSample& s : ds.test) {
        results.push_back(ismp::score_sample(s.cloud, bank, tmpl, cfg, &warnings));
        std::cout << "sample=" << s.sample_id
                  << " object_score=" << ismp::format_value(results.back().object_score)
                  << " label=" << (s.object_anomalous ? 1 : 0) << '\n';
        if (!o.scores_dir.empty()) {
            std::ofstream out(o.scores_dir + "/" + s.sample_id + ".txt");
            for (double v : results.back().point_scores) out << ismp::format_value(v) << '\n';
        }
    }

    std::vector<const ismp::AnomalyResult*> rptr;
    std::vector<const ismp::LabeledSample*> sptr;
    for (std::size_t i = 0; i < results.size(); ++i) {
        rptr.push_back(&results[i]);
        sptr.push_back(&ds.test[i]);
    }
    const ismp::CategoryEval ce = ismp::evaluate_category(rptr, sptr, &warnings);

    ismp::EvalRow row{o.method, ds.category, {}, {}};
    if (ce.object) row.o_auroc = ce.object->auroc;
    if (ce.point) row.p_auroc = ce.point->auroc;
    ismp::save_eval_csv({row}, o.out);

    print_warnings(warnings);
    std::cout << "o_auroc=" << (ce.object ? ismp::format_value(ce.object->auroc) : "nan") << '\n'
              << "p_auroc=" << (ce.point ? ismp::format_value(ce.point->auroc) : "nan") << '\n';
    return 0;
}

// ---------------------------------------------------------------- project

struct ProjectOpts {
    std::string input;
    std::string out;
    std::size_t resolution = 224;
};

int run_project(const ProjectOpts& o) {
    std::ostringstream dump;
    dump << "input=" << o.input << '\n' << "resolution=" << o.resolution << '\n';
    std::cout << "config_digest=" << ismp::fnv1a_hex(dump.str()) << '\n';

    ismp::Warnings warnings;
    const ismp::PointCloud cloud = ismp::load_cloud(o.input);
    ensure_dir(o.out);
    const auto slices = ismp::render_slices(cloud, o.resolution, &warnings);
    for (const ismp::ProjectionSlice& slice : slices) {
        const std::string stem = o.out + "/" + ismp::slice_name(slice.spec.id);
        ismp::write_pgm(slice, stem + ".pgm");
        ismp::write_slice_stats(slice, stem + "_stats.txt");
        std::cout << ismp::slice_name(slice.spec.id) << "=" << slice.cols << "x" << slice.rows
                  << '\n';
    }
    print_warnings(warnings);
    return 0;
}

// ---------------------------------------------------------------- filter-sweep

struct SweepOpts {
    std::string input;
    std::string out;
    std::vector<double> alphas{0.2};
    std::vector<double> betas{0.2};
    std::vector<double> gammas{0.001};
};

int run_sweep(const SweepOpts& o) {
    std::ostringstream dump;
    dump << "alphas=";
    for (double v : o.alphas) dump << ismp::format_value(v) << ' ';
    dump << "\nbetas=";
    for (double v : o.betas) dump << ismp::format_value(v) << ' ';
    dump << "\ngammas=";
    for (double v : o.gammas) dump << ismp::format_value(v) << ' ';
    dump << "\ninput=" << o.input << '\n';
    std::cout << "config_digest=" << ismp::fnv1a_hex(dump.str()) << '\n';

    ismp::Warnings warnings;
    const ismp::FeatureMatrix x = ismp::load_feature_matrix(o.input);
    const auto rows = ismp::filter_sweep(x, o.alphas, o.betas, o.gammas, &warnings);
    ismp::save_sweep_csv(rows, o.out);
    print_warnings(warnings);
    std::cout << "rows=" << rows.size() << '\n';
    return 0;
}

// ---------------------------------------------------------------- register

struct RegisterOpts {
    std::string source;
    std::string target;
    std::string out;
};

int run_register(const RegisterOpts& o, const ismp::PipelineConfig& cfg) {
    std::cout << "config_digest=" << ismp::config_digest(cfg) << '\n';
    ismp::Warnings warnings;
    const ismp::PointCloud source = ismp::load_cloud(o.source);
    const ismp::PointCloud target = ismp::load_cloud(o.target);

    const ismp::SampleFeatures src = ismp::extract_features(source, nullptr, cfg, &warnings);
    const ismp::SampleFeatures dst = ismp::extract_features(target, nullptr, cfg, &warnings);
    const ismp::RegistrationResult reg =
        ismp::register_clouds(src.center_points, src.center_fpfh, dst.center_points,
                              dst.center_fpfh, cfg.ransac, &warnings);

    print_warnings(warnings);
    std::cout << "rotation=";
    for (int i = 0; i < 9; ++i)
        std::cout << ismp::format_value(reg.transform.rotation[i]) << (i == 8 ? '\n' : ' ');
    std::cout << "translation=" << ismp::format_value(reg.transform.translation.x) << ' '
              << ismp::format_value(reg.transform.translation.y) << ' '
              << ismp::format_value(reg.transform.translation.z) << '\n'
              << "inlier_fraction=" << ismp::format_value(reg.inlier_fraction) << '\n'
              << "rms_error=" << ismp::format_value(reg.rms_error) << '\n'
              << "correspondences=" << reg.correspondences << '\n';
    if (!o.out.empty())
        ismp::save_cloud_xyz(ismp::apply_transform(source, reg.transform), o.out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"point-cloud anomaly detection pipeline"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "read options from an INI file ([subcommand] sections)");

    GlobalOpts globals;
    app.add_option("--threads", globals.threads, "worker threads (0 = all cores)");
    app.add_option("--kernels", globals.kernels, "auto | scalar | avx2 | neon");

    ismp::PipelineConfig cfg;
    GenOpts gen_opts;
    FitOpts fit_opts;
    ScoreOpts score_opts;
    EvalOpts eval_opts;
    ProjectOpts project_opts;
    SweepOpts sweep_opts;
    RegisterOpts register_opts;

    CLI::App* gen = app.add_subcommand("gen", "generate a synthetic category dataset");
    static const std::map<std::string, std::string> kShapes{
        {"sphere", "sphere"}, {"box", "box"}, {"torus", "torus"}};
    static const std::map<std::string, std::string> kAnomalies{{"none", "none"},
                                                               {"bulge", "bulge"},
                                                               {"dent", "dent"},
                                                               {"blob", "blob"},
                                                               {"crop", "crop"}};
    gen->add_option("--shape", gen_opts.shape, "sphere | box | torus")
        ->transform(CLI::CheckedTransformer(kShapes, CLI::ignore_case));
    gen->add_option("--anomaly", gen_opts.anomaly, "none | bulge | dent | blob | crop")
        ->transform(CLI::CheckedTransformer(kAnomalies, CLI::ignore_case));
    gen->add_option("--seed", gen_opts.seed, "base RNG seed");
    gen->add_option("--points", gen_opts.points, "points per sample");
    gen->add_option("--amplitude", gen_opts.amplitude, "anomaly amplitude (fraction of diagonal)");
    gen->add_option("--region", gen_opts.region, "anomaly region radius (fraction of diagonal)");
    gen->add_option("--train", gen_opts.train, "training samples");
    gen->add_option("--test-normal", gen_opts.test_normal, "normal test samples");
    gen->add_option("--test-anomalous", gen_opts.test_anomalous, "anomalous test samples");
    gen->add_option("--out", gen_opts.out, "output category directory")->required();

    CLI::App* fit = app.add_subcommand("fit", "train memory banks from a category");
    fit->add_option("--data", fit_opts.data, "category directory (train/ inside)")->required();
    fit->add_option("--out", fit_opts.out, "bank output path")->required();
    fit->add_option("--category", fit_opts.category, "category name (default: directory name)");
    fit->add_option("--template-index", fit_opts.template_index, "training sample used as pose template");
    fit->add_option("--manifest", fit_opts.manifest, "write a run manifest here");
    fit->add_flag("--timings", fit_opts.timings, "include wall-clock timings in the manifest");
    add_pipeline_options(fit, cfg);

    CLI::App* score = app.add_subcommand("score", "score one cloud against a bank");
    score->add_option("--bank", score_opts.bank, "bank path")->required();
    score->add_option("--input", score_opts.input, "cloud to score")->required();
    score->add_option("--out", score_opts.out, "per-point scores output");
    score->add_option("--features-out", score_opts.features_out, "dump the feature matrix here");
    add_pipeline_options(score, cfg);

    CLI::App* eval = app.add_subcommand("eval", "score a category's test set and report AUROC");
    eval->add_option("--data", eval_opts.data, "category directory")->required();
    eval->add_option("--bank", eval_opts.bank, "bank path")->required();
    eval->add_option("--out", eval_opts.out, "evaluation CSV output")->required();
    eval->add_option("--method", eval_opts.method, "method column value");
    eval->add_option("--scores-dir", eval_opts.scores_dir, "dump per-sample point scores here");
    add_pipeline_options(eval, cfg);

    CLI::App* project = app.add_subcommand("project", "render the four depth slices of a cloud");
    project->add_option("--input", project_opts.input, "cloud to project")->required();
    project->add_option("--out", project_opts.out, "output directory")->required();
    project->add_option("--resolution", project_opts.resolution, "raster resolution");

    CLI::App* sweep = app.add_subcommand("filter-sweep", "filter parameter sweep over a matrix");
    sweep->add_option("--input", sweep_opts.input, "feature matrix path")->required();
    sweep->add_option("--out", sweep_opts.out, "sweep CSV output")->required();
    sweep->add_option("--alphas", sweep_opts.alphas, "alpha values")->delimiter(',');
    sweep->add_option("--betas", sweep_opts.betas, "beta values")->delimiter(',');
    sweep->add_option("--gammas", sweep_opts.gammas, "gamma values")->delimiter(',');

    CLI::App* reg = app.add_subcommand("register", "align one cloud onto another");
    reg->add_option("--source", register_opts.source, "cloud to move")->required();
    reg->add_option("--target", register_opts.target, "cloud to match")->required();
    reg->add_option("--out", register_opts.out, "write the transformed source here");
    add_pipeline_options(reg, cfg);

    try {
        app.parse(argc, argv);
        apply_globals(globals);
        if (gen->parsed()) return run_gen(gen_opts);
        if (fit->parsed()) return run_fit(fit_opts, cfg);
        if (score->parsed()) return run_score(score_opts, cfg);
        if (eval->parsed()) return run_eval(eval_opts, cfg);
        if (project->parsed()) return run_project(project_opts);
        if (sweep->parsed()) return run_sweep(sweep_opts);
        if (reg->parsed()) return run_register(register_opts, cfg);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const ismp::Error& e) {
        std::cerr << "error:" << e.module() << ":" << e.kind() << ": " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error:cli:Internal: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

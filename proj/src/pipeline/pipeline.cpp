#include "ismp/pipeline/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ismp/descriptors/embed.hpp"
#include "ismp/geometry/cloud_io.hpp"
#include "ismp/geometry/kdtree.hpp"
#include "ismp/geometry/normals.hpp"
#include "ismp/parallel.hpp"
#include "ismp/sie/sie.hpp"

namespace ismp {

void PipelineConfig::validate() const {
    if (ablation.external_only && !ablation.use_sie)
        throw Error("pipeline", "BadConfig", "external_only requires use_sie");
    if (normals_k < 3) throw Error("pipeline", "BadConfig", "normals_k must be at least 3");
    if (slice_resolution < 2)
        throw Error("pipeline", "BadConfig", "slice_resolution must be at least 2");
    if (sie_bins < 1) throw Error("pipeline", "BadConfig", "sie_bins must be positive");
    if (!(discrepancy_k >= 0.0) || !std::isfinite(discrepancy_k))
        throw Error("pipeline", "BadConfig", "discrepancy_k must be finite and nonnegative");
    if (patch.center_count < 1 || patch.k_max < 1 || !(patch.radius_fraction > 0.0))
        throw Error("pipeline", "BadConfig", "invalid patch configuration");
    if (fpfh.bins_per_feature < 2 || fpfh.k_spfh < 2)
        throw Error("pipeline", "BadConfig", "invalid fpfh configuration");
    if (!(std::isfinite(filter.alpha) && filter.alpha >= 0.0 && std::isfinite(filter.beta) &&
          filter.beta >= 0.0 && std::isfinite(filter.gamma) && filter.gamma >= 0.0))
        throw Error("pipeline", "BadConfig", "filter parameters must be finite and nonnegative");
    if (ransac.iterations < 1 || ransac.sample_size != 3 ||
        !(ransac.inlier_fraction_of_diagonal > 0.0) ||
        !(ransac.min_inlier_fraction >= 0.0 && ransac.min_inlier_fraction <= 1.0))
        throw Error("pipeline", "BadConfig", "invalid registration configuration");
    if (!(coreset_fraction > 0.0 && coreset_fraction <= 1.0))
        throw Error("pipeline", "BadConfig", "coreset_fraction must lie in (0, 1]");
    if (coord_count < 1) throw Error("pipeline", "BadConfig", "coord_count must be positive");
}

void dump_config(const PipelineConfig& cfg, std::ostream& out) {
    out << "ablation.external_only=" << (cfg.ablation.external_only ? 1 : 0) << '\n';
    out << "ablation.use_enhanced=" << (cfg.ablation.use_enhanced ? 1 : 0) << '\n';
    out << "ablation.use_filter=" << (cfg.ablation.use_filter ? 1 : 0) << '\n';
    out << "ablation.use_sie=" << (cfg.ablation.use_sie ? 1 : 0) << '\n';
    out << "coord_count=" << cfg.coord_count << '\n';
    out << "coreset_fraction=" << format_value(cfg.coreset_fraction) << '\n';
    out << "discrepancy_k=" << format_value(cfg.discrepancy_k) << '\n';
    out << "filter.alpha=" << format_value(cfg.filter.alpha) << '\n';
    out << "filter.beta=" << format_value(cfg.filter.beta) << '\n';
    out << "filter.gamma=" << format_value(cfg.filter.gamma) << '\n';
    out << "fpfh.bins_per_feature=" << cfg.fpfh.bins_per_feature << '\n';
    out << "fpfh.k_spfh=" << cfg.fpfh.k_spfh << '\n';
    out << "normals_k=" << cfg.normals_k << '\n';
    out << "patch.center_count=" << cfg.patch.center_count << '\n';
    out << "patch.fps_seed_index=" << cfg.patch.fps_seed_index << '\n';
    out << "patch.k_max=" << cfg.patch.k_max << '\n';
    out << "patch.radius_fraction=" << format_value(cfg.patch.radius_fraction) << '\n';
    out << "ransac.inlier_fraction_of_diagonal="
        << format_value(cfg.ransac.inlier_fraction_of_diagonal) << '\n';
    out << "ransac.iterations=" << cfg.ransac.iterations << '\n';
    out << "ransac.min_inlier_fraction=" << format_value(cfg.ransac.min_inlier_fraction) << '\n';
    out << "ransac.sample_size=" << cfg.ransac.sample_size << '\n';
    out << "ransac.seed=" << cfg.ransac.seed << '\n';
    out << "score_mode=" << (cfg.score_mode == ScoreMode::Raw ? "raw" : "calibrated") << '\n';
    out << "sie_bins=" << cfg.sie_bins << '\n';
    out << "slice_resolution=" << cfg.slice_resolution << '\n';
    out << "version=" << kPipelineVersion << '\n';
}

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

std::string config_digest(const PipelineConfig& cfg) {
    std::ostringstream dump;
    dump_config(cfg, dump);
    return fnv1a_hex(dump.str());
}

void write_manifest(const RunManifest& manifest, std::ostream& out) {
    out << "config_digest=" << manifest.config_digest << '\n';
    out << "version=" << manifest.version << '\n';
    for (const auto& [name, ms] : manifest.timings_ms)
        out << "timing_ms." << name << '=' << format_value(ms) << '\n';
    for (const std::string& w : manifest.warnings) out << "warning=" << w << '\n';
}

void save_manifest(const RunManifest& manifest, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("pipeline", "IoError", "cannot open for writing: " + path);
    write_manifest(manifest, out);
    if (!out) throw Error("pipeline", "IoError", "write failed: " + path);
}

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point since) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since)
        .count();
}

// Self-registration recovers the identity only up to SVD round-off; snapping
// keeps banked samples bit-identical to their unregistered extraction.
bool nearly_identity(const RigidTransform& t) {
    const RigidTransform id = RigidTransform::identity();
    for (int i = 0; i < 9; ++i)
        if (std::abs(t.rotation[i] - id.rotation[i]) > 1e-9) return false;
    return std::abs(t.translation.x) <= 1e-9 && std::abs(t.translation.y) <= 1e-9 &&
           std::abs(t.translation.z) <= 1e-9;
}

bool is_exact_identity(const RigidTransform& t) {
    const RigidTransform id = RigidTransform::identity();
    for (int i = 0; i < 9; ++i)
        if (t.rotation[i] != id.rotation[i]) return false;
    return t.translation.x == 0.0 && t.translation.y == 0.0 && t.translation.z == 0.0;
}

}  // namespace

SampleFeatures extract_features(const PointCloud& cloud, const TemplateContext* tmpl,
                                const PipelineConfig& cfg, Warnings* warnings) {
    if (cloud.size() < 3)
        throw Error("pipeline", "TooFewPoints",
                    "need at least 3 points, got " + std::to_string(cloud.size()));
    SampleFeatures out{PointCloud(cloud.points()), {}, {}, {}, RigidTransform::identity()};

    const std::size_t k = std::min(cfg.normals_k, cloud.size());
    const NeighborIndex index(cloud);
    const PointCloud with_normals =
        estimate_normals(cloud, index, k, NormalOrientation::toward_centroid(), warnings);

    PatchSet patches = build_patches(with_normals, index, cfg.patch, warnings);
    out.center_fpfh = fpfh(with_normals, index, patches.center_indices, cfg.fpfh, warnings);

    if (tmpl != nullptr) {
        std::vector<Point3> centers;
        centers.reserve(patches.center_indices.size());
        for (std::size_t ci : patches.center_indices) centers.push_back(cloud[ci]);
        try {
            const RegistrationResult reg =
                register_clouds(centers, out.center_fpfh, tmpl->center_points,
                                tmpl->center_features, cfg.ransac, warnings);
            out.transform = reg.transform;
        } catch (const Error& e) {
            warn(warnings, std::string("pipeline: registration failed (") + e.what() +
                               "), keeping original pose");
            out.transform = RigidTransform::identity();
        }
        if (nearly_identity(out.transform)) out.transform = RigidTransform::identity();
    }
    out.registered = apply_transform(with_normals, out.transform);

    // Patch radii scale with the frame's bounding box, so neighborhoods and
    // every feature block are derived in the registered frame.  With an
    // identity transform the first pass already is that frame.
    FeatureMatrix feature_fpfh;
    if (is_exact_identity(out.transform)) {
        feature_fpfh = out.center_fpfh;
    } else {
        const NeighborIndex reg_index(out.registered);
        patches = build_patches(out.registered, reg_index, cfg.patch, warnings);
        feature_fpfh = fpfh(out.registered, reg_index, patches.center_indices, cfg.fpfh, warnings);
    }
    out.center_points.reserve(patches.center_indices.size());
    for (std::size_t ci : patches.center_indices)
        out.center_points.push_back(out.registered[ci]);

    const FeatureMatrix embedded = patch_embed(out.registered, patches.patches);
    std::vector<const FeatureMatrix*> blocks;
    if (cfg.ablation.use_enhanced) blocks.push_back(&feature_fpfh);
    blocks.push_back(&embedded);
    FeatureMatrix local = concat_features(blocks);

    if (cfg.ablation.use_sie) {
        const auto slices = render_slices(out.registered, cfg.slice_resolution, warnings);
        std::vector<const ProjectionSlice*> chosen;
        if (cfg.ablation.external_only)
            chosen = {&slices[0], &slices[3]};
        else
            chosen = {&slices[0], &slices[1], &slices[2], &slices[3]};
        const FeatureMatrix global = global_descriptor(chosen, cfg.sie_bins);
        local = fuse_global(local, global);
    }
    out.features = cfg.ablation.use_filter ? filter(local, cfg.filter, warnings)
                                           : std::move(local);
    return out;
}

FitResult fit(const std::vector<PointCloud>& train_clouds, std::size_t template_index,
              const PipelineConfig& cfg, const std::string& category, Warnings* warnings) {
    cfg.validate();
    if (train_clouds.empty()) throw Error("pipeline", "EmptyTraining", "no training clouds");
    if (template_index >= train_clouds.size())
        throw Error("pipeline", "BadConfig",
                    "template index " + std::to_string(template_index) + " out of range");

    FitResult result;
    result.manifest.config_digest = config_digest(cfg);
    Warnings local;

    auto t0 = std::chrono::steady_clock::now();
    SampleFeatures template_sample = extract_features(train_clouds[template_index], nullptr, cfg,
                                                      &local);
    const TemplateContext tmpl{template_sample.center_points, template_sample.center_fpfh};
    result.context = tmpl;
    result.manifest.timings_ms.emplace_back("template", elapsed_ms(t0));

    std::vector<SampleFeatures> samples;
    samples.reserve(train_clouds.size());
    for (std::size_t i = 0; i < train_clouds.size(); ++i) {
        t0 = std::chrono::steady_clock::now();
        if (i == template_index)
            samples.push_back(std::move(template_sample));
        else
            samples.push_back(extract_features(train_clouds[i], &tmpl, cfg, &local));
        result.manifest.timings_ms.emplace_back("train" + std::to_string(i), elapsed_ms(t0));
    }

    t0 = std::chrono::steady_clock::now();
    std::vector<BankInput> inputs;
    inputs.reserve(samples.size());
    for (const SampleFeatures& s : samples) inputs.push_back({&s.registered, &s.features});
    result.bank = build_bank(inputs, cfg.coreset_fraction, cfg.coord_count, &local);
    result.bank.meta.category = category;
    result.bank.meta.config_digest = result.manifest.config_digest;
    result.manifest.timings_ms.emplace_back("bank", elapsed_ms(t0));

    result.manifest.warnings = local;
    if (warnings != nullptr) warnings->insert(warnings->end(), local.begin(), local.end());
    return result;
}

TemplateContext make_template_context(const MemoryBank& bank, const PipelineConfig& cfg,
                                      Warnings* warnings) {
    cfg.validate();
    if (bank.coordinate_bank.size() < 3)
        throw Error("pipeline", "BankTooSmall",
                    "coordinate bank too small to build a registration target");
    PointCloud frame(bank.coordinate_bank);
    const std::size_t k = std::min(cfg.normals_k, frame.size());
    const NeighborIndex index(frame);
    const PointCloud with_normals =
        estimate_normals(frame, index, k, NormalOrientation::toward_centroid(), warnings);
    const PatchSet patches = build_patches(with_normals, index, cfg.patch, warnings);
    TemplateContext tmpl;
    tmpl.center_points.reserve(patches.center_indices.size());
    for (std::size_t ci : patches.center_indices) tmpl.center_points.push_back(frame[ci]);
    tmpl.center_features = fpfh(with_normals, index, patches.center_indices, cfg.fpfh, warnings);
    return tmpl;
}

AnomalyResult score_sample(const PointCloud& test_cloud, const MemoryBank& bank,
                           const TemplateContext& tmpl, const PipelineConfig& cfg,
                           Warnings* warnings) {
    cfg.validate();
    if (!bank.meta.config_digest.empty() && bank.meta.config_digest != config_digest(cfg))
        warn(warnings, "pipeline: bank was built under config digest " + bank.meta.config_digest +
                           ", scoring uses " + config_digest(cfg));

    const SampleFeatures sample = extract_features(test_cloud, &tmpl, cfg, warnings);
    const NnScores feat_scores = nn_score(sample.features, bank.feature_bank, warnings);

    // Patch-level feature scores become per-point scores through the nearest
    // patch center.
    const NeighborIndex center_index(sample.center_points);
    std::vector<double> point_feat(sample.registered.size());
    parallel_for(sample.registered.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const Neighbor nearest = center_index.nearest(sample.registered[i]);
            point_feat[i] = feat_scores.reweighted[nearest.index];
        }
    });

    const CoordScores coord = coord_score(sample.registered, bank, warnings);
    return combine_scores(point_feat, coord.reweighted, cfg.score_mode, &bank.calibration);
}

}  // namespace ismp

#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "ismp/bank/bank.hpp"
#include "ismp/descriptors/fpfh.hpp"
#include "ismp/descriptors/patches.hpp"
#include "ismp/error.hpp"
#include "ismp/filtering/filter.hpp"
#include "ismp/geometry/cloud.hpp"
#include "ismp/registration/rigid.hpp"

namespace ismp {

inline constexpr const char* kPipelineVersion = "1.0.0";

struct AblationFlags {
    bool use_sie = true;        // fuse the projection-slice global descriptor
    bool use_filter = true;     // apply the Laplacian feature filter
    bool use_enhanced = true;   // include the FPFH block
    bool external_only = false; // restrict slices to the external pair P1/P4
};

struct PipelineConfig {
    PatchConfig patch;
    FpfhConfig fpfh;
    FilterParams filter;
    std::size_t normals_k = 16;
    std::size_t slice_resolution = 224;
    std::size_t sie_bins = 8;
    double discrepancy_k = 3.0;  // threshold constant for depth_discrepancy
    AblationFlags ablation;
    ScoreMode score_mode = ScoreMode::Raw;
    RansacConfig ransac;
    double coreset_fraction = 1.0;
    std::size_t coord_count = 4096;

    void validate() const;
};

// Canonical key=value dump of every semantic field, and its FNV-1a digest.
// Identical configs always produce identical digests.
void dump_config(const PipelineConfig& cfg, std::ostream& out);
std::string config_digest(const PipelineConfig& cfg);

// 64-bit FNV-1a of arbitrary text as 16 hex chars; the digest primitive
// behind config_digest, exposed for CLI subcommands with their own settings.
std::string fnv1a_hex(const std::string& text);

struct RunManifest {
    std::string config_digest;
    std::string version = kPipelineVersion;
    std::vector<std::pair<std::string, double>> timings_ms;
    Warnings warnings;
};

// key=value text; timings make this non-reproducible byte-for-byte, so the
// CLI only writes it on explicit request.
void write_manifest(const RunManifest& manifest, std::ostream& out);
void save_manifest(const RunManifest& manifest, const std::string& path);

// Registration target: patch centers of the template-frame geometry plus
// their FPFH rows.
struct TemplateContext {
    std::vector<Point3> center_points;
    FeatureMatrix center_features;
};

struct FitResult {
    MemoryBank bank;
    RunManifest manifest;
    TemplateContext context;  // the registration target the training run used
};

// Registers all training clouds onto the chosen template sample, extracts
// features per the ablation flags, and builds the memory banks.
FitResult fit(const std::vector<PointCloud>& train_clouds, std::size_t template_index,
              const PipelineConfig& cfg, const std::string& category = "unknown",
              Warnings* warnings = nullptr);

// Rebuilds a registration target from the bank's coordinate points, so a bank
// file alone is enough to score new samples.
TemplateContext make_template_context(const MemoryBank& bank, const PipelineConfig& cfg,
                                      Warnings* warnings = nullptr);

AnomalyResult score_sample(const PointCloud& test_cloud, const MemoryBank& bank,
                           const TemplateContext& tmpl, const PipelineConfig& cfg,
                           Warnings* warnings = nullptr);

// Feature extraction shared by fit and score: normals, patches, descriptor
// blocks, optional SIE fusion and filtering.  When `tmpl` is non-null the
// cloud is first registered onto it (falling back to identity with a warning
// if registration fails).
struct SampleFeatures {
    PointCloud registered;              // template frame, with normals
    std::vector<Point3> center_points;  // template frame, one per patch row
    FeatureMatrix center_fpfh;          // always computed (registration input)
    FeatureMatrix features;             // final per-patch matrix
    RigidTransform transform;           // applied registration
};

SampleFeatures extract_features(const PointCloud& cloud, const TemplateContext* tmpl,
                                const PipelineConfig& cfg, Warnings* warnings = nullptr);

}  // namespace ismp

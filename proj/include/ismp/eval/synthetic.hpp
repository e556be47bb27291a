#pragma once

#include <cstdint>
#include <string>

#include "ismp/eval/eval.hpp"

namespace ismp {

enum class BaseShape { Sphere, Box, Torus };
enum class AnomalyKind { None, Bulge, Dent, Blob, Crop };

struct SynthConfig {
    BaseShape base_shape = BaseShape::Sphere;
    std::size_t n_points = 4096;
    AnomalyKind anomaly = AnomalyKind::None;
    double amplitude = 0.1;        // fraction of the clean bbox diagonal
    double region_fraction = 0.1;  // anomaly region radius, same unit
    std::uint64_t rng_seed = 1;
};

BaseShape base_shape_from_name(const std::string& name);
AnomalyKind anomaly_from_name(const std::string& name);
const char* base_shape_name(BaseShape s);
const char* anomaly_name(AnomalyKind a);

// Deterministic surface sample with an optional local defect.  Bulge/dent
// displace a raised-cosine region along the surface normal, blob plants an
// offset cluster, crop removes a region and labels its boundary ring.  Points
// receive label 1 when materially affected; labels are all zero (object
// normal) when the anomaly displaces nothing.
LabeledSample generate_synthetic(const SynthConfig& cfg);

}  // namespace ismp

#pragma once

#include <iosfwd>
#include <string>

#include "ismp/geometry/cloud.hpp"

namespace ismp {

enum class CloudFormat { XyzText, PlyAscii };

// Picks XyzText for .xyz/.txt and PlyAscii for .ply.
CloudFormat format_from_path(const std::string& path);

// xyz-text: one "x y z" triple per whitespace-separated line, '#' comments
// allowed. ply-ascii: a narrow subset with a single float x/y/z vertex
// element; anything else is a ParseError. Both reject non-finite values.
PointCloud load_cloud(const std::string& path, CloudFormat format);
PointCloud load_cloud(const std::string& path);

void save_cloud_xyz(const PointCloud& cloud, const std::string& path);
void write_xyz(const PointCloud& cloud, std::ostream& out);

// Fixed text rendering used by every writer (9 significant digits).
std::string format_value(double v);

}  // namespace ismp

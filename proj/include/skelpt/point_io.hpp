#pragma once

#include "skelpt/common.hpp"

#include <filesystem>

namespace skelpt {

// Readers accept the vertex subset of each format: OBJ "v x y z" lines,
// ascii PLY with x/y/z vertex properties, and whitespace-delimited XYZ text.

PointCloud read_obj(const std::filesystem::path& path);
PointCloud read_ply(const std::filesystem::path& path);
PointCloud read_xyz(const std::filesystem::path& path);

/// Dispatches on the file extension (.obj, .ply, anything else as xyz).
PointCloud read_point_file(const std::filesystem::path& path);

void write_obj(const std::filesystem::path& path, const PointCloud& cloud);
void write_ply(const std::filesystem::path& path, const PointCloud& cloud);
void write_xyz(const std::filesystem::path& path, const PointCloud& cloud);

}  // namespace skelpt

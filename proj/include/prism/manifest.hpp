#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "prism/error.hpp"

namespace prism {

struct ManifestEntry {
    std::string entity_id;
    int view = 1; // 1 or 2
    std::string image_path;
};

// One entity's images within one view, in manifest order.
struct EntityGroup {
    std::string entity_id;
    std::vector<size_t> entry_indices;
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;
    std::vector<EntityGroup> groups[2];  // index 0 = view 1, index 1 = view 2
    int view_width[2] = {0, 0};          // 0 until a raster entry fixes it
    int view_height[2] = {0, 0};

    const std::vector<EntityGroup>& view_groups(int view) const { return groups[view - 1]; }
};

// Tab-separated UTF-8 text, one record per line: entity_id, view (1|2), path.
// Relative paths are resolved against the manifest's directory. Raster images
// (.pgm/.ppm) within one view must share a resolution; entries may instead
// reference pre-extracted feature files (see features.hpp), which are exempt
// from the resolution check.
DatasetManifest load_manifest(const std::filesystem::path& path);

} // namespace prism

#include "prism/manifest.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "prism/features.hpp"
#include "prism/image.hpp"

namespace prism {

DatasetManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw MissingFile("cannot open manifest: " + path.string());
    std::filesystem::path base = path.parent_path();

    DatasetManifest m;
    std::map<std::pair<int, std::string>, size_t> group_of; // (view, id) -> group index
    std::string line;
    size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string id, view_s, rel;
        if (!std::getline(ls, id, '\t') || !std::getline(ls, view_s, '\t') ||
            !std::getline(ls, rel, '\t') || id.empty() || rel.empty())
            throw ParseError(path.string() + ":" + std::to_string(lineno) +
                             ": expected 'entity_id<TAB>view<TAB>path'");
        if (view_s != "1" && view_s != "2")
            throw ParseError(path.string() + ":" + std::to_string(lineno) +
                             ": view must be 1 or 2, got '" + view_s + "'");
        ManifestEntry e;
        e.entity_id = id;
        e.view = (view_s == "1") ? 1 : 2;
        std::filesystem::path p(rel);
        e.image_path = (p.is_absolute() ? p : base / p).string();

        size_t idx = m.entries.size();
        m.entries.push_back(e);
        auto key = std::make_pair(e.view, e.entity_id);
        auto it = group_of.find(key);
        auto& groups = m.groups[e.view - 1];
        if (it == group_of.end()) {
            group_of.emplace(key, groups.size());
            groups.push_back(EntityGroup{e.entity_id, {idx}});
        } else {
            groups[it->second].entry_indices.push_back(idx);
        }
    }
    if (m.entries.empty()) return m;

    // Validate that raster entries exist and share per-view resolutions.
    // Feature-matrix entries only need to exist; their grids are checked at
    // encode time.
    for (const auto& e : m.entries) {
        if (is_feature_matrix_file(e.image_path)) {
            if (!std::filesystem::exists(e.image_path))
                throw MissingFile("missing feature file: " + e.image_path);
            continue;
        }
        PnmHeader h = read_pnm_header_file(e.image_path);
        int v = e.view - 1;
        if (m.view_width[v] == 0) {
            m.view_width[v] = h.width;
            m.view_height[v] = h.height;
        } else if (h.width != m.view_width[v] || h.height != m.view_height[v]) {
            throw ResolutionMismatch(
                "view " + std::to_string(e.view) + " mixes " +
                std::to_string(m.view_width[v]) + "x" + std::to_string(m.view_height[v]) +
                " and " + std::to_string(h.width) + "x" + std::to_string(h.height) + " (" +
                e.image_path + ")");
        }
    }
    return m;
}

} // namespace prism

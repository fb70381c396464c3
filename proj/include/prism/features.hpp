#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "prism/image.hpp"
#include "prism/parallel.hpp"

namespace prism {

// Dense per-patch features of one image on a regular stride grid,
// grid_rows x grid_cols patches in row-major order.
struct PatchFeatureSet {
    uint32_t dim = 0;
    int grid_rows = 0;
    int grid_cols = 0;
    std::vector<float> values;                            // count*dim, row-major
    std::vector<std::pair<uint16_t, uint16_t>> centers;   // (row, col) per patch

    size_t count() const { return centers.size(); }
    std::span<const float> feature(size_t i) const {
        return {values.data() + i * dim, dim};
    }
};

// Patch descriptors are pluggable so externally computed features can stand in
// for the built-in one.
class FeatureExtractor {
public:
    virtual ~FeatureExtractor() = default;
    virtual uint32_t dim(int channels) const = 0;
    virtual PatchFeatureSet extract(const RasterImage& img, int patch_size, int stride,
                                    Execution exec = Execution::Parallel) const = 0;
};

// Per-channel mean and variance plus an 8-bin gradient-orientation histogram
// over the patch interior (D = 2*channels + 8). Gradients use central
// differences of the channel-mean intensity; bins are magnitude-weighted and
// cover [0, 2pi) in pi/4 steps.
class MeanVarGradExtractor final : public FeatureExtractor {
public:
    uint32_t dim(int channels) const override { return 2 * channels + 8; }
    PatchFeatureSet extract(const RasterImage& img, int patch_size, int stride,
                            Execution exec = Execution::Parallel) const override;
};

// Convenience wrapper used by the pipeline.
PatchFeatureSet extract_patch_features(const RasterImage& img, int patch_size, int stride,
                                       Execution exec = Execution::Parallel);

// "PRFT" feature-matrix file: magic, u32 count, u32 dim, count*dim f32,
// count x (u16 row, u16 col). Centers must form a full row-major grid.
void save_feature_matrix(const std::filesystem::path& path, const PatchFeatureSet& f);
PatchFeatureSet load_feature_matrix(const std::filesystem::path& path);
bool is_feature_matrix_file(const std::filesystem::path& path); // by extension ".prft"

} // namespace prism

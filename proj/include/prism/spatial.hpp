#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "prism/codebook.hpp"
#include "prism/parallel.hpp"

namespace prism {

enum class KernelKind { TruncatedGaussian, TruncatedLinear, Box };

// Spatial kernel over chessboard grid distance. All three kinds map distance
// d >= 0 into [0,1] and are non-increasing in d, which is what lets the
// activation maps be built from distance transforms.
struct KernelSpec {
    KernelKind kind = KernelKind::Box;
    double sigma = 3.0;
    double alpha = 6.0; // truncation radius, TruncatedGaussian only

    static KernelSpec truncated_gaussian(double sigma, double alpha) {
        return {KernelKind::TruncatedGaussian, sigma, alpha};
    }
    static KernelSpec truncated_linear(double sigma) {
        return {KernelKind::TruncatedLinear, sigma, 0.0};
    }
    static KernelSpec box(double sigma) { return {KernelKind::Box, sigma, 0.0}; }
};

double kappa(const KernelSpec& spec, double d);

KernelKind kernel_kind_from_name(const std::string& name); // tgauss | tlinear | box
std::string kernel_kind_name(KernelKind kind);

// Distance value standing in for "no support anywhere".
inline constexpr int32_t kDistInf = INT32_MAX / 2;

// Exact chessboard (Chebyshev) distance to the nearest support cell, via the
// classic two-pass chamfer sweep. Empty support yields kDistInf everywhere,
// which every kernel maps to 0.
std::vector<int32_t> distance_transform(const std::vector<GridLoc>& support, int rows,
                                        int cols);

// Per-codeword soft presence of one entity in one view: for each codeword u
// and grid cell h, the kernel value of the nearest u-cell, averaged over the
// entity's images. Codewords absent from every image keep an empty grid
// (identically zero).
struct ActivationMap {
    std::string entity_id;
    int view = 1;
    uint32_t k = 0;
    int rows = 0;
    int cols = 0;
    std::vector<std::vector<float>> grids; // k entries; empty vector == all-zero

    size_t cell_count() const { return static_cast<size_t>(rows) * cols; }
    float value(uint32_t u, int r, int c) const {
        const auto& g = grids[u];
        return g.empty() ? 0.0f : g[static_cast<size_t>(r) * cols + c];
    }
};

ActivationMap activation_map(const std::vector<CodewordImage>& images, const KernelSpec& spec,
                             Execution exec = Execution::Parallel);

// "PRAM" cache file: magic, id, u8 view, u32 K, u32 H, u32 W, then K*H*W f32
// in codeword-major row-major order with zero runs collapsed as
// { u32 zero_run, u32 nonzero_count, f32 values[nonzero_count] } records.
void save_activation_map(const std::filesystem::path& path, const ActivationMap& am);
std::string serialize_activation_map(const ActivationMap& am);
ActivationMap load_activation_map(const std::filesystem::path& path);

} // namespace prism

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "prism/features.hpp"
#include "prism/parallel.hpp"

namespace prism {

struct Codebook {
    int view = 1;
    uint32_t k = 0;
    uint32_t dim = 0;
    std::vector<float> centroids; // k*dim, row-major

    std::span<const float> centroid(uint32_t i) const {
        return {centroids.data() + static_cast<size_t>(i) * dim, dim};
    }
};

struct KMeansResult {
    Codebook codebook;
    double inertia = 0.0;                // final sum of squared distances
    std::vector<double> inertia_trace;   // one value per Lloyd iteration
    int iterations = 0;
};

// Location on the patch-center grid.
struct GridLoc {
    int row = 0;
    int col = 0;
    bool operator==(const GridLoc&) const = default;
};

struct CodewordImage {
    std::string entity_id;
    int view = 1;
    uint32_t k = 0;
    int rows = 0;
    int cols = 0;
    std::vector<uint32_t> grid; // rows*cols codeword indices, row-major

    uint32_t at(int r, int c) const { return grid[static_cast<size_t>(r) * cols + c]; }
    uint32_t& at(int r, int c) { return grid[static_cast<size_t>(r) * cols + c]; }
};

// Lloyd's algorithm with k-means++ seeding. Stops after max_iters or when the
// largest centroid movement falls below tol; clusters that empty out are
// re-seeded from the point farthest from its assigned centroid. Deterministic
// for a given seed, in Serial and Parallel mode alike.
KMeansResult train_codebook(const std::vector<float>& samples, uint32_t dim, uint32_t k,
                            uint64_t seed, int max_iters = 100, double tol = 1e-4,
                            int view = 1, Execution exec = Execution::Parallel);

// Nearest centroid by Euclidean distance, ties to the lowest index.
CodewordImage encode_image(const PatchFeatureSet& features, const Codebook& cb,
                           const std::string& entity_id = {},
                           Execution exec = Execution::Parallel);

// All grid locations whose codeword equals u (may be empty).
std::vector<GridLoc> codeword_support(const CodewordImage& ci, uint32_t u);

// "PRCB" file: magic, u8 view, u32 K, u32 D, K*D f32.
void save_codebook(const std::filesystem::path& path, const Codebook& cb);
Codebook load_codebook(const std::filesystem::path& path);

} // namespace prism

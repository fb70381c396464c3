#include "prism/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "prism/io.hpp"

namespace prism {

PatchFeatureSet MeanVarGradExtractor::extract(const RasterImage& img, int patch_size,
                                              int stride, Execution exec) const {
    if (patch_size <= 0 || patch_size % 2 == 0)
        throw DataError("patch size must be odd and positive");
    if (stride <= 0) throw DataError("stride must be positive");
    if (patch_size > std::min(img.width, img.height))
        throw PatchTooLarge("patch " + std::to_string(patch_size) + " exceeds image " +
                            std::to_string(img.width) + "x" + std::to_string(img.height));

    const int half = patch_size / 2;
    const int ch = img.channels;
    const uint32_t d = dim(ch);

    PatchFeatureSet out;
    out.dim = d;
    out.grid_rows = (img.height - patch_size) / stride + 1;
    out.grid_cols = (img.width - patch_size) / stride + 1;
    const size_t n = static_cast<size_t>(out.grid_rows) * out.grid_cols;
    out.values.resize(n * d);
    out.centers.resize(n);

    const double inv_area = 1.0 / (static_cast<double>(patch_size) * patch_size);
    constexpr double two_pi = 6.283185307179586476925286766559;

#pragma omp parallel for schedule(static) if (exec == Execution::Parallel)
    for (long long gi = 0; gi < static_cast<long long>(n); ++gi) {
        const int gr = static_cast<int>(gi) / out.grid_cols;
        const int gc = static_cast<int>(gi) % out.grid_cols;
        const int cr = half + gr * stride;
        const int cc = half + gc * stride;
        out.centers[gi] = {static_cast<uint16_t>(cr), static_cast<uint16_t>(cc)};
        float* f = out.values.data() + gi * d;

        // per-channel mean and population variance over the whole patch
        for (int c = 0; c < ch; ++c) {
            double sum = 0.0, sum2 = 0.0;
            for (int r = cr - half; r <= cr + half; ++r)
                for (int col = cc - half; col <= cc + half; ++col) {
                    double v = img.at(r, col, c);
                    sum += v;
                    sum2 += v * v;
                }
            double mean = sum * inv_area;
            double var = sum2 * inv_area - mean * mean;
            f[2 * c] = static_cast<float>(mean);
            f[2 * c + 1] = static_cast<float>(std::max(0.0, var));
        }

        // magnitude-weighted orientation histogram at the patch interior,
        // using channel-mean intensity so gradients never read outside the patch
        double hist[8] = {};
        for (int r = cr - half + 1; r <= cr + half - 1; ++r) {
            for (int col = cc - half + 1; col <= cc + half - 1; ++col) {
                double gx = 0.0, gy = 0.0;
                for (int c = 0; c < ch; ++c) {
                    gx += static_cast<double>(img.at(r, col + 1, c)) - img.at(r, col - 1, c);
                    gy += static_cast<double>(img.at(r + 1, col, c)) - img.at(r - 1, col, c);
                }
                gx /= 2.0 * ch;
                gy /= 2.0 * ch;
                double mag = std::sqrt(gx * gx + gy * gy);
                if (mag == 0.0) continue;
                double ang = std::atan2(gy, gx);
                if (ang < 0.0) ang += two_pi;
                int bin = static_cast<int>(ang / (two_pi / 8));
                if (bin >= 8) bin = 0; // atan2 rounding at 2pi
                hist[bin] += mag;
            }
        }
        for (int b = 0; b < 8; ++b) f[2 * ch + b] = static_cast<float>(hist[b]);
    }
    return out;
}

PatchFeatureSet extract_patch_features(const RasterImage& img, int patch_size, int stride,
                                       Execution exec) {
    static const MeanVarGradExtractor baseline;
    return baseline.extract(img, patch_size, stride, exec);
}

void save_feature_matrix(const std::filesystem::path& path, const PatchFeatureSet& f) {
    std::ostringstream os(std::ios::binary);
    io::write_magic(os, "PRFT");
    io::write_u32(os, static_cast<uint32_t>(f.count()));
    io::write_u32(os, f.dim);
    for (float v : f.values) io::write_f32(os, v);
    for (auto [r, c] : f.centers) {
        io::write_u16(os, r);
        io::write_u16(os, c);
    }
    io::atomic_write_file(path, os.str());
}

PatchFeatureSet load_feature_matrix(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw MissingFile("cannot open feature file: " + path.string());
    io::expect_magic(is, "PRFT", "feature matrix");
    PatchFeatureSet f;
    uint32_t count = io::read_u32(is);
    f.dim = io::read_u32(is);
    if (f.dim == 0) throw ParseError(path.string() + ": zero feature dimension");
    f.values.resize(static_cast<size_t>(count) * f.dim);
    for (auto& v : f.values) v = io::read_f32(is);
    f.centers.resize(count);
    std::set<uint16_t> rows, cols;
    for (auto& [r, c] : f.centers) {
        r = io::read_u16(is);
        c = io::read_u16(is);
        rows.insert(r);
        cols.insert(c);
    }
    f.grid_rows = static_cast<int>(rows.size());
    f.grid_cols = static_cast<int>(cols.size());
    if (static_cast<size_t>(f.grid_rows) * f.grid_cols != count)
        throw ParseError(path.string() + ": patch centers do not form a full grid");
    // row-major order over the grid is part of the format
    size_t i = 0;
    for (uint16_t r : rows)
        for (uint16_t c : cols) {
            if (f.centers[i] != std::make_pair(r, c))
                throw ParseError(path.string() + ": centers not in row-major grid order");
            ++i;
        }
    return f;
}

bool is_feature_matrix_file(const std::filesystem::path& path) {
    return path.extension() == ".prft";
}

} // namespace prism

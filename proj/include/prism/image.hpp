#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <vector>

#include "prism/error.hpp"

namespace prism {

// 8-bit raster, row-major, interleaved channels (1 = gray, 3 = RGB).
struct RasterImage {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<uint8_t> pixels;

    uint8_t at(int row, int col, int c = 0) const {
        return pixels[(static_cast<size_t>(row) * width + col) * channels + c];
    }
    uint8_t& at(int row, int col, int c = 0) {
        return pixels[(static_cast<size_t>(row) * width + col) * channels + c];
    }
};

struct PnmHeader {
    int width = 0;
    int height = 0;
    int channels = 0; // 1 for P5, 3 for P6
};

// Binary PGM (P5) and PPM (P6) only, maxval <= 255.
PnmHeader read_pnm_header(std::istream& is, const std::string& what);
RasterImage read_pnm(std::istream& is, const std::string& what);
RasterImage read_pnm_file(const std::filesystem::path& path);
PnmHeader read_pnm_header_file(const std::filesystem::path& path);

void write_pnm(std::ostream& os, const RasterImage& img);
void write_pnm_file(const std::filesystem::path& path, const RasterImage& img);

} // namespace prism

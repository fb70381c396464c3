#include "prism/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "prism/error.hpp"
#include "prism/io.hpp"

namespace prism {

double kappa(const KernelSpec& spec, double d) {
    switch (spec.kind) {
        case KernelKind::TruncatedGaussian:
            return d <= spec.alpha ? std::exp(-d / spec.sigma) : 0.0;
        case KernelKind::TruncatedLinear:
            return std::max(0.0, 1.0 - d / spec.sigma);
        case KernelKind::Box:
            return d <= spec.sigma ? 1.0 : 0.0;
    }
    return 0.0;
}

KernelKind kernel_kind_from_name(const std::string& name) {
    if (name == "tgauss") return KernelKind::TruncatedGaussian;
    if (name == "tlinear") return KernelKind::TruncatedLinear;
    if (name == "box") return KernelKind::Box;
    throw DataError("unknown kernel '" + name + "' (expected tgauss|tlinear|box)");
}

std::string kernel_kind_name(KernelKind kind) {
    switch (kind) {
        case KernelKind::TruncatedGaussian: return "tgauss";
        case KernelKind::TruncatedLinear: return "tlinear";
        case KernelKind::Box: return "box";
    }
    return "?";
}

std::vector<int32_t> distance_transform(const std::vector<GridLoc>& support, int rows,
                                        int cols) {
    if (rows <= 0 || cols <= 0) throw DataError("distance_transform: non-positive dims");
    std::vector<int32_t> d(static_cast<size_t>(rows) * cols, kDistInf);
    for (const auto& loc : support) d[static_cast<size_t>(loc.row) * cols + loc.col] = 0;
    if (support.empty()) return d;

    auto at = [&](int r, int c) -> int32_t& { return d[static_cast<size_t>(r) * cols + c]; };

    // forward: up, left, up-left, up-right
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            int32_t v = at(r, c);
            if (r > 0) v = std::min(v, at(r - 1, c) + 1);
            if (c > 0) v = std::min(v, at(r, c - 1) + 1);
            if (r > 0 && c > 0) v = std::min(v, at(r - 1, c - 1) + 1);
            if (r > 0 && c + 1 < cols) v = std::min(v, at(r - 1, c + 1) + 1);
            at(r, c) = v;
        }
    // backward: down, right, down-right, down-left
    for (int r = rows - 1; r >= 0; --r)
        for (int c = cols - 1; c >= 0; --c) {
            int32_t v = at(r, c);
            if (r + 1 < rows) v = std::min(v, at(r + 1, c) + 1);
            if (c + 1 < cols) v = std::min(v, at(r, c + 1) + 1);
            if (r + 1 < rows && c + 1 < cols) v = std::min(v, at(r + 1, c + 1) + 1);
            if (r + 1 < rows && c > 0) v = std::min(v, at(r + 1, c - 1) + 1);
            at(r, c) = v;
        }
    return d;
}

ActivationMap activation_map(const std::vector<CodewordImage>& images, const KernelSpec& spec,
                             Execution exec) {
    if (images.empty()) throw EmptyEntity("activation_map: entity has no images");
    const auto& first = images.front();
    for (const auto& im : images)
        if (im.rows != first.rows || im.cols != first.cols || im.k != first.k)
            throw DimensionMismatch("activation_map: images disagree on grid or K");

    ActivationMap am;
    am.entity_id = first.entity_id;
    am.view = first.view;
    am.k = first.k;
    am.rows = first.rows;
    am.cols = first.cols;
    am.grids.resize(am.k);

    const size_t cells = am.cell_count();
    const int m = static_cast<int>(images.size());

    // Support lists per image, gathered once so the per-codeword loop below
    // stays read-only over shared state.
    std::vector<std::vector<std::vector<GridLoc>>> supports(m);
    for (int i = 0; i < m; ++i) {
        supports[i].resize(am.k);
        const auto& im = images[i];
        for (int r = 0; r < im.rows; ++r)
            for (int c = 0; c < im.cols; ++c)
                supports[i][im.at(r, c)].push_back({r, c});
    }

#pragma omp parallel for schedule(dynamic) if (exec == Execution::Parallel)
    for (long long u = 0; u < static_cast<long long>(am.k); ++u) {
        bool present = false;
        for (int i = 0; i < m; ++i)
            if (!supports[i][u].empty()) present = true;
        if (!present) continue; // grid stays empty == all-zero

        // Incremental mean over images; exact when the per-image grids agree.
        std::vector<double> mean(cells, 0.0);
        for (int i = 0; i < m; ++i) {
            const auto& sup = supports[i][u];
            if (sup.empty()) {
                // max over an empty support is 0
                for (size_t h = 0; h < cells; ++h) mean[h] += (0.0 - mean[h]) / (i + 1);
                continue;
            }
            std::vector<int32_t> dt = distance_transform(sup, am.rows, am.cols);
            for (size_t h = 0; h < cells; ++h) {
                double v = kappa(spec, static_cast<double>(dt[h]));
                mean[h] += (v - mean[h]) / (i + 1);
            }
        }
        auto& g = am.grids[u];
        g.resize(cells);
        for (size_t h = 0; h < cells; ++h) g[h] = static_cast<float>(mean[h]);
    }
    return am;
}

std::string serialize_activation_map(const ActivationMap& am) {
    std::ostringstream os(std::ios::binary);
    io::write_magic(os, "PRAM");
    io::write_string(os, am.entity_id);
    io::write_u8(os, static_cast<uint8_t>(am.view));
    io::write_u32(os, am.k);
    io::write_u32(os, static_cast<uint32_t>(am.rows));
    io::write_u32(os, static_cast<uint32_t>(am.cols));

    // flatten k*rows*cols with zero-run records
    const size_t cells = am.cell_count();
    const size_t total = static_cast<size_t>(am.k) * cells;
    auto value_at = [&](size_t flat) -> float {
        uint32_t u = static_cast<uint32_t>(flat / cells);
        size_t h = flat % cells;
        const auto& g = am.grids[u];
        return g.empty() ? 0.0f : g[h];
    };
    size_t pos = 0;
    while (pos < total) {
        size_t zrun = 0;
        while (pos + zrun < total && value_at(pos + zrun) == 0.0f) ++zrun;
        pos += zrun;
        size_t nz = 0;
        while (pos + nz < total && value_at(pos + nz) != 0.0f) ++nz;
        io::write_u32(os, static_cast<uint32_t>(zrun));
        io::write_u32(os, static_cast<uint32_t>(nz));
        for (size_t i = 0; i < nz; ++i) io::write_f32(os, value_at(pos + i));
        pos += nz;
    }
    return os.str();
}

void save_activation_map(const std::filesystem::path& path, const ActivationMap& am) {
    io::atomic_write_file(path, serialize_activation_map(am));
}

ActivationMap load_activation_map(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw MissingFile("cannot open activation map: " + path.string());
    io::expect_magic(is, "PRAM", "activation map");
    ActivationMap am;
    am.entity_id = io::read_string(is);
    am.view = io::read_u8(is);
    am.k = io::read_u32(is);
    am.rows = static_cast<int>(io::read_u32(is));
    am.cols = static_cast<int>(io::read_u32(is));
    am.grids.resize(am.k);
    const size_t cells = am.cell_count();
    const size_t total = static_cast<size_t>(am.k) * cells;
    std::vector<float> flat(total, 0.0f);
    size_t pos = 0;
    while (pos < total) {
        uint32_t zrun = io::read_u32(is);
        uint32_t nz = io::read_u32(is);
        if (pos + zrun + nz > total) throw ParseError(path.string() + ": run overflows grid");
        pos += zrun;
        for (uint32_t i = 0; i < nz; ++i) flat[pos + i] = io::read_f32(is);
        pos += nz;
    }
    for (uint32_t u = 0; u < am.k; ++u) {
        auto begin = flat.begin() + static_cast<std::ptrdiff_t>(u * cells);
        auto end = begin + static_cast<std::ptrdiff_t>(cells);
        if (std::any_of(begin, end, [](float v) { return v != 0.0f; }))
            am.grids[u].assign(begin, end);
    }
    return am;
}

} // namespace prism

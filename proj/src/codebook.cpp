#include "prism/codebook.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "prism/error.hpp"
#include "prism/io.hpp"

namespace prism {

namespace {

double sq_dist(const float* a, const float* b, uint32_t dim) {
    double s = 0.0;
    for (uint32_t i = 0; i < dim; ++i) {
        double d = static_cast<double>(a[i]) - b[i];
        s += d * d;
    }
    return s;
}

// Nearest centroid, ties broken by lowest index.
void assign_all(const std::vector<float>& pts, size_t n, uint32_t dim,
                const std::vector<double>& centers, uint32_t k,
                std::vector<uint32_t>& assign, std::vector<double>& best_d, Execution exec) {
#pragma omp parallel for schedule(static) if (exec == Execution::Parallel)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
        const float* p = pts.data() + i * dim;
        double best = std::numeric_limits<double>::infinity();
        uint32_t arg = 0;
        for (uint32_t c = 0; c < k; ++c) {
            const double* ctr = centers.data() + static_cast<size_t>(c) * dim;
            double s = 0.0;
            for (uint32_t j = 0; j < dim; ++j) {
                double d = static_cast<double>(p[j]) - ctr[j];
                s += d * d;
            }
            if (s < best) {
                best = s;
                arg = c;
            }
        }
        assign[i] = arg;
        best_d[i] = best;
    }
}

} // namespace

KMeansResult train_codebook(const std::vector<float>& samples, uint32_t dim, uint32_t k,
                            uint64_t seed, int max_iters, double tol, int view,
                            Execution exec) {
    if (dim == 0) throw DataError("k-means: zero dimension");
    if (k == 0) throw DataError("k-means: K must be positive");
    const size_t n = samples.size() / dim;
    if (samples.size() != n * dim) throw DimensionMismatch("k-means: sample buffer not a multiple of dim");
    if (n < k)
        throw TooFewSamples("k-means: " + std::to_string(n) + " samples for K=" +
                            std::to_string(k));
    for (float v : samples)
        if (!std::isfinite(v)) throw NonFiniteScore("k-means: non-finite sample value");

    std::mt19937_64 rng(seed);
    std::vector<double> centers(static_cast<size_t>(k) * dim);

    // k-means++ seeding
    {
        std::uniform_int_distribution<size_t> uni(0, n - 1);
        size_t first = uni(rng);
        for (uint32_t j = 0; j < dim; ++j) centers[j] = samples[first * dim + j];
        std::vector<double> d2(n);
        for (size_t i = 0; i < n; ++i)
            d2[i] = sq_dist(samples.data() + i * dim, samples.data() + first * dim, dim);
        for (uint32_t c = 1; c < k; ++c) {
            double total = 0.0;
            for (double v : d2) total += v;
            size_t pick;
            if (total <= 0.0) {
                pick = uni(rng); // all remaining points coincide with chosen centers
            } else {
                std::uniform_real_distribution<double> ud(0.0, total);
                double target = ud(rng);
                double run = 0.0;
                pick = n - 1;
                for (size_t i = 0; i < n; ++i) {
                    run += d2[i];
                    if (run >= target) {
                        pick = i;
                        break;
                    }
                }
            }
            double* ctr = centers.data() + static_cast<size_t>(c) * dim;
            for (uint32_t j = 0; j < dim; ++j) ctr[j] = samples[pick * dim + j];
            for (size_t i = 0; i < n; ++i) {
                double nd = sq_dist(samples.data() + i * dim, samples.data() + pick * dim, dim);
                if (nd < d2[i]) d2[i] = nd;
            }
        }
    }

    KMeansResult res;
    std::vector<uint32_t> assign(n);
    std::vector<double> best_d(n);
    std::vector<double> sums(static_cast<size_t>(k) * dim);
    std::vector<size_t> counts(k);

    for (int iter = 0; iter < max_iters; ++iter) {
        assign_all(samples, n, dim, centers, k, assign, best_d, exec);

        double inertia = 0.0;
        for (double v : best_d) inertia += v;
        res.inertia_trace.push_back(inertia);
        res.inertia = inertia;
        res.iterations = iter + 1;

        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (size_t i = 0; i < n; ++i) {
            double* s = sums.data() + static_cast<size_t>(assign[i]) * dim;
            const float* p = samples.data() + i * dim;
            for (uint32_t j = 0; j < dim; ++j) s[j] += p[j];
            ++counts[assign[i]];
        }

        double max_move = 0.0;
        for (uint32_t c = 0; c < k; ++c) {
            double* ctr = centers.data() + static_cast<size_t>(c) * dim;
            if (counts[c] == 0) {
                // re-seed from the point farthest from its centroid
                size_t far = 0;
                for (size_t i = 1; i < n; ++i)
                    if (best_d[i] > best_d[far]) far = i;
                for (uint32_t j = 0; j < dim; ++j) ctr[j] = samples[far * dim + j];
                best_d[far] = 0.0;
                max_move = std::numeric_limits<double>::infinity();
                continue;
            }
            double move = 0.0;
            for (uint32_t j = 0; j < dim; ++j) {
                double nc = sums[static_cast<size_t>(c) * dim + j] / counts[c];
                double d = nc - ctr[j];
                move += d * d;
                ctr[j] = nc;
            }
            max_move = std::max(max_move, std::sqrt(move));
        }
        if (max_move < tol) break;
    }

    res.codebook.view = view;
    res.codebook.k = k;
    res.codebook.dim = dim;
    res.codebook.centroids.resize(centers.size());
    for (size_t i = 0; i < centers.size(); ++i)
        res.codebook.centroids[i] = static_cast<float>(centers[i]);
    return res;
}

CodewordImage encode_image(const PatchFeatureSet& features, const Codebook& cb,
                           const std::string& entity_id, Execution exec) {
    if (features.dim != cb.dim)
        throw DimensionMismatch("encode: feature dim " + std::to_string(features.dim) +
                                " vs codebook dim " + std::to_string(cb.dim));
    CodewordImage ci;
    ci.entity_id = entity_id;
    ci.view = cb.view;
    ci.k = cb.k;
    ci.rows = features.grid_rows;
    ci.cols = features.grid_cols;
    const size_t n = features.count();
    ci.grid.resize(n);

#pragma omp parallel for schedule(static) if (exec == Execution::Parallel)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
        const float* p = features.values.data() + i * features.dim;
        double best = std::numeric_limits<double>::infinity();
        uint32_t arg = 0;
        for (uint32_t c = 0; c < cb.k; ++c) {
            const float* ctr = cb.centroids.data() + static_cast<size_t>(c) * cb.dim;
            double s = 0.0;
            for (uint32_t j = 0; j < cb.dim; ++j) {
                double d = static_cast<double>(p[j]) - ctr[j];
                s += d * d;
            }
            if (s < best) { // strict: ties keep the lowest index
                best = s;
                arg = c;
            }
        }
        ci.grid[i] = arg;
    }
    return ci;
}

std::vector<GridLoc> codeword_support(const CodewordImage& ci, uint32_t u) {
    if (u >= ci.k) throw IndexOutOfRange("codeword_support: index " + std::to_string(u) +
                                         " >= K=" + std::to_string(ci.k));
    std::vector<GridLoc> locs;
    for (int r = 0; r < ci.rows; ++r)
        for (int c = 0; c < ci.cols; ++c)
            if (ci.at(r, c) == u) locs.push_back({r, c});
    return locs;
}

void save_codebook(const std::filesystem::path& path, const Codebook& cb) {
    std::ostringstream os(std::ios::binary);
    io::write_magic(os, "PRCB");
    io::write_u8(os, static_cast<uint8_t>(cb.view));
    io::write_u32(os, cb.k);
    io::write_u32(os, cb.dim);
    for (float v : cb.centroids) io::write_f32(os, v);
    io::atomic_write_file(path, os.str());
}

Codebook load_codebook(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw MissingFile("cannot open codebook: " + path.string());
    io::expect_magic(is, "PRCB", "codebook");
    Codebook cb;
    cb.view = io::read_u8(is);
    cb.k = io::read_u32(is);
    cb.dim = io::read_u32(is);
    cb.centroids.resize(static_cast<size_t>(cb.k) * cb.dim);
    for (auto& v : cb.centroids) v = io::read_f32(is);
    return cb;
}

} // namespace prism

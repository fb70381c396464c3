#include "prism/pipeline.hpp"

#include <algorithm>
#include <random>
#include <sstream>

#include "prism/io.hpp"

namespace prism {

uint64_t PipelineConfig::content_hash() const {
    std::ostringstream os;
    os << codebook_size << '|' << share_codebook << '|' << kernel_kind_name(kernel.kind) << '|'
       << kernel.sigma << '|' << kernel.alpha << '|' << patch << '|' << stride << '|' << seed;
    return io::fnv1a_str(os.str());
}

PatchFeatureSet features_for_entry(const ManifestEntry& entry, const PipelineConfig& cfg) {
    if (is_feature_matrix_file(entry.image_path)) return load_feature_matrix(entry.image_path);
    RasterImage img = read_pnm_file(entry.image_path);
    return extract_patch_features(img, cfg.patch, cfg.stride, cfg.exec);
}

std::vector<float> sample_view_features(const DatasetManifest& m, int view,
                                        const PipelineConfig& cfg, uint32_t& dim_out) {
    std::vector<float> pool;
    uint32_t dim = 0;
    for (const auto& g : m.view_groups(view))
        for (size_t ei : g.entry_indices) {
            PatchFeatureSet f = features_for_entry(m.entries[ei], cfg);
            if (dim == 0)
                dim = f.dim;
            else if (dim != f.dim)
                throw DimensionMismatch("view " + std::to_string(view) +
                                        " mixes feature dimensions");
            pool.insert(pool.end(), f.values.begin(), f.values.end());
        }
    dim_out = dim;
    if (dim == 0) return pool;
    size_t n = pool.size() / dim;
    size_t want = static_cast<size_t>(cfg.sample_per_view);
    if (want == 0 || n <= want) return pool;

    // seeded subsample without replacement, stable in feature order
    std::mt19937_64 rng(cfg.seed ^ (0x517cc1b727220a95ull * view));
    std::vector<size_t> idx(n);
    for (size_t i = 0; i < n; ++i) idx[i] = i;
    for (size_t i = 0; i < want; ++i) {
        size_t j = std::uniform_int_distribution<size_t>(i, n - 1)(rng);
        std::swap(idx[i], idx[j]);
    }
    idx.resize(want);
    std::sort(idx.begin(), idx.end());
    std::vector<float> out;
    out.reserve(want * dim);
    for (size_t i : idx)
        out.insert(out.end(), pool.begin() + static_cast<std::ptrdiff_t>(i * dim),
                   pool.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim));
    return out;
}

KMeansResult train_view_codebook(const DatasetManifest& m, int view,
                                 const PipelineConfig& cfg) {
    uint32_t dim = 0;
    std::vector<float> samples;
    if (cfg.share_codebook) {
        samples = sample_view_features(m, 1, cfg, dim);
        uint32_t dim2 = 0;
        auto s2 = sample_view_features(m, 2, cfg, dim2);
        if (dim == 0) dim = dim2;
        if (dim2 != 0 && dim2 != dim)
            throw DimensionMismatch("shared codebook: views disagree on feature dim");
        samples.insert(samples.end(), s2.begin(), s2.end());
    } else {
        samples = sample_view_features(m, view, cfg, dim);
    }
    if (dim == 0) throw TooFewSamples("view " + std::to_string(view) + " has no features");
    return train_codebook(samples, dim, cfg.codebook_size,
                          cfg.share_codebook ? cfg.seed : cfg.seed + view, cfg.kmeans_iters,
                          cfg.kmeans_tol, view, cfg.exec);
}

ViewData encode_view(const DatasetManifest& m, int view, const Codebook& cb,
                     const PipelineConfig& cfg) {
    ViewData vd;
    for (const auto& g : m.view_groups(view)) {
        vd.ids.push_back(g.entity_id);
        std::vector<CodewordImage> images;
        for (size_t ei : g.entry_indices) {
            PatchFeatureSet f = features_for_entry(m.entries[ei], cfg);
            images.push_back(encode_image(f, cb, g.entity_id, cfg.exec));
        }
        vd.images.push_back(std::move(images));
    }
    return vd;
}

namespace {

uint64_t codeword_images_hash(const std::vector<CodewordImage>& images, uint64_t h) {
    for (const auto& im : images) {
        h = io::fnv1a_str(im.entity_id, h);
        uint32_t meta[4] = {static_cast<uint32_t>(im.view), im.k,
                            static_cast<uint32_t>(im.rows), static_cast<uint32_t>(im.cols)};
        h = io::fnv1a(meta, sizeof meta, h);
        h = io::fnv1a(im.grid.data(), im.grid.size() * sizeof(uint32_t), h);
    }
    return h;
}

std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

} // namespace

std::vector<ActivationMap> view_activation_maps(const ViewData& vd, const PipelineConfig& cfg) {
    namespace fs = std::filesystem;
    std::vector<ActivationMap> maps;
    maps.reserve(vd.images.size());
    for (const auto& images : vd.images) {
        if (cfg.cache_dir.empty()) {
            maps.push_back(activation_map(images, cfg.kernel, cfg.exec));
            continue;
        }
        uint64_t h = codeword_images_hash(images, cfg.content_hash());
        fs::path file = fs::path(cfg.cache_dir) / ("am_" + hex64(h) + ".pram");
        if (fs::exists(file)) {
            maps.push_back(load_activation_map(file));
        } else {
            maps.push_back(activation_map(images, cfg.kernel, cfg.exec));
            save_activation_map(file, maps.back());
        }
    }
    return maps;
}

PairDescriptors pair_descriptors_cached(const std::vector<ActivationMap>& probes,
                                        const std::vector<ActivationMap>& galleries,
                                        const PipelineConfig& cfg) {
    if (cfg.cache_dir.empty()) return build_pair_descriptors(probes, galleries, cfg.exec);
    namespace fs = std::filesystem;

    std::vector<uint64_t> ph(probes.size()), gh(galleries.size());
    for (size_t i = 0; i < probes.size(); ++i)
        ph[i] = io::fnv1a_str(serialize_activation_map(probes[i]), cfg.content_hash());
    for (size_t j = 0; j < galleries.size(); ++j)
        gh[j] = io::fnv1a_str(serialize_activation_map(galleries[j]), cfg.content_hash());

    PairDescriptors out;
    out.n1 = static_cast<int>(probes.size());
    out.n2 = static_cast<int>(galleries.size());
    if (out.n1 > 0) out.k1 = probes.front().k;
    if (out.n2 > 0) out.k2 = galleries.front().k;
    out.pairs.resize(static_cast<size_t>(out.n1) * out.n2);
    for (int i = 0; i < out.n1; ++i)
        for (int j = 0; j < out.n2; ++j) {
            uint64_t h = io::fnv1a(&gh[j], sizeof(uint64_t), ph[i]);
            fs::path file = fs::path(cfg.cache_dir) / ("co_" + hex64(h) + ".prco");
            auto& slot = out.pairs[static_cast<size_t>(i) * out.n2 + j];
            if (fs::exists(file)) {
                slot = load_descriptor(file);
            } else {
                slot = cooccurrence(probes[i], galleries[j], cfg.exec);
                // the cache stores f32 values; quantize up front so runs that
                // compute and runs that load see identical descriptors
                for (auto& v : slot.entries.val) v = static_cast<float>(v);
                save_descriptor(file, slot);
            }
        }
    return out;
}

SimilarityMatrix score_pairs(const PairDescriptors& pd, const SparseVec& w, Execution exec) {
    SimilarityMatrix s(pd.n1, pd.n2);
#pragma omp parallel for schedule(static) if (exec == Execution::Parallel)
    for (long long p = 0; p < static_cast<long long>(pd.pairs.size()); ++p)
        s.scores[p] = dot(w, pd.pairs[p].entries);
    return s;
}

MatchStructure truth_structure(const std::vector<std::string>& probe_ids,
                               const std::vector<std::string>& gallery_ids) {
    MatchStructure y(static_cast<int>(probe_ids.size()), static_cast<int>(gallery_ids.size()));
    for (int i = 0; i < y.n1; ++i)
        for (int j = 0; j < y.n2; ++j)
            if (probe_ids[i] == gallery_ids[j]) y.set(i, j, 1);
    return y;
}

} // namespace prism

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "prism/codebook.hpp"
#include "prism/cooccur.hpp"
#include "prism/learner.hpp"
#include "prism/manifest.hpp"
#include "prism/matcher.hpp"
#include "prism/spatial.hpp"

namespace prism {

struct PipelineConfig {
    uint32_t codebook_size = 500;
    bool share_codebook = false;
    KernelSpec kernel = KernelSpec::box(3.0);
    int patch = 5;
    int stride = 1;
    int sample_per_view = 30000;
    int kmeans_iters = 100;
    double kmeans_tol = 1e-4;
    double C = 100.0;
    int max_planes = 200;
    int warm_start = 20;
    double violation_tol = 1e-3;
    std::vector<int> ranks = {1, 5, 10, 15, 20, 25};
    uint64_t seed = 1;
    LpMode lp = LpMode::Exact();
    std::string cache_dir;
    int trials = 3;
    Execution exec = Execution::Parallel;

    uint64_t content_hash() const; // the cache key ingredient for this config
};

// One view of a dataset after encoding: entity ids in manifest order with
// their codeword images.
struct ViewData {
    std::vector<std::string> ids;
    std::vector<std::vector<CodewordImage>> images;
};

// Per-patch features for one manifest entry; dispatches on file type
// (raster image vs pre-extracted "PRFT" matrix).
PatchFeatureSet features_for_entry(const ManifestEntry& entry, const PipelineConfig& cfg);

// Pools features over a view and subsamples to cfg.sample_per_view.
std::vector<float> sample_view_features(const DatasetManifest& m, int view,
                                        const PipelineConfig& cfg, uint32_t& dim_out);

KMeansResult train_view_codebook(const DatasetManifest& m, int view,
                                 const PipelineConfig& cfg);

ViewData encode_view(const DatasetManifest& m, int view, const Codebook& cb,
                     const PipelineConfig& cfg);

// Activation maps per entity, using the cache directory when configured.
std::vector<ActivationMap> view_activation_maps(const ViewData& vd, const PipelineConfig& cfg);

// All pairwise descriptors, cached per pair when configured.
PairDescriptors pair_descriptors_cached(const std::vector<ActivationMap>& probes,
                                        const std::vector<ActivationMap>& galleries,
                                        const PipelineConfig& cfg);

SimilarityMatrix score_pairs(const PairDescriptors& pd, const SparseVec& w, Execution exec);

// y[i][j] = 1 iff probe and gallery entity ids match.
MatchStructure truth_structure(const std::vector<std::string>& probe_ids,
                               const std::vector<std::string>& gallery_ids);

} // namespace prism

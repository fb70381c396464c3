#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "prism/cooccur.hpp"
#include "prism/image.hpp"
#include "prism/matcher.hpp"
#include "prism/spatial.hpp"

namespace prism {

// rates[r-1] = fraction of probes whose true gallery appears in their rank-r
// selection or earlier; non-decreasing by construction.
struct CmcCurve {
    std::vector<double> rates;
    double rate(int r) const { return rates[r - 1]; }
};

// Per-probe gallery selections for one evaluated rank.
struct RankSelections {
    int rank = 0;
    std::vector<std::vector<int>> per_probe;
};

// truth[i] is the gallery index of probe i's match, or -1 when the probe has
// none. A probe scores at rank r if some evaluated rank <= r selects its true
// gallery; rates at unevaluated ranks carry forward from the last evaluated
// one.
CmcCurve cmc(const std::vector<RankSelections>& selections, const std::vector<int>& truth,
             int n2);

// Independent per-probe top-r galleries by score (descending, index
// ascending): the plain ranking baseline and the uniform-rank null model.
std::vector<std::vector<int>> topk_selection(const SimilarityMatrix& s, int r);

// Rank-r selections from structured matching with every probe degree r.
// Probes whose structured selection has fewer than r galleries (negative
// scores, capacity competition) are topped up with their best unselected
// galleries so each probe always ranks exactly min(r, N2) candidates.
std::vector<std::vector<int>> structured_selection(const SimilarityMatrix& s, int r,
                                                   LpMode mode = LpMode::Exact());

CmcCurve cmc_independent(const SimilarityMatrix& s, const std::vector<int>& truth);
CmcCurve cmc_structured(const SimilarityMatrix& s, const std::vector<int>& truth,
                        const std::vector<int>& ranks, LpMode mode = LpMode::Exact());

// Fraction of probes whose predicted row equals their truth: exactly the true
// gallery when one exists, empty when none does.
double matching_accuracy(const MatchStructure& predicted, const std::vector<int>& truth);

// --- synthetic data -------------------------------------------------------

// Every entity gets a random codeword layout; view-2 images see the layout
// through a planted codeword permutation (the cross-view appearance change),
// and each image adds toroidal spatial jitter plus noise-rate flips to a
// different codeword. Train and test entities share the permutation.
struct SyntheticSpec {
    int train_entities = 40;
    int test_entities = 40;
    int images_per_entity[2] = {2, 2}; // view 1, view 2
    int grid_rows = 16;
    int grid_cols = 8;
    uint32_t codewords = 16;
    int jitter = 1;     // max |shift| in cells, per image
    double noise = 0.1; // per-cell flip probability, in [0,1)
    uint64_t seed = 7;
};

struct SyntheticEntity {
    std::string id;
    std::vector<CodewordImage> views[2];
};

struct SyntheticDataset {
    std::vector<SyntheticEntity> train;
    std::vector<SyntheticEntity> test;
    std::vector<uint32_t> permutation; // view-1 codeword -> view-2 codeword
};

SyntheticDataset generate_synthetic(const SyntheticSpec& spec);

// truth[i] = position of probe i's id in gallery_ids, or -1.
std::vector<int> make_truth(const std::vector<std::string>& probe_ids,
                            const std::vector<std::string>& gallery_ids);

// Renders a codeword grid as flat gray cells (level = (c + 0.5) * 255 / K) so
// the raster pipeline can re-discover the codewords by clustering.
RasterImage render_codeword_image(const CodewordImage& ci, int cell_px);

// Writes rendered images plus train.tsv / test.tsv manifests; both views of
// an entity share its id, which is how ground truth travels with a manifest.
void write_synthetic_dataset(const SyntheticDataset& ds, const std::filesystem::path& dir,
                             int cell_px);

// --- benchmark harness ----------------------------------------------------

struct BenchReport {
    double storage_kb = 0.0; // serialized activation maps, per entity
    double t1_ms = 0.0;      // activation-map build, per entity
    double t2_ms = 0.0;      // descriptor + score, per pair
    double t3_s = 0.0;       // structured matching, total
};

BenchReport run_bench(const SyntheticSpec& spec, const KernelSpec& kernel, int r,
                      LpMode mode = LpMode::Exact(),
                      Execution exec = Execution::Parallel);

void write_bench_csv(std::ostream& os, const std::vector<BenchReport>& rows);

} // namespace prism

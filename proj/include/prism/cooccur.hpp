#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "prism/parallel.hpp"
#include "prism/sparse.hpp"
#include "prism/spatial.hpp"
#include "prism/structure.hpp"

namespace prism {

// Pairwise entity descriptor: entry (u,v) accumulates, over all grid cells,
// the product of codeword u's activation in the probe entity and codeword v's
// activation in the gallery entity, normalized by the cell count so entries
// stay in [0,1]. Exact zeros are not stored.
struct CooccurrenceDescriptor {
    std::string probe_id;
    std::string gallery_id;
    uint32_t k1 = 0;
    uint32_t k2 = 0;
    SparseVec entries;
};

CooccurrenceDescriptor cooccurrence(const ActivationMap& probe, const ActivationMap& gallery,
                                    Execution exec = Execution::Parallel);

// All probe x gallery descriptors for one dataset split.
struct PairDescriptors {
    int n1 = 0;
    int n2 = 0;
    uint32_t k1 = 0;
    uint32_t k2 = 0;
    std::vector<CooccurrenceDescriptor> pairs; // n1*n2 row-major

    const CooccurrenceDescriptor& at(int i, int j) const {
        return pairs[static_cast<size_t>(i) * n2 + j];
    }
};

PairDescriptors build_pair_descriptors(const std::vector<ActivationMap>& probes,
                                       const std::vector<ActivationMap>& galleries,
                                       Execution exec = Execution::Parallel);

// Sum of descriptors over the selected pairs of y.
SparseVec aggregate_basis(const PairDescriptors& descriptors, const MatchStructure& y);

double score(const SparseVec& weights, const CooccurrenceDescriptor& d);

// "PRCO" cache file: magic, probe id, gallery id, u32 nnz,
// nnz x (u64 packed index, f32 value). Codeword counts are not stored; the
// loader leaves them zero and the pipeline carries them separately.
void save_descriptor(const std::filesystem::path& path, const CooccurrenceDescriptor& d);
std::string serialize_descriptor(const CooccurrenceDescriptor& d);
CooccurrenceDescriptor load_descriptor(const std::filesystem::path& path);

} // namespace prism

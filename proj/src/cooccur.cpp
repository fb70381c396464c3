#include "prism/cooccur.hpp"

#include <fstream>
#include <sstream>

#include "prism/io.hpp"

namespace prism {

CooccurrenceDescriptor cooccurrence(const ActivationMap& probe, const ActivationMap& gallery,
                                    Execution exec) {
    if (probe.rows != gallery.rows || probe.cols != gallery.cols)
        throw DimensionMismatch("cooccurrence: activation grids differ: " +
                                std::to_string(probe.rows) + "x" + std::to_string(probe.cols) +
                                " vs " + std::to_string(gallery.rows) + "x" +
                                std::to_string(gallery.cols));
    CooccurrenceDescriptor d;
    d.probe_id = probe.entity_id;
    d.gallery_id = gallery.entity_id;
    d.k1 = probe.k;
    d.k2 = gallery.k;

    const size_t cells = probe.cell_count();
    const double inv_cells = 1.0 / static_cast<double>(cells);

    std::vector<uint32_t> us, vs;
    for (uint32_t u = 0; u < probe.k; ++u)
        if (!probe.grids[u].empty()) us.push_back(u);
    for (uint32_t v = 0; v < gallery.k; ++v)
        if (!gallery.grids[v].empty()) vs.push_back(v);

    // one sparse row per active u; rows concatenate in u order, so the packed
    // indices come out strictly increasing
    std::vector<SparseVec> rows(us.size());
#pragma omp parallel for schedule(dynamic) if (exec == Execution::Parallel)
    for (long long ui = 0; ui < static_cast<long long>(us.size()); ++ui) {
        const uint32_t u = us[ui];
        const float* pu = probe.grids[u].data();
        for (uint32_t v : vs) {
            const float* gv = gallery.grids[v].data();
            double s = 0.0;
            for (size_t h = 0; h < cells; ++h)
                s += static_cast<double>(pu[h]) * gv[h];
            s *= inv_cells;
            if (s != 0.0) rows[ui].push(pack_uv(u, v), s);
        }
    }
    size_t total = 0;
    for (const auto& r : rows) total += r.nnz();
    d.entries.idx.reserve(total);
    d.entries.val.reserve(total);
    for (const auto& r : rows)
        for (size_t i = 0; i < r.nnz(); ++i) d.entries.push(r.idx[i], r.val[i]);
    return d;
}

PairDescriptors build_pair_descriptors(const std::vector<ActivationMap>& probes,
                                       const std::vector<ActivationMap>& galleries,
                                       Execution exec) {
    PairDescriptors out;
    out.n1 = static_cast<int>(probes.size());
    out.n2 = static_cast<int>(galleries.size());
    if (out.n1 > 0) out.k1 = probes.front().k;
    if (out.n2 > 0) out.k2 = galleries.front().k;
    out.pairs.resize(static_cast<size_t>(out.n1) * out.n2);

    // pairs are independent; parallelize across them and keep each
    // descriptor's own build serial
#pragma omp parallel for schedule(dynamic) if (exec == Execution::Parallel)
    for (long long p = 0; p < static_cast<long long>(out.pairs.size()); ++p) {
        int i = static_cast<int>(p) / out.n2;
        int j = static_cast<int>(p) % out.n2;
        out.pairs[p] = cooccurrence(probes[i], galleries[j], Execution::Serial);
    }
    return out;
}

SparseVec aggregate_basis(const PairDescriptors& descriptors, const MatchStructure& y) {
    if (descriptors.n1 > y.n1 || descriptors.n2 > y.n2)
        throw IndexOutOfRange("aggregate_basis: descriptor index range exceeds structure dims");
    SparseVec acc;
    for (int i = 0; i < y.n1; ++i)
        for (int j = 0; j < y.n2; ++j) {
            if (!y.at(i, j)) continue;
            if (i >= descriptors.n1 || j >= descriptors.n2)
                throw MissingDescriptor("aggregate_basis: no descriptor for selected pair (" +
                                        std::to_string(i) + "," + std::to_string(j) + ")");
            acc = axpy(acc, 1.0, descriptors.at(i, j).entries);
        }
    return acc;
}

double score(const SparseVec& weights, const CooccurrenceDescriptor& d) {
    return dot(weights, d.entries);
}

std::string serialize_descriptor(const CooccurrenceDescriptor& d) {
    std::ostringstream os(std::ios::binary);
    io::write_magic(os, "PRCO");
    io::write_string(os, d.probe_id);
    io::write_string(os, d.gallery_id);
    io::write_u32(os, static_cast<uint32_t>(d.entries.nnz()));
    for (size_t i = 0; i < d.entries.nnz(); ++i) {
        io::write_u64(os, d.entries.idx[i]);
        io::write_f32(os, static_cast<float>(d.entries.val[i]));
    }
    return os.str();
}

void save_descriptor(const std::filesystem::path& path, const CooccurrenceDescriptor& d) {
    io::atomic_write_file(path, serialize_descriptor(d));
}

CooccurrenceDescriptor load_descriptor(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw MissingFile("cannot open descriptor: " + path.string());
    io::expect_magic(is, "PRCO", "descriptor");
    CooccurrenceDescriptor d;
    d.probe_id = io::read_string(is);
    d.gallery_id = io::read_string(is);
    uint32_t nnz = io::read_u32(is);
    d.entries.idx.reserve(nnz);
    d.entries.val.reserve(nnz);
    for (uint32_t i = 0; i < nnz; ++i) {
        uint64_t idx = io::read_u64(is);
        float v = io::read_f32(is);
        d.entries.push(idx, v);
    }
    return d;
}

} // namespace prism

#pragma once

#include <cstdint>
#include <vector>

namespace prism {

// Codeword pairs (u from view 1, v from view 2) pack into one index.
inline uint64_t pack_uv(uint32_t u, uint32_t v) {
    return (static_cast<uint64_t>(u) << 32) | v;
}
inline uint32_t unpack_u(uint64_t idx) { return static_cast<uint32_t>(idx >> 32); }
inline uint32_t unpack_v(uint64_t idx) { return static_cast<uint32_t>(idx & 0xffffffffu); }

// Sparse vector with strictly increasing indices.
struct SparseVec {
    std::vector<uint64_t> idx;
    std::vector<double> val;

    size_t nnz() const { return idx.size(); }
    bool empty() const { return idx.empty(); }
    void push(uint64_t i, double v) {
        idx.push_back(i);
        val.push_back(v);
    }
};

double dot(const SparseVec& a, const SparseVec& b);

// a + s*b
SparseVec axpy(const SparseVec& a, double s, const SparseVec& b);

double norm2_sq(const SparseVec& a);

} // namespace prism

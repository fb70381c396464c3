#include "prism/sparse.hpp"

namespace prism {

double dot(const SparseVec& a, const SparseVec& b) {
    double s = 0.0;
    size_t i = 0, j = 0;
    while (i < a.idx.size() && j < b.idx.size()) {
        if (a.idx[i] < b.idx[j]) {
            ++i;
        } else if (a.idx[i] > b.idx[j]) {
            ++j;
        } else {
            s += a.val[i] * b.val[j];
            ++i;
            ++j;
        }
    }
    return s;
}

SparseVec axpy(const SparseVec& a, double s, const SparseVec& b) {
    SparseVec out;
    out.idx.reserve(a.idx.size() + b.idx.size());
    out.val.reserve(a.idx.size() + b.idx.size());
    size_t i = 0, j = 0;
    while (i < a.idx.size() || j < b.idx.size()) {
        if (j >= b.idx.size() || (i < a.idx.size() && a.idx[i] < b.idx[j])) {
            out.push(a.idx[i], a.val[i]);
            ++i;
        } else if (i >= a.idx.size() || b.idx[j] < a.idx[i]) {
            out.push(b.idx[j], s * b.val[j]);
            ++j;
        } else {
            out.push(a.idx[i], a.val[i] + s * b.val[j]);
            ++i;
            ++j;
        }
    }
    return out;
}

double norm2_sq(const SparseVec& a) {
    double s = 0.0;
    for (double v : a.val) s += v * v;
    return s;
}

} // namespace prism

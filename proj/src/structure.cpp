#include "prism/structure.hpp"

namespace prism {

int gallery_cap(const std::vector<int>& probe_degrees, int n2) {
    if (n2 < 1) throw InfeasibleSpec("gallery_cap: N2 must be >= 1");
    long long total = 0;
    for (int r : probe_degrees) total += r;
    return static_cast<int>((total + n2 - 1) / n2);
}

bool satisfies(const MatchStructure& y, const FeasibleSetSpec& spec) {
    if (static_cast<size_t>(y.n1) != spec.probe_degrees.size()) return false;
    int cap = spec.cap(y.n2);
    for (int i = 0; i < y.n1; ++i)
        if (y.row_sum(i) > spec.probe_degrees[i]) return false;
    for (int j = 0; j < y.n2; ++j)
        if (y.col_sum(j) > cap) return false;
    return true;
}

} // namespace prism

#pragma once

#include <cstdint>
#include <vector>

#include "prism/error.hpp"

namespace prism {

// Binary probe-gallery assignment matrix.
struct MatchStructure {
    int n1 = 0; // probes
    int n2 = 0; // galleries
    std::vector<uint8_t> cells; // n1*n2 row-major, values 0/1

    MatchStructure() = default;
    MatchStructure(int probes, int galleries)
        : n1(probes), n2(galleries), cells(static_cast<size_t>(probes) * galleries, 0) {}

    uint8_t at(int i, int j) const { return cells[static_cast<size_t>(i) * n2 + j]; }
    void set(int i, int j, uint8_t v) { cells[static_cast<size_t>(i) * n2 + j] = v; }

    int row_sum(int i) const {
        int s = 0;
        for (int j = 0; j < n2; ++j) s += at(i, j);
        return s;
    }
    int col_sum(int j) const {
        int s = 0;
        for (int i = 0; i < n1; ++i) s += at(i, j);
        return s;
    }
    bool operator==(const MatchStructure&) const = default;
};

// Ceiling of (sum of probe degrees) / N2: the shared upper bound on how many
// probes any one gallery may absorb.
int gallery_cap(const std::vector<int>& probe_degrees, int n2);

// Degree constraints of the feasible structure set: row i sums to at most
// probe_degrees[i], every column to at most gallery_cap().
struct FeasibleSetSpec {
    std::vector<int> probe_degrees;

    static FeasibleSetSpec uniform(int n1, int r) {
        return FeasibleSetSpec{std::vector<int>(static_cast<size_t>(n1), r)};
    }
    int cap(int n2) const { return gallery_cap(probe_degrees, n2); }
    void validate() const {
        for (int r : probe_degrees)
            if (r < 1) throw InfeasibleSpec("probe degree must be >= 1");
    }
};

bool satisfies(const MatchStructure& y, const FeasibleSetSpec& spec);

} // namespace prism

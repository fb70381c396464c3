#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "prism/cooccur.hpp"
#include "support/oracles.hpp"
#include "support/tmpdir.hpp"

using namespace prism;
using prism::test::TmpDir;

namespace {

ActivationMap random_map(uint32_t k, int rows, int cols, uint64_t seed, double density = 0.7,
                         const std::string& id = "e", int view = 1) {
    ActivationMap am;
    am.entity_id = id;
    am.view = view;
    am.k = k;
    am.rows = rows;
    am.cols = cols;
    am.grids.resize(k);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    for (uint32_t u = 0; u < k; ++u) {
        if (ud(rng) > density) continue; // leave some codewords absent
        am.grids[u].resize(am.cell_count());
        for (auto& v : am.grids[u]) v = ud(rng) < 0.5 ? 0.0f : static_cast<float>(ud(rng));
    }
    return am;
}

ActivationMap constant_map(uint32_t k, uint32_t u, int rows, int cols, float value) {
    ActivationMap am;
    am.k = k;
    am.rows = rows;
    am.cols = cols;
    am.grids.resize(k);
    am.grids[u].assign(static_cast<size_t>(rows) * cols, value);
    return am;
}

double get(const SparseVec& v, uint64_t idx) {
    for (size_t i = 0; i < v.nnz(); ++i)
        if (v.idx[i] == idx) return v.val[i];
    return 0.0;
}

} // namespace

TEST_CASE("constant activations co-occur with unit weight") {
    ActivationMap a = constant_map(3, 1, 4, 5, 1.0f);
    ActivationMap b = constant_map(4, 2, 4, 5, 1.0f);
    CooccurrenceDescriptor d = cooccurrence(a, b);
    CHECK(d.entries.nnz() == 1);
    CHECK(d.entries.idx[0] == pack_uv(1, 2));
    CHECK(d.entries.val[0] == doctest::Approx(1.0));
}

TEST_CASE("disjoint activation regions yield no entry") {
    ActivationMap a = constant_map(2, 0, 2, 4, 0.0f);
    ActivationMap b = constant_map(2, 1, 2, 4, 0.0f);
    // a's codeword 0 lives in the left half, b's codeword 1 in the right half
    for (int c = 0; c < 2; ++c) a.grids[0][c] = 1.0f;
    for (int c = 2; c < 4; ++c) b.grids[1][c] = 1.0f;
    CooccurrenceDescriptor d = cooccurrence(a, b);
    CHECK(get(d.entries, pack_uv(0, 1)) == 0.0);
    for (size_t i = 0; i < d.entries.nnz(); ++i) CHECK(d.entries.val[i] != 0.0);
}

TEST_CASE("sparse builder equals the dense triple loop") {
    for (uint64_t seed = 0; seed < 8; ++seed) {
        ActivationMap a = random_map(6, 8, 4, seed * 2 + 1);
        ActivationMap b = random_map(6, 8, 4, seed * 2 + 2);
        CooccurrenceDescriptor d = cooccurrence(a, b);
        auto dense = prism::test::dense_cooccurrence(a, b);
        for (uint32_t u = 0; u < 6; ++u)
            for (uint32_t v = 0; v < 6; ++v)
                CHECK(get(d.entries, pack_uv(u, v)) ==
                      doctest::Approx(dense[u * 6 + v]).epsilon(1e-12));
        // packed indices strictly increasing
        for (size_t i = 1; i < d.entries.nnz(); ++i) CHECK(d.entries.idx[i - 1] < d.entries.idx[i]);
    }
}

TEST_CASE("descriptor build rejects mismatched grids") {
    ActivationMap a = random_map(4, 6, 3, 1);
    ActivationMap b = random_map(4, 6, 4, 2);
    CHECK_THROWS_AS(cooccurrence(a, b), DimensionMismatch);
}

TEST_CASE("bilinearity in either activation map") {
    ActivationMap a = random_map(5, 6, 4, 10);
    ActivationMap b = random_map(5, 6, 4, 11);
    ActivationMap a2 = a;
    for (auto& g : a2.grids)
        for (auto& v : g) v *= 0.25f;
    CooccurrenceDescriptor d = cooccurrence(a, b);
    CooccurrenceDescriptor d2 = cooccurrence(a2, b);
    for (size_t i = 0; i < d.entries.nnz(); ++i)
        CHECK(d2.entries.val[i] == doctest::Approx(0.25 * d.entries.val[i]));
}

TEST_CASE("swapping the two maps transposes the index pair") {
    ActivationMap a = random_map(5, 7, 3, 20);
    ActivationMap b = random_map(6, 7, 3, 21);
    CooccurrenceDescriptor ab = cooccurrence(a, b);
    CooccurrenceDescriptor ba = cooccurrence(b, a);
    CHECK(ab.entries.nnz() == ba.entries.nnz());
    for (size_t i = 0; i < ab.entries.nnz(); ++i) {
        uint64_t idx = ab.entries.idx[i];
        CHECK(get(ba.entries, pack_uv(unpack_v(idx), unpack_u(idx))) == ab.entries.val[i]);
    }
}

TEST_CASE("sparsity never exceeds the active-codeword product") {
    ActivationMap a = random_map(8, 5, 5, 30, 0.5);
    ActivationMap b = random_map(9, 5, 5, 31, 0.5);
    size_t active_a = 0, active_b = 0;
    for (const auto& g : a.grids) active_a += !g.empty();
    for (const auto& g : b.grids) active_b += !g.empty();
    CooccurrenceDescriptor d = cooccurrence(a, b);
    CHECK(d.entries.nnz() <= active_a * active_b);
}

TEST_CASE("aggregate_basis sums the selected descriptors") {
    std::vector<ActivationMap> probes, galleries;
    for (int i = 0; i < 3; ++i) probes.push_back(random_map(4, 5, 3, 100 + i));
    for (int j = 0; j < 3; ++j) galleries.push_back(random_map(4, 5, 3, 200 + j));
    PairDescriptors pd = build_pair_descriptors(probes, galleries);

    SUBCASE("all-zero structure gives the empty vector") {
        MatchStructure y(3, 3);
        CHECK(aggregate_basis(pd, y).empty());
    }
    SUBCASE("a single selection is that descriptor") {
        MatchStructure y(3, 3);
        y.set(2, 1, 1);
        SparseVec f = aggregate_basis(pd, y);
        CHECK(f.idx == pd.at(2, 1).entries.idx);
        CHECK(f.val == pd.at(2, 1).entries.val);
    }
    SUBCASE("identity sums the diagonal, matching a manual sparse sum") {
        MatchStructure y(3, 3);
        for (int i = 0; i < 3; ++i) y.set(i, i, 1);
        SparseVec f = aggregate_basis(pd, y);
        std::map<uint64_t, double> manual;
        for (int i = 0; i < 3; ++i) {
            const auto& e = pd.at(i, i).entries;
            for (size_t t = 0; t < e.nnz(); ++t) manual[e.idx[t]] += e.val[t];
        }
        REQUIRE(f.nnz() == manual.size());
        size_t t = 0;
        for (const auto& [idx, val] : manual) {
            CHECK(f.idx[t] == idx);
            CHECK(f.val[t] == doctest::Approx(val).epsilon(1e-12));
            ++t;
        }
    }
    SUBCASE("structure smaller than the descriptor grid is rejected") {
        MatchStructure y(2, 3);
        CHECK_THROWS_AS(aggregate_basis(pd, y), IndexOutOfRange);
    }
}

TEST_CASE("score is the sparse dot product") {
    ActivationMap a = random_map(5, 4, 4, 50);
    ActivationMap b = random_map(5, 4, 4, 51);
    CooccurrenceDescriptor d = cooccurrence(a, b);

    SUBCASE("zero weights") { CHECK(score(SparseVec{}, d) == 0.0); }
    SUBCASE("single overlapping entry") {
        CooccurrenceDescriptor single;
        single.entries.push(pack_uv(2, 3), 0.5);
        SparseVec w;
        w.push(pack_uv(1, 1), 7.0); // misses
        w.push(pack_uv(2, 3), 2.0); // hits
        CHECK(score(w, single) == doctest::Approx(1.0));
    }
    SUBCASE("random weights match a dense dot product") {
        std::mt19937_64 rng(60);
        std::uniform_real_distribution<double> ud(-1.0, 1.0);
        SparseVec w;
        std::vector<double> dense(5 * 5, 0.0);
        for (uint32_t u = 0; u < 5; ++u)
            for (uint32_t v = 0; v < 5; v += 2) {
                double x = ud(rng);
                w.push(pack_uv(u, v), x);
                dense[u * 5 + v] = x;
            }
        double want = 0.0;
        for (size_t i = 0; i < d.entries.nnz(); ++i) {
            uint64_t idx = d.entries.idx[i];
            want += dense[unpack_u(idx) * 5 + unpack_v(idx)] * d.entries.val[i];
        }
        CHECK(score(w, d) == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("scores distribute over aggregation") {
    std::vector<ActivationMap> probes, galleries;
    for (int i = 0; i < 4; ++i) probes.push_back(random_map(5, 6, 3, 300 + i));
    for (int j = 0; j < 4; ++j) galleries.push_back(random_map(5, 6, 3, 400 + j));
    PairDescriptors pd = build_pair_descriptors(probes, galleries);
    std::mt19937_64 rng(70);
    std::uniform_real_distribution<double> ud(-2.0, 2.0);
    SparseVec w;
    for (uint32_t u = 0; u < 5; ++u)
        for (uint32_t v = 0; v < 5; ++v) w.push(pack_uv(u, v), ud(rng));
    MatchStructure y(4, 4);
    y.set(0, 2, 1);
    y.set(1, 1, 1);
    y.set(3, 0, 1);
    y.set(3, 3, 1);
    double lhs = 0.0;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            if (y.at(i, j)) lhs += score(w, pd.at(i, j));
    double rhs = dot(w, aggregate_basis(pd, y));
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("pair descriptor batches are identical in serial and parallel") {
    std::vector<ActivationMap> probes, galleries;
    for (int i = 0; i < 3; ++i) probes.push_back(random_map(7, 8, 4, 500 + i));
    for (int j = 0; j < 5; ++j) galleries.push_back(random_map(7, 8, 4, 600 + j));
    PairDescriptors p = build_pair_descriptors(probes, galleries, Execution::Parallel);
    PairDescriptors s = build_pair_descriptors(probes, galleries, Execution::Serial);
    REQUIRE(p.pairs.size() == s.pairs.size());
    for (size_t t = 0; t < p.pairs.size(); ++t) {
        CHECK(p.pairs[t].entries.idx == s.pairs[t].entries.idx);
        CHECK(p.pairs[t].entries.val == s.pairs[t].entries.val);
    }
}

TEST_CASE("descriptor cache file round trips") {
    TmpDir td("prco");
    ActivationMap a = random_map(6, 5, 4, 700, 0.8, "probeX", 1);
    ActivationMap b = random_map(7, 5, 4, 701, 0.8, "galY", 2);
    CooccurrenceDescriptor d = cooccurrence(a, b);
    save_descriptor(td.file("d.prco"), d);
    CooccurrenceDescriptor back = load_descriptor(td.file("d.prco"));
    CHECK(back.probe_id == "probeX");
    CHECK(back.gallery_id == "galY");
    CHECK(back.entries.idx == d.entries.idx);
    REQUIRE(back.entries.nnz() == d.entries.nnz());
    for (size_t i = 0; i < d.entries.nnz(); ++i)
        CHECK(back.entries.val[i] == doctest::Approx(d.entries.val[i]).epsilon(1e-6));
}

#include "prism/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "prism/io.hpp"

namespace prism {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

} // namespace

CmcCurve cmc(const std::vector<RankSelections>& selections, const std::vector<int>& truth,
             int n2) {
    const int n1 = static_cast<int>(truth.size());
    // first evaluated rank whose selection contains the true gallery
    std::vector<int> first_rank(n1, INT32_MAX);
    for (const auto& sel : selections) {
        for (int i = 0; i < n1; ++i) {
            if (truth[i] < 0 || sel.rank >= first_rank[i]) continue;
            const auto& picks = sel.per_probe[i];
            if (std::find(picks.begin(), picks.end(), truth[i]) != picks.end())
                first_rank[i] = sel.rank;
        }
    }
    CmcCurve curve;
    curve.rates.resize(n2, 0.0);
    if (n1 == 0) return curve;
    for (int r = 1; r <= n2; ++r) {
        int hit = 0;
        for (int i = 0; i < n1; ++i) hit += first_rank[i] <= r;
        curve.rates[r - 1] = static_cast<double>(hit) / n1;
    }
    return curve;
}

std::vector<std::vector<int>> topk_selection(const SimilarityMatrix& s, int r) {
    std::vector<std::vector<int>> out(s.n1);
    std::vector<int> order(s.n2);
    for (int i = 0; i < s.n1; ++i) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return s.at(i, a) > s.at(i, b); });
        int take = std::min(r, s.n2);
        out[i].assign(order.begin(), order.begin() + take);
    }
    return out;
}

std::vector<std::vector<int>> structured_selection(const SimilarityMatrix& s, int r,
                                                   LpMode mode) {
    auto ranked = rank_galleries(s, r, mode);
    std::vector<std::vector<int>> out(s.n1);
    const int want = std::min(r, s.n2);
    std::vector<char> taken(s.n2);
    std::vector<int> order(s.n2);
    for (int i = 0; i < s.n1; ++i) {
        auto& sel = out[i];
        std::fill(taken.begin(), taken.end(), 0);
        for (const auto& g : ranked[i]) {
            sel.push_back(g.gallery);
            taken[g.gallery] = 1;
        }
        if (static_cast<int>(sel.size()) < want) {
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(),
                             [&](int a, int b) { return s.at(i, a) > s.at(i, b); });
            for (int j : order) {
                if (static_cast<int>(sel.size()) >= want) break;
                if (!taken[j]) sel.push_back(j);
            }
        }
    }
    return out;
}

CmcCurve cmc_independent(const SimilarityMatrix& s, const std::vector<int>& truth) {
    // the position of the true gallery in the per-probe sort is the probe's
    // first-hit rank, so one full ordering gives every rank at once
    auto order_all = topk_selection(s, s.n2);
    const int n1 = s.n1;
    CmcCurve curve;
    curve.rates.assign(s.n2, 0.0);
    if (n1 == 0) return curve;
    std::vector<int> hits_at(s.n2 + 1, 0);
    for (int i = 0; i < n1; ++i) {
        if (truth[i] < 0) continue;
        const auto& order = order_all[i];
        for (int pos = 0; pos < s.n2; ++pos)
            if (order[pos] == truth[i]) {
                ++hits_at[pos + 1];
                break;
            }
    }
    int cum = 0;
    for (int r = 1; r <= s.n2; ++r) {
        cum += hits_at[r];
        curve.rates[r - 1] = static_cast<double>(cum) / n1;
    }
    return curve;
}

CmcCurve cmc_structured(const SimilarityMatrix& s, const std::vector<int>& truth,
                        const std::vector<int>& ranks, LpMode mode) {
    std::vector<RankSelections> sels;
    for (int r : ranks) sels.push_back({r, structured_selection(s, r, mode)});
    return cmc(sels, truth, s.n2);
}

double matching_accuracy(const MatchStructure& predicted, const std::vector<int>& truth) {
    if (static_cast<size_t>(predicted.n1) != truth.size())
        throw DimensionMismatch("matching_accuracy: probe counts differ");
    if (predicted.n1 == 0) return 1.0;
    int ok = 0;
    for (int i = 0; i < predicted.n1; ++i) {
        int count = predicted.row_sum(i);
        if (truth[i] < 0) {
            ok += count == 0;
        } else {
            ok += count == 1 && predicted.at(i, truth[i]) == 1;
        }
    }
    return static_cast<double>(ok) / predicted.n1;
}

namespace {

uint64_t mix_seed(uint64_t seed, uint64_t stream) {
    uint64_t h = seed ^ (stream + 0x9e3779b97f4a7c15ull + (seed << 6) + (seed >> 2));
    h ^= h >> 33;
    h *= 0xff51afd7ed558ccdull;
    h ^= h >> 33;
    return h;
}

CodewordImage jitter_and_noise(const std::vector<uint32_t>& base, int rows, int cols,
                               uint32_t k, const SyntheticSpec& spec, std::mt19937_64& rng,
                               const std::string& id, int view) {
    CodewordImage im;
    im.entity_id = id;
    im.view = view;
    im.k = k;
    im.rows = rows;
    im.cols = cols;
    im.grid.resize(base.size());
    int dr = 0, dc = 0;
    if (spec.jitter > 0) {
        std::uniform_int_distribution<int> jd(-spec.jitter, spec.jitter);
        dr = jd(rng);
        dc = jd(rng);
    }
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            int sr = ((r + dr) % rows + rows) % rows;
            int sc = ((c + dc) % cols + cols) % cols;
            im.at(r, c) = base[static_cast<size_t>(sr) * cols + sc];
        }
    if (spec.noise > 0.0) {
        std::uniform_real_distribution<double> ud(0.0, 1.0);
        std::uniform_int_distribution<uint32_t> wd(0, k - 2);
        for (auto& cell : im.grid)
            if (ud(rng) < spec.noise) {
                uint32_t other = wd(rng); // flips always land on a different codeword
                cell = other >= cell ? other + 1 : other;
            }
    }
    return im;
}

SyntheticEntity make_entity(const SyntheticSpec& spec, const std::vector<uint32_t>& perm,
                            const std::string& id, uint64_t entity_stream) {
    std::mt19937_64 rng(mix_seed(spec.seed, entity_stream));
    const int rows = spec.grid_rows, cols = spec.grid_cols;
    const uint32_t k = spec.codewords;
    std::vector<uint32_t> base(static_cast<size_t>(rows) * cols);
    std::uniform_int_distribution<uint32_t> wd(0, k - 1);
    for (auto& c : base) c = wd(rng);
    std::vector<uint32_t> base2(base.size());
    for (size_t i = 0; i < base.size(); ++i) base2[i] = perm[base[i]];

    SyntheticEntity e;
    e.id = id;
    for (int view = 0; view < 2; ++view) {
        const auto& layout = view == 0 ? base : base2;
        for (int m = 0; m < spec.images_per_entity[view]; ++m)
            e.views[view].push_back(
                jitter_and_noise(layout, rows, cols, k, spec, rng, id, view + 1));
    }
    return e;
}

} // namespace

SyntheticDataset generate_synthetic(const SyntheticSpec& spec) {
    if (spec.codewords < 2) throw DataError("synthetic: need at least 2 codewords");
    if (spec.noise < 0.0 || spec.noise >= 1.0) throw DataError("synthetic: noise must be in [0,1)");
    SyntheticDataset ds;
    ds.permutation.resize(spec.codewords);
    std::iota(ds.permutation.begin(), ds.permutation.end(), 0u);
    std::mt19937_64 prng(mix_seed(spec.seed, 0xabcdef));
    std::shuffle(ds.permutation.begin(), ds.permutation.end(), prng);

    char buf[32];
    for (int e = 0; e < spec.train_entities; ++e) {
        std::snprintf(buf, sizeof buf, "train_%03d", e);
        ds.train.push_back(make_entity(spec, ds.permutation, buf, 1000 + e));
    }
    for (int e = 0; e < spec.test_entities; ++e) {
        std::snprintf(buf, sizeof buf, "test_%03d", e);
        ds.test.push_back(make_entity(spec, ds.permutation, buf, 2000000 + e));
    }
    return ds;
}

std::vector<int> make_truth(const std::vector<std::string>& probe_ids,
                            const std::vector<std::string>& gallery_ids) {
    std::vector<int> truth(probe_ids.size(), -1);
    for (size_t i = 0; i < probe_ids.size(); ++i)
        for (size_t j = 0; j < gallery_ids.size(); ++j)
            if (probe_ids[i] == gallery_ids[j]) {
                truth[i] = static_cast<int>(j);
                break;
            }
    return truth;
}

RasterImage render_codeword_image(const CodewordImage& ci, int cell_px) {
    RasterImage img;
    img.channels = 1;
    img.height = ci.rows * cell_px;
    img.width = ci.cols * cell_px;
    img.pixels.resize(static_cast<size_t>(img.width) * img.height);
    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c) {
            uint32_t w = ci.at(r / cell_px, c / cell_px);
            img.at(r, c) = static_cast<uint8_t>(((w + 0.5) * 255.0) / ci.k);
        }
    return img;
}

void write_synthetic_dataset(const SyntheticDataset& ds, const std::filesystem::path& dir,
                             int cell_px) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "images");
    auto write_split = [&](const std::vector<SyntheticEntity>& split, const std::string& name) {
        std::ostringstream manifest;
        for (const auto& e : split)
            for (int view = 0; view < 2; ++view)
                for (size_t m = 0; m < e.views[view].size(); ++m) {
                    std::string rel = "images/" + e.id + "_v" + std::to_string(view + 1) +
                                      "_" + std::to_string(m) + ".pgm";
                    write_pnm_file(dir / rel, render_codeword_image(e.views[view][m], cell_px));
                    manifest << e.id << "\t" << (view + 1) << "\t" << rel << "\n";
                }
        io::atomic_write_file(dir / (name + ".tsv"), manifest.str());
    };
    write_split(ds.train, "train");
    write_split(ds.test, "test");
}

BenchReport run_bench(const SyntheticSpec& spec, const KernelSpec& kernel, int r, LpMode mode,
                      Execution exec) {
    BenchReport rep;
    if (spec.test_entities == 0) return rep;
    SyntheticDataset ds = generate_synthetic(spec);
    const int n = static_cast<int>(ds.test.size());

    auto t0 = Clock::now();
    std::vector<ActivationMap> probes, galleries;
    for (const auto& e : ds.test) probes.push_back(activation_map(e.views[0], kernel, exec));
    for (const auto& e : ds.test) galleries.push_back(activation_map(e.views[1], kernel, exec));
    rep.t1_ms = ms_since(t0) / (2.0 * n);

    size_t bytes = 0;
    for (const auto& am : probes) bytes += serialize_activation_map(am).size();
    for (const auto& am : galleries) bytes += serialize_activation_map(am).size();
    rep.storage_kb = static_cast<double>(bytes) / 1024.0 / (2.0 * n);

    // diagonal weights stand in for a trained model; timing only
    SparseVec w;
    for (uint32_t u = 0; u < spec.codewords; ++u)
        w.push(pack_uv(u, ds.permutation[u]), 1.0);

    t0 = Clock::now();
    PairDescriptors pd = build_pair_descriptors(probes, galleries, exec);
    SimilarityMatrix s(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) s.at(i, j) = dot(w, pd.at(i, j).entries);
    rep.t2_ms = ms_since(t0) / (static_cast<double>(n) * n);

    t0 = Clock::now();
    solve_matching(s, FeasibleSetSpec::uniform(n, r), mode);
    rep.t3_s = ms_since(t0) / 1000.0;
    return rep;
}

void write_bench_csv(std::ostream& os, const std::vector<BenchReport>& rows) {
    os << "st_kb,t1_ms,t2_ms,t3_s\n";
    for (const auto& r : rows)
        os << r.storage_kb << "," << r.t1_ms << "," << r.t2_ms << "," << r.t3_s << "\n";
}

} // namespace prism

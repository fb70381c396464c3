#include "prism/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "prism/eval.hpp"
#include "prism/io.hpp"
#include "prism/pipeline.hpp"

namespace prism {

namespace {

namespace fs = std::filesystem;

struct CommonOpts {
    PipelineConfig cfg;
    std::string kernel_name = "box";
    std::string lp_name = "exact";
    int threads = 0;
    bool serial = false;

    void finalize() {
        cfg.kernel.kind = kernel_kind_from_name(kernel_name);
        if (cfg.kernel.kind == KernelKind::TruncatedGaussian && cfg.kernel.alpha <= 0.0)
            cfg.kernel.alpha = 2.0 * cfg.kernel.sigma;
        cfg.lp = LpMode::parse(lp_name);
        set_threads(threads);
        if (serial) cfg.exec = Execution::Serial;
    }
};

void add_kernel_flags(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--kernel", o.kernel_name, "Spatial kernel: tgauss|tlinear|box")
        ->capture_default_str();
    cmd->add_option("--sigma", o.cfg.kernel.sigma, "Kernel scale in grid cells")
        ->capture_default_str();
    cmd->add_option("--alpha", o.cfg.kernel.alpha,
                    "Truncation radius for tgauss (default 2*sigma)");
}

void add_patch_flags(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--patch", o.cfg.patch, "Patch size (odd)")->capture_default_str();
    cmd->add_option("--stride", o.cfg.stride, "Patch stride")->capture_default_str();
}

void add_exec_flags(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--threads", o.threads, "OpenMP threads (0 = library default)");
    cmd->add_flag("--serial", o.serial, "Run all kernels single-threaded");
}

std::string view_codebook_path(const std::string& prefix, int view) {
    return prefix + ".view" + std::to_string(view) + ".prcb";
}

void write_text_file(const fs::path& path, const std::string& text) {
    io::atomic_write_file(path, text);
}

int cmd_synth(const SyntheticSpec& spec, const std::string& out_dir, int cell_px) {
    SyntheticDataset ds = generate_synthetic(spec);
    write_synthetic_dataset(ds, out_dir, cell_px);
    std::cout << "wrote " << ds.train.size() << " train + " << ds.test.size()
              << " test entities under " << out_dir << "\n";
    return 0;
}

int cmd_build_codebook(const std::string& manifest_path, const std::string& out_prefix,
                       const PipelineConfig& cfg) {
    DatasetManifest m = load_manifest(manifest_path);
    for (int view = 1; view <= 2; ++view) {
        KMeansResult r = train_view_codebook(m, view, cfg);
        std::string path = view_codebook_path(out_prefix, view);
        save_codebook(path, r.codebook);
        std::cout << "view " << view << ": K=" << r.codebook.k << " D=" << r.codebook.dim
                  << " inertia=" << r.inertia << " iters=" << r.iterations << " -> " << path
                  << "\n";
    }
    return 0;
}

int cmd_train(const std::string& manifest_path, const std::string& codebook_prefix,
              const std::string& out_path, const PipelineConfig& cfg) {
    DatasetManifest m = load_manifest(manifest_path);
    Codebook cb1 = load_codebook(view_codebook_path(codebook_prefix, 1));
    Codebook cb2 = load_codebook(view_codebook_path(codebook_prefix, 2));

    ViewData probes = encode_view(m, 1, cb1, cfg);
    ViewData galleries = encode_view(m, 2, cb2, cfg);
    if (probes.ids.empty() || galleries.ids.empty())
        throw DataError("training manifest must populate both views");

    auto ams1 = view_activation_maps(probes, cfg);
    auto ams2 = view_activation_maps(galleries, cfg);
    PairDescriptors pd = pair_descriptors_cached(ams1, ams2, cfg);
    MatchStructure y = truth_structure(probes.ids, galleries.ids);

    TrainConfig tc;
    tc.C = cfg.C;
    tc.max_planes = cfg.max_planes;
    tc.violation_tol = cfg.violation_tol;
    tc.warm_start_samples = cfg.warm_start;
    tc.seed = cfg.seed;
    tc.exec = cfg.exec;
    TrainResult tr = train(pd, y, tc);
    save_weights(out_path, tr.weights);

    double last_violation = tr.iters.empty() ? 0.0 : tr.iters.back().violation;
    double last_xi = tr.iters.empty() ? 0.0 : tr.iters.back().xi;
    std::cout << "planes=" << tr.iters.size() << " converged=" << (tr.converged ? "yes" : "no")
              << " xi=" << last_xi << " violation=" << last_violation
              << " nnz(w)=" << tr.weights.w.nnz() << " -> " << out_path << "\n";
    return 0;
}

int cmd_match(const std::string& manifest_path, const std::string& codebook_prefix,
              const std::string& weights_path, const std::string& out_prefix,
              const PipelineConfig& cfg) {
    DatasetManifest m = load_manifest(manifest_path);
    Codebook cb1 = load_codebook(view_codebook_path(codebook_prefix, 1));
    Codebook cb2 = load_codebook(view_codebook_path(codebook_prefix, 2));
    ModelWeights mw = load_weights(weights_path);
    if (mw.k1 != cb1.k || mw.k2 != cb2.k)
        throw DimensionMismatch("weights were trained for K1=" + std::to_string(mw.k1) +
                                ",K2=" + std::to_string(mw.k2) + " but codebooks have K1=" +
                                std::to_string(cb1.k) + ",K2=" + std::to_string(cb2.k));

    ViewData probes = encode_view(m, 1, cb1, cfg);
    ViewData galleries = encode_view(m, 2, cb2, cfg);
    if (probes.ids.empty() || galleries.ids.empty()) {
        write_text_file(out_prefix + ".cmc.csv", "rank,rate\n");
        write_text_file(out_prefix + ".accuracy.csv", "scenario,probes,accuracy\n");
        std::cout << "no probe/gallery entities; wrote empty outputs\n";
        return 0;
    }

    auto ams1 = view_activation_maps(probes, cfg);
    auto ams2 = view_activation_maps(galleries, cfg);
    PairDescriptors pd = pair_descriptors_cached(ams1, ams2, cfg);
    SimilarityMatrix s = score_pairs(pd, mw.w, cfg.exec);

    NamedScores ns;
    ns.probe_ids = probes.ids;
    ns.gallery_ids = galleries.ids;
    ns.scores = s;

    const int n2 = static_cast<int>(galleries.ids.size());
    std::vector<int> ranks;
    for (int r : cfg.ranks)
        if (r >= 1) ranks.push_back(std::min(r, n2));
    std::sort(ranks.begin(), ranks.end());
    ranks.erase(std::unique(ranks.begin(), ranks.end()), ranks.end());
    if (ranks.empty()) ranks.push_back(1);

    std::vector<int> truth = make_truth(probes.ids, galleries.ids);
    std::vector<RankSelections> sels;
    for (int r : ranks) {
        MatchResult res = solve_matching(s, FeasibleSetSpec::uniform(s.n1, r), cfg.lp);
        std::ostringstream os;
        os.precision(10);
        write_match_csv(os, ns, res.structure);
        write_text_file(out_prefix + ".match_r" + std::to_string(r) + ".csv", os.str());
        sels.push_back({r, structured_selection(s, r, cfg.lp)});
    }
    CmcCurve curve = cmc(sels, truth, n2);
    {
        std::ostringstream os;
        os.precision(10);
        os << "rank,rate\n";
        for (int r = 1; r <= n2; ++r) os << r << "," << curve.rate(r) << "\n";
        write_text_file(out_prefix + ".cmc.csv", os.str());
    }
    {
        // robust-scenario metric at r=1: structured vs independent argmax
        MatchResult res = solve_matching(s, FeasibleSetSpec::uniform(s.n1, 1), cfg.lp);
        double acc_struct = matching_accuracy(res.structure, truth);
        MatchStructure greedy(s.n1, s.n2);
        auto top1 = topk_selection(s, 1);
        for (int i = 0; i < s.n1; ++i)
            if (!top1[i].empty()) greedy.set(i, top1[i][0], 1);
        double acc_greedy = matching_accuracy(greedy, truth);
        std::ostringstream os;
        os.precision(10);
        os << "scenario,probes,accuracy\n";
        os << "structured," << s.n1 << "," << acc_struct << "\n";
        os << "argmax," << s.n1 << "," << acc_greedy << "\n";
        write_text_file(out_prefix + ".accuracy.csv", os.str());
    }
    std::cout << "probes=" << s.n1 << " galleries=" << n2 << " rank-" << ranks.front()
              << " rate=" << curve.rate(ranks.front()) << " -> " << out_prefix << ".cmc.csv\n";
    return 0;
}

int cmd_match_scores(const std::string& scores_path, int r, LpMode mode,
                     const std::string& out_path) {
    std::ifstream is(scores_path);
    if (!is) throw MissingFile("cannot open scores: " + scores_path);
    NamedScores ns = read_score_csv(is, scores_path);
    MatchResult res = solve_matching(ns.scores, FeasibleSetSpec::uniform(ns.scores.n1, r), mode);
    std::ostringstream os;
    os.precision(10);
    write_match_csv(os, ns, res.structure);
    write_text_file(out_path, os.str());
    std::cout << "objective=" << res.objective << " selected="
              << std::count(res.structure.cells.begin(), res.structure.cells.end(), 1)
              << " -> " << out_path << "\n";
    return 0;
}

int cmd_bench(const SyntheticSpec& spec, const PipelineConfig& cfg, int r,
              const std::string& out_path) {
    std::vector<BenchReport> rows;
    for (int t = 0; t < cfg.trials && spec.test_entities > 0; ++t) {
        SyntheticSpec s = spec;
        s.seed = spec.seed + static_cast<uint64_t>(t);
        rows.push_back(run_bench(s, cfg.kernel, r, cfg.lp, cfg.exec));
    }
    std::ostringstream os;
    write_bench_csv(os, rows);
    if (out_path.empty() || out_path == "-") {
        std::cout << os.str();
    } else {
        write_text_file(out_path, os.str());
        std::cout << "wrote " << rows.size() << " rows -> " << out_path << "\n";
    }
    return 0;
}

} // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"PRISM: visual-word co-occurrence person re-identification "
                 "with structured matching"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Flat key=value config file; flags override it");

    CommonOpts o;

    // synth
    SyntheticSpec synth_spec;
    std::string synth_out;
    int cell_px = 6;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic two-view dataset");
    synth->add_option("--out", synth_out, "Output directory")->required();
    synth->add_option("--train", synth_spec.train_entities, "Training entities")
        ->capture_default_str();
    synth->add_option("--test", synth_spec.test_entities, "Test entities")
        ->capture_default_str();
    synth->add_option("--images", synth_spec.images_per_entity[0], "Images per entity per view")
        ->capture_default_str();
    synth->add_option("--grid-rows", synth_spec.grid_rows, "Layout rows")->capture_default_str();
    synth->add_option("--grid-cols", synth_spec.grid_cols, "Layout cols")->capture_default_str();
    synth->add_option("--codewords", synth_spec.codewords, "Planted codeword count")
        ->capture_default_str();
    synth->add_option("--jitter", synth_spec.jitter, "Max per-image shift in cells")
        ->capture_default_str();
    synth->add_option("--noise", synth_spec.noise, "Per-cell flip probability")
        ->capture_default_str();
    synth->add_option("--seed", synth_spec.seed, "RNG seed")->capture_default_str();
    synth->add_option("--cell-px", cell_px, "Rendered pixels per layout cell")
        ->capture_default_str();

    // build-codebook
    std::string manifest_path, out_prefix;
    auto* build = app.add_subcommand("build-codebook", "Cluster patch features per view");
    build->add_option("--manifest", manifest_path, "Dataset manifest (TSV)")->required();
    build->add_option("--out", out_prefix, "Codebook file prefix")->required();
    build->add_option("--codebook-size", o.cfg.codebook_size, "Visual words per view")
        ->capture_default_str();
    build->add_option("--sample", o.cfg.sample_per_view, "Feature sample size per view")
        ->capture_default_str();
    build->add_option("--kmeans-iters", o.cfg.kmeans_iters, "Lloyd iteration cap")
        ->capture_default_str();
    build->add_option("--kmeans-tol", o.cfg.kmeans_tol, "Centroid-movement stop tolerance")
        ->capture_default_str();
    build->add_flag("--share-codebook", o.cfg.share_codebook,
                    "Train one codebook from both views");
    build->add_option("--seed", o.cfg.seed, "RNG seed")->capture_default_str();
    add_patch_flags(build, o);
    add_exec_flags(build, o);

    // train
    std::string codebook_prefix, weights_path;
    auto* tr = app.add_subcommand("train", "Learn similarity weights by cutting planes");
    tr->add_option("--manifest", manifest_path, "Training manifest")->required();
    tr->add_option("--codebook", codebook_prefix, "Codebook file prefix")->required();
    tr->add_option("--out", weights_path, "Output weights file")->required();
    tr->add_option("--C", o.cfg.C, "Regularization constant")->capture_default_str();
    tr->add_option("--max-planes", o.cfg.max_planes, "Cutting-plane cap")->capture_default_str();
    tr->add_option("--warm-start", o.cfg.warm_start, "Random structures seeding the working set")
        ->capture_default_str();
    tr->add_option("--violation-tol", o.cfg.violation_tol, "Convergence tolerance")
        ->capture_default_str();
    tr->add_option("--seed", o.cfg.seed, "RNG seed")->capture_default_str();
    tr->add_option("--cache-dir", o.cfg.cache_dir, "Activation/descriptor cache directory");
    add_kernel_flags(tr, o);
    add_patch_flags(tr, o);
    add_exec_flags(tr, o);

    // match
    std::string match_out;
    auto* mt = app.add_subcommand("match", "Structured matching, CMC and accuracy reports");
    mt->add_option("--manifest", manifest_path, "Test manifest")->required();
    mt->add_option("--codebook", codebook_prefix, "Codebook file prefix")->required();
    mt->add_option("--weights", weights_path, "Trained weights file")->required();
    mt->add_option("--out", match_out, "Output file prefix")->required();
    mt->add_option("--ranks", o.cfg.ranks, "Ranks r to evaluate")
        ->delimiter(',')
        ->capture_default_str();
    mt->add_option("--lp", o.lp_name, "LP mode: exact | capped:N")->capture_default_str();
    mt->add_option("--cache-dir", o.cfg.cache_dir, "Activation/descriptor cache directory");
    mt->add_option("--seed", o.cfg.seed, "RNG seed (cache key only)")->capture_default_str();
    add_kernel_flags(mt, o);
    add_patch_flags(mt, o);
    add_exec_flags(mt, o);

    // match-scores
    std::string scores_path, sel_out;
    int rank_r = 1;
    auto* ms = app.add_subcommand("match-scores", "Structured matching on a score-matrix CSV");
    ms->add_option("--scores", scores_path, "Score CSV (header row of gallery ids)")->required();
    ms->add_option("--r", rank_r, "Matches to seek per probe")->capture_default_str();
    ms->add_option("--lp", o.lp_name, "LP mode: exact | capped:N")->capture_default_str();
    ms->add_option("--out", sel_out, "Output selection CSV")->required();

    // bench
    SyntheticSpec bench_spec;
    bench_spec.train_entities = 0;
    std::string bench_out = "-";
    int bench_r = 1;
    auto* bn = app.add_subcommand("bench", "Storage and timing harness on synthetic data");
    bn->add_option("--entities", bench_spec.test_entities, "Entities per side")
        ->capture_default_str();
    bn->add_option("--images", bench_spec.images_per_entity[0], "Images per entity per view")
        ->capture_default_str();
    bn->add_option("--grid-rows", bench_spec.grid_rows, "Layout rows")->capture_default_str();
    bn->add_option("--grid-cols", bench_spec.grid_cols, "Layout cols")->capture_default_str();
    bn->add_option("--codewords", bench_spec.codewords, "Codeword count")->capture_default_str();
    bn->add_option("--seed", bench_spec.seed, "RNG seed")->capture_default_str();
    bn->add_option("--trials", o.cfg.trials, "Rows to emit")->capture_default_str();
    bn->add_option("--r", bench_r, "Matches per probe in the matching stage")
        ->capture_default_str();
    bn->add_option("--lp", o.lp_name, "LP mode: exact | capped:N")->capture_default_str();
    bn->add_option("--out", bench_out, "Output CSV ('-' for stdout)")->capture_default_str();
    add_kernel_flags(bn, o);
    add_exec_flags(bn, o);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        o.finalize();
        synth_spec.images_per_entity[1] = synth_spec.images_per_entity[0];
        bench_spec.images_per_entity[1] = bench_spec.images_per_entity[0];
        if (synth->parsed()) return cmd_synth(synth_spec, synth_out, cell_px);
        if (build->parsed()) return cmd_build_codebook(manifest_path, out_prefix, o.cfg);
        if (tr->parsed()) return cmd_train(manifest_path, codebook_prefix, weights_path, o.cfg);
        if (mt->parsed())
            return cmd_match(manifest_path, codebook_prefix, weights_path, match_out, o.cfg);
        if (ms->parsed()) return cmd_match_scores(scores_path, rank_r, o.cfg.lp, sel_out);
        if (bn->parsed()) return cmd_bench(bench_spec, o.cfg, bench_r, bench_out);
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}

} // namespace prism

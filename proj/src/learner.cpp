#include "prism/learner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "prism/io.hpp"

namespace prism {

namespace {
constexpr double kTiny = 1e-30;
constexpr long long kMaxSmoSteps = 2000000;
} // namespace

void CuttingPlaneQp::add_plane(SparseVec g, double delta) {
    size_t k = planes_.size();
    gram_.emplace_back(k + 1);
    for (size_t j = 0; j < k; ++j) gram_[k][j] = dot(g, planes_[j]);
    gram_[k][k] = norm2_sq(g);
    planes_.push_back(std::move(g));
    delta_.push_back(delta);
    alpha_.push_back(0.0);
    // q_k for the new plane under the current w
    double q = 0.0;
    for (size_t j = 0; j < k; ++j) q += alpha_[j] * gram_[k][j];
    q_.push_back(q);
}

// One exact minimization over the pair (k, j): move mass from j to k while
// keeping the total fixed. SIZE_MAX stands for the implicit slack coordinate
// holding the unused budget C - sum(alpha), with zero plane and zero loss.
double CuttingPlaneQp::pairwise_step(size_t k, size_t j) {
    if (k == j) return 0.0;
    auto gram_at = [&](size_t a, size_t b) -> double {
        if (a == SIZE_MAX || b == SIZE_MAX) return 0.0;
        return a >= b ? gram_[a][b] : gram_[b][a];
    };
    double d_k = k == SIZE_MAX ? 0.0 : delta_[k] - q_[k];
    double d_j = j == SIZE_MAX ? 0.0 : delta_[j] - q_[j];
    double grad = d_k - d_j;
    if (grad <= 0.0) return 0.0;
    double curv = gram_at(k, k) - 2.0 * gram_at(k, j) + gram_at(j, j);
    double avail = j == SIZE_MAX ? c_ - sum_alpha_ : alpha_[j];
    double step = curv < kTiny ? avail : std::min(avail, grad / curv);
    if (step <= 0.0) return 0.0;
    double gain = step * grad - 0.5 * step * step * curv;
    if (gain <= 0.0) return 0.0;
    if (k == SIZE_MAX) {
        alpha_[j] -= step;
        sum_alpha_ -= step;
    } else if (j == SIZE_MAX) {
        alpha_[k] += step;
        sum_alpha_ += step;
    } else {
        alpha_[k] += step;
        alpha_[j] -= step;
    }
    for (size_t t = 0; t < planes_.size(); ++t)
        q_[t] += step * (gram_at(k, t) - gram_at(j, t));
    return gain;
}

// SMO over the simplex {alpha >= 0, sum <= C}: repeatedly transfer mass from
// the lowest-gradient held coordinate to the highest-gradient one, slack
// included on both sides, until the duality gap closes.
void CuttingPlaneQp::solve() {
    if (planes_.empty() || c_ <= 0.0) return;
    const size_t p = planes_.size();
    for (long long step = 0; step < kMaxSmoSteps; ++step) {
        size_t best = SIZE_MAX; // slack: gradient 0, always accepts mass
        double d_best = 0.0;
        for (size_t k = 0; k < p; ++k) {
            double d = delta_[k] - q_[k];
            if (d > d_best) {
                d_best = d;
                best = k;
            }
        }
        size_t worst = SIZE_MAX;
        double d_worst = 0.0;
        bool has_worst = c_ - sum_alpha_ > 0.0;
        for (size_t j = 0; j < p; ++j) {
            if (alpha_[j] <= 0.0) continue;
            double d = delta_[j] - q_[j];
            if (!has_worst || d < d_worst) {
                d_worst = d;
                worst = j;
                has_worst = true;
            }
        }
        bool moved = has_worst && pairwise_step(best, worst) > 0.0;
        if (!moved || step % 64 == 0) {
            double wsq = 0.0, adelta = 0.0;
            for (size_t k = 0; k < p; ++k) {
                wsq += alpha_[k] * q_[k];
                adelta += alpha_[k] * delta_[k];
            }
            double x = xi();
            double primal = 0.5 * wsq + c_ * x;
            double gap = wsq + c_ * x - adelta;
            if (gap <= tol_ * std::max(1.0, std::fabs(primal))) return;
            if (!moved)
                throw Divergence("restricted QP stalled before reaching tolerance");
        }
    }
    throw Divergence("restricted QP failed to reach tolerance");
}

double CuttingPlaneQp::xi() const {
    double x = 0.0;
    for (size_t k = 0; k < planes_.size(); ++k) x = std::max(x, delta_[k] - q_[k]);
    return x;
}

double CuttingPlaneQp::objective() const {
    double wsq = 0.0, adelta = 0.0;
    for (size_t k = 0; k < planes_.size(); ++k) {
        wsq += alpha_[k] * q_[k];
        adelta += alpha_[k] * delta_[k];
    }
    return adelta - 0.5 * wsq;
}

SparseVec CuttingPlaneQp::weights() const {
    SparseVec w;
    for (size_t k = 0; k < planes_.size(); ++k)
        if (alpha_[k] != 0.0) w = axpy(w, alpha_[k], planes_[k]);
    return w;
}

QpSolution solve_restricted_qp(const std::vector<std::pair<SparseVec, double>>& constraints,
                               double c, double qp_tol) {
    if (constraints.empty()) throw DataError("solve_restricted_qp: no constraints");
    CuttingPlaneQp qp(c, qp_tol);
    for (const auto& [g, d] : constraints) qp.add_plane(g, d);
    qp.solve();
    return {qp.weights(), qp.xi(), qp.objective()};
}

MatchStructure sample_feasible_structure(const FeasibleSetSpec& spec, int n2,
                                         std::mt19937_64& rng) {
    int n1 = static_cast<int>(spec.probe_degrees.size());
    int cap = spec.cap(n2);
    MatchStructure y(n1, n2);
    std::vector<int> col_used(n2, 0);
    std::vector<int> open;
    for (int i = 0; i < n1; ++i) {
        open.clear();
        for (int j = 0; j < n2; ++j)
            if (col_used[j] < cap) open.push_back(j);
        int want = std::uniform_int_distribution<int>(0, spec.probe_degrees[i])(rng);
        want = std::min<int>(want, static_cast<int>(open.size()));
        // partial Fisher-Yates over the open columns
        for (int t = 0; t < want; ++t) {
            int pick = std::uniform_int_distribution<int>(t, static_cast<int>(open.size()) - 1)(rng);
            std::swap(open[t], open[pick]);
            y.set(i, open[t], 1);
            ++col_used[open[t]];
        }
    }
    return y;
}

TrainResult train(const PairDescriptors& descriptors, const MatchStructure& y_true,
                  const TrainConfig& cfg) {
    if (descriptors.n1 != y_true.n1 || descriptors.n2 != y_true.n2)
        throw MissingDescriptor("train: descriptor grid " + std::to_string(descriptors.n1) +
                                "x" + std::to_string(descriptors.n2) +
                                " does not cover ground truth " + std::to_string(y_true.n1) +
                                "x" + std::to_string(y_true.n2));
    if (cfg.C < 0) throw DataError("train: C must be >= 0");

    const int n1 = y_true.n1, n2 = y_true.n2;
    int r = 1;
    for (int i = 0; i < n1; ++i) r = std::max(r, y_true.row_sum(i));
    FeasibleSetSpec spec = FeasibleSetSpec::uniform(n1, r);

    SparseVec f_true = aggregate_basis(descriptors, y_true);

    CuttingPlaneQp qp(cfg.C, cfg.qp_tol);
    std::mt19937_64 rng(cfg.seed);
    std::set<std::vector<uint8_t>> seen;
    for (int t = 0; t < cfg.warm_start_samples; ++t) {
        MatchStructure ybar = sample_feasible_structure(spec, n2, rng);
        if (!seen.insert(ybar.cells).second) continue;
        SparseVec g = axpy(f_true, -1.0, aggregate_basis(descriptors, ybar));
        qp.add_plane(std::move(g), loss(y_true, ybar));
    }
    if (qp.plane_count() == 0) qp.add_plane(SparseVec{}, 0.0);

    TrainResult res;
    SimilarityMatrix scores(n1, n2);
    SparseVec w;
    for (int outer = 0; outer < cfg.max_planes; ++outer) {
        qp.solve();
        w = qp.weights();
        double xi = qp.xi();

#pragma omp parallel for schedule(static) if (cfg.exec == Execution::Parallel)
        for (long long p = 0; p < static_cast<long long>(scores.scores.size()); ++p)
            scores.scores[p] = dot(w, descriptors.pairs[p].entries);

        MatchStructure y_star = loss_augmented_inference(scores, y_true, spec);
        double delta_star = loss(y_true, y_star);
        SparseVec g_star = axpy(f_true, -1.0, aggregate_basis(descriptors, y_star));
        double violation = delta_star - dot(w, g_star);

        res.iters.push_back({qp.objective(), xi, violation});
        if (violation <= xi + cfg.violation_tol) {
            res.converged = true;
            break;
        }
        qp.add_plane(std::move(g_star), delta_star);
    }

    res.weights.k1 = descriptors.k1;
    res.weights.k2 = descriptors.k2;
    res.weights.w = std::move(w);
    res.probe_degree = r;
    return res;
}

void save_weights(const std::filesystem::path& path, const ModelWeights& mw) {
    std::ostringstream os(std::ios::binary);
    io::write_magic(os, "PRWT");
    io::write_u32(os, mw.k1);
    io::write_u32(os, mw.k2);
    io::write_u32(os, static_cast<uint32_t>(mw.w.nnz()));
    for (size_t i = 0; i < mw.w.nnz(); ++i) {
        io::write_u64(os, mw.w.idx[i]);
        io::write_f32(os, static_cast<float>(mw.w.val[i]));
    }
    io::atomic_write_file(path, os.str());
}

ModelWeights load_weights(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw MissingFile("cannot open weights: " + path.string());
    io::expect_magic(is, "PRWT", "weights");
    ModelWeights mw;
    mw.k1 = io::read_u32(is);
    mw.k2 = io::read_u32(is);
    uint32_t nnz = io::read_u32(is);
    for (uint32_t i = 0; i < nnz; ++i) {
        uint64_t idx = io::read_u64(is);
        float v = io::read_f32(is);
        mw.w.push(idx, v);
    }
    return mw;
}

} // namespace prism

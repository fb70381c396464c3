#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "prism/cooccur.hpp"
#include "prism/matcher.hpp"
#include "prism/parallel.hpp"
#include "prism/sparse.hpp"

namespace prism {

// Linear similarity model over packed codeword-pair indices; no bias term.
struct ModelWeights {
    uint32_t k1 = 0;
    uint32_t k2 = 0;
    SparseVec w;
};

struct TrainConfig {
    double C = 100.0;
    int max_planes = 200;
    double violation_tol = 1e-3;
    int warm_start_samples = 20;
    uint64_t seed = 1;
    double qp_tol = 1e-8;
    Execution exec = Execution::Parallel;
};

// Restricted QP over the current working set:
//   min 1/2 |w|^2 + C xi   s.t.  w . g_k >= delta_k - xi  for all k,  xi >= 0
// solved in the dual by coordinate ascent over the plane multipliers
// (alpha_k >= 0, sum alpha_k <= C, w = sum alpha_k g_k). Planes can be added
// between solves; alphas warm-start, so the optimal objective never drops.
class CuttingPlaneQp {
public:
    CuttingPlaneQp(double c, double tol) : c_(c), tol_(tol) {}

    void add_plane(SparseVec g, double delta);
    void solve(); // to duality gap <= tol * max(1, |objective|)

    size_t plane_count() const { return planes_.size(); }
    double xi() const;
    double objective() const; // dual value == primal optimum at convergence
    SparseVec weights() const;
    const std::vector<double>& alphas() const { return alpha_; }
    double margin(size_t k) const { return q_[k]; } // w . g_k

private:
    double pairwise_step(size_t k, size_t j);

    double c_;
    double tol_;
    std::vector<SparseVec> planes_;
    std::vector<double> delta_;
    std::vector<std::vector<double>> gram_; // lower triangle, gram_[k][j], j <= k
    std::vector<double> alpha_;
    std::vector<double> q_; // q_k = w . g_k
    double sum_alpha_ = 0.0;
};

struct QpSolution {
    SparseVec w;
    double xi = 0.0;
    double objective = 0.0;
};

QpSolution solve_restricted_qp(const std::vector<std::pair<SparseVec, double>>& constraints,
                               double c, double qp_tol);

struct TrainIter {
    double qp_objective = 0.0;
    double xi = 0.0;
    double violation = 0.0; // of the most violated structure found
};

struct TrainResult {
    ModelWeights weights;
    std::vector<TrainIter> iters;
    bool converged = false;
    int probe_degree = 1; // the r used for the training feasible set
};

// 1-slack cutting-plane training: seed the working set with random feasible
// structures, then alternate solving the restricted QP with adding the most
// violated structure found by loss-augmented inference, until the violation
// exceeds xi by less than violation_tol or max_planes is reached.
TrainResult train(const PairDescriptors& descriptors, const MatchStructure& y_true,
                  const TrainConfig& cfg);

// Uniform random member of the feasible set (row degrees <= r_i, column sums
// <= cap; the sampled row degree itself is uniform on 0..r_i).
MatchStructure sample_feasible_structure(const FeasibleSetSpec& spec, int n2,
                                         std::mt19937_64& rng);

// "PRWT" file: magic, u32 K1, u32 K2, u32 nnz, nnz x (u64 packed idx, f32).
void save_weights(const std::filesystem::path& path, const ModelWeights& mw);
ModelWeights load_weights(const std::filesystem::path& path);

} // namespace prism

#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "prism/structure.hpp"

namespace prism {

struct SimilarityMatrix {
    int n1 = 0;
    int n2 = 0;
    std::vector<double> scores; // n1*n2 row-major

    SimilarityMatrix() = default;
    SimilarityMatrix(int probes, int galleries)
        : n1(probes), n2(galleries), scores(static_cast<size_t>(probes) * galleries, 0.0) {}

    double at(int i, int j) const { return scores[static_cast<size_t>(i) * n2 + j]; }
    double& at(int i, int j) { return scores[static_cast<size_t>(i) * n2 + j]; }
};

// exact: min-cost-flow to optimality (the relaxation's constraint matrix is
// totally unimodular, so the optimum is integral). capped: at most max_iters
// primal ascent iterations over the relaxed polytope, thresholded at 0.5 and
// repaired to feasibility.
struct LpMode {
    bool exact = true;
    int max_iters = 10;

    static LpMode Exact() { return {true, 0}; }
    static LpMode Capped(int iters) { return {false, iters}; }
    static LpMode parse(const std::string& s); // "exact" | "capped:N"
    std::string name() const;
};

struct MatchResult {
    MatchStructure structure;
    std::vector<double> fractional; // n1*n2, relaxed solution (integral in exact mode)
    double objective = 0.0;         // sum of selected scores
};

// Maximize the total score of selected pairs subject to the degree bounds.
// Edges with negative score are never selected in exact mode: the constraints
// are all upper bounds, so dropping such an edge is always feasible and
// improves the objective.
MatchResult solve_matching(const SimilarityMatrix& s, const FeasibleSetSpec& spec,
                           LpMode mode = LpMode::Exact());

// Hamming distance between two structures of equal dims.
int loss(const MatchStructure& y, const MatchStructure& ybar);

// argmax over the feasible set of (score sum + Hamming loss against y_true).
// For binary structures the loss is linear in ybar, so this is solve_matching
// on scores shifted by 1 - 2*y_true.
MatchStructure loss_augmented_inference(const SimilarityMatrix& s,
                                        const MatchStructure& y_true,
                                        const FeasibleSetSpec& spec);

struct RankedGallery {
    int gallery = 0;
    double fractional = 0.0;
    double score = 0.0;
};

// Per-probe selections of solve_matching with every probe degree set to r,
// ordered within each selection by fractional value, then score, then index.
std::vector<std::vector<RankedGallery>> rank_galleries(const SimilarityMatrix& s, int r,
                                                       LpMode mode = LpMode::Exact());

// CSV interfaces. Score matrix: header "probe_id,<gallery ids...>", one row
// per probe. Match output: "probe_id,gallery_id,score,selected" per pair.
struct NamedScores {
    std::vector<std::string> probe_ids;
    std::vector<std::string> gallery_ids;
    SimilarityMatrix scores;
};

NamedScores read_score_csv(std::istream& is, const std::string& what);
void write_score_csv(std::ostream& os, const NamedScores& ns);
void write_match_csv(std::ostream& os, const NamedScores& ns, const MatchStructure& y);

} // namespace prism

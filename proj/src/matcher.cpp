#include "prism/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>

namespace prism {

namespace {

constexpr double kEps = 1e-12;

void check_finite(const SimilarityMatrix& s) {
    for (double v : s.scores)
        if (!std::isfinite(v)) throw NonFiniteScore("similarity matrix has non-finite entries");
}

// Successive shortest augmenting paths with Johnson potentials on the
// source -> probes -> galleries -> sink network. Augments while the best
// residual path still has strictly negative cost (positive profit).
class FlowSolver {
public:
    FlowSolver(const SimilarityMatrix& s, const std::vector<int>& degrees, int cap)
        : n1_(s.n1), n2_(s.n2), v_count_(s.n1 + s.n2 + 2) {
        head_.assign(v_count_, -1);
        const int source = src();
        const int sink = snk();
        for (int i = 0; i < n1_; ++i) add_arc(source, probe(i), degrees[i], 0.0);
        for (int i = 0; i < n1_; ++i)
            for (int j = 0; j < n2_; ++j) add_arc(probe(i), gallery(j), 1, -s.at(i, j));
        for (int j = 0; j < n2_; ++j) add_arc(gallery(j), sink, cap, 0.0);
    }

    void run() {
        init_potentials();
        std::vector<double> dist(v_count_);
        std::vector<int> prev_arc(v_count_);
        while (true) {
            if (!dijkstra(dist, prev_arc)) break;
            double path_cost = dist[snk()] + pot_[snk()] - pot_[src()];
            if (path_cost >= -kEps) break;
            for (int v = snk(); v != src(); v = to_[prev_arc[v] ^ 1]) {
                cap_[prev_arc[v]] -= 1;
                cap_[prev_arc[v] ^ 1] += 1;
            }
            double dt = dist[snk()];
            for (int v = 0; v < v_count_; ++v) pot_[v] += std::min(dist[v], dt);
        }
    }

    bool selected(int i, int j) const {
        // probe->gallery arcs were added in (i,j) order right after the n1
        // source arcs; each arc occupies two slots
        int arc = 2 * (n1_ + i * n2_ + j);
        return cap_[arc] == 0;
    }

private:
    int src() const { return 0; }
    int probe(int i) const { return 1 + i; }
    int gallery(int j) const { return 1 + n1_ + j; }
    int snk() const { return 1 + n1_ + n2_; }

    void add_arc(int from, int to, int cap, double cost) {
        to_.push_back(to);
        cap_.push_back(cap);
        cost_.push_back(cost);
        next_.push_back(head_[from]);
        head_[from] = static_cast<int>(to_.size()) - 1;
        to_.push_back(from);
        cap_.push_back(0);
        cost_.push_back(-cost);
        next_.push_back(head_[to]);
        head_[to] = static_cast<int>(to_.size()) - 1;
    }

    // The initial residual graph is a DAG in node-index order, so exact
    // potentials come from one relaxation sweep.
    void init_potentials() {
        pot_.assign(v_count_, 0.0);
        for (int j = 0; j < n2_; ++j) {
            double best = std::numeric_limits<double>::infinity();
            for (int i = 0; i < n1_; ++i) {
                int arc = 2 * (n1_ + i * n2_ + j);
                best = std::min(best, cost_[arc]);
            }
            pot_[gallery(j)] = std::min(best, 0.0);
        }
        double best_t = 0.0;
        for (int j = 0; j < n2_; ++j) best_t = std::min(best_t, pot_[gallery(j)]);
        pot_[snk()] = best_t;
    }

    bool dijkstra(std::vector<double>& dist, std::vector<int>& prev_arc) {
        const double inf = std::numeric_limits<double>::infinity();
        dist.assign(v_count_, inf);
        prev_arc.assign(v_count_, -1);
        dist[src()] = 0.0;
        using Item = std::pair<double, int>;
        std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
        pq.push({0.0, src()});
        while (!pq.empty()) {
            auto [d, u] = pq.top();
            pq.pop();
            if (d > dist[u]) continue;
            for (int a = head_[u]; a != -1; a = next_[a]) {
                if (cap_[a] <= 0) continue;
                int v = to_[a];
                double rc = std::max(0.0, cost_[a] + pot_[u] - pot_[v]);
                if (dist[u] + rc < dist[v]) {
                    dist[v] = dist[u] + rc;
                    prev_arc[v] = a;
                    pq.push({dist[v], v});
                }
            }
        }
        return dist[snk()] < inf;
    }

    int n1_, n2_, v_count_;
    std::vector<int> head_, next_, to_, cap_;
    std::vector<double> cost_, pot_;
};

MatchResult solve_exact(const SimilarityMatrix& s, const FeasibleSetSpec& spec) {
    int cap = spec.cap(s.n2);
    FlowSolver solver(s, spec.probe_degrees, cap);
    solver.run();
    MatchResult res;
    res.structure = MatchStructure(s.n1, s.n2);
    res.fractional.assign(static_cast<size_t>(s.n1) * s.n2, 0.0);
    for (int i = 0; i < s.n1; ++i)
        for (int j = 0; j < s.n2; ++j)
            if (solver.selected(i, j)) {
                res.structure.set(i, j, 1);
                res.fractional[static_cast<size_t>(i) * s.n2 + j] = 1.0;
                res.objective += s.at(i, j);
            }
    return res;
}

MatchResult solve_capped(const SimilarityMatrix& s, const FeasibleSetSpec& spec,
                         int max_iters) {
    const int n1 = s.n1, n2 = s.n2;
    const int cap = spec.cap(n2);
    MatchResult res;
    res.structure = MatchStructure(n1, n2);
    res.fractional.assign(static_cast<size_t>(n1) * n2, 0.0);

    double gmax = 0.0;
    for (double v : s.scores) gmax = std::max(gmax, std::fabs(v));
    if (gmax == 0.0) return res; // all-zero scores: empty structure is optimal

    // projected ascent: constant-gradient step, clamp to the box, then shrink
    // any over-full row and column back inside the polytope
    std::vector<double>& y = res.fractional;
    const double step = 1.0 / gmax;
    for (int t = 0; t < max_iters; ++t) {
        for (int i = 0; i < n1; ++i)
            for (int j = 0; j < n2; ++j) {
                double& v = y[static_cast<size_t>(i) * n2 + j];
                v = std::clamp(v + step * s.at(i, j), 0.0, 1.0);
            }
        for (int i = 0; i < n1; ++i) {
            double rs = 0.0;
            for (int j = 0; j < n2; ++j) rs += y[static_cast<size_t>(i) * n2 + j];
            if (rs > spec.probe_degrees[i]) {
                double f = spec.probe_degrees[i] / rs;
                for (int j = 0; j < n2; ++j) y[static_cast<size_t>(i) * n2 + j] *= f;
            }
        }
        for (int j = 0; j < n2; ++j) {
            double cs = 0.0;
            for (int i = 0; i < n1; ++i) cs += y[static_cast<size_t>(i) * n2 + j];
            if (cs > cap) {
                double f = cap / cs;
                for (int i = 0; i < n1; ++i) y[static_cast<size_t>(i) * n2 + j] *= f;
            }
        }
    }

    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j)
            if (y[static_cast<size_t>(i) * n2 + j] >= 0.5) res.structure.set(i, j, 1);

    // thresholding may overfill a degree; repair by dropping the weakest
    // selections first (rows, then columns — removals never refill a row)
    for (int i = 0; i < n1; ++i) {
        while (res.structure.row_sum(i) > spec.probe_degrees[i]) {
            int worst = -1;
            for (int j = 0; j < n2; ++j)
                if (res.structure.at(i, j) && (worst < 0 || s.at(i, j) < s.at(i, worst)))
                    worst = j;
            res.structure.set(i, worst, 0);
        }
    }
    for (int j = 0; j < n2; ++j) {
        while (res.structure.col_sum(j) > cap) {
            int worst = -1;
            for (int i = 0; i < n1; ++i)
                if (res.structure.at(i, j) && (worst < 0 || s.at(i, j) < s.at(worst, j)))
                    worst = i;
            res.structure.set(worst, j, 0);
        }
    }
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j)
            if (res.structure.at(i, j)) res.objective += s.at(i, j);
    return res;
}

} // namespace

LpMode LpMode::parse(const std::string& s) {
    if (s == "exact") return Exact();
    if (s.rfind("capped:", 0) == 0) {
        int n = std::stoi(s.substr(7));
        if (n < 1) throw DataError("capped LP iterations must be >= 1");
        return Capped(n);
    }
    throw DataError("bad lp mode '" + s + "' (expected exact or capped:N)");
}

std::string LpMode::name() const {
    return exact ? "exact" : ("capped:" + std::to_string(max_iters));
}

MatchResult solve_matching(const SimilarityMatrix& s, const FeasibleSetSpec& spec,
                           LpMode mode) {
    if (static_cast<size_t>(s.n1) != spec.probe_degrees.size())
        throw DimensionMismatch("solve_matching: degree count vs probe count");
    spec.validate();
    check_finite(s);
    if (s.n1 == 0 || s.n2 == 0) {
        MatchResult res;
        res.structure = MatchStructure(s.n1, s.n2);
        return res;
    }
    return mode.exact ? solve_exact(s, spec) : solve_capped(s, spec, mode.max_iters);
}

int loss(const MatchStructure& y, const MatchStructure& ybar) {
    if (y.n1 != ybar.n1 || y.n2 != ybar.n2)
        throw DimensionMismatch("loss: structure dims differ");
    int d = 0;
    for (size_t i = 0; i < y.cells.size(); ++i) d += y.cells[i] != ybar.cells[i];
    return d;
}

MatchStructure loss_augmented_inference(const SimilarityMatrix& s,
                                        const MatchStructure& y_true,
                                        const FeasibleSetSpec& spec) {
    if (s.n1 != y_true.n1 || s.n2 != y_true.n2)
        throw DimensionMismatch("loss_augmented_inference: dims differ");
    // |y - ybar| = y + (1 - 2y) * ybar for binary values, so the loss folds
    // into the edge scores
    SimilarityMatrix aug(s.n1, s.n2);
    for (int i = 0; i < s.n1; ++i)
        for (int j = 0; j < s.n2; ++j)
            aug.at(i, j) = s.at(i, j) + 1.0 - 2.0 * y_true.at(i, j);
    return solve_matching(aug, spec, LpMode::Exact()).structure;
}

std::vector<std::vector<RankedGallery>> rank_galleries(const SimilarityMatrix& s, int r,
                                                       LpMode mode) {
    if (r < 1) throw InfeasibleSpec("rank_galleries: r must be >= 1");
    auto res = solve_matching(s, FeasibleSetSpec::uniform(s.n1, r), mode);
    std::vector<std::vector<RankedGallery>> out(s.n1);
    for (int i = 0; i < s.n1; ++i) {
        for (int j = 0; j < s.n2; ++j)
            if (res.structure.at(i, j))
                out[i].push_back({j, res.fractional[static_cast<size_t>(i) * s.n2 + j],
                                  s.at(i, j)});
        std::sort(out[i].begin(), out[i].end(), [](const RankedGallery& a, const RankedGallery& b) {
            if (a.fractional != b.fractional) return a.fractional > b.fractional;
            if (a.score != b.score) return a.score > b.score;
            return a.gallery < b.gallery;
        });
    }
    return out;
}

NamedScores read_score_csv(std::istream& is, const std::string& what) {
    NamedScores ns;
    std::string line;
    if (!std::getline(is, line)) throw ParseError(what + ": empty score CSV");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    {
        std::istringstream ls(line);
        std::string cell;
        bool first = true;
        while (std::getline(ls, cell, ',')) {
            if (first) {
                first = false; // corner cell, typically "probe_id"
            } else {
                ns.gallery_ids.push_back(cell);
            }
        }
    }
    if (ns.gallery_ids.empty()) throw ParseError(what + ": header names no galleries");
    std::vector<double> values;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        if (!std::getline(ls, cell, ',')) throw ParseError(what + ": bad row");
        ns.probe_ids.push_back(cell);
        size_t got = 0;
        while (std::getline(ls, cell, ',')) {
            try {
                values.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ParseError(what + ": bad score '" + cell + "'");
            }
            ++got;
        }
        if (got != ns.gallery_ids.size())
            throw ParseError(what + ": row '" + ns.probe_ids.back() + "' has " +
                             std::to_string(got) + " scores, expected " +
                             std::to_string(ns.gallery_ids.size()));
    }
    ns.scores = SimilarityMatrix(static_cast<int>(ns.probe_ids.size()),
                                 static_cast<int>(ns.gallery_ids.size()));
    ns.scores.scores = std::move(values);
    return ns;
}

void write_score_csv(std::ostream& os, const NamedScores& ns) {
    os << "probe_id";
    for (const auto& g : ns.gallery_ids) os << "," << g;
    os << "\n";
    for (int i = 0; i < ns.scores.n1; ++i) {
        os << ns.probe_ids[i];
        for (int j = 0; j < ns.scores.n2; ++j) os << "," << ns.scores.at(i, j);
        os << "\n";
    }
}

void write_match_csv(std::ostream& os, const NamedScores& ns, const MatchStructure& y) {
    os << "probe_id,gallery_id,score,selected\n";
    for (int i = 0; i < y.n1; ++i)
        for (int j = 0; j < y.n2; ++j)
            os << ns.probe_ids[i] << "," << ns.gallery_ids[j] << "," << ns.scores.at(i, j)
               << "," << int(y.at(i, j)) << "\n";
}

} // namespace prism

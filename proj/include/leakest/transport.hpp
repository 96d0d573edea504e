#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "leakest/common.hpp"
#include "leakest/histogram.hpp"

namespace leakest {

// Cost matrices above this many entries are refused; at histogram resolutions
// where k^d is large the quadratic cost matrix is the memory wall, and the
// guard turns it into a reportable failure instead of an allocation death.
inline constexpr std::size_t kDefaultCostEntryGuard = 100'000'000;

struct TransportProblem {
    std::vector<double> p;
    std::vector<double> q;
    Matrix cost;  // cost(i, j) moves mass from p_i to q_j
};

struct TransportPlan {
    Matrix plan;
    double objective = 0.0;       // <C, M>
    std::vector<double> dual_u;   // LP only: u_i + v_j <= C_ij, sum u.p + v.q = objective
    std::vector<double> dual_v;
    std::size_t iterations = 0;   // Sinkhorn only
    double marginal_violation = 0.0;
    bool converged = true;
};

inline void validate_transport_problem(const TransportProblem& tp, const char* who) {
    const std::size_t n = tp.p.size();
    if (n == 0 || tp.q.size() != n)
        throw ParameterError(std::string(who) + ": p and q must be nonempty and equal length");
    if (tp.cost.rows != n || tp.cost.cols != n)
        throw ParameterError(std::string(who) + ": cost matrix shape must match the marginals");
    for (double v : tp.p)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw ParameterError(std::string(who) + ": p has negative or non-finite entries");
    for (double v : tp.q)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw ParameterError(std::string(who) + ": q has negative or non-finite entries");
    for (double v : tp.cost.a)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw ParameterError(std::string(who) + ": cost has negative or non-finite entries");
    const double sp = compensated_total(tp.p);
    const double sq = compensated_total(tp.q);
    if (std::abs(sp - sq) > 1e-6)
        throw ParameterError(std::string(who) + ": marginal sums differ by more than 1e-6");
}

// Pairwise Euclidean distances between bin centers; symmetric, zero diagonal.
inline Matrix cost_matrix_from_centers(const SampleMatrix& centers,
                                       std::size_t entry_guard = kDefaultCostEntryGuard) {
    validate_samples(centers, "cost_matrix_from_centers");
    const std::size_t n = centers.n;
    if (n > entry_guard / n)
        throw ResourceError("cost_matrix_from_centers: " + std::to_string(n) + "^2 entries exceed the " +
                            std::to_string(entry_guard) + "-entry cost matrix guard");
    Matrix c(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        c(i, i) = 0.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            double s = 0.0;
            for (std::size_t t = 0; t < centers.d; ++t) {
                const double diff = centers(i, t) - centers(j, t);
                s += diff * diff;
            }
            const double dist = std::sqrt(s);
            c(i, j) = dist;
            c(j, i) = dist;
        }
    }
    return c;
}

inline TransportProblem transport_problem_from_histograms(const HistogramGrid& hp,
                                                          const HistogramGrid& hq,
                                                          std::size_t entry_guard = kDefaultCostEntryGuard) {
    if (!hp.same_grid(hq))
        throw ParameterError("transport_problem_from_histograms: histograms use different grids");
    // check the quadratic guard before materializing k^d bin centers
    const std::size_t n = hp.num_bins();
    if (!hp.dense || n > entry_guard / n)
        throw ResourceError("transport_problem_from_histograms: " + std::to_string(n) +
                            "^2 entries exceed the " + std::to_string(entry_guard) +
                            "-entry cost matrix guard");
    TransportProblem tp;
    tp.cost = cost_matrix_from_centers(bin_centers(hp), entry_guard);
    tp.p = to_probability_vector(hp);
    tp.q = to_probability_vector(hq);
    return tp;
}

namespace detail {

// Network simplex on the complete bipartite transportation graph.
//
// Nodes are the n sources, the n sinks and one artificial root; the initial
// basis routes every supply through a high-cost artificial arc to the root.
// Entering arcs are found by block pricing over the real arcs; the leaving
// arc follows the strongly-feasible-tree tie-breaking (strict comparison on
// the first cycle leg, non-strict on the second), which rules out cycling on
// degenerate pivots. The tree is re-rooted by BFS after every pivot; at the
// sizes the bin budget admits this costs far less than pricing.
class TransportationSimplex {
  public:
    TransportationSimplex(const std::vector<double>& p, const std::vector<double>& q,
                          const Matrix& cost)
        : p_(p), q_(q), cost_(cost), n_(p.size()), m_(q.size()) {
        num_real_ = n_ * m_;
        num_nodes_ = n_ + m_ + 1;
        root_ = static_cast<int>(n_ + m_);
        max_cost_ = 0.0;
        for (double c : cost_.a) max_cost_ = std::max(max_cost_, c);
        art_cost_ = 1.0 + max_cost_ * static_cast<double>(num_nodes_ + 1);
        rc_eps_ = 1e-12 * (1.0 + max_cost_);
    }

    void run() {
        init_basis();
        const std::size_t max_pivots = 1000 * static_cast<std::size_t>(num_nodes_) + 10000;
        std::size_t pivots = 0;
        int a_in;
        while ((a_in = find_entering()) >= 0) {
            pivot(a_in);
            if (++pivots > max_pivots)
                throw std::runtime_error("transportation simplex: pivot limit exceeded");
        }
    }

    Matrix extract_plan() const {
        Matrix plan(n_, m_);
        for (std::size_t a = 0; a < num_real_; ++a)
            if (flow_[a] > 0.0) plan.a[a] = flow_[a];
        return plan;
    }

    double objective() const {
        CompensatedSum s;
        for (std::size_t a = 0; a < num_real_; ++a)
            if (flow_[a] > 0.0) s.add(flow_[a] * cost_.a[a]);
        return s.value();
    }

    // u_i + v_j <= C_ij for all pairs once run() returns
    std::vector<double> dual_u() const {
        std::vector<double> u(n_);
        for (std::size_t i = 0; i < n_; ++i) u[i] = -pi_[i];
        return u;
    }
    std::vector<double> dual_v() const {
        std::vector<double> v(m_);
        for (std::size_t j = 0; j < m_; ++j) v[j] = pi_[n_ + j];
        return v;
    }

  private:
    // arc ids: [0, n*m) real arc i->sink j with a = i*m + j,
    //          [n*m, n*m + n + m) artificial arc for node v = a - n*m
    int tail(std::size_t a) const {
        if (a < num_real_) return static_cast<int>(a / m_);
        const int v = static_cast<int>(a - num_real_);
        return art_to_root_[v] ? v : root_;
    }
    int head(std::size_t a) const {
        if (a < num_real_) return static_cast<int>(n_ + a % m_);
        const int v = static_cast<int>(a - num_real_);
        return art_to_root_[v] ? root_ : v;
    }
    double arc_cost(std::size_t a) const { return a < num_real_ ? cost_.a[a] : art_cost_; }

    void init_basis() {
        const std::size_t num_arcs = num_real_ + n_ + m_;
        flow_.assign(num_arcs, 0.0);
        in_tree_.assign(num_arcs, false);
        tree_pos_.assign(num_arcs, -1);
        tree_arcs_.clear();
        art_to_root_.assign(n_ + m_, true);

        // sources keep their supply on node->root arcs, sinks pull demand
        // through root->node arcs
        for (std::size_t i = 0; i < n_; ++i) {
            art_to_root_[i] = true;
            add_tree_arc(num_real_ + i);
            flow_[num_real_ + i] = p_[i];
        }
        for (std::size_t j = 0; j < m_; ++j) {
            art_to_root_[n_ + j] = false;
            add_tree_arc(num_real_ + n_ + j);
            flow_[num_real_ + n_ + j] = q_[j];
        }
        rebuild_tree();
        cursor_ = 0;
    }

    void add_tree_arc(std::size_t a) {
        in_tree_[a] = true;
        tree_pos_[a] = static_cast<int>(tree_arcs_.size());
        tree_arcs_.push_back(a);
    }

    void remove_tree_arc(std::size_t a) {
        const int pos = tree_pos_[a];
        const std::size_t last = tree_arcs_.back();
        tree_arcs_[pos] = last;
        tree_pos_[last] = pos;
        tree_arcs_.pop_back();
        tree_pos_[a] = -1;
        in_tree_[a] = false;
    }

    // BFS from the root over the basis arcs: parents, depths, potentials.
    void rebuild_tree() {
        adj_offset_.assign(num_nodes_ + 1, 0);
        for (std::size_t a : tree_arcs_) {
            ++adj_offset_[tail(a) + 1];
            ++adj_offset_[head(a) + 1];
        }
        for (int v = 0; v < num_nodes_; ++v) adj_offset_[v + 1] += adj_offset_[v];
        adj_arcs_.assign(adj_offset_[num_nodes_], 0);
        std::vector<int> fill(adj_offset_.begin(), adj_offset_.end() - 1);
        for (std::size_t a : tree_arcs_) {
            adj_arcs_[fill[tail(a)]++] = a;
            adj_arcs_[fill[head(a)]++] = a;
        }

        parent_.assign(num_nodes_, -1);
        pred_arc_.assign(num_nodes_, SIZE_MAX);
        depth_.assign(num_nodes_, 0);
        pi_.assign(num_nodes_, 0.0);

        bfs_queue_.clear();
        bfs_queue_.push_back(root_);
        parent_[root_] = root_;
        std::size_t qi = 0;
        while (qi < bfs_queue_.size()) {
            const int w = bfs_queue_[qi++];
            for (int s = adj_offset_[w]; s < adj_offset_[w + 1]; ++s) {
                const std::size_t a = adj_arcs_[s];
                const int u = tail(a) == w ? head(a) : tail(a);
                if (parent_[u] >= 0) continue;
                parent_[u] = w;
                pred_arc_[u] = a;
                depth_[u] = depth_[w] + 1;
                // basic arcs have zero reduced cost: c + pi[tail] - pi[head] = 0
                pi_[u] = tail(a) == u ? pi_[w] - arc_cost(a) : pi_[w] + arc_cost(a);
                bfs_queue_.push_back(u);
            }
        }
    }

    // Block pricing over real arcs; returns the most negative reduced cost in
    // the first block that contains one, -1 when dual-feasible everywhere.
    int find_entering() {
        const std::size_t block =
            std::max<std::size_t>(64, static_cast<std::size_t>(std::sqrt(static_cast<double>(num_real_))));
        double best = -rc_eps_;
        int best_arc = -1;
        std::size_t in_block = 0;
        for (std::size_t scanned = 0; scanned < num_real_; ++scanned) {
            const std::size_t a = cursor_;
            cursor_ = cursor_ + 1 == num_real_ ? 0 : cursor_ + 1;
            const double rc = cost_.a[a] + pi_[a / m_] - pi_[n_ + a % m_];
            if (rc < best) {
                best = rc;
                best_arc = static_cast<int>(a);
            }
            if (++in_block == block) {
                if (best_arc >= 0) return best_arc;
                in_block = 0;
            }
        }
        return best_arc;
    }

    void pivot(int a_in) {
        const int first = tail(a_in);
        const int second = head(a_in);

        // lowest common ancestor of the two endpoints
        int u = first, v = second;
        while (depth_[u] > depth_[v]) u = parent_[u];
        while (depth_[v] > depth_[u]) v = parent_[v];
        while (u != v) {
            u = parent_[u];
            v = parent_[v];
        }
        const int join = u;

        // Leaving arc: minimum residual around the cycle. The asymmetric
        // comparisons (strict on the first leg, non-strict on the second)
        // keep the spanning tree strongly feasible.
        double delta = std::numeric_limits<double>::infinity();
        std::size_t a_out = SIZE_MAX;
        for (int x = first; x != join; x = parent_[x]) {
            const std::size_t e = pred_arc_[x];
            if (tail(e) == x) {  // forward arcs on the first leg lose flow
                if (flow_[e] < delta) {
                    delta = flow_[e];
                    a_out = e;
                }
            }
        }
        for (int x = second; x != join; x = parent_[x]) {
            const std::size_t e = pred_arc_[x];
            if (tail(e) != x) {  // backward arcs on the second leg lose flow
                if (flow_[e] <= delta) {
                    delta = flow_[e];
                    a_out = e;
                }
            }
        }
        if (a_out == SIZE_MAX)
            throw std::runtime_error("transportation simplex: unbounded pivot");

        if (delta > 0.0) {
            flow_[a_in] += delta;
            for (int x = first; x != join; x = parent_[x]) {
                const std::size_t e = pred_arc_[x];
                flow_[e] += tail(e) == x ? -delta : delta;
                if (flow_[e] < 0.0) flow_[e] = 0.0;
            }
            for (int x = second; x != join; x = parent_[x]) {
                const std::size_t e = pred_arc_[x];
                flow_[e] += tail(e) == x ? delta : -delta;
                if (flow_[e] < 0.0) flow_[e] = 0.0;
            }
        }
        flow_[a_out] = 0.0;

        remove_tree_arc(a_out);
        add_tree_arc(static_cast<std::size_t>(a_in));
        rebuild_tree();
    }

    const std::vector<double>& p_;
    const std::vector<double>& q_;
    const Matrix& cost_;
    std::size_t n_, m_, num_real_;
    int num_nodes_ = 0, root_ = 0;
    double max_cost_ = 0.0, art_cost_ = 0.0, rc_eps_ = 0.0;

    std::vector<double> flow_;
    std::vector<bool> in_tree_;
    std::vector<int> tree_pos_;
    std::vector<std::size_t> tree_arcs_;
    std::vector<bool> art_to_root_;

    std::vector<int> adj_offset_, parent_, depth_;
    std::vector<std::size_t> adj_arcs_, pred_arc_;
    std::vector<int> bfs_queue_;
    std::vector<double> pi_;
    std::size_t cursor_ = 0;
};

}  // namespace detail

// Exact W1 between the discrete distributions: min <C, M> over couplings with
// row sums p and column sums q. Zero-mass bins are kept. The returned duals
// certify optimality: u_i + v_j <= C_ij and sum u.p + sum v.q = objective.
inline TransportPlan solve_lp(const TransportProblem& tp) {
    validate_transport_problem(tp, "solve_lp");
    const std::size_t n = tp.p.size();

    // equalize the marginal totals (differences up to 1e-6 were accepted above)
    std::vector<double> q = tp.q;
    const double sp = compensated_total(tp.p);
    const double sq = compensated_total(tp.q);
    if (sq > 0.0 && sp != sq) {
        const double scale = sp / sq;
        for (double& v : q) v *= scale;
    }

    detail::TransportationSimplex simplex(tp.p, q, tp.cost);
    simplex.run();

    TransportPlan plan;
    plan.plan = simplex.extract_plan();
    plan.objective = simplex.objective();
    plan.dual_u = simplex.dual_u();
    plan.dual_v = simplex.dual_v();
    plan.converged = true;

    double viol = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0, col = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            row += plan.plan(i, j);
            col += plan.plan(j, i);
        }
        viol = std::max(viol, std::abs(row - tp.p[i]));
        viol = std::max(viol, std::abs(col - q[i]));
    }
    plan.marginal_violation = viol;
    return plan;
}

namespace detail {

struct SinkhornCore {
    // restricted problem: support bins only
    std::vector<std::size_t> ip, iq;
    std::vector<double> p, q;
    Matrix cost;
};

inline SinkhornCore restrict_support(const TransportProblem& tp, const std::vector<double>& qbal) {
    SinkhornCore core;
    for (std::size_t i = 0; i < tp.p.size(); ++i)
        if (tp.p[i] > 0.0) core.ip.push_back(i);
    for (std::size_t j = 0; j < qbal.size(); ++j)
        if (qbal[j] > 0.0) core.iq.push_back(j);
    core.p.reserve(core.ip.size());
    core.q.reserve(core.iq.size());
    for (std::size_t i : core.ip) core.p.push_back(tp.p[i]);
    for (std::size_t j : core.iq) core.q.push_back(qbal[j]);
    core.cost = Matrix(core.ip.size(), core.iq.size());
    for (std::size_t a = 0; a < core.ip.size(); ++a)
        for (std::size_t b = 0; b < core.iq.size(); ++b)
            core.cost(a, b) = tp.cost(core.ip[a], core.iq[b]);
    return core;
}

}  // namespace detail

// Entropy-regularized transport by alternating diagonal scaling of the kernel
// exp(-lambda C). Plain matrix scaling is used while the kernel cannot
// underflow; otherwise the same fixed point is computed in the log domain
// (potentials phi, psi with M = exp(lambda(phi_i + psi_j - C_ij)), updated by
// log-sum-exp sweeps and warm-started through an increasing lambda schedule).
// Zero-mass bins are removed before scaling and restored as zero plan
// rows/columns. Reported objective is <C, M> without the entropy term.
inline TransportPlan sinkhorn(const TransportProblem& tp, double lambda, double tol = 1e-9,
                              std::size_t max_iter = 100000) {
    validate_transport_problem(tp, "sinkhorn");
    if (!(lambda > 0.0)) throw ParameterError("sinkhorn: lambda must be > 0");
    if (!(tol > 0.0)) throw ParameterError("sinkhorn: tol must be > 0");

    std::vector<double> qbal = tp.q;
    const double sp = compensated_total(tp.p);
    const double sq = compensated_total(tp.q);
    if (sq > 0.0 && sp != sq) {
        const double scale = sp / sq;
        for (double& v : qbal) v *= scale;
    }

    detail::SinkhornCore core = detail::restrict_support(tp, qbal);
    const std::size_t n = core.p.size(), m = core.q.size();
    if (n == 0 || m == 0) throw ParameterError("sinkhorn: a marginal has empty support");

    double max_cost = 0.0;
    for (double c : core.cost.a) max_cost = std::max(max_cost, c);

    std::vector<double> phi(n, 0.0), psi(m, 0.0);
    std::size_t iterations = 0;
    double violation = std::numeric_limits<double>::infinity();
    bool converged = false;

    // plain u/v scaling while exp(-lambda C) cannot underflow
    bool need_log_domain = !(lambda * max_cost < 700.0);
    if (!need_log_domain) {
        Matrix kern(n, m);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) kern(i, j) = std::exp(-lambda * core.cost(i, j));
        std::vector<double> u(n, 1.0), v(m, 1.0), kv(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < m; ++j) s += kern(i, j);
            kv[i] = s;
        }
        bool blew_up = false;
        while (iterations < max_iter) {
            ++iterations;
            for (std::size_t i = 0; i < n; ++i) u[i] = core.p[i] / kv[i];
            for (std::size_t j = 0; j < m; ++j) {
                double s = 0.0;
                for (std::size_t i = 0; i < n; ++i) s += kern(i, j) * u[i];
                v[j] = core.q[j] / s;
            }
            // columns are exact after the v sweep; rows carry the residual
            violation = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double s = 0.0;
                for (std::size_t j = 0; j < m; ++j) s += kern(i, j) * v[j];
                kv[i] = s;
                violation = std::max(violation, std::abs(u[i] * s - core.p[i]));
            }
            if (!std::isfinite(violation)) {
                blew_up = true;
                break;
            }
            if (violation <= tol) {
                converged = true;
                break;
            }
        }
        if (blew_up) {
            need_log_domain = true;  // restart stabilized
            iterations = 0;
            violation = std::numeric_limits<double>::infinity();
        } else {
            for (std::size_t i = 0; i < n; ++i) phi[i] = std::log(u[i]) / lambda;
            for (std::size_t j = 0; j < m; ++j) psi[j] = std::log(v[j]) / lambda;
        }
    }

    if (need_log_domain) {
        // Log-sum-exp sweeps. Plain sweeps are globally stable but crawl when
        // lambda * cost is large, so the final level switches to overrelaxed
        // sweeps (omega = 1.8) once the iterate has settled near its fixed
        // point, where the relaxation is locally contractive for omega < 2.
        // Far from the fixed point the overrelaxation can run away; a patient
        // guard abandons the attempt and a second attempt restarts cold at
        // the target lambda, which handles warm starts that land in a bad
        // basin. Warm levels (lambda / 4^s) use plain sweeps only.
        std::vector<double> logp(n), logq(m);
        for (std::size_t i = 0; i < n; ++i) logp[i] = std::log(core.p[i]);
        for (std::size_t j = 0; j < m; ++j) logq[j] = std::log(core.q[j]);
        const double max_q = *std::max_element(core.q.begin(), core.q.end());
        const double warm_tol = std::max(10.0 * tol, 0.01 * max_q);
        const double settle_tol = 0.05 * max_q;
        const double mass = compensated_total(core.p);
        const double omega = 1.8;

        // one phi+psi sweep; returns the pre-update column violation
        auto sweep = [&](double lam, double relax) {
            for (std::size_t i = 0; i < n; ++i) {
                double mx = -std::numeric_limits<double>::infinity();
                for (std::size_t j = 0; j < m; ++j)
                    mx = std::max(mx, lam * (psi[j] - core.cost(i, j)));
                double s = 0.0;
                for (std::size_t j = 0; j < m; ++j)
                    s += std::exp(lam * (psi[j] - core.cost(i, j)) - mx);
                const double target = (logp[i] - (mx + std::log(s))) / lam;
                phi[i] += relax * (target - phi[i]);
            }
            double viol = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                double mx = -std::numeric_limits<double>::infinity();
                for (std::size_t i = 0; i < n; ++i)
                    mx = std::max(mx, lam * (phi[i] - core.cost(i, j)));
                double s = 0.0;
                for (std::size_t i = 0; i < n; ++i)
                    s += std::exp(lam * (phi[i] - core.cost(i, j)) - mx);
                const double lse = mx + std::log(s);
                viol = std::max(viol, std::abs(std::exp(lam * psi[j] + lse) - core.q[j]));
                psi[j] += relax * ((logq[j] - lse) / lam - psi[j]);
            }
            return viol;
        };

        iterations = 0;
        bool want_cold_restart = false;
        for (int attempt = 0; attempt < 2 && !converged && iterations < max_iter; ++attempt) {
            if (attempt == 1 && !want_cold_restart) break;
            std::fill(phi.begin(), phi.end(), 0.0);
            std::fill(psi.begin(), psi.end(), 0.0);
            const std::size_t attempt_budget = max_iter;

            std::vector<double> levels{lambda};
            if (attempt == 0 && max_cost > 0.0) {
                double l = lambda;
                while (l * max_cost > 40.0 && levels.size() < 16) {
                    l /= 4.0;
                    levels.push_back(l);
                }
                std::reverse(levels.begin(), levels.end());
            }

            for (std::size_t level = 0; level < levels.size() && !converged; ++level) {
                const double lam = levels[level];
                const bool final_level = level + 1 == levels.size();
                const std::size_t budget =
                    final_level ? attempt_budget : std::min<std::size_t>(2000, attempt_budget);
                bool settled = false;
                std::size_t runaway_streak = 0;
                bool abandoned = false;
                for (std::size_t it = 0; it < budget && iterations < attempt_budget; ++it) {
                    ++iterations;
                    const bool relax_now = final_level && settled;
                    violation = sweep(lam, relax_now ? omega : 1.0);
                    if (violation <= settle_tol) settled = true;
                    if (relax_now && !(violation <= 1e3 * std::max(mass, 1.0))) {
                        if (++runaway_streak > 300) {
                            abandoned = true;
                            want_cold_restart = true;
                            break;
                        }
                    } else {
                        runaway_streak = 0;
                    }
                    if (final_level && violation <= tol) {
                        converged = true;
                        break;
                    }
                    if (!final_level && violation <= warm_tol) break;
                }
                if (abandoned) break;
            }
        }
        // one plain sweep so the reported plan is a clean fixed-point iterate
        if (converged) violation = sweep(lambda, 1.0);
    }

    // assemble the plan on the full index set
    const std::size_t full = tp.p.size();
    TransportPlan out;
    out.plan = Matrix(full, full);
    CompensatedSum obj;
    double viol = 0.0;
    std::vector<double> row_sum(n, 0.0), col_sum(m, 0.0);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < m; ++b) {
            const double mass = std::exp(lambda * (phi[a] + psi[b] - core.cost(a, b)));
            out.plan(core.ip[a], core.iq[b]) = mass;
            obj.add(mass * core.cost(a, b));
            row_sum[a] += mass;
            col_sum[b] += mass;
        }
    }
    for (std::size_t a = 0; a < n; ++a) viol = std::max(viol, std::abs(row_sum[a] - core.p[a]));
    for (std::size_t b = 0; b < m; ++b) viol = std::max(viol, std::abs(col_sum[b] - core.q[b]));
    out.objective = obj.value();
    out.iterations = iterations;
    out.marginal_violation = viol;
    out.converged = converged;
    return out;
}

// CSV triplets (i, j, mass), nonzero entries only.
inline void dump_plan_csv(const TransportPlan& plan, std::ostream& os) {
    os << "i,j,mass\n";
    for (std::size_t i = 0; i < plan.plan.rows; ++i)
        for (std::size_t j = 0; j < plan.plan.cols; ++j)
            if (plan.plan(i, j) != 0.0) os << i << ',' << j << ',' << plan.plan(i, j) << '\n';
}

}  // namespace leakest

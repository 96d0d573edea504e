#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "leakest/common.hpp"
#include "leakest/rng.hpp"

namespace leakest {

struct KnnConfig {
    std::size_t k = 1;
    double jitter = 0.0;  // half-width of the uniform tie-breaking perturbation, 0 = off
    std::uint64_t jitter_seed = 0;
};

// Exact nearest-neighbor search switches from the k-d tree to brute force
// above this dimension.
inline constexpr std::size_t kKdTreeMaxDim = 10;

namespace detail {

// (squared distance, point index), ordered lexicographically so distance ties
// resolve to the lower index on both search paths.
struct Neighbor {
    double d2;
    std::size_t idx;
    bool operator<(const Neighbor& o) const {
        return d2 < o.d2 || (d2 == o.d2 && idx < o.idx);
    }
};

// Fixed-capacity list of the k best neighbors seen so far. k stays small
// (tens), so insertion into a sorted array beats a heap.
class NeighborList {
  public:
    explicit NeighborList(std::size_t k) : cap_(k) { items_.reserve(k); }

    bool full() const { return items_.size() == cap_; }
    double worst_d2() const {
        return full() ? items_.back().d2 : std::numeric_limits<double>::infinity();
    }

    void offer(Neighbor nb) {
        if (full()) {
            if (!(nb < items_.back())) return;
            items_.pop_back();
        }
        auto pos = std::upper_bound(items_.begin(), items_.end(), nb);
        items_.insert(pos, nb);
    }

    const std::vector<Neighbor>& sorted() const { return items_; }

  private:
    std::size_t cap_;
    std::vector<Neighbor> items_;
};

class KdTree {
  public:
    KdTree(const SampleMatrix& pts, std::size_t leaf_size = 16)
        : pts_(pts), leaf_size_(leaf_size) {
        order_.resize(pts.n);
        for (std::size_t i = 0; i < pts.n; ++i) order_[i] = i;
        nodes_.reserve(2 * pts.n / leaf_size_ + 2);
        root_ = build(0, pts.n);
    }

    // k nearest neighbors of pt, excluding the point index `exclude`
    // (SIZE_MAX for none), sorted ascending by (distance, index).
    std::vector<Neighbor> query(const double* pt, std::size_t k, std::size_t exclude) const {
        NeighborList best(k);
        search(root_, pt, exclude, best);
        return best.sorted();
    }

  private:
    struct Node {
        std::size_t split_dim = 0;
        double split_val = 0.0;
        int left = -1, right = -1;
        std::size_t begin = 0, end = 0;  // leaf range into order_
        bool leaf = false;
    };

    int build(std::size_t begin, std::size_t end) {
        Node node;
        if (end - begin <= leaf_size_) {
            node.leaf = true;
            node.begin = begin;
            node.end = end;
            nodes_.push_back(node);
            return static_cast<int>(nodes_.size() - 1);
        }
        // split the widest dimension at its median
        std::size_t dim = 0;
        double widest = -1.0;
        for (std::size_t j = 0; j < pts_.d; ++j) {
            double lo = pts_(order_[begin], j), hi = lo;
            for (std::size_t i = begin; i < end; ++i) {
                const double v = pts_(order_[i], j);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            if (hi - lo > widest) {
                widest = hi - lo;
                dim = j;
            }
        }
        const std::size_t mid = begin + (end - begin) / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                         [&](std::size_t a, std::size_t b) {
                             const double va = pts_(a, dim), vb = pts_(b, dim);
                             return va < vb || (va == vb && a < b);
                         });
        node.split_dim = dim;
        node.split_val = pts_(order_[mid], dim);
        nodes_.push_back(node);
        const int id = static_cast<int>(nodes_.size() - 1);
        const int l = build(begin, mid);
        const int r = build(mid, end);
        nodes_[id].left = l;
        nodes_[id].right = r;
        return id;
    }

    void search(int id, const double* pt, std::size_t exclude, NeighborList& best) const {
        const Node& node = nodes_[id];
        if (node.leaf) {
            for (std::size_t s = node.begin; s < node.end; ++s) {
                const std::size_t i = order_[s];
                if (i == exclude) continue;
                double d2 = 0.0;
                const double* row = pts_.row(i);
                for (std::size_t j = 0; j < pts_.d; ++j) {
                    const double diff = pt[j] - row[j];
                    d2 += diff * diff;
                }
                best.offer({d2, i});
            }
            return;
        }
        const double delta = pt[node.split_dim] - node.split_val;
        const int near = delta < 0.0 ? node.left : node.right;
        const int far = delta < 0.0 ? node.right : node.left;
        search(near, pt, exclude, best);
        // explore the far side on plane-distance ties: an equal-distance
        // neighbor with a lower index still displaces the current worst
        if (delta * delta <= best.worst_d2() || !best.full()) search(far, pt, exclude, best);
    }

    const SampleMatrix& pts_;
    std::size_t leaf_size_;
    std::vector<std::size_t> order_;
    std::vector<Node> nodes_;
    int root_;
};

inline std::vector<Neighbor> knn_bruteforce(const SampleMatrix& pts, const double* pt,
                                            std::size_t k, std::size_t exclude) {
    NeighborList best(k);
    for (std::size_t i = 0; i < pts.n; ++i) {
        if (i == exclude) continue;
        double d2 = 0.0;
        const double* row = pts.row(i);
        for (std::size_t j = 0; j < pts.d; ++j) {
            const double diff = pt[j] - row[j];
            d2 += diff * diff;
        }
        best.offer({d2, i});
    }
    return best.sorted();
}

inline SampleMatrix apply_jitter(const SampleMatrix& s, double jitter, std::uint64_t seed) {
    SampleMatrix out = s;
    SplitMix64 gen(seed);
    for (double& v : out.data) v += jitter * (2.0 * gen.next_uniform01() - 1.0);
    return out;
}

}  // namespace detail

// KL divergence from samples via k-th nearest-neighbor distances:
//   (d / N) sum_i ln(s_k(x_i) / r_k(x_i)) + ln(N / (N - 1)),
// r_k the k-th neighbor distance within x (self excluded), s_k the k-th
// neighbor distance into y. One estimate per requested k, sharing the
// neighbor searches. Requires equal sample counts; exact duplicates are an
// error unless a jitter is configured.
inline std::vector<double> kl_knn_multi(const SampleMatrix& x_in, const SampleMatrix& y_in,
                                        const std::vector<std::size_t>& ks,
                                        double jitter = 0.0, std::uint64_t jitter_seed = 0) {
    validate_samples(x_in, "kl_knn(x)");
    validate_samples(y_in, "kl_knn(y)");
    if (x_in.d != y_in.d) throw ParameterError("kl_knn: dimension mismatch");
    if (x_in.n != y_in.n)
        throw ParameterError("kl_knn: the estimator requires equally sized sample sets");
    if (ks.empty()) throw ParameterError("kl_knn: no k values given");
    std::size_t kmax = 0;
    for (std::size_t k : ks) {
        if (k < 1) throw ParameterError("kl_knn: k must be >= 1");
        kmax = std::max(kmax, k);
    }
    const std::size_t n = x_in.n;
    const double d = static_cast<double>(x_in.d);
    if (kmax >= n) throw ParameterError("kl_knn: k must be < N");

    SampleMatrix x = jitter > 0.0 ? detail::apply_jitter(x_in, jitter, derive_seed(jitter_seed, 1)) : x_in;
    SampleMatrix y = jitter > 0.0 ? detail::apply_jitter(y_in, jitter, derive_seed(jitter_seed, 2)) : y_in;

    const bool use_tree = x.d <= kKdTreeMaxDim;
    std::vector<CompensatedSum> acc(ks.size());

    auto run = [&](auto&& query_x, auto&& query_y) {
        for (std::size_t i = 0; i < n; ++i) {
            const std::vector<detail::Neighbor> rs = query_x(x.row(i), i);
            const std::vector<detail::Neighbor> ss = query_y(x.row(i), SIZE_MAX);
            for (std::size_t t = 0; t < ks.size(); ++t) {
                const double r2 = rs[ks[t] - 1].d2;
                const double s2 = ss[ks[t] - 1].d2;
                if (r2 == 0.0)
                    throw DegenerateInputError("kl_knn: duplicate sample in x at row " +
                                               std::to_string(i));
                if (s2 == 0.0)
                    throw DegenerateInputError("kl_knn: sample x row " + std::to_string(i) +
                                               " duplicates a y sample");
                acc[t].add(0.5 * std::log(s2 / r2));
            }
        }
    };

    if (use_tree) {
        detail::KdTree tx(x), ty(y);
        run([&](const double* p, std::size_t ex) { return tx.query(p, kmax, ex); },
            [&](const double* p, std::size_t ex) { return ty.query(p, kmax, ex); });
    } else {
        run([&](const double* p, std::size_t ex) { return detail::knn_bruteforce(x, p, kmax, ex); },
            [&](const double* p, std::size_t ex) { return detail::knn_bruteforce(y, p, kmax, ex); });
    }

    const double bias = std::log(static_cast<double>(n) / static_cast<double>(n - 1));
    std::vector<double> out(ks.size());
    for (std::size_t t = 0; t < ks.size(); ++t)
        out[t] = (d / static_cast<double>(n)) * acc[t].value() + bias;
    return out;
}

inline double kl_knn(const SampleMatrix& x, const SampleMatrix& y, const KnnConfig& cfg) {
    return kl_knn_multi(x, y, {cfg.k}, cfg.jitter, cfg.jitter_seed)[0];
}

}  // namespace leakest

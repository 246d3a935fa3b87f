#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "anchor/domain/errors.hpp"
#include "anchor/structuring/backends.hpp"

namespace anchor::structuring {
namespace {

struct Edge {
    std::size_t a;
    std::size_t b;
    double w;
};

struct TreeNode {
    double birth = 0.0;
    double stability = 0.0;
    std::vector<std::size_t> shed;  // points that fell out of this cluster
    std::vector<std::size_t> children;
};

class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
    std::size_t find(std::size_t x) {
        while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
        return x;
    }
    void unite(std::size_t a, std::size_t b) { parent_[find(a)] = find(b); }

private:
    std::vector<std::size_t> parent_;
};

double lambda_of(double w) { return 1.0 / std::max(w, 1e-12); }

std::vector<Edge> minimum_spanning_tree(const std::vector<std::vector<double>>& dist) {
    const std::size_t n = dist.size();
    std::vector<bool> in_tree(n, false);
    std::vector<double> best(n, std::numeric_limits<double>::infinity());
    std::vector<std::size_t> from(n, 0);
    std::vector<Edge> edges;
    best[0] = 0.0;
    for (std::size_t step = 0; step < n; ++step) {
        std::size_t u = n;
        for (std::size_t v = 0; v < n; ++v) {
            if (!in_tree[v] && (u == n || best[v] < best[u])) u = v;
        }
        in_tree[u] = true;
        if (step > 0) edges.push_back({from[u], u, best[u]});
        for (std::size_t v = 0; v < n; ++v) {
            if (!in_tree[v] && dist[u][v] < best[v]) {
                best[v] = dist[u][v];
                from[v] = u;
            }
        }
    }
    return edges;
}

class CondensedTree {
public:
    CondensedTree(std::size_t n, std::size_t min_size) : n_(n), min_size_(min_size) {}

    void build(std::vector<std::size_t> vertices, std::vector<Edge> edges) {
        nodes_.push_back({});
        grow(0, std::move(vertices), std::move(edges));
    }

    std::vector<std::vector<std::size_t>> select() {
        std::vector<std::vector<std::size_t>> out;
        selected_.assign(nodes_.size(), false);
        for (std::size_t child : nodes_[0].children) {
            choose(child);
            collect_selected(child, out);
        }
        return out;
    }

private:
    void grow(std::size_t node, std::vector<std::size_t> vertices, std::vector<Edge> edges) {
        while (!edges.empty()) {
            double top = 0.0;
            for (const auto& e : edges) top = std::max(top, e.w);
            const double lambda = lambda_of(top);
            const double tie = top * (1.0 - 1e-9);

            std::vector<Edge> kept;
            for (const auto& e : edges) {
                if (e.w < tie) kept.push_back(e);
            }
            UnionFind parts(n_);
            for (const auto& e : kept) parts.unite(e.a, e.b);

            std::vector<std::vector<std::size_t>> groups;
            std::vector<std::size_t> root_index(n_, n_);
            for (std::size_t v : vertices) {
                const auto r = parts.find(v);
                if (root_index[r] == n_) {
                    root_index[r] = groups.size();
                    groups.emplace_back();
                }
                groups[root_index[r]].push_back(v);
            }

            std::vector<std::size_t> big;
            for (std::size_t g = 0; g < groups.size(); ++g) {
                const double leaving = static_cast<double>(groups[g].size()) * (lambda - nodes_[node].birth);
                if (groups[g].size() >= min_size_) {
                    big.push_back(g);
                } else {
                    nodes_[node].stability += leaving;
                    nodes_[node].shed.insert(nodes_[node].shed.end(), groups[g].begin(), groups[g].end());
                }
            }

            if (big.size() >= 2) {
                for (std::size_t g : big) {
                    nodes_[node].stability += static_cast<double>(groups[g].size()) * (lambda - nodes_[node].birth);
                    const std::size_t child = nodes_.size();
                    nodes_.push_back({});
                    nodes_[child].birth = lambda;
                    nodes_[node].children.push_back(child);
                    std::vector<Edge> child_edges;
                    const auto r = parts.find(groups[g].front());
                    for (const auto& e : kept) {
                        if (parts.find(e.a) == r) child_edges.push_back(e);
                    }
                    grow(child, groups[g], std::move(child_edges));
                }
                return;
            }
            if (big.empty()) return;

            vertices = groups[big.front()];
            const auto r = parts.find(vertices.front());
            std::vector<Edge> next;
            for (const auto& e : kept) {
                if (parts.find(e.a) == r) next.push_back(e);
            }
            edges = std::move(next);
        }
    }

    // Excess of mass: returns the best achievable stability under `node`.
    double choose(std::size_t node) {
        double children_total = 0.0;
        for (std::size_t c : nodes_[node].children) children_total += choose(c);
        if (nodes_[node].children.empty() || nodes_[node].stability >= children_total) {
            selected_[node] = true;
            return nodes_[node].stability;
        }
        return children_total;
    }

    void collect_selected(std::size_t node, std::vector<std::vector<std::size_t>>& out) {
        if (selected_[node]) {
            std::vector<std::size_t> members;
            gather(node, members);
            std::sort(members.begin(), members.end());
            out.push_back(std::move(members));
            return;
        }
        for (std::size_t c : nodes_[node].children) collect_selected(c, out);
    }

    void gather(std::size_t node, std::vector<std::size_t>& members) const {
        members.insert(members.end(), nodes_[node].shed.begin(), nodes_[node].shed.end());
        for (std::size_t c : nodes_[node].children) gather(c, members);
    }

    std::size_t n_;
    std::size_t min_size_;
    std::vector<TreeNode> nodes_;
    std::vector<bool> selected_;
};

}  // namespace

Clustering DensityClustering::cluster(const std::vector<Vector>& points, const ClusterParams& params) {
    const std::size_t n = points.size();
    if (n < 2) throw DomainError("clustering needs at least 2 points");
    if (params.min_cluster_size < 2) throw DomainError("min_cluster_size must be at least 2");
    const std::size_t dim = points.front().size();
    for (const auto& p : points) {
        if (p.size() != dim) throw BackendError("points differ in dimension");
        for (double c : p) {
            if (!std::isfinite(c)) throw BackendError("non-finite coordinate");
        }
    }

    std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < dim; ++k) {
                const double d = points[i][k] - points[j][k];
                s += d * d;
            }
            dist[i][j] = dist[j][i] = std::sqrt(s);
        }
    }

    const std::size_t min_samples = std::min<std::size_t>(static_cast<std::size_t>(params.min_cluster_size), n);
    std::vector<double> core(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> row = dist[i];
        std::nth_element(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(min_samples - 1), row.end());
        core[i] = row[min_samples - 1];
    }
    std::vector<std::vector<double>> reach(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j) reach[i][j] = std::max({core[i], core[j], dist[i][j]});
        }
    }

    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    CondensedTree tree(n, static_cast<std::size_t>(params.min_cluster_size));
    tree.build(all, minimum_spanning_tree(reach));

    Clustering result;
    result.clusters = tree.select();
    std::sort(result.clusters.begin(), result.clusters.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    std::vector<bool> taken(n, false);
    for (const auto& c : result.clusters) {
        for (std::size_t i : c) taken[i] = true;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!taken[i]) result.noise.push_back(i);
    }
    return result;
}

}  // namespace anchor::structuring

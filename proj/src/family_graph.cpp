#include "lineage/family_graph.hpp"

#include <algorithm>
#include <cassert>
#include <limits>
#include <numeric>
#include <utility>

#include "lineage/errors.hpp"

namespace lineage::graph {

namespace {

constexpr uint32_t kNone = std::numeric_limits<uint32_t>::max();

/// Iterative Tarjan; fills comp with SCC ids and returns the SCC count.
uint32_t strongly_connected_components(std::size_t n,
                                       const std::vector<std::vector<NodeIndex>>& succ,
                                       std::vector<uint32_t>& comp) {
    std::vector<uint32_t> index(n, kNone), low(n, 0);
    std::vector<bool> on_stack(n, false);
    std::vector<NodeIndex> stack;
    std::vector<std::pair<NodeIndex, std::size_t>> call;
    comp.assign(n, kNone);
    uint32_t next = 0, count = 0;

    for (NodeIndex s = 0; s < n; ++s) {
        if (index[s] != kNone) continue;
        call.emplace_back(s, 0);
        while (!call.empty()) {
            auto& [v, edge_i] = call.back();
            if (edge_i == 0) {
                index[v] = low[v] = next++;
                stack.push_back(v);
                on_stack[v] = true;
            }
            if (edge_i < succ[v].size()) {
                NodeIndex w = succ[v][edge_i++];
                if (index[w] == kNone) {
                    call.emplace_back(w, 0);
                } else if (on_stack[w]) {
                    low[v] = std::min(low[v], index[w]);
                }
            } else {
                uint32_t low_v = low[v];
                NodeIndex done = v;
                call.pop_back();
                if (!call.empty()) {
                    NodeIndex up = call.back().first;
                    low[up] = std::min(low[up], low_v);
                }
                if (low_v == index[done]) {
                    while (true) {
                        NodeIndex w = stack.back();
                        stack.pop_back();
                        on_stack[w] = false;
                        comp[w] = count;
                        if (w == done) break;
                    }
                    ++count;
                }
            }
        }
    }
    return count;
}

struct UnionFind {
    std::vector<NodeIndex> parent;

    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }

    NodeIndex find(NodeIndex x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }

    void unite(NodeIndex a, NodeIndex b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (a > b) std::swap(a, b); // keep the smaller index as the root
        parent[b] = a;
    }
};

} // namespace

// ---- NodeTable -------------------------------------------------------------

std::shared_ptr<const NodeTable> NodeTable::build(const RecordSet& records) {
    auto table = std::make_shared<NodeTable>();
    std::vector<std::string> parent_ids;
    for (const ModelRecord& r : records)
        for (const ParentRelation& rel : r.parent_relations) parent_ids.push_back(rel.parent_id);
    std::sort(parent_ids.begin(), parent_ids.end());
    parent_ids.erase(std::unique(parent_ids.begin(), parent_ids.end()), parent_ids.end());

    table->ids_.reserve(records.size() + parent_ids.size());
    table->external_.reserve(records.size() + parent_ids.size());
    auto pit = parent_ids.begin();
    for (const ModelRecord& r : records) {
        while (pit != parent_ids.end() && *pit < r.model_id) {
            table->ids_.push_back(std::move(*pit++));
            table->external_.push_back(true);
        }
        if (pit != parent_ids.end() && *pit == r.model_id) ++pit; // has a record
        table->ids_.push_back(r.model_id);
        table->external_.push_back(false);
    }
    while (pit != parent_ids.end()) {
        table->ids_.push_back(std::move(*pit++));
        table->external_.push_back(true);
    }
    table->external_count_ =
        static_cast<std::size_t>(std::count(table->external_.begin(), table->external_.end(), true));
    return table;
}

std::optional<NodeIndex> NodeTable::index_of(std::string_view model_id) const {
    auto it = std::lower_bound(ids_.begin(), ids_.end(), model_id);
    if (it == ids_.end() || *it != model_id) return std::nullopt;
    return static_cast<NodeIndex>(it - ids_.begin());
}

// ---- FamilyGraph -----------------------------------------------------------

FamilyGraph FamilyGraph::build(const RecordSet& records) {
    FamilyGraph g;
    g.nodes_ = NodeTable::build(records);
    const NodeTable& nodes = *g.nodes_;
    const std::size_t n = nodes.size();

    std::vector<Edge> edges;
    for (const ModelRecord& r : records) {
        NodeIndex child = *nodes.index_of(r.model_id);
        std::vector<std::pair<NodeIndex, RelationKind>> seen;
        for (const ParentRelation& rel : r.parent_relations) {
            NodeIndex parent = *nodes.index_of(rel.parent_id);
            if (parent == child) {
                ++g.report_.self_loops_dropped;
                g.report_.warnings.push_back("self-loop dropped: " + r.model_id + " (" +
                                             std::string(to_string(rel.kind)) + ")");
                continue;
            }
            if (std::find(seen.begin(), seen.end(), std::make_pair(parent, rel.kind)) != seen.end()) {
                ++g.report_.duplicate_edges_dropped;
                continue;
            }
            seen.emplace_back(parent, rel.kind);
            edges.push_back({parent, child, rel.kind});
        }
    }

    // Cycle repair, one relation kind at a time: while a kind's subgraph has
    // a nontrivial strongly connected component, drop the intra-component
    // edge with the smallest (child, parent) ids and try again.
    std::vector<bool> alive(edges.size(), true);
    for (int k = 0; k < kRelationKindCount; ++k) {
        RelationKind kind = static_cast<RelationKind>(k);
        while (true) {
            std::vector<std::vector<NodeIndex>> succ(n);
            for (std::size_t e = 0; e < edges.size(); ++e)
                if (alive[e] && edges[e].kind == kind) succ[edges[e].parent].push_back(edges[e].child);

            std::vector<uint32_t> comp;
            uint32_t comp_count = strongly_connected_components(n, succ, comp);
            std::vector<uint32_t> comp_size(comp_count, 0);
            for (NodeIndex v = 0; v < n; ++v) ++comp_size[comp[v]];

            std::size_t victim = edges.size();
            for (std::size_t e = 0; e < edges.size(); ++e) {
                if (!alive[e] || edges[e].kind != kind) continue;
                if (comp[edges[e].parent] != comp[edges[e].child]) continue;
                if (comp_size[comp[edges[e].child]] < 2) continue;
                if (victim == edges.size() ||
                    std::make_pair(edges[e].child, edges[e].parent) <
                        std::make_pair(edges[victim].child, edges[victim].parent)) {
                    victim = e;
                }
            }
            if (victim == edges.size()) break;
            alive[victim] = false;
            g.report_.repaired_edges.push_back(std::string(to_string(kind)) + ": " +
                                               nodes.id(edges[victim].parent) + " -> " +
                                               nodes.id(edges[victim].child));
        }
    }

    g.edges_.reserve(edges.size());
    for (std::size_t e = 0; e < edges.size(); ++e)
        if (alive[e]) g.edges_.push_back(edges[e]);

    for (int k = 0; k < kRelationKindCount; ++k) {
        RelationKind kind = static_cast<RelationKind>(k);
        auto build_adjacency = [&](bool forward) {
            Adjacency adj;
            adj.offsets.assign(n + 1, 0);
            for (const Edge& e : g.edges_)
                if (e.kind == kind) ++adj.offsets[(forward ? e.parent : e.child) + 1];
            std::partial_sum(adj.offsets.begin(), adj.offsets.end(), adj.offsets.begin());
            adj.targets.resize(adj.offsets.back());
            std::vector<uint32_t> cursor(adj.offsets.begin(), adj.offsets.end() - 1);
            for (const Edge& e : g.edges_) {
                if (e.kind != kind) continue;
                NodeIndex from = forward ? e.parent : e.child;
                adj.targets[cursor[from]++] = forward ? e.child : e.parent;
            }
            for (NodeIndex v = 0; v < n; ++v)
                std::sort(adj.targets.begin() + adj.offsets[v], adj.targets.begin() + adj.offsets[v + 1]);
            return adj;
        };
        g.succ_[k] = build_adjacency(true);
        g.pred_[k] = build_adjacency(false);
    }

    UnionFind uf(n);
    for (const Edge& e : g.edges_) uf.unite(e.parent, e.child);
    std::vector<std::vector<NodeIndex>> by_root(n);
    for (NodeIndex v = 0; v < n; ++v) by_root[uf.find(v)].push_back(v);
    for (NodeIndex v = 0; v < n; ++v)
        if (!by_root[v].empty()) g.components_.push_back(std::move(by_root[v]));

    return g;
}

std::span<const NodeIndex> FamilyGraph::successors(NodeIndex node, RelationKind kind) const {
    return succ_[static_cast<int>(kind)].neighbors(node);
}

std::span<const NodeIndex> FamilyGraph::predecessors(NodeIndex node, RelationKind kind) const {
    return pred_[static_cast<int>(kind)].neighbors(node);
}

std::size_t FamilyGraph::child_count(NodeIndex node) const {
    std::vector<NodeIndex> all;
    for (int k = 0; k < kRelationKindCount; ++k) {
        auto s = succ_[k].neighbors(node);
        all.insert(all.end(), s.begin(), s.end());
    }
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    return all.size();
}

// ---- FinetuneForest --------------------------------------------------------

FinetuneForest FinetuneForest::build(const FamilyGraph& graph) {
    FinetuneForest f;
    f.nodes_ = graph.nodes_ptr();
    const std::size_t n = f.nodes_->size();

    f.parent_.resize(n);
    std::iota(f.parent_.begin(), f.parent_.end(), 0); // parent == self marks a root
    for (const Edge& e : graph.edges()) {
        if (e.kind != RelationKind::finetune) continue;
        if (f.parent_[e.child] != e.child) {
            ++f.report_.extra_parents_dropped;
            f.report_.warnings.push_back("extra finetune parent dropped: " + f.nodes_->id(e.parent) +
                                         " -> " + f.nodes_->id(e.child));
            continue;
        }
        f.parent_[e.child] = e.parent;
    }

    f.child_offsets_.assign(n + 1, 0);
    for (NodeIndex v = 0; v < n; ++v)
        if (f.parent_[v] != v) ++f.child_offsets_[f.parent_[v] + 1];
    std::partial_sum(f.child_offsets_.begin(), f.child_offsets_.end(), f.child_offsets_.begin());
    f.child_list_.resize(f.child_offsets_.back());
    {
        std::vector<uint32_t> cursor(f.child_offsets_.begin(), f.child_offsets_.end() - 1);
        for (NodeIndex v = 0; v < n; ++v) // ascending fill keeps child lists sorted
            if (f.parent_[v] != v) f.child_list_[cursor[f.parent_[v]]++] = v;
    }

    f.root_of_.assign(n, 0);
    f.depth_.assign(n, 0);
    f.tree_size_.assign(n, 0);
    std::vector<NodeIndex> queue;
    for (NodeIndex r = 0; r < n; ++r) {
        if (f.parent_[r] != r) continue;
        f.roots_.push_back(r);
        queue.clear();
        queue.push_back(r);
        f.root_of_[r] = r;
        f.depth_[r] = 0;
        for (std::size_t head = 0; head < queue.size(); ++head) {
            NodeIndex v = queue[head];
            for (NodeIndex c : f.children(v)) {
                f.root_of_[c] = r;
                f.depth_[c] = f.depth_[v] + 1;
                queue.push_back(c);
            }
        }
        f.tree_size_[r] = static_cast<uint32_t>(queue.size());
    }
    return f;
}

std::optional<NodeIndex> FinetuneForest::parent(NodeIndex node) const {
    if (parent_[node] == node) return std::nullopt;
    return parent_[node];
}

std::span<const NodeIndex> FinetuneForest::children(NodeIndex node) const {
    return {child_list_.data() + child_offsets_[node], child_list_.data() + child_offsets_[node + 1]};
}

std::size_t FinetuneForest::n_succ(NodeIndex node) const {
    return child_offsets_[node + 1] - child_offsets_[node];
}

NodeIndex FinetuneForest::root_of(NodeIndex node) const { return root_of_[node]; }

std::size_t FinetuneForest::tree_size(NodeIndex node) const { return tree_size_[root_of_[node]]; }

std::size_t FinetuneForest::generation(NodeIndex node) const {
    if (node >= parent_.size())
        throw NotFoundError("node index " + std::to_string(node) + " is not in the forest");
    return depth_[node];
}

// ---- Tree statistics -------------------------------------------------------

double structural_virality(const FinetuneForest& forest, NodeIndex node) {
    NodeIndex root = forest.root_of(node);
    const std::size_t n = forest.tree_size(root);
    if (n < 2)
        throw UndefinedInputError("structural virality is undefined on a singleton tree (" +
                                  forest.nodes().id(root) + ")");

    std::vector<NodeIndex> order; // breadth-first from the root
    std::vector<uint32_t> parent_pos;
    order.reserve(n);
    parent_pos.reserve(n);
    order.push_back(root);
    parent_pos.push_back(0);
    for (std::size_t head = 0; head < order.size(); ++head) {
        for (NodeIndex c : forest.children(order[head])) {
            order.push_back(c);
            parent_pos.push_back(static_cast<uint32_t>(head));
        }
    }

    // Every pair's path crosses each edge exactly once if the edge separates
    // them, so the distance total is Σ over edges of subtree * (n - subtree).
    std::vector<uint64_t> subtree(order.size(), 1);
    uint64_t crossings = 0;
    for (std::size_t p = order.size() - 1; p > 0; --p) {
        crossings += subtree[p] * (n - subtree[p]);
        subtree[parent_pos[p]] += subtree[p];
    }
    double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
    return static_cast<double>(crossings) / pairs;
}

std::vector<TreeStats> depth_stats(const FinetuneForest& forest) {
    std::vector<TreeStats> stats;
    stats.reserve(forest.roots().size());
    for (NodeIndex root : forest.roots()) {
        TreeStats t;
        t.root = root;
        t.size = forest.tree_size(root);
        t.max_depth = 0;
        uint64_t depth_total = 0;
        std::vector<NodeIndex> queue{root};
        for (std::size_t head = 0; head < queue.size(); ++head) {
            NodeIndex v = queue[head];
            std::size_t d = forest.generation(v);
            t.max_depth = std::max(t.max_depth, d);
            depth_total += d;
            for (NodeIndex c : forest.children(v)) queue.push_back(c);
        }
        t.mean_depth = static_cast<double>(depth_total) / static_cast<double>(t.size);
        if (t.size >= 2) t.virality = structural_virality(forest, root);
        stats.push_back(std::move(t));
    }
    return stats;
}

std::vector<GrowthPoint> component_growth(const std::vector<NodeIndex>& members,
                                          const NodeTable& nodes, const RecordSet& records) {
    std::vector<std::pair<int64_t, bool>> creations;
    for (NodeIndex v : members) {
        if (nodes.external(v)) continue;
        const ModelRecord* r = records.find(nodes.id(v));
        if (r == nullptr) continue;
        creations.emplace_back(r->created_at, r->created_at_backfilled);
    }
    std::sort(creations.begin(), creations.end());

    std::vector<GrowthPoint> series;
    std::size_t count = 0;
    for (std::size_t i = 0; i < creations.size(); ++i) {
        ++count;
        bool last_at_time = i + 1 == creations.size() || creations[i + 1].first != creations[i].first;
        if (last_at_time) series.push_back({creations[i].first, count, creations[i].second});
    }
    return series;
}

} // namespace lineage::graph

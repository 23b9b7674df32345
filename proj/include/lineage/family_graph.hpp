#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lineage/record.hpp"

namespace lineage::graph {

using NodeIndex = uint32_t;

/// Id table shared by FamilyGraph and FinetuneForest. Nodes are the union of
/// snapshot model ids and every referenced parent id; indices follow sorted
/// id order. Parents with no record of their own are flagged external: they
/// participate in topology but carry no metadata.
class NodeTable {
public:
    static std::shared_ptr<const NodeTable> build(const RecordSet& records);

    std::size_t size() const { return ids_.size(); }
    const std::string& id(NodeIndex i) const { return ids_[i]; }
    bool external(NodeIndex i) const { return external_[i]; }
    std::size_t external_count() const { return external_count_; }
    std::optional<NodeIndex> index_of(std::string_view model_id) const;

private:
    std::vector<std::string> ids_; // sorted ascending
    std::vector<bool> external_;
    std::size_t external_count_ = 0;
};

struct Edge {
    NodeIndex parent;
    NodeIndex child;
    RelationKind kind;

    bool operator==(const Edge&) const = default;
};

struct GraphBuildReport {
    std::size_t self_loops_dropped = 0;
    std::size_t duplicate_edges_dropped = 0;
    std::vector<std::string> repaired_edges; // edges dropped to break cycles
    std::vector<std::string> warnings;
};

/// Typed lineage DAG over one snapshot. Immutable after build; queries are
/// safe to run concurrently.
class FamilyGraph {
public:
    static FamilyGraph build(const RecordSet& records);

    const NodeTable& nodes() const { return *nodes_; }
    std::shared_ptr<const NodeTable> nodes_ptr() const { return nodes_; }

    /// Surviving edges, grouped by child in id order with each child's
    /// parents in declaration order.
    const std::vector<Edge>& edges() const { return edges_; }

    std::span<const NodeIndex> successors(NodeIndex node, RelationKind kind) const;
    std::span<const NodeIndex> predecessors(NodeIndex node, RelationKind kind) const;

    /// Distinct children over all relation kinds; drives the
    /// top-models-by-child-count table.
    std::size_t child_count(NodeIndex node) const;

    /// Weakly connected components over every edge kind, each a sorted index
    /// list. Components are ordered by their smallest member, whose id names
    /// the component.
    const std::vector<std::vector<NodeIndex>>& components() const { return components_; }

    const GraphBuildReport& report() const { return report_; }

private:
    struct Adjacency {
        std::vector<uint32_t> offsets; // size() + 1 entries
        std::vector<NodeIndex> targets;

        std::span<const NodeIndex> neighbors(NodeIndex u) const {
            return {targets.data() + offsets[u], targets.data() + offsets[u + 1]};
        }
    };

    std::shared_ptr<const NodeTable> nodes_;
    std::vector<Edge> edges_;
    Adjacency succ_[kRelationKindCount];
    Adjacency pred_[kRelationKindCount];
    std::vector<std::vector<NodeIndex>> components_;
    GraphBuildReport report_;
};

struct ForestBuildReport {
    std::size_t extra_parents_dropped = 0;
    std::vector<std::string> warnings;
};

struct TreeStats {
    NodeIndex root;
    std::size_t size;
    std::size_t max_depth;
    double mean_depth;
    std::optional<double> virality; // absent for singletons
};

/// The finetune-only restriction of a FamilyGraph where each child keeps its
/// first-declared surviving parent. Every node of the graph appears here;
/// nodes without a kept parent are roots, so the structure is a disjoint
/// union of rooted trees.
class FinetuneForest {
public:
    static FinetuneForest build(const FamilyGraph& graph);

    const NodeTable& nodes() const { return *nodes_; }
    std::shared_ptr<const NodeTable> nodes_ptr() const { return nodes_; }

    std::size_t size() const { return parent_.size(); }
    std::optional<NodeIndex> parent(NodeIndex node) const;
    std::span<const NodeIndex> children(NodeIndex node) const; // ascending
    std::size_t n_succ(NodeIndex node) const;
    const std::vector<NodeIndex>& roots() const { return roots_; } // ascending

    NodeIndex root_of(NodeIndex node) const;
    std::size_t tree_size(NodeIndex node) const; // size of the node's tree

    /// Depth below the tree root. Throws NotFoundError for an out-of-range
    /// index.
    std::size_t generation(NodeIndex node) const;

    const ForestBuildReport& report() const { return report_; }

private:
    std::shared_ptr<const NodeTable> nodes_;
    std::vector<NodeIndex> parent_;      // self-parent marks a root
    std::vector<uint32_t> child_offsets_;
    std::vector<NodeIndex> child_list_;
    std::vector<NodeIndex> roots_;
    std::vector<NodeIndex> root_of_;
    std::vector<uint32_t> depth_;
    std::vector<uint32_t> tree_size_; // indexed by root
    ForestBuildReport report_;
};

/// Mean undirected pairwise distance over the tree containing `node`.
/// Throws UndefinedInputError when that tree is a singleton.
double structural_virality(const FinetuneForest& forest, NodeIndex node);

/// Size, depth, and virality per tree, ordered by root index.
std::vector<TreeStats> depth_stats(const FinetuneForest& forest);

struct GrowthPoint {
    int64_t timestamp; // epoch seconds
    std::size_t cumulative;
    bool backfilled; // timestamp falls on the registry backfill date
};

/// Cumulative member count at each distinct creation time, over the
/// record-backed members of one component. External placeholders carry no
/// timestamp and are skipped.
std::vector<GrowthPoint> component_growth(const std::vector<NodeIndex>& members,
                                          const NodeTable& nodes, const RecordSet& records);

} // namespace lineage::graph

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lineage/family_graph.hpp"
#include "lineage/record.hpp"

namespace lineage::mutation {

/// A trait observation: the values a record documents, sorted and unique.
/// Empty means the record does not document the trait.
using TraitValues = std::vector<std::string>;

/// Pluggable trait definition; any categorical field can be analyzed the same
/// way.
struct TraitAccessor {
    std::string name;
    std::function<TraitValues(const ModelRecord&)> values;
};

/// "unknown" and "other" license markers are treated as undocumented unless
/// asked for.
TraitAccessor license_trait(bool include_unknown = false);
TraitAccessor language_trait();
TraitAccessor task_trait();    // pipeline_tag
TraitAccessor library_trait(); // library_name

std::optional<TraitAccessor> trait_from(std::string_view name, bool include_unknown_license = false);

/// Jaccard complement 1 - |parent n child| / |parent u child|. Throws
/// UndefinedInputError when both sides are empty.
double edge_mutation_rate(const TraitValues& parent, const TraitValues& child);

struct MutationEvent {
    std::string from;
    std::string to;      // always != from
    std::string edge_id; // child model id; empty for pair-level calls

    bool operator==(const MutationEvent&) const = default;
};

/// Directional changes on one edge: every dropped parent value points to
/// every child value, and every parent value points to every added child
/// value; the pair generated by both rules is emitted once. Sorted by
/// (from, to). Throws UndefinedInputError when both sides are empty.
std::vector<MutationEvent> directional_events(const TraitValues& parent, const TraitValues& child);

struct AggregateRate {
    double rate = 0.0;
    std::size_t observed_edges = 0; // both endpoints document the trait
    std::size_t mutated_edges = 0;  // observed edges with rate > 0
    std::size_t one_sided_excluded = 0;
    std::size_t undocumented_excluded = 0;
};

/// Mean edge mutation rate over the forest's finetune edges where both
/// endpoints document the trait. Throws NoDataError when no edge qualifies.
AggregateRate aggregate_mutation_rate(const graph::FinetuneForest& forest, const RecordSet& records,
                                      const TraitAccessor& trait);

struct EventLog {
    std::vector<MutationEvent> events; // edge-by-edge in child id order
    AggregateRate rate;
};

/// Events and the aggregate rate in one pass. Unlike aggregate_mutation_rate
/// this never throws: a trait nobody documents yields an empty log.
EventLog collect_events(const graph::FinetuneForest& forest, const RecordSet& records,
                        const TraitAccessor& trait);

struct DriftEdge {
    uint32_t source; // index into DriftGraph::values
    uint32_t target;
    int64_t weight; // traffic in both directions
    int64_t margin; // majority minus minority traffic
    bool tie = false;
};

enum class NodeSelection { traffic, frequency };

std::string_view to_string(NodeSelection selection);
std::optional<NodeSelection> node_selection_from(std::string_view name);

/// Trait values as nodes, majority mutation direction as oriented edges.
struct DriftGraph {
    std::string trait;
    std::vector<std::string> values; // retained top-k, selection order
    std::vector<int64_t> traffic;    // row-major counts: value i -> value j
    std::vector<DriftEdge> edges;    // one per unordered pair with traffic
    int64_t retained_events = 0;     // traffic among retained values
    int64_t total_events = 0;        // every event seen

    std::optional<uint32_t> value_index(std::string_view value) const;
    int64_t count(uint32_t i, uint32_t j) const {
        return traffic[i * values.size() + j];
    }
};

/// Keeps the k values with the most event participation (or the k most
/// frequent per `frequencies`), ties lexicographic, then orients each
/// unordered pair by majority traffic. An even split points the edge at the
/// lexicographically larger value and sets the tie flag.
DriftGraph build_drift_graph(const std::vector<MutationEvent>& events, std::size_t k,
                             NodeSelection selection = NodeSelection::traffic,
                             const std::unordered_map<std::string, int64_t>* frequencies = nullptr,
                             std::string trait_name = {});

} // namespace lineage::mutation

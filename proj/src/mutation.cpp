#include "lineage/mutation.hpp"

#include <algorithm>
#include <tuple>

#include "lineage/errors.hpp"

namespace lineage::mutation {

TraitAccessor license_trait(bool include_unknown) {
    return {"license", [include_unknown](const ModelRecord& r) -> TraitValues {
                if (!r.license) return {};
                if (!include_unknown && (*r.license == "unknown" || *r.license == "other")) return {};
                return {*r.license};
            }};
}

TraitAccessor language_trait() {
    return {"language", [](const ModelRecord& r) -> TraitValues {
                return {r.languages.begin(), r.languages.end()};
            }};
}

TraitAccessor task_trait() {
    return {"task", [](const ModelRecord& r) -> TraitValues {
                if (!r.pipeline_tag) return {};
                return {*r.pipeline_tag};
            }};
}

TraitAccessor library_trait() {
    return {"library", [](const ModelRecord& r) -> TraitValues {
                if (!r.library_name) return {};
                return {*r.library_name};
            }};
}

std::optional<TraitAccessor> trait_from(std::string_view name, bool include_unknown_license) {
    if (name == "license") return license_trait(include_unknown_license);
    if (name == "language") return language_trait();
    if (name == "task") return task_trait();
    if (name == "library") return library_trait();
    return std::nullopt;
}

std::string_view to_string(NodeSelection selection) {
    return selection == NodeSelection::traffic ? "traffic" : "frequency";
}

std::optional<NodeSelection> node_selection_from(std::string_view name) {
    if (name == "traffic") return NodeSelection::traffic;
    if (name == "frequency") return NodeSelection::frequency;
    return std::nullopt;
}

namespace {

std::pair<std::size_t, std::size_t> intersection_and_union(const TraitValues& a,
                                                           const TraitValues& b) {
    std::size_t common = 0, ia = 0, ib = 0;
    while (ia < a.size() && ib < b.size()) {
        if (a[ia] < b[ib]) {
            ++ia;
        } else if (b[ib] < a[ia]) {
            ++ib;
        } else {
            ++common;
            ++ia;
            ++ib;
        }
    }
    return {common, a.size() + b.size() - common};
}

} // namespace

double edge_mutation_rate(const TraitValues& parent, const TraitValues& child) {
    auto [common, unioned] = intersection_and_union(parent, child);
    if (unioned == 0)
        throw UndefinedInputError("mutation rate is undefined when neither side documents the trait");
    return 1.0 - static_cast<double>(common) / static_cast<double>(unioned);
}

std::vector<MutationEvent> directional_events(const TraitValues& parent, const TraitValues& child) {
    if (parent.empty() && child.empty())
        throw UndefinedInputError("mutation events are undefined when neither side documents the trait");

    auto contains = [](const TraitValues& values, const std::string& v) {
        return std::binary_search(values.begin(), values.end(), v);
    };

    std::vector<MutationEvent> events;
    for (const std::string& p : parent) {
        if (contains(child, p)) continue; // p was dropped
        for (const std::string& c : child) events.push_back({p, c, {}});
    }
    for (const std::string& c : child) {
        if (contains(parent, c)) continue; // c was added
        for (const std::string& p : parent) {
            if (!contains(child, p)) continue; // dropped -> added already emitted above
            events.push_back({p, c, {}});
        }
    }
    std::sort(events.begin(), events.end(), [](const MutationEvent& x, const MutationEvent& y) {
        return std::tie(x.from, x.to) < std::tie(y.from, y.to);
    });
    return events;
}

namespace {

EventLog walk_forest(const graph::FinetuneForest& forest, const RecordSet& records,
                     const TraitAccessor& trait, bool want_events) {
    EventLog log;
    const auto& nodes = forest.nodes();

    std::vector<const ModelRecord*> record_of(nodes.size(), nullptr);
    for (graph::NodeIndex v = 0; v < nodes.size(); ++v)
        if (!nodes.external(v)) record_of[v] = records.find(nodes.id(v));

    double rate_sum = 0.0;
    for (graph::NodeIndex v = 0; v < nodes.size(); ++v) {
        auto p = forest.parent(v);
        if (!p) continue;
        const ModelRecord* parent_record = record_of[*p];
        const ModelRecord* child_record = record_of[v];
        TraitValues parent_values = parent_record ? trait.values(*parent_record) : TraitValues{};
        TraitValues child_values = child_record ? trait.values(*child_record) : TraitValues{};

        if (parent_values.empty() && child_values.empty()) {
            ++log.rate.undocumented_excluded;
            continue;
        }
        if (parent_values.empty() || child_values.empty()) {
            ++log.rate.one_sided_excluded;
            continue;
        }
        double rate = edge_mutation_rate(parent_values, child_values);
        rate_sum += rate;
        ++log.rate.observed_edges;
        if (rate > 0.0) ++log.rate.mutated_edges;
        if (want_events && rate > 0.0) {
            for (MutationEvent& e : directional_events(parent_values, child_values)) {
                e.edge_id = nodes.id(v);
                log.events.push_back(std::move(e));
            }
        }
    }
    if (log.rate.observed_edges > 0)
        log.rate.rate = rate_sum / static_cast<double>(log.rate.observed_edges);
    return log;
}

} // namespace

AggregateRate aggregate_mutation_rate(const graph::FinetuneForest& forest, const RecordSet& records,
                                      const TraitAccessor& trait) {
    AggregateRate rate = walk_forest(forest, records, trait, false).rate;
    if (rate.observed_edges == 0)
        throw NoDataError("no finetune edge documents trait \"" + trait.name +
                          "\" on both endpoints");
    return rate;
}

EventLog collect_events(const graph::FinetuneForest& forest, const RecordSet& records,
                        const TraitAccessor& trait) {
    return walk_forest(forest, records, trait, true);
}

std::optional<uint32_t> DriftGraph::value_index(std::string_view value) const {
    for (uint32_t i = 0; i < values.size(); ++i)
        if (values[i] == value) return i;
    return std::nullopt;
}

DriftGraph build_drift_graph(const std::vector<MutationEvent>& events, std::size_t k,
                             NodeSelection selection,
                             const std::unordered_map<std::string, int64_t>* frequencies,
                             std::string trait_name) {
    DriftGraph g;
    g.trait = std::move(trait_name);
    g.total_events = static_cast<int64_t>(events.size());
    if (events.empty() || k == 0) return g;

    std::unordered_map<std::string, int64_t> participation;
    for (const MutationEvent& e : events) {
        ++participation[e.from];
        ++participation[e.to];
    }

    std::vector<std::pair<std::string, int64_t>> ranked;
    ranked.reserve(participation.size());
    for (const auto& [value, count] : participation) {
        int64_t score = count;
        if (selection == NodeSelection::frequency) {
            score = 0;
            if (frequencies != nullptr) {
                auto it = frequencies->find(value);
                if (it != frequencies->end()) score = it->second;
            }
        }
        ranked.emplace_back(value, score);
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (ranked.size() > k) ranked.resize(k);

    g.values.reserve(ranked.size());
    for (auto& [value, score] : ranked) g.values.push_back(std::move(value));
    const std::size_t n = g.values.size();
    g.traffic.assign(n * n, 0);

    for (const MutationEvent& e : events) {
        auto i = g.value_index(e.from);
        auto j = g.value_index(e.to);
        if (!i || !j) continue;
        ++g.traffic[*i * n + *j];
        ++g.retained_events;
    }

    for (uint32_t i = 0; i < n; ++i) {
        for (uint32_t j = i + 1; j < n; ++j) {
            int64_t forward = g.count(i, j), backward = g.count(j, i);
            if (forward + backward == 0) continue;
            DriftEdge e;
            // values are in selection order, not lexicographic; ties point at
            // the lexicographically larger value
            bool i_smaller = g.values[i] < g.values[j];
            if (forward > backward) {
                e.source = i;
                e.target = j;
            } else if (backward > forward) {
                e.source = j;
                e.target = i;
            } else {
                e.source = i_smaller ? i : j;
                e.target = i_smaller ? j : i;
                e.tie = true;
            }
            e.weight = forward + backward;
            e.margin = forward > backward ? forward - backward : backward - forward;
            g.edges.push_back(e);
        }
    }
    return g;
}

} // namespace lineage::mutation

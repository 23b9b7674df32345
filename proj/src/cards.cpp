#include "lineage/cards.hpp"

#include <algorithm>

#include "lineage/errors.hpp"
#include "lineage/util.hpp"

namespace lineage::cards {

double card_coverage(const RecordSet& records) {
    if (records.empty()) return 0.0;
    std::size_t with_cards = 0;
    for (const ModelRecord& r : records)
        if (r.card_text) ++with_cards;
    return static_cast<double>(with_cards) / static_cast<double>(records.size());
}

bool has_autogen_marker(std::string_view card_text) {
    std::string normalized = util::to_lower_ascii(util::collapse_whitespace(card_text));
    return normalized.find("automatically generated") != std::string::npos ||
           normalized.find("generated automatically") != std::string::npos;
}

LengthStats length_stats(const RecordSet& records) {
    std::vector<uint64_t> lengths;
    uint64_t words = 0;
    for (const ModelRecord& r : records) {
        if (!r.card_text) continue;
        lengths.push_back(util::utf8_length(*r.card_text));
        std::string flat = util::collapse_whitespace(*r.card_text);
        if (!flat.empty())
            words += 1 + static_cast<uint64_t>(std::count(flat.begin(), flat.end(), ' '));
    }
    if (lengths.empty()) throw NoDataError("no records carry a model card");

    std::sort(lengths.begin(), lengths.end());
    LengthStats s;
    s.cards = lengths.size();
    uint64_t total = 0;
    for (uint64_t l : lengths) total += l;
    s.mean = static_cast<double>(total) / static_cast<double>(lengths.size());
    std::size_t mid = lengths.size() / 2;
    s.median = lengths.size() % 2 == 1
                   ? static_cast<double>(lengths[mid])
                   : (static_cast<double>(lengths[mid - 1]) + static_cast<double>(lengths[mid])) / 2.0;
    s.min = lengths.front();
    s.max = lengths.back();
    s.mean_words = static_cast<double>(words) / static_cast<double>(lengths.size());
    return s;
}

DeltaStats parent_child_delta(const graph::FinetuneForest& forest, const RecordSet& records) {
    const auto& nodes = forest.nodes();
    DeltaStats s;
    double total = 0.0;
    for (graph::NodeIndex v = 0; v < nodes.size(); ++v) {
        auto p = forest.parent(v);
        if (!p || nodes.external(*p) || nodes.external(v)) continue;
        const ModelRecord* parent_record = records.find(nodes.id(*p));
        const ModelRecord* child_record = records.find(nodes.id(v));
        if (parent_record == nullptr || child_record == nullptr) continue;
        if (!parent_record->card_text || !child_record->card_text) continue;
        total += static_cast<double>(util::utf8_length(*parent_record->card_text)) -
                 static_cast<double>(util::utf8_length(*child_record->card_text));
        ++s.edges;
    }
    if (s.edges == 0) throw NoDataError("no finetune edge has model cards on both endpoints");
    s.mean_delta = total / static_cast<double>(s.edges);
    return s;
}

AutogenRates autogen_rate(const RecordSet& records, const graph::FamilyGraph& graph) {
    const auto& nodes = graph.nodes();
    AutogenRates rates;
    for (graph::NodeIndex v = 0; v < nodes.size(); ++v) {
        if (nodes.external(v)) continue;
        const ModelRecord* r = records.find(nodes.id(v));
        if (r == nullptr) continue;
        bool flagged = r->card_text && has_autogen_marker(*r->card_text);

        bool has_parent = false;
        for (int k = 0; k < kRelationKindCount; ++k) {
            if (graph.predecessors(v, static_cast<RelationKind>(k)).empty()) continue;
            has_parent = true;
            ++rates.by_kind[k].models;
            if (flagged) ++rates.by_kind[k].flagged;
        }
        if (!has_parent) {
            ++rates.roots.models;
            if (flagged) ++rates.roots.flagged;
        }
    }
    for (GroupRate* g : {&rates.roots, &rates.by_kind[0], &rates.by_kind[1], &rates.by_kind[2],
                         &rates.by_kind[3]}) {
        if (g->models > 0) g->rate = static_cast<double>(g->flagged) / static_cast<double>(g->models);
    }
    return rates;
}

std::vector<GenerationLengths> generation_length_means(const graph::FinetuneForest& forest,
                                                       const RecordSet& records) {
    const auto& nodes = forest.nodes();
    std::vector<std::pair<uint64_t, std::size_t>> totals; // (length sum, cards) per generation
    for (graph::NodeIndex v = 0; v < nodes.size(); ++v) {
        if (nodes.external(v)) continue;
        const ModelRecord* r = records.find(nodes.id(v));
        if (r == nullptr || !r->card_text) continue;
        std::size_t g = forest.generation(v);
        if (g >= totals.size()) totals.resize(g + 1, {0, 0});
        totals[g].first += util::utf8_length(*r->card_text);
        totals[g].second += 1;
    }
    std::vector<GenerationLengths> out;
    for (std::size_t g = 0; g < totals.size(); ++g) {
        if (totals[g].second == 0) continue;
        out.push_back({g, totals[g].second,
                       static_cast<double>(totals[g].first) / static_cast<double>(totals[g].second)});
    }
    return out;
}

} // namespace lineage::cards

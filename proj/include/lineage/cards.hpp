#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "lineage/family_graph.hpp"
#include "lineage/record.hpp"

namespace lineage::cards {

/// Fraction of records carrying a card; 0.0 for an empty record set.
double card_coverage(const RecordSet& records);

/// True when the card contains "automatically generated" or "generated
/// automatically", case-insensitive, with whitespace runs treated as single
/// spaces.
bool has_autogen_marker(std::string_view card_text);

struct LengthStats {
    std::size_t cards = 0;
    double mean = 0.0;
    double median = 0.0; // midpoint average on even counts
    uint64_t min = 0;
    uint64_t max = 0;
    double mean_words = 0.0; // whitespace-delimited tokens; approximate
};

/// Length statistics in Unicode scalar characters over the records that have
/// cards. Throws NoDataError when none do.
LengthStats length_stats(const RecordSet& records);

struct DeltaStats {
    double mean_delta = 0.0; // parent length minus child length
    std::size_t edges = 0;   // finetune edges where both ends have cards
};

/// Throws NoDataError when no finetune edge has cards on both ends.
DeltaStats parent_child_delta(const graph::FinetuneForest& forest, const RecordSet& records);

struct GroupRate {
    std::size_t models = 0;  // group size; card-less models count as unflagged
    std::size_t flagged = 0; // cards carrying an autogen marker
    double rate = 0.0;
};

struct AutogenRates {
    std::array<GroupRate, kRelationKindCount> by_kind; // children of that edge kind
    GroupRate roots;                                   // models with no parent of any kind
};

/// Auto-generation marker prevalence for children of each relation kind and
/// for parentless models. A model with parents of two kinds counts in both
/// groups. External placeholders are skipped.
AutogenRates autogen_rate(const RecordSet& records, const graph::FamilyGraph& graph);

struct GenerationLengths {
    std::size_t generation;
    std::size_t cards;
    double mean_length;
};

/// Mean card length at each forest depth, over records with cards, ascending
/// by generation.
std::vector<GenerationLengths> generation_length_means(const graph::FinetuneForest& forest,
                                                       const RecordSet& records);

} // namespace lineage::cards

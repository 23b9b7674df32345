#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lineage/mutation.hpp"

namespace lineage::ordering {

enum class Objective { drift_agreement, mutation_agreement };

std::string_view to_string(Objective objective);
std::optional<Objective> objective_from(std::string_view name);

/// How a tied drift edge (equal traffic both ways) is scored.
/// forward_for_neither keeps it in the denominator but never counts it as
/// following the order; forward_when_source_first counts it when its
/// lexicographically smaller endpoint comes first.
enum class TiePolicy { forward_for_neither, forward_when_source_first };

std::string_view to_string(TiePolicy policy);
std::optional<TiePolicy> tie_policy_from(std::string_view name);

struct Scores {
    double drift_agreement = 1.0;    // oriented edges pointing forward / all oriented edges
    double mutation_agreement = 1.0; // forward event mass / all retained event mass
    int64_t forward_edges = 0;
    int64_t scored_edges = 0;
    int64_t forward_mass = 0;
    int64_t total_mass = 0;
};

/// Scores one permutation of the graph's value indices. Vacuous denominators
/// (no edges, no events) score 1.0. Throws InvalidInputError unless
/// `permutation` is a bijection over the graph's nodes.
Scores score_ordering(const mutation::DriftGraph& graph, const std::vector<uint32_t>& permutation,
                      TiePolicy policy = TiePolicy::forward_for_neither);

struct OrderingResult {
    std::vector<uint32_t> permutation; // value indices, first to last
    Objective objective = Objective::mutation_agreement;
    Scores scores;
    bool optimal = false;
    std::string solver;
    double runtime_seconds = 0.0; // in-memory diagnostic, never serialized
};

/// Exhaustive subset dynamic program over permutation prefixes, O(2^n * n^2).
/// Returns the lexicographically smallest optimal permutation. Throws
/// TooLargeError when the graph has more than `max_nodes` values.
OrderingResult solve_exact(const mutation::DriftGraph& graph, Objective objective,
                           std::size_t max_nodes = 22,
                           TiePolicy policy = TiePolicy::forward_for_neither);

/// Degree-greedy construction (exact on acyclic graphs) refined by adjacent
/// swaps and single-node relocations, over seeded restarts. Deterministic for
/// a given seed.
OrderingResult solve_heuristic(const mutation::DriftGraph& graph, Objective objective,
                               uint64_t seed, TiePolicy policy = TiePolicy::forward_for_neither,
                               std::size_t restarts = 8);

} // namespace lineage::ordering

#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lineage/family_graph.hpp"
#include "lineage/record.hpp"
#include "lineage/similarity.hpp"

namespace lineage::sampling {

/// The eight family subtree shapes whose node pairs get similarity estimates.
/// Role names per pattern:
///   random_pair     {a, b}            any two distinct nodes
///   edge            {parent, child}
///   sibling_fork    {parent, c1, c2}
///   chain3          {gp, p, c}
///   triple_fork     {parent, c1, c2, c3}
///   fork_under_edge {gp, p, c1, c2}
///   uncle_fork      {gp, uncle, p, c}
///   chain4          {ggp, gp, p, c}
enum class Pattern : uint8_t {
    random_pair,
    edge,
    sibling_fork,
    chain3,
    triple_fork,
    fork_under_edge,
    uncle_fork,
    chain4,
};

inline constexpr std::array<Pattern, 8> kAllPatterns = {
    Pattern::random_pair,  Pattern::edge,       Pattern::sibling_fork,    Pattern::chain3,
    Pattern::triple_fork,  Pattern::fork_under_edge, Pattern::uncle_fork, Pattern::chain4,
};

std::string_view to_string(Pattern pattern);
std::optional<Pattern> pattern_from(std::string_view name);

/// Position names, in canonical order.
const std::vector<std::string_view>& pattern_roles(Pattern pattern);

struct RolePair {
    std::string a;
    std::string b;

    bool operator==(const RolePair&) const = default;
};

/// Distinct role pairs per pattern, with exchangeable positions (c1/c2/c3)
/// collapsed to one representative.
const std::vector<RolePair>& canonical_role_pairs(Pattern pattern);

/// One anchor satisfying a pattern's condition: a node (node patterns) or the
/// edge node -> child (edge patterns), with the closed-form count of subtree
/// instances anchored there.
struct PatternSite {
    graph::NodeIndex node;
    graph::NodeIndex child; // edge anchors only
    int64_t multiplicity;
};

struct SiteOptions {
    /// Restrict the random_pair universe to nodes inside multi-node trees.
    bool random_pair_families_only = false;
};

/// Anchor table with prefix sums for weighted draws.
struct PatternSiteTable {
    Pattern pattern = Pattern::random_pair;
    std::vector<PatternSite> sites;
    std::vector<int64_t> cumulative; // running multiplicity totals
    int64_t total_count = 0;

    /// random_pair only: the eligible nodes, ascending; site i anchors pairs
    /// of universe[i] with every later entry.
    std::vector<graph::NodeIndex> universe;
};

/// Lists every qualifying anchor with its multiplicity. total_count equals
/// the number of distinct pattern instances in the forest. External
/// placeholder nodes count for structure but never enter the random_pair
/// universe.
PatternSiteTable enumerate_sites(const graph::FinetuneForest& forest, Pattern pattern,
                                 const SiteOptions& options = {});

struct SampledPair {
    graph::NodeIndex a;
    graph::NodeIndex b;
};

/// One deterministic draw: anchor weighted by multiplicity, then a uniform
/// realization of the pattern inside it, then the two requested roles.
/// `attempt` selects an independent redraw lane for resampling.
SampledPair draw_pair(const PatternSiteTable& table, const graph::FinetuneForest& forest,
                      const RolePair& roles, uint64_t seed, uint64_t draw_index,
                      uint64_t attempt = 0);

/// k draws at attempt lane 0. Throws NoSitesError on an empty table and
/// InvalidInputError when a role name does not belong to the pattern.
std::vector<SampledPair> sample_pairs(const PatternSiteTable& table,
                                      const graph::FinetuneForest& forest, const RolePair& roles,
                                      std::size_t k, uint64_t seed);

/// Similarity measure = algorithm x which text it reads.
struct Metric {
    enum class Kind : uint8_t { levenshtein, bow, tfidf };
    enum class Source : uint8_t { metadata, card };

    Kind kind = Kind::tfidf;
    Source source = Source::metadata;

    bool operator==(const Metric&) const = default;
};

std::string to_string(Metric metric); // e.g. "tfidf-metadata", "lev-card"
std::optional<Metric> metric_from(std::string_view name);

struct SimilarityEstimate {
    Pattern pattern;
    RolePair roles;
    std::string metric;
    std::size_t sample_size = 0;
    double mean = 0.0;
    double standard_error = 0.0;
    uint64_t seed = 0;
    std::size_t resampled_draws = 0;   // redraws forced by external placeholders
    std::size_t zero_vector_pairs = 0; // cosine pairs where a side had no terms
    std::size_t truncated_pairs = 0;   // pairs hit by the edit-distance cap
};

struct EstimatorOptions {
    std::size_t vocabulary_cap = 20'000;
    similarity::TokenMode token_mode = similarity::TokenMode::combined;
    similarity::IdfMode idf_mode = similarity::IdfMode::raw;
    std::size_t levenshtein_cap = similarity::kDefaultLevenshteinCap;
    std::size_t max_attempts_per_draw = 1'000;
    SiteOptions sites;
};

/// Samples pattern instances and averages a similarity metric over one role
/// pair. Vector spaces are built once per text source, over every record
/// (metadata) or every present card; per-node term vectors are cached.
class SimilarityEstimator {
public:
    SimilarityEstimator(const graph::FinetuneForest& forest, const RecordSet& records,
                        EstimatorOptions options = {});

    /// Mean and standard error over k draws. Draws whose pair touches an
    /// external placeholder are redrawn on a fresh attempt lane, up to
    /// max_attempts_per_draw.
    SimilarityEstimate estimate_similarity(Pattern pattern, const RolePair& roles, Metric metric,
                                           std::size_t k, uint64_t seed);

    const PatternSiteTable& site_table(Pattern pattern);

    double pair_similarity(graph::NodeIndex a, graph::NodeIndex b, Metric metric,
                           bool* zero_flag = nullptr, bool* truncated_flag = nullptr);

private:
    std::string_view text_of(graph::NodeIndex node, Metric::Source source) const;
    const similarity::TermVectorSpace& space_for(Metric::Source source);
    const similarity::SparseVector& tf_vector(graph::NodeIndex node, Metric::Source source);

    const graph::FinetuneForest& forest_;
    const RecordSet& records_;
    EstimatorOptions options_;
    std::vector<const ModelRecord*> record_of_; // by node index; null for externals
    std::array<std::optional<PatternSiteTable>, kAllPatterns.size()> tables_;
    std::array<std::optional<similarity::TermVectorSpace>, 2> spaces_; // by Source
    std::array<std::unordered_map<graph::NodeIndex, similarity::SparseVector>, 2> tf_cache_;
    std::unordered_map<graph::NodeIndex, std::vector<uint32_t>> metadata_codepoints_;
};

} // namespace lineage::sampling

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lineage/ingest.hpp"
#include "lineage/mutation.hpp"
#include "lineage/ordering.hpp"
#include "lineage/record.hpp"
#include "lineage/sampling.hpp"
#include "lineage/similarity.hpp"

namespace lineage::report {

/// Everything a command needs, mirrored 1:1 by CLI flags. Output files embed
/// the analysis-relevant fields; locations (output/cache dirs) stay out of
/// the echo so the same analysis lands byte-identical wherever it is written.
struct RunConfig {
    std::string snapshot_path;
    std::string card_dir;   // optional card store directory
    std::string output_dir = ".";
    std::string cache_dir;  // empty disables the cache

    uint64_t seed = 0;
    std::size_t sample_size = 10'000;     // draws per similarity estimate
    std::size_t vocabulary_cap = 20'000;  // TF-IDF vocabulary size
    std::size_t top_n = 20;               // summary tables and drift values
    std::size_t exact_cap = 22;           // ordering: exact solver node limit
    std::size_t heuristic_restarts = 8;

    std::vector<std::string> metrics = {"tfidf-metadata"};
    std::string trait = "license";
    bool include_unknown_license = false;

    similarity::TokenMode token_mode = similarity::TokenMode::combined;
    similarity::IdfMode idf_mode = similarity::IdfMode::raw;
    std::size_t levenshtein_cap = similarity::kDefaultLevenshteinCap;
    bool random_pair_families_only = false;

    ordering::Objective objective = ordering::Objective::drift_agreement;
    ordering::TiePolicy tie_policy = ordering::TiePolicy::forward_for_neither;
    mutation::NodeSelection selection = mutation::NodeSelection::traffic;

    std::string arxiv_category_map; // optional JSON file: arxiv id -> [codes]

    double max_malformed_fraction = 0.10;
    std::size_t threads = 1;
};

// ---- Output helpers --------------------------------------------------------

/// RFC 4180 quoting; applied to every field that needs it.
std::string csv_escape(std::string_view field);

/// Writes a CSV with a three-line '#' comment preamble carrying the toolkit
/// version, command, and config echo, so each file is self-describing.
/// Readers that skip comment lines see a plain header + rows table.
void write_csv(const std::filesystem::path& path, std::string_view command,
               const RunConfig& config, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

// ---- Snapshot loading ------------------------------------------------------

struct LoadedSnapshot {
    RecordSet records;
    ingest::ParseReport report;
    uint64_t digest = 0;             // content hash of the snapshot bytes
    std::size_t cards_attached = 0;  // records that got a card-store card
    bool cache_hit = false;
};

/// Parses the configured snapshot, consulting and maintaining the on-disk
/// cache when config.cache_dir is set, then attaches cards from the card
/// store. The cache stores the canonically serialized records plus the
/// original parse report, keyed by snapshot digest, so cached and fresh loads
/// are indistinguishable in every output.
LoadedSnapshot load_snapshot(const RunConfig& config);

// ---- Commands --------------------------------------------------------------
//
// Each command writes its CSV tables plus a <command>_manifest.json sidecar
// (version, config echo, input counts, warnings, outputs) into
// config.output_dir and returns a process exit code. Fatal problems throw;
// the CLI turns exceptions into exit code 1.

/// Top licenses/tasks/languages/libraries, top models by child count and by
/// downloads, arXiv id counts (plus category counts when a local id->category
/// map is configured), and documentation-flag prevalence.
int cmd_summary(const RunConfig& config);

/// Similarity estimates for every pattern x canonical role pair x configured
/// metric, plus the pattern site/instance census.
int cmd_similarity(const RunConfig& config);

/// Drift graph export and the ordering stat box for one trait.
int cmd_drift(const RunConfig& config);

/// Per-tree size/depth/virality, weak components, growth series, and the
/// graph edge list.
int cmd_graphstats(const RunConfig& config);

/// Card coverage, length statistics, parent-child length deltas, autogen
/// marker rates, and per-generation mean lengths.
int cmd_cards(const RunConfig& config);

} // namespace lineage::report

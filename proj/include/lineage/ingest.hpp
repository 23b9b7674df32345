#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "lineage/record.hpp"

namespace lineage::ingest {

/// Trait fields derived from a raw tag list.
struct TraitExtraction {
    std::optional<std::string> license; // first license: tag wins
    std::set<std::string> languages;
    std::set<std::string> arxiv_ids;
    std::vector<ParentRelation> parent_relations; // declaration order, deduplicated
    std::vector<std::string> warnings;
};

/// Applies the tag-prefix rules: "license:", "arxiv:", "base_model:<kind>:",
/// and bare ISO-639 codes. Unrecognized tags produce no traits and no errors.
TraitExtraction extract_traits(const std::vector<std::string>& raw_tags);

/// Canonical serialization of every metadata field except card_text, in a
/// fixed key order with lowercase keys. Identical records always produce
/// identical strings, and any serialized field difference changes the string.
std::string canonical_metadata_string(const ModelRecord& record);

struct ParseOptions {
    // Fatal corrupt-snapshot threshold: malformed lines / non-empty lines.
    double max_malformed_fraction = 0.10;
    // 0 = one worker per hardware thread.
    std::size_t threads = 1;
};

struct ParseReport {
    std::size_t total_lines = 0;     // non-empty lines seen
    std::size_t malformed_lines = 0; // skipped and counted
    std::size_t duplicate_ids = 0;   // later occurrences dropped
    std::vector<std::string> warnings;
};

struct ParseResult {
    RecordSet records;
    ParseReport report;
};

/// Parses newline-delimited metadata records. Records come back canonically
/// sorted by model_id; on duplicate ids the first line wins. Throws IoError
/// if the stream is unreadable and CorruptSnapshotError past the malformed
/// threshold.
ParseResult parse_snapshot(std::istream& in, const ParseOptions& options = {});
ParseResult parse_snapshot_file(const std::filesystem::path& path, const ParseOptions& options = {});

/// Parses one record line. Returns nullopt for structurally invalid input.
std::optional<ModelRecord> parse_record_line(std::string_view line,
                                             std::vector<std::string>* warnings = nullptr);

/// One-line serialization; parse_record_line(serialize_record(r)) round-trips
/// every field.
std::string serialize_record(const ModelRecord& record);
void serialize_snapshot(const RecordSet& records, std::ostream& out);

// ---- Card store ------------------------------------------------------------
//
// A card store is a directory of <percent-encoded model_id>.md files.

std::filesystem::path card_store_filename(std::string_view model_id);

/// Loads every .md file in the directory; keys are decoded model ids.
std::map<std::string, std::string> load_card_store(const std::filesystem::path& dir);

void write_card_store(const std::filesystem::path& dir,
                      const std::map<std::string, std::string>& cards);

/// Attaches card texts to matching records (replacing inline card_text).
/// Returns the number of records that received a card.
std::size_t apply_cards(std::vector<ModelRecord>& records,
                        const std::map<std::string, std::string>& cards);

} // namespace lineage::ingest

#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace lineage {

/// How a child model derives from its parent.
enum class RelationKind : uint8_t { finetune, quantized, adapter, merge };

inline constexpr int kRelationKindCount = 4;

std::string_view to_string(RelationKind kind);
std::optional<RelationKind> relation_kind_from(std::string_view name);

struct ParentRelation {
    std::string parent_id;
    RelationKind kind;

    bool operator==(const ParentRelation&) const = default;
};

/// Date the registry introduced creation timestamps; earlier models carry it.
inline constexpr int kBackfillYear = 2022;
inline constexpr int kBackfillMonth = 3;
inline constexpr int kBackfillDay = 2;

/// One registry entry. Trait fields (license, languages, arxiv_ids,
/// parent_relations) are derived from the tag list at parse time;
/// metadata_string is the canonical serialization of everything except
/// card_text.
struct ModelRecord {
    std::string model_id;            // "author/name", unique within a snapshot
    int64_t created_at = 0;          // epoch seconds, UTC
    int64_t downloads = 0;
    int64_t likes = 0;
    std::optional<double> trending_score;
    std::optional<std::string> pipeline_tag;
    std::optional<std::string> library_name;
    std::optional<std::string> license;
    std::set<std::string> languages; // lowercase ISO-639 codes
    std::vector<std::string> raw_tags;
    std::vector<ParentRelation> parent_relations;
    std::set<std::string> arxiv_ids;
    std::optional<std::string> card_text;
    std::string metadata_string;
    bool created_at_backfilled = false;
};

/// Snapshot records sorted by model_id with id lookup.
class RecordSet {
public:
    RecordSet() = default;
    explicit RecordSet(std::vector<ModelRecord> records);

    const std::vector<ModelRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }

    const ModelRecord* find(std::string_view model_id) const;

    /// Mutable access for card attachment; ids and sort order must not change.
    std::vector<ModelRecord>& records_mut() { return records_; }

    auto begin() const { return records_.begin(); }
    auto end() const { return records_.end(); }

private:
    std::vector<ModelRecord> records_; // sorted by model_id
};

} // namespace lineage

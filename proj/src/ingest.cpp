#include "lineage/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "lineage/errors.hpp"
#include "lineage/iso639.hpp"
#include "lineage/util.hpp"

namespace lineage {

std::string_view to_string(RelationKind kind) {
    switch (kind) {
    case RelationKind::finetune: return "finetune";
    case RelationKind::quantized: return "quantized";
    case RelationKind::adapter: return "adapter";
    case RelationKind::merge: return "merge";
    }
    return "unknown";
}

std::optional<RelationKind> relation_kind_from(std::string_view name) {
    if (name == "finetune") return RelationKind::finetune;
    if (name == "quantized") return RelationKind::quantized;
    if (name == "adapter") return RelationKind::adapter;
    if (name == "merge") return RelationKind::merge;
    return std::nullopt;
}

RecordSet::RecordSet(std::vector<ModelRecord> records) : records_(std::move(records)) {
    std::sort(records_.begin(), records_.end(),
              [](const ModelRecord& a, const ModelRecord& b) { return a.model_id < b.model_id; });
}

const ModelRecord* RecordSet::find(std::string_view model_id) const {
    auto it = std::lower_bound(records_.begin(), records_.end(), model_id,
                               [](const ModelRecord& r, std::string_view id) { return r.model_id < id; });
    if (it == records_.end() || it->model_id != model_id) return nullptr;
    return &*it;
}

} // namespace lineage

namespace lineage::ingest {

using nlohmann::ordered_json;

namespace {

constexpr std::string_view kLicensePrefix = "license:";
constexpr std::string_view kArxivPrefix = "arxiv:";
constexpr std::string_view kBaseModelPrefix = "base_model:";

bool is_bare_language_tag(std::string_view tag) {
    if (tag.size() < 2 || tag.size() > 3) return false;
    for (char c : tag) {
        if (c < 'a' || c > 'z') return false;
    }
    return is_iso639_code(tag);
}

int64_t backfill_epoch() {
    static const int64_t t = util::civil_to_epoch(kBackfillYear, kBackfillMonth, kBackfillDay);
    return t;
}

bool is_backfill_date(int64_t epoch_seconds) {
    util::CivilDate c = util::epoch_to_civil(epoch_seconds);
    return c.year == kBackfillYear && c.month == kBackfillMonth && c.day == kBackfillDay;
}

} // namespace

TraitExtraction extract_traits(const std::vector<std::string>& raw_tags) {
    TraitExtraction out;
    for (const std::string& tag : raw_tags) {
        if (util::starts_with(tag, kLicensePrefix)) {
            std::string value = util::to_lower_ascii(tag.substr(kLicensePrefix.size()));
            if (value.empty()) continue;
            if (!out.license) {
                out.license = value;
            } else if (*out.license != value) {
                out.warnings.push_back("multiple license tags; keeping \"" + *out.license +
                                       "\", ignoring \"" + value + "\"");
            }
        } else if (util::starts_with(tag, kArxivPrefix)) {
            std::string id = tag.substr(kArxivPrefix.size());
            if (!id.empty()) out.arxiv_ids.insert(id);
        } else if (util::starts_with(tag, kBaseModelPrefix)) {
            std::string_view rest = std::string_view(tag).substr(kBaseModelPrefix.size());
            std::size_t colon = rest.find(':');
            if (colon == std::string_view::npos) continue; // bare base_model: tag, not a relation
            auto kind = relation_kind_from(rest.substr(0, colon));
            std::string_view parent = rest.substr(colon + 1);
            if (!kind || parent.empty()) continue;
            ParentRelation rel{std::string(parent), *kind};
            if (std::find(out.parent_relations.begin(), out.parent_relations.end(), rel) ==
                out.parent_relations.end()) {
                out.parent_relations.push_back(std::move(rel));
            }
        } else if (is_bare_language_tag(util::to_lower_ascii(tag))) {
            out.languages.insert(util::to_lower_ascii(tag));
        }
    }
    return out;
}

std::string canonical_metadata_string(const ModelRecord& record) {
    ordered_json j;
    j["model_id"] = record.model_id;
    j["created_at"] = util::format_iso8601(record.created_at);
    j["downloads"] = record.downloads;
    j["likes"] = record.likes;
    if (record.trending_score)
        j["trending_score"] = *record.trending_score;
    else
        j["trending_score"] = nullptr;
    j["pipeline_tag"] = record.pipeline_tag ? ordered_json(*record.pipeline_tag) : ordered_json(nullptr);
    j["library_name"] = record.library_name ? ordered_json(*record.library_name) : ordered_json(nullptr);
    j["license"] = record.license ? ordered_json(*record.license) : ordered_json(nullptr);
    j["languages"] = record.languages; // std::set serializes in sorted order
    j["arxiv_ids"] = record.arxiv_ids;
    auto parents = ordered_json::array();
    for (const ParentRelation& rel : record.parent_relations)
        parents.push_back(std::string(to_string(rel.kind)) + ":" + rel.parent_id);
    j["parent_relations"] = std::move(parents);
    j["tags"] = record.raw_tags;
    return j.dump();
}

std::optional<ModelRecord> parse_record_line(std::string_view line, std::vector<std::string>* warnings) {
    ordered_json j = ordered_json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;

    auto field = [&j](const char* a, const char* b = nullptr) -> const ordered_json* {
        if (auto it = j.find(a); it != j.end() && !it->is_null()) return &*it;
        if (b != nullptr) {
            if (auto it = j.find(b); it != j.end() && !it->is_null()) return &*it;
        }
        return nullptr;
    };

    ModelRecord r;

    const ordered_json* id = field("model_id", "id");
    if (id == nullptr || !id->is_string()) return std::nullopt;
    r.model_id = id->get<std::string>();
    if (r.model_id.empty()) return std::nullopt;

    if (const ordered_json* created = field("created_at", "createdAt")) {
        if (!created->is_string()) return std::nullopt;
        auto t = util::parse_iso8601(created->get<std::string>());
        if (!t) return std::nullopt;
        r.created_at = *t;
    } else {
        r.created_at = backfill_epoch();
    }
    r.created_at_backfilled = is_backfill_date(r.created_at);

    if (const ordered_json* v = field("downloads")) {
        if (!v->is_number_integer() || v->get<int64_t>() < 0) return std::nullopt;
        r.downloads = v->get<int64_t>();
    }
    if (const ordered_json* v = field("likes")) {
        if (!v->is_number_integer() || v->get<int64_t>() < 0) return std::nullopt;
        r.likes = v->get<int64_t>();
    }
    if (const ordered_json* v = field("trending_score", "trendingScore")) {
        if (!v->is_number()) return std::nullopt;
        r.trending_score = v->get<double>();
    }
    if (const ordered_json* v = field("pipeline_tag")) {
        if (!v->is_string()) return std::nullopt;
        r.pipeline_tag = v->get<std::string>();
    }
    if (const ordered_json* v = field("library_name")) {
        if (!v->is_string()) return std::nullopt;
        r.library_name = v->get<std::string>();
    }
    if (const ordered_json* v = field("tags")) {
        if (!v->is_array()) return std::nullopt;
        r.raw_tags.reserve(v->size());
        for (const auto& tag : *v) {
            if (!tag.is_string()) return std::nullopt;
            r.raw_tags.push_back(tag.get<std::string>());
        }
    }
    if (const ordered_json* v = field("card_text", "card")) {
        if (!v->is_string()) return std::nullopt;
        r.card_text = v->get<std::string>();
    }

    TraitExtraction traits = extract_traits(r.raw_tags);
    r.license = std::move(traits.license);
    r.languages = std::move(traits.languages);
    r.arxiv_ids = std::move(traits.arxiv_ids);
    r.parent_relations = std::move(traits.parent_relations);
    if (warnings != nullptr) {
        for (std::string& w : traits.warnings)
            warnings->push_back(r.model_id + ": " + std::move(w));
    }

    r.metadata_string = canonical_metadata_string(r);
    return r;
}

namespace {

struct ChunkOutput {
    std::vector<std::pair<std::size_t, ModelRecord>> records; // (line number, record)
    std::size_t total_lines = 0;
    std::size_t malformed = 0;
    std::vector<std::string> warnings;
};

ChunkOutput parse_chunk(std::string_view buffer, std::size_t begin, std::size_t end) {
    ChunkOutput out;
    std::size_t pos = begin;
    while (pos < end) {
        std::size_t line_start = pos;
        std::size_t eol = buffer.find('\n', pos);
        if (eol == std::string_view::npos || eol > end) eol = end;
        std::string_view line = buffer.substr(pos, eol - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        pos = eol + 1;
        if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
        ++out.total_lines;
        auto record = parse_record_line(line, &out.warnings);
        if (record) {
            out.records.emplace_back(line_start, std::move(*record));
        } else {
            ++out.malformed;
        }
    }
    return out;
}

} // namespace

ParseResult parse_snapshot(std::istream& in, const ParseOptions& options) {
    if (!in.good()) throw IoError("snapshot stream is not readable");

    std::string buffer((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("I/O failure while reading snapshot stream");

    std::size_t workers = options.threads == 0
                              ? std::max<std::size_t>(1, std::thread::hardware_concurrency())
                              : options.threads;
    workers = std::min<std::size_t>(workers, 1 + buffer.size() / (1 << 20));

    // Slice at line boundaries so each worker owns whole lines.
    std::vector<std::pair<std::size_t, std::size_t>> slices;
    std::size_t begin = 0;
    for (std::size_t w = 0; w < workers; ++w) {
        std::size_t end = (w + 1 == workers) ? buffer.size() : buffer.size() * (w + 1) / workers;
        if (end < buffer.size()) {
            std::size_t nl = buffer.find('\n', end);
            end = (nl == std::string::npos) ? buffer.size() : nl + 1;
        }
        if (begin < end) slices.emplace_back(begin, end);
        begin = end;
    }

    std::vector<ChunkOutput> outputs(slices.size());
    if (slices.size() <= 1) {
        if (!slices.empty())
            outputs[0] = parse_chunk(buffer, slices[0].first, slices[0].second);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(slices.size());
        for (std::size_t i = 0; i < slices.size(); ++i) {
            pool.emplace_back([&, i] { outputs[i] = parse_chunk(buffer, slices[i].first, slices[i].second); });
        }
        for (std::thread& t : pool) t.join();
    }

    ParseReport report;
    std::vector<std::pair<std::size_t, ModelRecord>> all;
    for (ChunkOutput& o : outputs) {
        report.total_lines += o.total_lines;
        report.malformed_lines += o.malformed;
        for (auto& w : o.warnings) report.warnings.push_back(std::move(w));
        for (auto& r : o.records) all.push_back(std::move(r));
    }

    if (report.total_lines > 0 &&
        static_cast<double>(report.malformed_lines) / static_cast<double>(report.total_lines) >
            options.max_malformed_fraction) {
        std::ostringstream msg;
        msg << "corrupt snapshot: " << report.malformed_lines << " of " << report.total_lines
            << " lines malformed (threshold " << options.max_malformed_fraction << ")";
        throw CorruptSnapshotError(msg.str());
    }

    // First byte-position occurrence wins on duplicate ids, independent of
    // the worker schedule.
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
        if (a.second.model_id != b.second.model_id) return a.second.model_id < b.second.model_id;
        return a.first < b.first;
    });
    std::vector<ModelRecord> records;
    records.reserve(all.size());
    for (auto& [pos, rec] : all) {
        if (!records.empty() && records.back().model_id == rec.model_id) {
            ++report.duplicate_ids;
            report.warnings.push_back("duplicate model_id \"" + rec.model_id +
                                      "\"; keeping first occurrence");
            continue;
        }
        records.push_back(std::move(rec));
    }
    std::sort(report.warnings.begin(), report.warnings.end());

    ParseResult result;
    result.records = RecordSet(std::move(records));
    result.report = std::move(report);
    return result;
}

ParseResult parse_snapshot_file(const std::filesystem::path& path, const ParseOptions& options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open snapshot file: " + path.string());
    return parse_snapshot(in, options);
}

std::string serialize_record(const ModelRecord& record) {
    ordered_json j;
    j["model_id"] = record.model_id;
    j["created_at"] = util::format_iso8601(record.created_at);
    j["downloads"] = record.downloads;
    j["likes"] = record.likes;
    if (record.trending_score) j["trending_score"] = *record.trending_score;
    if (record.pipeline_tag) j["pipeline_tag"] = *record.pipeline_tag;
    if (record.library_name) j["library_name"] = *record.library_name;
    j["tags"] = record.raw_tags;
    if (record.card_text) j["card_text"] = *record.card_text;
    return j.dump();
}

void serialize_snapshot(const RecordSet& records, std::ostream& out) {
    for (const ModelRecord& r : records) out << serialize_record(r) << '\n';
}

std::filesystem::path card_store_filename(std::string_view model_id) {
    return util::percent_encode(model_id) + ".md";
}

std::map<std::string, std::string> load_card_store(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir))
        throw IoError("card store is not a directory: " + dir.string());
    std::map<std::string, std::string> cards;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".md") continue;
        auto id = util::percent_decode(entry.path().stem().string());
        if (!id) continue;
        std::ifstream in(entry.path(), std::ios::binary);
        if (!in) throw IoError("cannot read card file: " + entry.path().string());
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        cards[*id] = std::move(text);
    }
    return cards;
}

void write_card_store(const std::filesystem::path& dir, const std::map<std::string, std::string>& cards) {
    std::filesystem::create_directories(dir);
    for (const auto& [id, text] : cards) {
        std::ofstream out(dir / card_store_filename(id), std::ios::binary);
        if (!out) throw IoError("cannot write card file for " + id);
        out << text;
    }
}

std::size_t apply_cards(std::vector<ModelRecord>& records, const std::map<std::string, std::string>& cards) {
    std::size_t applied = 0;
    for (ModelRecord& r : records) {
        auto it = cards.find(r.model_id);
        if (it != cards.end()) {
            r.card_text = it->second;
            ++applied;
        }
    }
    return applied;
}

} // namespace lineage::ingest

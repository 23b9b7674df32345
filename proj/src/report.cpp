#include "lineage/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string_view>
#include <unordered_map>

#include <json.hpp>

#include "lineage/cards.hpp"
#include "lineage/errors.hpp"
#include "lineage/family_graph.hpp"
#include "lineage/util.hpp"
#include "lineage/version.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace lineage::report {

namespace {

std::string hex16(uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string fraction(std::size_t part, std::size_t whole) {
    return util::format_double(whole == 0 ? 0.0
                                          : static_cast<double>(part) / static_cast<double>(whole));
}

/// The fields that shape this command's results, in a fixed order. Output
/// and cache locations are deliberately absent: they say where results go,
/// not what they are.
ordered_json config_echo(const RunConfig& config, std::string_view command) {
    ordered_json j;
    j["snapshot"] = config.snapshot_path;
    j["card_store"] = config.card_dir;
    j["max_malformed_fraction"] = config.max_malformed_fraction;
    if (command == "summary") {
        j["top_n"] = config.top_n;
        j["arxiv_category_map"] = config.arxiv_category_map;
    } else if (command == "similarity") {
        j["seed"] = config.seed;
        j["sample_size"] = config.sample_size;
        j["metrics"] = config.metrics;
        j["vocabulary_cap"] = config.vocabulary_cap;
        j["token_mode"] = similarity::to_string(config.token_mode);
        j["idf_mode"] = similarity::to_string(config.idf_mode);
        j["levenshtein_cap"] = config.levenshtein_cap;
        j["random_pair_families_only"] = config.random_pair_families_only;
    } else if (command == "drift") {
        j["trait"] = config.trait;
        j["include_unknown_license"] = config.include_unknown_license;
        j["top_n"] = config.top_n;
        j["objective"] = ordering::to_string(config.objective);
        j["tie_policy"] = ordering::to_string(config.tie_policy);
        j["node_selection"] = mutation::to_string(config.selection);
        j["exact_cap"] = config.exact_cap;
        j["seed"] = config.seed;
        j["heuristic_restarts"] = config.heuristic_restarts;
    }
    return j;
}

void require_positive(std::size_t value, std::string_view what) {
    if (value == 0) throw InvalidInputError(std::string(what) + " must be positive");
}

struct Outputs {
    const RunConfig& config;
    std::string command;
    std::vector<std::string> files;

    void csv(const std::string& name, const std::vector<std::string>& header,
             const std::vector<std::vector<std::string>>& rows) {
        write_csv(fs::path(config.output_dir) / name, command, config, header, rows);
        files.push_back(name);
    }
};

void write_manifest(Outputs& out, const LoadedSnapshot& snap, std::vector<std::string> warnings) {
    ordered_json m;
    m["version"] = kToolkitVersion;
    m["command"] = out.command;
    m["config"] = config_echo(out.config, out.command);
    ordered_json in;
    in["snapshot"] = out.config.snapshot_path;
    in["digest"] = hex16(snap.digest);
    in["records"] = snap.records.size();
    in["lines_seen"] = snap.report.total_lines;
    in["lines_skipped"] = snap.report.malformed_lines;
    in["duplicate_ids"] = snap.report.duplicate_ids;
    in["cards_attached"] = snap.cards_attached;
    m["input"] = std::move(in);
    std::string name = out.command + "_manifest.json";
    out.files.push_back(name);
    m["outputs"] = out.files;
    std::sort(warnings.begin(), warnings.end());
    m["warnings"] = std::move(warnings);

    fs::path path = fs::path(out.config.output_dir) / name;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path.string());
    f << m.dump(2) << '\n';
    if (!f) throw IoError("error writing " + path.string());
}

/// Graph anomalies surfaced as manifest warnings.
void collect_graph_warnings(const graph::FamilyGraph& graph, std::vector<std::string>& warnings) {
    const auto& r = graph.report();
    warnings.insert(warnings.end(), r.warnings.begin(), r.warnings.end());
    for (const std::string& e : r.repaired_edges)
        warnings.push_back("cycle repair dropped edge " + e);
    if (r.self_loops_dropped > 0)
        warnings.push_back("dropped " + std::to_string(r.self_loops_dropped) + " self-loop edge(s)");
    if (r.duplicate_edges_dropped > 0)
        warnings.push_back("dropped " + std::to_string(r.duplicate_edges_dropped) +
                           " duplicate edge(s)");
}

template <typename Map>
std::vector<std::pair<std::string, int64_t>> top_counts(const Map& counts, std::size_t n) {
    std::vector<std::pair<std::string, int64_t>> items(counts.begin(), counts.end());
    std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (items.size() > n) items.resize(n);
    return items;
}

// Readable names for common arXiv subject codes; unknown codes fall back to
// the bare code.
constexpr std::pair<std::string_view, std::string_view> kArxivCategoryNames[] = {
    {"cs.AI", "Computer Science, Artificial Intelligence"},
    {"cs.AR", "Computer Science, Hardware Architecture"},
    {"cs.CC", "Computer Science, Computational Complexity"},
    {"cs.CE", "Computer Science, Computational Engineering, Finance, and Science"},
    {"cs.CG", "Computer Science, Computational Geometry"},
    {"cs.CL", "Computer Science, Computation and Language"},
    {"cs.CR", "Computer Science, Cryptography and Security"},
    {"cs.CV", "Computer Science, Computer Vision and Pattern Recognition"},
    {"cs.CY", "Computer Science, Computers and Society"},
    {"cs.DB", "Computer Science, Databases"},
    {"cs.DC", "Computer Science, Distributed, Parallel, and Cluster Computing"},
    {"cs.DL", "Computer Science, Digital Libraries"},
    {"cs.DM", "Computer Science, Discrete Mathematics"},
    {"cs.DS", "Computer Science, Data Structures and Algorithms"},
    {"cs.GR", "Computer Science, Graphics"},
    {"cs.GT", "Computer Science, Computer Science and Game Theory"},
    {"cs.HC", "Computer Science, Human-Computer Interaction"},
    {"cs.IR", "Computer Science, Information Retrieval"},
    {"cs.IT", "Computer Science, Information Theory"},
    {"cs.LG", "Computer Science, Machine Learning"},
    {"cs.LO", "Computer Science, Logic in Computer Science"},
    {"cs.MA", "Computer Science, Multiagent Systems"},
    {"cs.MM", "Computer Science, Multimedia"},
    {"cs.NE", "Computer Science, Neural and Evolutionary Computing"},
    {"cs.NI", "Computer Science, Networking and Internet Architecture"},
    {"cs.OS", "Computer Science, Operating Systems"},
    {"cs.PL", "Computer Science, Programming Languages"},
    {"cs.RO", "Computer Science, Robotics"},
    {"cs.SD", "Computer Science, Sound"},
    {"cs.SE", "Computer Science, Software Engineering"},
    {"cs.SI", "Computer Science, Social and Information Networks"},
    {"econ.EM", "Economics, Econometrics"},
    {"eess.AS", "Electrical Engineering and Systems Science, Audio and Speech Processing"},
    {"eess.IV", "Electrical Engineering and Systems Science, Image and Video Processing"},
    {"eess.SP", "Electrical Engineering and Systems Science, Signal Processing"},
    {"eess.SY", "Electrical Engineering and Systems Science, Systems and Control"},
    {"math.NA", "Mathematics, Numerical Analysis"},
    {"math.OC", "Mathematics, Optimization and Control"},
    {"math.PR", "Mathematics, Probability"},
    {"math.ST", "Mathematics, Statistics Theory"},
    {"q-bio.BM", "Quantitative Biology, Biomolecules"},
    {"q-bio.GN", "Quantitative Biology, Genomics"},
    {"q-bio.NC", "Quantitative Biology, Neurons and Cognition"},
    {"q-bio.QM", "Quantitative Biology, Quantitative Methods"},
    {"stat.AP", "Statistics, Applications"},
    {"stat.CO", "Statistics, Computation"},
    {"stat.ME", "Statistics, Methodology"},
    {"stat.ML", "Statistics, Machine Learning"},
    {"stat.TH", "Statistics, Statistics Theory"},
};

std::string arxiv_category_name(const std::string& code) {
    for (const auto& [c, name] : kArxivCategoryNames)
        if (c == code) return std::string(name);
    return code;
}

// Values measured on a complete public-registry snapshot (2025 crawl);
// reported alongside fresh full-snapshot runs for comparison, never asserted.
struct FullRegistryReference {
    std::string_view trait;
    int64_t observed_inheritances;
    double mutation_rate;
    std::string_view drifts_following;
    double drift_agreement;
    double mutation_agreement;
};

constexpr FullRegistryReference kFullRegistryReference[] = {
    {"license", 320'065, 0.1498, "132/140", 0.9429, 0.8426},
    {"language", 115'660, 0.1280, "186/190", 0.9789, 0.7471},
    {"task", 251'060, 0.2314, "111/121", 0.9174, 0.9516},
};

} // namespace

std::string csv_escape(std::string_view field) {
    bool needs_quotes = field.find_first_of(",\"\r\n") != std::string_view::npos;
    if (!needs_quotes) return std::string(field);
    std::string out;
    out.reserve(field.size() + 2);
    out.push_back('"');
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

void write_csv(const fs::path& path, std::string_view command, const RunConfig& config,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "# lineage " << kToolkitVersion << "\n";
    out << "# command " << command << "\n";
    out << "# config " << config_echo(config, command).dump() << "\n";
    auto emit = [&out](const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i > 0) out << ',';
            out << csv_escape(fields[i]);
        }
        out << '\n';
    };
    emit(header);
    for (const auto& row : rows) emit(row);
    if (!out) throw IoError("error writing " + path.string());
}

LoadedSnapshot load_snapshot(const RunConfig& config) {
    std::ifstream in(config.snapshot_path, std::ios::binary);
    if (!in) throw IoError("cannot open snapshot: " + config.snapshot_path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("error reading snapshot: " + config.snapshot_path);
    std::string bytes = std::move(buf).str();

    LoadedSnapshot out;
    out.digest = util::fnv1a64(bytes);

    ingest::ParseOptions popts;
    popts.max_malformed_fraction = config.max_malformed_fraction;
    popts.threads = config.threads;

    fs::path cached_records, cached_meta;
    if (!config.cache_dir.empty()) {
        std::string key = hex16(out.digest) + "-v" + std::to_string(kCacheFormatVersion);
        cached_records = fs::path(config.cache_dir) / (key + ".ndjson");
        cached_meta = fs::path(config.cache_dir) / (key + ".json");
    }

    bool loaded = false;
    if (!cached_meta.empty() && fs::exists(cached_meta) && fs::exists(cached_records)) {
        try {
            std::ifstream mf(cached_meta);
            auto meta = nlohmann::json::parse(mf);
            if (meta.at("cache_format").get<int>() == kCacheFormatVersion &&
                meta.at("digest").get<std::string>() == hex16(out.digest)) {
                std::ifstream rf(cached_records, std::ios::binary);
                if (!rf) throw IoError("cannot open cached records");
                auto result = ingest::parse_snapshot(rf, popts);
                out.records = std::move(result.records);
                // the original parse report, so cached loads echo the same
                // warnings and counts as fresh ones
                out.report.total_lines = meta.at("total_lines").get<std::size_t>();
                out.report.malformed_lines = meta.at("malformed_lines").get<std::size_t>();
                out.report.duplicate_ids = meta.at("duplicate_ids").get<std::size_t>();
                out.report.warnings = meta.at("warnings").get<std::vector<std::string>>();
                out.cache_hit = true;
                loaded = true;
            }
        } catch (const std::exception&) {
            loaded = false; // unusable cache entry; fall back to a fresh parse
        }
    }

    if (!loaded) {
        std::istringstream stream(std::move(bytes));
        auto result = ingest::parse_snapshot(stream, popts);
        out.records = std::move(result.records);
        out.report = std::move(result.report);

        if (!cached_records.empty()) {
            try {
                fs::create_directories(config.cache_dir);
                fs::path tmp = cached_records;
                tmp += ".tmp";
                {
                    std::ofstream rf(tmp, std::ios::binary);
                    ingest::serialize_snapshot(out.records, rf);
                    if (!rf) throw IoError("cache write failed");
                }
                fs::rename(tmp, cached_records);

                ordered_json meta;
                meta["cache_format"] = kCacheFormatVersion;
                meta["digest"] = hex16(out.digest);
                meta["total_lines"] = out.report.total_lines;
                meta["malformed_lines"] = out.report.malformed_lines;
                meta["duplicate_ids"] = out.report.duplicate_ids;
                meta["warnings"] = out.report.warnings;
                fs::path mtmp = cached_meta;
                mtmp += ".tmp";
                {
                    std::ofstream mf(mtmp, std::ios::binary);
                    mf << meta.dump(2) << '\n';
                    if (!mf) throw IoError("cache write failed");
                }
                // meta lands last: readers only trust entries with both files
                fs::rename(mtmp, cached_meta);
            } catch (const std::exception&) {
                // the cache is an optimization; never let it fail a run
            }
        }
    }

    if (!config.card_dir.empty()) {
        auto cards = ingest::load_card_store(config.card_dir);
        out.cards_attached = ingest::apply_cards(out.records.records_mut(), cards);
    }
    return out;
}

int cmd_summary(const RunConfig& config) {
    require_positive(config.top_n, "top_n");
    LoadedSnapshot snap = load_snapshot(config);
    std::vector<std::string> warnings = snap.report.warnings;
    if (snap.records.empty()) warnings.push_back("snapshot contains no records");

    auto graph = graph::FamilyGraph::build(snap.records);
    collect_graph_warnings(graph, warnings);

    std::map<std::string, int64_t> licenses, tasks, languages, libraries, arxiv;
    for (const ModelRecord& r : snap.records) {
        if (r.license) ++licenses[*r.license];
        if (r.pipeline_tag) ++tasks[*r.pipeline_tag];
        if (r.library_name) ++libraries[*r.library_name];
        for (const std::string& lang : r.languages) ++languages[lang];
        for (const std::string& id : r.arxiv_ids) ++arxiv[id];
    }

    Outputs out{config, "summary", {}};
    auto count_table = [&](const std::string& file, const std::string& key_column,
                           const std::map<std::string, int64_t>& counts) {
        std::vector<std::vector<std::string>> rows;
        for (const auto& [key, n] : top_counts(counts, config.top_n))
            rows.push_back({key, std::to_string(n)});
        out.csv(file, {key_column, "models"}, rows);
    };
    count_table("licenses.csv", "license", licenses);
    count_table("tasks.csv", "task", tasks);
    count_table("languages.csv", "language", languages);
    count_table("libraries.csv", "library", libraries);
    count_table("arxiv_ids.csv", "arxiv_id", arxiv);

    {
        const auto& nodes = graph.nodes();
        std::vector<std::pair<std::size_t, graph::NodeIndex>> ranked;
        for (graph::NodeIndex v = 0; v < nodes.size(); ++v) {
            std::size_t c = graph.child_count(v);
            if (c > 0) ranked.emplace_back(c, v);
        }
        std::sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return nodes.id(a.second) < nodes.id(b.second);
        });
        if (ranked.size() > config.top_n) ranked.resize(config.top_n);
        std::vector<std::vector<std::string>> rows;
        for (const auto& [c, v] : ranked)
            rows.push_back(
                {nodes.id(v), std::to_string(c), nodes.external(v) ? "true" : "false"});
        out.csv("top_children.csv", {"model_id", "children", "external"}, rows);
    }

    {
        std::vector<const ModelRecord*> ranked;
        for (const ModelRecord& r : snap.records) ranked.push_back(&r);
        std::sort(ranked.begin(), ranked.end(), [](const ModelRecord* a, const ModelRecord* b) {
            if (a->downloads != b->downloads) return a->downloads > b->downloads;
            return a->model_id < b->model_id;
        });
        if (ranked.size() > config.top_n) ranked.resize(config.top_n);
        std::vector<std::vector<std::string>> rows;
        for (const ModelRecord* r : ranked)
            rows.push_back({r->model_id, std::to_string(r->downloads)});
        out.csv("top_downloads.csv", {"model_id", "downloads"}, rows);
    }

    if (!config.arxiv_category_map.empty()) {
        std::ifstream mf(config.arxiv_category_map);
        if (!mf) throw IoError("cannot open arXiv category map: " + config.arxiv_category_map);
        nlohmann::json map_json;
        try {
            map_json = nlohmann::json::parse(mf);
        } catch (const nlohmann::json::exception& e) {
            throw InvalidInputError("arXiv category map is not valid JSON: " +
                                    std::string(e.what()));
        }
        if (!map_json.is_object())
            throw InvalidInputError("arXiv category map must be an object of id -> [codes]");
        // every category occurrence counts: a model whose papers list a code
        // twice contributes twice, matching flatten-then-count semantics
        std::map<std::string, int64_t> categories;
        for (const ModelRecord& r : snap.records) {
            for (const std::string& id : r.arxiv_ids) {
                auto it = map_json.find(id);
                if (it == map_json.end()) continue;
                for (const auto& code : *it) ++categories[code.get<std::string>()];
            }
        }
        std::vector<std::vector<std::string>> rows;
        for (const auto& [code, n] : top_counts(categories, config.top_n))
            rows.push_back({code, arxiv_category_name(code), std::to_string(n)});
        out.csv("arxiv_categories.csv", {"category", "name", "count"}, rows);
    }

    {
        std::vector<std::vector<std::string>> rows;
        for (std::string_view flag :
             {"endpoints_compatible", "safetensors", "autotrain_compatible"}) {
            std::size_t n = 0;
            for (const ModelRecord& r : snap.records)
                if (std::find(r.raw_tags.begin(), r.raw_tags.end(), flag) != r.raw_tags.end())
                    ++n;
            rows.push_back({std::string(flag), std::to_string(n),
                            fraction(n, snap.records.size())});
        }
        out.csv("doc_flags.csv", {"flag", "models", "fraction"}, rows);
    }

    write_manifest(out, snap, std::move(warnings));
    return 0;
}

int cmd_similarity(const RunConfig& config) {
    require_positive(config.sample_size, "sample_size");
    require_positive(config.vocabulary_cap, "vocabulary_cap");
    if (config.metrics.empty()) throw InvalidInputError("no metrics selected");
    std::vector<sampling::Metric> metrics;
    for (const std::string& name : config.metrics) {
        auto m = sampling::metric_from(name);
        if (!m) throw InvalidInputError("unknown metric: " + name);
        metrics.push_back(*m);
    }

    LoadedSnapshot snap = load_snapshot(config);
    std::vector<std::string> warnings = snap.report.warnings;
    auto graph = graph::FamilyGraph::build(snap.records);
    collect_graph_warnings(graph, warnings);
    auto forest = graph::FinetuneForest::build(graph);
    warnings.insert(warnings.end(), forest.report().warnings.begin(),
                    forest.report().warnings.end());

    sampling::EstimatorOptions eopts;
    eopts.vocabulary_cap = config.vocabulary_cap;
    eopts.token_mode = config.token_mode;
    eopts.idf_mode = config.idf_mode;
    eopts.levenshtein_cap = config.levenshtein_cap;
    eopts.sites.random_pair_families_only = config.random_pair_families_only;
    sampling::SimilarityEstimator estimator(forest, snap.records, eopts);

    Outputs out{config, "similarity", {}};

    {
        std::vector<std::vector<std::string>> rows;
        for (sampling::Pattern p : sampling::kAllPatterns) {
            const auto& table = estimator.site_table(p);
            rows.push_back({std::string(sampling::to_string(p)),
                            std::to_string(table.sites.size()),
                            std::to_string(table.total_count)});
        }
        out.csv("pattern_sites.csv", {"pattern", "anchors", "instances"}, rows);
    }

    bool any_cards = false;
    for (const ModelRecord& r : snap.records)
        if (r.card_text) {
            any_cards = true;
            break;
        }

    std::vector<std::vector<std::string>> rows;
    std::set<std::string> skipped_card_metrics;
    for (sampling::Pattern p : sampling::kAllPatterns) {
        for (const sampling::RolePair& roles : sampling::canonical_role_pairs(p)) {
            for (sampling::Metric metric : metrics) {
                std::string metric_name = sampling::to_string(metric);
                if (metric.source == sampling::Metric::Source::card && !any_cards) {
                    if (skipped_card_metrics.insert(metric_name).second)
                        warnings.push_back(metric_name + ": no cards in snapshot; skipped");
                    continue;
                }
                std::string label = std::string(sampling::to_string(p)) + "|" + roles.a + "|" +
                                    roles.b + "|" + metric_name;
                uint64_t est_seed = util::fnv1a64(label) ^ config.seed;
                try {
                    auto e = estimator.estimate_similarity(p, roles, metric, config.sample_size,
                                                           est_seed);
                    rows.push_back({std::string(sampling::to_string(p)), roles.a, roles.b,
                                    metric_name, std::to_string(e.sample_size),
                                    util::format_double(e.mean),
                                    util::format_double(e.standard_error), hex16(e.seed),
                                    std::to_string(e.resampled_draws),
                                    std::to_string(e.zero_vector_pairs),
                                    std::to_string(e.truncated_pairs)});
                } catch (const NoSitesError& e) {
                    warnings.push_back(std::string(sampling::to_string(p)) + " " + roles.a + "-" +
                                       roles.b + " " + metric_name + ": " + e.what());
                }
            }
        }
    }
    if (rows.empty())
        throw NoDataError("no similarity estimate could be produced from this snapshot");

    out.csv("similarity.csv",
            {"pattern", "role_a", "role_b", "metric", "samples", "mean", "standard_error", "seed",
             "resampled_draws", "zero_vector_pairs", "truncated_pairs"},
            rows);
    write_manifest(out, snap, std::move(warnings));
    return 0;
}

int cmd_drift(const RunConfig& config) {
    require_positive(config.top_n, "top_n");
    require_positive(config.exact_cap, "exact_cap");
    auto trait = mutation::trait_from(config.trait, config.include_unknown_license);
    if (!trait) throw InvalidInputError("unknown trait: " + config.trait);

    LoadedSnapshot snap = load_snapshot(config);
    std::vector<std::string> warnings = snap.report.warnings;
    auto graph = graph::FamilyGraph::build(snap.records);
    collect_graph_warnings(graph, warnings);
    auto forest = graph::FinetuneForest::build(graph);
    warnings.insert(warnings.end(), forest.report().warnings.begin(),
                    forest.report().warnings.end());

    mutation::EventLog log = mutation::collect_events(forest, snap.records, *trait);
    if (log.rate.observed_edges == 0)
        throw NoDataError("no finetune edge documents trait \"" + config.trait +
                          "\" on both ends");

    std::unordered_map<std::string, int64_t> frequencies;
    const std::unordered_map<std::string, int64_t>* freq_ptr = nullptr;
    if (config.selection == mutation::NodeSelection::frequency) {
        for (const ModelRecord& r : snap.records)
            for (const std::string& v : trait->values(r)) ++frequencies[v];
        freq_ptr = &frequencies;
    }
    mutation::DriftGraph drift = mutation::build_drift_graph(log.events, config.top_n,
                                                             config.selection, freq_ptr,
                                                             trait->name);

    ordering::OrderingResult result;
    if (drift.values.size() <= config.exact_cap) {
        result = ordering::solve_exact(drift, config.objective, config.exact_cap,
                                       config.tie_policy);
    } else {
        warnings.push_back("drift graph has " + std::to_string(drift.values.size()) +
                           " values; exact cap is " + std::to_string(config.exact_cap) +
                           ", using the heuristic solver");
        result = ordering::solve_heuristic(drift, config.objective, config.seed,
                                           config.tie_policy, config.heuristic_restarts);
    }

    Outputs out{config, "drift", {}};

    {
        std::vector<std::vector<std::string>> rows;
        std::size_t k = drift.values.size();
        for (std::size_t i = 0; i < k; ++i) {
            int64_t outgoing = 0, incoming = 0;
            for (std::size_t j = 0; j < k; ++j) {
                outgoing += drift.count(i, j);
                incoming += drift.count(j, i);
            }
            rows.push_back({drift.values[i], std::to_string(outgoing), std::to_string(incoming)});
        }
        out.csv("drift_values.csv", {"value", "events_out", "events_in"}, rows);
    }

    {
        std::vector<std::vector<std::string>> rows;
        for (const mutation::DriftEdge& e : drift.edges)
            rows.push_back({drift.values[e.source], drift.values[e.target],
                            std::to_string(e.weight), std::to_string(e.margin),
                            e.tie ? "true" : "false"});
        out.csv("drift_edges.csv", {"source", "target", "weight", "margin", "tie"}, rows);
    }

    {
        std::vector<std::string> header = {"value"};
        header.insert(header.end(), drift.values.begin(), drift.values.end());
        std::vector<std::vector<std::string>> rows;
        std::size_t k = drift.values.size();
        for (std::size_t i = 0; i < k; ++i) {
            std::vector<std::string> row = {drift.values[i]};
            for (std::size_t j = 0; j < k; ++j) row.push_back(std::to_string(drift.count(i, j)));
            rows.push_back(std::move(row));
        }
        out.csv("drift_matrix.csv", header, rows);
    }

    {
        std::string ordering_text;
        for (std::size_t i = 0; i < result.permutation.size(); ++i) {
            if (i > 0) ordering_text += ", ";
            ordering_text += drift.values[result.permutation[i]];
        }
        std::vector<std::vector<std::string>> rows = {
            {"trait", trait->name},
            {"objective", std::string(ordering::to_string(result.objective))},
            {"tie_policy", std::string(ordering::to_string(config.tie_policy))},
            {"node_selection", std::string(mutation::to_string(config.selection))},
            {"solver", result.solver},
            {"optimal", result.optimal ? "true" : "false"},
            {"values_retained", std::to_string(drift.values.size())},
            {"optimal_ordering", ordering_text},
            {"observed_inheritances", std::to_string(log.rate.observed_edges)},
            {"mutation_rate", util::format_double(log.rate.rate)},
            {"mutated_edges", std::to_string(log.rate.mutated_edges)},
            {"one_sided_excluded", std::to_string(log.rate.one_sided_excluded)},
            {"undocumented_excluded", std::to_string(log.rate.undocumented_excluded)},
            {"events_total", std::to_string(drift.total_events)},
            {"events_retained", std::to_string(drift.retained_events)},
            {"drift_edges", std::to_string(drift.edges.size())},
            {"drift_edges_scored", std::to_string(result.scores.scored_edges)},
            {"drifts_following_order", std::to_string(result.scores.forward_edges)},
            {"drift_agreement", util::format_double(result.scores.drift_agreement)},
            {"mutation_mass_total", std::to_string(result.scores.total_mass)},
            {"mutation_mass_forward", std::to_string(result.scores.forward_mass)},
            {"mutation_agreement", util::format_double(result.scores.mutation_agreement)},
        };
        for (const FullRegistryReference& ref : kFullRegistryReference) {
            if (ref.trait != trait->name) continue;
            rows.push_back({"reference_observed_inheritances",
                            std::to_string(ref.observed_inheritances)});
            rows.push_back({"reference_mutation_rate", util::format_double(ref.mutation_rate)});
            rows.push_back({"reference_drifts_following_order",
                            std::string(ref.drifts_following)});
            rows.push_back({"reference_drift_agreement",
                            util::format_double(ref.drift_agreement)});
            rows.push_back({"reference_mutation_agreement",
                            util::format_double(ref.mutation_agreement)});
            rows.push_back({"reference_note",
                            "full public-registry measurements, shown for comparison only; the "
                            "live registry has grown since"});
        }
        out.csv("drift_stats.csv", {"metric", "value"}, rows);
    }

    write_manifest(out, snap, std::move(warnings));
    return 0;
}

int cmd_graphstats(const RunConfig& config) {
    LoadedSnapshot snap = load_snapshot(config);
    std::vector<std::string> warnings = snap.report.warnings;
    if (snap.records.empty()) warnings.push_back("snapshot contains no records");
    auto graph = graph::FamilyGraph::build(snap.records);
    collect_graph_warnings(graph, warnings);
    auto forest = graph::FinetuneForest::build(graph);
    warnings.insert(warnings.end(), forest.report().warnings.begin(),
                    forest.report().warnings.end());
    const auto& nodes = graph.nodes();

    Outputs out{config, "graphstats", {}};

    {
        std::vector<std::vector<std::string>> rows;
        for (const graph::TreeStats& t : graph::depth_stats(forest))
            rows.push_back({nodes.id(t.root), std::to_string(t.size),
                            std::to_string(t.max_depth), util::format_double(t.mean_depth),
                            t.virality ? util::format_double(*t.virality) : std::string()});
        out.csv("trees.csv", {"root", "size", "max_depth", "mean_depth", "virality"}, rows);
    }

    {
        std::vector<std::vector<std::string>> rows;
        for (const auto& comp : graph.components()) {
            std::size_t externals = 0;
            for (graph::NodeIndex v : comp)
                if (nodes.external(v)) ++externals;
            rows.push_back({nodes.id(comp.front()), std::to_string(comp.size()),
                            std::to_string(externals)});
        }
        out.csv("components.csv", {"component", "size", "externals"}, rows);
    }

    {
        // growth only makes sense where something grew: multi-node components
        std::vector<std::vector<std::string>> rows;
        for (const auto& comp : graph.components()) {
            if (comp.size() < 2) continue;
            const std::string& name = nodes.id(comp.front());
            for (const graph::GrowthPoint& p :
                 graph::component_growth(comp, nodes, snap.records))
                rows.push_back({name, util::format_iso8601(p.timestamp),
                                std::to_string(p.cumulative), p.backfilled ? "true" : "false"});
        }
        out.csv("growth.csv", {"component", "timestamp", "cumulative", "backfilled"}, rows);
    }

    {
        std::vector<std::vector<std::string>> rows;
        for (const graph::Edge& e : graph.edges())
            rows.push_back({nodes.id(e.parent), nodes.id(e.child),
                            std::string(to_string(e.kind))});
        out.csv("graph_edges.csv", {"parent", "child", "kind"}, rows);
    }

    write_manifest(out, snap, std::move(warnings));
    return 0;
}

int cmd_cards(const RunConfig& config) {
    LoadedSnapshot snap = load_snapshot(config);
    std::vector<std::string> warnings = snap.report.warnings;
    if (snap.records.empty()) warnings.push_back("snapshot contains no records");
    auto graph = graph::FamilyGraph::build(snap.records);
    collect_graph_warnings(graph, warnings);
    auto forest = graph::FinetuneForest::build(graph);
    warnings.insert(warnings.end(), forest.report().warnings.begin(),
                    forest.report().warnings.end());

    Outputs out{config, "cards", {}};

    std::vector<std::vector<std::string>> stat_rows;
    stat_rows.push_back({"records", std::to_string(snap.records.size())});
    stat_rows.push_back({"coverage", util::format_double(cards::card_coverage(snap.records))});
    try {
        cards::LengthStats ls = cards::length_stats(snap.records);
        stat_rows.push_back({"cards", std::to_string(ls.cards)});
        stat_rows.push_back({"mean_chars", util::format_double(ls.mean)});
        stat_rows.push_back({"median_chars", util::format_double(ls.median)});
        stat_rows.push_back({"min_chars", std::to_string(ls.min)});
        stat_rows.push_back({"max_chars", std::to_string(ls.max)});
        stat_rows.push_back({"mean_words", util::format_double(ls.mean_words)});
    } catch (const NoDataError& e) {
        warnings.push_back(std::string("length statistics skipped: ") + e.what());
    }
    try {
        cards::DeltaStats ds = cards::parent_child_delta(forest, snap.records);
        stat_rows.push_back({"parent_child_mean_delta", util::format_double(ds.mean_delta)});
        stat_rows.push_back({"parent_child_edges", std::to_string(ds.edges)});
    } catch (const NoDataError& e) {
        warnings.push_back(std::string("parent-child delta skipped: ") + e.what());
    }
    out.csv("card_stats.csv", {"metric", "value"}, stat_rows);

    {
        cards::AutogenRates rates = cards::autogen_rate(snap.records, graph);
        std::vector<std::vector<std::string>> rows;
        auto add = [&rows](std::string_view group, const cards::GroupRate& g) {
            rows.push_back({std::string(group), std::to_string(g.models),
                            std::to_string(g.flagged), util::format_double(g.rate)});
        };
        add("root", rates.roots);
        for (int k = 0; k < kRelationKindCount; ++k)
            add(to_string(static_cast<RelationKind>(k)), rates.by_kind[k]);
        out.csv("autogen.csv", {"group", "models", "flagged", "rate"}, rows);
    }

    {
        std::vector<std::vector<std::string>> rows;
        for (const cards::GenerationLengths& g :
             cards::generation_length_means(forest, snap.records))
            rows.push_back({std::to_string(g.generation), std::to_string(g.cards),
                            util::format_double(g.mean_length)});
        out.csv("generation_lengths.csv", {"generation", "cards", "mean_chars"}, rows);
    }

    write_manifest(out, snap, std::move(warnings));
    return 0;
}

} // namespace lineage::report

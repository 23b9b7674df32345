#pragma once

// Shared fixture builders and independent oracles. Everything here avoids the
// library's closed forms on purpose: counts come from nested loops, means from
// exhaustive enumeration, edit distances from a full-matrix DP.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lineage/family_graph.hpp"
#include "lineage/ingest.hpp"
#include "lineage/record.hpp"
#include "lineage/sampling.hpp"
#include "lineage/util.hpp"

namespace th {

/// doctest-independent assertion so the same helpers serve the acceptance
/// binary; a thrown exception fails either harness.
inline void require(bool ok, const std::string& what) {
    if (!ok) throw std::runtime_error("test helper requirement failed: " + what);
}

using lineage::ModelRecord;
using lineage::RecordSet;
namespace graph = lineage::graph;
namespace sampling = lineage::sampling;

struct RecSpec {
    std::string id;
    std::string created = "2023-05-01T00:00:00Z";
    std::vector<std::pair<std::string, std::string>> parents; // kind, parent id
    std::string license;
    std::vector<std::string> languages;
    std::string task;
    std::string library;
    std::string card;
    bool has_card = false; // set true to attach card (possibly empty text)
    std::vector<std::string> arxiv;
    std::vector<std::string> extra_tags;
    long long downloads = 0;
    long long likes = 0;
};

inline RecSpec spec(std::string id) {
    RecSpec s;
    s.id = std::move(id);
    return s;
}

inline std::string line_of(const RecSpec& s) {
    nlohmann::ordered_json j;
    j["model_id"] = s.id;
    j["created_at"] = s.created;
    j["downloads"] = s.downloads;
    j["likes"] = s.likes;
    std::vector<std::string> tags;
    if (!s.license.empty()) tags.push_back("license:" + s.license);
    for (const auto& l : s.languages) tags.push_back(l);
    for (const auto& [kind, pid] : s.parents) tags.push_back("base_model:" + kind + ":" + pid);
    for (const auto& a : s.arxiv) tags.push_back("arxiv:" + a);
    tags.insert(tags.end(), s.extra_tags.begin(), s.extra_tags.end());
    j["tags"] = tags;
    if (!s.task.empty()) j["pipeline_tag"] = s.task;
    if (!s.library.empty()) j["library_name"] = s.library;
    if (s.has_card || !s.card.empty()) j["card_text"] = s.card;
    return j.dump();
}

inline ModelRecord record_of(const RecSpec& s) {
    auto rec = lineage::ingest::parse_record_line(line_of(s));
    require(rec.has_value(), "record line for " + s.id + " must parse");
    return *rec;
}

inline RecordSet set_of(const std::vector<RecSpec>& specs) {
    std::ostringstream ss;
    for (const auto& s : specs) ss << line_of(s) << "\n";
    std::istringstream in(ss.str());
    auto result = lineage::ingest::parse_snapshot(in);
    return std::move(result.records);
}

/// Records + both graph views, built together so tests stay one-liners.
struct Family {
    RecordSet records;
    graph::FamilyGraph graph;
    graph::FinetuneForest forest;
};

inline Family family_of(const std::vector<RecSpec>& specs) {
    RecordSet records = set_of(specs);
    auto g = graph::FamilyGraph::build(records);
    auto f = graph::FinetuneForest::build(g);
    return Family{std::move(records), std::move(g), std::move(f)};
}

/// Random forest generator for property tests. Node i > 0 gets a finetune
/// parent among earlier nodes with probability `attach`, so shapes range from
/// all-singletons to deep or bushy trees. std::mt19937 keeps the generator
/// independent of the library's RandomStream.
inline std::vector<RecSpec> random_forest(std::mt19937& rng, std::size_t n, double attach = 0.85) {
    std::vector<RecSpec> specs;
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    static const char* licenses[] = {"apache-2.0", "mit", "llama2", "cc-by-4.0", "gemma"};
    static const char* langs[] = {"en", "fr", "zh", "de"};
    for (std::size_t i = 0; i < n; ++i) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "fam/m%04zu", i);
        RecSpec s = spec(buf);
        if (i > 0 && coin(rng) < attach) {
            std::uniform_int_distribution<std::size_t> pick(0, i - 1);
            char pbuf[32];
            std::snprintf(pbuf, sizeof(pbuf), "fam/m%04zu", pick(rng));
            s.parents.emplace_back("finetune", pbuf);
        }
        s.license = licenses[rng() % 5];
        s.languages = {langs[rng() % 4]};
        if (coin(rng) < 0.6) s.task = coin(rng) < 0.5 ? "text-generation" : "fill-mask";
        s.downloads = static_cast<long long>(rng() % 100000);
        specs.push_back(std::move(s));
    }
    return specs;
}

// ---- Oracles ----------------------------------------------------------------

/// Edit distance by the full (m+1)x(n+1) matrix, written independently of the
/// library's banded two-row implementation.
inline std::size_t oracle_levenshtein(const std::vector<uint32_t>& a,
                                      const std::vector<uint32_t>& b) {
    std::vector<std::vector<std::size_t>> d(a.size() + 1,
                                            std::vector<std::size_t>(b.size() + 1, 0));
    for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
    for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i)
        for (std::size_t j = 1; j <= b.size(); ++j) {
            std::size_t sub = d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, sub});
        }
    return d[a.size()][b.size()];
}

inline std::size_t oracle_levenshtein(std::string_view a, std::string_view b) {
    return oracle_levenshtein(lineage::util::utf8_codepoints(a),
                              lineage::util::utf8_codepoints(b));
}

/// One brute-forced pattern instance: the uniquely-positioned roles plus the
/// exchangeable child set (empty for patterns without interchangeable slots).
struct Instance {
    std::map<std::string, graph::NodeIndex> fixed;
    std::vector<graph::NodeIndex> group;
};

/// Enumerates every instance of a pattern by nested loops over the parent
/// array; no multiplicity formulas involved.
inline void oracle_instances(const graph::FinetuneForest& f, sampling::Pattern pattern,
                             const std::function<void(const Instance&)>& emit,
                             bool families_only = false) {
    using sampling::Pattern;
    const std::size_t n = f.size();
    auto par = [&](graph::NodeIndex v) { return f.parent(v); };
    switch (pattern) {
    case Pattern::random_pair: {
        std::vector<graph::NodeIndex> universe;
        for (graph::NodeIndex v = 0; v < n; ++v) {
            if (f.nodes().external(v)) continue;
            if (families_only && f.tree_size(v) < 2) continue;
            universe.push_back(v);
        }
        for (std::size_t i = 0; i < universe.size(); ++i)
            for (std::size_t j = i + 1; j < universe.size(); ++j)
                emit({{}, {universe[i], universe[j]}});
        break;
    }
    case Pattern::edge:
        for (graph::NodeIndex c = 0; c < n; ++c)
            if (auto p = par(c)) emit({{{"parent", *p}, {"child", c}}, {}});
        break;
    case Pattern::sibling_fork:
        for (graph::NodeIndex a = 0; a < n; ++a)
            for (graph::NodeIndex b = a + 1; b < n; ++b) {
                auto pa = par(a), pb = par(b);
                if (pa && pb && *pa == *pb) emit({{{"parent", *pa}}, {a, b}});
            }
        break;
    case Pattern::chain3:
        for (graph::NodeIndex c = 0; c < n; ++c)
            if (auto p = par(c))
                if (auto gp = par(*p))
                    emit({{{"gp", *gp}, {"p", *p}, {"c", c}}, {}});
        break;
    case Pattern::triple_fork:
        for (graph::NodeIndex a = 0; a < n; ++a)
            for (graph::NodeIndex b = a + 1; b < n; ++b)
                for (graph::NodeIndex c = b + 1; c < n; ++c) {
                    auto pa = par(a), pb = par(b), pc = par(c);
                    if (pa && pb && pc && *pa == *pb && *pb == *pc)
                        emit({{{"parent", *pa}}, {a, b, c}});
                }
        break;
    case Pattern::fork_under_edge:
        for (graph::NodeIndex a = 0; a < n; ++a)
            for (graph::NodeIndex b = a + 1; b < n; ++b) {
                auto pa = par(a), pb = par(b);
                if (pa && pb && *pa == *pb)
                    if (auto gp = par(*pa))
                        emit({{{"gp", *gp}, {"p", *pa}}, {a, b}});
            }
        break;
    case Pattern::uncle_fork:
        for (graph::NodeIndex u = 0; u < n; ++u)
            for (graph::NodeIndex p = 0; p < n; ++p) {
                if (u == p) continue;
                auto pu = par(u), pp = par(p);
                if (!pu || !pp || *pu != *pp) continue;
                for (graph::NodeIndex c = 0; c < n; ++c)
                    if (auto pc = par(c); pc && *pc == p)
                        emit({{{"gp", *pu}, {"uncle", u}, {"p", p}, {"c", c}}, {}});
            }
        break;
    case Pattern::chain4:
        for (graph::NodeIndex c = 0; c < n; ++c)
            if (auto p = par(c))
                if (auto gp = par(*p))
                    if (auto ggp = par(*gp))
                        emit({{{"ggp", *ggp}, {"gp", *gp}, {"p", *p}, {"c", c}}, {}});
        break;
    }
}

inline int64_t oracle_pattern_count(const graph::FinetuneForest& f, sampling::Pattern pattern,
                                    bool families_only = false) {
    int64_t count = 0;
    oracle_instances(f, pattern, [&](const Instance&) { ++count; }, families_only);
    return count;
}

/// Exhaustive mean of `sim` over every realization of a role pair: for each
/// instance, the expectation over the estimator's uniform role assignment.
/// Skips realizations that touch an external placeholder, mirroring the
/// estimator's resampling rule.
inline double oracle_exhaustive_mean(
    const graph::FinetuneForest& f, sampling::Pattern pattern, const sampling::RolePair& roles,
    const std::function<double(graph::NodeIndex, graph::NodeIndex)>& sim,
    bool families_only = false) {
    auto is_group_role = [](const std::string& r) {
        return r == "a" || r == "b" || r == "c1" || r == "c2" || r == "c3";
    };
    double total = 0.0;
    std::size_t used = 0;
    oracle_instances(
        f, pattern,
        [&](const Instance& inst) {
            auto ext = [&](graph::NodeIndex v) { return f.nodes().external(v); };
            double acc = 0.0;
            std::size_t terms = 0;
            bool a_group = is_group_role(roles.a);
            bool b_group = is_group_role(roles.b);
            if (!a_group && !b_group) {
                graph::NodeIndex x = inst.fixed.at(roles.a), y = inst.fixed.at(roles.b);
                if (ext(x) || ext(y)) return;
                acc = sim(x, y);
                terms = 1;
            } else if (a_group && b_group) {
                for (std::size_t i = 0; i < inst.group.size(); ++i)
                    for (std::size_t j = i + 1; j < inst.group.size(); ++j) {
                        if (ext(inst.group[i]) || ext(inst.group[j])) continue;
                        acc += sim(inst.group[i], inst.group[j]);
                        ++terms;
                    }
            } else {
                graph::NodeIndex x = inst.fixed.at(a_group ? roles.b : roles.a);
                if (ext(x)) return;
                for (graph::NodeIndex g : inst.group) {
                    if (ext(g)) continue;
                    acc += sim(x, g);
                    ++terms;
                }
            }
            if (terms == 0) return;
            total += acc / static_cast<double>(terms);
            ++used;
        },
        families_only);
    return used ? total / static_cast<double>(used) : 0.0;
}

// ---- Filesystem / CLI -------------------------------------------------------

inline std::filesystem::path fresh_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() /
               ("lineage_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    require(in.good(), "readable file " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& body) {
    std::ofstream out(p, std::ios::binary);
    out << body;
}

/// Parsed CSV: comment preamble stripped, quoted fields unescaped.
struct Csv {
    std::vector<std::string> preamble;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::optional<std::size_t> col(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        return std::nullopt;
    }

    /// First row whose column 0 matches, as a name->value map row.
    std::optional<std::string> lookup(const std::string& key, std::size_t value_col = 1) const {
        for (const auto& r : rows)
            if (!r.empty() && r[0] == key && value_col < r.size()) return r[value_col];
        return std::nullopt;
    }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

inline Csv load_csv(const std::filesystem::path& p) {
    Csv csv;
    std::ifstream in(p, std::ios::binary);
    require(in.good(), "missing csv: " + p.string());
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#' && !header_seen) {
            csv.preamble.push_back(line);
            continue;
        }
        if (!header_seen) {
            csv.header = split_csv_line(line);
            header_seen = true;
        } else {
            csv.rows.push_back(split_csv_line(line));
        }
    }
    return csv;
}

struct CliResult {
    int exit_code;
    std::string output; // stdout + stderr
};

/// Runs the real binary (path injected by the build) with output captured.
inline CliResult run_cli(const std::string& args, const std::filesystem::path& workdir) {
    auto log = workdir / "cli_output.log";
#ifdef LINEAGE_BINARY
    std::string cmd = std::string(LINEAGE_BINARY) + " " + args + " > " + log.string() + " 2>&1";
#else
    std::string cmd = "false";
#endif
    int status = std::system(cmd.c_str());
    int code = (status >= 0 && WIFEXITED(status)) ? WEXITSTATUS(status) : -1;
    std::string output;
    if (std::filesystem::exists(log)) output = read_file(log);
    std::filesystem::remove(log);
    return {code, output};
}

inline std::string data_path(const std::string& name) {
#ifdef TEST_DATA_DIR
    return std::string(TEST_DATA_DIR) + "/" + name;
#else
    return "tests/data/" + name;
#endif
}

} // namespace th

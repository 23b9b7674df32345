#include "lineage/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lineage/errors.hpp"
#include "lineage/rng.hpp"
#include "lineage/util.hpp"

namespace lineage::sampling {

using graph::NodeIndex;

std::string_view to_string(Pattern pattern) {
    switch (pattern) {
    case Pattern::random_pair: return "random_pair";
    case Pattern::edge: return "edge";
    case Pattern::sibling_fork: return "sibling_fork";
    case Pattern::chain3: return "chain3";
    case Pattern::triple_fork: return "triple_fork";
    case Pattern::fork_under_edge: return "fork_under_edge";
    case Pattern::uncle_fork: return "uncle_fork";
    case Pattern::chain4: return "chain4";
    }
    return "random_pair";
}

std::optional<Pattern> pattern_from(std::string_view name) {
    for (Pattern p : kAllPatterns)
        if (name == to_string(p)) return p;
    return std::nullopt;
}

const std::vector<std::string_view>& pattern_roles(Pattern pattern) {
    static const std::vector<std::string_view> roles[] = {
        {"a", "b"},
        {"parent", "child"},
        {"parent", "c1", "c2"},
        {"gp", "p", "c"},
        {"parent", "c1", "c2", "c3"},
        {"gp", "p", "c1", "c2"},
        {"gp", "uncle", "p", "c"},
        {"ggp", "gp", "p", "c"},
    };
    return roles[static_cast<std::size_t>(pattern)];
}

const std::vector<RolePair>& canonical_role_pairs(Pattern pattern) {
    static const std::vector<RolePair> pairs[] = {
        {{"a", "b"}},
        {{"parent", "child"}},
        {{"parent", "c1"}, {"c1", "c2"}},
        {{"gp", "p"}, {"p", "c"}, {"gp", "c"}},
        {{"parent", "c1"}, {"c1", "c2"}},
        {{"gp", "p"}, {"p", "c1"}, {"gp", "c1"}, {"c1", "c2"}},
        {{"gp", "uncle"}, {"gp", "p"}, {"gp", "c"}, {"uncle", "p"}, {"uncle", "c"}, {"p", "c"}},
        {{"ggp", "gp"}, {"ggp", "p"}, {"ggp", "c"}, {"gp", "p"}, {"gp", "c"}, {"p", "c"}},
    };
    return pairs[static_cast<std::size_t>(pattern)];
}

namespace {

int64_t choose2(uint64_t n) { return n < 2 ? 0 : static_cast<int64_t>(n * (n - 1) / 2); }

int64_t choose3(uint64_t n) {
    if (n < 3) return 0;
    __int128 c = static_cast<__int128>(n) * (n - 1) / 2 * (n - 2) / 3;
    if (c > std::numeric_limits<int64_t>::max())
        throw TooLargeError("site multiplicity overflows a 64-bit count");
    return static_cast<int64_t>(c);
}

std::optional<std::size_t> role_index(Pattern pattern, std::string_view name) {
    const auto& roles = pattern_roles(pattern);
    for (std::size_t i = 0; i < roles.size(); ++i)
        if (roles[i] == name) return i;
    return std::nullopt;
}

/// Uniform ordered draw of `count` distinct values from [0, m).
void draw_distinct(RandomStream& stream, uint64_t m, std::size_t count, uint32_t* out) {
    uint32_t chosen[3];
    std::size_t chosen_n = 0;
    for (std::size_t t = 0; t < count; ++t) {
        uint32_t x = static_cast<uint32_t>(stream.uniform(m - t));
        for (std::size_t i = 0; i < chosen_n; ++i)
            if (x >= chosen[i]) ++x;
        out[t] = x;
        std::size_t pos = chosen_n;
        while (pos > 0 && chosen[pos - 1] > x) {
            chosen[pos] = chosen[pos - 1];
            --pos;
        }
        chosen[pos] = x;
        ++chosen_n;
    }
}

/// Fills `nodes` (aligned with pattern_roles order) for one uniform
/// realization of the pattern at table.sites[site].
void realize(const PatternSiteTable& table, const graph::FinetuneForest& forest, std::size_t site,
             RandomStream& stream, NodeIndex* nodes) {
    const PatternSite& s = table.sites[site];
    switch (table.pattern) {
    case Pattern::random_pair: {
        uint64_t later = table.universe.size() - 1 - site;
        nodes[0] = table.universe[site];
        nodes[1] = table.universe[site + 1 + stream.uniform(later)];
        return;
    }
    case Pattern::edge:
        nodes[0] = s.node;
        nodes[1] = s.child;
        return;
    case Pattern::sibling_fork: {
        auto ch = forest.children(s.node);
        uint32_t picks[2];
        draw_distinct(stream, ch.size(), 2, picks);
        nodes[0] = s.node;
        nodes[1] = ch[picks[0]];
        nodes[2] = ch[picks[1]];
        return;
    }
    case Pattern::chain3: {
        auto ch = forest.children(s.child);
        nodes[0] = s.node;
        nodes[1] = s.child;
        nodes[2] = ch[stream.uniform(ch.size())];
        return;
    }
    case Pattern::triple_fork: {
        auto ch = forest.children(s.node);
        uint32_t picks[3];
        draw_distinct(stream, ch.size(), 3, picks);
        nodes[0] = s.node;
        nodes[1] = ch[picks[0]];
        nodes[2] = ch[picks[1]];
        nodes[3] = ch[picks[2]];
        return;
    }
    case Pattern::fork_under_edge: {
        auto ch = forest.children(s.child);
        uint32_t picks[2];
        draw_distinct(stream, ch.size(), 2, picks);
        nodes[0] = s.node;
        nodes[1] = s.child;
        nodes[2] = ch[picks[0]];
        nodes[3] = ch[picks[1]];
        return;
    }
    case Pattern::uncle_fork: {
        auto grandchildren = forest.children(s.child);
        auto siblings = forest.children(s.node); // includes s.child
        std::size_t skip = std::lower_bound(siblings.begin(), siblings.end(), s.child) -
                           siblings.begin();
        uint64_t x = stream.uniform(siblings.size() - 1);
        if (x >= skip) ++x;
        nodes[0] = s.node;
        nodes[1] = siblings[x];
        nodes[2] = s.child;
        nodes[3] = grandchildren[stream.uniform(grandchildren.size())];
        return;
    }
    case Pattern::chain4: {
        auto ch = forest.children(s.child);
        nodes[0] = *forest.parent(s.node);
        nodes[1] = s.node;
        nodes[2] = s.child;
        nodes[3] = ch[stream.uniform(ch.size())];
        return;
    }
    }
}

SampledPair draw_pair_indexed(const PatternSiteTable& table, const graph::FinetuneForest& forest,
                              std::size_t role_a, std::size_t role_b, uint64_t seed,
                              uint64_t draw_index, uint64_t attempt) {
    RandomStream stream = RandomStream::substream(seed, draw_index, attempt);
    int64_t ticket = static_cast<int64_t>(stream.uniform(static_cast<uint64_t>(table.total_count)));
    std::size_t site = std::upper_bound(table.cumulative.begin(), table.cumulative.end(), ticket) -
                       table.cumulative.begin();
    NodeIndex nodes[4];
    realize(table, forest, site, stream, nodes);
    return {nodes[role_a], nodes[role_b]};
}

void require_sites(const PatternSiteTable& table) {
    if (table.total_count <= 0)
        throw NoSitesError(std::string("no sites for pattern ") +
                           std::string(to_string(table.pattern)));
}

std::pair<std::size_t, std::size_t> resolve_roles(Pattern pattern, const RolePair& roles) {
    auto a = role_index(pattern, roles.a);
    auto b = role_index(pattern, roles.b);
    if (!a || !b || *a == *b)
        throw InvalidInputError("invalid role pair (" + roles.a + ", " + roles.b + ") for pattern " +
                                std::string(to_string(pattern)));
    return {*a, *b};
}

} // namespace

PatternSiteTable enumerate_sites(const graph::FinetuneForest& forest, Pattern pattern,
                                 const SiteOptions& options) {
    PatternSiteTable table;
    table.pattern = pattern;
    const std::size_t n = forest.size();
    const auto& nodes = forest.nodes();

    auto add_site = [&table](NodeIndex node, NodeIndex child, int64_t multiplicity) {
        if (multiplicity > 0) table.sites.push_back({node, child, multiplicity});
    };

    switch (pattern) {
    case Pattern::random_pair: {
        for (NodeIndex v = 0; v < n; ++v) {
            if (nodes.external(v)) continue;
            if (options.random_pair_families_only && forest.tree_size(v) < 2) continue;
            table.universe.push_back(v);
        }
        for (std::size_t i = 0; i + 1 < table.universe.size(); ++i)
            add_site(table.universe[i], table.universe[i],
                     static_cast<int64_t>(table.universe.size() - 1 - i));
        break;
    }
    case Pattern::edge:
        for (NodeIndex v = 0; v < n; ++v)
            if (auto p = forest.parent(v)) add_site(*p, v, 1);
        break;
    case Pattern::sibling_fork:
        for (NodeIndex u = 0; u < n; ++u) add_site(u, u, choose2(forest.n_succ(u)));
        break;
    case Pattern::chain3:
        for (NodeIndex v = 0; v < n; ++v)
            if (auto p = forest.parent(v)) add_site(*p, v, static_cast<int64_t>(forest.n_succ(v)));
        break;
    case Pattern::triple_fork:
        for (NodeIndex u = 0; u < n; ++u) add_site(u, u, choose3(forest.n_succ(u)));
        break;
    case Pattern::fork_under_edge:
        for (NodeIndex v = 0; v < n; ++v)
            if (auto p = forest.parent(v)) add_site(*p, v, choose2(forest.n_succ(v)));
        break;
    case Pattern::uncle_fork:
        for (NodeIndex v = 0; v < n; ++v) {
            auto p = forest.parent(v);
            if (!p) continue;
            add_site(*p, v,
                     static_cast<int64_t>(forest.n_succ(v)) *
                         static_cast<int64_t>(forest.n_succ(*p) - 1));
        }
        break;
    case Pattern::chain4:
        for (NodeIndex v = 0; v < n; ++v) {
            auto p = forest.parent(v);
            if (!p || !forest.parent(*p)) continue;
            add_site(*p, v, static_cast<int64_t>(forest.n_succ(v)));
        }
        break;
    }

    table.cumulative.reserve(table.sites.size());
    for (const PatternSite& s : table.sites) {
        table.total_count += s.multiplicity;
        table.cumulative.push_back(table.total_count);
    }
    return table;
}

SampledPair draw_pair(const PatternSiteTable& table, const graph::FinetuneForest& forest,
                      const RolePair& roles, uint64_t seed, uint64_t draw_index, uint64_t attempt) {
    require_sites(table);
    auto [a, b] = resolve_roles(table.pattern, roles);
    return draw_pair_indexed(table, forest, a, b, seed, draw_index, attempt);
}

std::vector<SampledPair> sample_pairs(const PatternSiteTable& table,
                                      const graph::FinetuneForest& forest, const RolePair& roles,
                                      std::size_t k, uint64_t seed) {
    require_sites(table);
    auto [a, b] = resolve_roles(table.pattern, roles);
    std::vector<SampledPair> pairs;
    pairs.reserve(k);
    for (std::size_t draw = 0; draw < k; ++draw)
        pairs.push_back(draw_pair_indexed(table, forest, a, b, seed, draw, 0));
    return pairs;
}

// ---- Metric ----------------------------------------------------------------

std::string to_string(Metric metric) {
    std::string kind;
    switch (metric.kind) {
    case Metric::Kind::levenshtein: kind = "lev"; break;
    case Metric::Kind::bow: kind = "bow"; break;
    case Metric::Kind::tfidf: kind = "tfidf"; break;
    }
    return kind + (metric.source == Metric::Source::metadata ? "-metadata" : "-card");
}

std::optional<Metric> metric_from(std::string_view name) {
    std::size_t dash = name.rfind('-');
    if (dash == std::string_view::npos) return std::nullopt;
    Metric m;
    std::string_view kind = name.substr(0, dash), source = name.substr(dash + 1);
    if (kind == "lev")
        m.kind = Metric::Kind::levenshtein;
    else if (kind == "bow")
        m.kind = Metric::Kind::bow;
    else if (kind == "tfidf")
        m.kind = Metric::Kind::tfidf;
    else
        return std::nullopt;
    if (source == "metadata")
        m.source = Metric::Source::metadata;
    else if (source == "card")
        m.source = Metric::Source::card;
    else
        return std::nullopt;
    return m;
}

// ---- SimilarityEstimator ---------------------------------------------------

SimilarityEstimator::SimilarityEstimator(const graph::FinetuneForest& forest,
                                         const RecordSet& records, EstimatorOptions options)
    : forest_(forest), records_(records), options_(options) {
    const auto& nodes = forest.nodes();
    record_of_.resize(nodes.size(), nullptr);
    for (NodeIndex v = 0; v < nodes.size(); ++v)
        if (!nodes.external(v)) record_of_[v] = records.find(nodes.id(v));
}

const PatternSiteTable& SimilarityEstimator::site_table(Pattern pattern) {
    auto& slot = tables_[static_cast<std::size_t>(pattern)];
    if (!slot) slot = enumerate_sites(forest_, pattern, options_.sites);
    return *slot;
}

std::string_view SimilarityEstimator::text_of(NodeIndex node, Metric::Source source) const {
    const ModelRecord* r = record_of_[node];
    if (r == nullptr) return {};
    if (source == Metric::Source::metadata) return r->metadata_string;
    return r->card_text ? std::string_view(*r->card_text) : std::string_view{};
}

const similarity::TermVectorSpace& SimilarityEstimator::space_for(Metric::Source source) {
    auto& slot = spaces_[static_cast<std::size_t>(source)];
    if (!slot) {
        std::vector<std::string_view> corpus;
        for (const ModelRecord& r : records_) {
            if (source == Metric::Source::metadata)
                corpus.push_back(r.metadata_string);
            else if (r.card_text)
                corpus.push_back(*r.card_text);
        }
        slot = similarity::TermVectorSpace::build(corpus, options_.vocabulary_cap,
                                                  options_.token_mode);
    }
    return *slot;
}

const similarity::SparseVector& SimilarityEstimator::tf_vector(NodeIndex node,
                                                               Metric::Source source) {
    auto& cache = tf_cache_[static_cast<std::size_t>(source)];
    auto it = cache.find(node);
    if (it == cache.end())
        it = cache.emplace(node, space_for(source).vectorize(text_of(node, source))).first;
    return it->second;
}

double SimilarityEstimator::pair_similarity(NodeIndex a, NodeIndex b, Metric metric,
                                            bool* zero_flag, bool* truncated_flag) {
    if (zero_flag != nullptr) *zero_flag = false;
    if (truncated_flag != nullptr) *truncated_flag = false;

    if (metric.kind == Metric::Kind::levenshtein) {
        auto capped = [&](NodeIndex v) {
            std::vector<uint32_t> cps;
            if (metric.source == Metric::Source::metadata) {
                auto it = metadata_codepoints_.find(v);
                if (it == metadata_codepoints_.end())
                    it = metadata_codepoints_
                             .emplace(v, util::utf8_codepoints(text_of(v, metric.source)))
                             .first;
                cps = it->second;
            } else {
                cps = util::utf8_codepoints(text_of(v, metric.source));
            }
            if (cps.size() > options_.levenshtein_cap) {
                cps.resize(options_.levenshtein_cap);
                if (truncated_flag != nullptr) *truncated_flag = true;
            }
            return cps;
        };
        std::vector<uint32_t> ca = capped(a), cb = capped(b);
        std::size_t longest = std::max(ca.size(), cb.size());
        if (longest == 0) return 1.0;
        return 1.0 - static_cast<double>(similarity::levenshtein_distance(ca, cb)) /
                         static_cast<double>(longest);
    }

    const similarity::SparseVector& va = tf_vector(a, metric.source);
    const similarity::SparseVector& vb = tf_vector(b, metric.source);
    if (zero_flag != nullptr) *zero_flag = va.empty() || vb.empty();
    if (metric.kind == Metric::Kind::bow) return similarity::cosine(va, vb);

    // tf-idf cosine without materializing scaled copies
    const similarity::TermVectorSpace& space = space_for(metric.source);
    double dot = 0.0, norm_a = 0.0, norm_b = 0.0;
    for (const auto& [i, w] : va) {
        double s = w * space.idf(i, options_.idf_mode);
        norm_a += s * s;
    }
    for (const auto& [i, w] : vb) {
        double s = w * space.idf(i, options_.idf_mode);
        norm_b += s * s;
    }
    if (norm_a == 0.0 || norm_b == 0.0) return 0.0;
    std::size_t ia = 0, ib = 0;
    while (ia < va.size() && ib < vb.size()) {
        if (va[ia].first < vb[ib].first) {
            ++ia;
        } else if (va[ia].first > vb[ib].first) {
            ++ib;
        } else {
            double idf = space.idf(va[ia].first, options_.idf_mode);
            dot += va[ia].second * vb[ib].second * idf * idf;
            ++ia;
            ++ib;
        }
    }
    return dot / (std::sqrt(norm_a) * std::sqrt(norm_b));
}

SimilarityEstimate SimilarityEstimator::estimate_similarity(Pattern pattern, const RolePair& roles,
                                                            Metric metric, std::size_t k,
                                                            uint64_t seed) {
    const PatternSiteTable& table = site_table(pattern);
    require_sites(table);
    auto [role_a, role_b] = resolve_roles(pattern, roles);
    const auto& nodes = forest_.nodes();

    SimilarityEstimate est;
    est.pattern = pattern;
    est.roles = roles;
    est.metric = to_string(metric);
    est.sample_size = k;
    est.seed = seed;

    std::vector<double> values;
    values.reserve(k);
    for (std::size_t draw = 0; draw < k; ++draw) {
        SampledPair pair{};
        uint64_t attempt = 0;
        for (;;) {
            pair = draw_pair_indexed(table, forest_, role_a, role_b, seed, draw, attempt);
            if (!nodes.external(pair.a) && !nodes.external(pair.b) &&
                record_of_[pair.a] != nullptr && record_of_[pair.b] != nullptr)
                break;
            ++est.resampled_draws;
            if (++attempt >= options_.max_attempts_per_draw)
                throw NoSitesError("resampling budget exhausted: pattern " +
                                   std::string(to_string(pattern)) +
                                   " keeps drawing placeholder nodes");
        }
        bool zero = false, truncated = false;
        values.push_back(pair_similarity(pair.a, pair.b, metric, &zero, &truncated));
        if (zero) ++est.zero_vector_pairs;
        if (truncated) ++est.truncated_pairs;
    }

    double sum = 0.0;
    for (double v : values) sum += v;
    est.mean = sum / static_cast<double>(k);
    if (k > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - est.mean) * (v - est.mean);
        est.standard_error = std::sqrt(ss / static_cast<double>(k - 1)) /
                             std::sqrt(static_cast<double>(k));
    }
    return est;
}

} // namespace lineage::sampling

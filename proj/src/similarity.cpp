#include "lineage/similarity.hpp"

#include <algorithm>
#include <cmath>

#include "lineage/util.hpp"

namespace lineage::similarity {

std::string_view to_string(TokenMode mode) {
    switch (mode) {
    case TokenMode::unigram: return "unigram";
    case TokenMode::bigram: return "bigram";
    case TokenMode::combined: return "combined";
    }
    return "combined";
}

std::optional<TokenMode> token_mode_from(std::string_view name) {
    if (name == "unigram") return TokenMode::unigram;
    if (name == "bigram") return TokenMode::bigram;
    if (name == "combined") return TokenMode::combined;
    return std::nullopt;
}

std::string_view to_string(IdfMode mode) {
    return mode == IdfMode::raw ? "raw" : "log_smoothed";
}

std::optional<IdfMode> idf_mode_from(std::string_view name) {
    if (name == "raw") return IdfMode::raw;
    if (name == "log_smoothed") return IdfMode::log_smoothed;
    return std::nullopt;
}

namespace {

bool is_word_byte(unsigned char c) {
    if (c >= 0x80) return true; // keep non-ASCII sequences whole
    if (c >= 'a' && c <= 'z') return true;
    if (c >= 'A' && c <= 'Z') return true;
    if (c >= '0' && c <= '9') return true;
    return c == '.' || c == '-' || c == '_';
}

std::vector<std::string> word_split(std::string_view text) {
    std::vector<std::string> words;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && !is_word_byte(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t start = i;
        while (i < text.size() && is_word_byte(static_cast<unsigned char>(text[i]))) ++i;
        if (i > start) words.push_back(util::to_lower_ascii(text.substr(start, i - start)));
    }
    return words;
}

} // namespace

std::vector<std::string> tokenize(std::string_view text, TokenMode mode) {
    std::vector<std::string> words = word_split(text);
    if (mode == TokenMode::unigram) return words;

    std::vector<std::string> terms;
    if (mode == TokenMode::combined) {
        terms.reserve(words.size() * 2);
        terms = words;
    } else {
        terms.reserve(words.size());
    }
    for (std::size_t i = 0; i + 1 < words.size(); ++i) terms.push_back(words[i] + " " + words[i + 1]);
    return terms;
}

double cosine(const SparseVector& a, const SparseVector& b) {
    double dot = 0.0, norm_a = 0.0, norm_b = 0.0;
    for (const auto& [i, w] : a) norm_a += w * w;
    for (const auto& [i, w] : b) norm_b += w * w;
    if (norm_a == 0.0 || norm_b == 0.0) return 0.0;

    std::size_t ia = 0, ib = 0;
    while (ia < a.size() && ib < b.size()) {
        if (a[ia].first < b[ib].first) {
            ++ia;
        } else if (a[ia].first > b[ib].first) {
            ++ib;
        } else {
            dot += a[ia].second * b[ib].second;
            ++ia;
            ++ib;
        }
    }
    return dot / (std::sqrt(norm_a) * std::sqrt(norm_b));
}

TermVectorSpace TermVectorSpace::build(std::span<const std::string_view> corpus, std::size_t n,
                                       TokenMode mode) {
    struct TermStats {
        uint64_t frequency = 0;
        uint32_t documents = 0;
    };
    std::unordered_map<std::string, TermStats, StringHash, std::equal_to<>> stats;

    for (std::string_view doc : corpus) {
        std::vector<std::string> terms = tokenize(doc, mode);
        std::sort(terms.begin(), terms.end());
        for (std::size_t i = 0; i < terms.size();) {
            std::size_t j = i;
            while (j < terms.size() && terms[j] == terms[i]) ++j;
            TermStats& s = stats[terms[i]];
            s.frequency += j - i;
            s.documents += 1;
            i = j;
        }
    }

    std::vector<std::pair<std::string, TermStats>> ranked;
    ranked.reserve(stats.size());
    for (auto& [term, s] : stats) ranked.emplace_back(term, s);
    auto better = [](const auto& a, const auto& b) {
        if (a.second.frequency != b.second.frequency) return a.second.frequency > b.second.frequency;
        return a.first < b.first;
    };
    if (ranked.size() > n) {
        std::nth_element(ranked.begin(), ranked.begin() + n, ranked.end(), better);
        ranked.resize(n);
    }
    std::sort(ranked.begin(), ranked.end(), better);

    TermVectorSpace space;
    space.corpus_size_ = corpus.size();
    space.mode_ = mode;
    space.vocabulary_.reserve(ranked.size());
    space.document_frequency_.reserve(ranked.size());
    for (auto& [term, s] : ranked) {
        space.index_.emplace(term, static_cast<uint32_t>(space.vocabulary_.size()));
        space.vocabulary_.push_back(std::move(term));
        space.document_frequency_.push_back(s.documents);
    }
    return space;
}

std::optional<uint32_t> TermVectorSpace::term_index(std::string_view term) const {
    auto it = index_.find(term);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

SparseVector TermVectorSpace::vectorize(std::string_view text) const {
    SparseVector v;
    for (const std::string& term : tokenize(text, mode_)) {
        auto it = index_.find(std::string_view(term));
        if (it == index_.end()) continue;
        v.emplace_back(it->second, 1.0);
    }
    std::sort(v.begin(), v.end());
    SparseVector merged;
    for (std::size_t i = 0; i < v.size();) {
        std::size_t j = i;
        double tf = 0.0;
        while (j < v.size() && v[j].first == v[i].first) tf += v[j++].second;
        merged.emplace_back(v[i].first, tf);
        i = j;
    }
    return merged;
}

double TermVectorSpace::idf(uint32_t term_index, IdfMode mode) const {
    double ratio = static_cast<double>(corpus_size_) / static_cast<double>(document_frequency_[term_index]);
    return mode == IdfMode::raw ? ratio : std::log(ratio) + 1.0;
}

SparseVector TermVectorSpace::vectorize_tfidf(std::string_view text, IdfMode mode) const {
    SparseVector v = vectorize(text);
    for (auto& [i, w] : v) w *= idf(i, mode);
    return v;
}

double bow_cosine(std::string_view s1, std::string_view s2, const TermVectorSpace& space,
                  bool* zero_flag) {
    SparseVector a = space.vectorize(s1);
    SparseVector b = space.vectorize(s2);
    if (zero_flag != nullptr) *zero_flag = a.empty() || b.empty();
    return cosine(a, b);
}

double tfidf_cosine(std::string_view s1, std::string_view s2, const TermVectorSpace& space,
                    IdfMode mode, bool* zero_flag) {
    SparseVector a = space.vectorize_tfidf(s1, mode);
    SparseVector b = space.vectorize_tfidf(s2, mode);
    if (zero_flag != nullptr) *zero_flag = a.empty() || b.empty();
    return cosine(a, b);
}

std::size_t levenshtein_distance(std::span<const uint32_t> a, std::span<const uint32_t> b) {
    if (a.size() < b.size()) std::swap(a, b); // keep the DP row short
    if (b.empty()) return a.size();

    std::vector<std::size_t> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diagonal = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            std::size_t substitution = diagonal + (a[i - 1] == b[j - 1] ? 0 : 1);
            diagonal = row[j];
            row[j] = std::min({row[j] + 1, row[j - 1] + 1, substitution});
        }
    }
    return row[b.size()];
}

double normalized_levenshtein_similarity(std::string_view s1, std::string_view s2,
                                         std::size_t max_codepoints, bool* truncated_flag) {
    std::vector<uint32_t> a = util::utf8_codepoints(s1);
    std::vector<uint32_t> b = util::utf8_codepoints(s2);
    bool truncated = a.size() > max_codepoints || b.size() > max_codepoints;
    if (truncated_flag != nullptr) *truncated_flag = truncated;
    if (a.size() > max_codepoints) a.resize(max_codepoints);
    if (b.size() > max_codepoints) b.resize(max_codepoints);

    std::size_t longest = std::max(a.size(), b.size());
    if (longest == 0) return 1.0;
    std::size_t distance = levenshtein_distance(a, b);
    return 1.0 - static_cast<double>(distance) / static_cast<double>(longest);
}

} // namespace lineage::similarity

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace lineage::similarity {

enum class TokenMode { unigram, bigram, combined };
enum class IdfMode { raw, log_smoothed };

std::string_view to_string(TokenMode mode);
std::optional<TokenMode> token_mode_from(std::string_view name);
std::string_view to_string(IdfMode mode);
std::optional<IdfMode> idf_mode_from(std::string_view name);

/// Lowercases, splits on every character outside [a-z0-9.\-_] (bytes >= 0x80
/// count as word characters so non-ASCII script stays intact), then emits the
/// unigrams and/or space-joined adjacent bigrams the mode asks for.
std::vector<std::string> tokenize(std::string_view text, TokenMode mode = TokenMode::combined);

/// Sparse term vector: (vocabulary index, weight), ascending by index.
using SparseVector = std::vector<std::pair<uint32_t, double>>;

/// 0 when either vector has zero norm.
double cosine(const SparseVector& a, const SparseVector& b);

/// Shared vocabulary over a corpus: the n highest-total-frequency terms
/// (ties broken lexicographically) with presence-based document frequencies.
class TermVectorSpace {
public:
    static TermVectorSpace build(std::span<const std::string_view> corpus, std::size_t n,
                                 TokenMode mode = TokenMode::combined);

    std::size_t corpus_size() const { return corpus_size_; }
    TokenMode token_mode() const { return mode_; }

    /// Descending total frequency, ties ascending lexicographic.
    const std::vector<std::string>& vocabulary() const { return vocabulary_; }
    std::optional<uint32_t> term_index(std::string_view term) const;
    uint32_t document_frequency(uint32_t term_index) const { return document_frequency_[term_index]; }

    /// Raw term-frequency vector restricted to the vocabulary.
    SparseVector vectorize(std::string_view text) const;

    /// idf(t) = corpus_size / df(t), or ln(corpus_size / df(t)) + 1 when
    /// log-smoothed.
    double idf(uint32_t term_index, IdfMode mode) const;
    SparseVector vectorize_tfidf(std::string_view text, IdfMode mode = IdfMode::raw) const;

private:
    struct StringHash {
        using is_transparent = void;
        std::size_t operator()(std::string_view s) const noexcept {
            return std::hash<std::string_view>{}(s);
        }
    };

    std::vector<std::string> vocabulary_;
    std::vector<uint32_t> document_frequency_;
    std::unordered_map<std::string, uint32_t, StringHash, std::equal_to<>> index_;
    std::size_t corpus_size_ = 0;
    TokenMode mode_ = TokenMode::combined;
};

/// Cosine over raw term frequencies. `zero_flag`, when given, reports that at
/// least one side had no vocabulary terms (the similarity is then 0).
double bow_cosine(std::string_view s1, std::string_view s2, const TermVectorSpace& space,
                  bool* zero_flag = nullptr);

double tfidf_cosine(std::string_view s1, std::string_view s2, const TermVectorSpace& space,
                    IdfMode mode = IdfMode::raw, bool* zero_flag = nullptr);

/// Edit distance over Unicode scalar values.
std::size_t levenshtein_distance(std::span<const uint32_t> a, std::span<const uint32_t> b);

inline constexpr std::size_t kDefaultLevenshteinCap = 1'000'000;

/// 1 - distance / max(length); 1.0 when both are empty. Inputs longer than
/// `max_codepoints` are truncated there first (quadratic DP cost), with
/// `truncated_flag` reporting that it happened.
double normalized_levenshtein_similarity(std::string_view s1, std::string_view s2,
                                         std::size_t max_codepoints = kDefaultLevenshteinCap,
                                         bool* truncated_flag = nullptr);

} // namespace lineage::similarity

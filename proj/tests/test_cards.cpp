#include <doctest.h>

#include "helpers.hpp"
#include "lineage/cards.hpp"
#include "lineage/errors.hpp"

using namespace lineage;
using namespace lineage::cards;

namespace {

th::RecSpec carded(std::string id, std::string card,
                   std::vector<std::pair<std::string, std::string>> parents = {}) {
    auto s = th::spec(std::move(id));
    s.card = std::move(card);
    s.has_card = true;
    s.parents = std::move(parents);
    return s;
}

} // namespace

TEST_CASE("coverage counts present cards") {
    CHECK(card_coverage(RecordSet{}) == 0.0);
    auto records = th::set_of({carded("a/one", "text"), th::spec("a/two"),
                               carded("a/three", ""), th::spec("a/four")});
    CHECK(card_coverage(records) == doctest::Approx(0.5)); // empty text still counts
}

TEST_CASE("autogen marker detection") {
    CHECK(has_autogen_marker("This model card was automatically generated."));
    CHECK(has_autogen_marker("README generated automatically by a pipeline"));
    CHECK(has_autogen_marker("AUTOMATICALLY   GENERATED"));
    CHECK(has_autogen_marker("automatically\n\ngenerated"));
    CHECK_FALSE(has_autogen_marker("handwritten with care"));
    CHECK_FALSE(has_autogen_marker("autogenerated")); // needs the full phrase
    CHECK_FALSE(has_autogen_marker(""));
    CHECK_FALSE(has_autogen_marker("generated"));
}

TEST_CASE("length statistics over present cards") {
    auto records = th::set_of({
        carded("l/a", "1234567890"),           // 10
        carded("l/b", std::string(20, 'x')),   // 20
        carded("l/c", "abcde"),                // 5
        carded("l/d", "\xc3\xa9\xc3\xa9\xc3\xa9"), // 3 codepoints, 6 bytes
        carded("l/e", ""),                     // 0
        th::spec("l/bare"),
    });
    auto stats = length_stats(records);
    CHECK(stats.cards == 5);
    CHECK(stats.mean == doctest::Approx((10 + 20 + 5 + 3 + 0) / 5.0));
    CHECK(stats.median == 5.0); // odd count: {0,3,5,10,20}
    CHECK(stats.min == 0);
    CHECK(stats.max == 20);
    CHECK(stats.mean_words == doctest::Approx(4.0 / 5.0)); // one word each, none in empty

    auto even = th::set_of({carded("e/a", "12"), carded("e/b", "1234")});
    CHECK(length_stats(even).median == doctest::Approx(3.0)); // midpoint of 2 and 4

    CHECK_THROWS_AS(length_stats(th::set_of({th::spec("n/one")})), NoDataError);
}

TEST_CASE("word counts split on whitespace runs") {
    auto records = th::set_of({carded("w/a", "  three   words\there \n")});
    CHECK(length_stats(records).mean_words == doctest::Approx(3.0));
}

TEST_CASE("parent-child length delta over double-carded finetune edges") {
    auto fam = th::family_of({
        carded("d/root", "1234567890"),                                 // 10
        carded("d/kid1", std::string(20, 'x'), {{"finetune", "d/root"}}), // -10
        th::spec("d/kid2"),                                             // no card
        carded("d/gkid", "abcde", {{"finetune", "d/kid1"}}),            // +15
        carded("d/ported", "whatever", {{"finetune", "external/base"}}), // skipped
    });
    auto delta = parent_child_delta(fam.forest, fam.records);
    CHECK(delta.edges == 2);
    CHECK(delta.mean_delta == doctest::Approx((-10.0 + 15.0) / 2.0));

    auto none = th::family_of({th::spec("x/root"), [] {
                                   auto s = th::spec("x/kid");
                                   s.parents = {{"finetune", "x/root"}};
                                   return s;
                               }()});
    CHECK_THROWS_AS(parent_child_delta(none.forest, none.records), NoDataError);
}

TEST_CASE("autogen rates per relation kind and for roots") {
    auto fam = th::family_of({
        carded("r/root", "hand written root card"),
        carded("r/ft", "automatically generated finetune card", {{"finetune", "r/root"}}),
        th::spec("r/untagged"), // root without a card: unflagged denominator member
        carded("r/q1", "automatically generated", {{"quantized", "r/root"}}),
        carded("r/q2", "curated quantization notes", {{"quantized", "r/root"}}),
        // both finetune and adapter parentage: counted in both groups
        carded("r/dual", "generated automatically", {{"finetune", "r/root"}, {"adapter", "r/ft"}}),
        carded("r/ported", "automatically generated", {{"finetune", "external/base"}}),
    });
    auto rates = autogen_rate(fam.records, fam.graph);

    auto kind_rate = [&](RelationKind k) {
        return rates.by_kind[static_cast<std::size_t>(k)];
    };
    // finetune children: r/ft, r/dual, r/ported; all flagged
    CHECK(kind_rate(RelationKind::finetune).models == 3);
    CHECK(kind_rate(RelationKind::finetune).flagged == 3);
    CHECK(kind_rate(RelationKind::finetune).rate == doctest::Approx(1.0));
    CHECK(kind_rate(RelationKind::quantized).models == 2);
    CHECK(kind_rate(RelationKind::quantized).flagged == 1);
    CHECK(kind_rate(RelationKind::adapter).models == 1); // r/dual again
    CHECK(kind_rate(RelationKind::adapter).flagged == 1);
    CHECK(kind_rate(RelationKind::merge).models == 0);
    CHECK(kind_rate(RelationKind::merge).rate == 0.0);
    // roots: r/root (clean card) and r/untagged (no card)
    CHECK(rates.roots.models == 2);
    CHECK(rates.roots.flagged == 0);
}

TEST_CASE("mean card length per generation") {
    auto fam = th::family_of({
        carded("g/root", "1234567890"),                                   // gen 0, 10
        carded("g/solo", ""),                                             // gen 0, 0
        carded("g/kid", std::string(20, 'y'), {{"finetune", "g/root"}}),  // gen 1, 20
        th::spec("g/quiet"),                                              // gen 0, no card
        carded("g/deep", "abc", {{"finetune", "g/kid"}}),                 // gen 2, 3
        carded("g/port", "\xc3\xa9\xc3\xa9", {{"finetune", "external/x"}}), // gen 1, 2
    });
    auto gens = generation_length_means(fam.forest, fam.records);
    REQUIRE(gens.size() == 3);
    CHECK(gens[0].generation == 0);
    CHECK(gens[0].cards == 2);
    CHECK(gens[0].mean_length == doctest::Approx(5.0));
    CHECK(gens[1].generation == 1);
    CHECK(gens[1].cards == 2);
    CHECK(gens[1].mean_length == doctest::Approx(11.0));
    CHECK(gens[2].generation == 2);
    CHECK(gens[2].cards == 1);
    CHECK(gens[2].mean_length == doctest::Approx(3.0));
}

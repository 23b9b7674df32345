#include <doctest.h>

#include <atomic>
#include <map>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "helpers.hpp"
#include "lineage/fetch.hpp"

using nlohmann::json;

namespace {

/// filename -> bytes for every regular file under a directory.
std::map<std::string, std::string> dir_contents(const std::filesystem::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(dir))
        if (entry.is_regular_file())
            out[std::filesystem::relative(entry.path(), dir).string()] =
                th::read_file(entry.path());
    return out;
}

std::filesystem::path write_snapshot(const std::filesystem::path& dir,
                                     const std::vector<th::RecSpec>& specs,
                                     const std::string& name = "snapshot.ndjson") {
    std::string body;
    for (const auto& s : specs) body += th::line_of(s) + "\n";
    auto path = dir / name;
    th::write_file(path, body);
    return path;
}

json load_manifest(const std::filesystem::path& path) {
    return json::parse(th::read_file(path));
}

void check_preamble(const th::Csv& csv, const std::string& command) {
    REQUIRE(csv.preamble.size() == 3);
    CHECK(csv.preamble[0] == "# lineage 0.1.0");
    CHECK(csv.preamble[1] == "# command " + command);
    CHECK(lineage::util::starts_with(csv.preamble[2], "# config {"));
}

} // namespace

TEST_CASE("summary produces ranked tables and a faithful manifest") {
    auto dir = th::fresh_dir("cli_summary");
    auto out = dir / "out";
    auto r = th::run_cli("summary --snapshot " + th::data_path("synthetic_500.ndjson") +
                             " --top 5 --arxiv-categories " +
                             th::data_path("arxiv_categories.json") + " --out " + out.string(),
                         dir);
    REQUIRE_MESSAGE(r.exit_code == 0, r.output);

    auto licenses = th::load_csv(out / "licenses.csv");
    check_preamble(licenses, "summary");
    CHECK(licenses.header == std::vector<std::string>{"license", "models"});
    CHECK(licenses.rows.size() == 5); // --top honored
    // ranked by count descending
    CHECK(std::stol(licenses.rows[0][1]) >= std::stol(licenses.rows[1][1]));

    auto children = th::load_csv(out / "top_children.csv");
    CHECK(children.header == std::vector<std::string>{"model_id", "children", "external"});
    REQUIRE(children.rows.size() == 5);
    CHECK(children.rows[0][0] == "starco/hub-base");
    CHECK(children.rows[0][1] == "40");
    CHECK(children.rows[1][0] == "bigco/granite-base");
    CHECK(children.rows[1][1] == "18");

    auto flags = th::load_csv(out / "doc_flags.csv");
    REQUIRE(flags.rows.size() == 3);
    for (const auto& row : flags.rows) {
        double fraction = std::stod(row[2]);
        CHECK(fraction >= 0.0);
        CHECK(fraction <= 1.0);
    }

    auto categories = th::load_csv(out / "arxiv_categories.csv");
    CHECK(categories.header == std::vector<std::string>{"category", "name", "count"});
    bool found_cl = false;
    for (const auto& row : categories.rows)
        if (row[0] == "cs.CL") {
            found_cl = true;
            CHECK(row[1] == "Computer Science, Computation and Language");
            CHECK(std::stol(row[2]) > 0);
        }
    CHECK(found_cl);

    auto manifest = load_manifest(out / "summary_manifest.json");
    CHECK(manifest["version"] == "0.1.0");
    CHECK(manifest["command"] == "summary");
    CHECK(manifest["input"]["records"] == 500);
    CHECK(manifest["input"]["lines_skipped"] == 0);
    CHECK_FALSE(manifest["config"].contains("output_dir"));
    CHECK_FALSE(manifest["config"].contains("cache_dir"));
    bool lists_licenses = false;
    for (const auto& f : manifest["outputs"])
        if (f == "licenses.csv") lists_licenses = true;
    CHECK(lists_licenses);
    std::filesystem::remove_all(dir);
}

TEST_CASE("repeated runs are byte-identical across commands") {
    auto dir = th::fresh_dir("cli_repeat");
    std::string snapshot = th::data_path("synthetic_500.ndjson");
    struct Cmd {
        const char* name;
        std::string args;
    };
    std::vector<Cmd> commands{
        {"summary", "summary --snapshot " + snapshot},
        {"similarity", "similarity --snapshot " + snapshot + " --seed 11 --k 150"},
        {"drift", "drift --snapshot " + snapshot + " --trait license"},
        {"graphstats", "graphstats --snapshot " + snapshot},
        {"cards", "cards --snapshot " + snapshot},
    };
    for (const auto& cmd : commands) {
        auto out1 = dir / (std::string(cmd.name) + "_1");
        auto out2 = dir / (std::string(cmd.name) + "_2");
        auto r1 = th::run_cli(cmd.args + " --out " + out1.string(), dir);
        auto r2 = th::run_cli(cmd.args + " --out " + out2.string(), dir);
        REQUIRE_MESSAGE(r1.exit_code == 0, cmd.name << ": " << r1.output);
        REQUIRE(r2.exit_code == 0);
        CHECK_MESSAGE(dir_contents(out1) == dir_contents(out2), cmd.name);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("snapshot cache round-trips without changing any output") {
    auto dir = th::fresh_dir("cli_cache");
    std::string snapshot = th::data_path("synthetic_500.ndjson");
    auto cache = dir / "cache";
    auto cold = dir / "cold";
    auto warm = dir / "warm";
    auto plain = dir / "plain";

    REQUIRE(th::run_cli("summary --snapshot " + snapshot + " --out " + plain.string(), dir)
                .exit_code == 0);
    REQUIRE(th::run_cli("summary --snapshot " + snapshot + " --cache " + cache.string() +
                            " --out " + cold.string(),
                        dir)
                .exit_code == 0);
    std::size_t cache_files = 0;
    for (const auto& e : std::filesystem::directory_iterator(cache)) {
        ++cache_files;
        CHECK(e.path().filename().string().find("-v1") != std::string::npos);
    }
    CHECK(cache_files == 2); // records + metadata
    REQUIRE(th::run_cli("summary --snapshot " + snapshot + " --cache " + cache.string() +
                            " --out " + warm.string(),
                        dir)
                .exit_code == 0);
    CHECK(dir_contents(cold) == dir_contents(warm));
    CHECK(dir_contents(cold) == dir_contents(plain)); // cache leaves no trace
    std::filesystem::remove_all(dir);
}

TEST_CASE("a one-way license flip yields a perfect drift ordering") {
    auto dir = th::fresh_dir("cli_chain");
    std::vector<th::RecSpec> specs;
    for (int i = 0; i <= 10; ++i) {
        auto s = th::spec("chain/g" + std::string(1, static_cast<char>('a' + i)));
        if (i > 0)
            s.parents = {{"finetune", "chain/g" + std::string(1, static_cast<char>('a' + i - 1))}};
        s.license = i <= 5 ? "gemma" : "apache-2.0";
        specs.push_back(std::move(s));
    }
    auto snapshot = write_snapshot(dir, specs);
    auto out = dir / "out";
    auto r = th::run_cli("drift --snapshot " + snapshot.string() + " --trait license --out " +
                             out.string(),
                         dir);
    REQUIRE_MESSAGE(r.exit_code == 0, r.output);

    auto stats = th::load_csv(out / "drift_stats.csv");
    CHECK(stats.lookup("trait") == "license");
    CHECK(stats.lookup("solver") == "exact-subset-dp");
    CHECK(stats.lookup("optimal") == "true");
    CHECK(stats.lookup("optimal_ordering") == "gemma, apache-2.0");
    CHECK(stats.lookup("observed_inheritances") == "10");
    CHECK(stats.lookup("mutation_rate") == "0.1"); // one flip over ten edges
    CHECK(stats.lookup("mutated_edges") == "1");
    CHECK(stats.lookup("events_total") == "1");
    CHECK(stats.lookup("drift_agreement") == "1");
    CHECK(stats.lookup("mutation_agreement") == "1");
    CHECK(stats.lookup("reference_note").has_value()); // context rows present

    auto edges = th::load_csv(out / "drift_edges.csv");
    REQUIRE(edges.rows.size() == 1);
    CHECK(edges.rows[0][0] == "gemma");
    CHECK(edges.rows[0][1] == "apache-2.0");
    CHECK(edges.rows[0][4] == "false");
    std::filesystem::remove_all(dir);
}

TEST_CASE("language drift on one edge reproduces the worked event set") {
    auto dir = th::fresh_dir("cli_langdrift");
    auto parent = th::spec("pair/parent");
    parent.languages = {"en", "fr", "de"};
    auto child = th::spec("pair/child");
    child.languages = {"fr", "de", "es"};
    child.parents = {{"finetune", "pair/parent"}};
    auto snapshot = write_snapshot(dir, {parent, child});
    auto out = dir / "out";
    auto r = th::run_cli("drift --snapshot " + snapshot.string() + " --trait language --out " +
                             out.string(),
                         dir);
    REQUIRE_MESSAGE(r.exit_code == 0, r.output);

    auto stats = th::load_csv(out / "drift_stats.csv");
    CHECK(stats.lookup("observed_inheritances") == "1");
    CHECK(stats.lookup("mutation_rate") == "0.5"); // 1 - |{fr,de}| / |{en,fr,de,es}|
    CHECK(stats.lookup("events_total") == "5");
    CHECK(stats.lookup("events_retained") == "5");

    // every dropped->held and held->added pair, the doubly-generated one once
    auto edges = th::load_csv(out / "drift_edges.csv");
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& row : edges.rows) seen.insert({row[0], row[1]});
    std::set<std::pair<std::string, std::string>> expected{
        {"en", "fr"}, {"en", "de"}, {"en", "es"}, {"fr", "es"}, {"de", "es"}};
    CHECK(seen == expected);

    auto values = th::load_csv(out / "drift_values.csv");
    REQUIRE(values.rows.size() == 4);
    CHECK(values.rows[0][0] == "en"); // participation 3, tie broken vs "es"
    CHECK(values.rows[0][1] == "3");  // events out
    CHECK(values.rows[0][2] == "0");  // events in
    std::filesystem::remove_all(dir);
}

TEST_CASE("a three-cycle of license flips caps agreement at two thirds") {
    auto dir = th::fresh_dir("cli_cycle");
    std::vector<th::RecSpec> specs;
    const char* flips[3][2] = {{"alpha", "beta"}, {"beta", "gamma"}, {"gamma", "alpha"}};
    for (int i = 0; i < 3; ++i) {
        auto p = th::spec("cyc" + std::to_string(i) + "/parent");
        p.license = flips[i][0];
        auto c = th::spec("cyc" + std::to_string(i) + "/child");
        c.license = flips[i][1];
        c.parents = {{"finetune", p.id}};
        specs.push_back(std::move(p));
        specs.push_back(std::move(c));
    }
    auto snapshot = write_snapshot(dir, specs);
    auto out = dir / "out";
    auto r = th::run_cli("drift --snapshot " + snapshot.string() + " --trait license --out " +
                             out.string(),
                         dir);
    REQUIRE_MESSAGE(r.exit_code == 0, r.output);
    auto stats = th::load_csv(out / "drift_stats.csv");
    CHECK(stats.lookup("drift_agreement") == "0.666666666667");
    CHECK(stats.lookup("mutation_agreement") == "0.666666666667");
    CHECK(stats.lookup("optimal_ordering") == "alpha, beta, gamma");
    CHECK(stats.lookup("mutation_rate") == "1"); // every observed edge flips
    std::filesystem::remove_all(dir);
}

TEST_CASE("similarity separates family structure from the random baseline") {
    auto dir = th::fresh_dir("cli_sim");
    std::vector<th::RecSpec> specs;
    auto add_family = [&](const std::string& prefix, const std::string& license,
                          const std::string& lang, const std::string& task,
                          const std::string& library) {
        auto root = th::spec(prefix + "/base");
        root.license = license;
        root.languages = {lang};
        root.task = task;
        root.library = library;
        specs.push_back(root);
        for (int i = 0; i < 7; ++i) {
            auto s = th::spec(prefix + "/child" + std::to_string(i));
            s.parents = {{"finetune", prefix + "/base"}};
            s.license = license;
            s.languages = {lang};
            s.task = task;
            s.library = library;
            specs.push_back(std::move(s));
        }
    };
    add_family("famx", "superlicense-x", "en", "text-generation", "transformers");
    add_family("famy", "otherlicense-y", "zh", "text-to-image", "diffusers");
    auto snapshot = write_snapshot(dir, specs);
    auto out = dir / "out";
    auto r = th::run_cli("similarity --snapshot " + snapshot.string() +
                             " --seed 3 --k 400 --out " + out.string(),
                         dir);
    REQUIRE_MESSAGE(r.exit_code == 0, r.output);

    auto csv = th::load_csv(out / "similarity.csv");
    check_preamble(csv, "similarity");
    double edge_mean = -1.0, random_mean = -1.0;
    for (const auto& row : csv.rows) {
        if (row[0] == "edge" && row[3] == "tfidf-metadata") edge_mean = std::stod(row[5]);
        if (row[0] == "random_pair" && row[3] == "tfidf-metadata") random_mean = std::stod(row[5]);
    }
    REQUIRE(edge_mean >= 0.0);
    REQUIRE(random_mean >= 0.0);
    CHECK(edge_mean > random_mean);

    auto sites = th::load_csv(out / "pattern_sites.csv");
    CHECK(sites.header == std::vector<std::string>{"pattern", "anchors", "instances"});
    bool found_sibling = false;
    for (const auto& row : sites.rows)
        if (row[0] == "sibling_fork") {
            found_sibling = true;
            CHECK(row[2] == std::to_string(2 * 21)); // C(7,2) per family
        }
    CHECK(found_sibling);

    auto manifest = load_manifest(out / "similarity_manifest.json");
    CHECK(manifest["config"]["seed"] == 3);
    CHECK(manifest["config"]["sample_size"] == 400);
    std::filesystem::remove_all(dir);
}

TEST_CASE("graphstats files reflect the corpus structure") {
    auto dir = th::fresh_dir("cli_graph");
    auto out = dir / "out";
    auto r = th::run_cli("graphstats --snapshot " + th::data_path("synthetic_500.ndjson") +
                             " --out " + out.string(),
                         dir);
    REQUIRE_MESSAGE(r.exit_code == 0, r.output);

    auto trees = th::load_csv(out / "trees.csv");
    CHECK(trees.header ==
          std::vector<std::string>{"root", "size", "max_depth", "mean_depth", "virality"});
    bool granite = false, singleton = false;
    for (const auto& row : trees.rows) {
        if (row[0] == "bigco/granite-base") {
            granite = true;
            CHECK(std::stol(row[1]) >= 20);
            CHECK(std::stol(row[2]) == 5);
            CHECK_FALSE(row[4].empty());
        }
        if (row[1] == "1") {
            singleton = true;
            CHECK(row[4].empty()); // undefined virality stays blank
        }
    }
    CHECK(granite);
    CHECK(singleton);

    auto growth = th::load_csv(out / "growth.csv");
    CHECK(growth.header ==
          std::vector<std::string>{"component", "timestamp", "cumulative", "backfilled"});
    for (const auto& row : growth.rows)
        if (row[0] == "bigco/granite-base") CHECK(row[3].size() >= 4); // true/false

    auto edges = th::load_csv(out / "graph_edges.csv");
    CHECK(edges.header == std::vector<std::string>{"parent", "child", "kind"});
    std::set<std::string> kinds;
    for (const auto& row : edges.rows) kinds.insert(row[2]);
    CHECK(kinds.count("finetune") == 1);
    CHECK(kinds.count("quantized") == 1);
    CHECK(kinds.count("merge") == 1);
    std::filesystem::remove_all(dir);
}

TEST_CASE("cards command reports corpus documentation statistics") {
    auto dir = th::fresh_dir("cli_cards");
    auto out = dir / "out";
    auto r = th::run_cli("cards --snapshot " + th::data_path("synthetic_500.ndjson") + " --out " +
                             out.string(),
                         dir);
    REQUIRE_MESSAGE(r.exit_code == 0, r.output);

    auto stats = th::load_csv(out / "card_stats.csv");
    CHECK(stats.lookup("records") == "500");
    CHECK(stats.lookup("coverage") == "0.632");
    CHECK(std::stod(*stats.lookup("mean_chars")) > 100.0);
    CHECK(stats.lookup("parent_child_edges").has_value());

    auto autogen = th::load_csv(out / "autogen.csv");
    CHECK(autogen.header == std::vector<std::string>{"group", "models", "flagged", "rate"});
    REQUIRE(autogen.rows.size() == 5); // roots + four relation kinds
    std::map<std::string, double> rate;
    for (const auto& row : autogen.rows) rate[row[0]] = std::stod(row[3]);
    // generated boilerplate concentrates on mechanical derivatives
    CHECK(rate.at("quantized") > rate.at("root"));
    CHECK(rate.at("adapter") > rate.at("root"));

    auto gens = th::load_csv(out / "generation_lengths.csv");
    REQUIRE(gens.rows.size() >= 3);
    CHECK(gens.rows[0][0] == "0");
    std::filesystem::remove_all(dir);
}

TEST_CASE("an empty snapshot is a warning, not a failure") {
    auto dir = th::fresh_dir("cli_empty");
    auto snapshot = dir / "empty.ndjson";
    th::write_file(snapshot, "\n\n");
    auto out = dir / "out";
    auto r = th::run_cli("summary --snapshot " + snapshot.string() + " --out " + out.string(), dir);
    CHECK(r.exit_code == 0);
    auto manifest = load_manifest(out / "summary_manifest.json");
    CHECK(manifest["input"]["records"] == 0);
    REQUIRE_FALSE(manifest["warnings"].empty());
    auto licenses = th::load_csv(out / "licenses.csv");
    CHECK(licenses.rows.empty());
    std::filesystem::remove_all(dir);
}

TEST_CASE("an unreadably corrupt snapshot fails loudly") {
    auto dir = th::fresh_dir("cli_corrupt");
    auto snapshot = dir / "bad.ndjson";
    th::write_file(snapshot, "garbage\n" + th::line_of(th::spec("a/x")) + "\nmore garbage\n");
    auto out = dir / "out";
    auto r = th::run_cli("summary --snapshot " + snapshot.string() + " --out " + out.string(), dir);
    CHECK(r.exit_code != 0);
    CHECK(r.output.find("error:") != std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST_CASE("invalid flags are rejected up front") {
    auto dir = th::fresh_dir("cli_invalid");
    std::string snapshot = th::data_path("synthetic_500.ndjson");
    CHECK(th::run_cli("similarity --snapshot " + snapshot + " --seed 1 --metric sorcery --out " +
                          (dir / "a").string(),
                      dir)
              .exit_code != 0);
    CHECK(th::run_cli("similarity --snapshot " + snapshot + " --out " + (dir / "b").string(), dir)
              .exit_code != 0); // seed is mandatory
    CHECK(th::run_cli("drift --snapshot " + snapshot + " --trait charisma --out " +
                          (dir / "c").string(),
                      dir)
              .exit_code != 0);
    CHECK(th::run_cli("summary --snapshot /nonexistent.ndjson --out " + (dir / "d").string(), dir)
              .exit_code != 0);
    std::filesystem::remove_all(dir);
}

TEST_CASE("fetch drives the full crawl-then-analyze loop") {
    httplib::Server server;
    std::atomic<int> pages{0};
    server.Get("/models", [&](const httplib::Request& req, httplib::Response& res) {
        ++pages;
        json page;
        std::string cursor = req.get_param_value("cursor");
        if (cursor.empty()) {
            page["items"] = json::array();
            for (int i = 0; i < 3; ++i) {
                auto s = th::spec("crawl/m" + std::to_string(i));
                s.license = "mit";
                s.languages = {"en"};
                page["items"].push_back(json::parse(th::line_of(s)));
            }
            page["next_cursor"] = "tail";
        } else {
            auto s = th::spec("crawl/m3");
            s.parents = {{"finetune", "crawl/m0"}};
            page["items"] = {json::parse(th::line_of(s))};
            page["next_cursor"] = nullptr;
        }
        res.set_content(page.dump(), "application/json");
    });
    server.Get(R"(/models/(.+)/card)", [](const httplib::Request& req, httplib::Response& res) {
        std::string id = req.matches[1];
        if (id == "crawl/m2") {
            res.status = 404;
            return;
        }
        res.set_content("card of " + id, "text/markdown");
    });
    int port = server.bind_to_any_port("127.0.0.1");
    std::thread runner([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    auto dir = th::fresh_dir("cli_fetch");
    auto snapshot = dir / "crawl.ndjson";
    auto cards = dir / "cards";
    auto token = dir / "resume.json";
    auto r = th::run_cli("fetch --base-url http://127.0.0.1:" + std::to_string(port) +
                             " --out-snapshot " + snapshot.string() + " --resume " +
                             token.string() + " --with-cards " + cards.string() +
                             " --rate 0 --page-size 3",
                         dir);
    server.stop();
    runner.join();
    REQUIRE_MESSAGE(r.exit_code == 0, r.output);
    CHECK(pages == 2);

    auto parsed = lineage::ingest::parse_snapshot_file(snapshot);
    CHECK(parsed.records.size() == 4);
    CHECK(lineage::fetch::load_resume_token(token).terminal);

    auto store = lineage::ingest::load_card_store(cards);
    CHECK(store.size() == 3); // one 404 stays absent
    CHECK(store.at("crawl/m0") == "card of crawl/m0");

    // the fetched snapshot feeds straight into analysis
    auto out = dir / "out";
    auto rr = th::run_cli("summary --snapshot " + snapshot.string() + " --cards " + cards.string() +
                              " --out " + out.string(),
                          dir);
    REQUIRE_MESSAGE(rr.exit_code == 0, rr.output);
    auto manifest = load_manifest(out / "summary_manifest.json");
    CHECK(manifest["input"]["cards_attached"] == 3);
    std::filesystem::remove_all(dir);
}

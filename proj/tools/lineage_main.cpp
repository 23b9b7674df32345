#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lineage/errors.hpp"
#include "lineage/fetch.hpp"
#include "lineage/ingest.hpp"
#include "lineage/report.hpp"
#include "lineage/version.hpp"

namespace fs = std::filesystem;
using namespace lineage;

namespace {

// Enum-valued flags arrive as strings and are resolved just before the run.
struct CliOptions {
    report::RunConfig config;
    std::string token_mode = "combined";
    std::string idf_mode = "raw";
    std::string objective = "drift-agreement";
    std::string tie_policy = "forward-for-neither";
    std::string selection = "traffic";
};

void add_common_options(CLI::App* cmd, CliOptions& opt) {
    cmd->add_option("--snapshot", opt.config.snapshot_path,
                    "newline-delimited metadata snapshot")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--cards", opt.config.card_dir, "card store directory")
        ->check(CLI::ExistingDirectory);
    cmd->add_option("--out", opt.config.output_dir, "output directory (default: .)");
    cmd->add_option("--cache", opt.config.cache_dir, "parsed-snapshot cache directory");
    cmd->add_option("--threads", opt.config.threads, "parser threads (0 = all hardware threads)");
    cmd->add_option("--malformed-threshold", opt.config.max_malformed_fraction,
                    "fatal fraction of malformed snapshot lines")
        ->check(CLI::Range(0.0, 1.0));
}

report::RunConfig resolve(const CliOptions& opt) {
    report::RunConfig config = opt.config;
    if (auto m = similarity::token_mode_from(opt.token_mode))
        config.token_mode = *m;
    else
        throw InvalidInputError("unknown token mode: " + opt.token_mode);
    if (auto m = similarity::idf_mode_from(opt.idf_mode))
        config.idf_mode = *m;
    else
        throw InvalidInputError("unknown idf mode: " + opt.idf_mode);
    if (auto o = ordering::objective_from(opt.objective))
        config.objective = *o;
    else
        throw InvalidInputError("unknown objective: " + opt.objective);
    if (auto t = ordering::tie_policy_from(opt.tie_policy))
        config.tie_policy = *t;
    else
        throw InvalidInputError("unknown tie policy: " + opt.tie_policy);
    if (auto s = mutation::node_selection_from(opt.selection))
        config.selection = *s;
    else
        throw InvalidInputError("unknown node selection: " + opt.selection);
    fs::create_directories(config.output_dir);
    return config;
}

struct FetchOptions {
    fetch::FetchConfig config;
    std::string out_snapshot;
    std::string resume_path;
    std::string cards_dir;
};

int run_fetch(const FetchOptions& opt) {
    fetch::ResumeToken token;
    if (!opt.resume_path.empty()) token = fetch::load_resume_token(opt.resume_path);

    bool resuming = !token.cursor.empty() || token.terminal;
    std::ofstream out(opt.out_snapshot,
                      std::ios::binary | (resuming ? std::ios::app : std::ios::trunc));
    if (!out) throw IoError("cannot write snapshot: " + opt.out_snapshot);

    fetch::RegistryClient client(opt.config);
    auto outcome = client.fetch_snapshot(token, [&out](const ModelRecord& r) {
        out << ingest::serialize_record(r) << '\n';
    });
    out.flush();
    if (!out) throw IoError("error writing snapshot: " + opt.out_snapshot);

    if (!opt.resume_path.empty()) fetch::save_resume_token(opt.resume_path, outcome.resume);

    std::cerr << "fetched " << outcome.records << " record(s) over " << outcome.pages
              << " page(s)\n";
    if (outcome.invalid_items > 0)
        std::cerr << "skipped " << outcome.invalid_items << " invalid item(s)\n";
    if (!outcome.complete) {
        std::cerr << "aborted: " << outcome.error << "\n";
        if (!opt.resume_path.empty())
            std::cerr << "resume token saved to " << opt.resume_path << "\n";
        else
            std::cerr << "rerun with --resume to continue from cursor \"" << outcome.resume.cursor
                      << "\"\n";
        return 1;
    }

    if (!opt.cards_dir.empty()) {
        auto parsed = ingest::parse_snapshot_file(opt.out_snapshot);
        std::vector<std::string> ids;
        ids.reserve(parsed.records.size());
        for (const ModelRecord& r : parsed.records) ids.push_back(r.model_id);
        auto cards = client.fetch_cards(ids);
        std::map<std::string, std::string> present;
        for (auto& [id, text] : cards)
            if (text) present.emplace(id, std::move(*text));
        fs::create_directories(opt.cards_dir);
        ingest::write_card_store(opt.cards_dir, present);
        std::cerr << "fetched " << present.size() << " card(s), " << cards.size() - present.size()
                  << " absent\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Family-tree analytics over model registry snapshots"};
    app.set_version_flag("--version", std::string("lineage ") + kToolkitVersion);
    app.require_subcommand(1);

    CliOptions opt;

    CLI::App* summary = app.add_subcommand(
        "summary", "top licenses/tasks/languages/libraries, top models, doc flags");
    add_common_options(summary, opt);
    summary->add_option("--top", opt.config.top_n, "rows per table");
    summary->add_option("--arxiv-categories", opt.config.arxiv_category_map,
                        "JSON map of arXiv id -> [subject codes]")
        ->check(CLI::ExistingFile);

    CLI::App* sim = app.add_subcommand(
        "similarity", "sampled similarity estimates per family pattern and role pair");
    add_common_options(sim, opt);
    sim->add_option("--seed", opt.config.seed, "base seed for all draws")->required();
    sim->add_option("--k", opt.config.sample_size, "draws per estimate");
    sim->add_option("--metric", opt.config.metrics,
                    "metric to estimate: {lev,bow,tfidf}-{metadata,card} (repeatable)");
    sim->add_option("--vocab", opt.config.vocabulary_cap, "TF-IDF vocabulary cap");
    sim->add_option("--token-mode", opt.token_mode, "unigram | bigram | combined");
    sim->add_option("--idf", opt.idf_mode, "raw | log-smoothed");
    sim->add_option("--lev-cap", opt.config.levenshtein_cap,
                    "edit-distance length cap in codepoints");
    sim->add_flag("--families-only", opt.config.random_pair_families_only,
                  "restrict random pairs to multi-node trees");

    CLI::App* drift = app.add_subcommand("drift", "trait drift graph and optimal ordering");
    add_common_options(drift, opt);
    drift->add_option("--trait", opt.config.trait, "license | language | task | library");
    drift->add_option("--top", opt.config.top_n, "trait values kept in the drift graph");
    drift->add_option("--objective", opt.objective, "drift-agreement | mutation-agreement");
    drift->add_option("--ties", opt.tie_policy,
                      "forward-for-neither | forward-when-source-first");
    drift->add_option("--selection", opt.selection,
                      "keep top values by: traffic | frequency");
    drift->add_option("--exact-cap", opt.config.exact_cap,
                      "largest drift graph solved exactly");
    drift->add_option("--seed", opt.config.seed, "seed for heuristic restarts");
    drift->add_option("--restarts", opt.config.heuristic_restarts, "heuristic restart count");
    drift->add_flag("--include-unknown-license", opt.config.include_unknown_license,
                    "treat \"unknown\"/\"other\" as license values");

    CLI::App* gstats =
        app.add_subcommand("graphstats", "per-tree stats, components, growth, edge list");
    add_common_options(gstats, opt);

    CLI::App* cards = app.add_subcommand("cards", "model card coverage and length analytics");
    add_common_options(cards, opt);

    FetchOptions fopt;
    CLI::App* fetch_cmd = app.add_subcommand(
        "fetch", "crawl a registry into a snapshot file (token via $LINEAGE_API_TOKEN)");
    fetch_cmd->add_option("--base-url", fopt.config.base_url, "registry base URL")->required();
    fetch_cmd->add_option("--out-snapshot", fopt.out_snapshot, "snapshot file to write")
        ->required();
    fetch_cmd->add_option("--resume", fopt.resume_path,
                          "resume token file; reused to continue an aborted crawl");
    fetch_cmd->add_option("--page-size", fopt.config.page_size, "models per list request");
    fetch_cmd->add_option("--rate", fopt.config.max_requests_per_second,
                          "request ceiling per second (<= 0 disables)");
    fetch_cmd->add_option("--retries", fopt.config.max_retries, "retries per failed request");
    fetch_cmd->add_option("--retry-base-ms", fopt.config.retry_base_ms,
                          "first backoff delay in milliseconds");
    fetch_cmd->add_option("--workers", fopt.config.workers, "card-fetch worker threads");
    fetch_cmd->add_option("--with-cards", fopt.cards_dir,
                          "also fetch cards into this card-store directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (summary->parsed()) return report::cmd_summary(resolve(opt));
        if (sim->parsed()) return report::cmd_similarity(resolve(opt));
        if (drift->parsed()) return report::cmd_drift(resolve(opt));
        if (gstats->parsed()) return report::cmd_graphstats(resolve(opt));
        if (cards->parsed()) return report::cmd_cards(resolve(opt));
        if (fetch_cmd->parsed()) return run_fetch(fopt);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "lineage/record.hpp"

namespace lineage::fetch {

/// Environment variable the client reads its bearer token from.
inline constexpr const char* kTokenEnvVar = "LINEAGE_API_TOKEN";

struct FetchConfig {
    std::string base_url;         // "http://host:port"; path endpoints hang off it
    std::size_t page_size = 1000; // registry list-endpoint page cap
    double max_requests_per_second = 4.0; // <= 0 disables the ceiling
    std::size_t max_retries = 5;          // exponential-backoff attempts per request
    std::size_t retry_base_ms = 100;      // first backoff delay; doubles per attempt
    std::size_t workers = 4;              // card-fetch worker pool
    std::string token;                    // falls back to the environment when empty
};

/// Progress marker for resumable snapshot fetches. Serialized to disk by the
/// CLI so an aborted crawl restarts at the failed page, not from scratch.
struct ResumeToken {
    std::string cursor;    // next page to request; empty = first page
    bool terminal = false; // registry exhausted; nothing left to fetch
};

struct FetchOutcome {
    ResumeToken resume;
    std::size_t pages = 0;
    std::size_t records = 0;
    std::size_t invalid_items = 0; // page entries that failed record validation
    bool complete = false;         // false = checkpointed abort after retries
    std::string error;             // abort reason when !complete
};

/// Shared request-rate ceiling: one acquire per HTTP request, across every
/// thread using the same client.
class RateLimiter {
public:
    explicit RateLimiter(double per_second);
    void acquire();

private:
    std::mutex mu_;
    std::chrono::steady_clock::duration interval_{};
    std::chrono::steady_clock::time_point next_{};
};

/// Paginated registry crawler.
///
///   GET {base}/models?limit=N[&cursor=C] -> {"items":[...],"next_cursor":C'}
///   GET {base}/models/{percent-encoded id}/card -> card text | 404
///
/// Requests carry "Authorization: Bearer <token>" when a token is set. A 401
/// or 403 aborts immediately; other failures retry with bounded exponential
/// backoff and then checkpoint.
class RegistryClient {
public:
    explicit RegistryClient(FetchConfig config);
    ~RegistryClient();

    RegistryClient(const RegistryClient&) = delete;
    RegistryClient& operator=(const RegistryClient&) = delete;

    /// Walks the model list from `resume`, feeding each validated record to
    /// `sink` page by page. Returns a terminal token at exhaustion or a
    /// checkpoint at the first page that failed every retry. Throws AuthError
    /// when the registry rejects the credentials.
    FetchOutcome fetch_snapshot(const ResumeToken& resume,
                                const std::function<void(const ModelRecord&)>& sink);

    /// Card text per distinct id; a 404 yields an absent entry. Runs on a
    /// bounded worker pool behind the shared rate limiter. Throws IoError if
    /// any card request fails every retry.
    std::map<std::string, std::optional<std::string>> fetch_cards(
        const std::vector<std::string>& model_ids);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Missing file = fresh start. A malformed file throws InvalidInputError.
ResumeToken load_resume_token(const std::filesystem::path& path);
void save_resume_token(const std::filesystem::path& path, const ResumeToken& token);

} // namespace lineage::fetch

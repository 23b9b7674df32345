#include "lineage/fetch.hpp"

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "lineage/errors.hpp"
#include "lineage/ingest.hpp"
#include "lineage/util.hpp"

namespace lineage::fetch {

RateLimiter::RateLimiter(double per_second) {
    if (per_second > 0.0) {
        interval_ = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
            std::chrono::duration<double>(1.0 / per_second));
    }
}

void RateLimiter::acquire() {
    if (interval_ == std::chrono::steady_clock::duration::zero()) return;
    std::chrono::steady_clock::time_point wake;
    {
        std::lock_guard<std::mutex> lock(mu_);
        auto now = std::chrono::steady_clock::now();
        if (next_ < now) next_ = now;
        wake = next_;
        next_ += interval_;
    }
    std::this_thread::sleep_until(wake);
}

struct RegistryClient::Impl {
    FetchConfig config;
    RateLimiter limiter;

    explicit Impl(FetchConfig cfg) : config(std::move(cfg)), limiter(config.max_requests_per_second) {
        if (config.token.empty()) {
            if (const char* env = std::getenv(kTokenEnvVar)) config.token = env;
        }
    }

    std::unique_ptr<httplib::Client> make_client() const {
        auto cli = std::make_unique<httplib::Client>(config.base_url);
        cli->set_connection_timeout(std::chrono::seconds(10));
        cli->set_read_timeout(std::chrono::seconds(60));
        if (!config.token.empty())
            cli->set_default_headers({{"Authorization", "Bearer " + config.token}});
        return cli;
    }

    /// One logical GET: rate-limited, retried with exponential backoff on
    /// transport errors and 5xx, fatal on 401/403. Returns the last response
    /// (or nullopt body on transport failure) for the caller to interpret.
    httplib::Result get_with_retries(httplib::Client& cli, const std::string& path) {
        httplib::Result res;
        for (std::size_t attempt = 0;; ++attempt) {
            limiter.acquire();
            res = cli.Get(path);
            if (res) {
                if (res->status == 401 || res->status == 403)
                    throw AuthError("registry rejected credentials (HTTP " +
                                    std::to_string(res->status) + ") for " + path);
                if (res->status < 500) return res; // 2xx/3xx/4xx: caller decides
            }
            if (attempt >= config.max_retries) return res;
            std::this_thread::sleep_for(
                std::chrono::milliseconds(config.retry_base_ms << attempt));
        }
    }
};

RegistryClient::RegistryClient(FetchConfig config)
    : impl_(std::make_unique<Impl>(std::move(config))) {}

RegistryClient::~RegistryClient() = default;

namespace {

std::string describe_failure(const httplib::Result& res, const std::string& path) {
    if (!res) return path + ": " + httplib::to_string(res.error());
    return path + ": HTTP " + std::to_string(res->status);
}

} // namespace

FetchOutcome RegistryClient::fetch_snapshot(const ResumeToken& resume,
                                            const std::function<void(const ModelRecord&)>& sink) {
    FetchOutcome out;
    out.resume = resume;
    if (resume.terminal) {
        out.complete = true;
        return out;
    }
    auto cli = impl_->make_client();

    std::string cursor = resume.cursor;
    for (;;) {
        std::string path = "/models?limit=" + std::to_string(impl_->config.page_size);
        if (!cursor.empty()) path += "&cursor=" + util::percent_encode(cursor);

        auto res = impl_->get_with_retries(*cli, path);
        if (!res || res->status != 200) {
            out.resume = {cursor, false};
            out.error = describe_failure(res, path);
            return out; // checkpointed abort; completed pages stay delivered
        }

        nlohmann::json page;
        try {
            page = nlohmann::json::parse(res->body);
            if (!page.is_object() || !page.at("items").is_array())
                throw InvalidInputError("page is not {items, next_cursor}");
        } catch (const std::exception& e) {
            out.resume = {cursor, false};
            out.error = path + ": malformed page body: " + e.what();
            return out;
        }

        ++out.pages;
        for (const auto& item : page["items"]) {
            auto record = ingest::parse_record_line(item.dump());
            if (!record) {
                ++out.invalid_items;
                continue;
            }
            ++out.records;
            sink(*record);
        }

        auto next = page.find("next_cursor");
        if (next == page.end() || next->is_null() ||
            (next->is_string() && next->get<std::string>().empty())) {
            out.resume = {"", true};
            out.complete = true;
            return out;
        }
        cursor = next->get<std::string>();
    }
}

std::map<std::string, std::optional<std::string>> RegistryClient::fetch_cards(
    const std::vector<std::string>& model_ids) {
    std::vector<std::string> ids = model_ids;
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

    std::map<std::string, std::optional<std::string>> result;
    std::mutex result_mu;
    std::atomic<std::size_t> cursor{0};
    std::atomic<bool> stop{false};
    std::string failure;
    bool auth_failure = false;

    auto worker = [&]() {
        auto cli = impl_->make_client();
        for (;;) {
            std::size_t i = cursor.fetch_add(1);
            if (i >= ids.size() || stop.load()) return;
            std::string path = "/models/" + util::percent_encode(ids[i]) + "/card";
            try {
                auto res = impl_->get_with_retries(*cli, path);
                std::lock_guard<std::mutex> lock(result_mu);
                if (res && res->status == 200) {
                    result[ids[i]] = res->body;
                } else if (res && res->status == 404) {
                    result[ids[i]] = std::nullopt; // no card is a valid state
                } else {
                    if (failure.empty()) failure = describe_failure(res, path);
                    stop = true;
                }
            } catch (const AuthError& e) {
                std::lock_guard<std::mutex> lock(result_mu);
                if (failure.empty()) {
                    failure = e.what();
                    auth_failure = true;
                }
                stop = true;
            }
        }
    };

    std::size_t n_workers = std::min(impl_->config.workers, ids.size());
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (std::size_t i = 0; i < n_workers; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    if (auth_failure) throw AuthError(failure);
    if (!failure.empty()) throw IoError("card fetch failed: " + failure);
    return result;
}

ResumeToken load_resume_token(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return {};
    try {
        auto j = nlohmann::json::parse(in);
        ResumeToken token;
        token.cursor = j.value("cursor", std::string());
        token.terminal = j.value("terminal", false);
        return token;
    } catch (const std::exception& e) {
        throw InvalidInputError("malformed resume token " + path.string() + ": " + e.what());
    }
}

void save_resume_token(const std::filesystem::path& path, const ResumeToken& token) {
    nlohmann::ordered_json j;
    j["cursor"] = token.cursor;
    j["terminal"] = token.terminal;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write resume token: " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("error writing resume token: " + path.string());
}

} // namespace lineage::fetch

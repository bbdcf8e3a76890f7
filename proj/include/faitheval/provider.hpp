// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 faitheval contributors
//
// Completion providers: greedy-decoding requests against HTTP endpoints
// with bounded concurrency, sliding-window rate limiting, retry with
// exponential backoff, and a persistent content-addressed response cache.
// A deterministic simulated judge stands in for live models offline.

#pragma once

#include <httplib.h>
#include <json.hpp>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "faitheval/detail/digest.hpp"
#include "faitheval/detail/text.hpp"
#include "faitheval/error.hpp"
#include "faitheval/prompting.hpp"

namespace faitheval {

struct ProviderSpec {
    std::string name;      // cache namespace and report label
    std::string endpoint;  // completion URL; empty for the simulated judge
    std::string model_id;
    std::string auth_env;  // env var holding the bearer secret; empty = no auth
    std::string wire = "neutral";  // request/response adapter: "neutral" | "openai"
    int max_in_flight = 4;
    int requests_per_minute = 600;
    int max_retries = 3;
    std::chrono::milliseconds timeout{60000};
    std::chrono::milliseconds backoff_base{2000};
    std::chrono::milliseconds rate_window{60000};
};

inline void validate_provider_spec(const ProviderSpec& spec) {
    if (spec.name.empty()) throw Error(Errc::Config, "provider name must be non-empty");
    if (spec.model_id.empty()) throw Error(Errc::Config, "model_id must be non-empty");
    if (spec.max_in_flight < 1) throw Error(Errc::Config, "max_in_flight must be >= 1");
    if (spec.requests_per_minute < 1) throw Error(Errc::Config, "requests_per_minute must be >= 1");
    if (spec.max_retries < 0) throw Error(Errc::Config, "max_retries must be >= 0");
    if (spec.wire != "neutral" && spec.wire != "openai") {
        throw Error(Errc::Config, "unknown wire adapter '" + spec.wire + "'");
    }
}

// Defaults are greedy decoding.
struct DecodingParams {
    double temperature = 0.0;
    int max_output_tokens = 256;
    std::vector<std::string> stop_sequences;
};

struct CompletionRecord {
    std::string cache_key;     // 256-bit digest, 64 hex chars, untruncated
    std::string prompt_digest; // digest of the prompt body alone
    std::string raw_output;    // verbatim, unstripped
    std::int64_t created_at = 0;
    int attempt_count = 0;
};

// Canonical request serialization; the cache key is a pure function of it.
inline std::string canonical_request(const ProviderSpec& spec, const std::string& prompt_body,
                                     const DecodingParams& params) {
    nlohmann::json j{
        {"provider", spec.name},
        {"model", spec.model_id},
        {"prompt", prompt_body},
        {"temperature", params.temperature},
        {"max_tokens", params.max_output_tokens},
        {"stop", params.stop_sequences},
    };
    return j.dump();
}

inline std::string completion_cache_key(const ProviderSpec& spec, const std::string& prompt_body,
                                        const DecodingParams& params) {
    return detail::sha256_hex(canonical_request(spec, prompt_body, params));
}

// Neutral wire shape; adapters translate for provider-specific schemas.
inline nlohmann::json neutral_request_json(const ProviderSpec& spec, const std::string& prompt_body,
                                           const DecodingParams& params) {
    return nlohmann::json{
        {"model", spec.model_id},
        {"prompt", prompt_body},
        {"temperature", params.temperature},
        {"max_tokens", params.max_output_tokens},
        {"stop", params.stop_sequences},
    };
}

// Sliding-window limiter: at most max_requests acquisitions in any window.
// Stricter than a token bucket with burst = max_requests, so the bucket
// bound holds as well.
class RateLimiter {
public:
    RateLimiter(std::size_t max_requests, std::chrono::milliseconds window)
        : max_requests_(max_requests), window_(window) {}

    void acquire() {
        using clock = std::chrono::steady_clock;
        for (;;) {
            clock::time_point wake;
            {
                std::lock_guard<std::mutex> lock(mu_);
                const auto now = clock::now();
                while (!stamps_.empty() && now - stamps_.front() >= window_) stamps_.pop_front();
                if (stamps_.size() < max_requests_) {
                    stamps_.push_back(now);
                    return;
                }
                wake = stamps_.front() + window_;
            }
            std::this_thread::sleep_until(wake);
        }
    }

private:
    std::size_t max_requests_;
    std::chrono::milliseconds window_;
    std::mutex mu_;
    std::deque<std::chrono::steady_clock::time_point> stamps_;
};

// Persistent cache: cache/<provider>/<model>/<first-2-hex-of-key>/<key>.json
// with write-temp-then-rename, so one writer and many readers coexist.
class CompletionCache {
public:
    explicit CompletionCache(std::filesystem::path root) : root_(std::move(root)) {}

    std::filesystem::path record_path(const ProviderSpec& spec, const std::string& key) const {
        return root_ / spec.name / spec.model_id / key.substr(0, 2) / (key + ".json");
    }

    std::optional<CompletionRecord> lookup(const ProviderSpec& spec, const std::string& key) const {
        const auto path = record_path(spec, key);
        std::ifstream in(path, std::ios::binary);
        if (!in) return std::nullopt;
        nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
        // corrupt entries are treated as misses and rewritten
        if (j.is_discarded() || !j.is_object()) return std::nullopt;
        CompletionRecord rec;
        try {
            rec.cache_key = j.at("cache_key").get<std::string>();
            rec.prompt_digest = j.at("prompt_digest").get<std::string>();
            rec.raw_output = j.at("raw_output").get<std::string>();
            rec.created_at = j.at("created_at").get<std::int64_t>();
            rec.attempt_count = j.at("attempt_count").get<int>();
        } catch (const nlohmann::json::exception&) {
            return std::nullopt;
        }
        if (rec.cache_key != key) return std::nullopt;
        return rec;
    }

    void store(const ProviderSpec& spec, const CompletionRecord& rec,
               const std::string& canonical) const {
        const auto path = record_path(spec, rec.cache_key);
        std::filesystem::create_directories(path.parent_path());
        nlohmann::json j{
            {"cache_key", rec.cache_key},   {"prompt_digest", rec.prompt_digest},
            {"raw_output", rec.raw_output}, {"created_at", rec.created_at},
            {"attempt_count", rec.attempt_count}, {"request", nlohmann::json::parse(canonical)},
        };
        const auto tmp = path.parent_path() /
                         (rec.cache_key + ".tmp." + std::to_string(::getpid()) + "." +
                          std::to_string(tmp_counter_.fetch_add(1)));
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw Error(Errc::Io, "cannot write cache record: " + tmp.string());
            out << j.dump() << '\n';
            if (!out) throw Error(Errc::Io, "write error on " + tmp.string());
        }
        std::filesystem::rename(tmp, path);
    }

    const std::filesystem::path& root() const { return root_; }

private:
    std::filesystem::path root_;
    mutable std::atomic<std::uint64_t> tmp_counter_{0};
};

// Deterministic offline judge. A statement passes when every alphabetic
// token of length >= 4 (lowercased, punctuation-stripped) occurs in the
// test document; the output mimics each method's answer shape. The rule
// is arbitrary but fixed: it exists to give end-to-end tests a known
// ground truth, not to model language.
inline std::string mock_judge(const Prompt& prompt) {
    const auto doc_tokens = detail::alpha_token_set(prompt.document);
    auto passes = [&](const std::string& statement) {
        for (const std::string& tok : detail::alpha_tokens(statement)) {
            if (tok.size() >= 4 && doc_tokens.count(tok) == 0) return false;
        }
        return true;
    };
    auto yes_no = [&](const std::string& statement) {
        return passes(statement) ? std::string("Yes") : std::string("No");
    };

    switch (prompt.method) {
        case PromptMethod::Vanilla:
            return yes_no(prompt.statements.front()) + ".";
        case PromptMethod::Cot:
            return detail::evidence_sentence(prompt.document, prompt.statements.front()) + " 2. " +
                   yes_no(prompt.statements.front()) + ".";
        case PromptMethod::Sbs: {
            std::string out = yes_no(prompt.statements.front()) + ".";
            for (std::size_t k = 1; k < prompt.statements.size(); ++k) {
                out += " " + std::to_string(k + 1) + ". " + yes_no(prompt.statements[k]) + ".";
            }
            return out;
        }
    }
    return "No.";
}

// A transport produces raw completion text for a prompt, or throws.
class CompletionTransport {
public:
    virtual ~CompletionTransport() = default;
    virtual std::string complete(const Prompt& prompt, const ProviderSpec& spec,
                                 const DecodingParams& params) = 0;
    virtual bool requires_auth() const { return false; }
};

class MockJudgeTransport final : public CompletionTransport {
public:
    std::string complete(const Prompt& prompt, const ProviderSpec&, const DecodingParams&) override {
        return mock_judge(prompt);
    }
};

namespace detail {

// Transient failure, eligible for retry; status 0 means transport-level.
struct TransientFailure {
    int status = 0;
    std::string message;
};

inline std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
    // scheme://authority[/path]
    auto scheme_end = endpoint.find("://");
    std::size_t path_start =
        scheme_end == std::string::npos ? endpoint.find('/') : endpoint.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {endpoint, "/"};
    return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

}  // namespace detail

// Speaks the neutral completion shape over HTTP; the "openai" wire adapter
// translates to the legacy completions schema.
class HttpTransport final : public CompletionTransport {
public:
    std::string complete(const Prompt& prompt, const ProviderSpec& spec,
                         const DecodingParams& params) override {
        auto [base, path] = detail::split_endpoint(spec.endpoint);
        httplib::Client cli(base);
        cli.set_connection_timeout(spec.timeout);
        cli.set_read_timeout(spec.timeout);
        cli.set_write_timeout(spec.timeout);

        httplib::Headers headers;
        if (!spec.auth_env.empty()) {
            const char* secret = std::getenv(spec.auth_env.c_str());
            if (secret == nullptr || *secret == '\0') {
                throw Error(Errc::Auth,
                            "auth secret not resolvable from environment variable " + spec.auth_env);
            }
            headers.emplace("Authorization", std::string("Bearer ") + secret);
        }

        nlohmann::json body = neutral_request_json(spec, prompt.body, params);
        auto res = cli.Post(path, headers, body.dump(), "application/json");
        if (!res) {
            throw detail::TransientFailure{0, "transport: " + httplib::to_string(res.error())};
        }
        if (res->status == 429 || res->status >= 500) {
            throw detail::TransientFailure{res->status, res->body};
        }
        if (res->status != 200) {
            throw ProviderError(res->status, res->body);
        }
        nlohmann::json out = nlohmann::json::parse(res->body, nullptr, false);
        if (out.is_discarded()) throw ProviderError(res->status, "response is not valid JSON");
        try {
            if (spec.wire == "openai") return out.at("choices").at(0).at("text").get<std::string>();
            return out.at("text").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw ProviderError(res->status, std::string("response shape: ") + e.what());
        }
    }

    bool requires_auth() const override { return true; }
};

// One outcome per prompt; partial failures never abort a batch.
struct CompletionOutcome {
    std::optional<CompletionRecord> record;
    std::optional<Errc> error_code;
    std::string error_message;

    bool ok() const { return record.has_value(); }
};

// Orchestrates cache lookup, in-process request deduplication, rate
// limiting, retries, and atomic persistence for one provider.
class CompletionClient {
public:
    CompletionClient(ProviderSpec spec, std::shared_ptr<CompletionTransport> transport,
                     std::filesystem::path cache_root)
        : spec_(std::move(spec)),
          transport_(std::move(transport)),
          cache_(std::move(cache_root)),
          limiter_(static_cast<std::size_t>(spec_.requests_per_minute), spec_.rate_window) {
        validate_provider_spec(spec_);
    }

    const ProviderSpec& spec() const { return spec_; }
    const CompletionCache& cache() const { return cache_; }

    // Audit log of freshly fetched records, one JSON line per completion.
    void set_run_log(const std::filesystem::path& path) {
        std::lock_guard<std::mutex> lock(log_mu_);
        std::filesystem::create_directories(path.parent_path());
        run_log_path_ = path;
    }

    std::int64_t requests_issued() const { return requests_issued_.load(); }

    CompletionRecord complete(const Prompt& prompt, const DecodingParams& params) {
        const std::string key = completion_cache_key(spec_, prompt.body, params);
        if (auto hit = cache_.lookup(spec_, key)) return *hit;
        return flight_.run(key, [&]() -> CompletionRecord {
            if (auto hit = cache_.lookup(spec_, key)) return *hit;
            return fetch(prompt, params, key);
        });
    }

    std::vector<CompletionOutcome> complete_batch(const std::vector<Prompt>& prompts,
                                                  const DecodingParams& params) {
        std::vector<CompletionOutcome> out(prompts.size());
        if (prompts.empty()) return out;
        const std::size_t workers =
            std::min<std::size_t>(static_cast<std::size_t>(spec_.max_in_flight), prompts.size());
        std::atomic<std::size_t> next{0};
        auto work = [&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= prompts.size()) return;
                try {
                    out[i].record = complete(prompts[i], params);
                } catch (const Error& e) {
                    out[i].error_code = e.code();
                    out[i].error_message = e.what();
                } catch (const std::exception& e) {
                    out[i].error_code = Errc::Transport;
                    out[i].error_message = e.what();
                }
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
        return out;
    }

private:
    // In-process single flight: concurrent requests for one key collapse
    // into a single fetch whose result (or error) is shared.
    class SingleFlight {
    public:
        template <typename F>
        CompletionRecord run(const std::string& key, F&& fetch) {
            std::shared_ptr<std::promise<CompletionRecord>> prom;
            std::shared_future<CompletionRecord> fut;
            {
                std::lock_guard<std::mutex> lock(mu_);
                auto it = inflight_.find(key);
                if (it == inflight_.end()) {
                    prom = std::make_shared<std::promise<CompletionRecord>>();
                    fut = prom->get_future().share();
                    inflight_.emplace(key, fut);
                } else {
                    fut = it->second;
                }
            }
            if (!prom) return fut.get();  // follower: wait for the leader's result
            try {
                prom->set_value(fetch());
            } catch (...) {
                prom->set_exception(std::current_exception());
            }
            {
                std::lock_guard<std::mutex> lock(mu_);
                inflight_.erase(key);
            }
            return fut.get();
        }

    private:
        std::mutex mu_;
        std::unordered_map<std::string, std::shared_future<CompletionRecord>> inflight_;
    };

    CompletionRecord fetch(const Prompt& prompt, const DecodingParams& params,
                           const std::string& key) {
        if (transport_->requires_auth() && !spec_.auth_env.empty()) {
            const char* secret = std::getenv(spec_.auth_env.c_str());
            if (secret == nullptr || *secret == '\0') {
                throw Error(Errc::Auth,
                            "auth secret not resolvable from environment variable " + spec_.auth_env);
            }
        }
        int attempts = 0;
        for (;;) {
            ++attempts;
            limiter_.acquire();
            requests_issued_.fetch_add(1);
            try {
                std::string raw = transport_->complete(prompt, spec_, params);
                CompletionRecord rec;
                rec.cache_key = key;
                rec.prompt_digest = detail::sha256_hex(prompt.body);
                rec.raw_output = std::move(raw);
                rec.created_at = std::chrono::duration_cast<std::chrono::seconds>(
                                     std::chrono::system_clock::now().time_since_epoch())
                                     .count();
                rec.attempt_count = attempts;
                cache_.store(spec_, rec, canonical_request(spec_, prompt.body, params));
                append_run_log(rec);
                return rec;
            } catch (const detail::TransientFailure& failure) {
                if (attempts > spec_.max_retries) {
                    if (failure.status == 429) {
                        throw Error(Errc::RateLimitExhausted,
                                    "retries exhausted on 429 responses: " + failure.message);
                    }
                    if (failure.status == 0) {
                        throw Error(Errc::Transport,
                                    "retries exhausted: " + failure.message);
                    }
                    throw ProviderError(failure.status,
                                        "retries exhausted: " + failure.message);
                }
                backoff(attempts);
            }
        }
    }

    void backoff(int attempt) {
        auto delay = spec_.backoff_base * (1LL << (attempt - 1));
        if (delay.count() > 0) {
            thread_local std::mt19937_64 rng(std::random_device{}());
            std::uniform_int_distribution<std::int64_t> jitter(0, delay.count() / 2);
            delay += std::chrono::milliseconds(jitter(rng));
        }
        std::this_thread::sleep_for(delay);
    }

    void append_run_log(const CompletionRecord& rec) {
        std::lock_guard<std::mutex> lock(log_mu_);
        if (run_log_path_.empty()) return;
        std::ofstream log(run_log_path_, std::ios::binary | std::ios::app);
        nlohmann::json j{{"cache_key", rec.cache_key},
                         {"prompt_digest", rec.prompt_digest},
                         {"created_at", rec.created_at},
                         {"attempt_count", rec.attempt_count}};
        log << j.dump() << '\n';
    }

    ProviderSpec spec_;
    std::shared_ptr<CompletionTransport> transport_;
    CompletionCache cache_;
    RateLimiter limiter_;
    SingleFlight flight_;
    std::atomic<std::int64_t> requests_issued_{0};
    std::mutex log_mu_;
    std::filesystem::path run_log_path_;
};

inline std::shared_ptr<CompletionTransport> make_transport(const std::string& kind) {
    if (kind == "mock") return std::make_shared<MockJudgeTransport>();
    if (kind == "http") return std::make_shared<HttpTransport>();
    throw Error(Errc::Config, "unknown provider kind '" + kind + "'");
}

}  // namespace faitheval

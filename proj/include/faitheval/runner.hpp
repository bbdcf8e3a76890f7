// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 faitheval contributors
//
// Run orchestration: a structured config drives corpus -> prompting ->
// provider -> parsing -> metrics, persisting one result line per sample
// and a manifest that makes interrupted runs resumable.

#pragma once

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "faitheval/corpus.hpp"
#include "faitheval/error.hpp"
#include "faitheval/metrics.hpp"
#include "faitheval/parsing.hpp"
#include "faitheval/prompting.hpp"
#include "faitheval/provider.hpp"

namespace faitheval {

inline constexpr const char* kManifestVersion = "faitheval-manifest/1";

inline ProviderSpec default_mock_provider() {
    ProviderSpec spec;
    spec.name = "mock";
    spec.model_id = "mock-judge";
    return spec;
}

struct BenchmarkPartRef {
    std::string name;
    std::string path;
};

struct RunConfig {
    std::string benchmark_name;           // required for multi-part benchmarks
    std::vector<BenchmarkPartRef> parts;  // at least one

    PromptMethod method = PromptMethod::Vanilla;
    std::string instruction_id = kInstructionInfer;
    std::optional<std::string> instruction_file;
    int n_shots = 0;
    std::uint64_t seed = 0;
    std::optional<std::uint64_t> exemplar_order_seed;  // robustness-order variants
    SbsMode sbs_mode = SbsMode::Batched;
    PromptBudget budget;

    UnparseablePolicy policy = UnparseablePolicy::TreatAsNo;

    std::string provider_kind = "mock";  // "mock" | "http"
    ProviderSpec provider = default_mock_provider();
    DecodingParams decoding;

    std::string output_dir;
    std::string cache_dir;
    // Cost guard: at most this many provider requests per invocation; the
    // run hard-stops with a resumable manifest when the budget is spent.
    std::optional<std::int64_t> max_requests;
};

inline void validate_run_config(const RunConfig& config) {
    if (config.parts.empty()) throw Error(Errc::Config, "no benchmark parts configured");
    for (const auto& part : config.parts) {
        if (part.path.empty()) throw Error(Errc::Config, "benchmark part without a path");
    }
    if (config.parts.size() > 1 && config.benchmark_name.empty()) {
        throw Error(Errc::Config, "combined benchmarks need an explicit benchmark name");
    }
    if (config.n_shots < 0 || config.n_shots % 2 != 0) {
        throw Error(Errc::Config, "n_shots must be even or zero under the balanced exemplar policy");
    }
    if (config.output_dir.empty()) throw Error(Errc::Config, "output_dir is required");
    if (config.cache_dir.empty()) throw Error(Errc::Config, "cache_dir is required");
    if (config.budget.token_budget < 1) throw Error(Errc::Config, "token_budget must be positive");
    if (config.max_requests && *config.max_requests < 1) {
        throw Error(Errc::Config, "max_requests must be positive when set");
    }
    validate_provider_spec(config.provider);
    if (config.provider_kind == "http" && config.provider.endpoint.empty()) {
        throw Error(Errc::Config, "http provider needs an endpoint");
    }
}

namespace detail {

inline std::string json_type_hint(const nlohmann::json& j) { return j.type_name(); }

template <typename T>
T get_field(const nlohmann::json& j, const char* key, const T& fallback) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    try {
        return it->get<T>();
    } catch (const nlohmann::json::exception&) {
        throw Error(Errc::Config, std::string("config field '") + key + "' has the wrong type (" +
                                      json_type_hint(*it) + ")");
    }
}

inline std::string resolve_path(const std::filesystem::path& base, const std::string& p) {
    if (p.empty()) return p;
    std::filesystem::path fp(p);
    if (fp.is_absolute()) return fp.lexically_normal().string();
    return (base / fp).lexically_normal().string();
}

}  // namespace detail

// Config snapshot embedded in manifests; run_config_from_json inverts it.
inline nlohmann::json run_config_to_json(const RunConfig& c) {
    nlohmann::json parts = nlohmann::json::array();
    for (const auto& p : c.parts) parts.push_back({{"name", p.name}, {"path", p.path}});
    nlohmann::json j{
        {"benchmark", {{"name", c.benchmark_name}, {"parts", parts}}},
        {"prompt",
         {{"method", prompt_method_code(c.method)},
          {"instruction", c.instruction_id},
          {"n_shots", c.n_shots},
          {"seed", c.seed},
          {"sbs_mode", sbs_mode_code(c.sbs_mode)},
          {"token_budget", c.budget.token_budget},
          {"min_doc_words", c.budget.min_doc_words}}},
        {"provider",
         {{"kind", c.provider_kind},
          {"name", c.provider.name},
          {"endpoint", c.provider.endpoint},
          {"model", c.provider.model_id},
          {"auth_env", c.provider.auth_env},
          {"wire", c.provider.wire},
          {"max_in_flight", c.provider.max_in_flight},
          {"requests_per_minute", c.provider.requests_per_minute},
          {"max_retries", c.provider.max_retries},
          {"timeout_ms", c.provider.timeout.count()},
          {"backoff_base_ms", c.provider.backoff_base.count()},
          {"rate_window_ms", c.provider.rate_window.count()}}},
        {"decoding",
         {{"temperature", c.decoding.temperature},
          {"max_output_tokens", c.decoding.max_output_tokens},
          {"stop", c.decoding.stop_sequences}}},
        {"unparseable_policy", unparseable_policy_code(c.policy)},
        {"output_dir", c.output_dir},
        {"cache_dir", c.cache_dir},
    };
    if (c.instruction_file) j["prompt"]["instruction_file"] = *c.instruction_file;
    if (c.exemplar_order_seed) j["prompt"]["exemplar_order_seed"] = *c.exemplar_order_seed;
    if (c.max_requests) j["max_requests"] = *c.max_requests;
    return j;
}

// base_dir anchors relative paths (usually the config file's directory).
inline RunConfig run_config_from_json(const nlohmann::json& j,
                                      const std::filesystem::path& base_dir) {
    if (!j.is_object()) throw Error(Errc::Config, "run config must be a JSON object");
    RunConfig c;

    auto bench = j.find("benchmark");
    if (bench == j.end() || !bench->is_object()) {
        throw Error(Errc::Config, "missing 'benchmark' section");
    }
    c.benchmark_name = detail::get_field<std::string>(*bench, "name", "");
    if (auto parts = bench->find("parts"); parts != bench->end()) {
        if (!parts->is_array()) throw Error(Errc::Config, "'benchmark.parts' must be an array");
        for (const auto& p : *parts) {
            BenchmarkPartRef ref;
            ref.name = detail::get_field<std::string>(p, "name", "");
            ref.path = detail::resolve_path(base_dir, detail::get_field<std::string>(p, "path", ""));
            c.parts.push_back(std::move(ref));
        }
    } else if (auto path = bench->find("path"); path != bench->end()) {
        c.parts.push_back({"", detail::resolve_path(base_dir, path->get<std::string>())});
    }

    if (auto prompt = j.find("prompt"); prompt != j.end()) {
        auto method = prompt_method_from_code(
            detail::get_field<std::string>(*prompt, "method", "vanilla"));
        if (!method) throw Error(Errc::Config, "prompt.method must be vanilla, cot, or sbs");
        c.method = *method;
        c.instruction_id = detail::get_field<std::string>(*prompt, "instruction", kInstructionInfer);
        if (auto f = prompt->find("instruction_file"); f != prompt->end() && !f->is_null()) {
            c.instruction_file = detail::resolve_path(base_dir, f->get<std::string>());
        }
        c.n_shots = detail::get_field<int>(*prompt, "n_shots", 0);
        c.seed = detail::get_field<std::uint64_t>(*prompt, "seed", 0);
        if (auto os = prompt->find("exemplar_order_seed"); os != prompt->end() && !os->is_null()) {
            c.exemplar_order_seed = os->get<std::uint64_t>();
        }
        auto mode = sbs_mode_from_code(
            detail::get_field<std::string>(*prompt, "sbs_mode", "batched"));
        if (!mode) throw Error(Errc::Config, "prompt.sbs_mode must be batched or per-sentence");
        c.sbs_mode = *mode;
        c.budget.token_budget = detail::get_field<int>(*prompt, "token_budget", 4000);
        c.budget.min_doc_words = detail::get_field<int>(*prompt, "min_doc_words", 32);
    }

    if (auto prov = j.find("provider"); prov != j.end()) {
        c.provider_kind = detail::get_field<std::string>(*prov, "kind", "mock");
        c.provider.name = detail::get_field<std::string>(*prov, "name", c.provider_kind);
        c.provider.endpoint = detail::get_field<std::string>(*prov, "endpoint", "");
        c.provider.model_id = detail::get_field<std::string>(
            *prov, "model", c.provider_kind == "mock" ? "mock-judge" : "");
        c.provider.auth_env = detail::get_field<std::string>(*prov, "auth_env", "");
        c.provider.wire = detail::get_field<std::string>(*prov, "wire", "neutral");
        c.provider.max_in_flight = detail::get_field<int>(*prov, "max_in_flight", 4);
        c.provider.requests_per_minute = detail::get_field<int>(*prov, "requests_per_minute", 600);
        c.provider.max_retries = detail::get_field<int>(*prov, "max_retries", 3);
        if (auto ms = prov->find("timeout_ms"); ms != prov->end()) {
            c.provider.timeout = std::chrono::milliseconds(ms->get<std::int64_t>());
        } else {
            c.provider.timeout = std::chrono::seconds(
                detail::get_field<std::int64_t>(*prov, "timeout_seconds", 60));
        }
        if (auto ms = prov->find("backoff_base_ms"); ms != prov->end()) {
            c.provider.backoff_base = std::chrono::milliseconds(ms->get<std::int64_t>());
        }
        if (auto ms = prov->find("rate_window_ms"); ms != prov->end()) {
            c.provider.rate_window = std::chrono::milliseconds(ms->get<std::int64_t>());
        } else {
            c.provider.rate_window = std::chrono::seconds(
                detail::get_field<std::int64_t>(*prov, "rate_window_seconds", 60));
        }
    }

    if (auto dec = j.find("decoding"); dec != j.end()) {
        c.decoding.temperature = detail::get_field<double>(*dec, "temperature", 0.0);
        c.decoding.max_output_tokens = detail::get_field<int>(*dec, "max_output_tokens", 256);
        c.decoding.stop_sequences =
            detail::get_field<std::vector<std::string>>(*dec, "stop", {});
    }

    auto policy = unparseable_policy_from_code(
        detail::get_field<std::string>(j, "unparseable_policy", "treat_as_no"));
    if (!policy) throw Error(Errc::Config, "unparseable_policy must be treat_as_no or abstain");
    c.policy = *policy;

    c.output_dir = detail::resolve_path(base_dir, detail::get_field<std::string>(j, "output_dir", ""));
    c.cache_dir = detail::resolve_path(base_dir, detail::get_field<std::string>(j, "cache_dir", ""));
    if (auto mr = j.find("max_requests"); mr != j.end() && !mr->is_null()) {
        c.max_requests = mr->get<std::int64_t>();
    }

    validate_run_config(c);
    return c;
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::Config, "cannot open run config: " + path);
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw Error(Errc::Config, "run config is not valid JSON: " + path);
    return run_config_from_json(j, std::filesystem::absolute(path).parent_path());
}

// One scored test sample; the raw model output lives in the cache and is
// referenced by key. Timestamps are deliberately absent so results files
// are byte-stable across re-executions.
struct SampleResult {
    std::string id;
    std::string prompt_digest;
    std::vector<std::string> cache_keys;
    std::vector<Verdict> verdicts;
    std::optional<ConsistencyLabel> predicted;  // nullopt: abstained or failed
    ConsistencyLabel gold = ConsistencyLabel::Consistent;
    bool unparseable = false;
    bool truncated = false;
    std::optional<std::string> error;  // hard per-sample failure

    bool failed() const { return error.has_value(); }
};

inline nlohmann::json sample_result_to_json(const SampleResult& r) {
    nlohmann::json j{
        {"id", r.id},
        {"prompt_digest", r.prompt_digest},
        {"cache_keys", r.cache_keys},
        {"gold", label_to_int(r.gold)},
        {"flags", {{"unparseable", r.unparseable}, {"truncated", r.truncated}}},
    };
    auto verdicts = nlohmann::json::array();
    for (Verdict v : r.verdicts) verdicts.push_back(verdict_code(v));
    j["verdicts"] = verdicts;
    j["predicted"] = r.predicted ? nlohmann::json(label_to_int(*r.predicted)) : nlohmann::json();
    if (r.error) j["error"] = *r.error;
    return j;
}

inline SampleResult sample_result_from_json(const nlohmann::json& j) {
    SampleResult r;
    r.id = j.at("id").get<std::string>();
    r.prompt_digest = j.at("prompt_digest").get<std::string>();
    r.cache_keys = j.at("cache_keys").get<std::vector<std::string>>();
    r.gold = label_from_int(j.at("gold").get<int>());
    r.unparseable = j.at("flags").at("unparseable").get<bool>();
    r.truncated = j.at("flags").at("truncated").get<bool>();
    for (const auto& v : j.at("verdicts")) {
        auto verdict = verdict_from_code(v.get<std::string>());
        if (!verdict) throw Error(Errc::ManifestCorrupt, "unknown verdict in results file");
        r.verdicts.push_back(*verdict);
    }
    if (!j.at("predicted").is_null()) r.predicted = label_from_int(j.at("predicted").get<int>());
    if (auto it = j.find("error"); it != j.end() && !it->is_null()) {
        r.error = it->get<std::string>();
    }
    return r;
}

inline std::vector<SampleResult> read_results(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot open results file: " + path);
    std::vector<SampleResult> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) throw Error(Errc::ManifestCorrupt, "invalid JSON in results file");
        out.push_back(sample_result_from_json(j));
    }
    return out;
}

struct RunMetrics {
    std::optional<double> bacc;
    std::string bacc_note;  // reason when bacc is absent
    ConfusionCounts confusion;
    std::size_t scored = 0;     // contributed to the confusion table
    std::size_t abstained = 0;  // unparseable under the abstain policy
    std::size_t failed = 0;     // hard per-sample failures
    std::size_t unparseable = 0;
    std::size_t truncated = 0;
    ErrorTypeRecall error_type_recall;
};

struct RunManifest {
    std::string version = kManifestVersion;
    nlohmann::json config;
    std::string benchmark_name;
    std::string benchmark_digest;
    std::size_t test_count = 0;
    std::size_t validation_count = 0;
    std::vector<std::string> exemplar_ids;
    std::int64_t started_at = 0;
    std::int64_t finished_at = 0;
    std::string status = "partial";  // "partial" | "complete"
    std::vector<std::pair<std::string, std::string>> sample_status;  // id -> pending/done/failed
    std::optional<RunMetrics> metrics;
    std::int64_t requests_issued = 0;
    std::string results_path;   // relative to the manifest directory
    std::string manifest_path;  // where this manifest was persisted

    bool complete() const { return status == "complete"; }
};

namespace detail {

inline nlohmann::json metrics_to_json(const RunMetrics& m) {
    nlohmann::json types;
    for (const auto& [t, cell] : m.error_type_recall) {
        types[error_type_code(t)] = {{"identified", cell.identified}, {"total", cell.total}};
    }
    return nlohmann::json{
        {"bacc", m.bacc ? nlohmann::json(*m.bacc) : nlohmann::json()},
        {"bacc_note", m.bacc_note},
        {"confusion",
         {{"tp", m.confusion.tp}, {"fn", m.confusion.fn}, {"tn", m.confusion.tn}, {"fp", m.confusion.fp}}},
        {"scored", m.scored},
        {"abstained", m.abstained},
        {"failed", m.failed},
        {"unparseable", m.unparseable},
        {"truncated", m.truncated},
        {"error_type_recall", types},
    };
}

inline RunMetrics metrics_from_json(const nlohmann::json& j) {
    RunMetrics m;
    if (!j.at("bacc").is_null()) m.bacc = j.at("bacc").get<double>();
    m.bacc_note = j.at("bacc_note").get<std::string>();
    m.confusion.tp = j.at("confusion").at("tp").get<std::size_t>();
    m.confusion.fn = j.at("confusion").at("fn").get<std::size_t>();
    m.confusion.tn = j.at("confusion").at("tn").get<std::size_t>();
    m.confusion.fp = j.at("confusion").at("fp").get<std::size_t>();
    m.scored = j.at("scored").get<std::size_t>();
    m.abstained = j.at("abstained").get<std::size_t>();
    m.failed = j.at("failed").get<std::size_t>();
    m.unparseable = j.at("unparseable").get<std::size_t>();
    m.truncated = j.at("truncated").get<std::size_t>();
    for (const auto& [code, cell] : j.at("error_type_recall").items()) {
        auto t = error_type_from_code(code);
        if (!t) throw Error(Errc::ManifestCorrupt, "unknown error type in manifest: " + code);
        m.error_type_recall[*t] = {cell.at("identified").get<std::size_t>(),
                                   cell.at("total").get<std::size_t>()};
    }
    return m;
}

inline nlohmann::json manifest_to_json(const RunManifest& m) {
    nlohmann::json statuses = nlohmann::json::array();
    for (const auto& [id, st] : m.sample_status) statuses.push_back({id, st});
    return nlohmann::json{
        {"version", m.version},
        {"config", m.config},
        {"benchmark",
         {{"name", m.benchmark_name},
          {"digest", m.benchmark_digest},
          {"test_count", m.test_count},
          {"validation_count", m.validation_count}}},
        {"exemplar_ids", m.exemplar_ids},
        {"started_at", m.started_at},
        {"finished_at", m.finished_at},
        {"status", m.status},
        {"sample_status", statuses},
        {"metrics", m.metrics ? metrics_to_json(*m.metrics) : nlohmann::json()},
        {"requests_issued", m.requests_issued},
        {"results_path", m.results_path},
    };
}

inline RunManifest manifest_from_json(const nlohmann::json& j, const std::string& path) {
    RunManifest m;
    try {
        m.version = j.at("version").get<std::string>();
        if (m.version != kManifestVersion) {
            throw Error(Errc::ManifestCorrupt, "unknown manifest version '" + m.version + "'");
        }
        m.config = j.at("config");
        m.benchmark_name = j.at("benchmark").at("name").get<std::string>();
        m.benchmark_digest = j.at("benchmark").at("digest").get<std::string>();
        m.test_count = j.at("benchmark").at("test_count").get<std::size_t>();
        m.validation_count = j.at("benchmark").at("validation_count").get<std::size_t>();
        m.exemplar_ids = j.at("exemplar_ids").get<std::vector<std::string>>();
        m.started_at = j.at("started_at").get<std::int64_t>();
        m.finished_at = j.at("finished_at").get<std::int64_t>();
        m.status = j.at("status").get<std::string>();
        for (const auto& entry : j.at("sample_status")) {
            m.sample_status.emplace_back(entry.at(0).get<std::string>(),
                                         entry.at(1).get<std::string>());
        }
        if (!j.at("metrics").is_null()) m.metrics = metrics_from_json(j.at("metrics"));
        m.requests_issued = j.at("requests_issued").get<std::int64_t>();
        m.results_path = j.at("results_path").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::ManifestCorrupt, std::string("manifest shape: ") + e.what());
    }
    m.manifest_path = path;
    return m;
}

inline void write_manifest(const RunManifest& m) {
    const std::filesystem::path path(m.manifest_path);
    std::filesystem::create_directories(path.parent_path());
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(Errc::Io, "cannot write manifest: " + tmp);
        out << manifest_to_json(m).dump(2) << '\n';
    }
    std::filesystem::rename(tmp, path);
}

inline std::int64_t now_seconds() {
    return std::chrono::duration_cast<std::chrono::seconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

}  // namespace detail

inline RunManifest load_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::ManifestCorrupt, "cannot open manifest: " + path);
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw Error(Errc::ManifestCorrupt, "manifest is not valid JSON: " + path);
    return detail::manifest_from_json(j, path);
}

// Metrics over a full result set. Abstained and hard-failed samples are
// excluded from the confusion table (and from error-type totals); their
// counts are reported alongside.
inline RunMetrics compute_run_metrics(const std::vector<SampleResult>& results,
                                      const std::vector<Sample>& test_samples) {
    RunMetrics m;
    std::map<std::string, const Sample*> by_id;
    for (const Sample& s : test_samples) by_id[s.id] = &s;

    std::vector<std::pair<ConsistencyLabel, ConsistencyLabel>> pairs;
    std::vector<std::pair<Sample, ConsistencyLabel>> scored_negatives;
    for (const SampleResult& r : results) {
        if (r.failed()) {
            ++m.failed;
            continue;
        }
        if (r.unparseable) ++m.unparseable;
        if (r.truncated) ++m.truncated;
        if (!r.predicted) {
            ++m.abstained;
            continue;
        }
        pairs.emplace_back(r.gold, *r.predicted);
        if (r.gold == ConsistencyLabel::Inconsistent) {
            auto it = by_id.find(r.id);
            if (it != by_id.end()) scored_negatives.emplace_back(*it->second, *r.predicted);
        }
    }
    m.scored = pairs.size();
    m.error_type_recall = error_type_recall(scored_negatives);
    if (pairs.empty()) {
        m.bacc_note = "no scored samples";
        return m;
    }
    m.confusion = confusion(pairs);
    try {
        m.bacc = balanced_accuracy(m.confusion);
    } catch (const Error& e) {
        m.bacc_note = e.what();
    }
    return m;
}

namespace detail {

struct PreparedRun {
    RunConfig config;
    Benchmark benchmark;
    std::vector<Sample> validation;
    std::vector<Sample> test;
    Instruction instruction;
    ShotConfig shots;
};

inline PreparedRun prepare_run(const RunConfig& config) {
    validate_run_config(config);
    PreparedRun prep;
    prep.config = config;

    std::vector<Benchmark> parts;
    for (const auto& ref : config.parts) {
        Benchmark b = load_benchmark(ref.path);
        if (!ref.name.empty()) {
            b.name = ref.name;
            b.provenance = {ref.name};
        }
        parts.push_back(std::move(b));
    }
    if (parts.size() == 1) {
        prep.benchmark = std::move(parts.front());
        if (!config.benchmark_name.empty()) prep.benchmark.name = config.benchmark_name;
    } else {
        prep.benchmark = combine_benchmarks(config.benchmark_name, parts);
    }

    if (config.method == PromptMethod::Sbs) {
        for (const Sample& s : prep.benchmark.samples) {
            if (s.cut == Cut::Xsum) {
                throw Error(Errc::Config,
                            "sentence-by-sentence prompting is restricted to cnndm-cut benchmarks; "
                            "sample '" + s.id + "' has cut xsum");
            }
        }
    }

    prep.validation = filter_split(prep.benchmark, Split::Validation);
    prep.test = filter_split(prep.benchmark, Split::Test);
    if (prep.test.empty()) throw Error(Errc::Config, "benchmark has no test-split samples");

    std::vector<Instruction> registry = config.instruction_file
                                            ? load_instructions(*config.instruction_file)
                                            : builtin_instructions();
    prep.instruction = find_instruction(registry, config.instruction_id);

    std::vector<Exemplar> exemplars =
        select_exemplars(prep.validation, config.n_shots, config.seed, config.method);
    if (config.exemplar_order_seed) {
        exemplars = shuffle_exemplars(std::move(exemplars), *config.exemplar_order_seed);
    }
    prep.shots = ShotConfig{config.n_shots, std::move(exemplars), config.seed,
                            config.exemplar_order_seed};

    // Exemplar-floor probe: if the demonstration blocks alone cannot fit
    // the token budget the whole run is impossible, not one sample.
    if (config.n_shots > 0) {
        Sample probe;
        probe.id = "budget-probe";
        probe.document = "probe";
        probe.summary = "Probe.";
        probe.cut = Cut::Cnndm;
        probe.split = Split::Test;
        try {
            (void)build_prompt(probe, config.method, prep.instruction, prep.shots, config.budget);
        } catch (const Error& e) {
            if (e.code() == Errc::Budget) {
                throw Error(Errc::Budget, std::string("exemplar blocks do not fit the budget: ") +
                                              e.what());
            }
            throw;
        }
    }
    return prep;
}

// Prompts for one sample: a single call for vanilla/cot/batched-sbs, one
// call per sentence in per-sentence mode.
inline std::vector<Prompt> prompts_for_sample(const PreparedRun& prep, const Sample& sample) {
    if (prep.config.method == PromptMethod::Sbs && prep.config.sbs_mode == SbsMode::PerSentence) {
        return build_sbs_per_sentence_prompts(sample, prep.instruction, prep.shots,
                                              prep.config.budget);
    }
    return {build_prompt(sample, prep.config.method, prep.instruction, prep.shots,
                         prep.config.budget)};
}

inline SampleResult score_sample(const PreparedRun& prep, const Sample& sample,
                                 const std::vector<Prompt>& prompts,
                                 const std::vector<CompletionOutcome>& outcomes) {
    SampleResult r;
    r.id = sample.id;
    r.gold = sample.label;

    std::string digest_acc;
    for (const Prompt& p : prompts) {
        r.truncated = r.truncated || p.truncated;
        digest_acc += sha256_hex(p.body);
    }
    r.prompt_digest = prompts.size() == 1 ? sha256_hex(prompts.front().body)
                                          : sha256_hex(digest_acc);

    for (const CompletionOutcome& oc : outcomes) {
        if (!oc.ok()) {
            r.error = oc.error_message;
            return r;
        }
        r.cache_keys.push_back(oc.record->cache_key);
    }

    const UnparseablePolicy policy = prep.config.policy;
    switch (prep.config.method) {
        case PromptMethod::Vanilla: {
            Verdict v = parse_vanilla(outcomes.front().record->raw_output);
            r.verdicts = {v};
            r.unparseable = v == Verdict::Unparseable;
            r.predicted = verdict_to_label(v, policy);
            break;
        }
        case PromptMethod::Cot: {
            CotTrace trace = parse_cot(outcomes.front().record->raw_output);
            r.verdicts = {trace.final};
            r.unparseable = trace.final == Verdict::Unparseable;
            r.predicted = verdict_to_label(trace.final, policy);
            break;
        }
        case PromptMethod::Sbs: {
            SbsVerdicts verdicts;
            if (prep.config.sbs_mode == SbsMode::Batched) {
                verdicts = parse_sbs(outcomes.front().record->raw_output,
                                     prompts.front().statement_count);
            } else {
                verdicts.expected_count = static_cast<int>(outcomes.size());
                for (const CompletionOutcome& oc : outcomes) {
                    verdicts.per_sentence.push_back(
                        parse_sbs(oc.record->raw_output, 1).per_sentence.front());
                }
            }
            r.verdicts = verdicts.per_sentence;
            for (Verdict v : r.verdicts) r.unparseable = r.unparseable || v == Verdict::Unparseable;
            r.predicted = aggregate_sbs(verdicts, policy);
            break;
        }
    }
    return r;
}

struct ExecutionState {
    RunManifest manifest;
    std::vector<SampleResult> prior_results;  // from a resumed run
};

inline RunManifest execute(const PreparedRun& prep, ExecutionState state) {
    const RunConfig& config = prep.config;
    RunManifest& manifest = state.manifest;

    const std::filesystem::path out_dir(config.output_dir);
    std::filesystem::create_directories(out_dir);
    const std::string results_file = (out_dir / manifest.results_path).string();

    auto client = std::make_shared<CompletionClient>(config.provider,
                                                     make_transport(config.provider_kind),
                                                     config.cache_dir);
    client->set_run_log(out_dir / "completions.log.jsonl");

    std::map<std::string, std::size_t> status_index;
    for (std::size_t i = 0; i < manifest.sample_status.size(); ++i) {
        status_index[manifest.sample_status[i].first] = i;
    }

    std::vector<const Sample*> pending;
    for (const Sample& s : prep.test) {
        if (manifest.sample_status[status_index.at(s.id)].second == "pending") {
            pending.push_back(&s);
        }
    }

    std::ofstream results_out(results_file, std::ios::binary | std::ios::app);
    if (!results_out) throw Error(Errc::Io, "cannot open results file: " + results_file);

    std::vector<SampleResult> new_results;
    bool stopped_early = false;

    const std::size_t chunk_cap =
        std::max<std::size_t>(static_cast<std::size_t>(config.provider.max_in_flight) * 4, 16);
    std::size_t pos = 0;
    while (pos < pending.size()) {
        std::int64_t budget_left = std::numeric_limits<std::int64_t>::max();
        if (config.max_requests) {
            budget_left = *config.max_requests - client->requests_issued();
            if (budget_left <= 0) {
                stopped_early = true;
                break;
            }
        }

        // Assemble a chunk whose worst-case request count fits the budget.
        struct Item {
            const Sample* sample;
            std::vector<Prompt> prompts;
            std::optional<std::string> build_error;
        };
        std::vector<Item> chunk;
        std::int64_t chunk_prompts = 0;
        while (pos < pending.size() && chunk.size() < chunk_cap) {
            Item item{pending[pos], {}, std::nullopt};
            try {
                item.prompts = prompts_for_sample(prep, *item.sample);
            } catch (const Error& e) {
                item.build_error = e.what();
            }
            const auto need = static_cast<std::int64_t>(item.prompts.size());
            if (!item.build_error && chunk_prompts + need > budget_left) {
                if (chunk.empty()) stopped_early = true;
                break;
            }
            chunk_prompts += need;
            chunk.push_back(std::move(item));
            ++pos;
        }
        if (chunk.empty()) break;

        std::vector<Prompt> flat;
        for (const Item& item : chunk) {
            for (const Prompt& p : item.prompts) flat.push_back(p);
        }
        std::vector<CompletionOutcome> outcomes = client->complete_batch(flat, config.decoding);

        // Post-completion processing is sequential so the results file
        // stays append-ordered by sample.
        std::size_t oc_pos = 0;
        for (const Item& item : chunk) {
            SampleResult r;
            if (item.build_error) {
                r.id = item.sample->id;
                r.gold = item.sample->label;
                r.error = *item.build_error;
            } else {
                std::vector<CompletionOutcome> slice(
                    outcomes.begin() + static_cast<std::ptrdiff_t>(oc_pos),
                    outcomes.begin() + static_cast<std::ptrdiff_t>(oc_pos + item.prompts.size()));
                oc_pos += item.prompts.size();
                r = score_sample(prep, *item.sample, item.prompts, slice);
            }
            results_out << sample_result_to_json(r).dump() << '\n';
            results_out.flush();
            manifest.sample_status[status_index.at(r.id)].second = r.failed() ? "failed" : "done";
            new_results.push_back(std::move(r));
        }
        manifest.requests_issued = client->requests_issued();
        write_manifest(manifest);
    }

    manifest.requests_issued = client->requests_issued();
    bool all_terminal = true;
    for (const auto& [id, st] : manifest.sample_status) {
        if (st == "pending") all_terminal = false;
    }
    if (all_terminal && !stopped_early) {
        std::vector<SampleResult> all = state.prior_results;
        all.insert(all.end(), new_results.begin(), new_results.end());
        manifest.metrics = compute_run_metrics(all, prep.test);
        manifest.status = "complete";
    }
    manifest.finished_at = now_seconds();
    write_manifest(manifest);
    return manifest;
}

}  // namespace detail

// Evaluates every test-split sample: build prompt (shared exemplars picked
// once from the validation split), complete, parse, label; one SampleResult
// line per sample. Starts fresh: any previous results in output_dir are
// replaced. Deterministic given (config, cache contents, mock provider).
inline RunManifest run_experiment(const RunConfig& config) {
    auto prep = detail::prepare_run(config);

    RunManifest manifest;
    manifest.config = run_config_to_json(config);
    manifest.benchmark_name = prep.benchmark.name;
    manifest.benchmark_digest = benchmark_digest(prep.benchmark);
    manifest.test_count = prep.test.size();
    manifest.validation_count = prep.validation.size();
    for (const Exemplar& ex : prep.shots.exemplars) manifest.exemplar_ids.push_back(ex.sample.id);
    manifest.started_at = detail::now_seconds();
    manifest.status = "partial";
    for (const Sample& s : prep.test) manifest.sample_status.emplace_back(s.id, "pending");
    manifest.results_path = "results.jsonl";
    manifest.manifest_path =
        (std::filesystem::path(config.output_dir) / "manifest.json").string();

    std::filesystem::create_directories(config.output_dir);
    {  // fresh start: truncate any previous results
        std::ofstream wipe((std::filesystem::path(config.output_dir) / manifest.results_path),
                           std::ios::binary | std::ios::trunc);
    }
    detail::write_manifest(manifest);
    return detail::execute(prep, {std::move(manifest), {}});
}

// Completes only pending samples; previously written result lines stay
// byte-for-byte untouched. The per-invocation request budget is not
// carried over: pass a fresh limit instead when resuming under cost caps.
inline RunManifest resume(const std::string& manifest_path,
                          std::optional<std::int64_t> max_requests = std::nullopt) {
    RunManifest manifest = load_manifest(manifest_path);
    if (manifest.complete()) return manifest;  // no-op

    const auto run_dir = std::filesystem::absolute(manifest_path).parent_path();
    RunConfig config = run_config_from_json(manifest.config, run_dir);
    config.max_requests = max_requests;
    // the run directory may have moved since the manifest was written
    config.output_dir = run_dir.string();

    auto prep = detail::prepare_run(config);
    if (benchmark_digest(prep.benchmark) != manifest.benchmark_digest) {
        throw Error(Errc::ManifestCorrupt, "benchmark content changed since the run started");
    }
    if (manifest.sample_status.size() != prep.test.size()) {
        throw Error(Errc::ManifestCorrupt, "manifest sample count does not match the benchmark");
    }
    for (std::size_t i = 0; i < prep.test.size(); ++i) {
        if (manifest.sample_status[i].first != prep.test[i].id) {
            throw Error(Errc::ManifestCorrupt, "manifest sample order does not match the benchmark");
        }
    }

    const auto results_file = run_dir / manifest.results_path;
    std::vector<SampleResult> prior;
    if (std::filesystem::exists(results_file)) prior = read_results(results_file.string());

    // The results file is flushed per sample while manifest statuses are
    // checkpointed per chunk, so after a hard kill the file may be ahead
    // of the statuses. Result lines are the ground truth of completed
    // work; reconcile statuses from them.
    std::map<std::string, std::size_t> status_index;
    for (std::size_t i = 0; i < manifest.sample_status.size(); ++i) {
        status_index[manifest.sample_status[i].first] = i;
    }
    for (const SampleResult& r : prior) {
        auto it = status_index.find(r.id);
        if (it == status_index.end()) {
            throw Error(Errc::ManifestCorrupt, "results file contains unknown sample '" + r.id + "'");
        }
        manifest.sample_status[it->second].second = r.failed() ? "failed" : "done";
    }
    std::size_t terminal = 0;
    for (const auto& [id, st] : manifest.sample_status) {
        if (st != "pending") ++terminal;
    }
    if (prior.size() != terminal) {
        throw Error(Errc::ManifestCorrupt, "results file does not match the manifest statuses");
    }

    return detail::execute(prep, {std::move(manifest), std::move(prior)});
}

struct VariantRun {
    std::string variant_id;
    double bacc = 0.0;
    std::string manifest_path;
};

struct RobustnessResult {
    RobustnessSummary summary;
    std::vector<VariantRun> variants;
};

// One run per (instruction, exemplar-order seed) variant; exemplars are
// selected once per the base seed and only their order varies, mirroring
// the shuffled-exemplar robustness protocol.
inline RobustnessResult robustness_run(const RunConfig& base,
                                       const std::vector<std::string>& instruction_ids,
                                       const std::vector<std::uint64_t>& order_seeds) {
    if (instruction_ids.empty()) throw Error(Errc::TooFewRuns, "no instruction variants given");
    std::vector<std::uint64_t> seeds = order_seeds;
    if (seeds.empty()) seeds.push_back(base.seed);
    if (instruction_ids.size() * seeds.size() < 2) {
        throw Error(Errc::TooFewRuns, "robustness needs at least 2 (instruction, seed) variants");
    }

    RobustnessResult out;
    std::vector<std::pair<std::string, double>> accs;
    for (const std::string& iid : instruction_ids) {
        for (std::uint64_t seed : seeds) {
            RunConfig variant = base;
            variant.instruction_id = iid;
            variant.exemplar_order_seed = seed;
            variant.output_dir = (std::filesystem::path(base.output_dir) /
                                  ("variant-" + iid + "-" + std::to_string(seed)))
                                     .string();
            RunManifest manifest = run_experiment(variant);
            if (!manifest.metrics || !manifest.metrics->bacc) {
                throw Error(Errc::DegenerateClasses,
                            "variant '" + iid + "/" + std::to_string(seed) +
                                "' produced no balanced accuracy");
            }
            const std::string vid = iid + "/" + std::to_string(seed);
            accs.emplace_back(vid, *manifest.metrics->bacc);
            out.variants.push_back({vid, *manifest.metrics->bacc, manifest.manifest_path});
        }
    }
    out.summary = robustness_stats(accs);
    return out;
}

struct ShotSweepResult {
    std::vector<ShotSweepRow> rows;
    std::vector<VariantRun> runs;
};

inline ShotSweepResult sweep_shots(const RunConfig& base, const std::vector<int>& shot_counts) {
    if (shot_counts.empty()) throw Error(Errc::Config, "no shot counts given");
    std::set<int> seen;
    for (int c : shot_counts) {
        if (!seen.insert(c).second) {
            throw Error(Errc::Config, "duplicate shot count " + std::to_string(c));
        }
    }

    ShotSweepResult out;
    std::map<int, double> results;
    for (int count : shot_counts) {
        RunConfig variant = base;
        variant.n_shots = count;
        variant.output_dir =
            (std::filesystem::path(base.output_dir) / ("shots-" + std::to_string(count))).string();
        RunManifest manifest = run_experiment(variant);
        if (!manifest.metrics || !manifest.metrics->bacc) {
            throw Error(Errc::DegenerateClasses,
                        "shot count " + std::to_string(count) + " produced no balanced accuracy");
        }
        results[count] = *manifest.metrics->bacc;
        out.runs.push_back({"shots-" + std::to_string(count), *manifest.metrics->bacc,
                            manifest.manifest_path});
    }
    out.rows = shot_sweep_table(results);
    return out;
}

}  // namespace faitheval

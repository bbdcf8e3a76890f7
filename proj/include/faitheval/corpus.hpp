// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 faitheval contributors
//
// Faithfulness benchmark data model: loading, validation, combination,
// and split/error-type statistics.

#pragma once

#include <json.hpp>

#include <array>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "faitheval/detail/digest.hpp"
#include "faitheval/error.hpp"

namespace faitheval {

// Consistent is the positive class in every metric formula.
enum class ConsistencyLabel { Consistent, Inconsistent };

inline int label_to_int(ConsistencyLabel l) { return l == ConsistencyLabel::Consistent ? 1 : 0; }

inline ConsistencyLabel label_from_int(int v) {
    if (v == 1) return ConsistencyLabel::Consistent;
    if (v == 0) return ConsistencyLabel::Inconsistent;
    throw Error(Errc::Format, "label must be 0 or 1, got " + std::to_string(v));
}

// {intrinsic, extrinsic} x {noun phrase, predicate, sentence}.
enum class ErrorType {
    IntrinsicNounPhrase,
    IntrinsicPredicate,
    IntrinsicSent,
    ExtrinsicNounPhrase,
    ExtrinsicPredicate,
    ExtrinsicSent,
};

inline constexpr std::array<ErrorType, 6> kAllErrorTypes = {
    ErrorType::IntrinsicNounPhrase, ErrorType::IntrinsicPredicate, ErrorType::IntrinsicSent,
    ErrorType::ExtrinsicNounPhrase, ErrorType::ExtrinsicPredicate, ErrorType::ExtrinsicSent,
};

inline const char* error_type_code(ErrorType t) {
    switch (t) {
        case ErrorType::IntrinsicNounPhrase: return "intrinsic-NP";
        case ErrorType::IntrinsicPredicate: return "intrinsic-pred";
        case ErrorType::IntrinsicSent: return "intrinsic-sent";
        case ErrorType::ExtrinsicNounPhrase: return "extrinsic-NP";
        case ErrorType::ExtrinsicPredicate: return "extrinsic-pred";
        case ErrorType::ExtrinsicSent: return "extrinsic-sent";
    }
    return "?";
}

inline std::optional<ErrorType> error_type_from_code(std::string_view code) {
    for (ErrorType t : kAllErrorTypes) {
        if (code == error_type_code(t)) return t;
    }
    return std::nullopt;
}

enum class Cut { Cnndm, Xsum };

inline const char* cut_code(Cut c) { return c == Cut::Cnndm ? "cnndm" : "xsum"; }

inline std::optional<Cut> cut_from_code(std::string_view code) {
    if (code == "cnndm") return Cut::Cnndm;
    if (code == "xsum") return Cut::Xsum;
    return std::nullopt;
}

enum class Split { Validation, Test };

inline const char* split_code(Split s) { return s == Split::Validation ? "val" : "test"; }

inline std::optional<Split> split_from_code(std::string_view code) {
    if (code == "val") return Split::Validation;
    if (code == "test") return Split::Test;
    return std::nullopt;
}

// One (document, summary, gold label) unit from a benchmark.
struct Sample {
    std::string id;
    std::string document;
    std::string summary;
    ConsistencyLabel label = ConsistencyLabel::Consistent;
    std::optional<std::string> origin_model;
    std::set<ErrorType> error_types;  // only meaningful for Inconsistent samples
    Cut cut = Cut::Cnndm;
    Split split = Split::Test;
};

struct Benchmark {
    std::string name;
    std::vector<Sample> samples;
    std::vector<std::string> provenance;  // length > 1 for combined benchmarks
};

struct SplitStats {
    std::size_t samples = 0;
    std::size_t positives = 0;
    std::size_t negatives = 0;
};

struct BenchmarkStats {
    SplitStats validation;
    SplitStats test;
    // Count of Inconsistent samples carrying each type, whole benchmark.
    std::map<ErrorType, std::size_t> error_type_negatives;

    const SplitStats& for_split(Split s) const {
        return s == Split::Validation ? validation : test;
    }
};

namespace detail {

inline void check_sample(const Sample& s, std::size_t line) {
    if (s.id.empty()) throw FormatError(line, "empty id");
    if (s.document.empty()) throw FormatError(line, "empty document");
    if (s.summary.empty()) throw FormatError(line, "empty claim");
    if (s.label == ConsistencyLabel::Consistent && !s.error_types.empty()) {
        throw FormatError(line, "error_type present on a consistent sample (id '" + s.id + "')");
    }
}

inline Sample sample_from_json(const nlohmann::json& rec, std::size_t line) {
    if (!rec.is_object()) throw FormatError(line, "record is not a JSON object");
    auto require = [&](const char* key) -> const nlohmann::json& {
        auto it = rec.find(key);
        if (it == rec.end()) throw FormatError(line, std::string("missing required key '") + key + "'");
        return *it;
    };
    auto require_string = [&](const char* key) -> std::string {
        const auto& v = require(key);
        if (!v.is_string()) throw FormatError(line, std::string("key '") + key + "' must be a string");
        return v.get<std::string>();
    };

    Sample s;
    s.id = require_string("id");
    s.document = require_string("document");
    s.summary = require_string("claim");

    const auto& label = require("label");
    if (!label.is_number_integer()) throw FormatError(line, "key 'label' must be an integer");
    const auto lv = label.get<int>();
    if (lv != 0 && lv != 1) throw FormatError(line, "label must be 0 or 1");
    s.label = label_from_int(lv);

    auto cut = cut_from_code(require_string("cut"));
    if (!cut) throw FormatError(line, "cut must be \"cnndm\" or \"xsum\"");
    s.cut = *cut;

    auto split = split_from_code(require_string("split"));
    if (!split) throw FormatError(line, "split must be \"val\" or \"test\"");
    s.split = *split;

    if (auto it = rec.find("origin_model"); it != rec.end()) {
        if (!it->is_string()) throw FormatError(line, "key 'origin_model' must be a string");
        s.origin_model = it->get<std::string>();
    }
    if (auto it = rec.find("error_type"); it != rec.end()) {
        if (!it->is_array()) throw FormatError(line, "key 'error_type' must be an array");
        for (const auto& e : *it) {
            if (!e.is_string()) throw FormatError(line, "error_type entries must be strings");
            auto t = error_type_from_code(e.get<std::string>());
            if (!t) throw FormatError(line, "unknown error_type \"" + e.get<std::string>() + "\"");
            s.error_types.insert(*t);
        }
    }

    check_sample(s, line);
    return s;
}

inline nlohmann::json sample_to_json(const Sample& s) {
    nlohmann::json rec{
        {"id", s.id},          {"document", s.document},      {"claim", s.summary},
        {"label", label_to_int(s.label)}, {"cut", cut_code(s.cut)}, {"split", split_code(s.split)},
    };
    if (s.origin_model) rec["origin_model"] = *s.origin_model;
    if (!s.error_types.empty()) {
        auto arr = nlohmann::json::array();
        for (ErrorType t : s.error_types) arr.push_back(error_type_code(t));
        rec["error_type"] = arr;
    }
    return rec;
}

}  // namespace detail

enum class BenchmarkFormat { Jsonl };

// Loads a JSONL benchmark. Rejects the whole file on the first invalid
// record, reporting the 1-based line number and reason. Stats are always
// recomputed from the records; no external metadata is trusted.
inline Benchmark load_benchmark(const std::string& path,
                                BenchmarkFormat format = BenchmarkFormat::Jsonl) {
    (void)format;  // single format today
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot open benchmark file: " + path);

    Benchmark b;
    {
        // name defaults to the file stem
        auto slash = path.find_last_of("/\\");
        std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
        auto dot = base.find_last_of('.');
        b.name = dot == std::string::npos ? base : base.substr(0, dot);
    }
    b.provenance = {b.name};

    // uniqueness is per (benchmark, split)
    std::unordered_set<std::string> seen_val, seen_test;
    std::string linebuf;
    std::size_t lineno = 0;
    while (std::getline(in, linebuf)) {
        ++lineno;
        if (!linebuf.empty() && linebuf.back() == '\r') linebuf.pop_back();
        if (linebuf.empty()) throw FormatError(lineno, "empty line");
        nlohmann::json rec = nlohmann::json::parse(linebuf, nullptr, false);
        if (rec.is_discarded()) throw FormatError(lineno, "invalid JSON");
        Sample s = detail::sample_from_json(rec, lineno);
        auto& seen = s.split == Split::Validation ? seen_val : seen_test;
        if (!seen.insert(s.id).second) {
            throw FormatError(lineno, "duplicate id '" + s.id + "' in split " + split_code(s.split));
        }
        b.samples.push_back(std::move(s));
    }
    if (in.bad()) throw Error(Errc::Io, "read error on " + path);
    if (lineno == 0) throw FormatError("empty benchmark");
    return b;
}

// Inverse of load_benchmark on valid benchmarks (round-trip identity).
inline void write_benchmark(const Benchmark& b, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::Io, "cannot open for writing: " + path);
    for (const Sample& s : b.samples) {
        out << detail::sample_to_json(s).dump() << '\n';
    }
    if (!out) throw Error(Errc::Io, "write error on " + path);
}

// Union of parts with ids namespaced as "<source>:<id>" to stay traceable
// to the original benchmarks.
inline Benchmark combine_benchmarks(const std::string& name, const std::vector<Benchmark>& parts) {
    if (parts.empty()) throw Error(Errc::EmptyInput, "combine_benchmarks: no parts");
    Benchmark out;
    out.name = name;
    std::unordered_set<std::string> seen_val, seen_test;
    for (const Benchmark& part : parts) {
        out.provenance.push_back(part.name);
        for (Sample s : part.samples) {
            s.id = part.name + ":" + s.id;
            auto& seen = s.split == Split::Validation ? seen_val : seen_test;
            if (!seen.insert(s.id).second) {
                throw Error(Errc::Collision, "combined id collides: '" + s.id + "'");
            }
            out.samples.push_back(std::move(s));
        }
    }
    return out;
}

// Exact tallies per split and per error type; pure function of b.
inline BenchmarkStats benchmark_stats(const Benchmark& b) {
    BenchmarkStats st;
    for (ErrorType t : kAllErrorTypes) st.error_type_negatives[t] = 0;
    for (const Sample& s : b.samples) {
        SplitStats& row = s.split == Split::Validation ? st.validation : st.test;
        ++row.samples;
        if (s.label == ConsistencyLabel::Consistent) {
            ++row.positives;
        } else {
            ++row.negatives;
            for (ErrorType t : s.error_types) ++st.error_type_negatives[t];
        }
    }
    return st;
}

// Pure filter preserving input order.
inline std::vector<Sample> filter_split(const Benchmark& b, Split split) {
    std::vector<Sample> out;
    for (const Sample& s : b.samples) {
        if (s.split == split) out.push_back(s);
    }
    return out;
}

// Content digest over the canonical record serialization, in sample order.
// Used by run manifests to detect that a benchmark changed under a report.
inline std::string benchmark_digest(const Benchmark& b) {
    std::string acc;
    for (const Sample& s : b.samples) {
        acc += detail::sample_to_json(s).dump();
        acc += '\n';
    }
    return detail::sha256_hex(acc);
}

}  // namespace faitheval

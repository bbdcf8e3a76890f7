// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 faitheval contributors
//
// Verdict extraction from raw model output, per prompting method, and
// aggregation of per-sentence verdicts into a summary-level label.

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "faitheval/corpus.hpp"
#include "faitheval/detail/text.hpp"
#include "faitheval/error.hpp"

namespace faitheval {

// Unparseable is a value, never an error, and is never silently coerced:
// every downstream mapping takes an explicit policy.
enum class Verdict { Yes, No, Unparseable };

inline const char* verdict_code(Verdict v) {
    switch (v) {
        case Verdict::Yes: return "yes";
        case Verdict::No: return "no";
        case Verdict::Unparseable: return "unparseable";
    }
    return "?";
}

inline std::optional<Verdict> verdict_from_code(std::string_view code) {
    if (code == "yes") return Verdict::Yes;
    if (code == "no") return Verdict::No;
    if (code == "unparseable") return Verdict::Unparseable;
    return std::nullopt;
}

enum class UnparseablePolicy { TreatAsNo, Abstain };

inline const char* unparseable_policy_code(UnparseablePolicy p) {
    return p == UnparseablePolicy::TreatAsNo ? "treat_as_no" : "abstain";
}

inline std::optional<UnparseablePolicy> unparseable_policy_from_code(std::string_view code) {
    if (code == "treat_as_no") return UnparseablePolicy::TreatAsNo;
    if (code == "abstain") return UnparseablePolicy::Abstain;
    return std::nullopt;
}

struct SbsVerdicts {
    std::vector<Verdict> per_sentence;
    int expected_count = 0;
    bool extra_slots_ignored = false;
};

struct CotTrace {
    std::string evidence;
    Verdict final = Verdict::Unparseable;
};

namespace detail {

// First standalone yes/no word, case-insensitive, punctuation ignored.
inline Verdict first_yes_no(std::string_view raw) {
    for (const std::string& tok : alpha_tokens(raw)) {
        if (tok == "yes") return Verdict::Yes;
        if (tok == "no") return Verdict::No;
    }
    return Verdict::Unparseable;
}

inline Verdict last_yes_no(std::string_view raw) {
    Verdict v = Verdict::Unparseable;
    for (const std::string& tok : alpha_tokens(raw)) {
        if (tok == "yes") v = Verdict::Yes;
        if (tok == "no") v = Verdict::No;
    }
    return v;
}

}  // namespace detail

// Vanilla answers lead with the verdict, so the first standalone token wins.
inline Verdict parse_vanilla(const std::string& raw) {
    return detail::first_yes_no(raw);
}

// Chain-of-thought output reasons first and concludes last: evidence is
// the step-1 text before the final "2." marker, the verdict is the last
// standalone yes/no in the output.
inline CotTrace parse_cot(const std::string& raw) {
    CotTrace trace;
    auto pos = raw.rfind("2.");
    trace.evidence = detail::trim(pos == std::string::npos ? std::string_view(raw)
                                                           : std::string_view(raw).substr(0, pos));
    trace.final = detail::last_yes_no(raw);
    return trace;
}

// The sbs prompt ends "A: 1.", so the first verdict arrives unnumbered and
// slots k >= 2 follow "k." markers. Missing slots parse as Unparseable;
// slots past expected_count are ignored with a flag. Never throws on
// arbitrary bytes, and always returns exactly expected_count verdicts.
inline SbsVerdicts parse_sbs(const std::string& raw, int expected_count) {
    if (expected_count < 1) throw Error(Errc::Config, "expected_count must be >= 1");

    SbsVerdicts out;
    out.expected_count = expected_count;

    std::vector<std::string> slots;
    std::size_t slot_start = 0;
    bool all_markers = true;
    for (int k = 2; k <= expected_count; ++k) {
        const std::string marker = std::to_string(k) + ".";
        auto pos = raw.find(marker, slot_start);
        if (pos == std::string::npos) {
            all_markers = false;
            break;
        }
        slots.push_back(raw.substr(slot_start, pos - slot_start));
        slot_start = pos + marker.size();
    }
    std::string tail = raw.substr(slot_start);
    if (all_markers) {
        const std::string extra_marker = std::to_string(expected_count + 1) + ".";
        auto pos = tail.find(extra_marker);
        if (pos != std::string::npos) {
            out.extra_slots_ignored = true;
            tail = tail.substr(0, pos);
        }
    }
    slots.push_back(std::move(tail));

    for (const std::string& slot : slots) out.per_sentence.push_back(detail::first_yes_no(slot));
    out.per_sentence.resize(static_cast<std::size_t>(expected_count), Verdict::Unparseable);
    return out;
}

// Yes -> Consistent, No -> Inconsistent; Unparseable follows the policy
// (default TreatAsNo; Abstain yields nullopt, excluding the sample from
// metric denominators).
inline std::optional<ConsistencyLabel> verdict_to_label(Verdict v, UnparseablePolicy policy) {
    switch (v) {
        case Verdict::Yes: return ConsistencyLabel::Consistent;
        case Verdict::No: return ConsistencyLabel::Inconsistent;
        case Verdict::Unparseable:
            if (policy == UnparseablePolicy::TreatAsNo) return ConsistencyLabel::Inconsistent;
            return std::nullopt;
    }
    return std::nullopt;
}

// A summary is consistent only if every sentence is: logical AND over the
// per-sentence verdicts. A definite No decides Inconsistent regardless of
// policy; otherwise any Unparseable is resolved by the policy.
inline std::optional<ConsistencyLabel> aggregate_sbs(const SbsVerdicts& v,
                                                     UnparseablePolicy policy) {
    if (v.per_sentence.size() != static_cast<std::size_t>(v.expected_count)) {
        throw Error(Errc::Config, "verdict count does not match expected_count");
    }
    bool any_no = false, any_unparseable = false;
    for (Verdict verdict : v.per_sentence) {
        if (verdict == Verdict::No) any_no = true;
        if (verdict == Verdict::Unparseable) any_unparseable = true;
    }
    if (any_no) return ConsistencyLabel::Inconsistent;
    if (any_unparseable) {
        if (policy == UnparseablePolicy::TreatAsNo) return ConsistencyLabel::Inconsistent;
        return std::nullopt;
    }
    return ConsistencyLabel::Consistent;
}

}  // namespace faitheval

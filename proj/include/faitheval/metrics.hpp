// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 faitheval contributors
//
// Balanced accuracy, confusion tallies, per-error-type recall, and the
// mean/std aggregation used by the robustness and shot-sweep analyses.

#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "faitheval/corpus.hpp"
#include "faitheval/error.hpp"

namespace faitheval {

// Consistent is the positive class.
struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fn = 0;
    std::size_t tn = 0;
    std::size_t fp = 0;

    std::size_t total() const { return tp + fn + tn + fp; }
};

inline ConfusionCounts confusion(
    const std::vector<std::pair<ConsistencyLabel, ConsistencyLabel>>& pairs) {
    if (pairs.empty()) throw Error(Errc::EmptyInput, "confusion over an empty pair list");
    ConfusionCounts c;
    for (const auto& [gold, pred] : pairs) {
        if (gold == ConsistencyLabel::Consistent) {
            (pred == ConsistencyLabel::Consistent ? c.tp : c.fn) += 1;
        } else {
            (pred == ConsistencyLabel::Inconsistent ? c.tn : c.fp) += 1;
        }
    }
    return c;
}

// BAcc = (TP/(TP+FN) + TN/(TN+FP)) / 2. Both classes must be present;
// any constant predictor scores exactly 0.5.
inline double balanced_accuracy(const ConfusionCounts& c) {
    if (c.tp + c.fn == 0 || c.tn + c.fp == 0) {
        throw Error(Errc::DegenerateClasses,
                    "balanced accuracy needs at least one sample of each class");
    }
    const double pos_recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    const double neg_recall = static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
    return 0.5 * (pos_recall + neg_recall);
}

struct ErrorTypeCell {
    std::size_t identified = 0;
    std::size_t total = 0;

    // n/a when no negatives carry the type
    std::optional<double> recall() const {
        if (total == 0) return std::nullopt;
        return static_cast<double>(identified) / static_cast<double>(total);
    }
};

using ErrorTypeRecall = std::map<ErrorType, ErrorTypeCell>;

// Recall of identified errors per type, over gold-Inconsistent samples.
// A sample carrying several types counts once in each of them; untyped
// negatives contribute to no cell.
inline ErrorTypeRecall error_type_recall(
    const std::vector<std::pair<Sample, ConsistencyLabel>>& negatives) {
    ErrorTypeRecall out;
    for (ErrorType t : kAllErrorTypes) out[t] = {};
    for (const auto& [sample, pred] : negatives) {
        if (sample.label != ConsistencyLabel::Inconsistent) {
            throw Error(Errc::Label,
                        "error_type_recall received a consistent sample: '" + sample.id + "'");
        }
        for (ErrorType t : sample.error_types) {
            ErrorTypeCell& cell = out[t];
            ++cell.total;
            if (pred == ConsistencyLabel::Inconsistent) ++cell.identified;
        }
    }
    return out;
}

struct RobustnessSummary {
    double mean = 0.0;
    double stddev = 0.0;  // population estimator: the variants ARE the population
    std::size_t variant_count = 0;
};

inline RobustnessSummary robustness_stats(
    const std::vector<std::pair<std::string, double>>& runs) {
    if (runs.size() < 2) {
        throw Error(Errc::TooFewRuns, "robustness statistics need at least 2 variant runs");
    }
    RobustnessSummary rs;
    rs.variant_count = runs.size();
    // identical variant accuracies must aggregate to an exactly-zero
    // spread; a nonzero std over equal runs reads as a pipeline bug
    bool constant = true;
    for (const auto& [id, bacc] : runs) constant = constant && bacc == runs.front().second;
    if (constant) {
        rs.mean = runs.front().second;
        return rs;
    }
    double sum = 0.0;
    for (const auto& [id, bacc] : runs) sum += bacc;
    rs.mean = sum / static_cast<double>(runs.size());
    double sq = 0.0;
    for (const auto& [id, bacc] : runs) {
        const double d = bacc - rs.mean;
        sq += d * d;
    }
    rs.stddev = std::sqrt(sq / static_cast<double>(runs.size()));
    return rs;
}

struct ShotSweepRow {
    int shots = 0;
    double bacc = 0.0;
};

// Rows ordered by shot count; no monotonicity is assumed or enforced.
inline std::vector<ShotSweepRow> shot_sweep_table(const std::map<int, double>& results) {
    std::vector<ShotSweepRow> rows;
    rows.reserve(results.size());
    for (const auto& [shots, bacc] : results) rows.push_back({shots, bacc});
    return rows;
}

// Accuracies are reported to one decimal in percent, as in the tables.
inline std::string format_percent(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", fraction * 100.0);
    return buf;
}

}  // namespace faitheval

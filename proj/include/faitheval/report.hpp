// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 faitheval contributors
//
// Static Markdown/CSV reports over completed run manifests: the
// model x method x benchmark accuracy grid (zero-shot/few-shot cells),
// error-type recall tables, robustness mean+-std rows, shot sweeps, and
// per-run health rates.

#pragma once

#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "faitheval/metrics.hpp"
#include "faitheval/runner.hpp"

namespace faitheval {

struct Report {
    std::string markdown;
    std::map<std::string, std::string> csv;  // filename -> contents
};

namespace detail {

struct ManifestView {
    RunManifest manifest;
    std::string model;
    std::string method;
    std::string benchmark;
    std::string instruction;
    int n_shots = 0;
    std::optional<std::uint64_t> order_seed;
    double bacc = 0.0;
};

inline ManifestView view_of(const RunManifest& m) {
    ManifestView v;
    v.manifest = m;
    v.model = m.config.at("provider").at("model").get<std::string>();
    v.method = m.config.at("prompt").at("method").get<std::string>();
    v.benchmark = m.benchmark_name;
    v.instruction = m.config.at("prompt").at("instruction").get<std::string>();
    v.n_shots = m.config.at("prompt").at("n_shots").get<int>();
    if (auto it = m.config.at("prompt").find("exemplar_order_seed");
        it != m.config.at("prompt").end() && !it->is_null()) {
        v.order_seed = it->get<std::uint64_t>();
    }
    if (m.metrics && m.metrics->bacc) v.bacc = *m.metrics->bacc;
    return v;
}

inline std::string or_dashes(const std::optional<double>& v) {
    return v ? format_percent(*v) : std::string("--");
}

}  // namespace detail

// Renders reports for a set of completed manifests. Cells follow the
// "zero-shot/few-shot" convention; inapplicable cells render "--".
inline Report report(const std::vector<RunManifest>& manifests) {
    for (const RunManifest& m : manifests) {
        if (!m.complete() || !m.metrics) {
            throw Error(Errc::IncompleteRun, "manifest is not complete: " + m.manifest_path);
        }
    }
    if (manifests.empty()) throw Error(Errc::IncompleteRun, "no manifests given");

    // A benchmark name must mean one dataset across the whole report.
    std::map<std::string, std::string> digests;
    for (const RunManifest& m : manifests) {
        auto [it, inserted] = digests.emplace(m.benchmark_name, m.benchmark_digest);
        if (!inserted && it->second != m.benchmark_digest) {
            throw Error(Errc::IncompleteRun, "conflicting benchmark digests for '" +
                                                 m.benchmark_name + "' across manifests");
        }
    }

    std::vector<detail::ManifestView> views;
    views.reserve(manifests.size());
    for (const RunManifest& m : manifests) views.push_back(detail::view_of(m));

    std::set<std::string> benchmarks;
    for (const auto& v : views) benchmarks.insert(v.benchmark);

    // (model, method) x benchmark -> zero-shot / few-shot accuracy means
    struct Cell {
        std::vector<double> zero;
        std::vector<double> few;
    };
    std::map<std::pair<std::string, std::string>, std::map<std::string, Cell>> grid;
    for (const auto& v : views) {
        Cell& cell = grid[{v.model, v.method}][v.benchmark];
        (v.n_shots == 0 ? cell.zero : cell.few).push_back(v.bacc);
    }
    auto mean_of = [](const std::vector<double>& xs) -> std::optional<double> {
        if (xs.empty()) return std::nullopt;
        double sum = 0.0;
        for (double x : xs) sum += x;
        return sum / static_cast<double>(xs.size());
    };

    std::ostringstream md;
    md << "# faitheval report\n\n";
    md << "## Balanced accuracy (%), zero-shot/few-shot\n\n";
    md << "| Model | Method |";
    for (const std::string& b : benchmarks) md << " " << b << " |";
    md << "\n|---|---|";
    for (std::size_t i = 0; i < benchmarks.size(); ++i) md << "---|";
    md << "\n";

    std::ostringstream grid_csv;
    grid_csv << "model,method,benchmark,zero_shot,few_shot\n";
    for (const auto& [key, row] : grid) {
        md << "| " << key.first << " | " << key.second << " |";
        for (const std::string& b : benchmarks) {
            auto it = row.find(b);
            if (it == row.end()) {
                md << " -- |";
                continue;
            }
            auto zero = mean_of(it->second.zero);
            auto few = mean_of(it->second.few);
            md << " " << detail::or_dashes(zero) << "/" << detail::or_dashes(few) << " |";
        }
        md << "\n";
        for (const std::string& b : benchmarks) {
            auto it = row.find(b);
            if (it == row.end()) continue;
            auto zero = mean_of(it->second.zero);
            auto few = mean_of(it->second.few);
            grid_csv << key.first << "," << key.second << "," << b << ","
                     << detail::or_dashes(zero) << "," << detail::or_dashes(few) << "\n";
        }
    }

    // Error-type recall, per run that scored any typed negative.
    std::ostringstream types_csv;
    types_csv << "model,method,benchmark,n_shots,error_type,identified,total,recall\n";
    std::ostringstream types_md;
    bool any_types = false;
    for (const auto& v : views) {
        const auto& cells = v.manifest.metrics->error_type_recall;
        bool populated = false;
        for (const auto& [t, cell] : cells) populated = populated || cell.total > 0;
        if (!populated) continue;
        any_types = true;
        types_md << "\n### " << v.model << " / " << v.method << " / " << v.benchmark << " ("
                 << v.n_shots << "-shot)\n\n";
        types_md << "| Error type | Identified | Total | Recall (%) |\n|---|---|---|---|\n";
        for (const auto& [t, cell] : cells) {
            auto recall = cell.recall();
            types_md << "| " << error_type_code(t) << " | " << cell.identified << " | "
                     << cell.total << " | " << (recall ? format_percent(*recall) : "n/a")
                     << " |\n";
            types_csv << v.model << "," << v.method << "," << v.benchmark << "," << v.n_shots
                      << "," << error_type_code(t) << "," << cell.identified << "," << cell.total
                      << "," << (recall ? format_percent(*recall) : "n/a") << "\n";
        }
    }
    if (any_types) {
        md << "\n## Error-type recall\n";
        md << "\nNegatives carrying several types count once in each type.\n";
        md << types_md.str();
    }

    // Robustness: groups that vary only in instruction wording or
    // exemplar order, with at least two variants.
    std::map<std::tuple<std::string, std::string, std::string, int>,
             std::vector<std::pair<std::string, double>>>
        robust_groups;
    for (const auto& v : views) {
        std::string vid = v.instruction;
        if (v.order_seed) vid += "/" + std::to_string(*v.order_seed);
        robust_groups[{v.model, v.method, v.benchmark, v.n_shots}].emplace_back(vid, v.bacc);
    }
    std::ostringstream robust_csv;
    robust_csv << "model,method,benchmark,n_shots,variants,mean,std\n";
    std::ostringstream robust_md;
    bool any_robust = false;
    for (const auto& [key, runs] : robust_groups) {
        if (runs.size() < 2) continue;
        any_robust = true;
        RobustnessSummary rs = robustness_stats(runs);
        const auto& [model, method, bench, shots] = key;
        robust_md << "| " << model << " | " << method << " | " << bench << " | " << shots
                  << "-shot | " << format_percent(rs.mean) << "±" << format_percent(rs.stddev)
                  << " | " << rs.variant_count << " |\n";
        robust_csv << model << "," << method << "," << bench << "," << shots << ","
                   << rs.variant_count << "," << format_percent(rs.mean) << ","
                   << format_percent(rs.stddev) << "\n";
    }
    if (any_robust) {
        md << "\n## Robustness over prompt variants (mean±std %)\n\n";
        md << "| Model | Method | Benchmark | Shots | BAcc | Variants |\n|---|---|---|---|---|---|\n";
        md << robust_md.str();
    }

    // Shot sweep: one (model, method, benchmark) with several shot counts.
    std::map<std::tuple<std::string, std::string, std::string>, std::map<int, std::vector<double>>>
        sweep_groups;
    for (const auto& v : views) {
        sweep_groups[{v.model, v.method, v.benchmark}][v.n_shots].push_back(v.bacc);
    }
    std::ostringstream shots_csv;
    shots_csv << "model,method,benchmark,n_shots,bacc\n";
    std::ostringstream shots_md;
    bool any_sweep = false;
    for (const auto& [key, by_shots] : sweep_groups) {
        if (by_shots.size() < 2) continue;
        any_sweep = true;
        const auto& [model, method, bench] = key;
        std::map<int, double> flattened;
        for (const auto& [shots, accs] : by_shots) flattened[shots] = *mean_of(accs);
        for (const ShotSweepRow& row : shot_sweep_table(flattened)) {
            shots_md << "| " << model << " | " << method << " | " << bench << " | " << row.shots
                     << " | " << format_percent(row.bacc) << " |\n";
            shots_csv << model << "," << method << "," << bench << "," << row.shots << ","
                      << format_percent(row.bacc) << "\n";
        }
    }
    if (any_sweep) {
        md << "\n## Exemplar-count sweep\n\n";
        md << "| Model | Method | Benchmark | Shots | BAcc (%) |\n|---|---|---|---|---|\n";
        md << shots_md.str();
    }

    // Run health: parse/truncation issues per manifest.
    md << "\n## Run health\n\n";
    md << "| Model | Method | Benchmark | Shots | Samples | Unparseable | Truncated | Abstained "
          "| Failed |\n|---|---|---|---|---|---|---|---|---|\n";
    std::ostringstream health_csv;
    health_csv << "model,method,benchmark,n_shots,samples,unparseable,truncated,abstained,failed\n";
    for (const auto& v : views) {
        const RunMetrics& rm = *v.manifest.metrics;
        const std::size_t n = v.manifest.test_count;
        md << "| " << v.model << " | " << v.method << " | " << v.benchmark << " | " << v.n_shots
           << " | " << n << " | " << rm.unparseable << " | " << rm.truncated << " | "
           << rm.abstained << " | " << rm.failed << " |\n";
        health_csv << v.model << "," << v.method << "," << v.benchmark << "," << v.n_shots << ","
                   << n << "," << rm.unparseable << "," << rm.truncated << "," << rm.abstained
                   << "," << rm.failed << "\n";
    }

    Report out;
    out.markdown = md.str();
    out.csv["grid.csv"] = grid_csv.str();
    if (any_types) out.csv["error_types.csv"] = types_csv.str();
    if (any_robust) out.csv["robustness.csv"] = robust_csv.str();
    if (any_sweep) out.csv["shot_sweep.csv"] = shots_csv.str();
    out.csv["run_health.csv"] = health_csv.str();
    return out;
}

inline Report report_from_paths(const std::vector<std::string>& manifest_paths) {
    std::vector<RunManifest> manifests;
    manifests.reserve(manifest_paths.size());
    for (const std::string& p : manifest_paths) manifests.push_back(load_manifest(p));
    return report(manifests);
}

}  // namespace faitheval

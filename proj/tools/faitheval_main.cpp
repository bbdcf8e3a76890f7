// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 faitheval contributors
//
// faitheval CLI: validate benchmarks, execute and resume evaluation runs,
// and render reports from run manifests.

#include <CLI11.hpp>

#include <faitheval/faitheval.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace faitheval;

// 0 success, 2 config error, 3 corpus error, 4 provider exhaustion,
// 5 incomplete run.
int exit_code_for(Errc c) {
    switch (c) {
        case Errc::Config:
        case Errc::EmptyInput:
        case Errc::Segmentation:
        case Errc::Budget:
        case Errc::InsufficientExemplars:
        case Errc::Label:
        case Errc::DegenerateClasses:
        case Errc::TooFewRuns:
        case Errc::ManifestCorrupt:
            return 2;
        case Errc::Io:
        case Errc::Format:
        case Errc::Collision:
            return 3;
        case Errc::Auth:
        case Errc::RateLimitExhausted:
        case Errc::Transport:
        case Errc::Provider:
            return 4;
        case Errc::IncompleteRun:
            return 5;
    }
    return 1;
}

void print_stats(const Benchmark& b) {
    const BenchmarkStats st = benchmark_stats(b);
    std::cout << "benchmark: " << b.name << "\n";
    std::cout << "provenance:";
    for (const auto& p : b.provenance) std::cout << " " << p;
    std::cout << "\n";
    auto row = [](const char* name, const SplitStats& s) {
        std::cout << "  " << name << ": " << s.samples << " samples (" << s.positives << " pos / "
                  << s.negatives << " neg)\n";
    };
    row("validation", st.validation);
    row("test", st.test);
    std::cout << "  error types (negatives):";
    bool any = false;
    for (const auto& [t, n] : st.error_type_negatives) {
        if (n == 0) continue;
        std::cout << " " << error_type_code(t) << "=" << n;
        any = true;
    }
    if (!any) std::cout << " none annotated";
    std::cout << "\n";
}

void print_run_summary(const RunManifest& m) {
    std::cout << "run: " << m.benchmark_name << " [" << m.status << "]\n";
    std::cout << "manifest: " << m.manifest_path << "\n";
    std::cout << "requests issued: " << m.requests_issued << "\n";
    if (m.metrics) {
        const RunMetrics& rm = *m.metrics;
        if (rm.bacc) {
            std::cout << "balanced accuracy: " << format_percent(*rm.bacc) << "%\n";
        } else {
            std::cout << "balanced accuracy: n/a (" << rm.bacc_note << ")\n";
        }
        std::cout << "confusion: tp=" << rm.confusion.tp << " fn=" << rm.confusion.fn
                  << " tn=" << rm.confusion.tn << " fp=" << rm.confusion.fp << "\n";
        std::cout << "scored=" << rm.scored << " abstained=" << rm.abstained
                  << " failed=" << rm.failed << " unparseable=" << rm.unparseable
                  << " truncated=" << rm.truncated << "\n";
    } else {
        std::size_t pending = 0;
        for (const auto& [id, st] : m.sample_status) {
            if (st == "pending") ++pending;
        }
        std::cout << "pending samples: " << pending << " (resume with: faitheval resume "
                  << m.manifest_path << ")\n";
    }
}

void write_report_files(const Report& rep, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const auto md_path = std::filesystem::path(out_dir) / "report.md";
    std::ofstream md(md_path, std::ios::binary | std::ios::trunc);
    if (!md) throw Error(Errc::Io, "cannot write " + md_path.string());
    md << rep.markdown;
    for (const auto& [name, content] : rep.csv) {
        const auto csv_path = std::filesystem::path(out_dir) / name;
        std::ofstream csv(csv_path, std::ios::binary | std::ios::trunc);
        if (!csv) throw Error(Errc::Io, "cannot write " + csv_path.string());
        csv << content;
    }
    std::cout << "report written to " << out_dir << " (report.md";
    for (const auto& [name, content] : rep.csv) std::cout << ", " << name;
    std::cout << ")\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"faitheval: judge summary factual consistency by prompting completion endpoints"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::string ingest_path;
    auto* ingest_cmd = app.add_subcommand("ingest", "validate a benchmark file and print stats");
    ingest_cmd->add_option("path", ingest_path, "benchmark JSONL file")->required();

    std::string run_config_path;
    std::optional<std::int64_t> run_max_requests;
    auto* run_cmd = app.add_subcommand("run", "execute an evaluation run from a config file");
    run_cmd->add_option("config", run_config_path, "run config JSON")->required();
    run_cmd->add_option("--max-requests", run_max_requests,
                        "override the per-invocation request budget");

    std::string resume_manifest_path;
    std::optional<std::int64_t> resume_max_requests;
    auto* resume_cmd = app.add_subcommand("resume", "complete a partial run from its manifest");
    resume_cmd->add_option("manifest", resume_manifest_path, "manifest.json of a partial run")
        ->required();
    resume_cmd->add_option("--max-requests", resume_max_requests,
                           "request budget for this invocation");

    std::vector<std::string> report_manifests;
    std::string report_out = ".";
    auto* report_cmd = app.add_subcommand("report", "render Markdown/CSV tables from manifests");
    report_cmd->add_option("manifests", report_manifests, "manifest.json files")->required();
    report_cmd->add_option("--out", report_out, "output directory (default: .)");

    std::string robust_config_path;
    std::vector<std::string> robust_instructions;
    std::vector<std::uint64_t> robust_seeds;
    auto* robust_cmd =
        app.add_subcommand("robustness", "run instruction/exemplar-order variants and aggregate");
    robust_cmd->add_option("config", robust_config_path, "base run config JSON")->required();
    robust_cmd->add_option("--instructions", robust_instructions, "instruction ids")
        ->delimiter(',')
        ->required();
    robust_cmd->add_option("--seeds", robust_seeds, "exemplar-order seeds")->delimiter(',');

    std::string sweep_config_path;
    std::vector<int> sweep_counts;
    auto* sweep_cmd = app.add_subcommand("sweep-shots", "run the exemplar-count sweep");
    sweep_cmd->add_option("config", sweep_config_path, "base run config JSON")->required();
    sweep_cmd->add_option("--shots", sweep_counts, "shot counts, e.g. 0,2,4")
        ->delimiter(',')
        ->required();

    CLI11_PARSE(app, argc, argv);

    // A run whose every sample hard-failed (endpoint down, credentials
    // missing, retries spent) completes resumably but is useless; surface
    // that as the provider-exhaustion exit code.
    auto run_exit = [](const RunManifest& m) {
        if (m.metrics && m.metrics->scored == 0 && m.metrics->failed > 0) return 4;
        return 0;
    };

    try {
        if (*ingest_cmd) {
            print_stats(load_benchmark(ingest_path));
        } else if (*run_cmd) {
            RunConfig config = load_run_config(run_config_path);
            if (run_max_requests) config.max_requests = run_max_requests;
            RunManifest m = run_experiment(config);
            print_run_summary(m);
            return run_exit(m);
        } else if (*resume_cmd) {
            RunManifest m = resume(resume_manifest_path, resume_max_requests);
            print_run_summary(m);
            return run_exit(m);
        } else if (*report_cmd) {
            Report rep = report_from_paths(report_manifests);
            write_report_files(rep, report_out);
        } else if (*robust_cmd) {
            RunConfig base = load_run_config(robust_config_path);
            RobustnessResult rr = robustness_run(base, robust_instructions, robust_seeds);
            for (const VariantRun& v : rr.variants) {
                std::cout << "variant " << v.variant_id << ": " << format_percent(v.bacc) << "% ("
                          << v.manifest_path << ")\n";
            }
            std::cout << "mean±std: " << format_percent(rr.summary.mean) << "±"
                      << format_percent(rr.summary.stddev) << " over " << rr.summary.variant_count
                      << " variants\n";
        } else if (*sweep_cmd) {
            RunConfig base = load_run_config(sweep_config_path);
            ShotSweepResult sw = sweep_shots(base, sweep_counts);
            std::cout << "shots\tbacc(%)\n";
            for (const ShotSweepRow& row : sw.rows) {
                std::cout << row.shots << "\t" << format_percent(row.bacc) << "\n";
            }
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

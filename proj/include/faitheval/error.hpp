// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 faitheval contributors

#pragma once

#include <stdexcept>
#include <string>

namespace faitheval {

// Error categories, one per failure class the harness distinguishes.
// CLI exit codes are derived from these (see tools/).
enum class Errc {
    Io,
    Format,
    Collision,
    EmptyInput,
    Segmentation,
    Budget,
    InsufficientExemplars,
    Auth,
    RateLimitExhausted,
    Transport,
    Provider,
    Label,
    DegenerateClasses,
    TooFewRuns,
    Config,
    ManifestCorrupt,
    IncompleteRun,
};

inline const char* errc_name(Errc c) {
    switch (c) {
        case Errc::Io: return "io";
        case Errc::Format: return "format";
        case Errc::Collision: return "collision";
        case Errc::EmptyInput: return "empty_input";
        case Errc::Segmentation: return "segmentation";
        case Errc::Budget: return "budget";
        case Errc::InsufficientExemplars: return "insufficient_exemplars";
        case Errc::Auth: return "auth";
        case Errc::RateLimitExhausted: return "rate_limit_exhausted";
        case Errc::Transport: return "transport";
        case Errc::Provider: return "provider";
        case Errc::Label: return "label";
        case Errc::DegenerateClasses: return "degenerate_classes";
        case Errc::TooFewRuns: return "too_few_runs";
        case Errc::Config: return "config";
        case Errc::ManifestCorrupt: return "manifest_corrupt";
        case Errc::IncompleteRun: return "incomplete_run";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    Errc code() const { return code_; }

private:
    Errc code_;
};

// Rejecting a benchmark file reports the offending line.
class FormatError : public Error {
public:
    FormatError(std::size_t line, const std::string& reason)
        : Error(Errc::Format, "line " + std::to_string(line) + ": " + reason), line_(line) {}

    explicit FormatError(const std::string& reason) : Error(Errc::Format, reason), line_(0) {}

    // 0 when the error is not tied to a specific line (e.g. empty file).
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// Non-retryable endpoint response.
class ProviderError : public Error {
public:
    ProviderError(int status, const std::string& message)
        : Error(Errc::Provider, "status " + std::to_string(status) + ": " + message),
          status_(status) {}

    int status() const { return status_; }

private:
    int status_;
};

}  // namespace faitheval

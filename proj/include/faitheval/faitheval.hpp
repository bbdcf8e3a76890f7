// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 faitheval contributors

#pragma once

#include "faitheval/corpus.hpp"
#include "faitheval/error.hpp"
#include "faitheval/metrics.hpp"
#include "faitheval/parsing.hpp"
#include "faitheval/prompting.hpp"
#include "faitheval/provider.hpp"
#include "faitheval/report.hpp"
#include "faitheval/runner.hpp"

namespace faitheval {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace faitheval

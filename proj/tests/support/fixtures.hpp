// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 faitheval contributors
//
// Shared test fixtures: the prompt-table example document/summary, a
// synthetic benchmark whose gold labels follow the simulated judge's
// token rule, and a scratch-directory guard.

#pragma once

#include <faitheval/corpus.hpp>

#include <atomic>
#include <filesystem>
#include <string>
#include <unistd.h>
#include <vector>

namespace fixtures {

// News document for the worked example. The clause attributing the
// wrestling organization's founding is absent, so the summary's first
// sentence fails the token-subset rule while the second passes it.
inline const std::string kExampleDocument =
    "(CNN)The classic video game \"Space Invaders\" was developed in Japan back in the late "
    "1970's -- and now their real-life counterparts are the topic of an earnest political "
    "discussion in Japan's corridors of power. Luckily, Japanese can sleep soundly in their beds "
    "tonight as the government's top military official earnestly revealed that the country's Air "
    "Self Defense Force (ASDF) had never encountered an extraterrestrial unidentified flying "
    "object. Inoki has appeared in the U.S.-based WWE -- which describes him as \"among the most "
    "respected men in sports-entertainment\". He entered Japan's Upper House for a second stint "
    "in politics in 2013.";

// Lowercased model-generated summary with spaced punctuation, two sentences.
inline const std::string kExampleSummary =
    "`` space invaders '' is the founder of the new japan pro wrestling organization . inoki has "
    "appeared in the u.s.-based wwe -- which describes him as `` among the most respected men in "
    "sports-entertainment '' .";

inline const std::string kExampleSentence1 =
    "`` space invaders '' is the founder of the new japan pro wrestling organization .";

inline const std::string kExampleSentence2 =
    "inoki has appeared in the u.s.-based wwe -- which describes him as `` among the most "
    "respected men in sports-entertainment '' .";

// Reference model outputs for the three methods on the example above.
inline const std::string kExampleVanillaOutput = "No.";

inline const std::string kExampleCotOutput =
    "Antonio Inoki is described as \"among the most respected men in sports-entertainment\" and "
    "is the founder of the New Japan Pro Wrestling organization. \n2. No, Space Invaders is not "
    "the founder of the New Japan Pro Wrestling organization.";

inline const std::string kExampleSbsOutput = "No. 2. Yes.";

inline faitheval::Sample make_sample(std::string id, std::string document, std::string summary,
                                     faitheval::ConsistencyLabel label,
                                     faitheval::Split split = faitheval::Split::Test,
                                     faitheval::Cut cut = faitheval::Cut::Cnndm) {
    faitheval::Sample s;
    s.id = std::move(id);
    s.document = std::move(document);
    s.summary = std::move(summary);
    s.label = label;
    s.split = split;
    s.cut = cut;
    return s;
}

// Spells an index with letters only, so it survives alphabetic tokenization.
inline std::string spell_index(std::size_t i) {
    std::string out;
    do {
        out.insert(out.begin(), static_cast<char>('a' + i % 26));
        i /= 26;
    } while (i > 0);
    return "marker" + out;
}

// A document with a per-sample unique content word.
inline std::string synthetic_document(std::size_t i) {
    return "The quick brown fox named " + spell_index(i) +
           " jumps over the lazy dog near the river bank while seagulls circle overhead "
           "and fishermen watch quietly from wooden boats.";
}

// Consistent summaries reuse document words; inconsistent ones introduce
// "phantomword", which no synthetic document contains.
inline std::string synthetic_summary(std::size_t i, bool consistent) {
    if (consistent) {
        return "The quick brown " + spell_index(i) + " jumps over the lazy dog.";
    }
    return "The quick brown " + spell_index(i) + " carries a phantomword over the river.";
}

// Gold labels equal the simulated judge's token rule by construction.
inline faitheval::Benchmark synthetic_benchmark(std::size_t test_pos, std::size_t test_neg,
                                                std::size_t val_pos = 2, std::size_t val_neg = 2,
                                                faitheval::Cut cut = faitheval::Cut::Cnndm) {
    faitheval::Benchmark b;
    b.name = "synthetic";
    b.provenance = {"synthetic"};
    std::size_t i = 0;
    auto add = [&](faitheval::Split split, bool consistent) {
        auto label = consistent ? faitheval::ConsistencyLabel::Consistent
                                : faitheval::ConsistencyLabel::Inconsistent;
        faitheval::Sample s = make_sample(
            (split == faitheval::Split::Test ? "t" : "v") + std::to_string(i),
            synthetic_document(i), synthetic_summary(i, consistent), label, split, cut);
        ++i;
        b.samples.push_back(std::move(s));
    };
    for (std::size_t k = 0; k < val_pos; ++k) add(faitheval::Split::Validation, true);
    for (std::size_t k = 0; k < val_neg; ++k) add(faitheval::Split::Validation, false);
    for (std::size_t k = 0; k < test_pos; ++k) add(faitheval::Split::Test, true);
    for (std::size_t k = 0; k < test_neg; ++k) add(faitheval::Split::Test, false);
    return b;
}

// Unique scratch directory, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<std::uint64_t> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("faitheval-" + tag + "-" + std::to_string(::getpid()) + "-" +
                 std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string str(const std::string& sub = "") const {
        return sub.empty() ? path_.string() : (path_ / sub).string();
    }

private:
    std::filesystem::path path_;
};

}  // namespace fixtures

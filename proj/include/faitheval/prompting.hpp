// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 faitheval contributors
//
// Prompt construction: instruction wordings, sentence segmentation,
// exemplar selection, and byte-deterministic rendering of the three
// prompting methods (vanilla, chain-of-thought, sentence-by-sentence)
// in zero- and few-shot configurations.

#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "faitheval/corpus.hpp"
#include "faitheval/detail/text.hpp"
#include "faitheval/error.hpp"

namespace faitheval {

enum class PromptMethod { Vanilla, Cot, Sbs };

inline const char* prompt_method_code(PromptMethod m) {
    switch (m) {
        case PromptMethod::Vanilla: return "vanilla";
        case PromptMethod::Cot: return "cot";
        case PromptMethod::Sbs: return "sbs";
    }
    return "?";
}

inline std::optional<PromptMethod> prompt_method_from_code(std::string_view code) {
    if (code == "vanilla") return PromptMethod::Vanilla;
    if (code == "cot") return PromptMethod::Cot;
    if (code == "sbs") return PromptMethod::Sbs;
    return std::nullopt;
}

// The instructions never use the word "summary"; the generated text is
// referred to as a "statement" so the model judges consistency only.
struct Instruction {
    std::string id;
    std::string text;  // vanilla wording, ends with "Yes or No?"
};

inline constexpr const char* kInstructionInfer = "infer";
inline constexpr const char* kInstructionFactuallyConsistent = "factually_consistent";
inline constexpr const char* kInstructionEntail = "entail";

inline constexpr const char* kCotStructureSuffix =
    "Please answer with the following structure. 1. Try to find the supporting evidence from "
    "the document. 2. Answer Yes or No.";

inline void validate_instruction(const Instruction& ins) {
    if (ins.id.empty()) throw Error(Errc::Config, "instruction id must be non-empty");
    if (ins.text.empty()) throw Error(Errc::Config, "instruction text must be non-empty");
    if (detail::lowercase(ins.text).find("summary") != std::string::npos) {
        throw Error(Errc::Config,
                    "instruction '" + ins.id + "' contains the word \"summary\"");
    }
}

inline std::vector<Instruction> builtin_instructions() {
    return {
        {kInstructionInfer,
         "Q: Can the following statement be inferred from the above document? Yes or No?"},
        {kInstructionFactuallyConsistent,
         "Q: Is the following statement factually consistent with the above document? Yes or No?"},
        {kInstructionEntail,
         "Q: Does the above document entail the following statement? Yes or No?"},
    };
}

// One instruction per line, "{id}\t{text}". Later entries override
// earlier ones (including the builtins) so sweeps can add wordings
// without rebuilds.
inline std::vector<Instruction> load_instructions(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot open instruction file: " + path);
    std::vector<Instruction> out = builtin_instructions();
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size()) {
            throw FormatError(lineno, "expected \"{id}\\t{text}\"");
        }
        Instruction ins{line.substr(0, tab), line.substr(tab + 1)};
        validate_instruction(ins);
        auto it = std::find_if(out.begin(), out.end(),
                               [&](const Instruction& x) { return x.id == ins.id; });
        if (it != out.end()) {
            *it = ins;
        } else {
            out.push_back(ins);
        }
    }
    return out;
}

inline const Instruction& find_instruction(const std::vector<Instruction>& registry,
                                           std::string_view id) {
    for (const Instruction& ins : registry) {
        if (ins.id == id) return ins;
    }
    throw Error(Errc::Config, "unknown instruction id '" + std::string(id) + "'");
}

// Chain-of-thought wording: the question keeps its instruction-specific
// phrasing; the trailing "Yes or No?" is replaced by the structured
// answer request shown in the paper's prompt table.
inline std::string cot_instruction_text(const Instruction& ins) {
    static constexpr std::string_view kTail = " Yes or No?";
    std::string question = ins.text;
    if (question.size() > kTail.size() &&
        std::string_view(question).substr(question.size() - kTail.size()) == kTail) {
        question.resize(question.size() - kTail.size());
    }
    return question + " " + kCotStructureSuffix;
}

inline std::string instruction_line_for(const Instruction& ins, PromptMethod method) {
    return method == PromptMethod::Cot ? cot_instruction_text(ins) : ins.text;
}

// "A:" primes a bare verdict; "A: 1." primes the numbered structure that
// cot and sbs answers follow.
inline std::string priming_suffix(PromptMethod method) {
    return method == PromptMethod::Vanilla ? "A:" : "A: 1.";
}

struct SegmentedSummary {
    std::vector<std::string> sentences;
    std::string original;
};

namespace detail {

inline const std::unordered_set<std::string>& abbreviation_guards() {
    static const std::unordered_set<std::string> guards = {
        "mr.",  "mrs.", "ms.",  "dr.",   "prof.", "sr.",   "jr.",  "st.",  "mt.",
        "vs.",  "etc.", "e.g.", "i.e.",  "u.s.",  "u.k.",  "u.n.", "a.m.", "p.m.",
        "jan.", "feb.", "mar.", "apr.",  "jun.",  "jul.",  "aug.", "sep.", "sept.",
        "oct.", "nov.", "dec.", "inc.",  "ltd.",  "co.",   "corp.", "gen.", "sen.",
        "rep.", "gov.", "capt.", "lt.",  "col.",  "sgt.",  "dept.", "fig.", "approx.",
    };
    return guards;
}

// The non-whitespace run ending at (and including) position i, with any
// leading punctuation stripped, lowercased. "U.S." -> "u.s.",
// a free-standing " . " -> ".".
inline std::string attached_token(std::string_view s, std::size_t i) {
    std::size_t b = i;
    while (b > 0 && !is_space(s[b - 1])) --b;
    while (b < i && !is_alpha(s[b]) && !(std::isdigit(static_cast<unsigned char>(s[b])) != 0)) ++b;
    return lowercase(s.substr(b, i - b + 1));
}

inline bool is_single_initial(std::string_view tok) {
    return tok.size() == 2 && is_alpha(tok[0]) && tok[1] == '.';
}

}  // namespace detail

// Deterministic sentence splitter: breaks after '.', '!' or '?' followed
// by whitespace or end of string. A period does not end a sentence when
// its attached token is a known abbreviation or a single-letter initial;
// this keeps "u.s.-based" and spaced lowercase punctuation ("... . inoki")
// behaving like the benchmark summaries do.
inline SegmentedSummary segment_sentences(const std::string& summary) {
    if (detail::trim(summary).empty()) {
        throw Error(Errc::EmptyInput, "cannot segment a whitespace-only summary");
    }
    SegmentedSummary out;
    out.original = summary;

    std::size_t start = 0;
    const std::size_t n = summary.size();
    for (std::size_t i = 0; i < n; ++i) {
        char c = summary[i];
        if (c != '.' && c != '!' && c != '?') continue;
        bool at_boundary = (i + 1 == n) || detail::is_space(summary[i + 1]);
        if (!at_boundary) continue;
        if (c == '.') {
            std::string tok = detail::attached_token(summary, i);
            if (detail::abbreviation_guards().count(tok) > 0) continue;
            if (detail::is_single_initial(tok)) continue;
        }
        std::string sentence = detail::trim(std::string_view(summary).substr(start, i + 1 - start));
        if (!sentence.empty()) out.sentences.push_back(std::move(sentence));
        start = i + 1;
    }
    if (start < n) {
        std::string tail = detail::trim(std::string_view(summary).substr(start));
        if (!tail.empty()) out.sentences.push_back(std::move(tail));
    }
    if (out.sentences.empty()) {
        // non-whitespace input always yields at least the trimmed text
        out.sentences.push_back(detail::trim(summary));
    }
    return out;
}

// A labeled validation sample rendered as a demonstration block.
struct Exemplar {
    Sample sample;
    std::string rendered_answer;  // continuation after the priming suffix
};

struct ShotConfig {
    int n_shots = 0;
    std::vector<Exemplar> exemplars;
    std::uint64_t seed = 0;                     // selection (and base order) seed
    std::optional<std::uint64_t> order_seed;    // robustness-order shuffle, if applied
};

namespace detail {

// Deterministic Fisher-Yates; avoids std::shuffle's
// implementation-defined draws so fixtures stay portable.
template <typename Rng>
inline void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
    for (std::size_t i = idx.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(idx[i - 1], idx[j]);
    }
}

inline std::string yes_no(ConsistencyLabel l) {
    return l == ConsistencyLabel::Consistent ? "Yes" : "No";
}

// First document sentence sharing a content word (alphabetic, length >= 4)
// with the statement; falls back to the first document sentence. Stands in
// for the evidence step of chain-of-thought exemplars, where no human
// evidence text exists in the benchmarks.
inline std::string evidence_sentence(const std::string& document, const std::string& statement) {
    std::vector<std::string> doc_sentences;
    try {
        doc_sentences = segment_sentences(document).sentences;
    } catch (const Error&) {
        return normalize_whitespace(document);
    }
    auto content = alpha_tokens(statement);
    for (const std::string& sent : doc_sentences) {
        auto sent_tokens = alpha_token_set(sent);
        for (const std::string& tok : content) {
            if (tok.size() >= 4 && sent_tokens.count(tok) > 0) return sent;
        }
    }
    return doc_sentences.front();
}

}  // namespace detail

// Gold answer text appended after the priming suffix of an exemplar block.
inline std::string render_exemplar_answer(const Sample& sample, PromptMethod method) {
    const std::string verdict = detail::yes_no(sample.label);
    switch (method) {
        case PromptMethod::Vanilla:
            return verdict + ".";
        case PromptMethod::Cot:
            return detail::evidence_sentence(sample.document, sample.summary) + " 2. " + verdict +
                   ".";
        case PromptMethod::Sbs: {
            // Per-sentence gold is not annotated; every numbered slot
            // carries the summary-level verdict.
            auto seg = segment_sentences(sample.summary);
            std::string out = verdict + ".";
            for (std::size_t k = 2; k <= seg.sentences.size(); ++k) {
                out += " " + std::to_string(k) + ". " + verdict + ".";
            }
            return out;
        }
    }
    return verdict + ".";
}

inline void validate_shot_config(const ShotConfig& shots) {
    if (static_cast<std::size_t>(shots.n_shots) != shots.exemplars.size()) {
        throw Error(Errc::Config, "n_shots does not match the exemplar count");
    }
    for (const Exemplar& ex : shots.exemplars) {
        if (ex.sample.split != Split::Validation) {
            throw Error(Errc::Config, "exemplar '" + ex.sample.id + "' is not from the validation split");
        }
    }
    if (shots.n_shots == 2) {
        bool has_pos = false, has_neg = false;
        for (const Exemplar& ex : shots.exemplars) {
            (ex.sample.label == ConsistencyLabel::Consistent ? has_pos : has_neg) = true;
        }
        if (!has_pos || !has_neg) {
            throw Error(Errc::Config, "2-shot configuration needs one positive and one negative exemplar");
        }
    }
}

// Deterministic for a fixed seed; the same exemplars are reused for every
// test sample within a run. Balanced-alternating policy: ceil(n/2)
// positives and floor(n/2) negatives, interleaved starting with a
// negative (surplus positives trail for odd n).
inline std::vector<Exemplar> select_exemplars(const std::vector<Sample>& validation, int n_shots,
                                              std::uint64_t seed,
                                              PromptMethod method = PromptMethod::Vanilla) {
    if (n_shots < 0) throw Error(Errc::Config, "n_shots must be non-negative");
    if (n_shots == 0) return {};

    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < validation.size(); ++i) {
        if (validation[i].split != Split::Validation) {
            throw Error(Errc::Config, "exemplar pool contains a non-validation sample: '" +
                                          validation[i].id + "'");
        }
        (validation[i].label == ConsistencyLabel::Consistent ? pos : neg).push_back(i);
    }
    const std::size_t need_pos = static_cast<std::size_t>((n_shots + 1) / 2);
    const std::size_t need_neg = static_cast<std::size_t>(n_shots / 2);
    if (pos.size() < need_pos || neg.size() < need_neg) {
        throw Error(Errc::InsufficientExemplars,
                    "need " + std::to_string(need_pos) + " positive and " +
                        std::to_string(need_neg) + " negative validation samples, have " +
                        std::to_string(pos.size()) + "/" + std::to_string(neg.size()));
    }

    std::mt19937_64 rng(seed);
    detail::shuffle_indices(pos, rng);
    detail::shuffle_indices(neg, rng);

    std::vector<Exemplar> out;
    out.reserve(static_cast<std::size_t>(n_shots));
    std::size_t pi = 0, ni = 0;
    while (out.size() < static_cast<std::size_t>(n_shots)) {
        if (ni < need_neg) {
            out.push_back({validation[neg[ni++]], {}});
        }
        if (out.size() < static_cast<std::size_t>(n_shots) && pi < need_pos) {
            out.push_back({validation[pos[pi++]], {}});
        }
    }
    for (Exemplar& ex : out) ex.rendered_answer = render_exemplar_answer(ex.sample, method);
    return out;
}

// Robustness runs permute the shared exemplars without reselecting them.
inline std::vector<Exemplar> shuffle_exemplars(std::vector<Exemplar> exemplars,
                                               std::uint64_t order_seed) {
    std::vector<std::size_t> idx(exemplars.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::mt19937_64 rng(order_seed);
    detail::shuffle_indices(idx, rng);
    std::vector<Exemplar> out;
    out.reserve(exemplars.size());
    for (std::size_t i : idx) out.push_back(std::move(exemplars[i]));
    return out;
}

// Prompt fit: estimated tokens = whitespace-delimited words x 1.3, and the
// test document (then exemplar documents, oldest first) is head-truncated
// down to min_doc_words to fit token_budget.
struct PromptBudget {
    int token_budget = 4000;
    int min_doc_words = 32;
};

struct Prompt {
    PromptMethod method = PromptMethod::Vanilla;
    Instruction instruction;
    ShotConfig shots;
    std::string body;
    int statement_count = 1;

    // Structured view of the rendered test block, used by the simulated
    // judge and by tests; body is derived from these plus the exemplars.
    std::string document;
    std::vector<std::string> statements;
    bool truncated = false;
};

namespace detail {

struct BlockParts {
    std::string document;
    std::string instruction_line;
    std::vector<std::string> statements;  // already numbered for sbs
    std::string final_line;               // priming, plus answer for exemplars
};

inline std::string render_block(const BlockParts& b) {
    std::string out = b.document;
    out += "\n\n";
    out += b.instruction_line;
    for (const std::string& st : b.statements) {
        out += "\n\n";
        out += st;
    }
    out += "\n\n";
    out += b.final_line;
    return out;
}

inline std::vector<std::string> numbered(const std::vector<std::string>& statements) {
    std::vector<std::string> out;
    out.reserve(statements.size());
    for (std::size_t i = 0; i < statements.size(); ++i) {
        out.push_back(std::to_string(i + 1) + ". " + statements[i]);
    }
    return out;
}

inline std::vector<std::string> statements_for(const Sample& sample, PromptMethod method) {
    if (method == PromptMethod::Sbs) {
        auto seg = segment_sentences(sample.summary);
        return seg.sentences;
    }
    return {sample.summary};
}

}  // namespace detail

// Renders p = <document, instruction, statement(s)> with exemplar blocks
// prepended in ShotConfig order, blank lines between blocks. The test
// document appears exactly once, after all exemplar blocks, and the body
// ends with the method's priming suffix.
inline Prompt build_prompt(const Sample& sample, PromptMethod method,
                           const Instruction& instruction, const ShotConfig& shots,
                           const PromptBudget& budget = {}) {
    validate_instruction(instruction);
    validate_shot_config(shots);

    Prompt p;
    p.method = method;
    p.instruction = instruction;
    p.shots = shots;
    p.statements = detail::statements_for(sample, method);
    p.statement_count = static_cast<int>(p.statements.size());

    const std::string instruction_line = instruction_line_for(instruction, method);
    const std::string priming = priming_suffix(method);

    struct Doc {
        std::string text;
        std::size_t words;
        std::size_t min_words;
    };
    std::vector<Doc> docs;  // exemplar docs in shot order, then the test doc last

    std::vector<detail::BlockParts> blocks;
    for (const Exemplar& ex : shots.exemplars) {
        detail::BlockParts b;
        b.document = ex.sample.document;
        b.instruction_line = instruction_line;
        auto sts = detail::statements_for(ex.sample, method);
        b.statements = method == PromptMethod::Sbs ? detail::numbered(sts) : sts;
        std::string answer =
            ex.rendered_answer.empty() ? render_exemplar_answer(ex.sample, method) : ex.rendered_answer;
        b.final_line = priming + " " + answer;
        blocks.push_back(std::move(b));
    }
    {
        detail::BlockParts test;
        test.document = sample.document;
        test.instruction_line = instruction_line;
        test.statements =
            method == PromptMethod::Sbs ? detail::numbered(p.statements) : p.statements;
        test.final_line = priming;
        blocks.push_back(std::move(test));
    }

    // Budget arithmetic on word counts; ceil-free by comparing in tenths.
    const std::size_t min_words = static_cast<std::size_t>(std::max(budget.min_doc_words, 1));
    std::size_t fixed_words = 0;
    for (const detail::BlockParts& b : blocks) {
        fixed_words += detail::word_count(b.instruction_line);
        for (const std::string& st : b.statements) fixed_words += detail::word_count(st);
        fixed_words += detail::word_count(b.final_line);
    }
    for (const detail::BlockParts& b : blocks) {
        std::size_t w = detail::word_count(b.document);
        docs.push_back({b.document, w, std::min(w, min_words)});
    }

    // tokens ~= words * 1.3  =>  max words = floor(budget / 1.3)
    const std::size_t max_words =
        static_cast<std::size_t>((static_cast<long long>(budget.token_budget) * 10) / 13);
    std::size_t total_words = fixed_words;
    for (const Doc& d : docs) total_words += d.words;

    if (total_words > max_words) {
        std::size_t over = total_words - max_words;
        // test document first, then exemplar documents oldest-first
        std::vector<std::size_t> order;
        order.push_back(docs.size() - 1);
        for (std::size_t i = 0; i + 1 < docs.size(); ++i) order.push_back(i);
        for (std::size_t i : order) {
            if (over == 0) break;
            std::size_t reducible = docs[i].words - docs[i].min_words;
            std::size_t cut = std::min(over, reducible);
            if (cut > 0) {
                docs[i].words -= cut;
                docs[i].text = detail::head_words(docs[i].text, docs[i].words);
                over -= cut;
                p.truncated = true;
            }
        }
        if (over > 0) {
            throw Error(Errc::Budget, "prompt exceeds the token budget of " +
                                          std::to_string(budget.token_budget) +
                                          " even after document truncation");
        }
        for (std::size_t i = 0; i < blocks.size(); ++i) blocks[i].document = docs[i].text;
    }

    p.document = blocks.back().document;
    std::string body;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (i > 0) body += "\n\n";
        body += detail::render_block(blocks[i]);
    }
    p.body = std::move(body);
    return p;
}

enum class SbsMode { Batched, PerSentence };

inline const char* sbs_mode_code(SbsMode m) {
    return m == SbsMode::Batched ? "batched" : "per-sentence";
}

inline std::optional<SbsMode> sbs_mode_from_code(std::string_view code) {
    if (code == "batched") return SbsMode::Batched;
    if (code == "per-sentence") return SbsMode::PerSentence;
    return std::nullopt;
}

// Per-sentence alternative to the batched sbs call: one single-statement
// prompt per summary sentence. Exemplar blocks are reshaped to single
// statements too (their first sentence), so every block in the call has
// the same one-statement shape.
inline std::vector<Prompt> build_sbs_per_sentence_prompts(const Sample& sample,
                                                          const Instruction& instruction,
                                                          const ShotConfig& shots,
                                                          const PromptBudget& budget = {}) {
    auto seg = segment_sentences(sample.summary);
    ShotConfig single = shots;
    for (Exemplar& ex : single.exemplars) {
        auto ex_seg = segment_sentences(ex.sample.summary);
        ex.sample.summary = ex_seg.sentences.front();
        ex.rendered_answer = detail::yes_no(ex.sample.label) + ".";
    }
    std::vector<Prompt> out;
    out.reserve(seg.sentences.size());
    for (const std::string& sentence : seg.sentences) {
        Sample view = sample;
        view.summary = sentence;
        out.push_back(build_prompt(view, PromptMethod::Sbs, instruction, single, budget));
    }
    return out;
}

}  // namespace faitheval

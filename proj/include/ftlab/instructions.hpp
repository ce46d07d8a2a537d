#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ftlab/error.hpp"

namespace ftlab {

/// Default system prompt for the instruction dataset.
inline constexpr const char* kDefaultSystemPrompt =
    "investment research analyst chatbot that provides fundamental analysis of macro, market, "
    "sector, and equity";

enum class InstructionCategory { kPhilosophy, kMethodology, kFacts };

std::string instruction_category_name(InstructionCategory c);
InstructionCategory instruction_category_from_name(const std::string& name);

struct InstructionItem {
    InstructionCategory category = InstructionCategory::kFacts;
    std::string question;
    std::string answer;
    std::optional<std::string> system;  // per-item override
};

/// CSV (header category,question,answer[,system]) or JSON-lines with the
/// same fields, chosen by extension (.csv vs anything else).
std::vector<InstructionItem> read_instruction_items(const std::string& path);

struct BuildSummary {
    std::map<std::string, int> per_category;
    int total = 0;
    bool under_minimum = false;  // fewer than 10 examples
};

/// Writes one chat example per line:
/// {"messages":[{"role":"system",...},{"role":"user",...},{"role":"assistant",...}]}
/// UTF-8, LF endings, no trailing blank line. Items with empty fields are
/// a validation error naming the item index.
BuildSummary build_jsonl(const std::vector<InstructionItem>& items,
                         const std::string& default_system_prompt, const std::string& output_path);

struct Violation {
    int line = 0;
    std::string message;
};

struct ValidationReport {
    int line_count = 0;
    std::vector<Violation> violations;

    bool ok() const { return violations.empty(); }
};

/// Per-line checks: JSON well-formedness, UTF-8, exactly one leading
/// system message then alternating user/assistant (starting user, ending
/// assistant), non-empty contents, no blank lines.
ValidationReport validate_jsonl(const std::string& path);

}  // namespace ftlab

#include "ftlab/instructions.hpp"

#include <nlohmann/json.hpp>
#include <sstream>

#include "ftlab/tokenizer.hpp"
#include "ftlab/util.hpp"

namespace ftlab {

using json = nlohmann::json;

std::string instruction_category_name(InstructionCategory c) {
    switch (c) {
        case InstructionCategory::kPhilosophy: return "philosophy";
        case InstructionCategory::kMethodology: return "methodology";
        case InstructionCategory::kFacts: return "facts";
    }
    return "facts";
}

InstructionCategory instruction_category_from_name(const std::string& name) {
    if (name == "philosophy") return InstructionCategory::kPhilosophy;
    if (name == "methodology") return InstructionCategory::kMethodology;
    if (name == "facts") return InstructionCategory::kFacts;
    throw ParseError("unknown instruction category '" + name +
                     "' (expected philosophy, methodology or facts)");
}

std::vector<InstructionItem> read_instruction_items(const std::string& path) {
    std::vector<InstructionItem> items;
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv") {
        auto rows = read_csv_file(path);
        if (rows.empty() || rows[0].size() < 3 || rows[0][0] != "category" ||
            rows[0][1] != "question" || rows[0][2] != "answer")
            throw ParseError(
                "instruction CSV must start with header 'category,question,answer[,system]': " +
                path);
        bool has_system = rows[0].size() >= 4 && rows[0][3] == "system";
        for (std::size_t i = 1; i < rows.size(); ++i) {
            if (rows[i].size() < 3)
                throw ParseError(path + " row " + std::to_string(i + 1) + ": too few columns");
            InstructionItem item;
            item.category = instruction_category_from_name(rows[i][0]);
            item.question = rows[i][1];
            item.answer = rows[i][2];
            if (has_system && rows[i].size() >= 4 && !rows[i][3].empty())
                item.system = rows[i][3];
            items.push_back(std::move(item));
        }
    } else {
        std::istringstream in(read_text_file(path));
        std::string line;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (trim(line).empty()) continue;
            json j;
            try {
                j = json::parse(line);
            } catch (const json::exception& e) {
                throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
            }
            InstructionItem item;
            item.category = instruction_category_from_name(j.at("category").get<std::string>());
            item.question = j.at("question").get<std::string>();
            item.answer = j.at("answer").get<std::string>();
            if (j.contains("system")) item.system = j.at("system").get<std::string>();
            items.push_back(std::move(item));
        }
    }
    return items;
}

BuildSummary build_jsonl(const std::vector<InstructionItem>& items,
                         const std::string& default_system_prompt,
                         const std::string& output_path) {
    if (items.empty()) throw ContractError("build_jsonl: no instruction items");
    std::vector<std::string> problems;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (trim(items[i].question).empty())
            problems.push_back("item " + std::to_string(i + 1) + ": empty question");
        if (trim(items[i].answer).empty())
            problems.push_back("item " + std::to_string(i + 1) + ": empty answer");
    }
    if (!problems.empty()) {
        std::string msg = "invalid instruction items:";
        for (const std::string& p : problems) msg += "\n  " + p;
        throw ContractError(msg);
    }

    std::ostringstream out;
    BuildSummary summary;
    for (std::size_t i = 0; i < items.size(); ++i) {
        const InstructionItem& item = items[i];
        json example{{"messages",
                      json::array({json{{"role", "system"},
                                        {"content", item.system ? *item.system
                                                                : default_system_prompt}},
                                   json{{"role", "user"}, {"content", item.question}},
                                   json{{"role", "assistant"}, {"content", item.answer}}})}};
        if (i) out << '\n';
        out << example.dump();
        summary.per_category[instruction_category_name(item.category)]++;
        ++summary.total;
    }
    out << '\n';  // final LF, no trailing blank line
    write_text_file(output_path, out.str());
    summary.under_minimum = summary.total < 10;
    return summary;
}

ValidationReport validate_jsonl(const std::string& path) {
    std::string content = read_text_file(path);
    ValidationReport report;
    std::istringstream in(content);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        ++report.line_count;
        auto fail = [&](const std::string& msg) { report.violations.push_back({line_no, msg}); };
        if (trim(line).empty()) {
            fail("blank line");
            continue;
        }
        if (std::size_t off = utf8_invalid_offset(line); off != line.size()) {
            fail("invalid UTF-8 at byte " + std::to_string(off));
            continue;
        }
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            fail(std::string("malformed JSON: ") + e.what());
            continue;
        }
        if (!j.is_object() || !j.contains("messages") || !j["messages"].is_array()) {
            fail("missing messages array");
            continue;
        }
        const json& msgs = j["messages"];
        bool roles_ok = true;
        for (std::size_t i = 0; i < msgs.size() && roles_ok; ++i) {
            if (!msgs[i].is_object() || !msgs[i].contains("role") ||
                !msgs[i].contains("content") || !msgs[i]["content"].is_string()) {
                fail("message " + std::to_string(i) + " missing role or content");
                roles_ok = false;
            } else if (msgs[i]["content"].get<std::string>().empty()) {
                fail("message " + std::to_string(i) + " has empty content");
                roles_ok = false;
            }
        }
        if (!roles_ok) continue;
        // one system first, then user/assistant alternating; ends on assistant
        if (msgs.empty() || msgs[0]["role"] != "system") {
            fail("first message must have role system");
            continue;
        }
        if (msgs.size() < 3 || (msgs.size() - 1) % 2 != 0) {
            fail("expected system followed by user/assistant pairs");
            continue;
        }
        bool order_ok = true;
        for (std::size_t i = 1; i < msgs.size(); ++i) {
            std::string expected = (i % 2 == 1) ? "user" : "assistant";
            if (msgs[i]["role"] != expected) {
                fail("message " + std::to_string(i) + " must have role " + expected + ", found " +
                     msgs[i]["role"].get<std::string>());
                order_ok = false;
                break;
            }
        }
        (void)order_ok;
    }
    return report;
}

}  // namespace ftlab

#include "ftlab/evalharness.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <httplib.h>

#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <thread>

namespace ftlab {

using json = nlohmann::json;

// --- backends --------------------------------------------------------------

LocalBackend::LocalBackend(std::string id, TransformerWeights weights,
                           std::optional<AdapterSet> adapters)
    : id_(std::move(id)), weights_(std::move(weights)), adapters_(std::move(adapters)) {}

std::vector<double> LocalBackend::continuation_log_probs(const std::vector<int>& prefix,
                                                         const std::vector<int>& continuation) {
    if (prefix.empty()) throw ContractError("continuation_log_probs: empty prefix");
    if (continuation.empty()) return {};
    std::vector<int> all(prefix);
    all.insert(all.end(), continuation.begin(), continuation.end());
    if (static_cast<int>(all.size()) > weights_.config.context_length + 1)
        throw ContractError("continuation_log_probs: sequence overflows context");
    // logits row i predicts all[i + 1]
    std::span<const int> fed(all.data(), all.size() - 1);
    const AdapterSet* ad = adapters_ ? &*adapters_ : nullptr;
    Tensor logits = forward(weights_, fed, ad);
    const int v = weights_.config.vocab_size;
    auto lv = logits.values();
    std::vector<double> out;
    out.reserve(continuation.size());
    for (std::size_t i = 0; i < continuation.size(); ++i) {
        std::size_t row = prefix.size() - 1 + i;
        const float* r = lv.data() + row * static_cast<std::size_t>(v);
        float mx = *std::max_element(r, r + v);
        double denom = 0.0;
        for (int j = 0; j < v; ++j) denom += std::exp(static_cast<double>(r[j]) - mx);
        int target = continuation[i];
        if (target < 0 || target >= v)
            throw IndexError("continuation token " + std::to_string(target) +
                             " outside vocabulary of size " + std::to_string(v));
        out.push_back(static_cast<double>(r[target]) - mx - std::log(denom));
    }
    return out;
}

std::string LocalBackend::generate_text(const std::string& prompt,
                                        const GenerationParams& params) {
    const AdapterSet* ad = adapters_ ? &*adapters_ : nullptr;
    return generate(weights_, prompt, params, ad);
}

RemoteChatBackend::RemoteChatBackend(std::string id, std::string base_url, std::string path,
                                     std::string model, int timeout_seconds, int max_retries,
                                     int retry_base_ms)
    : id_(std::move(id)),
      base_url_(std::move(base_url)),
      path_(std::move(path)),
      model_(std::move(model)),
      timeout_seconds_(timeout_seconds),
      max_retries_(max_retries),
      retry_base_ms_(retry_base_ms) {}

std::vector<double> RemoteChatBackend::continuation_log_probs(const std::vector<int>&,
                                                              const std::vector<int>&) {
    throw UnsupportedCapabilityError("backend '" + id_ +
                                     "' is a chat endpoint; token log-probs are unavailable");
}

std::string RemoteChatBackend::generate_text(const std::string& prompt,
                                             const GenerationParams& params) {
    httplib::Client client(base_url_);
    client.set_connection_timeout(timeout_seconds_);
    client.set_read_timeout(timeout_seconds_);
    httplib::Headers headers;
    if (const char* token = std::getenv("CHAT_API_TOKEN"))
        headers.emplace("Authorization", std::string("Bearer ") + token);

    json body{{"model", model_},
              {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})},
              {"temperature", params.temperature}};
    std::string payload = body.dump();
    std::string last_error;
    for (int attempt = 0; attempt <= max_retries_; ++attempt) {
        if (attempt > 0)
            std::this_thread::sleep_for(
                std::chrono::milliseconds(retry_base_ms_ * (1 << (attempt - 1))));
        auto res = client.Post(path_, headers, payload, "application/json");
        if (!res) {
            last_error = "transport failure";
            continue;
        }
        if (res->status != 200) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        try {
            json reply = json::parse(res->body);
            return reply.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception& e) {
            throw ParseError("chat backend '" + id_ + "' returned malformed JSON: " + e.what());
        }
    }
    throw IoError("chat backend '" + id_ + "' unreachable after " + std::to_string(max_retries_) +
                  " retries (" + last_error + ")");
}

// --- reports ---------------------------------------------------------------

std::string current_timestamp_iso() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

std::string EvalReport::to_json() const {
    json j{{"metric", metric},
           {"values", values},
           {"dataset_id", dataset_id},
           {"backend_id", backend_id},
           {"sample_count", sample_count},
           {"timestamp", timestamp},
           {"config", config_snapshot.empty() ? json(nullptr) : json::parse(config_snapshot)}};
    return j.dump(2);
}

// --- perplexity ------------------------------------------------------------

EvalReport perplexity(ModelBackend& backend, const std::vector<TokenChunk>& chunks,
                      const std::string& dataset_id) {
    if (chunks.empty()) throw ContractError("perplexity: no chunks");
    if (!backend.supports_log_probs())
        throw UnsupportedCapabilityError("perplexity needs token log-probs; backend '" +
                                         backend.id() + "' cannot provide them");
    double nll_sum = 0.0;
    long positions = 0;
    for (const TokenChunk& chunk : chunks) {
        if (chunk.ids.size() < 2) throw ContractError("perplexity: chunk shorter than 2 tokens");
        std::vector<int> prefix{chunk.ids[0]};
        std::vector<int> cont(chunk.ids.begin() + 1, chunk.ids.end());
        for (double lp : backend.continuation_log_probs(prefix, cont)) {
            nll_sum -= lp;
            ++positions;
        }
    }
    double mean_nll = nll_sum / static_cast<double>(positions);
    EvalReport report;
    report.metric = "perplexity";
    report.values["mean_nll"] = mean_nll;
    report.values["perplexity"] = std::exp(mean_nll);
    report.dataset_id = dataset_id;
    report.backend_id = backend.id();
    report.sample_count = static_cast<int>(chunks.size());
    report.timestamp = current_timestamp_iso();
    return report;
}

// --- ROUGE -----------------------------------------------------------------

std::vector<std::string> rouge_tokens(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        unsigned char u = static_cast<unsigned char>(c);
        if (std::isalnum(u)) {
            cur.push_back(static_cast<char>(std::tolower(u)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

namespace {

std::map<std::vector<std::string>, int> ngram_counts(const std::vector<std::string>& tokens,
                                                     int n) {
    std::map<std::vector<std::string>, int> counts;
    if (static_cast<int>(tokens.size()) < n) return counts;
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i)
        counts[{tokens.begin() + static_cast<std::ptrdiff_t>(i),
                tokens.begin() + static_cast<std::ptrdiff_t>(i) + n}]++;
    return counts;
}

RougeScore make_score(double overlap, double cand_total, double ref_total) {
    RougeScore s;
    s.precision = cand_total > 0 ? overlap / cand_total : 0.0;
    s.recall = ref_total > 0 ? overlap / ref_total : 0.0;
    s.f1 = (s.precision + s.recall) > 0
               ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
               : 0.0;
    return s;
}

}  // namespace

RougeScore rouge_n(const std::string& candidate, const std::string& reference, int n) {
    if (n < 1) throw ContractError("rouge_n: n must be >= 1");
    auto cand = ngram_counts(rouge_tokens(candidate), n);
    auto ref = ngram_counts(rouge_tokens(reference), n);
    double overlap = 0.0, cand_total = 0.0, ref_total = 0.0;
    for (const auto& [gram, count] : cand) cand_total += count;
    for (const auto& [gram, count] : ref) ref_total += count;
    for (const auto& [gram, count] : cand) {
        auto it = ref.find(gram);
        if (it != ref.end()) overlap += std::min(count, it->second);  // clipped
    }
    return make_score(overlap, cand_total, ref_total);
}

RougeScore rouge_l(const std::string& candidate, const std::string& reference) {
    auto a = rouge_tokens(candidate);
    auto b = rouge_tokens(reference);
    std::vector<std::vector<int>> dp(a.size() + 1, std::vector<int>(b.size() + 1, 0));
    for (std::size_t i = 1; i <= a.size(); ++i)
        for (std::size_t j = 1; j <= b.size(); ++j)
            dp[i][j] = a[i - 1] == b[j - 1] ? dp[i - 1][j - 1] + 1
                                            : std::max(dp[i - 1][j], dp[i][j - 1]);
    double lcs = dp[a.size()][b.size()];
    return make_score(lcs, static_cast<double>(a.size()), static_cast<double>(b.size()));
}

// --- summarization ---------------------------------------------------------

std::vector<SummarizationItem> read_summarization_jsonl(const std::string& path) {
    std::istringstream in(read_text_file(path));
    std::vector<SummarizationItem> items;
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
        SummarizationItem item;
        item.id = j.value("id", std::to_string(line_no));
        item.input = j.at("input").get<std::string>();
        item.query = j.value("query", "");
        item.reference = j.at("reference").get<std::string>();
        if (j.contains("candidate")) item.candidate = j.at("candidate").get<std::string>();
        items.push_back(std::move(item));
    }
    return items;
}

namespace {

std::string build_summary_prompt(const SummarizationItem& item, int max_tokens) {
    ByteTokenizer tok;
    std::string head = item.query.empty() ? "" : item.query + "\n";
    // keep the query and the tail of the input
    long budget = max_tokens - static_cast<long>(tok.encode(head).size());
    if (budget <= 0) return head;  // degenerate: query alone fills the context
    std::string input = item.input;
    if (static_cast<long>(input.size()) > budget) {
        input = input.substr(input.size() - static_cast<std::size_t>(budget));
        // avoid starting mid-UTF-8-sequence after the byte-level cut
        while (!input.empty() && (static_cast<unsigned char>(input.front()) & 0xC0) == 0x80)
            input.erase(input.begin());
    }
    return head + input;
}

}  // namespace

EvalReport summarization_eval(ModelBackend& backend, const std::vector<SummarizationItem>& items,
                              const GenerationParams& params, const std::string& dataset_id) {
    if (items.empty()) throw ContractError("summarization_eval: no items");
    double r1 = 0.0, r2 = 0.0, rl = 0.0;
    int completed = 0, failed = 0;
    const int prompt_budget = std::max(1, backend.max_prompt_tokens() - 1);
    for (const SummarizationItem& item : items) {
        std::string candidate;
        if (item.candidate) {
            candidate = *item.candidate;
        } else {
            try {
                std::string prompt = build_summary_prompt(item, prompt_budget);
                std::string full = backend.generate_text(prompt, params);
                candidate = full.substr(std::min(full.size(), prompt.size()));
            } catch (const Error& e) {
                std::cerr << "warning: generation failed for item " << item.id << ": " << e.what()
                          << "\n";
                ++failed;
                continue;
            }
        }
        r1 += rouge_n(candidate, item.reference, 1).f1;
        r2 += rouge_n(candidate, item.reference, 2).f1;
        rl += rouge_l(candidate, item.reference).f1;
        ++completed;
    }
    if (completed == 0) throw IoError("summarization_eval: every item failed");
    EvalReport report;
    report.metric = "rouge";
    report.values["rouge1_f1"] = r1 / completed;
    report.values["rouge2_f1"] = r2 / completed;
    report.values["rougeL_f1"] = rl / completed;
    report.values["completed"] = completed;
    report.values["failed"] = failed;
    report.dataset_id = dataset_id;
    report.backend_id = backend.id();
    report.sample_count = static_cast<int>(items.size());
    report.timestamp = current_timestamp_iso();
    return report;
}

// --- multiple choice -------------------------------------------------------

std::vector<McItem> read_mc_jsonl(const std::string& path) {
    std::istringstream in(read_text_file(path));
    std::vector<McItem> items;
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
        McItem item;
        item.id = j.value("id", std::to_string(line_no));
        item.question = j.at("question").get<std::string>();
        item.choices = j.at("choices").get<std::vector<std::string>>();
        item.gold = j.at("gold").get<int>();
        if (item.choices.size() < 2)
            throw ParseError(path + ":" + std::to_string(line_no) + ": need at least 2 choices");
        if (item.gold < 0 || item.gold >= static_cast<int>(item.choices.size()))
            throw ParseError(path + ":" + std::to_string(line_no) + ": gold index out of range");
        items.push_back(std::move(item));
    }
    return items;
}

int mc_predict(ModelBackend& backend, const McItem& item, McNormalization norm) {
    ByteTokenizer tok;
    std::vector<int> prefix;
    prefix.push_back(ByteTokenizer::kBos);
    {
        std::vector<int> q = tok.encode(item.question);
        prefix.insert(prefix.end(), q.begin(), q.end());
    }
    int best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < item.choices.size(); ++c) {
        std::vector<int> cont = tok.encode(" " + item.choices[c]);
        std::vector<double> lps = backend.continuation_log_probs(prefix, cont);
        double score = 0.0;
        for (double lp : lps) score += lp;
        if (norm == McNormalization::kPerToken && !lps.empty())
            score /= static_cast<double>(lps.size());
        if (score > best_score) {  // strict: ties keep the lowest index
            best_score = score;
            best = static_cast<int>(c);
        }
    }
    return best;
}

EvalReport mc_accuracy(ModelBackend& backend, const std::vector<McItem>& items,
                       const std::string& dataset_id) {
    if (items.empty()) throw ContractError("mc_accuracy: no items");
    if (!backend.supports_log_probs())
        throw UnsupportedCapabilityError("mc_accuracy needs token log-probs; backend '" +
                                         backend.id() + "' cannot provide them");
    int correct_sum = 0, correct_per_token = 0;
    for (const McItem& item : items) {
        if (mc_predict(backend, item, McNormalization::kNone) == item.gold) ++correct_sum;
        if (mc_predict(backend, item, McNormalization::kPerToken) == item.gold)
            ++correct_per_token;
    }
    EvalReport report;
    report.metric = "mc_accuracy";
    report.values["accuracy_sum"] = static_cast<double>(correct_sum) / items.size();
    report.values["accuracy_per_token"] = static_cast<double>(correct_per_token) / items.size();
    report.dataset_id = dataset_id;
    report.backend_id = backend.id();
    report.sample_count = static_cast<int>(items.size());
    report.timestamp = current_timestamp_iso();
    return report;
}

// --- human preference aggregation ------------------------------------------

std::vector<PreferenceVote> read_votes_csv(const std::string& path) {
    auto rows = read_csv_file(path);
    if (rows.empty() || rows[0].size() < 3 || rows[0][0] != "evaluator_id" ||
        rows[0][1] != "question_id" || rows[0][2] != "model_id")
        throw ParseError("votes CSV must start with header 'evaluator_id,question_id,model_id': " +
                         path);
    std::vector<PreferenceVote> votes;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() < 2)
            throw ParseError(path + " row " + std::to_string(i + 1) + ": too few columns");
        PreferenceVote v;
        v.evaluator_id = rows[i][0];
        v.question_id = rows[i][1];
        v.model_id = rows[i].size() >= 3 ? rows[i][2] : "";
        votes.push_back(std::move(v));
    }
    return votes;
}

PreferenceResult aggregate_preferences(const std::vector<PreferenceVote>& votes,
                                       const std::vector<std::string>& models,
                                       const std::vector<std::string>& questions) {
    std::set<std::string> model_set(models.begin(), models.end());
    std::set<std::string> question_set(questions.begin(), questions.end());
    std::set<std::pair<std::string, std::string>> seen;
    std::vector<std::string> problems;
    for (std::size_t i = 0; i < votes.size(); ++i) {
        const PreferenceVote& v = votes[i];
        std::string row = "row " + std::to_string(i + 1);
        if (!v.model_id.empty() && !model_set.count(v.model_id))
            problems.push_back(row + ": unknown model '" + v.model_id + "'");
        if (!question_set.empty() && !question_set.count(v.question_id))
            problems.push_back(row + ": unknown question '" + v.question_id + "'");
        if (!seen.insert({v.evaluator_id, v.question_id}).second)
            problems.push_back(row + ": duplicate vote by '" + v.evaluator_id +
                               "' on question '" + v.question_id + "'");
    }
    if (!problems.empty()) {
        std::string msg = "invalid votes:";
        for (const std::string& p : problems) msg += "\n  " + p;
        throw ContractError(msg);
    }
    PreferenceResult result;
    for (const std::string& m : models) result.model_scores[m] = 0;
    for (const PreferenceVote& v : votes) {
        ++result.total_votes;
        if (v.model_id.empty()) {
            ++result.abstentions;
        } else {
            result.model_scores[v.model_id]++;
            result.per_question[v.question_id][v.model_id]++;
        }
    }
    return result;
}

// --- backend comparison ----------------------------------------------------

std::vector<CompareRow> compare_backends(const std::vector<ModelBackend*>& backends,
                                         const CompareSuite& suite) {
    if (backends.size() < 2) throw ContractError("compare_backends: need at least 2 backends");
    std::vector<CompareRow> rows;
    auto run = [&rows](ModelBackend& backend, const std::string& metric,
                       const std::function<EvalReport()>& fn) {
        CompareRow row;
        row.backend_id = backend.id();
        row.metric = metric;
        try {
            EvalReport r = fn();
            row.status = "ok";
            row.values = r.values;
        } catch (const UnsupportedCapabilityError&) {
            row.status = "SKIPPED";
        } catch (const Error& e) {
            row.status = std::string("error: ") + e.what();
        }
        rows.push_back(std::move(row));
    };
    for (ModelBackend* b : backends) {
        if (suite.ppl_chunks)
            run(*b, "perplexity", [&] { return perplexity(*b, *suite.ppl_chunks, suite.dataset_id); });
        if (suite.summarization_items)
            run(*b, "rouge", [&] {
                return summarization_eval(*b, *suite.summarization_items, suite.generation,
                                          suite.dataset_id);
            });
        if (suite.mc_items)
            run(*b, "mc_accuracy", [&] { return mc_accuracy(*b, *suite.mc_items, suite.dataset_id); });
    }
    return rows;
}

std::string compare_rows_to_json(const std::vector<CompareRow>& rows) {
    json out = json::array();
    for (const CompareRow& r : rows)
        out.push_back(json{{"backend", r.backend_id},
                           {"metric", r.metric},
                           {"status", r.status},
                           {"values", r.values}});
    return out.dump(2);
}

}  // namespace ftlab

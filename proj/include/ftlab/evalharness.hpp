#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ftlab/corpus.hpp"
#include "ftlab/model.hpp"

namespace ftlab {

/// Raised when a metric needs a capability the backend lacks (e.g.
/// token-level log-probs from a chat endpoint).
struct UnsupportedCapabilityError : Error {
    using Error::Error;
};

/// Scoring/generation surface shared by local checkpoints and remote
/// chat endpoints. Remote backends generate text only; probability
/// metrics must be skipped for them.
class ModelBackend {
public:
    virtual ~ModelBackend() = default;
    virtual std::string id() const = 0;
    virtual bool supports_log_probs() const = 0;
    /// Per-token log p(continuation[i] | prefix, continuation[<i]).
    virtual std::vector<double> continuation_log_probs(const std::vector<int>& prefix,
                                                       const std::vector<int>& continuation) = 0;
    virtual std::string generate_text(const std::string& prompt,
                                      const GenerationParams& params) = 0;
    /// Longest prompt (in tokens) the backend accepts.
    virtual int max_prompt_tokens() const = 0;
};

class LocalBackend : public ModelBackend {
public:
    LocalBackend(std::string id, TransformerWeights weights,
                 std::optional<AdapterSet> adapters = std::nullopt);

    std::string id() const override { return id_; }
    bool supports_log_probs() const override { return true; }
    std::vector<double> continuation_log_probs(const std::vector<int>& prefix,
                                               const std::vector<int>& continuation) override;
    std::string generate_text(const std::string& prompt, const GenerationParams& params) override;
    int max_prompt_tokens() const override { return weights_.config.context_length - 1; }

    const TransformerWeights& weights() const { return weights_; }

private:
    std::string id_;
    TransformerWeights weights_;
    std::optional<AdapterSet> adapters_;
};

/// Chat-completion wire contract: POST <url> with
/// {model, messages:[{role, content}...], temperature}; the reply text is
/// choices[0].message.content. Bearer token from CHAT_API_TOKEN.
class RemoteChatBackend : public ModelBackend {
public:
    RemoteChatBackend(std::string id, std::string base_url, std::string path, std::string model,
                      int timeout_seconds = 60, int max_retries = 3, int retry_base_ms = 200);

    std::string id() const override { return id_; }
    bool supports_log_probs() const override { return false; }
    std::vector<double> continuation_log_probs(const std::vector<int>&,
                                               const std::vector<int>&) override;
    std::string generate_text(const std::string& prompt, const GenerationParams& params) override;
    int max_prompt_tokens() const override { return 1 << 20; }

private:
    std::string id_, base_url_, path_, model_;
    int timeout_seconds_, max_retries_, retry_base_ms_;
};

struct EvalReport {
    std::string metric;
    std::map<std::string, double> values;
    std::string dataset_id;
    std::string backend_id;
    int sample_count = 0;
    std::string timestamp;        // ISO-8601; empty when timestamps are suppressed
    std::string config_snapshot;  // JSON

    std::string to_json() const;
};

std::string current_timestamp_iso();

/// exp of the corpus-level mean NLL over every predicted position (not a
/// mean of per-chunk perplexities). Values: "perplexity" and "mean_nll".
EvalReport perplexity(ModelBackend& backend, const std::vector<TokenChunk>& chunks,
                      const std::string& dataset_id = "");

struct RougeScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Shared normalization: lowercase, strip punctuation, whitespace split.
std::vector<std::string> rouge_tokens(const std::string& text);
RougeScore rouge_n(const std::string& candidate, const std::string& reference, int n);
RougeScore rouge_l(const std::string& candidate, const std::string& reference);

struct SummarizationItem {
    std::string id;
    std::string input;
    std::string query;      // optional, empty when absent
    std::string reference;
    std::optional<std::string> candidate;
};

std::vector<SummarizationItem> read_summarization_jsonl(const std::string& path);

/// Generates candidates where absent (prompt = query + input, truncated
/// keeping the query and the input tail), then reports corpus-mean
/// rouge1/2/L f1. Per-item generation failures are recorded, not fatal;
/// "completed" carries the count that scored.
EvalReport summarization_eval(ModelBackend& backend, const std::vector<SummarizationItem>& items,
                              const GenerationParams& params, const std::string& dataset_id = "");

struct McItem {
    std::string id;
    std::string question;
    std::vector<std::string> choices;
    int gold = 0;
};

std::vector<McItem> read_mc_jsonl(const std::string& path);

enum class McNormalization { kNone, kPerToken };

/// Choice scored by summed conditional log-likelihood of its tokens
/// given the question; ties break toward the lowest choice index. Both
/// normalizations are reported ("accuracy_sum", "accuracy_per_token").
EvalReport mc_accuracy(ModelBackend& backend, const std::vector<McItem>& items,
                       const std::string& dataset_id = "");

/// Raw per-item machinery, exposed for oracle-style tests.
int mc_predict(ModelBackend& backend, const McItem& item, McNormalization norm);

struct PreferenceVote {
    std::string evaluator_id;
    std::string question_id;
    std::string model_id;  // empty = NONE ("all answers are not helpful")
};

std::vector<PreferenceVote> read_votes_csv(const std::string& path);

struct PreferenceResult {
    std::map<std::string, int> model_scores;
    std::map<std::string, std::map<std::string, int>> per_question;  // question -> model -> count
    int abstentions = 0;
    int total_votes = 0;
};

/// score(m) = number of votes choosing m; NONE counts as an abstention.
/// Duplicate (evaluator, question) pairs and unknown ids are validation
/// errors listing the offending rows.
PreferenceResult aggregate_preferences(const std::vector<PreferenceVote>& votes,
                                       const std::vector<std::string>& models,
                                       const std::vector<std::string>& questions);

struct CompareSuite {
    std::optional<std::vector<TokenChunk>> ppl_chunks;
    std::optional<std::vector<SummarizationItem>> summarization_items;
    std::optional<std::vector<McItem>> mc_items;
    GenerationParams generation;
    std::string dataset_id;
};

struct CompareRow {
    std::string backend_id;
    std::string metric;
    std::string status;  // "ok", "SKIPPED", "error: ..."
    std::map<std::string, double> values;
};

/// Runs every applicable metric per backend; capability mismatches are
/// marked SKIPPED rather than failing the run.
std::vector<CompareRow> compare_backends(const std::vector<ModelBackend*>& backends,
                                         const CompareSuite& suite);

std::string compare_rows_to_json(const std::vector<CompareRow>& rows);

}  // namespace ftlab

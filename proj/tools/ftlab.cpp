// ftlab command-line entry point: one subcommand per pipeline stage.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <set>
#include <sstream>

#include "ftlab/corpus.hpp"
#include "ftlab/evalharness.hpp"
#include "ftlab/instructions.hpp"
#include "ftlab/labels.hpp"
#include "ftlab/model.hpp"
#include "ftlab/training.hpp"

using json = nlohmann::json;
using namespace ftlab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;
constexpr int kExitUsage = 64;

struct CommonOpts {
    unsigned seed = 0;
    int threads = 0;  // 0 = library default
    bool no_timestamps = false;
};

struct ModelOpts {
    std::string checkpoint;  // load when set, else init fresh
    int dim = 64;
    int layers = 2;
    int heads = 4;
    int mlp_hidden = 256;
    int context = 512;
};

void add_model_flags(CLI::App* cmd, ModelOpts& m) {
    cmd->add_option("--checkpoint", m.checkpoint, "Model checkpoint (.ftlm) to load");
    cmd->add_option("--dim", m.dim, "Model width when initializing fresh");
    cmd->add_option("--layers", m.layers, "Layer count when initializing fresh");
    cmd->add_option("--heads", m.heads, "Attention heads when initializing fresh");
    cmd->add_option("--mlp-hidden", m.mlp_hidden, "MLP hidden width when initializing fresh");
    cmd->add_option("--context", m.context, "Context length when initializing fresh");
}

TransformerWeights resolve_model(const ModelOpts& m, unsigned seed) {
    if (!m.checkpoint.empty()) return load_checkpoint(m.checkpoint);
    TransformerConfig cfg;
    cfg.model_dim = m.dim;
    cfg.num_layers = m.layers;
    cfg.num_heads = m.heads;
    cfg.mlp_hidden = m.mlp_hidden;
    cfg.context_length = m.context;
    cfg.seed = seed;
    return init_model(cfg);
}

void write_report(const EvalReport& report_in, const std::string& path, bool no_timestamps) {
    EvalReport report = report_in;
    if (no_timestamps) report.timestamp.clear();
    std::cout << report.metric << ":";
    for (const auto& [k, v] : report.values) std::cout << "  " << k << "=" << v;
    std::cout << "\n";
    if (!path.empty()) write_text_file(path, report.to_json() + "\n");
}

void append_run_log(const std::string& path, const json& record) {
    if (path.empty()) return;
    std::ofstream out(path, std::ios::app);
    if (!out) throw IoError("cannot open run log: " + path);
    out << record.dump() << "\n";
}

GenerationParams make_generation_params(const std::string& strategy, int max_new_tokens,
                                        float temperature, int top_k, unsigned seed) {
    GenerationParams p;
    p.max_new_tokens = max_new_tokens;
    p.temperature = temperature;
    p.top_k = top_k;
    p.seed = seed;
    if (strategy == "greedy") p.strategy = DecodeStrategy::kGreedy;
    else if (strategy == "temperature") p.strategy = DecodeStrategy::kTemperature;
    else if (strategy == "top-k") p.strategy = DecodeStrategy::kTopK;
    else throw ContractError("unknown strategy '" + strategy + "'");
    p.validate();
    return p;
}

int run(int argc, char** argv) {
    CLI::App app{"Desk-scale language-model fine-tuning and evaluation lab"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Config file (TOML/INI); flags override file values");

    CommonOpts common;
    app.add_option("--seed", common.seed, "Seed for every random choice")->capture_default_str();
    app.add_option("--threads", common.threads, "Worker cap (0 = default)");
    app.add_flag("--no-timestamps", common.no_timestamps,
                 "Blank timestamp fields so outputs are byte-reproducible");

    // --- build-corpus ---
    auto* cmd_corpus = app.add_subcommand("build-corpus", "Load, concatenate, tokenize and chunk");
    std::string corpus_dir, corpus_out;
    int chunk_len = 512;
    cmd_corpus->add_option("--corpus-dir", corpus_dir, "Directory of UTF-8 .txt files")
        ->required();
    cmd_corpus->add_option("--chunk-len", chunk_len, "Tokens per chunk")->capture_default_str();
    cmd_corpus->add_option("--out", corpus_out, "Write chunk token ids as JSON");
    cmd_corpus->callback([&] {
        CorpusLoadReport load_report;
        auto articles = load_corpus(corpus_dir, &load_report);
        ByteTokenizer tok;
        auto chunks = build_chunks(articles, tok, chunk_len);
        std::size_t total_tokens = 0;
        for (const Article& a : articles) total_tokens += a.text.size() + 1;
        json summary{{"articles", articles.size()},
                     {"duplicates_dropped", load_report.duplicates_dropped},
                     {"total_tokens", total_tokens},
                     {"chunk_len", chunk_len},
                     {"chunks", chunks.size()},
                     {"tokens_dropped", total_tokens - chunks.size() * chunk_len}};
        std::cout << summary.dump(2) << "\n";
        if (!corpus_out.empty()) {
            json out{{"chunk_len", chunk_len}, {"chunks", json::array()}};
            for (const TokenChunk& c : chunks) out["chunks"].push_back(c.ids);
            write_text_file(corpus_out, out.dump() + "\n");
        }
    });

    // --- train-lm ---
    auto* cmd_train = app.add_subcommand("train-lm", "Unsupervised next-token fine-tuning");
    ModelOpts train_model;
    add_model_flags(cmd_train, train_model);
    std::string train_corpus_dir, adapter_out, model_out, history_out, runlog_out;
    TrainConfig train_cfg;
    int lora_rank = 4;
    float lora_alpha = 8.0f, lora_dropout = 0.05f;
    bool full_finetune = false;
    int train_chunk_len = 512;
    cmd_train->add_option("--corpus-dir", train_corpus_dir, "Training text directory")->required();
    cmd_train->add_option("--chunk-len", train_chunk_len, "Tokens per chunk")
        ->capture_default_str();
    cmd_train->add_option("--epochs", train_cfg.epochs)->capture_default_str();
    cmd_train->add_option("--batch-size", train_cfg.batch_size)->capture_default_str();
    cmd_train->add_option("--lr", train_cfg.learning_rate)->capture_default_str();
    cmd_train->add_option("--weight-decay", train_cfg.weight_decay)->capture_default_str();
    cmd_train->add_option("--grad-clip", train_cfg.grad_clip_norm)->capture_default_str();
    cmd_train->add_option("--checkpoint-every", train_cfg.checkpoint_every_n_epochs,
                          "Adapter checkpoint cadence in epochs (0 = never)");
    cmd_train->add_option("--checkpoint-dir", train_cfg.checkpoint_dir);
    cmd_train->add_option("--rank", lora_rank, "LoRA rank")->capture_default_str();
    cmd_train->add_option("--alpha", lora_alpha, "LoRA alpha")->capture_default_str();
    cmd_train->add_option("--dropout", lora_dropout, "LoRA input dropout")->capture_default_str();
    cmd_train->add_flag("--full", full_finetune,
                        "Train every base parameter instead of LoRA adapters");
    cmd_train->add_option("--adapter-out", adapter_out, "Where to save trained adapters (.ftla)");
    cmd_train->add_option("--model-out", model_out, "Where to save the final model (.ftlm)");
    cmd_train->add_option("--history-out", history_out, "Loss history CSV");
    cmd_train->add_option("--runlog-out", runlog_out, "Append JSON-lines run log");
    cmd_train->callback([&] {
        train_cfg.seed = common.seed;
        auto articles = load_corpus(train_corpus_dir);
        ByteTokenizer tok;
        auto chunks = build_chunks(articles, tok, train_chunk_len);
        TransformerWeights weights = resolve_model(train_model, common.seed);

        std::optional<AdapterSet> adapters;
        if (!full_finetune)
            adapters = attach_adapters(weights, lora_rank, lora_alpha,
                                       {LoraTarget::kQuery, LoraTarget::kValue}, common.seed,
                                       lora_dropout);
        TrainHistory history =
            train_lm(weights, adapters ? &*adapters : nullptr, chunks, train_cfg,
                     [](const EpochRecord& e) {
                         std::cout << "epoch " << e.epoch << "  loss " << e.mean_loss << "\n";
                     });
        if (adapters && !adapter_out.empty()) save_adapters(*adapters, adapter_out);
        if (!model_out.empty()) save_checkpoint(weights, model_out);
        if (!history_out.empty())
            write_text_file(history_out, history.to_csv(common.no_timestamps));
        json log{{"command", "train-lm"},
                 {"seed", common.seed},
                 {"epochs", train_cfg.epochs},
                 {"chunks", chunks.size()},
                 {"final_loss", history.epochs.back().mean_loss},
                 {"config", json::parse(weights.config.to_json())}};
        if (!common.no_timestamps) log["timestamp"] = current_timestamp_iso();
        append_run_log(runlog_out, log);
    });

    // --- build-labels ---
    auto* cmd_labels = app.add_subcommand("build-labels",
                                          "Join headlines to next-day returns and bucket them");
    std::string headlines_path, prices_path, price_url, labels_out, price_start, price_end;
    cmd_labels->add_option("--headlines", headlines_path, "Headlines CSV")->required();
    cmd_labels->add_option("--prices", prices_path, "Price fixture CSV (ticker,date,adj_close)");
    cmd_labels->add_option("--price-url", price_url, "HTTP daily-bar backend base URL");
    cmd_labels->add_option("--start", price_start, "Backend query start date");
    cmd_labels->add_option("--end", price_end, "Backend query end date");
    cmd_labels->add_option("--out", labels_out, "Labeled dataset CSV")->required();
    cmd_labels->callback([&] {
        auto headlines = read_headlines_csv(headlines_path);
        std::unique_ptr<PriceSource> source;
        if (!prices_path.empty()) {
            source = std::make_unique<CsvPriceSource>(CsvPriceSource::from_file(prices_path));
        } else if (!price_url.empty()) {
            if (price_start.empty() || price_end.empty())
                throw ContractError("--price-url requires --start and --end");
            source = std::make_unique<HttpPriceSource>(price_url, Date::from_iso(price_start),
                                                       Date::from_iso(price_end));
        } else {
            throw ContractError("one of --prices or --price-url is required");
        }
        LabeledDataset dataset = build_labeled_dataset(headlines, *source);
        write_labeled_csv(dataset, labels_out);
        json skips = json::object();
        for (const auto& [reason, count] : dataset.skips.counts)
            skips[skip_reason_name(reason)] = count;
        json summary{{"labeled", dataset.examples.size()}, {"skipped", skips}};
        std::cout << summary.dump(2) << "\n";
    });

    // --- train-cls ---
    auto* cmd_cls = app.add_subcommand("train-cls",
                                       "Supervised ordinal regression on labeled headlines");
    ModelOpts cls_model;
    add_model_flags(cmd_cls, cls_model);
    std::string labeled_path, cls_adapter_out, cls_history_out;
    TrainConfig cls_cfg;
    int cls_rank = 4;
    float cls_alpha = 8.0f, cls_dropout = 0.05f;
    cmd_cls->add_option("--labeled", labeled_path, "Labeled dataset CSV from build-labels")
        ->required();
    cmd_cls->add_option("--epochs", cls_cfg.epochs)->capture_default_str();
    cmd_cls->add_option("--batch-size", cls_cfg.batch_size)->capture_default_str();
    cmd_cls->add_option("--lr", cls_cfg.learning_rate)->capture_default_str();
    cmd_cls->add_option("--rank", cls_rank)->capture_default_str();
    cmd_cls->add_option("--alpha", cls_alpha)->capture_default_str();
    cmd_cls->add_option("--dropout", cls_dropout)->capture_default_str();
    cmd_cls->add_option("--adapter-out", cls_adapter_out,
                        "Adapters + regression head output (.ftla)");
    cmd_cls->add_option("--history-out", cls_history_out, "Loss history CSV");
    cmd_cls->callback([&] {
        cls_cfg.seed = common.seed;
        auto rows = read_csv_file(labeled_path);
        if (rows.size() < 2) throw ContractError("labeled dataset is empty: " + labeled_path);
        std::vector<LabeledHeadline> dataset;
        for (std::size_t i = 1; i < rows.size(); ++i) {
            if (rows[i].size() < 6)
                throw ParseError(labeled_path + " row " + std::to_string(i + 1) +
                                 ": expected 6 columns");
            LabeledHeadline ex;
            ex.headline.text = rows[i][0];
            ex.headline.ticker = rows[i][1];
            ex.headline.date = Date::from_iso(rows[i][2]);
            ex.return_pct = std::stod(rows[i][3]);
            ex.bucket = code_to_bucket(std::stoi(rows[i][5]));
            dataset.push_back(std::move(ex));
        }
        TransformerWeights weights = resolve_model(cls_model, common.seed);
        AdapterSet adapters =
            attach_adapters(weights, cls_rank, cls_alpha,
                            {LoraTarget::kQuery, LoraTarget::kValue}, common.seed, cls_dropout);
        RegressionHead head = RegressionHead::init(weights.config.model_dim, common.seed);
        TrainHistory history = train_classifier(
            weights, &adapters, head, dataset, cls_cfg, [](const EpochRecord& e) {
                std::cout << "epoch " << e.epoch << "  mse " << e.mean_loss << "\n";
            });
        if (!cls_adapter_out.empty())
            save_adapters(adapters, cls_adapter_out,
                          {{"head.weight", head.weight}, {"head.bias", head.bias}});
        if (!cls_history_out.empty())
            write_text_file(cls_history_out, history.to_csv(common.no_timestamps));
    });

    // --- generate ---
    auto* cmd_gen = app.add_subcommand("generate", "Sample text from a checkpoint");
    ModelOpts gen_model;
    add_model_flags(cmd_gen, gen_model);
    std::string gen_adapter, gen_prompt, gen_strategy = "greedy";
    int gen_max_new = 64, gen_top_k = 10;
    float gen_temperature = 1.0f;
    cmd_gen->add_option("--adapter", gen_adapter, "Adapter checkpoint (.ftla)");
    cmd_gen->add_option("--prompt", gen_prompt, "Prompt text")->required();
    cmd_gen->add_option("--max-new-tokens", gen_max_new)->capture_default_str();
    cmd_gen->add_option("--strategy", gen_strategy, "greedy | temperature | top-k")
        ->capture_default_str();
    cmd_gen->add_option("--temperature", gen_temperature)->capture_default_str();
    cmd_gen->add_option("--top-k", gen_top_k)->capture_default_str();
    cmd_gen->callback([&] {
        TransformerWeights weights = resolve_model(gen_model, common.seed);
        std::optional<AdapterSet> adapters;
        if (!gen_adapter.empty()) adapters = load_adapters(gen_adapter);
        GenerationParams params = make_generation_params(gen_strategy, gen_max_new,
                                                         gen_temperature, gen_top_k, common.seed);
        std::cout << generate(weights, gen_prompt, params, adapters ? &*adapters : nullptr)
                  << "\n";
    });

    // --- eval-ppl ---
    auto* cmd_ppl = app.add_subcommand("eval-ppl", "Perplexity on held-out chunks");
    ModelOpts ppl_model;
    add_model_flags(cmd_ppl, ppl_model);
    std::string ppl_adapter, ppl_corpus_dir, ppl_report;
    int ppl_chunk_len = 512;
    cmd_ppl->add_option("--adapter", ppl_adapter);
    cmd_ppl->add_option("--corpus-dir", ppl_corpus_dir)->required();
    cmd_ppl->add_option("--chunk-len", ppl_chunk_len)->capture_default_str();
    cmd_ppl->add_option("--report", ppl_report, "JSON report path");
    cmd_ppl->callback([&] {
        auto articles = load_corpus(ppl_corpus_dir);
        ByteTokenizer tok;
        auto chunks = build_chunks(articles, tok, ppl_chunk_len);
        TransformerWeights weights = resolve_model(ppl_model, common.seed);
        std::optional<AdapterSet> adapters;
        if (!ppl_adapter.empty()) adapters = load_adapters(ppl_adapter);
        LocalBackend backend("local", std::move(weights), std::move(adapters));
        write_report(perplexity(backend, chunks, ppl_corpus_dir), ppl_report,
                     common.no_timestamps);
    });

    // --- eval-rouge ---
    auto* cmd_rouge = app.add_subcommand("eval-rouge", "ROUGE-1/2/L summarization scoring");
    ModelOpts rouge_model;
    add_model_flags(cmd_rouge, rouge_model);
    std::string rouge_adapter, rouge_items, rouge_report, rouge_remote_url, rouge_remote_model;
    int rouge_max_new = 64;
    cmd_rouge->add_option("--adapter", rouge_adapter);
    cmd_rouge->add_option("--items", rouge_items, "Summarization items JSON-lines")->required();
    cmd_rouge->add_option("--remote-url", rouge_remote_url, "Use a chat endpoint instead");
    cmd_rouge->add_option("--remote-model", rouge_remote_model);
    cmd_rouge->add_option("--max-new-tokens", rouge_max_new)->capture_default_str();
    cmd_rouge->add_option("--report", rouge_report);
    cmd_rouge->callback([&] {
        auto items = read_summarization_jsonl(rouge_items);
        GenerationParams params;
        params.max_new_tokens = rouge_max_new;
        params.seed = common.seed;
        std::unique_ptr<ModelBackend> backend;
        if (!rouge_remote_url.empty()) {
            backend = std::make_unique<RemoteChatBackend>("remote", rouge_remote_url,
                                                          "/v1/chat/completions",
                                                          rouge_remote_model);
        } else {
            std::optional<AdapterSet> adapters;
            if (!rouge_adapter.empty()) adapters = load_adapters(rouge_adapter);
            backend = std::make_unique<LocalBackend>(
                "local", resolve_model(rouge_model, common.seed), std::move(adapters));
        }
        write_report(summarization_eval(*backend, items, params, rouge_items), rouge_report,
                     common.no_timestamps);
    });

    // --- eval-mc ---
    auto* cmd_mc = app.add_subcommand("eval-mc", "Multiple-choice accuracy by log-likelihood");
    ModelOpts mc_model;
    add_model_flags(cmd_mc, mc_model);
    std::string mc_adapter, mc_items_path, mc_report;
    cmd_mc->add_option("--adapter", mc_adapter);
    cmd_mc->add_option("--items", mc_items_path, "Multiple-choice items JSON-lines")->required();
    cmd_mc->add_option("--report", mc_report);
    cmd_mc->callback([&] {
        auto items = read_mc_jsonl(mc_items_path);
        std::optional<AdapterSet> adapters;
        if (!mc_adapter.empty()) adapters = load_adapters(mc_adapter);
        LocalBackend backend("local", resolve_model(mc_model, common.seed), std::move(adapters));
        write_report(mc_accuracy(backend, items, mc_items_path), mc_report, common.no_timestamps);
    });

    // --- eval-human ---
    auto* cmd_human = app.add_subcommand("eval-human", "Aggregate human preference votes");
    std::string votes_path, human_report;
    std::vector<std::string> human_models, human_questions;
    cmd_human->add_option("--votes", votes_path, "Votes CSV")->required();
    cmd_human->add_option("--models", human_models, "Known model ids")
        ->required()
        ->delimiter(',');
    cmd_human->add_option("--questions", human_questions, "Known question ids")->delimiter(',');
    cmd_human->add_option("--report", human_report);
    cmd_human->callback([&] {
        auto votes = read_votes_csv(votes_path);
        std::vector<std::string> questions = human_questions;
        if (questions.empty()) {
            std::set<std::string> q;
            for (const auto& v : votes) q.insert(v.question_id);
            questions.assign(q.begin(), q.end());
        }
        PreferenceResult result = aggregate_preferences(votes, human_models, questions);
        std::cout << "model            score\n";
        for (const auto& [model, score] : result.model_scores)
            std::cout << model << std::string(model.size() < 16 ? 17 - model.size() : 1, ' ')
                      << score << "\n";
        std::cout << "abstentions      " << result.abstentions << "\n";
        if (!human_report.empty()) {
            json j{{"model_scores", result.model_scores},
                   {"per_question", result.per_question},
                   {"abstentions", result.abstentions},
                   {"total_votes", result.total_votes}};
            if (!common.no_timestamps) j["timestamp"] = current_timestamp_iso();
            write_text_file(human_report, j.dump(2) + "\n");
        }
    });

    // --- build-instructions ---
    auto* cmd_bi = app.add_subcommand("build-instructions",
                                      "Convert Q&A items into chat fine-tune JSON-lines");
    std::string bi_in, bi_out, bi_system = kDefaultSystemPrompt;
    cmd_bi->add_option("--in", bi_in, "Instruction items (CSV or JSON-lines)")->required();
    cmd_bi->add_option("--out", bi_out, "Output JSONL path")->required();
    cmd_bi->add_option("--system", bi_system, "Default system prompt");
    cmd_bi->callback([&] {
        auto items = read_instruction_items(bi_in);
        BuildSummary summary = build_jsonl(items, bi_system, bi_out);
        json j{{"total", summary.total}, {"per_category", summary.per_category}};
        std::cout << j.dump(2) << "\n";
        if (summary.under_minimum)
            std::cerr << "warning: only " << summary.total
                      << " examples; most services require at least 10\n";
    });

    // --- validate-instructions ---
    auto* cmd_vi = app.add_subcommand("validate-instructions",
                                      "Check a chat JSONL file against the format contract");
    std::string vi_in;
    bool vi_failed = false;
    cmd_vi->add_option("--in", vi_in, "JSONL file to validate")->required();
    cmd_vi->callback([&] {
        ValidationReport report = validate_jsonl(vi_in);
        for (const Violation& v : report.violations)
            std::cout << vi_in << ":" << v.line << ": " << v.message << "\n";
        std::cout << report.line_count << " lines, " << report.violations.size()
                  << " violations\n";
        vi_failed = !report.ok();
    });

    // --- compare ---
    auto* cmd_cmp = app.add_subcommand("compare", "Side-by-side metric matrix across backends");
    std::string cmp_spec, cmp_report;
    cmd_cmp->add_option("--spec", cmp_spec, "Comparison description JSON")->required();
    cmd_cmp->add_option("--report", cmp_report);
    cmd_cmp->callback([&] {
        json spec = json::parse(read_text_file(cmp_spec));
        std::vector<std::unique_ptr<ModelBackend>> owned;
        for (const json& b : spec.at("backends")) {
            std::string kind = b.at("kind").get<std::string>();
            std::string id = b.at("id").get<std::string>();
            if (kind == "local") {
                std::optional<AdapterSet> adapters;
                if (b.contains("adapter"))
                    adapters = load_adapters(b.at("adapter").get<std::string>());
                owned.push_back(std::make_unique<LocalBackend>(
                    id, load_checkpoint(b.at("checkpoint").get<std::string>()),
                    std::move(adapters)));
            } else if (kind == "remote") {
                owned.push_back(std::make_unique<RemoteChatBackend>(
                    id, b.at("url").get<std::string>(), b.value("path", "/v1/chat/completions"),
                    b.value("model", "")));
            } else {
                throw ContractError("unknown backend kind '" + kind + "'");
            }
        }
        CompareSuite suite;
        suite.dataset_id = spec.value("dataset_id", "");
        suite.generation.seed = common.seed;
        if (spec.contains("ppl")) {
            auto articles = load_corpus(spec["ppl"].at("corpus_dir").get<std::string>());
            ByteTokenizer tok;
            suite.ppl_chunks = build_chunks(articles, tok, spec["ppl"].value("chunk_len", 512));
        }
        if (spec.contains("rouge"))
            suite.summarization_items =
                read_summarization_jsonl(spec["rouge"].at("items").get<std::string>());
        if (spec.contains("mc"))
            suite.mc_items = read_mc_jsonl(spec["mc"].at("items").get<std::string>());
        if (spec.contains("generation"))
            suite.generation.max_new_tokens = spec["generation"].value("max_new_tokens", 64);
        std::vector<ModelBackend*> backends;
        for (auto& b : owned) backends.push_back(b.get());
        auto rows = compare_backends(backends, suite);
        for (const CompareRow& r : rows) {
            std::cout << r.backend_id << "  " << r.metric << "  " << r.status;
            for (const auto& [k, v] : r.values) std::cout << "  " << k << "=" << v;
            std::cout << "\n";
        }
        if (!cmp_report.empty()) write_text_file(cmp_report, compare_rows_to_json(rows) + "\n");
    });

    // allow --seed and the other global flags after the subcommand name
    for (CLI::App* sub : app.get_subcommands(nullptr)) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }
    if (cmd_vi->parsed() && vi_failed) return kExitValidation;
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
}

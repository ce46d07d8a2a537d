#include "ftlab/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <sstream>

namespace ftlab {

void TrainConfig::validate() const {
    if (epochs < 1 || batch_size < 1) throw ContractError("epochs and batch_size must be >= 1");
    if (learning_rate < 0.0f || weight_decay < 0.0f)
        throw ContractError("learning_rate and weight_decay must be >= 0");
    if (!(beta1 >= 0.0f && beta1 < 1.0f && beta2 >= 0.0f && beta2 < 1.0f))
        throw ContractError("Adam betas must lie in [0, 1)");
    if (adam_eps <= 0.0f) throw ContractError("adam_eps must be > 0");
    if (grad_clip_norm < 0.0f) throw ContractError("grad_clip_norm must be >= 0 (0 disables)");
}

std::string TrainHistory::to_csv(bool zero_seconds) const {
    std::ostringstream os;
    os << "epoch,loss,seconds\n";
    for (const EpochRecord& e : epochs) {
        os << e.epoch << ',' << e.mean_loss << ',' << (zero_seconds ? 0.0 : e.seconds) << '\n';
    }
    return os.str();
}

AdamW::AdamW(std::vector<Tensor> parameters, const TrainConfig& config)
    : params_(std::move(parameters)), cfg_(config) {
    cfg_.validate();
    for (Tensor& p : params_) {
        m_.emplace_back(p.size(), 0.0f);
        v_.emplace_back(p.size(), 0.0f);
    }
}

void AdamW::zero_grads() {
    for (Tensor& p : params_) p.zero_grad();
}

void AdamW::step() {
    double norm_sq = 0.0;
    for (Tensor& p : params_) {
        for (float g : p.grad()) {
            if (!std::isfinite(g)) throw TrainingDiverged("non-finite gradient in optimizer step");
            norm_sq += static_cast<double>(g) * g;
        }
    }
    last_grad_norm_ = std::sqrt(norm_sq);
    float clip = 1.0f;
    if (cfg_.grad_clip_norm > 0.0f && last_grad_norm_ > cfg_.grad_clip_norm)
        clip = static_cast<float>(cfg_.grad_clip_norm / last_grad_norm_);

    ++step_count_;
    float bc1 = 1.0f - std::pow(cfg_.beta1, static_cast<float>(step_count_));
    float bc2 = 1.0f - std::pow(cfg_.beta2, static_cast<float>(step_count_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        auto w = params_[i].values();
        auto g = params_[i].grad();
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t j = 0; j < w.size(); ++j) {
            float gj = g[j] * clip;
            m[j] = cfg_.beta1 * m[j] + (1.0f - cfg_.beta1) * gj;
            v[j] = cfg_.beta2 * v[j] + (1.0f - cfg_.beta2) * gj * gj;
            float mhat = m[j] / bc1;
            float vhat = v[j] / bc2;
            // decoupled decay, applied to the weight not the gradient
            w[j] -= cfg_.learning_rate * (mhat / (std::sqrt(vhat) + cfg_.adam_eps) +
                                          cfg_.weight_decay * w[j]);
        }
    }
}

namespace {

std::vector<Tensor> select_trainable(TransformerWeights& weights, AdapterSet* adapters) {
    if (adapters) return trainable_parameters(*adapters);
    std::vector<Tensor> out;
    for (auto& [name, tensor] : weights.named_parameters()) {
        tensor.set_requires_grad(true);
        out.push_back(tensor);
    }
    return out;
}

void maybe_checkpoint(const TrainConfig& config, AdapterSet* adapters, int epoch) {
    if (!adapters || config.checkpoint_every_n_epochs <= 0 || config.checkpoint_dir.empty())
        return;
    if (epoch % config.checkpoint_every_n_epochs != 0) return;
    std::filesystem::create_directories(config.checkpoint_dir);
    save_adapters(*adapters,
                  (std::filesystem::path(config.checkpoint_dir) /
                   ("adapter_epoch" + std::to_string(epoch) + ".ftla"))
                      .string());
}

}  // namespace

TrainHistory train_lm(TransformerWeights& weights, AdapterSet* adapters,
                      const std::vector<TokenChunk>& chunks, const TrainConfig& config,
                      const std::function<void(const EpochRecord&)>& on_epoch) {
    config.validate();
    if (chunks.empty()) throw ContractError("train_lm: no chunks");
    std::vector<Tensor> params = select_trainable(weights, adapters);
    AdamW opt(params, config);
    std::mt19937 shuffle_rng(config.seed);
    std::mt19937 dropout_rng(config.seed + 1);

    TrainHistory history;
    std::vector<std::size_t> order(chunks.size());
    std::iota(order.begin(), order.end(), 0);
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        auto t0 = std::chrono::steady_clock::now();
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double loss_sum = 0.0;
        int in_batch = 0;
        opt.zero_grads();
        for (std::size_t rank = 0; rank < order.size(); ++rank) {
            const TokenChunk& chunk = chunks[order[rank]];
            ForwardOptions fwd{adapters != nullptr, &dropout_rng};
            Tape tape;
            Tensor loss = chunk_nll(weights, chunk.ids, adapters, fwd);
            double value = loss.item();
            if (!std::isfinite(value)) {
                throw TrainingDiverged("NaN loss at epoch " + std::to_string(epoch) + ", chunk " +
                                       std::to_string(order[rank]) + " (grad norm " +
                                       std::to_string(opt.last_grad_norm()) + ")");
            }
            loss_sum += value;
            tape.backward(loss);
            if (++in_batch == config.batch_size || rank + 1 == order.size()) {
                opt.step();
                opt.zero_grads();
                in_batch = 0;
            }
        }
        auto t1 = std::chrono::steady_clock::now();
        EpochRecord rec{epoch, loss_sum / static_cast<double>(chunks.size()),
                        std::chrono::duration<double>(t1 - t0).count()};
        history.epochs.push_back(rec);
        if (on_epoch) on_epoch(rec);
        maybe_checkpoint(config, adapters, epoch);
    }
    return history;
}

RegressionHead RegressionHead::init(int model_dim, unsigned seed) {
    std::mt19937 rng(seed);
    RegressionHead head;
    head.weight = Tensor::randn({model_dim, 1}, 0.02f, rng).set_requires_grad(true);
    head.bias = Tensor::zeros({1, 1}).set_requires_grad(true);
    return head;
}

std::vector<Tensor> RegressionHead::parameters() { return {weight, bias}; }

Tensor classifier_score(const TransformerWeights& weights, const AdapterSet* adapters,
                        RegressionHead& head, std::span<const int> ids,
                        const ForwardOptions& opts) {
    Tensor hidden = forward_hidden(weights, ids, adapters, opts);
    Tensor pooled = mean_rows(hidden);                       // (1, d)
    return add(matmul(pooled, head.weight), head.bias);      // (1, 1)
}

namespace {

std::vector<int> encode_for_classifier(const TransformerWeights& weights,
                                       const std::string& text) {
    ByteTokenizer tok;
    std::vector<int> ids;
    ids.push_back(ByteTokenizer::kBos);
    std::vector<int> enc = tok.encode(text);
    ids.insert(ids.end(), enc.begin(), enc.end());
    std::size_t limit = static_cast<std::size_t>(weights.config.context_length);
    if (ids.size() > limit) ids.resize(limit);  // headlines truncated to context
    return ids;
}

}  // namespace

TrainHistory train_classifier(TransformerWeights& weights, AdapterSet* adapters,
                              RegressionHead& head, const std::vector<LabeledHeadline>& dataset,
                              const TrainConfig& config,
                              const std::function<void(const EpochRecord&)>& on_epoch) {
    config.validate();
    if (dataset.empty()) throw ContractError("train_classifier: empty dataset");

    std::vector<Tensor> params = select_trainable(weights, adapters);
    for (Tensor& p : head.parameters()) params.push_back(p);
    AdamW opt(params, config);
    std::mt19937 shuffle_rng(config.seed);
    std::mt19937 dropout_rng(config.seed + 1);

    std::vector<std::vector<int>> encoded;
    encoded.reserve(dataset.size());
    for (const LabeledHeadline& ex : dataset)
        encoded.push_back(encode_for_classifier(weights, ex.headline.text));

    TrainHistory history;
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        auto t0 = std::chrono::steady_clock::now();
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double loss_sum = 0.0;
        int in_batch = 0;
        opt.zero_grads();
        for (std::size_t rank = 0; rank < order.size(); ++rank) {
            std::size_t i = order[rank];
            ForwardOptions fwd{adapters != nullptr, &dropout_rng};
            Tape tape;
            Tensor pred = classifier_score(weights, adapters, head, encoded[i], fwd);
            float target = static_cast<float>(dataset[i].bucket.code);
            Tensor diff = add(pred, Tensor::from_values({1, 1}, {-target}));
            Tensor loss = mul(diff, diff);  // (pred - code)^2, scalar
            double value = loss.item();
            if (!std::isfinite(value))
                throw TrainingDiverged("NaN loss at epoch " + std::to_string(epoch) +
                                       ", example " + std::to_string(i) + " (grad norm " +
                                       std::to_string(opt.last_grad_norm()) + ")");
            loss_sum += value;
            tape.backward(loss);
            if (++in_batch == config.batch_size || rank + 1 == order.size()) {
                opt.step();
                opt.zero_grads();
                in_batch = 0;
            }
        }
        auto t1 = std::chrono::steady_clock::now();
        EpochRecord rec{epoch, loss_sum / static_cast<double>(dataset.size()),
                        std::chrono::duration<double>(t1 - t0).count()};
        history.epochs.push_back(rec);
        if (on_epoch) on_epoch(rec);
        maybe_checkpoint(config, adapters, epoch);
    }
    return history;
}

int round_code(double raw) {
    double rounded = raw >= 0.0 ? std::floor(raw + 0.5) : std::ceil(raw - 0.5);
    int code = static_cast<int>(rounded);
    if (code == 0) code = -1;
    return std::clamp(code, -6, 6);
}

BucketPrediction predict_bucket(const TransformerWeights& weights, const AdapterSet* adapters,
                                RegressionHead& head, const std::string& headline_text) {
    std::vector<int> ids = encode_for_classifier(weights, headline_text);
    Tensor pred = classifier_score(weights, adapters, head, ids);
    double raw = pred.item();
    return BucketPrediction{code_to_bucket(round_code(raw)), raw};
}

}  // namespace ftlab

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ftlab/corpus.hpp"
#include "ftlab/labels.hpp"
#include "ftlab/lora.hpp"
#include "ftlab/model.hpp"
#include "ftlab/tensor.hpp"

namespace ftlab {

struct TrainConfig {
    int epochs = 10;
    int batch_size = 4;  // gradient-accumulation group
    float learning_rate = 2e-4f;
    float weight_decay = 0.01f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float adam_eps = 1e-8f;
    float grad_clip_norm = 1.0f;
    unsigned seed = 0;
    int checkpoint_every_n_epochs = 0;  // 0 = never
    std::string checkpoint_dir;

    void validate() const;
};

struct EpochRecord {
    int epoch = 0;
    double mean_loss = 0.0;
    double seconds = 0.0;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    std::optional<double> final_eval_loss;

    /// CSV "epoch,loss,seconds"; zero_seconds supports byte-identical
    /// determinism checks.
    std::string to_csv(bool zero_seconds = false) const;
};

/// Decoupled-weight-decay Adam with global-norm gradient clipping
/// applied before the step.
class AdamW {
public:
    AdamW(std::vector<Tensor> parameters, const TrainConfig& config);

    /// Clips, updates, and advances the step count. Throws on non-finite
    /// gradients.
    void step();
    void zero_grads();
    double last_grad_norm() const { return last_grad_norm_; }

private:
    std::vector<Tensor> params_;
    std::vector<std::vector<float>> m_, v_;
    TrainConfig cfg_;
    long step_count_ = 0;
    double last_grad_norm_ = 0.0;
};

/// Thrown when a training loss goes non-finite; carries where it
/// happened.
struct TrainingDiverged : Error {
    TrainingDiverged(const std::string& msg) : Error(msg) {}
};

/// Unsupervised next-token loop over fixed-length chunks. When adapters
/// are given, only the adapter tensors train and the base stays frozen;
/// with adapters == nullptr every base parameter trains (full
/// fine-tune / from-scratch mode). Chunk order reshuffles every epoch
/// from the run seed.
TrainHistory train_lm(TransformerWeights& weights, AdapterSet* adapters,
                      const std::vector<TokenChunk>& chunks, const TrainConfig& config,
                      const std::function<void(const EpochRecord&)>& on_epoch = {});

/// Mean-pooled hidden state through a d -> 1 affine map; the scalar
/// output is trained against integer bucket codes with squared error.
struct RegressionHead {
    Tensor weight;  // (d, 1)
    Tensor bias;    // (1, 1)

    static RegressionHead init(int model_dim, unsigned seed);
    std::vector<Tensor> parameters();
};

TrainHistory train_classifier(TransformerWeights& weights, AdapterSet* adapters,
                              RegressionHead& head, const std::vector<LabeledHeadline>& dataset,
                              const TrainConfig& config,
                              const std::function<void(const EpochRecord&)>& on_epoch = {});

struct BucketPrediction {
    ReturnBucket bucket;
    double raw_score = 0.0;
};

/// Raw head output rounded half-away-from-zero, 0 resolved to -1,
/// clamped to [-6, 6], decoded via code_to_bucket.
BucketPrediction predict_bucket(const TransformerWeights& weights, const AdapterSet* adapters,
                                RegressionHead& head, const std::string& headline_text);

/// Forward pass the classifier path shares with predict_bucket; exposed
/// so tests can differentiate through it.
Tensor classifier_score(const TransformerWeights& weights, const AdapterSet* adapters,
                        RegressionHead& head, std::span<const int> ids,
                        const ForwardOptions& opts = {});

int round_code(double raw);  // half-away-from-zero, 0 -> -1, clamp [-6, 6]

}  // namespace ftlab

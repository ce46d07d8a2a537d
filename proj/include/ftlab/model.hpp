#pragma once

#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ftlab/lora.hpp"
#include "ftlab/tensor.hpp"
#include "ftlab/tokenizer.hpp"

namespace ftlab {

struct TransformerConfig {
    int vocab_size = ByteTokenizer::kVocabSize;
    int context_length = 512;
    int model_dim = 64;
    int num_layers = 2;
    int num_heads = 4;
    int mlp_hidden = 256;  // 4 * model_dim by convention
    unsigned seed = 0;

    void validate() const;
    std::string to_json() const;
    static TransformerConfig from_json(const std::string& json_text);
    bool operator==(const TransformerConfig&) const = default;

    /// The d=64, L=2 byte-vocab model that trains on a laptop CPU.
    static TransformerConfig desk_default(unsigned seed = 0);
};

struct LayerWeights {
    Tensor ln1_gain, ln1_bias;
    Tensor wq, wk, wv, wo;  // (d, d), applied as x * W
    Tensor ln2_gain, ln2_bias;
    Tensor w_in;   // (d, mlp_hidden)
    Tensor b_in;   // (mlp_hidden)
    Tensor w_out;  // (mlp_hidden, d)
    Tensor b_out;  // (d)
};

/// Pre-norm decoder-only transformer with learned absolute positions and
/// the LM head tied to the token embedding.
struct TransformerWeights {
    TransformerConfig config;
    Tensor token_embedding;     // (V, d); also the LM head
    Tensor position_embedding;  // (context_length, d)
    std::vector<LayerWeights> layers;
    Tensor final_gain, final_bias;

    /// Canonical (name, tensor) order used by checkpoints and the
    /// full-model optimizer path.
    std::vector<std::pair<std::string, Tensor>> named_parameters();
    std::vector<std::pair<std::string, Tensor>> named_parameters() const;
};

/// Deterministic for a fixed (config, seed): N(0, 0.02^2) everywhere
/// except norm gains (1) and biases (0).
TransformerWeights init_model(const TransformerConfig& config);

struct ForwardOptions {
    bool training = false;
    std::mt19937* rng = nullptr;  // adapter dropout during training
};

/// Causal logits (t, V). Adapters, when present, add their delta to the
/// query and value projections only.
Tensor forward(const TransformerWeights& weights, std::span<const int> ids,
               const AdapterSet* adapters = nullptr, const ForwardOptions& opts = {});

/// Final-norm hidden states (t, d) before the tied LM head; the
/// classifier head pools over these.
Tensor forward_hidden(const TransformerWeights& weights, std::span<const int> ids,
                      const AdapterSet* adapters = nullptr, const ForwardOptions& opts = {});

/// Mean next-token cross-entropy over a chunk: position i is predicted
/// from ids[0..i-1], for i = 1..t-1.
Tensor chunk_nll(const TransformerWeights& weights, std::span<const int> chunk,
                 const AdapterSet* adapters = nullptr, const ForwardOptions& opts = {});

enum class DecodeStrategy { kGreedy, kTemperature, kTopK };

struct GenerationParams {
    int max_new_tokens = 64;
    DecodeStrategy strategy = DecodeStrategy::kGreedy;
    float temperature = 1.0f;
    int top_k = 10;
    unsigned seed = 0;

    void validate() const;
};

/// Prompt plus sampled continuation; greedy is deterministic, sampling
/// is deterministic for a fixed seed. Stops at eos or max_new_tokens.
/// When the window fills, the most recent context_length-1 tokens are kept.
std::string generate(const TransformerWeights& weights, const std::string& prompt,
                     const GenerationParams& params, const AdapterSet* adapters = nullptr);

void save_checkpoint(const TransformerWeights& weights, const std::string& path);
TransformerWeights load_checkpoint(const std::string& path);

}  // namespace ftlab

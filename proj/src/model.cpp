#include "ftlab/model.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numeric>

#include "ftlab/container.hpp"

namespace ftlab {

using json = nlohmann::json;

void TransformerConfig::validate() const {
    if (vocab_size <= 0 || context_length < 2 || model_dim <= 0 || num_layers <= 0 ||
        num_heads <= 0 || mlp_hidden <= 0)
        throw ContractError("invalid transformer config: all extents must be positive and "
                            "context_length >= 2");
    if (model_dim % num_heads != 0)
        throw ContractError("model_dim " + std::to_string(model_dim) +
                            " not divisible by num_heads " + std::to_string(num_heads));
}

std::string TransformerConfig::to_json() const {
    json j{{"vocab_size", vocab_size},     {"context_length", context_length},
           {"model_dim", model_dim},       {"num_layers", num_layers},
           {"num_heads", num_heads},       {"mlp_hidden", mlp_hidden},
           {"seed", seed}};
    return j.dump();
}

TransformerConfig TransformerConfig::from_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("config JSON: ") + e.what());
    }
    TransformerConfig c;
    c.vocab_size = j.at("vocab_size").get<int>();
    c.context_length = j.at("context_length").get<int>();
    c.model_dim = j.at("model_dim").get<int>();
    c.num_layers = j.at("num_layers").get<int>();
    c.num_heads = j.at("num_heads").get<int>();
    c.mlp_hidden = j.at("mlp_hidden").get<int>();
    c.seed = j.at("seed").get<unsigned>();
    c.validate();
    return c;
}

TransformerConfig TransformerConfig::desk_default(unsigned seed) {
    TransformerConfig c;
    c.seed = seed;
    return c;
}

std::vector<std::pair<std::string, Tensor>> TransformerWeights::named_parameters() {
    std::vector<std::pair<std::string, Tensor>> out;
    out.emplace_back("token_embedding", token_embedding);
    out.emplace_back("position_embedding", position_embedding);
    for (std::size_t i = 0; i < layers.size(); ++i) {
        std::string p = "layer" + std::to_string(i) + ".";
        LayerWeights& l = layers[i];
        out.emplace_back(p + "ln1_gain", l.ln1_gain);
        out.emplace_back(p + "ln1_bias", l.ln1_bias);
        out.emplace_back(p + "wq", l.wq);
        out.emplace_back(p + "wk", l.wk);
        out.emplace_back(p + "wv", l.wv);
        out.emplace_back(p + "wo", l.wo);
        out.emplace_back(p + "ln2_gain", l.ln2_gain);
        out.emplace_back(p + "ln2_bias", l.ln2_bias);
        out.emplace_back(p + "w_in", l.w_in);
        out.emplace_back(p + "b_in", l.b_in);
        out.emplace_back(p + "w_out", l.w_out);
        out.emplace_back(p + "b_out", l.b_out);
    }
    out.emplace_back("final_gain", final_gain);
    out.emplace_back("final_bias", final_bias);
    return out;
}

std::vector<std::pair<std::string, Tensor>> TransformerWeights::named_parameters() const {
    return const_cast<TransformerWeights*>(this)->named_parameters();
}

TransformerWeights init_model(const TransformerConfig& config) {
    config.validate();
    constexpr float kInitStd = 0.02f;
    std::mt19937 rng(config.seed);
    TransformerWeights w;
    w.config = config;
    const int d = config.model_dim;
    w.token_embedding = Tensor::randn({config.vocab_size, d}, kInitStd, rng);
    w.position_embedding = Tensor::randn({config.context_length, d}, kInitStd, rng);
    for (int i = 0; i < config.num_layers; ++i) {
        LayerWeights l;
        l.ln1_gain = Tensor::full({d}, 1.0f);
        l.ln1_bias = Tensor::zeros({d});
        l.wq = Tensor::randn({d, d}, kInitStd, rng);
        l.wk = Tensor::randn({d, d}, kInitStd, rng);
        l.wv = Tensor::randn({d, d}, kInitStd, rng);
        l.wo = Tensor::randn({d, d}, kInitStd, rng);
        l.ln2_gain = Tensor::full({d}, 1.0f);
        l.ln2_bias = Tensor::zeros({d});
        l.w_in = Tensor::randn({d, config.mlp_hidden}, kInitStd, rng);
        l.b_in = Tensor::zeros({config.mlp_hidden});
        l.w_out = Tensor::randn({config.mlp_hidden, d}, kInitStd, rng);
        l.b_out = Tensor::zeros({d});
        w.layers.push_back(std::move(l));
    }
    w.final_gain = Tensor::full({d}, 1.0f);
    w.final_bias = Tensor::zeros({d});
    return w;
}

namespace {

constexpr float kLnEps = 1e-5f;

Tensor project(const Tensor& x, const Tensor& weight, const LoraAdapter* adapter,
               const ForwardOptions& opts) {
    Tensor out = matmul(x, weight);
    if (adapter) {
        AdapterForwardOptions ao{opts.training, opts.rng};
        out = add(out, adapter_delta(*adapter, x, ao));
    }
    return out;
}

Tensor attention_block(const TransformerWeights& w, int layer_index, const Tensor& x,
                       const AdapterSet* adapters, const ForwardOptions& opts) {
    const LayerWeights& l = w.layers[static_cast<std::size_t>(layer_index)];
    const int d = w.config.model_dim;
    const int heads = w.config.num_heads;
    const int head_dim = d / heads;

    Tensor n1 = layer_norm(x, l.ln1_gain, l.ln1_bias, kLnEps);
    const LoraAdapter* aq =
        adapters ? adapters->find(layer_index, LoraTarget::kQuery) : nullptr;
    const LoraAdapter* av =
        adapters ? adapters->find(layer_index, LoraTarget::kValue) : nullptr;
    Tensor q = project(n1, l.wq, aq, opts);
    Tensor k = matmul(n1, l.wk);
    Tensor v = project(n1, l.wv, av, opts);

    float inv_sqrt = 1.0f / std::sqrt(static_cast<float>(head_dim));
    std::vector<Tensor> contexts;
    contexts.reserve(static_cast<std::size_t>(heads));
    for (int h = 0; h < heads; ++h) {
        int c0 = h * head_dim, c1 = c0 + head_dim;
        Tensor qh = slice_cols(q, c0, c1);
        Tensor kh = slice_cols(k, c0, c1);
        Tensor vh = slice_cols(v, c0, c1);
        Tensor scores = causal_mask(scale(matmul_nt(qh, kh), inv_sqrt));
        contexts.push_back(matmul(softmax_rows(scores), vh));
    }
    Tensor ctx = heads == 1 ? contexts[0] : concat_cols(contexts);
    return matmul(ctx, l.wo);
}

Tensor mlp_block(const TransformerWeights& w, int layer_index, const Tensor& x) {
    const LayerWeights& l = w.layers[static_cast<std::size_t>(layer_index)];
    Tensor n2 = layer_norm(x, l.ln2_gain, l.ln2_bias, kLnEps);
    Tensor h = gelu(add_bias_rows(matmul(n2, l.w_in), l.b_in));
    return add_bias_rows(matmul(h, l.w_out), l.b_out);
}

}  // namespace

Tensor forward_hidden(const TransformerWeights& weights, std::span<const int> ids,
                      const AdapterSet* adapters, const ForwardOptions& opts) {
    if (ids.empty()) throw ContractError("forward: empty token sequence");
    if (static_cast<int>(ids.size()) > weights.config.context_length)
        throw ContractError("forward: sequence of " + std::to_string(ids.size()) +
                            " tokens overflows context length " +
                            std::to_string(weights.config.context_length));
    std::vector<int> positions(ids.size());
    std::iota(positions.begin(), positions.end(), 0);

    Tensor x = add(embedding_rows(weights.token_embedding, ids),
                   embedding_rows(weights.position_embedding, positions));
    for (int i = 0; i < weights.config.num_layers; ++i) {
        x = add(x, attention_block(weights, i, x, adapters, opts));
        x = add(x, mlp_block(weights, i, x));
    }
    return layer_norm(x, weights.final_gain, weights.final_bias, kLnEps);
}

Tensor forward(const TransformerWeights& weights, std::span<const int> ids,
               const AdapterSet* adapters, const ForwardOptions& opts) {
    Tensor hidden = forward_hidden(weights, ids, adapters, opts);
    return matmul_nt(hidden, weights.token_embedding);  // tied LM head
}

Tensor chunk_nll(const TransformerWeights& weights, std::span<const int> chunk,
                 const AdapterSet* adapters, const ForwardOptions& opts) {
    if (chunk.size() < 2)
        throw ContractError("chunk_nll: need at least 2 tokens, got " +
                            std::to_string(chunk.size()));
    Tensor logits = forward(weights, chunk.subspan(0, chunk.size() - 1), adapters, opts);
    return cross_entropy_next_token(logits, chunk.subspan(1));
}

void GenerationParams::validate() const {
    if (max_new_tokens < 0) throw ContractError("max_new_tokens must be >= 0");
    if (temperature <= 0.0f) throw ContractError("temperature must be > 0");
    if (top_k < 1) throw ContractError("top_k must be >= 1");
}

namespace {

int sample_index(const std::vector<float>& logits, const GenerationParams& params,
                 std::mt19937& rng) {
    const int v = static_cast<int>(logits.size());
    if (params.strategy == DecodeStrategy::kGreedy)
        return static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());

    std::vector<int> candidates(static_cast<std::size_t>(v));
    std::iota(candidates.begin(), candidates.end(), 0);
    if (params.strategy == DecodeStrategy::kTopK && params.top_k < v) {
        std::partial_sort(candidates.begin(), candidates.begin() + params.top_k, candidates.end(),
                          [&](int a, int b) {
                              if (logits[static_cast<std::size_t>(a)] !=
                                  logits[static_cast<std::size_t>(b)])
                                  return logits[static_cast<std::size_t>(a)] >
                                         logits[static_cast<std::size_t>(b)];
                              return a < b;
                          });
        candidates.resize(static_cast<std::size_t>(params.top_k));
    }
    float mx = -std::numeric_limits<float>::infinity();
    for (int c : candidates) mx = std::max(mx, logits[static_cast<std::size_t>(c)]);
    std::vector<double> probs;
    probs.reserve(candidates.size());
    double denom = 0.0;
    for (int c : candidates) {
        double p = std::exp((logits[static_cast<std::size_t>(c)] - mx) / params.temperature);
        probs.push_back(p);
        denom += p;
    }
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    double u = uni(rng) * denom;
    double acc = 0.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        acc += probs[i];
        if (u <= acc) return candidates[i];
    }
    return candidates.back();
}

}  // namespace

std::string generate(const TransformerWeights& weights, const std::string& prompt,
                     const GenerationParams& params, const AdapterSet* adapters) {
    params.validate();
    ByteTokenizer tok;
    std::vector<int> ids;
    ids.push_back(ByteTokenizer::kBos);
    {
        std::vector<int> enc = tok.encode(prompt);
        ids.insert(ids.end(), enc.begin(), enc.end());
    }
    const int window = weights.config.context_length - 1;
    if (static_cast<int>(ids.size()) > window)
        ids.erase(ids.begin(), ids.end() - window);

    std::mt19937 rng(params.seed);
    std::vector<int> produced;
    for (int step = 0; step < params.max_new_tokens; ++step) {
        std::span<const int> ctx(ids);
        if (static_cast<int>(ctx.size()) > window) ctx = ctx.subspan(ctx.size() - window);
        Tensor logits = forward(weights, ctx, adapters);
        const int v = weights.config.vocab_size;
        auto lv = logits.values();
        std::vector<float> last(lv.end() - v, lv.end());
        int next = sample_index(last, params, rng);
        if (next == ByteTokenizer::kEos) break;
        ids.push_back(next);
        produced.push_back(next);
    }
    return prompt + tok.decode(produced);
}

void save_checkpoint(const TransformerWeights& weights, const std::string& path) {
    std::vector<ContainerEntry> entries;
    for (const auto& [name, tensor] : weights.named_parameters()) {
        ContainerEntry e;
        e.name = name;
        e.shape = tensor.shape();
        auto v = tensor.values();
        e.data.assign(v.begin(), v.end());
        entries.push_back(std::move(e));
    }
    write_container(path, "FTLM", weights.config.to_json(), entries);
}

TransformerWeights load_checkpoint(const std::string& path) {
    ContainerFile file = read_container(path, "FTLM");
    TransformerConfig config = TransformerConfig::from_json(file.config_json);
    TransformerWeights w = init_model(config);
    auto params = w.named_parameters();
    if (file.entries.size() != params.size())
        throw CorruptFileError("checkpoint " + path + " holds " +
                               std::to_string(file.entries.size()) + " tensors, expected " +
                               std::to_string(params.size()));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const ContainerEntry& e = file.entries[i];
        auto& [name, tensor] = params[i];
        if (e.name != name)
            throw CorruptFileError("checkpoint " + path + ": tensor " + std::to_string(i) +
                                   " named '" + e.name + "', expected '" + name + "'");
        if (e.shape != tensor.shape())
            throw CorruptFileError("checkpoint " + path + ": tensor " + name + " has shape " +
                                   Tensor::shape_string(e.shape) + ", expected " +
                                   Tensor::shape_string(tensor.shape()));
        std::copy(e.data.begin(), e.data.end(), tensor.values().begin());
    }
    return w;
}

}  // namespace ftlab

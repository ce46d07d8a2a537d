#include "ftlab/lora.hpp"

#include <algorithm>
#include <map>
#include <nlohmann/json.hpp>

#include "ftlab/container.hpp"
#include "ftlab/model.hpp"

namespace ftlab {

using json = nlohmann::json;

std::string lora_target_name(LoraTarget t) {
    return t == LoraTarget::kQuery ? "query" : "value";
}

LoraTarget lora_target_from_name(const std::string& name) {
    if (name == "query" || name == "q") return LoraTarget::kQuery;
    if (name == "value" || name == "v") return LoraTarget::kValue;
    throw ContractError("unknown LoRA target '" + name + "' (expected query or value)");
}

const LoraAdapter* AdapterSet::find(int layer, LoraTarget target) const {
    for (const LoraAdapter& a : adapters)
        if (a.layer == layer && a.target == target) return &a;
    return nullptr;
}

LoraAdapter* AdapterSet::find(int layer, LoraTarget target) {
    for (LoraAdapter& a : adapters)
        if (a.layer == layer && a.target == target) return &a;
    return nullptr;
}

AdapterSet attach_adapters(const TransformerWeights& weights, int rank, float alpha,
                           const std::vector<LoraTarget>& targets, unsigned seed, float dropout) {
    const int d = weights.config.model_dim;
    if (rank < 1 || rank > d)
        throw ContractError("adapter rank " + std::to_string(rank) + " outside [1, " +
                            std::to_string(d) + "]");
    if (dropout < 0.0f || dropout >= 1.0f)
        throw ContractError("adapter dropout must be in [0, 1)");
    if (targets.empty()) throw ContractError("attach_adapters: no targets given");
    std::mt19937 rng(seed);
    AdapterSet set;
    for (int layer = 0; layer < weights.config.num_layers; ++layer) {
        for (LoraTarget t : targets) {
            LoraAdapter a;
            a.layer = layer;
            a.target = t;
            a.rank = rank;
            a.alpha = alpha;
            a.dropout = dropout;
            a.a = Tensor::randn({rank, d}, 0.02f, rng).set_requires_grad(true);
            a.b = Tensor::zeros({d, rank}).set_requires_grad(true);
            set.adapters.push_back(std::move(a));
        }
    }
    return set;
}

Tensor adapter_delta(const LoraAdapter& adapter, const Tensor& x,
                     const AdapterForwardOptions& opts) {
    const int d = adapter.a.dim(1);
    int width = x.rank() == 1 ? x.dim(0) : x.dim(x.rank() - 1);
    if (width != d)
        throw DimensionError("adapter_delta: input width " + std::to_string(width) +
                             " does not match adapter width " + std::to_string(d));
    Tensor in = x;
    if (opts.training && adapter.dropout > 0.0f) {
        if (!opts.rng) throw ContractError("adapter dropout requires an RNG during training");
        Tensor mask(x.shape());
        std::bernoulli_distribution keep(1.0 - adapter.dropout);
        float inv = 1.0f / (1.0f - adapter.dropout);
        for (float& m : mask.values()) m = keep(*opts.rng) ? inv : 0.0f;
        in = mul(in, mask);
    }
    Tensor u = matmul_nt(in, adapter.a);          // (t, r) = x A^T
    return scale(matmul_nt(u, adapter.b), adapter.scale());  // (t, d) = u B^T
}

Tensor adapter_dense_delta(const LoraAdapter& adapter) {
    const int r = adapter.rank;
    const int d = adapter.a.dim(1);
    Tensor dense({d, d});
    auto av = adapter.a.values();
    auto bv = adapter.b.values();
    auto dv = dense.values();
    float s = adapter.scale();
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            float acc = 0.0f;
            for (int k = 0; k < r; ++k) acc += av[k * d + i] * bv[j * r + k];
            dv[i * d + j] = s * acc;
        }
    return dense;
}

namespace {

TransformerWeights deep_copy(const TransformerWeights& weights) {
    TransformerWeights out = init_model(weights.config);
    auto src = weights.named_parameters();
    auto dst = out.named_parameters();
    for (std::size_t i = 0; i < src.size(); ++i) {
        auto s = src[i].second.values();
        std::copy(s.begin(), s.end(), dst[i].second.values().begin());
    }
    return out;
}

}  // namespace

TransformerWeights merge(const TransformerWeights& weights, const AdapterSet& adapters) {
    const int d = weights.config.model_dim;
    TransformerWeights out = deep_copy(weights);
    for (const LoraAdapter& a : adapters.adapters) {
        if (a.layer < 0 || a.layer >= weights.config.num_layers)
            throw ContractError("adapter targets layer " + std::to_string(a.layer) +
                                " of a " + std::to_string(weights.config.num_layers) +
                                "-layer model");
        if (a.a.dim(1) != d || a.b.dim(0) != d)
            throw ContractError("adapter width does not match model_dim " + std::to_string(d));
        Tensor dense = adapter_dense_delta(a);
        Tensor& target = a.target == LoraTarget::kQuery
                             ? out.layers[static_cast<std::size_t>(a.layer)].wq
                             : out.layers[static_cast<std::size_t>(a.layer)].wv;
        auto tv = target.values();
        auto dv = dense.values();
        for (std::size_t i = 0; i < tv.size(); ++i) tv[i] += dv[i];
    }
    return out;
}

std::vector<Tensor> trainable_parameters(AdapterSet& adapters) {
    std::vector<Tensor> out;
    for (LoraAdapter& a : adapters.adapters) {
        out.push_back(a.a);
        out.push_back(a.b);
    }
    return out;
}

void save_adapters(const AdapterSet& adapters, const std::string& path,
                   const std::vector<std::pair<std::string, Tensor>>& extra) {
    json config = json::array();
    std::vector<ContainerEntry> entries;
    for (const LoraAdapter& a : adapters.adapters) {
        config.push_back({{"layer", a.layer},
                          {"target", lora_target_name(a.target)},
                          {"rank", a.rank},
                          {"alpha", a.alpha},
                          {"dropout", a.dropout}});
        std::string prefix =
            "layer" + std::to_string(a.layer) + "." + lora_target_name(a.target) + ".";
        ContainerEntry ea{prefix + "A", a.a.shape(), {a.a.values().begin(), a.a.values().end()}};
        ContainerEntry eb{prefix + "B", a.b.shape(), {a.b.values().begin(), a.b.values().end()}};
        entries.push_back(std::move(ea));
        entries.push_back(std::move(eb));
    }
    for (const auto& [name, tensor] : extra) {
        entries.push_back(
            ContainerEntry{name, tensor.shape(), {tensor.values().begin(), tensor.values().end()}});
    }
    write_container(path, "FTLA", json{{"adapters", config}}.dump(), entries);
}

AdapterSet load_adapters(const std::string& path,
                         std::vector<std::pair<std::string, Tensor>>* extra_out) {
    ContainerFile file = read_container(path, "FTLA");
    json config;
    try {
        config = json::parse(file.config_json);
    } catch (const json::exception& e) {
        throw CorruptFileError(std::string("adapter config JSON: ") + e.what());
    }
    AdapterSet set;
    std::map<std::string, const ContainerEntry*> by_name;
    for (const ContainerEntry& e : file.entries) by_name[e.name] = &e;
    std::size_t consumed = 0;
    for (const json& j : config.at("adapters")) {
        LoraAdapter a;
        a.layer = j.at("layer").get<int>();
        a.target = lora_target_from_name(j.at("target").get<std::string>());
        a.rank = j.at("rank").get<int>();
        a.alpha = j.at("alpha").get<float>();
        a.dropout = j.at("dropout").get<float>();
        std::string prefix =
            "layer" + std::to_string(a.layer) + "." + lora_target_name(a.target) + ".";
        auto ia = by_name.find(prefix + "A");
        auto ib = by_name.find(prefix + "B");
        if (ia == by_name.end() || ib == by_name.end())
            throw CorruptFileError("adapter file " + path + " missing payload for " + prefix);
        a.a = Tensor::from_values(ia->second->shape, ia->second->data).set_requires_grad(true);
        a.b = Tensor::from_values(ib->second->shape, ib->second->data).set_requires_grad(true);
        consumed += 2;
        set.adapters.push_back(std::move(a));
    }
    if (extra_out) {
        for (const ContainerEntry& e : file.entries) {
            bool is_adapter = false;
            for (const LoraAdapter& a : set.adapters) {
                std::string prefix =
                    "layer" + std::to_string(a.layer) + "." + lora_target_name(a.target) + ".";
                if (e.name == prefix + "A" || e.name == prefix + "B") {
                    is_adapter = true;
                    break;
                }
            }
            if (!is_adapter)
                extra_out->emplace_back(e.name, Tensor::from_values(e.shape, e.data));
        }
    }
    (void)consumed;
    return set;
}

}  // namespace ftlab

#pragma once

#include <random>
#include <string>
#include <vector>

#include "ftlab/tensor.hpp"

namespace ftlab {

struct TransformerWeights;  // model.hpp

enum class LoraTarget { kQuery, kValue };

std::string lora_target_name(LoraTarget t);
LoraTarget lora_target_from_name(const std::string& name);

/// Low-rank pair attached beside one frozen projection. The forward
/// contribution is (alpha/rank) * x A^T B^T, the row-vector form of
/// B(Ax); the base matrix is never touched while the adapter is live.
struct LoraAdapter {
    int layer = 0;
    LoraTarget target = LoraTarget::kQuery;
    int rank = 4;
    float alpha = 8.0f;
    float dropout = 0.05f;
    Tensor a;  // (rank, d), Gaussian init
    Tensor b;  // (d, rank), zero init so a fresh adapter is the identity

    float scale() const { return alpha / static_cast<float>(rank); }
};

struct AdapterSet {
    std::vector<LoraAdapter> adapters;

    bool empty() const { return adapters.empty(); }
    /// nullptr when no adapter covers (layer, target).
    const LoraAdapter* find(int layer, LoraTarget target) const;
    LoraAdapter* find(int layer, LoraTarget target);
};

/// One adapter per (layer, target); A ~ N(0, 0.02^2), B = 0. Base
/// weights stay out of the trainable list entirely.
AdapterSet attach_adapters(const TransformerWeights& weights, int rank, float alpha,
                           const std::vector<LoraTarget>& targets, unsigned seed,
                           float dropout = 0.05f);

struct AdapterForwardOptions {
    bool training = false;       // adapter dropout applies only when true
    std::mt19937* rng = nullptr; // required when training and dropout > 0
};

/// (alpha/rank) * B(Ax) for a row-major activation block x (t, d).
Tensor adapter_delta(const LoraAdapter& adapter, const Tensor& x,
                     const AdapterForwardOptions& opts = {});

/// Folds every adapter into a copy of the base: W <- W + (alpha/rank) (BA)^T
/// in this library's x*W orientation. The result carries no adapters.
TransformerWeights merge(const TransformerWeights& weights, const AdapterSet& adapters);

/// Exactly the A and B tensors (plus nothing from the base); what the
/// optimizer consumes.
std::vector<Tensor> trainable_parameters(AdapterSet& adapters);

/// Dense (d, d) matrix D with x*D == adapter_delta(adapter, x); test and
/// merge helper.
Tensor adapter_dense_delta(const LoraAdapter& adapter);

void save_adapters(const AdapterSet& adapters, const std::string& path,
                   const std::vector<std::pair<std::string, Tensor>>& extra = {});
/// extra_out receives any non-adapter entries found in the file (e.g. a
/// classifier head saved alongside).
AdapterSet load_adapters(const std::string& path,
                         std::vector<std::pair<std::string, Tensor>>* extra_out = nullptr);

}  // namespace ftlab

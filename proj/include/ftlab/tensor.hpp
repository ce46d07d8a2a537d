#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ftlab/error.hpp"

namespace ftlab {

/// Dense row-major float tensor, rank 1..3, with an optional gradient
/// buffer. Copies are shallow handles onto shared storage, so an op's
/// backward closure can accumulate into the same grad buffer the caller
/// sees.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape);

    static Tensor zeros(std::vector<int> shape);
    static Tensor full(std::vector<int> shape, float value);
    static Tensor from_values(std::vector<int> shape, std::vector<float> values);
    static Tensor randn(std::vector<int> shape, float stddev, std::mt19937& rng);
    static Tensor scalar(float value);

    bool defined() const { return s_ != nullptr; }
    const std::vector<int>& shape() const;
    int rank() const;
    int dim(int i) const;
    std::size_t size() const;
    bool is_scalar() const { return size() == 1; }

    std::span<float> values();
    std::span<const float> values() const;
    float item() const;  // scalar only

    bool requires_grad() const;
    Tensor& set_requires_grad(bool on);
    /// Gradient buffer, allocated (zero-filled) on first touch.
    std::span<float> grad();
    bool has_grad() const;
    void zero_grad();

    /// Deep copy with its own storage; grad not copied.
    Tensor clone() const;

    /// True iff both handles point at the same storage.
    bool same_storage(const Tensor& other) const { return s_ == other.s_; }

    static std::string shape_string(const std::vector<int>& shape);

private:
    struct Storage {
        std::vector<int> shape;
        std::vector<float> value;
        std::vector<float> grad;  // empty until touched
        bool requires_grad = false;
    };
    std::shared_ptr<Storage> s_;

    Storage& st();
    const Storage& st() const;
};

/// Records the backward pass for ops executed while it is the active
/// tape. Exactly one tape may run backward over a given graph at a time;
/// nesting tapes is allowed (inner shadows outer).
class Tape {
public:
    Tape();
    ~Tape();
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    static Tape* active();
    void record(std::function<void()> step);

    /// Seeds d(loss)/d(loss) = 1 and replays recorded steps in reverse.
    /// Gradients accumulate; call zero_grad between uses if that is not
    /// what you want.
    void backward(Tensor loss);

    std::size_t node_count() const { return steps_.size(); }

private:
    std::vector<std::function<void()>> steps_;
    Tape* prev_ = nullptr;
};

// --- differentiable kernels ------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);     // (m,k)x(k,n) -> (m,n)
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // (m,k)x(n,k) -> (m,n), b transposed
Tensor add(const Tensor& a, const Tensor& b);        // same shape
Tensor mul(const Tensor& a, const Tensor& b);        // elementwise, same shape
Tensor scale(const Tensor& x, float c);
Tensor add_bias_rows(const Tensor& x, const Tensor& bias);  // (m,n) + (n)
Tensor sum(const Tensor& x);                                // -> scalar
Tensor mean_rows(const Tensor& x);                          // (m,n) -> (1,n)
Tensor gelu(const Tensor& x);                               // tanh approximation
Tensor softmax_rows(const Tensor& x);
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, float eps);
Tensor causal_mask(const Tensor& scores);  // (t,t); adds -1e30 above the diagonal
Tensor embedding_rows(const Tensor& table, std::span<const int> ids);
Tensor slice_cols(const Tensor& x, int col0, int col1);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor cross_entropy_next_token(const Tensor& logits, std::span<const int> targets);

/// Central-difference gradient oracle; evaluates f 2*size(x) times with
/// no tape active. Test-side counterpart to Tape::backward.
Tensor finite_difference_grad(const std::function<float(const Tensor&)>& f,
                              const Tensor& x, float eps);

}  // namespace ftlab

#include "ftlab/tensor.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace ftlab {

namespace {

using MatMap = Eigen::Map<Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

std::size_t element_count(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    return n;
}

void check_shape(const std::vector<int>& shape) {
    if (shape.empty() || shape.size() > 3)
        throw DimensionError("tensor rank must be 1..3, got " + Tensor::shape_string(shape));
    for (int d : shape)
        if (d <= 0) throw DimensionError("non-positive extent in shape " + Tensor::shape_string(shape));
}

// Treat rank-1 (n) as a 1xn row and rank-2 as-is; rank-3 is rejected by
// the matrix kernels.
std::pair<int, int> as_matrix(const Tensor& t, const char* op) {
    const auto& s = t.shape();
    if (s.size() == 1) return {1, s[0]};
    if (s.size() == 2) return {s[0], s[1]};
    throw DimensionError(std::string(op) + ": expected a matrix, got shape " +
                         Tensor::shape_string(s));
}

bool want_grad(std::initializer_list<const Tensor*> inputs) {
    for (const Tensor* t : inputs)
        if (t->requires_grad()) return true;
    return false;
}

void maybe_record(Tensor& out, std::initializer_list<const Tensor*> inputs,
                  std::function<void()> step) {
    if (!want_grad(inputs)) return;
    out.set_requires_grad(true);
    if (Tape* t = Tape::active()) t->record(std::move(step));
}

}  // namespace

// --- Tensor ----------------------------------------------------------------

Tensor::Tensor(std::vector<int> shape) {
    check_shape(shape);
    s_ = std::make_shared<Storage>();
    s_->value.assign(element_count(shape), 0.0f);
    s_->shape = std::move(shape);
}

Tensor::Storage& Tensor::st() {
    if (!s_) throw ContractError("use of an undefined tensor");
    return *s_;
}
const Tensor::Storage& Tensor::st() const {
    if (!s_) throw ContractError("use of an undefined tensor");
    return *s_;
}

Tensor Tensor::zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

Tensor Tensor::full(std::vector<int> shape, float value) {
    Tensor t(std::move(shape));
    std::fill(t.values().begin(), t.values().end(), value);
    return t;
}

Tensor Tensor::from_values(std::vector<int> shape, std::vector<float> values) {
    check_shape(shape);
    if (element_count(shape) != values.size())
        throw DimensionError("value count " + std::to_string(values.size()) +
                             " does not fill shape " + shape_string(shape));
    Tensor t(std::move(shape));
    std::copy(values.begin(), values.end(), t.values().begin());
    return t;
}

Tensor Tensor::randn(std::vector<int> shape, float stddev, std::mt19937& rng) {
    Tensor t(std::move(shape));
    std::normal_distribution<float> dist(0.0f, stddev);
    for (float& v : t.values()) v = dist(rng);
    return t;
}

Tensor Tensor::scalar(float value) { return from_values({1}, {value}); }

const std::vector<int>& Tensor::shape() const { return st().shape; }
int Tensor::rank() const { return static_cast<int>(st().shape.size()); }
int Tensor::dim(int i) const { return st().shape.at(static_cast<std::size_t>(i)); }
std::size_t Tensor::size() const { return st().value.size(); }

std::span<float> Tensor::values() { return st().value; }
std::span<const float> Tensor::values() const { return st().value; }

float Tensor::item() const {
    if (size() != 1) throw ContractError("item() on non-scalar tensor of shape " +
                                         shape_string(shape()));
    return st().value[0];
}

bool Tensor::requires_grad() const { return s_ && s_->requires_grad; }
Tensor& Tensor::set_requires_grad(bool on) {
    st().requires_grad = on;
    return *this;
}

std::span<float> Tensor::grad() {
    Storage& s = st();
    if (s.grad.size() != s.value.size()) s.grad.assign(s.value.size(), 0.0f);
    return s.grad;
}

bool Tensor::has_grad() const { return s_ && s_->grad.size() == s_->value.size(); }

void Tensor::zero_grad() {
    if (s_) s_->grad.assign(s_->value.size(), 0.0f);
}

Tensor Tensor::clone() const {
    Tensor t(st().shape);
    std::copy(values().begin(), values().end(), t.values().begin());
    return t;
}

std::string Tensor::shape_string(const std::vector<int>& shape) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << ')';
    return os.str();
}

// --- Tape ------------------------------------------------------------------

namespace {
thread_local Tape* g_active_tape = nullptr;
}

Tape::Tape() : prev_(g_active_tape) { g_active_tape = this; }
Tape::~Tape() { g_active_tape = prev_; }
Tape* Tape::active() { return g_active_tape; }

void Tape::record(std::function<void()> step) { steps_.push_back(std::move(step)); }

void Tape::backward(Tensor loss) {
    if (!loss.is_scalar())
        throw ContractError("backward() requires a scalar loss, got shape " +
                            Tensor::shape_string(loss.shape()));
    auto g = loss.grad();
    g[0] += 1.0f;
    for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) (*it)();
}

// --- kernels ---------------------------------------------------------------

namespace {

Tensor matmul_impl(const Tensor& a, const Tensor& b, bool transpose_b, const char* name) {
    auto [m, k] = as_matrix(a, name);
    auto [br, bc] = as_matrix(b, name);
    int kb = transpose_b ? bc : br;
    int n = transpose_b ? br : bc;
    if (k != kb)
        throw DimensionError(std::string(name) + ": inner extents differ, " +
                             Tensor::shape_string(a.shape()) + " vs " +
                             Tensor::shape_string(b.shape()));
    Tensor out({m, n});
    {
        ConstMatMap A(a.values().data(), m, k);
        ConstMatMap B(b.values().data(), br, bc);
        MatMap C(out.values().data(), m, n);
        if (transpose_b)
            C.noalias() = A * B.transpose();
        else
            C.noalias() = A * B;
    }
    Tensor av = a, bv = b;  // shallow handles for the closure
    maybe_record(out, {&a, &b}, [av, bv, out, m, k, n, br, bc, transpose_b]() mutable {
        ConstMatMap dC(out.grad().data(), m, n);
        ConstMatMap A(av.values().data(), m, k);
        ConstMatMap B(bv.values().data(), br, bc);
        if (av.requires_grad()) {
            MatMap dA(av.grad().data(), m, k);
            if (transpose_b)
                dA.noalias() += dC * B;  // dC (m,n) * B (n,k)
            else
                dA.noalias() += dC * B.transpose();
        }
        if (bv.requires_grad()) {
            MatMap dB(bv.grad().data(), br, bc);
            if (transpose_b)
                dB.noalias() += dC.transpose() * A;  // (n,m)*(m,k)
            else
                dB.noalias() += A.transpose() * dC;
        }
    });
    return out;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) { return matmul_impl(a, b, false, "matmul"); }
Tensor matmul_nt(const Tensor& a, const Tensor& b) { return matmul_impl(a, b, true, "matmul_nt"); }

Tensor add(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        throw DimensionError("add: shapes differ, " + Tensor::shape_string(a.shape()) + " vs " +
                             Tensor::shape_string(b.shape()));
    Tensor out(a.shape());
    auto av = a.values(), bv = b.values();
    auto ov = out.values();
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] + bv[i];
    Tensor ah = a, bh = b;
    maybe_record(out, {&a, &b}, [ah, bh, out]() mutable {
        auto g = out.grad();
        if (ah.requires_grad()) {
            auto ga = ah.grad();
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (bh.requires_grad()) {
            auto gb = bh.grad();
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
        }
    });
    return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        throw DimensionError("mul: shapes differ, " + Tensor::shape_string(a.shape()) + " vs " +
                             Tensor::shape_string(b.shape()));
    Tensor out(a.shape());
    auto av = a.values(), bv = b.values();
    auto ov = out.values();
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * bv[i];
    Tensor ah = a, bh = b;
    maybe_record(out, {&a, &b}, [ah, bh, out]() mutable {
        auto g = out.grad();
        auto av2 = ah.values();
        auto bv2 = bh.values();
        if (ah.requires_grad()) {
            auto ga = ah.grad();
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv2[i];
        }
        if (bh.requires_grad()) {
            auto gb = bh.grad();
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av2[i];
        }
    });
    return out;
}

Tensor scale(const Tensor& x, float c) {
    Tensor out(x.shape());
    auto xv = x.values();
    auto ov = out.values();
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = xv[i] * c;
    Tensor xh = x;
    maybe_record(out, {&x}, [xh, out, c]() mutable {
        auto g = out.grad();
        auto gx = xh.grad();
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * c;
    });
    return out;
}

Tensor add_bias_rows(const Tensor& x, const Tensor& bias) {
    auto [m, n] = as_matrix(x, "add_bias_rows");
    if (bias.rank() != 1 || bias.dim(0) != n)
        throw DimensionError("add_bias_rows: bias " + Tensor::shape_string(bias.shape()) +
                             " does not match row width of " + Tensor::shape_string(x.shape()));
    Tensor out(x.shape());
    auto xv = x.values();
    auto bv = bias.values();
    auto ov = out.values();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) ov[i * n + j] = xv[i * n + j] + bv[j];
    Tensor xh = x, bh = bias;
    maybe_record(out, {&x, &bias}, [xh, bh, out, m, n]() mutable {
        auto g = out.grad();
        if (xh.requires_grad()) {
            auto gx = xh.grad();
            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
        }
        if (bh.requires_grad()) {
            auto gb = bh.grad();
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) gb[j] += g[i * n + j];
        }
    });
    return out;
}

Tensor sum(const Tensor& x) {
    auto xv = x.values();
    float total = std::accumulate(xv.begin(), xv.end(), 0.0f);
    Tensor out = Tensor::scalar(total);
    Tensor xh = x;
    maybe_record(out, {&x}, [xh, out]() mutable {
        float g = out.grad()[0];
        auto gx = xh.grad();
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g;
    });
    return out;
}

Tensor mean_rows(const Tensor& x) {
    auto [m, n] = as_matrix(x, "mean_rows");
    Tensor out({1, n});
    auto xv = x.values();
    auto ov = out.values();
    for (int j = 0; j < n; ++j) {
        float s = 0.0f;
        for (int i = 0; i < m; ++i) s += xv[i * n + j];
        ov[j] = s / static_cast<float>(m);
    }
    Tensor xh = x;
    maybe_record(out, {&x}, [xh, out, m, n]() mutable {
        auto g = out.grad();
        auto gx = xh.grad();
        float inv = 1.0f / static_cast<float>(m);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) gx[i * n + j] += g[j] * inv;
    });
    return out;
}

Tensor gelu(const Tensor& x) {
    constexpr float kRoot2OverPi = 0.7978845608028654f;
    constexpr float kCubic = 0.044715f;
    Tensor out(x.shape());
    auto xv = x.values();
    auto ov = out.values();
    for (std::size_t i = 0; i < ov.size(); ++i) {
        float v = xv[i];
        float u = kRoot2OverPi * (v + kCubic * v * v * v);
        ov[i] = 0.5f * v * (1.0f + std::tanh(u));
    }
    Tensor xh = x;
    maybe_record(out, {&x}, [xh, out]() mutable {
        auto g = out.grad();
        auto xv2 = xh.values();
        auto gx = xh.grad();
        for (std::size_t i = 0; i < g.size(); ++i) {
            float v = xv2[i];
            float u = kRoot2OverPi * (v + kCubic * v * v * v);
            float t = std::tanh(u);
            float du = kRoot2OverPi * (1.0f + 3.0f * kCubic * v * v);
            float d = 0.5f * (1.0f + t) + 0.5f * v * (1.0f - t * t) * du;
            gx[i] += g[i] * d;
        }
    });
    return out;
}

Tensor softmax_rows(const Tensor& x) {
    auto [m, n] = as_matrix(x, "softmax_rows");
    Tensor out(x.shape());
    auto xv = x.values();
    auto ov = out.values();
    for (int i = 0; i < m; ++i) {
        const float* row = xv.data() + static_cast<std::size_t>(i) * n;
        float mx = *std::max_element(row, row + n);
        float denom = 0.0f;
        for (int j = 0; j < n; ++j) {
            float e = std::exp(row[j] - mx);
            ov[i * n + j] = e;
            denom += e;
        }
        for (int j = 0; j < n; ++j) ov[i * n + j] /= denom;
    }
    Tensor xh = x;
    maybe_record(out, {&x}, [xh, out, m, n]() mutable {
        auto g = out.grad();
        auto y = out.values();
        auto gx = xh.grad();
        for (int i = 0; i < m; ++i) {
            float dot = 0.0f;
            for (int j = 0; j < n; ++j) dot += g[i * n + j] * y[i * n + j];
            for (int j = 0; j < n; ++j)
                gx[i * n + j] += y[i * n + j] * (g[i * n + j] - dot);
        }
    });
    return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, float eps) {
    if (eps <= 0.0f) throw ContractError("layer_norm: eps must be positive");
    auto [m, n] = as_matrix(x, "layer_norm");
    if (gain.rank() != 1 || gain.dim(0) != n || bias.rank() != 1 || bias.dim(0) != n)
        throw DimensionError("layer_norm: gain/bias must have shape (" + std::to_string(n) + ")");
    Tensor out(x.shape());
    // normalized rows saved for the backward rule
    std::vector<float> xhat(static_cast<std::size_t>(m) * n);
    std::vector<float> inv_std(static_cast<std::size_t>(m));
    auto xv = x.values();
    auto gv = gain.values();
    auto bv = bias.values();
    auto ov = out.values();
    for (int i = 0; i < m; ++i) {
        const float* row = xv.data() + static_cast<std::size_t>(i) * n;
        float mean = 0.0f;
        for (int j = 0; j < n; ++j) mean += row[j];
        mean /= static_cast<float>(n);
        float var = 0.0f;
        for (int j = 0; j < n; ++j) {
            float d = row[j] - mean;
            var += d * d;
        }
        var /= static_cast<float>(n);
        float is = 1.0f / std::sqrt(var + eps);
        inv_std[static_cast<std::size_t>(i)] = is;
        for (int j = 0; j < n; ++j) {
            float h = (row[j] - mean) * is;
            xhat[static_cast<std::size_t>(i) * n + j] = h;
            ov[i * n + j] = gv[j] * h + bv[j];
        }
    }
    Tensor xh = x, gh = gain, bh = bias;
    maybe_record(out, {&x, &gain, &bias},
                 [xh, gh, bh, out, m, n, xhat = std::move(xhat),
                  inv_std = std::move(inv_std)]() mutable {
        auto g = out.grad();
        auto gv2 = gh.values();
        if (gh.requires_grad()) {
            auto gg = gh.grad();
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j)
                    gg[j] += g[i * n + j] * xhat[static_cast<std::size_t>(i) * n + j];
        }
        if (bh.requires_grad()) {
            auto gb = bh.grad();
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) gb[j] += g[i * n + j];
        }
        if (xh.requires_grad()) {
            auto gx = xh.grad();
            for (int i = 0; i < m; ++i) {
                float mean_t = 0.0f, mean_th = 0.0f;
                for (int j = 0; j < n; ++j) {
                    float t = g[i * n + j] * gv2[j];
                    mean_t += t;
                    mean_th += t * xhat[static_cast<std::size_t>(i) * n + j];
                }
                mean_t /= static_cast<float>(n);
                mean_th /= static_cast<float>(n);
                float is = inv_std[static_cast<std::size_t>(i)];
                for (int j = 0; j < n; ++j) {
                    float t = g[i * n + j] * gv2[j];
                    float h = xhat[static_cast<std::size_t>(i) * n + j];
                    gx[i * n + j] += is * (t - mean_t - h * mean_th);
                }
            }
        }
    });
    return out;
}

Tensor causal_mask(const Tensor& scores) {
    auto [m, n] = as_matrix(scores, "causal_mask");
    if (m != n)
        throw DimensionError("causal_mask: expected square scores, got " +
                             Tensor::shape_string(scores.shape()));
    constexpr float kNegBig = -1e30f;
    Tensor out(scores.shape());
    auto xv = scores.values();
    auto ov = out.values();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) ov[i * n + j] = (j > i) ? kNegBig : xv[i * n + j];
    Tensor xh = scores;
    maybe_record(out, {&scores}, [xh, out, m, n]() mutable {
        auto g = out.grad();
        auto gx = xh.grad();
        for (int i = 0; i < m; ++i)
            for (int j = 0; j <= i; ++j) gx[i * n + j] += g[i * n + j];
    });
    return out;
}

Tensor embedding_rows(const Tensor& table, std::span<const int> ids) {
    auto [v, d] = as_matrix(table, "embedding_rows");
    if (ids.empty()) throw ContractError("embedding_rows: empty id sequence");
    for (std::size_t i = 0; i < ids.size(); ++i)
        if (ids[i] < 0 || ids[i] >= v)
            throw IndexError("embedding_rows: id " + std::to_string(ids[i]) + " at position " +
                             std::to_string(i) + " outside table of " + std::to_string(v) + " rows");
    int t = static_cast<int>(ids.size());
    Tensor out({t, d});
    auto tv = table.values();
    auto ov = out.values();
    for (int i = 0; i < t; ++i)
        std::copy_n(tv.data() + static_cast<std::size_t>(ids[i]) * d, d, ov.data() + static_cast<std::size_t>(i) * d);
    Tensor th = table;
    std::vector<int> ids_copy(ids.begin(), ids.end());
    maybe_record(out, {&table}, [th, out, d, ids_copy = std::move(ids_copy)]() mutable {
        auto g = out.grad();
        auto gt = th.grad();
        for (std::size_t i = 0; i < ids_copy.size(); ++i)
            for (int j = 0; j < d; ++j)
                gt[static_cast<std::size_t>(ids_copy[i]) * d + j] += g[i * d + j];
    });
    return out;
}

Tensor slice_cols(const Tensor& x, int col0, int col1) {
    auto [m, n] = as_matrix(x, "slice_cols");
    if (col0 < 0 || col1 > n || col0 >= col1)
        throw IndexError("slice_cols: range [" + std::to_string(col0) + "," + std::to_string(col1) +
                         ") invalid for width " + std::to_string(n));
    int w = col1 - col0;
    Tensor out({m, w});
    auto xv = x.values();
    auto ov = out.values();
    for (int i = 0; i < m; ++i)
        std::copy_n(xv.data() + static_cast<std::size_t>(i) * n + col0, w,
                    ov.data() + static_cast<std::size_t>(i) * w);
    Tensor xh = x;
    maybe_record(out, {&x}, [xh, out, m, n, w, col0]() mutable {
        auto g = out.grad();
        auto gx = xh.grad();
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < w; ++j) gx[i * n + col0 + j] += g[i * w + j];
    });
    return out;
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ContractError("concat_cols: no parts");
    int m = as_matrix(parts[0], "concat_cols").first;
    int total = 0;
    for (const Tensor& p : parts) {
        auto [pm, pn] = as_matrix(p, "concat_cols");
        if (pm != m)
            throw DimensionError("concat_cols: row counts differ, " +
                                 Tensor::shape_string(parts[0].shape()) + " vs " +
                                 Tensor::shape_string(p.shape()));
        total += pn;
    }
    Tensor out({m, total});
    auto ov = out.values();
    int off = 0;
    for (const Tensor& p : parts) {
        int pn = p.shape().size() == 1 ? p.dim(0) : p.dim(1);
        auto pv = p.values();
        for (int i = 0; i < m; ++i)
            std::copy_n(pv.data() + static_cast<std::size_t>(i) * pn, pn,
                        ov.data() + static_cast<std::size_t>(i) * total + off);
        off += pn;
    }
    bool grad = false;
    for (const Tensor& p : parts) grad = grad || p.requires_grad();
    if (grad) {
        out.set_requires_grad(true);
        if (Tape* tape = Tape::active()) {
            std::vector<Tensor> handles = parts;
            tape->record([handles, out, m, total]() mutable {
                auto g = out.grad();
                int off2 = 0;
                for (Tensor& p : handles) {
                    int pn = p.shape().size() == 1 ? p.dim(0) : p.dim(1);
                    if (p.requires_grad()) {
                        auto gp = p.grad();
                        for (int i = 0; i < m; ++i)
                            for (int j = 0; j < pn; ++j)
                                gp[i * pn + j] += g[i * total + off2 + j];
                    }
                    off2 += pn;
                }
            });
        }
    }
    return out;
}

Tensor cross_entropy_next_token(const Tensor& logits, std::span<const int> targets) {
    auto [t, v] = as_matrix(logits, "cross_entropy_next_token");
    if (static_cast<int>(targets.size()) != t)
        throw DimensionError("cross_entropy_next_token: " + std::to_string(targets.size()) +
                             " targets for " + std::to_string(t) + " logit rows");
    for (std::size_t i = 0; i < targets.size(); ++i)
        if (targets[i] < 0 || targets[i] >= v)
            throw IndexError("cross_entropy_next_token: target id " + std::to_string(targets[i]) +
                             " at position " + std::to_string(i) + " outside vocabulary of size " +
                             std::to_string(v));
    auto xv = logits.values();
    // row-wise log-sum-exp with max subtraction
    std::vector<float> lse(static_cast<std::size_t>(t));
    double total = 0.0;
    for (int i = 0; i < t; ++i) {
        const float* row = xv.data() + static_cast<std::size_t>(i) * v;
        float mx = *std::max_element(row, row + v);
        float denom = 0.0f;
        for (int j = 0; j < v; ++j) denom += std::exp(row[j] - mx);
        lse[static_cast<std::size_t>(i)] = mx + std::log(denom);
        total += lse[static_cast<std::size_t>(i)] - row[targets[static_cast<std::size_t>(i)]];
    }
    Tensor out = Tensor::scalar(static_cast<float>(total / t));
    Tensor lh = logits;
    std::vector<int> tg(targets.begin(), targets.end());
    maybe_record(out, {&logits}, [lh, out, t, v, tg = std::move(tg), lse = std::move(lse)]() mutable {
        float g = out.grad()[0];
        auto xv2 = lh.values();
        auto gx = lh.grad();
        float inv_t = 1.0f / static_cast<float>(t);
        for (int i = 0; i < t; ++i) {
            const float* row = xv2.data() + static_cast<std::size_t>(i) * v;
            float l = lse[static_cast<std::size_t>(i)];
            for (int j = 0; j < v; ++j) {
                float p = std::exp(row[j] - l);
                float onehot = (j == tg[static_cast<std::size_t>(i)]) ? 1.0f : 0.0f;
                gx[i * v + j] += g * inv_t * (p - onehot);
            }
        }
    });
    return out;
}

Tensor finite_difference_grad(const std::function<float(const Tensor&)>& f, const Tensor& x,
                              float eps) {
    if (eps <= 0.0f) throw ContractError("finite_difference_grad: eps must be positive");
    Tensor probe = x.clone();
    Tensor out(x.shape());
    auto pv = probe.values();
    auto ov = out.values();
    for (std::size_t i = 0; i < pv.size(); ++i) {
        float saved = pv[i];
        pv[i] = saved + eps;
        float up = f(probe);
        pv[i] = saved - eps;
        float down = f(probe);
        pv[i] = saved;
        ov[i] = (up - down) / (2.0f * eps);
    }
    return out;
}

}  // namespace ftlab

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vecmec/rng.hpp"

namespace vecmec::neural {

// Row-major dense matrix of doubles.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}

    double* row(int i) { return a.data() + static_cast<size_t>(i) * cols; }
    const double* row(int i) const { return a.data() + static_cast<size_t>(i) * cols; }
    double& at(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
    double at(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }
};

// C = A * B (+ C when accumulate). Plain loops; at -O3 this saturates the
// core for the batch sizes used here, so no BLAS dependency.
void gemm_nn(const Matrix& A, const Matrix& B, Matrix& C, bool accumulate = false);
// C = A^T * B
void gemm_tn(const Matrix& A, const Matrix& B, Matrix& C, bool accumulate = false);
// C = A * B^T
void gemm_nt(const Matrix& A, const Matrix& B, Matrix& C, bool accumulate = false);

enum class Activation { sigmoid, relu, linear };

struct LayerSpec {
    int fan_in = 0;
    int fan_out = 0;
    Activation act = Activation::linear;
};

// Fully connected feed-forward net. Parameters live in one flat vector
// (per layer: weights (fan_in x fan_out) row-major, then biases) so the
// optimizer, soft updates, and checkpoints all work on a single view.
class DenseNet {
public:
    DenseNet() = default;
    DenseNet(std::vector<LayerSpec> layers, Rng& init_rng);

    // Zero-initialized parameters (checkpoint loading, tests).
    static DenseNet with_layers(std::vector<LayerSpec> layers);

    int input_dim() const { return layers_.front().fan_in; }
    int output_dim() const { return layers_.back().fan_out; }
    int param_count() const { return static_cast<int>(params_.size()); }
    const std::vector<LayerSpec>& layers() const { return layers_; }
    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }

    std::vector<double> forward(std::span<const double> input) const;

    struct Cache {
        Matrix input;
        std::vector<Matrix> act;  // post-activation per layer; act.back() is the output
    };
    const Matrix& forward_batch(const Matrix& input, Cache& cache) const;

    // Exact reverse-mode gradients of a scalar loss, given dLoss/dOutput.
    // grad is accumulated (resize+zero it first or reuse across samples);
    // input_grad, when non-null, receives dLoss/dInput.
    void backward_batch(const Cache& cache, const Matrix& output_grad, std::vector<double>& grad,
                        Matrix* input_grad = nullptr) const;

    // dLoss/dInput only; parameter gradients are skipped.
    Matrix backward_input_only(const Cache& cache, const Matrix& output_grad) const;

private:
    struct Offsets {
        size_t w = 0;
        size_t b = 0;
    };
    std::vector<LayerSpec> layers_;
    std::vector<Offsets> offs_;
    std::vector<double> params_;

    void index_params();
};

// Critic with separate encoders: the joint state passes two hidden layers and
// the joint action one, the encodings are concatenated, and two 256-unit ReLU
// layers feed a scalar linear output.
class CriticNet {
public:
    CriticNet() = default;
    CriticNet(int state_dim, int action_dim, int branch_width, int head_width, Rng& init_rng);

    int state_dim() const { return state_net_.input_dim(); }
    int action_dim() const { return action_net_.input_dim(); }
    int param_count() const;

    struct Cache {
        DenseNet::Cache state, action, head;
        Matrix concat;
    };
    // Returns Q values, one row per sample (m x 1).
    const Matrix& forward_batch(const Matrix& state, const Matrix& action, Cache& cache) const;
    double forward_one(std::span<const double> state, std::span<const double> action) const;

    struct Grads {
        std::vector<double> state, action, head;
        void resize_zero(const CriticNet& net);
    };
    void backward_batch(const Cache& cache, const Matrix& output_grad, Grads& grads,
                        Matrix* state_grad = nullptr, Matrix* action_grad = nullptr) const;

    // dLoss/dActionInput only, for the actor update through a frozen critic.
    Matrix action_input_grad(const Cache& cache, const Matrix& output_grad) const;

    DenseNet& state_net() { return state_net_; }
    DenseNet& action_net() { return action_net_; }
    DenseNet& head_net() { return head_net_; }
    const DenseNet& state_net() const { return state_net_; }
    const DenseNet& action_net() const { return action_net_; }
    const DenseNet& head_net() const { return head_net_; }

private:
    DenseNet state_net_;   // state_dim -> bw -> bw
    DenseNet action_net_;  // action_dim -> bw
    DenseNet head_net_;    // 2*bw -> head -> head -> 1
};

// Adaptive-moment first-order optimizer.
class Adam {
public:
    Adam() = default;
    Adam(int param_count, double learning_rate);

    void step(std::vector<double>& params, const std::vector<double>& grad);
    int64_t steps() const { return t_; }
    double learning_rate() const { return lr_; }

private:
    double lr_ = 1e-3;
    double beta1_ = 0.9;
    double beta2_ = 0.999;
    double eps_ = 1e-8;
    int64_t t_ = 0;
    std::vector<double> m_, v_;
};

// target <- tau * main + (1 - tau) * target, elementwise.
void soft_update(std::vector<double>& target, const std::vector<double>& main, double tau);

// Checkpoints: "vecmec-ckpt-v1" header line, a JSON meta line, then raw
// little-endian doubles.
void save_dense_checkpoint(const std::string& path, const DenseNet& net);
DenseNet load_dense_checkpoint(const std::string& path);
void save_critic_checkpoint(const std::string& path, const CriticNet& net);
CriticNet load_critic_checkpoint(const std::string& path);

}  // namespace vecmec::neural

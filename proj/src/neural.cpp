#include "vecmec/neural.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace vecmec::neural {

void gemm_nn(const Matrix& A, const Matrix& B, Matrix& C, bool accumulate) {
    if (A.cols != B.rows) throw std::logic_error("gemm_nn: shape mismatch");
    C.rows = A.rows;
    C.cols = B.cols;
    C.a.resize(static_cast<size_t>(C.rows) * C.cols);
    if (!accumulate) std::fill(C.a.begin(), C.a.end(), 0.0);
    for (int i = 0; i < A.rows; ++i) {
        double* c = C.row(i);
        const double* ar = A.row(i);
        for (int p = 0; p < A.cols; ++p) {
            const double a = ar[p];
            const double* b = B.row(p);
            for (int j = 0; j < B.cols; ++j) c[j] += a * b[j];
        }
    }
}

void gemm_tn(const Matrix& A, const Matrix& B, Matrix& C, bool accumulate) {
    if (A.rows != B.rows) throw std::logic_error("gemm_tn: shape mismatch");
    C.rows = A.cols;
    C.cols = B.cols;
    C.a.resize(static_cast<size_t>(C.rows) * C.cols);
    if (!accumulate) std::fill(C.a.begin(), C.a.end(), 0.0);
    for (int i = 0; i < A.rows; ++i) {
        const double* ar = A.row(i);
        const double* br = B.row(i);
        for (int p = 0; p < A.cols; ++p) {
            const double a = ar[p];
            double* c = C.row(p);
            for (int j = 0; j < B.cols; ++j) c[j] += a * br[j];
        }
    }
}

void gemm_nt(const Matrix& A, const Matrix& B, Matrix& C, bool accumulate) {
    if (A.cols != B.cols) throw std::logic_error("gemm_nt: shape mismatch");
    C.rows = A.rows;
    C.cols = B.rows;
    C.a.resize(static_cast<size_t>(C.rows) * C.cols);
    if (!accumulate) std::fill(C.a.begin(), C.a.end(), 0.0);
    for (int i = 0; i < A.rows; ++i) {
        const double* ar = A.row(i);
        double* c = C.row(i);
        for (int j = 0; j < B.rows; ++j) {
            const double* br = B.row(j);
            double dot = 0.0;
            for (int p = 0; p < A.cols; ++p) dot += ar[p] * br[p];
            c[j] += dot;
        }
    }
}

namespace {

inline double activate(double z, Activation act) {
    switch (act) {
        case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-z));
        case Activation::relu: return z > 0.0 ? z : 0.0;
        case Activation::linear: return z;
    }
    return z;
}

// Derivative expressed through the post-activation value.
inline double activate_grad(double a, Activation act) {
    switch (act) {
        case Activation::sigmoid: return a * (1.0 - a);
        case Activation::relu: return a > 0.0 ? 1.0 : 0.0;
        case Activation::linear: return 1.0;
    }
    return 1.0;
}

const char* act_name(Activation a) {
    switch (a) {
        case Activation::sigmoid: return "sigmoid";
        case Activation::relu: return "relu";
        case Activation::linear: return "linear";
    }
    return "linear";
}

Activation act_from_name(const std::string& s) {
    if (s == "sigmoid") return Activation::sigmoid;
    if (s == "relu") return Activation::relu;
    if (s == "linear") return Activation::linear;
    throw std::runtime_error("unknown activation in checkpoint: " + s);
}

}  // namespace

DenseNet::DenseNet(std::vector<LayerSpec> layers, Rng& init_rng) : layers_(std::move(layers)) {
    if (layers_.empty()) throw std::invalid_argument("DenseNet: no layers");
    for (size_t l = 1; l < layers_.size(); ++l)
        if (layers_[l].fan_in != layers_[l - 1].fan_out)
            throw std::invalid_argument("DenseNet: layer dimensions do not chain");
    index_params();
    for (size_t l = 0; l < layers_.size(); ++l) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(layers_[l].fan_in));
        const size_t n = static_cast<size_t>(layers_[l].fan_in) * layers_[l].fan_out +
                         layers_[l].fan_out;
        for (size_t k = 0; k < n; ++k) params_[offs_[l].w + k] = init_rng.uniform(-scale, scale);
    }
}

DenseNet DenseNet::with_layers(std::vector<LayerSpec> layers) {
    DenseNet net;
    net.layers_ = std::move(layers);
    if (net.layers_.empty()) throw std::invalid_argument("DenseNet: no layers");
    net.index_params();
    return net;
}

void DenseNet::index_params() {
    offs_.resize(layers_.size());
    size_t cursor = 0;
    for (size_t l = 0; l < layers_.size(); ++l) {
        offs_[l].w = cursor;
        cursor += static_cast<size_t>(layers_[l].fan_in) * layers_[l].fan_out;
        offs_[l].b = cursor;
        cursor += layers_[l].fan_out;
    }
    params_.assign(cursor, 0.0);
}

std::vector<double> DenseNet::forward(std::span<const double> input) const {
    if (static_cast<int>(input.size()) != input_dim())
        throw std::logic_error("DenseNet::forward: input size mismatch");
    std::vector<double> cur(input.begin(), input.end());
    std::vector<double> next;
    for (size_t l = 0; l < layers_.size(); ++l) {
        const auto& spec = layers_[l];
        next.assign(spec.fan_out, 0.0);
        const double* W = params_.data() + offs_[l].w;
        const double* b = params_.data() + offs_[l].b;
        for (int j = 0; j < spec.fan_out; ++j) next[j] = b[j];
        for (int i = 0; i < spec.fan_in; ++i) {
            const double x = cur[i];
            const double* wr = W + static_cast<size_t>(i) * spec.fan_out;
            for (int j = 0; j < spec.fan_out; ++j) next[j] += x * wr[j];
        }
        for (int j = 0; j < spec.fan_out; ++j) next[j] = activate(next[j], spec.act);
        cur.swap(next);
    }
    return cur;
}

namespace {

// C = A * W for a raw row-major weight block (fan_in x fan_out).
void gemm_nn_raw(const Matrix& A, const double* W, int fan_in, int fan_out, Matrix& C) {
    if (A.cols != fan_in) throw std::logic_error("gemm_nn_raw: shape mismatch");
    C.rows = A.rows;
    C.cols = fan_out;
    C.a.assign(static_cast<size_t>(C.rows) * C.cols, 0.0);
    for (int i = 0; i < A.rows; ++i) {
        double* c = C.row(i);
        const double* ar = A.row(i);
        for (int p = 0; p < fan_in; ++p) {
            const double a = ar[p];
            const double* w = W + static_cast<size_t>(p) * fan_out;
            for (int j = 0; j < fan_out; ++j) c[j] += a * w[j];
        }
    }
}

// C = A * W^T for the same raw weight block.
void gemm_nt_raw(const Matrix& A, const double* W, int fan_in, int fan_out, Matrix& C) {
    if (A.cols != fan_out) throw std::logic_error("gemm_nt_raw: shape mismatch");
    C.rows = A.rows;
    C.cols = fan_in;
    C.a.assign(static_cast<size_t>(C.rows) * C.cols, 0.0);
    for (int i = 0; i < A.rows; ++i) {
        const double* ar = A.row(i);
        double* c = C.row(i);
        for (int j = 0; j < fan_in; ++j) {
            const double* w = W + static_cast<size_t>(j) * fan_out;
            double dot = 0.0;
            for (int p = 0; p < fan_out; ++p) dot += ar[p] * w[p];
            c[j] = dot;
        }
    }
}

}  // namespace

const Matrix& DenseNet::forward_batch(const Matrix& input, Cache& cache) const {
    if (input.cols != input_dim()) throw std::logic_error("DenseNet::forward_batch: input size mismatch");
    cache.input = input;
    cache.act.resize(layers_.size());
    const Matrix* cur = &cache.input;
    for (size_t l = 0; l < layers_.size(); ++l) {
        const auto& spec = layers_[l];
        Matrix& out = cache.act[l];
        gemm_nn_raw(*cur, params_.data() + offs_[l].w, spec.fan_in, spec.fan_out, out);
        const double* b = params_.data() + offs_[l].b;
        for (int i = 0; i < out.rows; ++i) {
            double* r = out.row(i);
            for (int j = 0; j < spec.fan_out; ++j) r[j] = activate(r[j] + b[j], spec.act);
        }
        cur = &out;
    }
    return cache.act.back();
}

void DenseNet::backward_batch(const Cache& cache, const Matrix& output_grad,
                              std::vector<double>& grad, Matrix* input_grad) const {
    if (cache.act.size() != layers_.size())
        throw std::logic_error("DenseNet::backward_batch: no cached forward pass");
    if (output_grad.rows != cache.input.rows || output_grad.cols != output_dim())
        throw std::logic_error("DenseNet::backward_batch: output grad shape mismatch");
    grad.resize(params_.size());
    std::fill(grad.begin(), grad.end(), 0.0);

    Matrix delta = output_grad;
    Matrix prev_delta;
    for (int l = static_cast<int>(layers_.size()) - 1; l >= 0; --l) {
        const auto& spec = layers_[l];
        const Matrix& out = cache.act[l];
        for (int i = 0; i < delta.rows; ++i) {
            double* dr = delta.row(i);
            const double* ar = out.row(i);
            for (int j = 0; j < spec.fan_out; ++j) dr[j] *= activate_grad(ar[j], spec.act);
        }
        const Matrix& below = (l == 0) ? cache.input : cache.act[l - 1];
        // dW = below^T * delta
        Matrix dW;
        gemm_tn(below, delta, dW);
        std::copy(dW.a.begin(), dW.a.end(), grad.begin() + offs_[l].w);
        double* db = grad.data() + offs_[l].b;
        for (int i = 0; i < delta.rows; ++i) {
            const double* dr = delta.row(i);
            for (int j = 0; j < spec.fan_out; ++j) db[j] += dr[j];
        }
        if (l > 0 || input_grad != nullptr) {
            gemm_nt_raw(delta, params_.data() + offs_[l].w, spec.fan_in, spec.fan_out, prev_delta);
            std::swap(delta, prev_delta);
        }
    }
    if (input_grad != nullptr) *input_grad = delta;
}

Matrix DenseNet::backward_input_only(const Cache& cache, const Matrix& output_grad) const {
    if (cache.act.size() != layers_.size())
        throw std::logic_error("DenseNet::backward_input_only: no cached forward pass");
    Matrix delta = output_grad;
    Matrix prev_delta;
    for (int l = static_cast<int>(layers_.size()) - 1; l >= 0; --l) {
        const auto& spec = layers_[l];
        const Matrix& out = cache.act[l];
        for (int i = 0; i < delta.rows; ++i) {
            double* dr = delta.row(i);
            const double* ar = out.row(i);
            for (int j = 0; j < spec.fan_out; ++j) dr[j] *= activate_grad(ar[j], spec.act);
        }
        gemm_nt_raw(delta, params_.data() + offs_[l].w, spec.fan_in, spec.fan_out, prev_delta);
        std::swap(delta, prev_delta);
    }
    return delta;
}

Matrix CriticNet::action_input_grad(const Cache& cache, const Matrix& output_grad) const {
    Matrix d_concat = head_net_.backward_input_only(cache.head, output_grad);
    const int sw = cache.state.act.back().cols;
    const int aw = cache.action.act.back().cols;
    Matrix da(d_concat.rows, aw);
    for (int i = 0; i < d_concat.rows; ++i)
        std::memcpy(da.row(i), d_concat.row(i) + sw, sizeof(double) * aw);
    return action_net_.backward_input_only(cache.action, da);
}

int CriticNet::param_count() const {
    return state_net_.param_count() + action_net_.param_count() + head_net_.param_count();
}

CriticNet::CriticNet(int state_dim, int action_dim, int branch_width, int head_width,
                     Rng& init_rng) {
    state_net_ = DenseNet({{state_dim, branch_width, Activation::relu},
                           {branch_width, branch_width, Activation::relu}},
                          init_rng);
    action_net_ = DenseNet({{action_dim, branch_width, Activation::relu}}, init_rng);
    head_net_ = DenseNet({{2 * branch_width, head_width, Activation::relu},
                          {head_width, head_width, Activation::relu},
                          {head_width, 1, Activation::linear}},
                         init_rng);
}

const Matrix& CriticNet::forward_batch(const Matrix& state, const Matrix& action,
                                       Cache& cache) const {
    const Matrix& hs = state_net_.forward_batch(state, cache.state);
    const Matrix& ha = action_net_.forward_batch(action, cache.action);
    cache.concat = Matrix(state.rows, hs.cols + ha.cols);
    for (int i = 0; i < state.rows; ++i) {
        double* r = cache.concat.row(i);
        std::memcpy(r, hs.row(i), sizeof(double) * hs.cols);
        std::memcpy(r + hs.cols, ha.row(i), sizeof(double) * ha.cols);
    }
    return head_net_.forward_batch(cache.concat, cache.head);
}

double CriticNet::forward_one(std::span<const double> state, std::span<const double> action) const {
    const std::vector<double> hs = state_net_.forward(state);
    const std::vector<double> ha = action_net_.forward(action);
    std::vector<double> cat;
    cat.reserve(hs.size() + ha.size());
    cat.insert(cat.end(), hs.begin(), hs.end());
    cat.insert(cat.end(), ha.begin(), ha.end());
    return head_net_.forward(cat)[0];
}

void CriticNet::Grads::resize_zero(const CriticNet& net) {
    state.assign(net.state_net().param_count(), 0.0);
    action.assign(net.action_net().param_count(), 0.0);
    head.assign(net.head_net().param_count(), 0.0);
}

void CriticNet::backward_batch(const Cache& cache, const Matrix& output_grad, Grads& grads,
                               Matrix* state_grad, Matrix* action_grad) const {
    Matrix d_concat;
    head_net_.backward_batch(cache.head, output_grad, grads.head, &d_concat);
    const int sw = cache.state.act.back().cols;
    const int aw = cache.action.act.back().cols;
    Matrix ds(d_concat.rows, sw), da(d_concat.rows, aw);
    for (int i = 0; i < d_concat.rows; ++i) {
        const double* r = d_concat.row(i);
        std::memcpy(ds.row(i), r, sizeof(double) * sw);
        std::memcpy(da.row(i), r + sw, sizeof(double) * aw);
    }
    state_net_.backward_batch(cache.state, ds, grads.state, state_grad);
    action_net_.backward_batch(cache.action, da, grads.action, action_grad);
}

Adam::Adam(int param_count, double learning_rate)
    : lr_(learning_rate), m_(param_count, 0.0), v_(param_count, 0.0) {}

void Adam::step(std::vector<double>& params, const std::vector<double>& grad) {
    if (params.size() != m_.size() || grad.size() != m_.size())
        throw std::logic_error("Adam::step: shape mismatch");
    t_ += 1;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (size_t k = 0; k < params.size(); ++k) {
        m_[k] = beta1_ * m_[k] + (1.0 - beta1_) * grad[k];
        v_[k] = beta2_ * v_[k] + (1.0 - beta2_) * grad[k] * grad[k];
        const double mhat = m_[k] / bc1;
        const double vhat = v_[k] / bc2;
        params[k] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
}

void soft_update(std::vector<double>& target, const std::vector<double>& main, double tau) {
    if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("soft_update: tau outside (0,1)");
    if (target.size() != main.size()) throw std::logic_error("soft_update: shape mismatch");
    for (size_t k = 0; k < target.size(); ++k)
        target[k] = tau * main[k] + (1.0 - tau) * target[k];
}

namespace {

constexpr const char* kMagic = "vecmec-ckpt-v1";

nlohmann::json dense_meta(const DenseNet& net) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : net.layers())
        layers.push_back({{"in", l.fan_in}, {"out", l.fan_out}, {"act", act_name(l.act)}});
    return {{"type", "dense"}, {"layers", layers}};
}

void write_blob(std::ofstream& f, const std::vector<double>& v) {
    f.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<LayerSpec> layers_from_meta(const nlohmann::json& meta) {
    std::vector<LayerSpec> specs;
    for (const auto& l : meta.at("layers"))
        specs.push_back({l.at("in").get<int>(), l.at("out").get<int>(),
                         act_from_name(l.at("act").get<std::string>())});
    return specs;
}

void read_blob(std::ifstream& f, std::vector<double>& v) {
    f.read(reinterpret_cast<char*>(v.data()),
           static_cast<std::streamsize>(v.size() * sizeof(double)));
    if (!f) throw std::runtime_error("checkpoint truncated");
}

std::pair<std::ifstream, nlohmann::json> open_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
    std::string magic, meta_line;
    std::getline(f, magic);
    if (magic != kMagic) throw std::runtime_error("bad checkpoint header in " + path);
    std::getline(f, meta_line);
    return {std::move(f), nlohmann::json::parse(meta_line)};
}

}  // namespace

void save_dense_checkpoint(const std::string& path, const DenseNet& net) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write checkpoint: " + path);
    f << kMagic << "\n" << dense_meta(net).dump() << "\n";
    write_blob(f, net.params());
}

DenseNet load_dense_checkpoint(const std::string& path) {
    auto [f, meta] = open_checkpoint(path);
    if (meta.at("type") != "dense") throw std::runtime_error("not a dense checkpoint: " + path);
    DenseNet net = DenseNet::with_layers(layers_from_meta(meta));
    read_blob(f, net.params());
    return net;
}

void save_critic_checkpoint(const std::string& path, const CriticNet& net) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write checkpoint: " + path);
    nlohmann::json meta = {{"type", "critic"},
                           {"state", dense_meta(net.state_net())},
                           {"action", dense_meta(net.action_net())},
                           {"head", dense_meta(net.head_net())}};
    f << kMagic << "\n" << meta.dump() << "\n";
    write_blob(f, net.state_net().params());
    write_blob(f, net.action_net().params());
    write_blob(f, net.head_net().params());
}

CriticNet load_critic_checkpoint(const std::string& path) {
    auto [f, meta] = open_checkpoint(path);
    if (meta.at("type") != "critic") throw std::runtime_error("not a critic checkpoint: " + path);
    auto load_part = [&f](const nlohmann::json& part) {
        DenseNet net = DenseNet::with_layers(layers_from_meta(part));
        read_blob(f, net.params());
        return net;
    };
    CriticNet net;
    net.state_net() = load_part(meta.at("state"));
    net.action_net() = load_part(meta.at("action"));
    net.head_net() = load_part(meta.at("head"));
    return net;
}

}  // namespace vecmec::neural

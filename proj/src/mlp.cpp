#include "sacv/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sacv/errors.hpp"
#include "sacv/rng.hpp"

namespace sacv {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// log(1 + exp(x)) without overflow.
double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

struct LayerView {
    std::size_t w_offset; // row-major out x in
    std::size_t b_offset;
    std::size_t in;
    std::size_t out;
};

std::vector<LayerView> layer_views(const std::vector<std::size_t>& dims) {
    std::vector<LayerView> views;
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        LayerView v{offset, offset + dims[l] * dims[l + 1], dims[l], dims[l + 1]};
        offset = v.b_offset + v.out;
        views.push_back(v);
    }
    return views;
}

std::size_t param_count(const std::vector<std::size_t>& dims) {
    const auto views = layer_views(dims);
    if (views.empty()) return 0;
    return views.back().b_offset + views.back().out;
}

/// Forward pass for one row; activations[l] is the input of layer l,
/// activations.back() holds the output logit.
void forward_row(std::span<const double> x, const std::vector<double>& params,
                 const std::vector<LayerView>& views,
                 std::vector<std::vector<double>>& activations) {
    activations[0].assign(x.begin(), x.end());
    for (std::size_t l = 0; l < views.size(); ++l) {
        const auto& v = views[l];
        auto& out = activations[l + 1];
        out.assign(v.out, 0.0);
        const bool is_output = (l + 1 == views.size());
        for (std::size_t r = 0; r < v.out; ++r) {
            double acc = params[v.b_offset + r];
            const double* w = params.data() + v.w_offset + r * v.in;
            const auto& in = activations[l];
            for (std::size_t c = 0; c < v.in; ++c) acc += w[c] * in[c];
            out[r] = is_output ? acc : std::tanh(acc);
        }
    }
}

} // namespace

Mlp::Mlp(std::vector<std::size_t> layer_dims, std::vector<double> flat_params)
    : layer_dims_(std::move(layer_dims)), params_(std::move(flat_params)) {
    if (layer_dims_.size() < 2) throw ParameterError("Mlp: need at least input and output dims");
    if (layer_dims_.back() != 1) throw ParameterError("Mlp: output layer must have one unit");
    for (std::size_t d : layer_dims_) {
        if (d == 0) throw ParameterError("Mlp: zero-width layer");
    }
    if (params_.size() != param_count(layer_dims_)) {
        throw ParameterError("Mlp: parameter vector size mismatch");
    }
}

Mlp Mlp::init(std::size_t feature_dim, const std::vector<std::size_t>& hidden_sizes,
              std::uint64_t seed) {
    if (feature_dim == 0) throw ParameterError("Mlp: feature_dim must be >= 1");
    std::vector<std::size_t> dims;
    dims.push_back(feature_dim);
    dims.insert(dims.end(), hidden_sizes.begin(), hidden_sizes.end());
    dims.push_back(1);

    const auto views = layer_views(dims);
    std::vector<double> params(param_count(dims), 0.0);
    auto rng = make_engine(seed);
    for (const auto& v : views) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(v.in));
        std::uniform_real_distribution<double> uniform(-bound, bound);
        for (std::size_t i = 0; i < v.out * v.in; ++i) params[v.w_offset + i] = uniform(rng);
        // biases stay zero
    }
    return Mlp(std::move(dims), std::move(params));
}

Mlp Mlp::with_parameters(std::vector<double> params) const {
    Mlp copy(layer_dims_, std::move(params));
    return copy;
}

std::vector<double> Mlp::do_score(const Matrix& X) const {
    const auto views = layer_views(layer_dims_);
    std::vector<std::vector<double>> activations(layer_dims_.size());
    std::vector<double> out(X.rows());
    for (std::size_t i = 0; i < X.rows(); ++i) {
        forward_row(X.row(i), params_, views, activations);
        out[i] = sigmoid(activations.back()[0]);
    }
    return out;
}

nlohmann::json Mlp::to_json() const {
    const auto views = layer_views(layer_dims_);
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& v : views) {
        nlohmann::json w = nlohmann::json::array();
        for (std::size_t r = 0; r < v.out; ++r) {
            nlohmann::json row = nlohmann::json::array();
            for (std::size_t c = 0; c < v.in; ++c) row.push_back(params_[v.w_offset + r * v.in + c]);
            w.push_back(std::move(row));
        }
        nlohmann::json b = nlohmann::json::array();
        for (std::size_t r = 0; r < v.out; ++r) b.push_back(params_[v.b_offset + r]);
        layers.push_back({{"weights", std::move(w)}, {"biases", std::move(b)}});
    }
    return nlohmann::json{{"format", "sacv-model"},
                          {"version", 1},
                          {"kind", "mlp"},
                          {"layer_dims", layer_dims_},
                          {"layers", std::move(layers)}};
}

std::vector<double> class_weights(const std::vector<int>& labels, bool balanced) {
    std::vector<double> w(labels.size(), 1.0);
    if (!balanced) return w;
    const auto n_pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
    const auto n_neg = static_cast<double>(labels.size()) - n_pos;
    if (n_pos == 0.0 || n_neg == 0.0) return w; // degenerate; leave unweighted
    const double n = static_cast<double>(labels.size());
    const double w_pos = n / (2.0 * n_pos);
    const double w_neg = n / (2.0 * n_neg);
    for (std::size_t i = 0; i < labels.size(); ++i) w[i] = labels[i] == 1 ? w_pos : w_neg;
    return w;
}

double mlp_loss(const Mlp& net, const Matrix& X, const std::vector<int>& labels,
                const std::vector<double>& row_weights, double l2) {
    return mlp_loss_gradient(net, X, labels, row_weights, l2).first;
}

std::pair<double, std::vector<double>> mlp_loss_gradient(const Mlp& net, const Matrix& X,
                                                         const std::vector<int>& labels,
                                                         const std::vector<double>& row_weights,
                                                         double l2) {
    if (X.rows() != labels.size() || X.rows() != row_weights.size()) {
        throw ParameterError("mlp_loss_gradient: rows, labels and weights must agree");
    }
    if (X.rows() == 0) throw ParameterError("mlp_loss_gradient: empty batch");
    if (X.cols() != net.feature_dim()) {
        throw ParameterError("mlp_loss_gradient: feature dimension mismatch");
    }

    const auto& dims = net.layer_dims();
    const auto& params = net.parameters();
    const auto views = layer_views(dims);
    const double inv_n = 1.0 / static_cast<double>(X.rows());

    double loss = 0.0;
    std::vector<double> grad(params.size(), 0.0);
    std::vector<std::vector<double>> activations(dims.size());
    std::vector<double> delta;
    std::vector<double> delta_prev;

    for (std::size_t i = 0; i < X.rows(); ++i) {
        forward_row(X.row(i), params, views, activations);
        const double logit = activations.back()[0];
        const double z = static_cast<double>(labels[i]);
        loss += row_weights[i] * (softplus(logit) - z * logit) * inv_n;

        delta.assign(1, row_weights[i] * (sigmoid(logit) - z) * inv_n);
        for (std::size_t l = views.size(); l-- > 0;) {
            const auto& v = views[l];
            const auto& in = activations[l];
            for (std::size_t r = 0; r < v.out; ++r) {
                grad[v.b_offset + r] += delta[r];
                double* gw = grad.data() + v.w_offset + r * v.in;
                for (std::size_t c = 0; c < v.in; ++c) gw[c] += delta[r] * in[c];
            }
            if (l == 0) break;
            delta_prev.assign(v.in, 0.0);
            for (std::size_t r = 0; r < v.out; ++r) {
                const double* w = params.data() + v.w_offset + r * v.in;
                for (std::size_t c = 0; c < v.in; ++c) delta_prev[c] += w[c] * delta[r];
            }
            // tanh'(pre) expressed through the activation value
            for (std::size_t c = 0; c < v.in; ++c) delta_prev[c] *= 1.0 - in[c] * in[c];
            delta.swap(delta_prev);
        }
    }

    if (l2 > 0.0) {
        for (const auto& v : views) {
            for (std::size_t i = 0; i < v.out * v.in; ++i) {
                const double w = params[v.w_offset + i];
                loss += 0.5 * l2 * w * w;
                grad[v.w_offset + i] += l2 * w;
            }
        }
    }
    return {loss, std::move(grad)};
}

std::shared_ptr<const Mlp> train_mlp(const LabeledDataset& train, const MlpHyperparams& hp) {
    for (std::size_t h : hp.hidden_sizes) {
        if (h == 0) throw ParameterError("train_mlp: hidden layer sizes must be >= 1");
    }
    if (!(hp.learning_rate > 0.0)) throw ParameterError("train_mlp: learning_rate must be > 0");
    if (hp.batch_size == 0) throw ParameterError("train_mlp: batch_size must be >= 1");
    if (hp.l2_penalty < 0.0) throw ParameterError("train_mlp: l2_penalty must be >= 0");
    train.require_both_classes("train_mlp");

    Mlp net = Mlp::init(train.dim(), hp.hidden_sizes, derive_seed(hp.seed, 0x1417));
    const auto weights = class_weights(train.labels(), hp.balanced_class_weights);

    const std::size_t n = train.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    auto shuffle_rng = make_engine(derive_seed(hp.seed, 0x5F0F));

    std::vector<double> params = net.parameters();
    std::vector<double> history;
    history.reserve(hp.epochs);

    std::vector<std::size_t> batch_idx;
    std::vector<int> batch_labels;
    std::vector<double> batch_weights;

    for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n; start += hp.batch_size) {
            const std::size_t end = std::min(n, start + hp.batch_size);
            batch_idx.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                             order.begin() + static_cast<std::ptrdiff_t>(end));
            batch_labels.clear();
            batch_weights.clear();
            for (std::size_t i : batch_idx) {
                batch_labels.push_back(train.label(i));
                batch_weights.push_back(weights[i]);
            }
            const Matrix batch = train.features().take_rows(batch_idx);

            net = net.with_parameters(std::move(params));
            auto [loss, grad] = mlp_loss_gradient(net, batch, batch_labels, batch_weights,
                                                  hp.l2_penalty);
            if (!std::isfinite(loss)) {
                throw TrainingError("train_mlp: non-finite loss at epoch " +
                                    std::to_string(epoch));
            }
            params = net.parameters();
            for (std::size_t p = 0; p < params.size(); ++p) {
                params[p] -= hp.learning_rate * grad[p];
            }
            epoch_loss += loss * static_cast<double>(batch_idx.size());
        }
        history.push_back(epoch_loss / static_cast<double>(n));
    }

    Mlp trained = net.with_parameters(std::move(params));
    trained.loss_history_ = std::move(history);
    return std::make_shared<const Mlp>(std::move(trained));
}

} // namespace sacv

#include "mtrack/learners/neural_net.hpp"

#include "mtrack/error.hpp"
#include "mtrack/rng.hpp"

#include <cmath>

namespace mtrack {

namespace {

struct View {
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> W1;
    Eigen::Map<const Eigen::VectorXd> b1;
    Eigen::Map<const Eigen::VectorXd> w2;
    double b2;
};

View view(const NeuralNetParams& p) {
    const double* d = p.theta.data();
    const Eigen::Index h = p.hidden, in = p.inputs;
    return {decltype(View::W1)(d, h, in), Eigen::Map<const Eigen::VectorXd>(d + h * in, h),
            Eigen::Map<const Eigen::VectorXd>(d + h * in + h, h), d[h * in + 2 * h]};
}

void check(const NeuralNetParams& p, const Eigen::MatrixXd& X) {
    if (p.theta.size() != NeuralNetParams::size_for(p.inputs, p.hidden))
        throw ValidationError("neural net: parameter vector has the wrong size");
    if (X.cols() != p.inputs) throw ValidationError("neural net: column mismatch");
}

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double weight_norm2(const NeuralNetParams& p) {
    const auto v = view(p);
    return v.W1.squaredNorm() + v.w2.squaredNorm();
}

} // namespace

bool NeuralNetParams::is_weight(Eigen::Index k) const {
    const Eigen::Index h = hidden, in = inputs;
    if (k < h * in) return true;
    if (k < h * in + h) return false;
    return k < h * in + 2 * h;
}

Eigen::VectorXd nn_forward(const NeuralNetParams& params, const Eigen::MatrixXd& X) {
    check(params, X);
    const auto v = view(params);
    const Eigen::ArrayXXd A = logistic(((X * v.W1.transpose()).rowwise() + v.b1.transpose()).array());
    const Eigen::VectorXd z = (A.matrix() * v.w2).array() + v.b2;
    Eigen::VectorXd out(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) out[i] = sigmoid(z[i]);
    return out;
}

double nn_loss(const NeuralNetParams& params, const Eigen::MatrixXd& X, std::span<const int> y, double decay) {
    check(params, X);
    const auto v = view(params);
    const Eigen::ArrayXXd A = logistic(((X * v.W1.transpose()).rowwise() + v.b1.transpose()).array());
    const Eigen::VectorXd z = (A.matrix() * v.w2).array() + v.b2;
    double ce = 0;
    for (Eigen::Index i = 0; i < z.size(); ++i) ce += softplus(z[i]) - y[static_cast<std::size_t>(i)] * z[i];
    return ce / static_cast<double>(X.rows()) + decay * weight_norm2(params);
}

Eigen::VectorXd nn_gradient(const NeuralNetParams& params, const Eigen::MatrixXd& X, std::span<const int> y,
                            double decay) {
    check(params, X);
    const auto v = view(params);
    const Eigen::Index h = params.hidden, in = params.inputs;
    const double n = static_cast<double>(X.rows());
    const Eigen::ArrayXXd A = logistic(((X * v.W1.transpose()).rowwise() + v.b1.transpose()).array());
    const Eigen::VectorXd z = (A.matrix() * v.w2).array() + v.b2;
    Eigen::VectorXd dz(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) dz[i] = (sigmoid(z[i]) - y[static_cast<std::size_t>(i)]) / n;

    Eigen::VectorXd grad(params.theta.size());
    // Output layer.
    const Eigen::VectorXd g_w2 = A.matrix().transpose() * dz;
    const double g_b2 = dz.sum();
    // Hidden layer: dL/da = dz * w2, da/du = a (1 - a).
    const Eigen::MatrixXd delta =
        ((dz * v.w2.transpose()).array() * A * (1.0 - A)).matrix(); // n x h
    const Eigen::MatrixXd g_W1 = delta.transpose() * X;           // h x in
    const Eigen::VectorXd g_b1 = delta.colwise().sum().transpose();

    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(grad.data(), h, in) =
        g_W1 + 2.0 * decay * v.W1;
    grad.segment(h * in, h) = g_b1;
    grad.segment(h * in + h, h) = g_w2 + 2.0 * decay * v.w2;
    grad[h * in + 2 * h] = g_b2;
    return grad;
}

NeuralNetModel fit_neural_net(const Dataset& data, int hidden, double decay, std::uint64_t seed,
                              const NeuralNetOptions& options) {
    if (hidden < 1 || decay < 0.0) throw ValidationError("neural net: invalid hyperparameters");
    NeuralNetModel best;
    best.standardizer = Standardizer::fit(data.X, data.binary_features);
    best.decay = decay;
    const Eigen::MatrixXd Z = best.standardizer.apply(data.X);
    const std::span<const int> y(data.y);
    const int inputs = static_cast<int>(Z.cols());
    bool have = false;

    for (int restart = 0; restart < std::max(1, options.restarts); ++restart) {
        Rng rng(derive_seed(seed, "restart", static_cast<std::uint64_t>(restart)));
        NeuralNetParams p{inputs, hidden, Eigen::VectorXd(NeuralNetParams::size_for(inputs, hidden))};
        for (Eigen::Index k = 0; k < p.theta.size(); ++k) p.theta[k] = rng.uniform(-options.init_range, options.init_range);

        double loss = nn_loss(p, Z, y, decay);
        double step = 1.0;
        for (int it = 0; it < options.max_iter; ++it) {
            const Eigen::VectorXd g = nn_gradient(p, Z, y, decay);
            if (g.lpNorm<Eigen::Infinity>() < options.grad_tol) break;
            const double g2 = g.squaredNorm();
            NeuralNetParams trial = p;
            bool accepted = false;
            for (int half = 0; half < 40; ++half) {
                trial.theta = p.theta - step * g;
                const double trial_loss = nn_loss(trial, Z, y, decay);
                if (std::isfinite(trial_loss) && trial_loss <= loss - 1e-4 * step * g2) {
                    p = std::move(trial);
                    loss = trial_loss;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if (!accepted) break;
            step *= 2.0;
        }
        if (!std::isfinite(loss)) throw FitError("neural net: non-finite training loss");
        if (!have || loss < best.training_loss) {
            best.params = p;
            best.training_loss = loss;
            have = true;
        }
    }
    return best;
}

Eigen::VectorXd neural_net_proba(const NeuralNetModel& model, const Eigen::MatrixXd& X) {
    return nn_forward(model.params, model.standardizer.apply(X));
}

} // namespace mtrack

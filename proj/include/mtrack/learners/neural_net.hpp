#pragma once

#include "mtrack/dataset.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>

namespace mtrack {

// One hidden layer of logistic units feeding one logistic output.
// Parameter layout: W1 (hidden x inputs, row-major), b1 (hidden), w2 (hidden), b2.
struct NeuralNetParams {
    int inputs = 0;
    int hidden = 0;
    Eigen::VectorXd theta;

    static Eigen::Index size_for(int inputs, int hidden) {
        return static_cast<Eigen::Index>(hidden) * inputs + 2 * hidden + 1;
    }
    // True for entries of W1 and w2, the coordinates subject to weight decay.
    bool is_weight(Eigen::Index k) const;
};

// Mean cross-entropy over the batch plus decay * (|W1|^2 + |w2|^2).
double nn_loss(const NeuralNetParams& params, const Eigen::MatrixXd& X, std::span<const int> y, double decay);
Eigen::VectorXd nn_gradient(const NeuralNetParams& params, const Eigen::MatrixXd& X, std::span<const int> y,
                            double decay);
Eigen::VectorXd nn_forward(const NeuralNetParams& params, const Eigen::MatrixXd& X);

struct NeuralNetOptions {
    int restarts = 5;
    int max_iter = 300;
    double init_range = 0.7;  // initial weights uniform in [-r, r]
    double grad_tol = 1e-6;   // stop on max-norm of the gradient
};

struct NeuralNetModel {
    Standardizer standardizer;
    NeuralNetParams params;
    double decay = 0.0;
    double training_loss = 0.0; // penalized, best restart
};

// Full-batch gradient descent with Armijo backtracking, best of `restarts`
// random initializations by penalized training loss.
NeuralNetModel fit_neural_net(const Dataset& data, int hidden, double decay, std::uint64_t seed,
                              const NeuralNetOptions& options = {});
Eigen::VectorXd neural_net_proba(const NeuralNetModel& model, const Eigen::MatrixXd& X);

} // namespace mtrack

#pragma once

#include <string>

#include "fpm/core.hpp"
#include "fpm/tensor.hpp"

namespace fpm::objective {

constexpr double kGradientWeight = 1000.0;  // alpha in J = M + alpha*G + C

/// One training iteration's loss breakdown.
struct LossReport {
    int64_t iteration = 0;
    double M = 0.0;  // mean-squared complex error
    double G = 0.0;  // gradient mean-squared error
    double C = 0.0;  // adversarial fooling loss
    double J = 0.0;
    double alpha = kGradientWeight;

    static std::string csv_header() { return "iteration,M,G,C,J"; }
    std::string csv_row() const;
};

// Scalar forms over complex fields (evaluation path).

/// Mean over pixels of |pred - actual|^2.
double loss_M(const ComplexField& pred, const ComplexField& actual);

/// Forward differences over the valid region, no wraparound; vertical MSE
/// plus horizontal MSE, each covering real and imaginary parts.
double loss_G(const ComplexField& pred, const ComplexField& actual);

/// Cross entropy of the discriminator being fooled: pred labeled "real".
double loss_C(double logit_on_pred);

/// Discriminator objective: pred labeled "fake" plus actual labeled "real".
double loss_D(double logit_on_pred, double logit_on_actual);

// Graph forms (training path). Components are [B,1,H,W] nodes; logits [B,1].

int loss_M_node(tensor::Graph& g, int pred_re, int pred_im, int act_re, int act_im);
int loss_G_node(tensor::Graph& g, int pred_re, int pred_im, int act_re, int act_im);
int loss_C_node(tensor::Graph& g, int logits_on_pred);
int loss_D_node(tensor::Graph& g, int logits_on_pred, int logits_on_actual);

/// J = M + alpha*G + C.
int loss_J_node(tensor::Graph& g, int m_node, int g_node, int c_node, double alpha = kGradientWeight);

}  // namespace fpm::objective

#pragma once

#include "geogrouse/tensor.hpp"

namespace geogrouse {

/// y = x W + b for x:[n,d_in], W:[d_in,d_out], b:[d_out].
Tensor affine(const Tensor& x, const Tensor& W, const Tensor& b);

/// Backward of affine. dy:[n,d_out]; accumulates into dx/dW/db (any may be
/// null to skip).
void affine_backward(const Tensor& x, const Tensor& W, const Tensor& dy,
                     Tensor* dx, Tensor* dW, Tensor* db);

/// Numerically stable softmax over a length-n vector.
Tensor softmax(const Tensor& z);

/// Accumulates dz += J_softmax(z)^T dy given y = softmax(z).
void softmax_backward(const Tensor& y, const Tensor& dy, Tensor& dz);

/// log softmax(z)[index], stable. Used as the categorical log-probability.
double log_softmax_at(const Tensor& z, std::size_t index);

/// Backward of log_softmax_at: dz += coef * (onehot(index) - softmax(z)).
void log_softmax_at_backward(const Tensor& z, std::size_t index, double coef, Tensor& dz);

Tensor tanh_forward(const Tensor& x);
/// dx += dy * (1 - y^2) given y = tanh(x).
void tanh_backward(const Tensor& y, const Tensor& dy, Tensor& dx);

double dot(const Tensor& u, const Tensor& v);

/// cos(u, v); throws on a zero-norm input.
double cosine_sim(const Tensor& u, const Tensor& v);

/// G_t = sum_{i>=t} gamma^{i-t} r_i. Rewards must be 0/1; gamma in (0,1].
std::vector<double> discounted_return(const std::vector<double>& rewards, double gamma);

}  // namespace geogrouse

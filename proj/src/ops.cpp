#include "geogrouse/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace geogrouse {

static void require_rank2(const Tensor& t, const char* what) {
    if (t.rank() != 2) {
        throw std::invalid_argument(std::string(what) + ": expected rank-2 tensor, got shape " +
                                    shape_str(t.shape));
    }
}

Tensor affine(const Tensor& x, const Tensor& W, const Tensor& b) {
    require_rank2(x, "affine x");
    require_rank2(W, "affine W");
    if (b.rank() != 1 || x.shape[1] != W.shape[0] || W.shape[1] != b.shape[0]) {
        throw std::invalid_argument("affine: shapes do not conform: x" + shape_str(x.shape) +
                                    " W" + shape_str(W.shape) + " b" + shape_str(b.shape));
    }
    std::size_t n = x.shape[0], d_in = x.shape[1], d_out = W.shape[1];
    Tensor y({n, d_out});
    for (std::size_t r = 0; r < n; ++r) {
        const double* xr = x.row(r);
        double* yr = y.row(r);
        for (std::size_t j = 0; j < d_out; ++j) yr[j] = b.data[j];
        for (std::size_t i = 0; i < d_in; ++i) {
            double xi = xr[i];
            if (xi == 0.0) continue;
            const double* wi = W.row(i);
            for (std::size_t j = 0; j < d_out; ++j) yr[j] += xi * wi[j];
        }
    }
    return y;
}

void affine_backward(const Tensor& x, const Tensor& W, const Tensor& dy,
                     Tensor* dx, Tensor* dW, Tensor* db) {
    std::size_t n = x.shape[0], d_in = x.shape[1], d_out = W.shape[1];
    if (dy.shape[0] != n || dy.shape[1] != d_out) {
        throw std::invalid_argument("affine_backward: dy" + shape_str(dy.shape) +
                                    " does not match x" + shape_str(x.shape) + " W" + shape_str(W.shape));
    }
    for (std::size_t r = 0; r < n; ++r) {
        const double* xr = x.row(r);
        const double* dyr = dy.row(r);
        if (db) {
            for (std::size_t j = 0; j < d_out; ++j) db->data[j] += dyr[j];
        }
        if (dW) {
            for (std::size_t i = 0; i < d_in; ++i) {
                double xi = xr[i];
                if (xi == 0.0) continue;
                double* dwi = dW->row(i);
                for (std::size_t j = 0; j < d_out; ++j) dwi[j] += xi * dyr[j];
            }
        }
        if (dx) {
            double* dxr = dx->row(r);
            for (std::size_t i = 0; i < d_in; ++i) {
                const double* wi = W.row(i);
                double s = 0.0;
                for (std::size_t j = 0; j < d_out; ++j) s += wi[j] * dyr[j];
                dxr[i] += s;
            }
        }
    }
}

Tensor softmax(const Tensor& z) {
    if (z.numel() == 0) throw std::invalid_argument("softmax: empty input");
    double m = *std::max_element(z.data.begin(), z.data.end());
    Tensor y(z.shape);
    double sum = 0.0;
    for (std::size_t i = 0; i < z.numel(); ++i) {
        y.data[i] = std::exp(z.data[i] - m);
        sum += y.data[i];
    }
    for (double& v : y.data) v /= sum;
    return y;
}

void softmax_backward(const Tensor& y, const Tensor& dy, Tensor& dz) {
    double s = 0.0;
    for (std::size_t i = 0; i < y.numel(); ++i) s += y.data[i] * dy.data[i];
    for (std::size_t i = 0; i < y.numel(); ++i) dz.data[i] += y.data[i] * (dy.data[i] - s);
}

double log_softmax_at(const Tensor& z, std::size_t index) {
    if (z.numel() == 0) throw std::invalid_argument("log_softmax_at: empty input");
    if (index >= z.numel()) {
        throw std::out_of_range("log_softmax_at: index " + std::to_string(index) +
                                " out of range for " + std::to_string(z.numel()) + " logits");
    }
    double m = *std::max_element(z.data.begin(), z.data.end());
    double sum = 0.0;
    for (double v : z.data) sum += std::exp(v - m);
    return z.data[index] - m - std::log(sum);
}

void log_softmax_at_backward(const Tensor& z, std::size_t index, double coef, Tensor& dz) {
    Tensor p = softmax(z);
    for (std::size_t i = 0; i < z.numel(); ++i) {
        dz.data[i] += coef * ((i == index ? 1.0 : 0.0) - p.data[i]);
    }
}

Tensor tanh_forward(const Tensor& x) {
    Tensor y(x.shape);
    for (std::size_t i = 0; i < x.numel(); ++i) y.data[i] = std::tanh(x.data[i]);
    return y;
}

void tanh_backward(const Tensor& y, const Tensor& dy, Tensor& dx) {
    for (std::size_t i = 0; i < y.numel(); ++i) {
        dx.data[i] += dy.data[i] * (1.0 - y.data[i] * y.data[i]);
    }
}

double dot(const Tensor& u, const Tensor& v) {
    if (u.numel() != v.numel()) {
        throw std::invalid_argument("dot: length mismatch " + shape_str(u.shape) + " vs " +
                                    shape_str(v.shape));
    }
    double s = 0.0;
    for (std::size_t i = 0; i < u.numel(); ++i) s += u.data[i] * v.data[i];
    return s;
}

double cosine_sim(const Tensor& u, const Tensor& v) {
    double nu = std::sqrt(dot(u, u));
    double nv = std::sqrt(dot(v, v));
    if (nu == 0.0 || nv == 0.0) throw std::invalid_argument("cosine_sim: zero-norm input");
    return dot(u, v) / (nu * nv);
}

std::vector<double> discounted_return(const std::vector<double>& rewards, double gamma) {
    if (!(gamma > 0.0 && gamma <= 1.0)) {
        throw std::invalid_argument("discounted_return: gamma must be in (0,1], got " +
                                    std::to_string(gamma));
    }
    std::vector<double> g(rewards.size());
    double acc = 0.0;
    for (std::size_t i = rewards.size(); i-- > 0;) {
        acc = rewards[i] + gamma * acc;
        g[i] = acc;
    }
    return g;
}

}  // namespace geogrouse

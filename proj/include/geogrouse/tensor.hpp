#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace geogrouse {

/// Dense row-major tensor of 64-bit floats with an explicit shape.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape_, double fill = 0.0);
    Tensor(std::vector<std::size_t> shape_, std::vector<double> data_);

    static Tensor vector(std::vector<double> values);

    std::size_t numel() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    std::size_t dim(std::size_t i) const { return shape.at(i); }

    double& at(std::size_t i) { return data[i]; }
    double at(std::size_t i) const { return data[i]; }
    // 2-d access, row-major
    double& at(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }

    double* row(std::size_t r) { return data.data() + r * shape[1]; }
    const double* row(std::size_t r) const { return data.data() + r * shape[1]; }

    bool all_finite() const;
    void fill(double v);

    bool operator==(const Tensor& other) const = default;
};

std::string shape_str(const std::vector<std::size_t>& shape);

/// Named parameter slots with parallel gradient storage. Gradients
/// accumulate (+=) until zero_grads() is called.
struct ParamStore {
    std::map<std::string, Tensor> slots;
    std::map<std::string, Tensor> grads;

    Tensor& add(const std::string& name, Tensor init);
    bool has(const std::string& name) const { return slots.count(name) > 0; }

    Tensor& param(const std::string& name);
    const Tensor& param(const std::string& name) const;
    Tensor& grad(const std::string& name);
    const Tensor& grad(const std::string& name) const;

    void zero_grads();
    /// p += lr * g for every coordinate with a nonzero gradient.
    void ascent_step(double lr);
    double grad_norm() const;
    bool grads_finite() const;

    void save_json(const std::string& path) const;
    static ParamStore load_json(const std::string& path);

    bool operator==(const ParamStore& other) const { return slots == other.slots; }
};

}  // namespace geogrouse

#include "geogrouse/tensor.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace geogrouse {

static std::size_t shape_numel(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

Tensor::Tensor(std::vector<std::size_t> shape_, double fill)
    : shape(std::move(shape_)), data(shape_numel(shape), fill) {
    for (std::size_t d : shape) {
        if (d == 0) throw std::invalid_argument("Tensor: zero dimension in shape " + shape_str(shape));
    }
}

Tensor::Tensor(std::vector<std::size_t> shape_, std::vector<double> data_)
    : shape(std::move(shape_)), data(std::move(data_)) {
    if (data.size() != shape_numel(shape)) {
        throw std::invalid_argument("Tensor: data length " + std::to_string(data.size()) +
                                    " does not match shape " + shape_str(shape));
    }
}

Tensor Tensor::vector(std::vector<double> values) {
    std::size_t n = values.size();
    return Tensor({n}, std::move(values));
}

bool Tensor::all_finite() const {
    for (double v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void Tensor::fill(double v) {
    for (double& x : data) x = v;
}

std::string shape_str(const std::vector<std::size_t>& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ",";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

Tensor& ParamStore::add(const std::string& name, Tensor init) {
    if (slots.count(name)) throw std::invalid_argument("ParamStore: duplicate slot '" + name + "'");
    grads.emplace(name, Tensor(init.shape, 0.0));
    auto [it, ok] = slots.emplace(name, std::move(init));
    (void)ok;
    return it->second;
}

Tensor& ParamStore::param(const std::string& name) {
    auto it = slots.find(name);
    if (it == slots.end()) throw std::out_of_range("ParamStore: no slot '" + name + "'");
    return it->second;
}

const Tensor& ParamStore::param(const std::string& name) const {
    auto it = slots.find(name);
    if (it == slots.end()) throw std::out_of_range("ParamStore: no slot '" + name + "'");
    return it->second;
}

Tensor& ParamStore::grad(const std::string& name) {
    auto it = grads.find(name);
    if (it == grads.end()) throw std::out_of_range("ParamStore: no grad slot '" + name + "'");
    return it->second;
}

const Tensor& ParamStore::grad(const std::string& name) const {
    auto it = grads.find(name);
    if (it == grads.end()) throw std::out_of_range("ParamStore: no grad slot '" + name + "'");
    return it->second;
}

void ParamStore::zero_grads() {
    for (auto& [name, g] : grads) g.fill(0.0);
}

void ParamStore::ascent_step(double lr) {
    for (auto& [name, p] : slots) {
        const Tensor& g = grads.at(name);
        for (std::size_t i = 0; i < p.data.size(); ++i) {
            if (g.data[i] != 0.0) p.data[i] += lr * g.data[i];
        }
    }
}

double ParamStore::grad_norm() const {
    double s = 0.0;
    for (const auto& [name, g] : grads) {
        for (double v : g.data) s += v * v;
    }
    return std::sqrt(s);
}

bool ParamStore::grads_finite() const {
    for (const auto& [name, g] : grads) {
        if (!g.all_finite()) return false;
    }
    return true;
}

void ParamStore::save_json(const std::string& path) const {
    nlohmann::json j;
    for (const auto& [name, t] : slots) {
        j[name] = {{"shape", t.shape}, {"data", t.data}};
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("ParamStore: cannot open '" + path + "' for writing");
    out << j.dump(1) << "\n";
}

ParamStore ParamStore::load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("ParamStore: cannot open '" + path + "'");
    nlohmann::json j;
    in >> j;
    ParamStore ps;
    for (auto it = j.begin(); it != j.end(); ++it) {
        std::vector<std::size_t> shape = it.value().at("shape").get<std::vector<std::size_t>>();
        std::vector<double> data = it.value().at("data").get<std::vector<double>>();
        ps.add(it.key(), Tensor(std::move(shape), std::move(data)));
    }
    return ps;
}

}  // namespace geogrouse

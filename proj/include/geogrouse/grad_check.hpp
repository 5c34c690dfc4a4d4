#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

#include "geogrouse/tensor.hpp"

namespace geogrouse {

struct GradCheckResult {
    double max_rel_err = 0.0;
    std::string worst_slot;
    std::size_t worst_index = 0;
};

/// Compares the analytic gradients already stored in ps.grads against central
/// differences of f. f must be a deterministic pure function of ps.slots and
/// must not touch ps.grads. Relative error per coordinate:
/// |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
inline GradCheckResult grad_check(ParamStore& ps,
                                  const std::function<double(const ParamStore&)>& f,
                                  double eps = 1e-5) {
    double f0 = f(ps);
    if (!std::isfinite(f0)) throw std::runtime_error("grad_check: non-finite objective");
    GradCheckResult res;
    for (auto& [name, p] : ps.slots) {
        const Tensor& g = ps.grads.at(name);
        for (std::size_t i = 0; i < p.data.size(); ++i) {
            double orig = p.data[i];
            p.data[i] = orig + eps;
            double fp = f(ps);
            p.data[i] = orig - eps;
            double fm = f(ps);
            p.data[i] = orig;
            if (!std::isfinite(fp) || !std::isfinite(fm)) {
                throw std::runtime_error("grad_check: non-finite objective at slot '" + name + "'");
            }
            double numeric = (fp - fm) / (2.0 * eps);
            double analytic = g.data[i];
            double rel = std::fabs(analytic - numeric) /
                         std::max(1e-8, std::fabs(analytic) + std::fabs(numeric));
            if (rel > res.max_rel_err) {
                res.max_rel_err = rel;
                res.worst_slot = name;
                res.worst_index = i;
            }
        }
    }
    return res;
}

}  // namespace geogrouse

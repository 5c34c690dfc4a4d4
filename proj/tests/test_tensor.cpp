#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <limits>

#include "geogrouse/rng.hpp"
#include "geogrouse/tensor.hpp"

using namespace geogrouse;

TEST_CASE("tensor shape and data invariants") {
    Tensor t({2, 3}, 1.5);
    CHECK(t.numel() == 6);
    CHECK(t.at(1, 2) == 1.5);
    CHECK_THROWS(Tensor({2, 0}));
    CHECK_THROWS(Tensor({2, 2}, std::vector<double>{1.0, 2.0, 3.0}));
    CHECK(t.all_finite());
    t.at(0, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_FALSE(t.all_finite());
}

TEST_CASE("param store grads parallel the slots") {
    ParamStore ps;
    ps.add("w", Tensor({2, 2}, 1.0));
    ps.add("b", Tensor({2}, 0.0));
    CHECK(ps.grad("w").shape == ps.param("w").shape);
    CHECK_THROWS(ps.add("w", Tensor({1})));
    CHECK_THROWS(ps.param("missing"));

    ps.grad("w").at(0, 0) = 2.0;
    ps.ascent_step(0.5);
    CHECK(ps.param("w").at(0, 0) == 2.0);
    CHECK(ps.param("w").at(0, 1) == 1.0);
    ps.zero_grads();
    CHECK(ps.grad("w").at(0, 0) == 0.0);
}

TEST_CASE("ascent step leaves zero-grad slots bit-identical") {
    ParamStore ps;
    Rng rng(3);
    Tensor w({4, 4});
    for (double& v : w.data) v = rng.uniform(-1.0, 1.0);
    ps.add("w", w);
    ps.ascent_step(0.1);
    CHECK(ps.param("w") == w);
}

TEST_CASE("param store json round-trip is exact") {
    ParamStore ps;
    Rng rng(17);
    Tensor w({3, 5});
    for (double& v : w.data) v = rng.uniform(-2.0, 2.0);
    ps.add("layer.W", w);
    ps.add("layer.b", Tensor({5}, 0.25));
    std::string path = "tensor_roundtrip.json";
    ps.save_json(path);
    ParamStore back = ParamStore::load_json(path);
    CHECK(back == ps);
    std::remove(path.c_str());
}

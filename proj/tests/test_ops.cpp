#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "geogrouse/grad_check.hpp"
#include "geogrouse/ops.hpp"
#include "geogrouse/rng.hpp"

using namespace geogrouse;

static Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double lo = -1.0,
                            double hi = 1.0) {
    Tensor t(std::move(shape));
    for (double& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

// independent triple-loop product used as the matmul oracle
static Tensor naive_affine(const Tensor& x, const Tensor& W, const Tensor& b) {
    Tensor y({x.shape[0], W.shape[1]});
    for (std::size_t r = 0; r < x.shape[0]; ++r) {
        for (std::size_t j = 0; j < W.shape[1]; ++j) {
            double s = b.data[j];
            for (std::size_t i = 0; i < x.shape[1]; ++i) s += x.at(r, i) * W.at(i, j);
            y.at(r, j) = s;
        }
    }
    return y;
}

TEST_CASE("affine hand examples") {
    Tensor x({1, 2}, {1.0, 0.0});
    Tensor W({2, 1}, {2.0, 3.0});
    Tensor b({1}, {1.0});
    CHECK(affine(x, W, b).data == std::vector<double>{3.0});

    Tensor zeros({3, 2}, 0.0);
    Tensor W2({2, 1}, {4.0, -1.0});
    Tensor b2({1}, {5.0});
    Tensor y = affine(zeros, W2, b2);
    for (std::size_t r = 0; r < 3; ++r) CHECK(y.at(r, 0) == 5.0);

    CHECK_THROWS_AS(affine(Tensor({1, 3}, 0.0), Tensor({2, 2}, 0.0), Tensor({2}, 0.0)),
                    std::invalid_argument);
}

TEST_CASE("affine shape error names both shapes") {
    try {
        affine(Tensor({1, 3}, 0.0), Tensor({2, 2}, 0.0), Tensor({2}, 0.0));
        FAIL("expected throw");
    } catch (const std::invalid_argument& e) {
        std::string msg = e.what();
        CHECK(msg.find("[1,3]") != std::string::npos);
        CHECK(msg.find("[2,2]") != std::string::npos);
    }
}

TEST_CASE("affine matches the naive matmul oracle") {
    Rng rng(42);
    for (int trial = 0; trial < 10; ++trial) {
        Tensor x = random_tensor({3, 4}, rng);
        Tensor W = random_tensor({4, 2}, rng);
        Tensor b = random_tensor({2}, rng);
        Tensor got = affine(x, W, b);
        Tensor want = naive_affine(x, W, b);
        for (std::size_t i = 0; i < got.numel(); ++i) {
            CHECK(got.data[i] == doctest::Approx(want.data[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("softmax basics") {
    CHECK(softmax(Tensor::vector({0.0, 0.0})).data == std::vector<double>{0.5, 0.5});

    Tensor big = softmax(Tensor::vector({1000.0, 0.0}));
    CHECK(big.all_finite());
    CHECK(big.data[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::fabs(big.data[1]) < 1e-12);

    // extended-precision oracle
    Tensor p = softmax(Tensor::vector({1.0, 2.0, 3.0}));
    long double e1 = expl(1.0L), e2 = expl(2.0L), e3 = expl(3.0L);
    long double z = e1 + e2 + e3;
    CHECK(p.data[0] == doctest::Approx(static_cast<double>(e1 / z)).epsilon(1e-14));
    CHECK(p.data[1] == doctest::Approx(static_cast<double>(e2 / z)).epsilon(1e-14));
    CHECK(p.data[2] == doctest::Approx(static_cast<double>(e3 / z)).epsilon(1e-14));

    CHECK_THROWS(softmax(Tensor({0}, std::vector<double>{})));
}

TEST_CASE("softmax sums to one and is shift invariant") {
    Rng rng(7);
    for (int trial = 0; trial < 25; ++trial) {
        std::size_t n = 1 + rng.uniform_index(8);
        Tensor z = random_tensor({n}, rng, -30.0, 30.0);
        Tensor p = softmax(z);
        double sum = 0.0;
        for (double v : p.data) {
            CHECK(v > 0.0);
            sum += v;
        }
        CHECK(std::fabs(sum - 1.0) < 1e-12);

        Tensor shifted = z;
        for (double& v : shifted.data) v += 123.456;
        Tensor p2 = softmax(shifted);
        for (std::size_t i = 0; i < n; ++i) CHECK(std::fabs(p.data[i] - p2.data[i]) < 1e-12);
    }
}

TEST_CASE("softmax is deterministic") {
    Tensor z = Tensor::vector({0.1, -3.0, 2.5, 0.0});
    CHECK(softmax(z).data == softmax(z).data);
}

TEST_CASE("cosine similarity") {
    CHECK(cosine_sim(Tensor::vector({1.0, 2.0}), Tensor::vector({1.0, 2.0})) ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cosine_sim(Tensor::vector({1.0, 0.0}), Tensor::vector({0.0, 1.0})) == 0.0);
    CHECK(cosine_sim(Tensor::vector({1.0, 1.0}), Tensor::vector({1.0, 0.0})) ==
          doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK_THROWS(cosine_sim(Tensor::vector({0.0, 0.0}), Tensor::vector({1.0, 0.0})));
}

TEST_CASE("discounted return") {
    auto g = discounted_return({1.0, 0.0, 1.0}, 0.5);
    CHECK(g == std::vector<double>{1.25, 0.5, 1.0});
    CHECK(discounted_return({0.0, 0.0, 0.0}, 0.3) == std::vector<double>{0.0, 0.0, 0.0});
    CHECK(discounted_return({1.0}, 1.0) == std::vector<double>{1.0});
    CHECK_THROWS(discounted_return({1.0}, 0.0));
    CHECK_THROWS(discounted_return({1.0}, 1.5));
}

TEST_CASE("discounted return satisfies the recursion exactly") {
    Rng rng(11);
    for (int trial = 0; trial < 30; ++trial) {
        std::size_t len = 1 + rng.uniform_index(12);
        std::vector<double> rewards(len);
        for (double& r : rewards) r = rng.bernoulli(0.4) ? 1.0 : 0.0;
        double gamma = 0.05 + 0.95 * rng.uniform();
        auto g = discounted_return(rewards, gamma);
        for (std::size_t t = 0; t + 1 < len; ++t) {
            CHECK(g[t] == rewards[t] + gamma * g[t + 1]);
        }
        CHECK(g[len - 1] == rewards[len - 1]);
    }
}

TEST_CASE("grad check: affine plus mean is exact to 1e-6") {
    Rng rng(5);
    ParamStore ps;
    ps.add("W", random_tensor({4, 2}, rng));
    ps.add("b", random_tensor({2}, rng));
    Tensor x = random_tensor({3, 4}, rng);

    auto f = [&x](const ParamStore& p) {
        Tensor y = affine(x, p.param("W"), p.param("b"));
        double s = 0.0;
        for (double v : y.data) s += v;
        return s / static_cast<double>(y.numel());
    };
    Tensor y = affine(x, ps.param("W"), ps.param("b"));
    Tensor dy(y.shape, 1.0 / static_cast<double>(y.numel()));
    affine_backward(x, ps.param("W"), dy, nullptr, &ps.grad("W"), &ps.grad("b"));

    CHECK(grad_check(ps, f, 1e-5).max_rel_err < 1e-6);
}

TEST_CASE("grad check: constant function reports zero error") {
    ParamStore ps;
    ps.add("W", Tensor({3, 3}, 0.7));
    auto f = [](const ParamStore&) { return 2.5; };
    CHECK(grad_check(ps, f, 1e-5).max_rel_err == 0.0);
}

TEST_CASE("randomized composite backward passes the gradient check") {
    for (std::uint64_t seed = 0; seed < 22; ++seed) {
        Rng rng(seed * 977 + 13);
        std::size_t n = 1 + rng.uniform_index(3);
        std::size_t d_in = 1 + rng.uniform_index(5);
        std::size_t d_out = 2 + rng.uniform_index(4);
        ParamStore ps;
        ps.add("x", random_tensor({n, d_in}, rng));
        ps.add("W", random_tensor({d_in, d_out}, rng));
        ps.add("b", random_tensor({d_out}, rng));
        std::vector<std::size_t> picks(n);
        for (std::size_t r = 0; r < n; ++r) picks[r] = rng.uniform_index(d_out);

        // f = sum_r log softmax(tanh(x W + b))[r, pick_r]
        auto f = [&picks](const ParamStore& p) {
            Tensor y = affine(p.param("x"), p.param("W"), p.param("b"));
            Tensor h = tanh_forward(y);
            double total = 0.0;
            for (std::size_t r = 0; r < h.shape[0]; ++r) {
                Tensor row({h.shape[1]}, std::vector<double>(h.row(r), h.row(r) + h.shape[1]));
                total += log_softmax_at(row, picks[r]);
            }
            return total;
        };

        Tensor y = affine(ps.param("x"), ps.param("W"), ps.param("b"));
        Tensor h = tanh_forward(y);
        Tensor dh(h.shape, 0.0);
        for (std::size_t r = 0; r < n; ++r) {
            Tensor row({d_out}, std::vector<double>(h.row(r), h.row(r) + d_out));
            Tensor drow({d_out}, 0.0);
            log_softmax_at_backward(row, picks[r], 1.0, drow);
            for (std::size_t j = 0; j < d_out; ++j) dh.at(r, j) += drow.data[j];
        }
        Tensor dy(y.shape, 0.0);
        tanh_backward(h, dh, dy);
        affine_backward(ps.param("x"), ps.param("W"), dy, &ps.grad("x"), &ps.grad("W"),
                        &ps.grad("b"));

        CHECK(grad_check(ps, f, 1e-5).max_rel_err < 1e-4);
    }
}

TEST_CASE("softmax backward matches finite differences") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed + 100);
        std::size_t n = 2 + rng.uniform_index(5);
        ParamStore ps;
        ps.add("z", random_tensor({n}, rng, -2.0, 2.0));
        Tensor c = random_tensor({n}, rng);

        auto f = [&c](const ParamStore& p) {
            Tensor y = softmax(p.param("z"));
            return dot(c, y);
        };
        Tensor y = softmax(ps.param("z"));
        softmax_backward(y, c, ps.grad("z"));
        CHECK(grad_check(ps, f, 1e-5).max_rel_err < 1e-4);
    }
}

TEST_CASE("log softmax hand values") {
    CHECK(log_softmax_at(Tensor::vector({3.0, 3.0, 3.0, 3.0}), 2) ==
          doctest::Approx(std::log(0.25)).epsilon(1e-14));
    CHECK_THROWS(log_softmax_at(Tensor::vector({1.0, 2.0}), 2));
}

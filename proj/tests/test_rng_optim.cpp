// Copyright (c) 2026, MetaConcept contributors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <set>

#include "metaconcept/error.hpp"
#include "metaconcept/optim.hpp"
#include "metaconcept/rng.hpp"

using namespace metaconcept;

TEST_CASE("rng streams are reproducible and forks are independent of draw history") {
    Rng a(123), b(123);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng c(123);
    Rng f1 = c.fork(4);
    c.normal();
    Rng f2 = c.fork(4);
    CHECK(f1.next_u64() == f2.next_u64());
    CHECK(Rng(123).fork(1).next_u64() != Rng(123).fork(2).next_u64());
}

TEST_CASE("rng state round-trips") {
    Rng a(9);
    a.uniform();
    const std::string s = a.state();
    const double next = a.uniform();
    Rng b(0);
    b.set_state(s);
    CHECK(b.uniform() == next);
}

TEST_CASE("sampling without replacement yields distinct in-range indices") {
    Rng rng(3);
    for (int t = 0; t < 200; ++t) {
        auto idx = rng.sample_without_replacement(10, 5);
        std::set<std::size_t> s(idx.begin(), idx.end());
        CHECK(s.size() == 5);
        CHECK(*s.rbegin() < 10);
    }
    CHECK_THROWS(rng.sample_without_replacement(3, 4));
}

TEST_CASE("uniform and normal moments") {
    Rng rng(77);
    const int n = 200000;
    double su = 0, sn = 0, sn2 = 0;
    for (int i = 0; i < n; ++i) {
        su += rng.uniform();
        const double z = rng.normal();
        sn += z;
        sn2 += z * z;
    }
    CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
    CHECK(std::abs(sn / n) < 0.01);
    CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("plain SGD step") {
    Tensor p = Tensor::scalar(1.0), v = Tensor::scalar(0.0);
    sgd_update(p, Tensor::scalar(2.0), v, {0.1, 0.0, 0.0});
    CHECK(p.item() == doctest::Approx(0.8).epsilon(1e-15));
}

TEST_CASE("momentum and weight decay match a hand-unrolled recurrence") {
    const double lr = 0.1, mu = 0.9, wd = 0.01;
    Tensor p = Tensor::scalar(1.0), v = Tensor::scalar(0.0);
    sgd_update(p, Tensor::scalar(0.5), v, {lr, mu, wd});
    sgd_update(p, Tensor::scalar(-0.25), v, {lr, mu, wd});

    double pp = 1.0, vv = 0.0;
    vv = mu * vv + (0.5 + wd * pp);
    pp -= lr * vv;
    vv = mu * vv + (-0.25 + wd * pp);
    pp -= lr * vv;
    CHECK(p.item() == doctest::Approx(pp).epsilon(1e-15));
    CHECK(v.item() == doctest::Approx(vv).epsilon(1e-15));
}

TEST_CASE("sgd_step uses accumulated gradients and skips params without one") {
    Var a = Var::parameter(Tensor::scalar(1.0));
    Var b = Var::parameter(Tensor::scalar(5.0));
    scale(a, 3.0).backward();
    std::vector<Var> ps = {a, b};
    SgdState state;
    sgd_step(ps, state, {0.1, 0.0, 0.0});
    CHECK(a.value().item() == doctest::Approx(0.7));
    CHECK(b.value().item() == 5.0);
}

TEST_CASE("step decay schedule") {
    CHECK(step_decay_lr(0.1, 0.1, 500, 0) == doctest::Approx(0.1));
    CHECK(step_decay_lr(0.1, 0.1, 500, 499) == doctest::Approx(0.1));
    CHECK(step_decay_lr(0.1, 0.1, 500, 500) == doctest::Approx(0.01));
    CHECK(step_decay_lr(0.1, 0.1, 500, 1999) == doctest::Approx(0.0001));
}

TEST_CASE("negative learning rate is rejected") {
    Tensor p = Tensor::scalar(1.0), v = Tensor::scalar(0.0);
    CHECK_THROWS_AS(sgd_update(p, Tensor::scalar(1.0), v, {-0.1, 0.0, 0.0}), ConfigError);
}

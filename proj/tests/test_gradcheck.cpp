#include <doctest.h>

#include "fau.hpp"
#include "gradcheck.hpp"
#include "losses.hpp"
#include "nn.hpp"

using namespace ufv;

namespace {

TensorT<double> random_tensor(std::vector<int> shape, uint64_t seed, double lo = -1,
                              double hi = 1) {
    Rng rng(seed);
    TensorT<double> x(std::move(shape));
    for (int64_t i = 0; i < x.numel(); ++i) x[i] = rng.uniform(lo, hi);
    return x;
}

}  // namespace

TEST_CASE("gradcheck: linear layer with L1 loss at non-kink points") {
    Rng rng(100);
    Linear<double> fc;
    fc.init(4, 3, rng, 1.0);
    TensorT<double> x = random_tensor({2, 4}, 1);
    TensorT<double> target = random_tensor({2, 3}, 2, 2.0, 3.0);  // far from predictions

    ParamList<double> params;
    fc.collect(params, "fc");
    auto loss = [&] { return l1_loss(fc.forward(x), target); };
    auto backprop = [&] {
        TensorT<double> y = fc.forward(x);
        fc.backward(l1_loss_grad(y, target));
    };
    auto rep = finite_diff_gradcheck(params, loss, backprop);
    CAPTURE(rep.worst_param);
    CHECK(rep.max_rel_err < 1e-4);
    CHECK(rep.n_checked == 15);
}

TEST_CASE("gradcheck: miniature attention unit under L1") {
    Rng rng(101);
    Fau<double> fau;
    fau.init({2, 2, Resample::none}, rng);
    TensorT<double> x = random_tensor({1, 2, 6, 6}, 3);
    TensorT<double> target = random_tensor({1, 2, 6, 6}, 4, 2.0, 3.0);

    ParamList<double> params;
    fau.collect(params, "fau");
    REQUIRE(count_params(params) <= 200);

    auto loss = [&] { return l1_loss(fau.forward(x), target); };
    auto backprop = [&] {
        TensorT<double> y = fau.forward(x);
        fau.backward(l1_loss_grad(y, target));
    };
    auto rep = finite_diff_gradcheck(params, loss, backprop);
    CAPTURE(rep.worst_param);
    CAPTURE(rep.max_rel_err);
    CHECK(rep.max_rel_err < 1e-3);
}

TEST_CASE("gradcheck: miniature regressor head with soft cross-entropy") {
    Rng rng(102);
    Linear<double> fc1, fc2;
    Relu<double> act;
    Softmax<double> sm;
    fc1.init(8, 6, rng, 1.0);
    fc2.init(6, 3, rng, 1.0);

    TensorT<double> x = random_tensor({2, 8}, 5);
    TensorT<double> gt({2, 3});
    gt.at(0, 0) = 0.5; gt.at(0, 1) = 0.375; gt.at(0, 2) = 0.125;
    gt.at(1, 0) = 1.0 / 3; gt.at(1, 1) = 0.5; gt.at(1, 2) = 1.0 / 6;

    ParamList<double> params;
    fc1.collect(params, "fc1");
    fc2.collect(params, "fc2");
    REQUIRE(count_params(params) <= 200);

    auto forward = [&] { return sm.forward(fc2.forward(act.forward(fc1.forward(x)))); };
    auto loss = [&] { return soft_cross_entropy(forward(), gt); };
    auto backprop = [&] {
        TensorT<double> p = forward();
        fc1.backward(act.backward(fc2.backward(sm.backward(soft_cross_entropy_grad(p, gt)))));
    };
    auto rep = finite_diff_gradcheck(params, loss, backprop);
    CAPTURE(rep.worst_param);
    CAPTURE(rep.max_rel_err);
    CHECK(rep.max_rel_err < 1e-3);
}

TEST_CASE("gradcheck: conv + instance norm + sigmoid chain") {
    Rng rng(103);
    Conv2d<double> conv;
    InstanceNorm<double> norm;
    Sigmoid<double> sig;
    conv.init(2, 2, 3, 1, 1, rng, 1.0);
    TensorT<double> x = random_tensor({1, 2, 5, 5}, 7);
    TensorT<double> target = random_tensor({1, 2, 5, 5}, 8, 2.0, 3.0);

    ParamList<double> params;
    conv.collect(params, "conv");
    auto loss = [&] { return l1_loss(sig.forward(norm.forward(conv.forward(x))), target); };
    auto backprop = [&] {
        TensorT<double> y = sig.forward(norm.forward(conv.forward(x)));
        conv.backward(norm.backward(sig.backward(l1_loss_grad(y, target))));
    };
    auto rep = finite_diff_gradcheck(params, loss, backprop);
    CAPTURE(rep.worst_param);
    CHECK(rep.max_rel_err < 1e-3);
}

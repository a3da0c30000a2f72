#include "test_util.hpp"

#include <anicemc/adam.hpp>
#include <anicemc/autodiff.hpp>
#include <anicemc/checkpoint.hpp>
#include <anicemc/errors.hpp>
#include <anicemc/mlp.hpp>

#include <gtest/gtest.h>

#include <filesystem>

using namespace anicemc;
using testutil::max_rel_error;
using testutil::numeric_gradient;
using testutil::random_tensor;

TEST(Tensor, ShapeMismatchRejected) {
  EXPECT_THROW(Tensor({2, 3}, std::vector<double>(5)), ConfigError);
  Tape tape;
  auto a = tape.constant(Tensor({2, 3}));
  auto b = tape.constant(Tensor({3, 2}));
  EXPECT_THROW(tape.add(a, b), ConfigError);
  EXPECT_THROW(tape.matmul(a, a), ConfigError);
}

TEST(Tensor, RowMajorLayout) {
  const Tensor t = Tensor::matrix({{1, 2, 3}, {4, 5, 6}});
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
  EXPECT_EQ(t[3], 4.0);
  EXPECT_EQ(t(1, 2), 6.0);
}

TEST(ForwardMlp, ZeroNetworkGivesZero) {
  const Mlp net = Mlp::zeros(3, {}, 2, Activation::Linear);
  Tape tape;
  StreamRng rng(1);
  const auto out = forward_mlp(net, tape.constant(random_tensor({5, 3}, rng)), tape);
  for (double v : out.value().data()) EXPECT_EQ(v, 0.0);
}

TEST(ForwardMlp, IdentityWeightsPassThrough) {
  Mlp net({DenseLayer{Tensor::matrix({{1, 0}, {0, 1}}), Tensor({2}), Activation::Linear}});
  StreamRng rng(2);
  const Tensor x = random_tensor({4, 2}, rng);
  Tape tape;
  EXPECT_EQ(forward_mlp(net, tape.constant(x), tape).value(), x);
  EXPECT_EQ(net.evaluate(x), x);
}

TEST(ForwardMlp, HandEvaluatedAffineRelu) {
  Mlp net({DenseLayer{Tensor::matrix({{2}}), Tensor::vector({1}), Activation::Relu}});
  Tape tape;
  EXPECT_EQ(forward_mlp(net, tape.constant(Tensor::matrix({{-3}})), tape).value().item(), 0.0);
  EXPECT_EQ(forward_mlp(net, tape.constant(Tensor::matrix({{3}})), tape).value().item(), 7.0);
}

TEST(ForwardMlp, WrongWidthIsConfigError) {
  const Mlp net = Mlp::zeros(3, {4}, 1, Activation::Relu);
  Tape tape;
  EXPECT_THROW(forward_mlp(net, tape.constant(Tensor({2, 2})), tape), ConfigError);
}

TEST(Backward, SquareAtThree) {
  Tape tape;
  auto w = tape.variable(Tensor::scalar(3.0));
  const auto g = tape.backward(tape.square(w));
  EXPECT_DOUBLE_EQ(g.wrt(w).item(), 6.0);
}

TEST(Backward, ConstantRootGivesZeroGradient) {
  Tape tape;
  auto w = tape.variable(Tensor::scalar(3.0));
  auto c = tape.constant(Tensor::scalar(5.0));
  const auto g = tape.backward(tape.sum(c));
  EXPECT_EQ(g.wrt(w).item(), 0.0);
}

TEST(Backward, NonScalarRootIsUsageError) {
  Tape tape;
  auto w = tape.variable(Tensor({2, 2}, 1.0));
  EXPECT_THROW(tape.backward(w), UsageError);
}

TEST(Backward, EveryPrimitiveMatchesFiniteDifferences) {
  StreamRng rng(11);
  Tensor a = random_tensor({3, 4}, rng);
  Tensor b = random_tensor({3, 4}, rng);
  // Keep log/sqrt arguments positive and abs/relu away from the kink.
  for (auto& x : b.storage()) x = 0.5 + std::fabs(x);
  for (auto& x : a.storage()) x += (x >= 0 ? 0.1 : -0.1);
  Tensor m = random_tensor({4, 2}, rng);
  Tensor bias = random_tensor({2}, rng);

  using Build = std::function<Var(Tape&, Var, Var, Var, Var)>;
  const std::vector<std::pair<const char*, Build>> cases = {
      {"matmul", [](Tape& t, Var x, Var, Var w, Var) { return t.sum(t.matmul(x, w)); }},
      {"add_bias", [](Tape& t, Var x, Var, Var w, Var c) { return t.sum(t.square(t.add_bias(t.matmul(x, w), c))); }},
      {"add", [](Tape& t, Var x, Var y, Var, Var) { return t.sum(t.square(x + y)); }},
      {"sub", [](Tape& t, Var x, Var y, Var, Var) { return t.sum(t.square(x - y)); }},
      {"mul", [](Tape& t, Var x, Var y, Var, Var) { return t.sum(x * y); }},
      {"scale", [](Tape& t, Var x, Var, Var, Var) { return t.sum(t.square(x * 2.5)); }},
      {"add_scalar", [](Tape& t, Var x, Var, Var, Var) { return t.sum(t.square(x + 0.7)); }},
      {"relu", [](Tape& t, Var x, Var, Var, Var) { return t.sum(t.square(t.relu(x))); }},
      {"leaky_relu", [](Tape& t, Var x, Var, Var, Var) { return t.sum(t.square(t.leaky_relu(x, 0.2))); }},
      {"tanh", [](Tape& t, Var x, Var, Var, Var) { return t.sum(t.tanh(x)); }},
      {"exp", [](Tape& t, Var x, Var, Var, Var) { return t.sum(t.exp(x)); }},
      {"log", [](Tape& t, Var, Var y, Var, Var) { return t.sum(t.log(y)); }},
      {"sqrt", [](Tape& t, Var, Var y, Var, Var) { return t.sum(t.sqrt(y)); }},
      {"abs", [](Tape& t, Var x, Var, Var, Var) { return t.sum(t.abs(x)); }},
      {"max_scalar", [](Tape& t, Var x, Var, Var, Var) { return t.sum(t.square(t.max_scalar(x, 0.05))); }},
      {"mean", [](Tape& t, Var x, Var, Var, Var) { return t.mean(t.square(x)); }},
      {"column_mean", [](Tape& t, Var x, Var, Var, Var) { return t.sum(t.square(t.column_mean(x))); }},
      {"concat_cols", [](Tape& t, Var x, Var y, Var, Var) { return t.sum(t.square(t.concat_cols(x, y)) * t.constant(Tensor({3, 8}, 0.3))); }},
  };
  for (const auto& [name, build] : cases) {
    auto eval = [&]() {
      Tape t;
      return build(t, t.constant(a), t.constant(b), t.constant(m), t.constant(bias)).value().item();
    };
    Tape t;
    Var va = t.parameter(a), vb = t.parameter(b), vm = t.parameter(m), vc = t.parameter(bias);
    const auto g = t.backward(build(t, va, vb, vm, vc));
    for (Tensor* p : {&a, &b, &m, &bias}) {
      EXPECT_LE(max_rel_error(g.of(*p), numeric_gradient(*p, eval)), 1e-4) << name;
    }
  }
}

TEST(Backward, RandomMlpsMatchFiniteDifferences) {
  // 100 random two-layer networks, widths up to 16.
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    StreamRng rng(derive_seed(42, 0, seed));
    std::mt19937_64 init(seed);
    const std::size_t in = 1 + seed % 6, hidden = 2 + seed % 15, out = 1 + seed % 3;
    const Activation act = seed % 3 == 0 ? Activation::Tanh
                           : seed % 3 == 1 ? Activation::LeakyRelu : Activation::Relu;
    Mlp net = Mlp::xavier(in, {hidden}, out, act, init);
    for (auto& l : net.layers()) for (auto& b : l.bias.storage()) b = 0.1 * rng.normal();
    Tensor x = random_tensor({4, in}, rng);
    const Tensor probe = random_tensor({4, out}, rng);
    auto loss = [&](Tape& t, Var input) {
      return t.sum(forward_mlp(net, input, t) * t.constant(probe));
    };
    Tape tape;
    const Var vx = tape.parameter(x);
    const auto g = tape.backward(loss(tape, vx));
    auto eval = [&]() {
      Tape t;
      return loss(t, t.constant(x)).value().item();
    };
    EXPECT_LE(max_rel_error(g.of(x), numeric_gradient(x, eval)), 1e-4) << "seed " << seed;
    for (auto& l : net.layers()) {
      EXPECT_LE(max_rel_error(g.of(l.weight), numeric_gradient(l.weight, eval)), 1e-4) << "seed " << seed;
      EXPECT_LE(max_rel_error(g.of(l.bias), numeric_gradient(l.bias, eval)), 1e-4) << "seed " << seed;
    }
  }
}

TEST(Backward, RepeatedPassesAreBitwiseIdentical) {
  StreamRng rng(5);
  std::mt19937_64 init(5);
  Mlp net = Mlp::xavier(3, {8, 8}, 2, Activation::LeakyRelu, init);
  Tape tape;
  const auto root = tape.sum(tape.square(forward_mlp(net, tape.constant(random_tensor({6, 3}, rng)), tape)));
  const auto g1 = tape.backward(root);
  const auto g2 = tape.backward(root);
  for (const auto& l : net.layers()) {
    EXPECT_EQ(g1.of(l.weight), g2.of(l.weight));
    EXPECT_EQ(g1.of(l.bias), g2.of(l.bias));
  }
}

TEST(Backward, LinearityInTheRoot) {
  StreamRng rng(6);
  Tensor w = random_tensor({3, 3}, rng);
  auto f = [&](Tape& t, Var v) { return t.sum(t.tanh(v)); };
  auto g = [&](Tape& t, Var v) { return t.sum(t.square(v)); };
  Tape t1, t2, t3;
  const auto gf = t1.backward(f(t1, t1.parameter(w))).of(w);
  const auto gg = t2.backward(g(t2, t2.parameter(w))).of(w);
  const Var v = t3.parameter(w);
  const auto gc = t3.backward(f(t3, v) * 2.0 + g(t3, v) * -3.0).of(w);
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(gc[i], 2.0 * gf[i] - 3.0 * gg[i], 1e-12);
}

TEST(Backward, FrozenLeavesReceiveNoGradient) {
  Tensor w = Tensor::matrix({{2.0}});
  Tape tape;
  const Var x = tape.variable(Tensor::matrix({{3.0}}));
  const auto g = tape.backward(tape.sum(tape.matmul(x, tape.frozen(w))));
  EXPECT_FALSE(g.reached(w));
  EXPECT_EQ(g.wrt(x).item(), 2.0);
}

TEST(Adam, ZeroGradientLeavesParametersAndDecaysMoments) {
  Tensor p = Tensor::vector({1.0, -2.0});
  ParamList params{{"p", &p}};
  AdamState st(AdamConfig{0.1, 0.9, 0.999, 1e-8}, params);
  adam_step(params, {Tensor({2})}, st);
  EXPECT_EQ(p[0], 1.0);
  EXPECT_EQ(p[1], -2.0);
  EXPECT_EQ(st.first_moment[0][0], 0.0);
  EXPECT_EQ(st.step, 1u);
  adam_step(params, {Tensor::vector({1.0, 1.0})}, st);
  const double m = st.first_moment[0][0], v = st.second_moment[0][0];
  adam_step(params, {Tensor({2})}, st);
  EXPECT_DOUBLE_EQ(st.first_moment[0][0], 0.9 * m);
  EXPECT_DOUBLE_EQ(st.second_moment[0][0], 0.999 * v);
  EXPECT_EQ(st.step, 3u);
}

TEST(Adam, FirstStepMovesByLearningRateTimesSign) {
  Tensor p = Tensor::vector({0.0, 0.0, 0.0});
  ParamList params{{"p", &p}};
  AdamState st(AdamConfig{0.01, 0.9, 0.999, 1e-8}, params);
  adam_step(params, {Tensor::vector({3.0, -0.5, 1e-3})}, st);
  EXPECT_NEAR(p[0], -0.01, 1e-8);
  EXPECT_NEAR(p[1], 0.01, 1e-8);
  EXPECT_NEAR(p[2], -0.01, 1e-7);
}

TEST(Adam, ConstantGradientMovesMonotonically) {
  Tensor p = Tensor::vector({1.0});
  ParamList params{{"p", &p}};
  AdamState st(AdamConfig{}, params);
  double prev = p[0];
  for (int i = 0; i < 50; ++i) {
    adam_step(params, {Tensor::vector({2.0})}, st);
    EXPECT_LT(p[0], prev);
    prev = p[0];
  }
}

TEST(Adam, NonFiniteGradientNamesParameter) {
  Tensor a = Tensor::vector({1.0}), b = Tensor::vector({1.0});
  ParamList params{{"alpha", &a}, {"beta", &b}};
  AdamState st(AdamConfig{}, params);
  try {
    adam_step(params, {Tensor::vector({1.0}), Tensor::vector({NAN})}, st);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("beta"), std::string::npos);
  }
  EXPECT_EQ(a[0], 1.0);  // nothing updated
}

TEST(Checkpoint, RoundTripAndCorruption) {
  Checkpoint ck;
  ck.metadata = {{"kind", "test"}, {"x", "1"}};
  ck.tensors = {{"w", Tensor::matrix({{1.5, -2.0}, {3.25, 1e-300}})}, {"s", Tensor::scalar(7.0)}};
  const std::string bytes = encode_checkpoint(ck);
  EXPECT_EQ(bytes.substr(0, 8), std::string("ANICEMC\0", 8));
  const Checkpoint back = decode_checkpoint(bytes);
  ASSERT_NE(back.tensor("w"), nullptr);
  EXPECT_EQ(*back.tensor("w"), *ck.tensor("w"));
  EXPECT_EQ(*back.meta("kind"), "test");
  EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() - 3)), IoError);
  EXPECT_THROW(decode_checkpoint("XNICEMC" + bytes.substr(7)), IoError);
  EXPECT_THROW(decode_checkpoint(bytes + "x"), IoError);

  const auto dir = std::filesystem::temp_directory_path() / "anicemc_ckpt_test";
  std::filesystem::remove_all(dir);
  write_checkpoint(dir / "sub" / "m.ckpt", ck);
  EXPECT_EQ(encode_checkpoint(read_checkpoint(dir / "sub" / "m.ckpt")), bytes);
  EXPECT_FALSE(std::filesystem::exists(dir / "sub" / "m.ckpt.tmp"));
  EXPECT_THROW(read_checkpoint(dir / "missing.ckpt"), IoError);
  std::filesystem::remove_all(dir);
}

#include <catch2/catch.hpp>

#include "actionlm/models.hpp"
#include "actionlm/nn/tape.hpp"
#include "support/fd.hpp"

using namespace actionlm;
using nn::Parameter;
using nn::Tape;
using nn::Tensor;
using testsupport::op_fd_max_err;
using testsupport::random_tensor;

// Every differentiable op against central finite differences at 64-bit, with
// the output scalarized through a fixed random weighting so all entries of
// the gradient matter.
TEST_CASE("per-op gradients match finite differences below 1e-6", "[grad]") {
  Rng rng(101);
  const double kTol = 1e-6;

  SECTION("matmul") {
    Parameter<double> a("a", random_tensor({4, 3}, rng));
    Parameter<double> b("b", random_tensor({3, 5}, rng));
    auto r = random_tensor({4, 5}, rng);
    auto build = [&](Tape<double>& t) { return t.sum(t.mul(t.matmul(t.param(a), t.param(b)), t.leaf(r))); };
    CHECK(op_fd_max_err({&a, &b}, build) < kTol);
  }
  SECTION("add and add_bias") {
    Parameter<double> a("a", random_tensor({3, 4}, rng));
    Parameter<double> b("b", random_tensor({3, 4}, rng));
    Parameter<double> bias("bias", random_tensor({4}, rng));
    auto r = random_tensor({3, 4}, rng);
    auto build = [&](Tape<double>& t) {
      return t.sum(t.mul(t.add_bias(t.add(t.param(a), t.param(b)), t.param(bias)), t.leaf(r)));
    };
    CHECK(op_fd_max_err({&a, &b, &bias}, build) < kTol);
  }
  SECTION("relu and scale") {
    Parameter<double> a("a", random_tensor({6, 3}, rng));
    auto r = random_tensor({6, 3}, rng);
    auto build = [&](Tape<double>& t) { return t.sum(t.mul(t.scale(t.relu(t.param(a)), 1.7), t.leaf(r))); };
    CHECK(op_fd_max_err({&a}, build) < kTol);
  }
  SECTION("embedding and select_rows and reshape") {
    Parameter<double> table("table", random_tensor({7, 4}, rng));
    auto r = random_tensor({2, 8}, rng);
    auto build = [&](Tape<double>& t) {
      int e = t.embedding(t.param(table), {3, 0, 6, 3});
      int s = t.select_rows(e, {1, 3, 0, 2});
      return t.sum(t.mul(t.reshape(s, {2, 8}), t.leaf(r)));
    };
    CHECK(op_fd_max_err({&table}, build) < kTol);
  }
  SECTION("layer_norm") {
    Parameter<double> x("x", random_tensor({5, 6}, rng));
    Parameter<double> g("g", random_tensor({6}, rng));
    Parameter<double> b("b", random_tensor({6}, rng));
    auto r = random_tensor({5, 6}, rng);
    auto build = [&](Tape<double>& t) {
      return t.sum(t.mul(t.layer_norm(t.param(x), t.param(g), t.param(b), 1e-5), t.leaf(r)));
    };
    CHECK(op_fd_max_err({&x, &g, &b}, build) < kTol);
  }
  SECTION("softmax and log_softmax") {
    Parameter<double> x("x", random_tensor({4, 5}, rng));
    auto r = random_tensor({4, 5}, rng);
    auto build_s = [&](Tape<double>& t) { return t.sum(t.mul(t.softmax_rows(t.param(x)), t.leaf(r))); };
    CHECK(op_fd_max_err({&x}, build_s) < kTol);
    auto build_ls = [&](Tape<double>& t) { return t.sum(t.mul(t.log_softmax_rows(t.param(x)), t.leaf(r))); };
    CHECK(op_fd_max_err({&x}, build_ls) < kTol);
  }
  SECTION("cross_entropy") {
    Parameter<double> x("x", random_tensor({4, 6}, rng));
    auto build = [&](Tape<double>& t) { return t.cross_entropy(t.param(x), {2, 0, 5, 1}); };
    CHECK(op_fd_max_err({&x}, build) < kTol);
  }
  SECTION("causal attention core") {
    Parameter<double> q("q", random_tensor({6, 4}, rng));
    Parameter<double> k("k", random_tensor({6, 4}, rng));
    Parameter<double> v("v", random_tensor({6, 4}, rng));
    auto r = random_tensor({6, 4}, rng);
    auto build = [&](Tape<double>& t) {
      return t.sum(t.mul(t.causal_attention(t.param(q), t.param(k), t.param(v), 2, 3, 2), t.leaf(r)));
    };
    CHECK(op_fd_max_err({&q, &k, &v}, build) < kTol);
  }
  SECTION("add_cycled_rows") {
    Parameter<double> x("x", random_tensor({6, 4}, rng));
    auto pos = random_tensor({3, 4}, rng);
    auto r = random_tensor({6, 4}, rng);
    auto build = [&](Tape<double>& t) { return t.sum(t.mul(t.add_cycled_rows(t.param(x), pos), t.leaf(r))); };
    CHECK(op_fd_max_err({&x}, build) < kTol);
  }
}

TEST_CASE("small whole-model gradients match finite differences", "[grad]") {
  // Modest dims keep this fast; the acceptance suite repeats it at the
  // pinned sizes (V = 50) over every parameter.
  SECTION("transformer") {
    models::TransformerConfig cfg{10, 2, 2, 14, 13, 4};
    auto m = models::TransformerModel<double>::init(cfg, 7);
    std::vector<std::int32_t> ctx = {3, 1, 12, 5, 0, 7, 9, 2, 4, 4, 6, 11};  // 3 windows
    std::vector<int> targets = {5, 0, 12};
    auto report = testsupport::fd_check_transformer(m, ctx, targets, 1e-5, 1e-4, 1e-8);
    INFO("worst " << report.worst_param << " err " << report.max_err);
    CHECK(report.failures == 0);
    CHECK(report.checked == models::count_parameters(cfg));
  }
  SECTION("mlp via the incremental oracle") {
    models::MlpConfig cfg;
    cfg.d_embed = 8;
    cfg.hidden = 24;
    cfg.layers = 4;
    cfg.vocab = 11;
    cfg.context = 3;
    auto m = models::MlpModel<double>::init(cfg, 9);
    std::vector<std::int32_t> ctx = {1, 5, 8, 3, 0, 2};
    std::vector<int> targets = {4, 6};
    nn::Tape<double> tape;
    int logits = m.forward(tape, ctx.data(), 2);
    int loss = tape.cross_entropy(logits, targets);
    m.params.zero_grads();
    tape.backward(loss);

    testsupport::PlainMlp plain(m, ctx, targets);
    // The plain forward agrees with the tape forward.
    CHECK(plain.loss_full() == Approx(tape.value(loss)[0]).epsilon(1e-12));
    auto report = plain.fd_check(1e-5, 1e-4, 1e-8, 200, 31);
    INFO("worst " << report.worst_param << " err " << report.max_err << " fallbacks " << report.fallbacks);
    CHECK(report.failures == 0);
    CHECK(report.checked == models::count_parameters(cfg));
    CHECK(report.self_check_err < 1e-4);
  }
}

TEST_CASE("gradient accumulates when a parameter is used twice", "[grad]") {
  Rng rng(5);
  Parameter<double> w("w", random_tensor({3, 3}, rng));
  auto r = random_tensor({3, 3}, rng);
  auto build = [&](Tape<double>& t) {
    int node = t.param(w);
    return t.sum(t.mul(t.matmul(node, node), t.leaf(r)));
  };
  CHECK(op_fd_max_err({&w}, build) < 1e-6);
}

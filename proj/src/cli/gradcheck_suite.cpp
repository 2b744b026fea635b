#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "timrl/cli/cli.hpp"
#include "timrl/inference/decoder.hpp"
#include "timrl/inference/encoder.hpp"
#include "timrl/inference/losses.hpp"
#include "timrl/neural/attention.hpp"
#include "timrl/neural/mlp.hpp"
#include "timrl/neural/transformer.hpp"
#include "timrl/numerics/gradcheck.hpp"
#include "timrl/numerics/ops.hpp"
#include "timrl/policy/sac.hpp"

namespace timrl::cli {

namespace {

Tensor uniform(Shape shape, Rng& rng, double lo = -2.0, double hi = 2.0, bool grad = true) {
  std::vector<double> data(shape_numel(shape));
  for (auto& v : data) v = rng.uniform(lo, hi);
  return Tensor(std::move(shape), std::move(data), grad);
}

// Contracts an arbitrary output with fixed random weights so every output
// element contributes a distinct amount to the scalar loss.
std::function<Tensor(const Tensor&)> projector(Rng& rng) {
  auto weights = std::make_shared<std::vector<double>>();
  for (int i = 0; i < 4096; ++i) weights->push_back(rng.uniform(-1.0, 1.0));
  return [weights](const Tensor& out) {
    std::vector<double> w(weights->begin(), weights->begin() + static_cast<std::ptrdiff_t>(out.size()));
    return ops::sum(ops::mul(out, Tensor(out.shape(), std::move(w))));
  };
}

// Parameters with a small seeded offset, so zero-initialized biases do not
// leave ReLU pre-activations sitting exactly on the kink.
std::vector<Tensor> params_of(const ParamList& list, Rng& rng) {
  std::vector<Tensor> out;
  for (const auto& [_, t] : list) {
    Tensor p = t;
    for (auto& v : p.mutable_data()) v += rng.uniform(-0.1, 0.1);
    out.push_back(p);
  }
  return out;
}

// y = x², with a backward rule that forgets the factor 2.
Tensor faulty_square(const Tensor& x) {
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] * x[i];
  Tensor out(x.shape(), std::move(y));
  if (grad_enabled() && x.requires_grad()) {
    auto node = std::make_shared<Node>();
    node->op = "faulty_square";
    node->inputs = {x.impl()};
    auto xi = x.impl();
    node->backward = [xi](std::span<const double> g) {
      if (xi->grad.empty()) xi->grad.assign(xi->data.size(), 0.0);
      for (std::size_t i = 0; i < g.size(); ++i) xi->grad[i] += g[i] * xi->data[i];
    };
    out.impl()->producer = std::move(node);
    out.set_requires_grad(true);
  }
  return out;
}

}  // namespace

std::vector<GradCase> gradcheck_registry(std::uint64_t seed) {
  Rng rng(seed);
  auto proj = projector(rng);
  std::vector<GradCase> cases;
  auto add = [&](std::string name, std::vector<Tensor> inputs, std::function<Tensor()> loss) {
    cases.push_back({std::move(name), std::move(inputs), std::move(loss)});
  };

  {
    Tensor a = uniform({3, 4}, rng), b = uniform({4, 2}, rng);
    add("matmul", {a, b}, [=] { return proj(ops::matmul(a, b)); });
  }
  {
    Tensor x = uniform({3, 4}, rng), w = uniform({2, 4}, rng), b = uniform({2}, rng);
    add("linear", {x, w, b}, [=] { return proj(ops::linear(x, w, b)); });
  }
  {
    Tensor x = uniform({3, 2}, rng);
    add("transpose", {x}, [=] { return proj(ops::transpose(x)); });
  }
  {
    Tensor a = uniform({2, 3}, rng), b = uniform({2, 3}, rng);
    add("add", {a, b}, [=] { return proj(ops::add(a, b)); });
    add("sub", {a, b}, [=] { return proj(ops::sub(a, b)); });
    add("mul", {a, b}, [=] { return proj(ops::mul(a, b)); });
  }
  {
    // Entries kept apart so no pair sits on the kink.
    Tensor a = Tensor::matrix(2, 3, {-1.5, 0.4, 1.2, -0.3, 1.9, -1.1}, true);
    Tensor b = Tensor::matrix(2, 3, {0.7, -0.8, 1.6, -1.4, 0.2, 0.5}, true);
    add("minimum", {a, b}, [=] { return proj(ops::minimum(a, b)); });
  }
  {
    Tensor x = uniform({2, 3}, rng);
    add("scale", {x}, [=] { return proj(ops::scale(x, -1.7)); });
    add("add_scalar", {x}, [=] { return proj(ops::add_scalar(x, 0.3)); });
    add("tanh", {x}, [=] { return proj(ops::tanh(x)); });
    add("exp", {x}, [=] { return proj(ops::exp(x)); });
    add("softplus", {x}, [=] { return proj(ops::softplus(x)); });
    add("sum", {x}, [=] { return ops::scale(ops::sum(x), 0.7); });
    add("mean", {x}, [=] { return ops::scale(ops::mean(x), 0.7); });
    add("mean_rows", {x}, [=] { return proj(ops::mean_rows(x)); });
    add("sum_cols", {x}, [=] { return proj(ops::sum_cols(x)); });
    add("softmax_rows", {x}, [=] { return proj(ops::softmax_rows(x)); });
  }
  {
    Tensor x = Tensor::matrix(2, 3, {-1.5, 0.4, 1.2, -0.3, 1.9, -1.1}, true);
    add("relu", {x}, [=] { return proj(ops::relu(x)); });
    add("clamp", {x}, [=] { return proj(ops::clamp(x, -1.0, 1.0)); });
  }
  {
    Tensor x = uniform({2, 3}, rng, 0.5, 2.0);
    add("log", {x}, [=] { return proj(ops::log(x)); });
  }
  {
    Tensor x = uniform({2, 3}, rng), row = uniform({3}, rng);
    add("add_row", {x, row}, [=] { return proj(ops::add_row(x, row)); });
  }
  {
    Tensor a = uniform({2, 2}, rng), b = uniform({2, 3}, rng), c = uniform({3, 3}, rng);
    add("concat_cols", {a, b}, [=] { return proj(ops::concat_cols({a, b})); });
    add("concat_rows", {b, c}, [=] { return proj(ops::concat_rows({b, c})); });
    add("slice_cols", {c}, [=] { return proj(ops::slice_cols(c, 1, 2)); });
    add("slice_rows", {c}, [=] { return proj(ops::slice_rows(c, 1, 2)); });
  }
  {
    Tensor x = uniform({3, 4}, rng), gain = uniform({4}, rng), bias = uniform({4}, rng);
    add("layer_norm_rows", {x, gain, bias}, [=] { return proj(ops::layer_norm_rows(x, gain, bias)); });
  }
  {
    Tensor mu = uniform({4}, rng), s2 = uniform({4}, rng, 0.3, 2.0);
    Tensor mh = uniform({4}, rng), s2h = uniform({4}, rng, 0.3, 2.0);
    add("gaussian_kl", {mu, s2, mh, s2h}, [=] { return ops::gaussian_kl(mu, s2, mh, s2h); });
  }
  {
    Tensor mu = uniform({1, 3}, rng), sigma = uniform({1, 3}, rng, 0.3, 2.0);
    Tensor noise = uniform({1, 3}, rng, -2.0, 2.0, false);
    add("reparameterize", {mu, sigma}, [=] { return proj(ops::reparameterize(mu, sigma, noise)); });
  }
  {
    Tensor p = uniform({2, 3}, rng), t = uniform({2, 3}, rng);
    add("mse", {p, t}, [=] { return ops::mse(p, t); });
  }

  // Neural building blocks.
  {
    neural::Mlp net({4, 5, 3}, neural::Activation::kTanh, neural::Activation::kIdentity, rng);
    Tensor x = uniform({3, 4}, rng);
    ParamList pl;
    net.append_params(pl, "mlp");
    auto inputs = params_of(pl, rng);
    inputs.push_back(x);
    add("mlp_forward", inputs, [=] { return proj(net.forward(x)); });
  }
  {
    Tensor q = uniform({4, 3}, rng), k = uniform({4, 3}, rng), v = uniform({4, 2}, rng);
    add("attention", {q, k, v}, [=] { return proj(neural::attention(q, k, v)); });
  }
  {
    auto p = neural::AttentionParams::init(4, 2, 2, rng);
    Tensor x = uniform({3, 4}, rng);
    ParamList pl;
    p.append_params(pl, "mha");
    auto inputs = params_of(pl, rng);
    inputs.push_back(x);
    add("multi_head_attention", inputs, [=] { return proj(neural::multi_head_attention(p, x)); });
  }
  {
    neural::TransformerOptions opt;
    opt.d_model = 8;
    opt.heads = 2;
    opt.layers = 1;
    opt.ff_hidden = 8;
    neural::TransformerEncoder enc(opt, rng);
    Tensor x = uniform({6, 8}, rng);
    ParamList pl;
    enc.append_params(pl, "transformer");
    auto inputs = params_of(pl, rng);
    inputs.push_back(x);
    add("transformer_encode", inputs, [=] { return proj(enc.encode(x)); });
  }

  // Losses of the task-inference model.
  {
    Tensor logits = uniform({3, 3}, rng);
    const std::vector<int> labels = {0, 2, 1};
    add("recognition_loss", {logits}, [=] { return inference::recognition_loss(ops::softmax_rows(logits), labels); });
  }
  {
    inference::RowLayout layout{2, 2};
    inference::MdpDecoder dec(layout, 2, 4, rng);
    inference::EncoderOptions eo;
    eo.latent_dim = 2;
    eo.feature_hidden = 4;
    eo.feature_dim = 3;
    eo.trunk_hidden = 4;
    inference::GmmEncoder enc(layout.width(), 2, eo, rng);
    auto ctx = inference::ContextBatch::stack(
        {{{0.1, -0.4, 0.5, -0.2, 0.9, 0.3, -0.6}, {0.7, 0.2, -0.9, 0.4, -0.3, 1.1, 0.2}},
         {{-0.5, 0.8, 0.1, 0.6, -1.2, -0.4, 0.9}}});
    Tensor noise = uniform({2, 2}, rng, -1.0, 1.0, false);
    ParamList pl;
    enc.append_params(pl);
    dec.append_params(pl);
    add("reconstruction_loss", params_of(pl, rng), [=] {
      const auto r = inference::encode(enc, enc.features(ctx), 1, noise);
      return inference::reconstruction_loss(dec, ctx.rows, ops::matmul(ctx.expand, r.z));
    });
    add("regularization_loss", params_of(pl, rng), [=] {
      const auto post = enc.posterior(enc.features(ctx), 0);
      return inference::regularization_loss(enc, {{0, post.mu, post.sigma}});
    });
  }
  {
    Rng local(seed + 1);
    policy::Actor actor(2, 2, 2, {5}, local);
    Tensor obs = uniform({3, 4}, rng, -1.0, 1.0, false);
    Tensor noise = uniform({3, 2}, rng, -1.0, 1.0, false);
    ParamList pl;
    actor.append_params(pl);
    add("actor_log_prob", params_of(pl, rng), [=] {
      const auto s = policy::sample_action(actor, obs, noise);
      return ops::add(proj(s.action), ops::sum(s.log_prob));
    });
  }
  return cases;
}

GradCase corrupted_case(std::uint64_t seed) {
  Rng rng(seed);
  Tensor x = uniform({2, 3}, rng);
  return {"faulty_square", {x}, [x] { return ops::sum(faulty_square(x)); }};
}

std::vector<GradReport> run_gradcheck(const std::vector<GradCase>& cases, double tolerance) {
  std::vector<GradReport> out;
  for (const auto& c : cases) {
    const auto r = check_gradients(c.loss, c.inputs);
    out.push_back({c.name, r.max_rel_error, r.checked, r.max_rel_error < tolerance && r.checked > 0});
  }
  return out;
}

int cmd_gradcheck(bool include_corrupted, std::ostream& out, std::ostream&) {
  auto cases = gradcheck_registry(2024);
  if (include_corrupted) cases.push_back(corrupted_case(2024));
  const auto reports = run_gradcheck(cases, kGradTolerance);
  bool ok = true;
  char buf[160];
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof buf, "%-22s %-4s worst rel. error %.3e over %zu entries\n", r.name.c_str(),
                  r.passed ? "ok" : "FAIL", r.max_rel_error, r.checked);
    out << buf;
    ok = ok && r.passed;
  }
  out << reports.size() << " operations checked, tolerance " << kGradTolerance << "\n";
  return ok ? kExitOk : kExitFailure;
}

}  // namespace timrl::cli

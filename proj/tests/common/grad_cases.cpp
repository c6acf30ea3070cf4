#include "testkit.hpp"
#include "vmr/asymmetry.hpp"
#include "vmr/dataset.hpp"
#include "vmr/encoder.hpp"
#include "vmr/hazard.hpp"
#include "vmr/model.hpp"
#include "vmr/ops.hpp"
#include "vmr/ssm.hpp"
#include "vmr/vmrnn.hpp"

namespace vmr::testkit {

namespace {

NamedLeaves named(const vmrnn::NamedTensors& tensors, const std::string& prefix = "") {
  NamedLeaves out;
  for (const auto& [n, t] : tensors) out.emplace_back(prefix + n, t);
  return out;
}

NamedLeaves ssm_leaves(const ssm::SsmParams& p, const std::string& prefix) {
  static const char* names[] = {"a_log", "d_skip", "w_b", "w_c", "w_dt_down", "w_dt_up", "dt_bias"};
  NamedLeaves out;
  auto ts = p.tensors();
  for (std::size_t i = 0; i < ts.size(); ++i) out.emplace_back(prefix + names[i], ts[i]);
  return out;
}

GradCase unary(const std::string& name, Activation kind) {
  return {name, [kind] {
            Rng rng(11);
            auto x = random_leaf({3, 4}, rng, -2.0, 2.0);
            return gradcheck([&] { return probe(activation(x, kind)); }, {{"x", x}});
          }};
}

GradCase binary(const std::string& name, Tensor (*op)(const Tensor&, const Tensor&), bool scalar_rhs) {
  return {name, [op, scalar_rhs] {
            Rng rng(12);
            auto a = random_leaf({3, 4}, rng);
            auto b = scalar_rhs ? random_leaf({1}, rng) : random_leaf({3, 4}, rng);
            return gradcheck([&] { return probe(op(a, b)); }, {{"a", a}, {"b", b}});
          }};
}

std::vector<GradCase> op_cases() {
  std::vector<GradCase> cases{
      unary("silu", Activation::silu),       unary("sigmoid", Activation::sigmoid),
      unary("tanh", Activation::tanh),       unary("relu", Activation::relu),
      unary("softplus", Activation::softplus), unary("exp", Activation::exp),
      binary("add", add, false),             binary("add_scalar_operand", add, true),
      binary("sub", sub, false),             binary("sub_scalar_operand", sub, true),
      binary("mul", mul, false),             binary("mul_scalar_operand", mul, true),
  };
  cases.push_back({"scale", [] {
                     Rng rng(13);
                     auto x = random_leaf({2, 3}, rng);
                     return gradcheck([&] { return probe(scale(x, -1.7)); }, {{"x", x}});
                   }});
  cases.push_back({"add_scalar", [] {
                     Rng rng(14);
                     auto x = random_leaf({5}, rng);
                     return gradcheck([&] { return probe(mul(add_scalar(x, 0.3), x)); }, {{"x", x}});
                   }});
  cases.push_back({"matmul", [] {
                     Rng rng(15);
                     auto a = random_leaf({3, 4}, rng), b = random_leaf({4, 5}, rng);
                     return gradcheck([&] { return probe(matmul(a, b)); }, {{"a", a}, {"b", b}});
                   }});
  cases.push_back({"linear", [] {
                     Rng rng(16);
                     auto x = random_leaf({3, 4}, rng), w = random_leaf({4, 5}, rng), b = random_leaf({5}, rng);
                     return gradcheck([&] { return probe(linear(x, w, b)); }, {{"x", x}, {"w", w}, {"bias", b}});
                   }});
  cases.push_back({"transpose", [] {
                     Rng rng(17);
                     auto x = random_leaf({3, 5}, rng);
                     return gradcheck([&] { return probe(transpose(x)); }, {{"x", x}});
                   }});
  cases.push_back({"dwconv3x3", [] {
                     Rng rng(18);
                     auto x = random_leaf({2, 5, 6}, rng), k = random_leaf({2, 3, 3}, rng);
                     return gradcheck([&] { return probe(dwconv3x3(x, k)); }, {{"x", x}, {"kernel", k}});
                   }});
  cases.push_back({"conv3x3", [] {
                     Rng rng(19);
                     auto x = random_leaf({3, 5, 4}, rng), w = random_leaf({2, 3, 3, 3}, rng),
                          b = random_leaf({2}, rng);
                     return gradcheck([&] { return probe(conv3x3(x, w, b)); }, {{"x", x}, {"w", w}, {"bias", b}});
                   }});
  cases.push_back({"add_channel_bias", [] {
                     Rng rng(20);
                     auto x = random_leaf({3, 2, 2}, rng), b = random_leaf({3}, rng);
                     return gradcheck([&] { return probe(add_channel_bias(x, b)); }, {{"x", x}, {"bias", b}});
                   }});
  cases.push_back({"avgpool2x2", [] {
                     Rng rng(21);
                     auto x = random_leaf({2, 4, 6}, rng);
                     return gradcheck([&] { return probe(avgpool2x2(x)); }, {{"x", x}});
                   }});
  cases.push_back({"layernorm", [] {
                     Rng rng(22);
                     auto x = random_leaf({3, 5}, rng), g = random_leaf({5}, rng), b = random_leaf({5}, rng);
                     return gradcheck([&] { return probe(layernorm(x, g, b)); }, {{"x", x}, {"gamma", g}, {"beta", b}});
                   }});
  cases.push_back({"softmax_rows", [] {
                     Rng rng(23);
                     auto x = random_leaf({3, 4}, rng, -2.0, 2.0);
                     return gradcheck([&] { return probe(softmax_rows(x)); }, {{"x", x}});
                   }});
  cases.push_back({"sum", [] {
                     Rng rng(24);
                     auto x = random_leaf({2, 3}, rng);
                     return gradcheck([&] { return mul(sum(x), sum(x)); }, {{"x", x}});
                   }});
  cases.push_back({"mean", [] {
                     Rng rng(25);
                     auto x = random_leaf({2, 3}, rng);
                     return gradcheck([&] { return mul(mean(x), sum(x)); }, {{"x", x}});
                   }});
  cases.push_back({"mean_spatial", [] {
                     Rng rng(26);
                     auto x = random_leaf({2, 3, 4}, rng);
                     return gradcheck([&] { return probe(mean_spatial(x)); }, {{"x", x}});
                   }});
  cases.push_back({"cumsum", [] {
                     Rng rng(27);
                     auto x = random_leaf({7}, rng);
                     return gradcheck([&] { return probe(cumsum(x)); }, {{"x", x}});
                   }});
  cases.push_back({"reshape", [] {
                     Rng rng(28);
                     auto x = random_leaf({2, 6}, rng);
                     return gradcheck([&] { return probe(reshape(x, {3, 4})); }, {{"x", x}});
                   }});
  cases.push_back({"gather", [] {
                     Rng rng(29);
                     auto x = random_leaf({5}, rng);
                     return gradcheck([&] { return probe(gather(x, {4, 0, 0, 2, 4, 4}, {2, 3})); }, {{"x", x}});
                   }});
  cases.push_back({"concat", [] {
                     Rng rng(30);
                     auto a = random_leaf({2}, rng), b = random_leaf({2, 2}, rng), c = random_leaf({1}, rng);
                     return gradcheck([&] {
                       const std::array<Tensor, 3> parts{a, b, c};
                       return probe(concat(parts));
                     },
                                      {{"a", a}, {"b", b}, {"c", c}});
                   }});
  cases.push_back({"channel_norm", [] {
                     Rng rng(31);
                     auto x = random_leaf({3, 4, 5}, rng);
                     return gradcheck([&] { return probe(channel_norm(x)); }, {{"x", x}});
                   }});
  cases.push_back({"weighted_bce_with_logits", [] {
                     Rng rng(32);
                     auto z = random_leaf({5}, rng, -3.0, 3.0);
                     const std::vector<double> t{1, 0, 1, 0, 1}, w{0.5, 2.0, 0.0, 1.0, 1.5};
                     return gradcheck([&] { return weighted_bce_with_logits(z, t, w); }, {{"logits", z}});
                   }});
  cases.push_back({"to_tokens/from_tokens", [] {
                     Rng rng(33);
                     auto x = random_leaf({3, 2, 4}, rng), t = random_leaf({6, 2}, rng);
                     return gradcheck([&] { return add(probe(to_tokens(x)), probe(from_tokens(t, 3, 2), 5)); },
                                      {{"x", x}, {"tokens", t}});
                   }});
  cases.push_back({"flip_width", [] {
                     Rng rng(34);
                     auto x = random_leaf({2, 3, 5}, rng);
                     return gradcheck([&] { return probe(flip_width(x)); }, {{"x", x}});
                   }});
  return cases;
}

std::vector<GradCase> ssm_cases() {
  std::vector<GradCase> cases;
  cases.push_back({"selective_scan", [] {
                     Rng rng(40);
                     const std::size_t L = 6, C = 3, N = 4;
                     auto u = random_leaf({L, C}, rng), delta = random_leaf({L, C}, rng, 0.05, 0.6),
                          a = random_leaf({C, N}, rng, -2.0, -0.2), b = random_leaf({L, N}, rng),
                          c = random_leaf({L, N}, rng), d = random_leaf({C}, rng);
                     return gradcheck([&] { return probe(ssm::selective_scan(u, delta, a, b, c, d)); },
                                      {{"u", u}, {"delta", delta}, {"a", a}, {"b", b}, {"c", c}, {"d", d}});
                   }});
  cases.push_back({"s6_forward", [] {
                     Rng rng(41);
                     auto p = ssm::SsmParams::init(3, 4, rng);
                     auto u = random_leaf({9, 3}, rng);
                     auto leaves = ssm_leaves(p, "");
                     leaves.emplace_back("u", u);
                     return gradcheck([&] { return probe(ssm::s6_forward(p, u)); }, leaves);
                   }});
  cases.push_back({"cross_scan_expand/merge", [] {
                     Rng rng(42);
                     auto x = random_leaf({2, 3, 4}, rng);
                     std::array<Tensor, 4> ys;
                     NamedLeaves leaves{{"x", x}};
                     for (std::size_t v = 0; v < 4; ++v) {
                       ys[v] = random_leaf({12, 2}, rng);
                       leaves.emplace_back("y" + std::to_string(v), ys[v]);
                     }
                     return gradcheck(
                         [&] {
                           auto seqs = ssm::cross_scan_expand(x);
                           Tensor acc = probe(ssm::cross_merge(ys, 3, 4), 3);
                           for (std::size_t v = 0; v < 4; ++v) acc = add(acc, probe(seqs[v], 10 + v));
                           return acc;
                         },
                         leaves);
                   }});
  return cases;
}

vmrnn::VmrnnConfig small_vmrnn() {
  vmrnn::VmrnnConfig cfg;
  cfg.feature_dim = 6;
  cfg.channels = 8;
  cfg.height = 8;
  cfg.width = 8;
  cfg.state_dim = 4;
  return cfg;
}

std::vector<GradCase> vmrnn_cases() {
  std::vector<GradCase> cases;
  cases.push_back({"lp_fuse", [] {
                     Rng rng(50);
                     vmrnn::VmrnnConfig cfg = small_vmrnn();
                     cfg.channels = 2;
                     cfg.height = cfg.width = 2;
                     auto f = random_leaf({6}, rng), h = random_leaf({2, 2, 2}, rng);
                     auto w = random_leaf({cfg.lp_inputs(), 8}, rng), b = random_leaf({8}, rng);
                     return gradcheck([&] { return probe(vmrnn::lp_fuse(f, h, 0.9, true, w, b, cfg)); },
                                      {{"fused", f}, {"hidden", h}, {"weight", w}, {"bias", b}});
                   }});
  cases.push_back({"patch_merge/expand/pointwise", [] {
                     Rng rng(51);
                     auto x = random_leaf({2, 4, 4}, rng);
                     auto dw = random_leaf({8, 4}, rng), db = random_leaf({4}, rng);
                     auto uw = random_leaf({4, 8}, rng), ub = random_leaf({8}, rng);
                     auto pw = random_leaf({2, 2}, rng), pb = random_leaf({2}, rng);
                     return gradcheck(
                         [&] {
                           return probe(vmrnn::pointwise(
                               vmrnn::patch_expand(vmrnn::patch_merge(x, dw, db), uw, ub), pw, pb));
                         },
                         {{"x", x}, {"down_w", dw}, {"down_b", db}, {"up_w", uw}, {"up_b", ub}, {"pw_w", pw},
                          {"pw_b", pb}});
                   }});
  cases.push_back({"vss_forward", [] {
                     Rng rng(52);
                     auto p = vmrnn::VssParams::init(4, 3, rng);
                     auto x = random_leaf({4, 4, 4}, rng);
                     vmrnn::NamedTensors nt;
                     p.append_named("", nt);
                     auto leaves = named(nt);
                     leaves.emplace_back("x", x);
                     return gradcheck(
                         [&] {
                           auto out = vmrnn::vss_forward(x, p);
                           return add(probe(out.y), probe(out.gate, 7));
                         },
                         leaves);
                   }});
  cases.push_back({"cell_step", [] {
                     Rng rng(53);
                     auto y = random_leaf({2, 3, 3}, rng, -2.0, 2.0), c = random_leaf({2, 3, 3}, rng),
                          h = random_leaf({2, 3, 3}, rng);
                     return gradcheck(
                         [&] {
                           auto next = vmrnn::cell_step({h, c, 0}, {y, sigmoid(y)});
                           return add(probe(next.hidden), probe(next.cell, 8));
                         },
                         {{"y", y}, {"cell_prev", c}, {"hidden_prev", h}});
                   }});
  cases.push_back({"vmrnn_block_T3", [] {
                     Rng rng(54);
                     auto params = vmrnn::BlockParams::init(small_vmrnn(), rng);
                     std::vector<Tensor> feats;
                     for (int t = 0; t < 3; ++t) feats.push_back(random_leaf({6}, rng));
                     auto leaves = named(params.named_tensors());
                     for (std::size_t t = 0; t < feats.size(); ++t)
                       leaves.emplace_back("fused" + std::to_string(t), feats[t]);
                     GradCheckOptions opt;
                     opt.max_entries = 12;
                     return gradcheck(
                         [&] {
                           std::vector<vmrnn::StepInput> steps{
                               {feats[0], 0.0, true}, {feats[1], 1.1, true}, {feats[2], 0.9, true}};
                           auto r = vmrnn::vmrnn_block_forward(steps, params);
                           return add(probe(r.output), probe(r.states.back().hidden, 4));
                         },
                         leaves, opt);
                   }});
  return cases;
}

std::vector<GradCase> encoder_cases() {
  std::vector<GradCase> cases;
  cases.push_back({"encode_view", [] {
                     Rng rng(60);
                     encoder::EncoderConfig cfg{16, {2, 3, 4}};
                     auto p = encoder::EncoderParams::init(cfg, rng);
                     auto img = random_leaf({1, 16, 16}, rng, 0.1, 0.9);
                     auto leaves = named(p.named_tensors());
                     leaves.emplace_back("image", img);
                     return gradcheck(
                         [&] { return add(probe(encoder::encode_view(img, p)), probe(encoder::encode_view(img, p, true), 6)); },
                         leaves);
                   }});
  cases.push_back({"fuse_views", [] {
                     Rng rng(61);
                     encoder::FusionConfig cfg{4, 8, 2, 12};
                     auto p = encoder::FusionParams::init(cfg, rng);
                     // Non-trivial embeddings so every parameter path is exercised.
                     for (auto* t : {&p.absent_embed, &p.token_bias, &p.out_bias, &p.ffn_b1, &p.ffn_b2})
                       for (auto& v : t->mutable_data()) v = std::uniform_real_distribution<double>(-0.5, 0.5)(rng);
                     std::array<Tensor, 4> feats;
                     auto leaves = named(p.named_tensors());
                     for (std::size_t v = 0; v < 4; ++v) {
                       feats[v] = random_leaf({4, 2, 2}, rng);
                       leaves.emplace_back("feature" + std::to_string(v), feats[v]);
                     }
                     const std::array<bool, 4> present{true, true, false, true};
                     return gradcheck([&] { return probe(encoder::fuse_views(feats, present, p).fused); }, leaves);
                   }});
  return cases;
}

void randomize(const vmrnn::NamedTensors& tensors, Rng& rng, double bound) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (const auto& [_, t] : tensors) {
    Tensor h = t;
    for (auto& v : h.mutable_data()) v = dist(rng);
  }
}

std::vector<GradCase> asym_hazard_cases() {
  std::vector<GradCase> cases;
  cases.push_back({"sad_compute", [] {
                     Rng rng(70);
                     auto l = random_leaf({3, 4, 5}, rng), r = random_leaf({3, 4, 5}, rng);
                     return gradcheck(
                         [&] {
                           auto s = asym::sad_compute(l, r);
                           return add(probe(s.d_norm), s.d_max);
                         },
                         {{"left", l}, {"right", r}});
                   }});
  cases.push_back({"fuse_asymmetry", [] {
                     Rng rng(71);
                     std::vector<Tensor> d{random_leaf({1}, rng, 0.1, 2.0), random_leaf({1}, rng, 0.1, 2.0),
                                           random_leaf({1}, rng, 0.1, 2.0)};
                     return gradcheck(
                         [&] { return mul(asym::fuse_asymmetry(d, true, 0.5), asym::fuse_asymmetry(d, false, 0.5)); },
                         {{"d0", d[0]}, {"d1", d[1]}, {"d2", d[2]}});
                   }});
  cases.push_back({"ahl_forward+risk_loss", [] {
                     Rng rng(72);
                     auto p = hazard::AhlParams::init(6);
                     randomize(p.named_tensors(), rng, 0.8);
                     auto hist = random_leaf({5}, rng), raa = random_leaf({1}, rng, 0.0, 2.0);
                     auto leaves = named(p.named_tensors());
                     leaves.emplace_back("history", hist);
                     leaves.emplace_back("r_aa", raa);
                     const std::vector<double> w{1.2, 0.8, 1.0, 0.9, 1.1, 0.7};
                     hazard::Label event{2, 5}, censored{std::nullopt, 3};
                     return gradcheck(
                         [&] {
                           auto out = hazard::ahl_forward(hazard::risk_input(hist, raa), p);
                           return add(hazard::risk_loss(out, event, w), hazard::risk_loss(out, censored, w));
                         },
                         leaves);
                   }});
  cases.push_back({"pool_history", [] {
                     Rng rng(73);
                     auto h = random_leaf({3, 2, 2}, rng);
                     return gradcheck(
                         [&] {
                           std::vector<vmrnn::VmrnnState> states{{h, h, 1}};
                           return probe(hazard::pool_history(states));
                         },
                         {{"hidden", h}});
                   }});
  return cases;
}

GradCase pipeline_case() {
  return {"full_model_forward+loss", [] {
            harness::SyntheticConfig data_cfg;
            data_cfg.n_subjects = 2;
            data_cfg.image_size = 16;
            data_cfg.lesion_base_sigma = 1.0;
            data_cfg.missing_exam_probability = 0.3;
            data_cfg.seed = 5;
            const auto data = harness::gen_synthetic(data_cfg);
            auto model = harness::Model::init(tiny_model_config(), 3);
            Rng rng(80);
            randomize(model.ahl.named_tensors(), rng, 0.5);
            const std::vector<double> w(hazard::kYears + 1, 1.0);
            GradCheckOptions opt;
            opt.max_entries = 4;
            return gradcheck(
                [&] {
                  Tensor loss = Tensor::scalar(0.0);
                  for (const auto& s : data.subjects)
                    loss = add(loss, hazard::risk_loss(harness::forward(model, s).risk, s.label, w));
                  return loss;
                },
                named(model.named_tensors()), opt);
          }};
}

}  // namespace

harness::ModelConfig tiny_model_config() {
  harness::ModelConfig cfg;
  cfg.encoder = {16, {2, 3, 4}};
  cfg.fusion = {4, 8, 2, 12};
  cfg.vmrnn.feature_dim = 8;
  cfg.vmrnn.channels = 2;
  cfg.vmrnn.height = cfg.vmrnn.width = 4;
  cfg.vmrnn.state_dim = 3;
  cfg.asym.window_side = 2;
  return cfg;
}

std::vector<GradCase> gradient_cases() {
  std::vector<GradCase> all;
  for (auto part : {op_cases(), ssm_cases(), vmrnn_cases(), encoder_cases(), asym_hazard_cases()})
    for (auto& c : part) all.push_back(std::move(c));
  all.push_back(pipeline_case());
  return all;
}

}  // namespace vmr::testkit

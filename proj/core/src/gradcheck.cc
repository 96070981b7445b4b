// core/src/gradcheck.cc

// Copyright 2026  The subemb authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "subemb/gradcheck.h"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "subemb/encoder.h"
#include "subemb/losses.h"
#include "subemb/masks.h"
#include "subemb/numerics.h"

namespace subemb {

namespace {

constexpr double kFdStep = 1e-5;
constexpr double kFdTolerance = 1e-5;
constexpr double kClosedFormTolerance = 1e-8;

// Relative error with a floor on the denominator: finite-difference noise on
// near-zero coordinates must not read as disagreement, while sign flips of
// any meaningful gradient still blow past the tolerance.
double RelError(double a, double b) {
  return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), 1e-2});
}

struct TrialSetup {
  EncoderParams params;
  Vec input;
  PrototypeBank bank;
  Discriminator disc;
  MaskSet masks;
  std::vector<int> labels;
  int identity = 0;
  double margin = 0.0;
  double lambda_reg = 0.0, lambda_cls = 0.0, lambda_adv = 0.0;
};

TrialSetup MakeTrial(RngStream rng) {
  EncoderConfig cfg;
  cfg.input_dim = rng.UniformInt(4, 10);
  cfg.hidden_dims = {rng.UniformInt(4, 9)};
  if (rng.Uniform() < 0.5) cfg.hidden_dims.push_back(rng.UniformInt(3, 7));
  cfg.group_count = rng.UniformInt(1, 3);
  cfg.embedding_dim = cfg.group_count * rng.UniformInt(2, 4);
  cfg.nonlinearity = "tanh";
  cfg.initial_confidence = rng.Uniform(1.0, 6.0);

  TrialSetup t;
  t.params = InitEncoder(cfg, rng.Derive("init"));
  t.input.resize(cfg.input_dim);
  for (double &x : t.input) x = rng.Derive("input").Normal();

  const int n_identities = rng.UniformInt(2, 5);
  t.bank = InitPrototypeBank(n_identities, cfg.group_count, cfg.GroupDim(),
                             rng.Derive("bank"));
  t.identity = rng.UniformInt(0, n_identities - 1);
  t.margin = rng.Uniform(0.0, 2.0);
  t.lambda_reg = rng.Uniform(0.0, 0.01);
  t.lambda_cls = rng.Uniform(0.5, 2.0);
  t.lambda_adv = rng.Uniform(0.5, 2.0);

  // A workable mask set needs group_count >= 2; with K = 1 the trial skips
  // the decorrelation paths (handled by the caller).
  if (cfg.group_count >= 2) {
    const int n_variations = 2;
    t.masks = GenerateMasks(cfg.group_count, n_variations, rng.Derive("masks"));
    t.disc = InitDiscriminator(n_variations, cfg.embedding_dim,
                               rng.Derive("disc"));
    // Nudge the discriminator away from its near-zero init so the
    // decorrelation losses have meaningful curvature.
    RngStream drng = rng.Derive("disc-scale");
    for (double &w : t.disc.weight.Data()) w += 0.3 * drng.Normal();
    t.labels.resize(n_variations);
    for (int &u : t.labels) u = rng.UniformInt(0, 1);
  }
  return t;
}

struct CaseTracker {
  GradCheckCase result;
  bool fault_injected = false;

  explicit CaseTracker(const std::string &name, double tolerance) {
    result.name = name;
    result.tolerance = tolerance;
  }

  void Observe(double err, const std::string &param) {
    if (err > result.max_error) {
      result.max_error = err;
      result.worst_param = param;
    }
  }

  void Finish() { result.pass = result.max_error < result.tolerance; }
};

// Flips the sign of the largest-magnitude entry; returns its index.
size_t InjectFault(Vec *grad) {
  size_t worst = 0;
  for (size_t i = 1; i < grad->size(); ++i)
    if (std::fabs((*grad)[i]) > std::fabs((*grad)[worst])) worst = i;
  (*grad)[worst] = -(*grad)[worst];
  return worst;
}

void CompareToFd(const Vec &analytic, const Vec &fd, CaseTracker *tracker,
                 const std::function<std::string(size_t)> &name_of) {
  for (size_t i = 0; i < analytic.size(); ++i)
    tracker->Observe(RelError(analytic[i], fd[i]), name_of(i));
}

// Total per-sample encoder objective (identification + confidence
// regularizer + decorrelation pair) as a function of the flattened encoder
// parameters; shared by the value path and the analytic-gradient path.
double EncoderObjective(const TrialSetup &t, const EncoderParams &params,
                        Vec *grad_f_out, Vec *grad_s_out,
                        EncoderTape *tape_out) {
  EncoderTape tape;
  const ProbEmbedding e = EncoderForward(params, t.input, &tape);
  IdtResult idt = IdtLoss(e, t.bank, t.identity, t.margin);
  double loss = idt.loss + t.lambda_reg * ConfReg(e);
  Vec grad_f = std::move(idt.grad_f);
  Vec grad_s = std::move(idt.grad_s);
  Axpy(t.lambda_reg, ConfRegGrad(e), grad_s);
  if (!t.masks.masks.empty()) {
    VariationLossResult cls = VariationClsLoss(t.disc, e, t.masks, t.labels);
    VariationLossResult adv = VariationAdvLoss(t.disc, e, t.masks, t.labels);
    loss += t.lambda_cls * cls.loss + t.lambda_adv * adv.loss;
    Axpy(t.lambda_cls, cls.grad_f, grad_f);
    Axpy(t.lambda_adv, adv.grad_f, grad_f);
  }
  if (grad_f_out != nullptr) *grad_f_out = std::move(grad_f);
  if (grad_s_out != nullptr) *grad_s_out = std::move(grad_s);
  if (tape_out != nullptr) *tape_out = std::move(tape);
  return loss;
}

}  // namespace

GradCheckReport RunGradientChecks(const GradCheckOptions &options) {
  if (options.trials < 1)
    throw ConfigError("RunGradientChecks: trials must be >= 1");
  RngStream root(options.seed, "gradcheck");

  CaseTracker encoder_case("encoder_backward", kFdTolerance);
  CaseTracker objective_case("total_objective_wrt_encoder", kFdTolerance);
  CaseTracker bank_case("idt_wrt_prototypes", kFdTolerance);
  CaseTracker disc_case("disc_loss_wrt_discriminator", kFdTolerance);
  CaseTracker conf_case("mls_finetune_wrt_conf_head", kFdTolerance);
  CaseTracker closed_case("idt_closed_form_vs_reverse_mode",
                          kClosedFormTolerance);

  for (int trial = 0; trial < options.trials; ++trial) {
    RngStream trial_rng = root.Derive(static_cast<uint64_t>(trial));
    TrialSetup t = MakeTrial(trial_rng);
    const EncoderConfig &cfg = t.params.config;

    // --- encoder backward against finite differences through a fixed random
    // linear functional of (sub-embeddings, confidences).
    {
      Vec g_f(cfg.embedding_dim), g_s(cfg.group_count);
      RngStream up = trial_rng.Derive("upstream");
      for (double &v : g_f) v = up.Normal();
      for (double &v : g_s) v = up.Normal();

      EncoderTape tape;
      const ProbEmbedding e = EncoderForward(t.params, t.input, &tape);
      (void)e;
      EncoderGrads grads = ZeroGradsLike(t.params);
      EncoderBackward(t.params, tape, g_f, g_s, &grads);
      Vec analytic = GradsToVector(cfg, grads);
      if (options.fault_inject_case == encoder_case.result.name)
        InjectFault(&analytic);

      EncoderParams probe = t.params;
      const Vec fd = FiniteDiffGrad(
          [&](const Vec &flat) {
            VectorToParams(flat, &probe);
            const ProbEmbedding pe = EncoderForward(probe, t.input);
            return Dot(g_f, pe.sub_embeddings) + Dot(g_s, pe.confidences);
          },
          ParamsToVector(t.params), kFdStep);
      CompareToFd(analytic, fd, &encoder_case,
                  [&](size_t i) { return ParamName(cfg, i); });
    }

    // --- full per-sample objective, gradient with respect to all encoder
    // parameters (exercises the loss gradients chained through the encoder).
    {
      Vec grad_f, grad_s;
      EncoderTape tape;
      EncoderObjective(t, t.params, &grad_f, &grad_s, &tape);
      EncoderGrads grads = ZeroGradsLike(t.params);
      EncoderBackward(t.params, tape, grad_f, grad_s, &grads);
      Vec analytic = GradsToVector(cfg, grads);
      if (options.fault_inject_case == objective_case.result.name)
        InjectFault(&analytic);

      EncoderParams probe = t.params;
      const Vec fd = FiniteDiffGrad(
          [&](const Vec &flat) {
            VectorToParams(flat, &probe);
            return EncoderObjective(t, probe, nullptr, nullptr, nullptr);
          },
          ParamsToVector(t.params), kFdStep);
      CompareToFd(analytic, fd, &objective_case,
                  [&](size_t i) { return ParamName(cfg, i); });
    }

    const ProbEmbedding e = EncoderForward(t.params, t.input);

    // --- identification loss with respect to the prototype bank.
    {
      IdtResult idt = IdtLoss(e, t.bank, t.identity, t.margin);
      Vec analytic = idt.grad_bank.Data();
      if (options.fault_inject_case == bank_case.result.name)
        InjectFault(&analytic);

      PrototypeBank probe = t.bank;
      const Vec fd = FiniteDiffGrad(
          [&](const Vec &flat) {
            probe.prototypes.Data() = flat;
            return IdtLoss(e, probe, t.identity, t.margin).loss;
          },
          t.bank.prototypes.Data(), kFdStep);
      CompareToFd(analytic, fd, &bank_case, [&](size_t i) {
        const int cols = t.bank.Dim();
        return "prototypes[" + std::to_string(i / cols) + "," +
               std::to_string(i % cols) + "]";
      });
    }

    // --- discriminator loss with respect to discriminator parameters.
    if (!t.masks.masks.empty()) {
      DiscResult d = DiscLoss(t.disc, e, t.masks, t.labels);
      Vec analytic = d.grad_weight.Data();
      analytic.insert(analytic.end(), d.grad_bias.begin(), d.grad_bias.end());
      if (options.fault_inject_case == disc_case.result.name)
        InjectFault(&analytic);

      Vec flat0 = t.disc.weight.Data();
      flat0.insert(flat0.end(), t.disc.bias.begin(), t.disc.bias.end());
      Discriminator probe = t.disc;
      const size_t w_count = t.disc.weight.Data().size();
      const Vec fd = FiniteDiffGrad(
          [&](const Vec &flat) {
            std::copy(flat.begin(), flat.begin() + w_count,
                      probe.weight.Data().begin());
            std::copy(flat.begin() + w_count, flat.end(), probe.bias.begin());
            return DiscLoss(probe, e, t.masks, t.labels).loss;
          },
          flat0, kFdStep);
      CompareToFd(analytic, fd, &disc_case, [&](size_t i) {
        if (i < w_count) {
          const int cols = t.disc.weight.NumCols();
          return "discriminator.weight[" + std::to_string(i / cols) + "," +
                 std::to_string(i % cols) + "]";
        }
        return "discriminator.bias[" + std::to_string(i - w_count) + "]";
      });
    }

    // --- mutual-likelihood fine-tuning objective with respect to the
    // confidence head (embedding branch frozen), via a two-sample pair.
    {
      Vec input_b(cfg.input_dim);
      RngStream brng = trial_rng.Derive("input-b");
      for (double &x : input_b) x = brng.Normal();

      auto pair_objective = [&](const EncoderParams &p) {
        const ProbEmbedding ea = EncoderForward(p, t.input);
        const ProbEmbedding eb = EncoderForward(p, input_b);
        double obj = 0.0;
        for (int k = 0; k < cfg.group_count; ++k) {
          const double var = 1.0 / ea.confidences[k] + 1.0 / eb.confidences[k];
          obj += -0.5 * SquaredDistance(ea.Group(k), eb.Group(k)) / var -
                 (static_cast<double>(cfg.embedding_dim) /
                  (2.0 * cfg.group_count)) *
                     std::log(var);
        }
        return obj;
      };

      // Analytic gradient through s = exp(logit), conf head only.
      EncoderTape tape_a, tape_b;
      const ProbEmbedding ea = EncoderForward(t.params, t.input, &tape_a);
      const ProbEmbedding eb = EncoderForward(t.params, input_b, &tape_b);
      Mat head_w(cfg.group_count, cfg.hidden_dims.back());
      Vec head_b(cfg.group_count, 0.0);
      for (int k = 0; k < cfg.group_count; ++k) {
        const double var_a = 1.0 / ea.confidences[k];
        const double var_b = 1.0 / eb.confidences[k];
        const double var = var_a + var_b;
        const double dist = SquaredDistance(ea.Group(k), eb.Group(k));
        const double dvar = 0.5 * dist / (var * var) -
                            static_cast<double>(cfg.embedding_dim) /
                                (2.0 * cfg.group_count * var);
        const double dlogit_a = dvar * (-var_a * var_a) * ea.confidences[k];
        const double dlogit_b = dvar * (-var_b * var_b) * eb.confidences[k];
        for (int c = 0; c < head_w.NumCols(); ++c)
          head_w(k, c) += dlogit_a * tape_a.trunk_act.back()[c] +
                          dlogit_b * tape_b.trunk_act.back()[c];
        head_b[k] += dlogit_a + dlogit_b;
      }
      Vec analytic = head_w.Data();
      analytic.insert(analytic.end(), head_b.begin(), head_b.end());
      if (options.fault_inject_case == conf_case.result.name)
        InjectFault(&analytic);

      Vec flat0 = t.params.conf_head.weight.Data();
      flat0.insert(flat0.end(), t.params.conf_head.bias.begin(),
                   t.params.conf_head.bias.end());
      EncoderParams probe = t.params;
      const size_t w_count = t.params.conf_head.weight.Data().size();
      const Vec fd = FiniteDiffGrad(
          [&](const Vec &flat) {
            std::copy(flat.begin(), flat.begin() + w_count,
                      probe.conf_head.weight.Data().begin());
            std::copy(flat.begin() + w_count, flat.end(),
                      probe.conf_head.bias.begin());
            return pair_objective(probe);
          },
          flat0, kFdStep);
      CompareToFd(analytic, fd, &conf_case, [&](size_t i) {
        if (i < w_count) {
          const int cols = cfg.hidden_dims.back();
          return "conf_head.weight[" + std::to_string(i / cols) + "," +
                 std::to_string(i % cols) + "]";
        }
        return "conf_head.bias[" + std::to_string(i - w_count) + "]";
      });
    }

    // --- closed forms against the reverse-mode identification gradients.
    {
      IdtResult idt = IdtLoss(e, t.bank, t.identity, t.margin);
      ClosedFormIdtGrads closed =
          IdtGradsClosedForm(e, t.bank, t.identity, idt.posterior);
      Vec closed_flat = closed.grad_bank.Data();
      closed_flat.insert(closed_flat.end(), closed.grad_f.begin(),
                         closed.grad_f.end());
      Vec reverse_flat = idt.grad_bank.Data();
      reverse_flat.insert(reverse_flat.end(), idt.grad_f.begin(),
                          idt.grad_f.end());
      if (options.fault_inject_case == closed_case.result.name)
        InjectFault(&closed_flat);
      for (size_t i = 0; i < closed_flat.size(); ++i) {
        const double err = std::fabs(closed_flat[i] - reverse_flat[i]);
        closed_case.Observe(
            err, i < t.bank.prototypes.Data().size()
                     ? "prototypes[" +
                           std::to_string(i / t.bank.Dim()) + "," +
                           std::to_string(i % t.bank.Dim()) + "]"
                     : "sub_embeddings[" +
                           std::to_string(i - t.bank.prototypes.Data().size()) +
                           "]");
      }
    }
  }

  GradCheckReport report;
  report.trials = options.trials;
  for (CaseTracker *tracker : {&encoder_case, &objective_case, &bank_case,
                               &disc_case, &conf_case, &closed_case}) {
    tracker->Finish();
    report.all_pass = report.all_pass && tracker->result.pass;
    report.cases.push_back(tracker->result);
  }
  return report;
}

std::string GradCheckReport::ToTable() const {
  std::ostringstream out;
  out << "gradient checks over " << trials << " random configurations\n";
  for (const GradCheckCase &c : cases) {
    const std::string status = c.pass ? "pass" : "FAIL at " + c.worst_param;
    char buf[160];
    std::snprintf(buf, sizeof buf, "  %-36s max_err %.3e  tol %.0e  %s\n",
                  c.name.c_str(), c.max_error, c.tolerance, status.c_str());
    out << buf;
  }
  out << (all_pass ? "all gradient checks passed\n"
                   : "gradient checks FAILED\n");
  return out.str();
}

}  // namespace subemb

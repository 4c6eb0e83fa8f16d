#include "tinyssd/gradcheck.hpp"

#include <cmath>

#include "tinyssd/matching.hpp"
#include "tinyssd/net.hpp"
#include "tinyssd/rng.hpp"

namespace tinyssd {

namespace {

constexpr double kStep = 1e-5;

// relative error with an absolute floor: tiny gradients only need to agree
// absolutely
double rel_err(double analytic, double numeric) {
  const double diff = std::abs(analytic - numeric);
  if (diff <= 1e-6) return 0.0;
  return diff / std::max(std::abs(analytic), std::abs(numeric));
}

MatchAssignment random_assignment(Rng& rng, size_t num_priors, int classes) {
  MatchAssignment m;
  m.gt_index.assign(num_priors, -1);
  m.label.assign(num_priors, 0);
  m.target.assign(num_priors, OffsetVector{});
  m.overlap.assign(num_priors, 0.0);
  for (size_t i = 0; i < num_priors; ++i) {
    if (rng.uniform() >= 0.3) continue;
    m.gt_index[i] = int(i);
    m.label[i] = 1 + rng.uniform_int(classes);
    m.target[i] = {rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5),
                   rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5)};
    ++m.num_pos;
  }
  return m;
}

double loss_level_check(uint64_t seed, int instances) {
  double worst = 0.0;
  for (int inst = 0; inst < instances; ++inst) {
    Rng rng(derive_seed(seed, uint64_t(inst), 0x10550));
    Predictions<double> pred;
    pred.num_priors = 8 + size_t(rng.uniform_int(17));
    pred.num_classes = 1 + rng.uniform_int(4);
    pred.conf.resize(pred.num_priors * size_t(pred.logit_cols()));
    pred.loc.resize(pred.num_priors * 4);
    for (double& v : pred.conf) v = rng.uniform(-2.0, 2.0);
    for (double& v : pred.loc) v = rng.uniform(-2.0, 2.0);
    const MatchAssignment m =
        random_assignment(rng, pred.num_priors, pred.num_classes);
    if (m.num_pos == 0) continue;

    const LossReport<double> report = multibox_loss(pred, m);
    auto probe = [&](std::vector<double>& buf, size_t n, double analytic) {
      const double keep = buf[n];
      buf[n] = keep + kStep;
      const double up = multibox_loss(pred, m).total;
      buf[n] = keep - kStep;
      const double down = multibox_loss(pred, m).total;
      buf[n] = keep;
      worst = std::max(worst, rel_err(analytic, (up - down) / (2 * kStep)));
    };
    for (size_t n = 0; n < pred.conf.size(); ++n)
      probe(pred.conf, n, report.grad_conf[n]);
    for (size_t n = 0; n < pred.loc.size(); ++n)
      probe(pred.loc, n, report.grad_loc[n]);
  }
  return worst;
}

double net_level_check(uint64_t seed) {
  NetSpec spec;
  spec.input_size = 16;
  spec.channels = 1;
  spec.stage_channels = {4, 6};
  spec.head_stages = {0, 1};
  spec.boxes_per_cell = {2, 2};
  spec.num_classes = 2;
  spec.l2norm_first_head = true;

  std::vector<LayerSpec> layers = {
      {8, 0.2, 0.9, {1.0}, true},
      {4, 0.9, 1.0, {1.0}, true},
  };
  const PriorSet priors = build_priors(layers);

  TinyNet<double> net(spec);
  Rng init_rng(derive_seed(seed, 0x1217, 0));
  net.init_xavier(init_rng);

  Rng rng(derive_seed(seed, 0x1218, 0));
  Image img(16, 16, 1);
  for (float& v : img.data) v = float(rng.uniform());
  std::vector<GroundTruth> gts = {
      {{rng.uniform(0.0, 0.3), rng.uniform(0.0, 0.3), rng.uniform(0.5, 0.9),
        rng.uniform(0.5, 0.9)},
       1},
      {{rng.uniform(0.1, 0.4), rng.uniform(0.1, 0.4), rng.uniform(0.6, 1.0),
        rng.uniform(0.6, 1.0)},
       2},
  };
  // the assignment depends only on priors and boxes, so it stays fixed
  // while parameters are perturbed
  const MatchAssignment assignment = match(priors, gts);

  auto loss_of = [&]() {
    return multibox_loss(net.forward(img), assignment).total;
  };

  typename TinyNet<double>::Cache cache;
  const Predictions<double> pred = net.forward(img, cache);
  const LossReport<double> report = multibox_loss(pred, assignment);
  NetParams<double> grads = net.zero_params();
  net.backward(cache, report.grad_conf, report.grad_loc, grads);

  double worst = 0.0;
  auto params = named_tensors(net.params());
  auto grad_tensors = named_tensors(grads);
  for (size_t t = 0; t < params.size(); ++t) {
    Tensor<double>& p = *params[t].second;
    const Tensor<double>& g = *grad_tensors[t].second;
    for (size_t n = 0; n < p.numel(); ++n) {
      const double keep = p.data[n];
      p.data[n] = keep + kStep;
      const double up = loss_of();
      p.data[n] = keep - kStep;
      const double down = loss_of();
      p.data[n] = keep;
      worst =
          std::max(worst, rel_err(g.data[n], (up - down) / (2 * kStep)));
    }
  }
  return worst;
}

}  // namespace

GradCheckReport run_gradcheck(uint64_t seed, int loss_instances) {
  GradCheckReport report;
  report.max_rel_err_loss = loss_level_check(seed, loss_instances);
  report.max_rel_err_net = net_level_check(seed);
  return report;
}

}  // namespace tinyssd

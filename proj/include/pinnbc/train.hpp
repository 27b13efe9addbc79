#pragma once

// Loss assembly, Adam with reduce-on-plateau scheduling, and the soft/exact
// training loops.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "pinnbc/bc.hpp"
#include "pinnbc/datagen.hpp"
#include "pinnbc/diffnet.hpp"
#include "pinnbc/error.hpp"
#include "pinnbc/grid.hpp"
#include "pinnbc/jet.hpp"

namespace pinnbc {

enum class BcKind { soft, exact };

inline std::string_view to_string(BcKind k) { return k == BcKind::soft ? "soft" : "exact"; }

inline BcKind parse_kind(std::string_view s) {
  if (s == "soft") return BcKind::soft;
  if (s == "exact") return BcKind::exact;
  throw Error(ErrorKind::invalid_argument, "unknown bc kind '" + std::string(s) + "'");
}

struct TrainConfig {
  double alpha = 0.1;
  double lr0 = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double plateau_factor = 0.1;
  int patience = 10;
  double min_delta = 0.01;
  int max_epochs = 1000;
  double lr_floor = 1e-8;
  int collocation_count = 10000;
  int boundary_count = 1000;   // soft only
  int anchors_per_side = 20;   // exact only
  double idw_epsilon = 1e-12;
  std::vector<int> widths = default_widths();
  std::uint64_t seed = 0;
  bool record_timing = true;  // false writes 0 seconds so logs are reproducible

  void validate() const {
    require(alpha > 0.0, "train config: alpha must be positive");
    require(lr0 > 0.0, "train config: lr0 must be positive");
    require(plateau_factor > 0.0 && plateau_factor < 1.0, "train config: plateau factor must be in (0, 1)");
    require(patience >= 1, "train config: patience must be >= 1");
    require(min_delta >= 0.0, "train config: min_delta must be >= 0");
    require(max_epochs >= 1, "train config: max_epochs must be >= 1");
    require(collocation_count >= 1, "train config: collocation count must be >= 1");
    require(boundary_count >= 4 && boundary_count % 4 == 0,
            "train config: boundary count must be a positive multiple of 4");
    require(anchors_per_side >= 1, "train config: anchors per side must be >= 1");
    require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, "train config: Adam betas in [0, 1)");
  }
};

/// r = div(a grad p) - f, expanded by the product rule.
inline double pde_residual(const Jet2& p, const Jet2& a, double f) {
  return a.v * (p.hxx + p.hyy) + a.gx * p.gx + a.gy * p.gy - f;
}

/// d r / d(p jet components).
inline Jet2 pde_residual_sensitivity(const Jet2& a) { return {0.0, a.gx, a.gy, a.v, 0.0, a.v}; }

// ---------------------------------------------------------------------------
// Adam

struct AdamState {
  std::vector<DenseLayer> m;
  std::vector<DenseLayer> v;
  std::int64_t t = 0;

  static AdamState for_params(const MlpParams& p) { return {zeros_like(p), zeros_like(p), 0}; }
};

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam update, in place.
inline void adam_step(MlpParams& params, const std::vector<DenseLayer>& grads, AdamState& state, double lr,
                      const AdamHyper& hp = {}) {
  require(grads.size() == params.layers.size() && state.m.size() == params.layers.size(),
          "adam_step: gradient and state shapes differ from the parameters");
  for (const auto& g : grads)
    if (!g.weight.allFinite() || !g.bias.allFinite())
      throw Error(ErrorKind::training_failure, "non-finite gradient passed to adam_step");
  ++state.t;
  const double c1 = 1.0 - std::pow(hp.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(hp.beta2, static_cast<double>(state.t));
  const auto update = [&](auto& theta, const auto& g, auto& m, auto& v) {
    m = hp.beta1 * m + (1.0 - hp.beta1) * g;
    v = hp.beta2 * v + (1.0 - hp.beta2) * g.cwiseProduct(g);
    theta.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + hp.eps);
  };
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    update(params.layers[l].weight, grads[l].weight, state.m[l].weight, state.v[l].weight);
    update(params.layers[l].bias, grads[l].bias, state.m[l].bias, state.v[l].bias);
  }
}

// ---------------------------------------------------------------------------
// Reduce-on-plateau

struct PlateauState {
  double lr = 5e-4;
  double best = std::numeric_limits<double>::infinity();
  int wait = 0;
  double factor = 0.1;
  int patience = 10;
  double min_delta = 0.01;
};

/// An epoch improves when monitored < best - min_delta. After `patience`
/// consecutive epochs without improvement the rate is multiplied by `factor`
/// and the counter restarts.
inline double plateau_update(PlateauState& s, double monitored) {
  require(std::isfinite(monitored), "plateau_update: monitored value must be finite");
  if (monitored < s.best - s.min_delta) {
    s.best = monitored;
    s.wait = 0;
  } else if (++s.wait >= s.patience) {
    s.lr *= s.factor;
    s.wait = 0;
  }
  return s.lr;
}

// ---------------------------------------------------------------------------
// Losses

struct EpochLosses {
  double data = 0.0;
  double pde = 0.0;
  double total = 0.0;
};

/// Fixed inputs of one training run. Coefficient and forcing jets, and for
/// exact models the IDW and filter jets, are precomputed at the collocation points.
struct TrainingData {
  PointSet collocation;
  PointSet boundary;  // soft only
  std::vector<Jet2> a_jets;
  std::vector<double> f_values;
  BcAnchorSet anchors;  // exact only
  std::vector<Jet2> g_jets;
  std::vector<Jet2> phi_jets;
};

inline TrainingData prepare_training_data(BcKind kind, const DatasetInstance& inst, EquationVariant variant,
                                          const TrainConfig& cfg) {
  TrainingData d;
  d.collocation = sample_collocation(cfg.collocation_count, cfg.seed);
  const BoundaryInterpolant zero_g = fit_boundary({0.0, 2.0}, {0.0, 0.0}, 1.0);
  const BoundaryInterpolant& g = uses_boundary(variant) ? inst.g : zero_g;
  const auto& pts = d.collocation.points;
  d.a_jets.reserve(pts.size());
  d.f_values.reserve(pts.size());
  for (const auto& p : pts) {
    d.a_jets.push_back(inst.a.jet(p.x, p.y));
    d.f_values.push_back(uses_rhs(variant) ? inst.f(p.x, p.y) : 0.0);
  }
  if (kind == BcKind::soft) {
    d.boundary = sample_boundary(cfg.boundary_count, g, cfg.seed);
  } else {
    d.anchors = build_anchors(cfg.anchors_per_side, g, cfg.idw_epsilon);
    d.g_jets.reserve(pts.size());
    d.phi_jets.reserve(pts.size());
    for (const auto& p : pts) {
      d.g_jets.push_back(idw_jet(d.anchors, p.x, p.y));
      d.phi_jets.push_back(filter_phi_jet(p.x, p.y));
    }
  }
  return d;
}

namespace detail {

inline std::vector<Point2> training_points(BcKind kind, const TrainingData& d) {
  std::vector<Point2> pts = d.collocation.points;
  if (kind == BcKind::soft) pts.insert(pts.end(), d.boundary.points.begin(), d.boundary.points.end());
  return pts;
}

/// L_Total = L_Data + alpha * L_PDE as a sum of per-point terms, with running
/// sums of the two parts.
struct TotalLoss {
  BcKind kind;
  const TrainingData* data;
  double alpha;
  double pde_sum = 0.0;
  double data_sum = 0.0;

  double operator()(std::size_t i, const Jet2& net, Jet2& adjoint) {
    const std::size_t nc = data->collocation.points.size();
    adjoint = Jet2{};
    if (i < nc) {
      const Jet2 p = kind == BcKind::exact ? compose_exact(data->g_jets[i], data->phi_jets[i], net) : net;
      const double r = pde_residual(p, data->a_jets[i], data->f_values[i]);
      pde_sum += r * r;
      const Jet2 pbar = (2.0 * alpha * r / static_cast<double>(nc)) * pde_residual_sensitivity(data->a_jets[i]);
      adjoint = kind == BcKind::exact ? compose_exact_adjoint(data->phi_jets[i], pbar) : pbar;
      return alpha * r * r / static_cast<double>(nc);
    }
    const std::size_t k = i - nc;
    const double nb = static_cast<double>(data->boundary.points.size());
    const double e = net.v - data->boundary.labels[k];
    data_sum += e * e;
    adjoint.v = 2.0 * e / nb;
    return e * e / nb;
  }

  EpochLosses losses() const {
    EpochLosses l;
    l.pde = pde_sum / static_cast<double>(data->collocation.points.size());
    l.data = kind == BcKind::soft ? data_sum / static_cast<double>(data->boundary.points.size()) : 0.0;
    l.total = l.data + alpha * l.pde;
    return l;
  }
};

}  // namespace detail

/// Losses of a predictor on given points, without gradients. Exact predictors
/// have no data term.
inline EpochLosses epoch_losses(const Predictor& pred, const DatasetInstance& inst, EquationVariant variant,
                                const PointSet& collocation, const PointSet& boundary, double alpha) {
  require(!collocation.points.empty(), "epoch_losses: collocation set is empty");
  const bool exact = std::holds_alternative<ExactPredictor>(pred);
  require(exact || !boundary.points.empty(), "epoch_losses: soft model needs boundary points");
  require(exact || boundary.labels.size() == boundary.points.size(), "epoch_losses: boundary labels missing");

  EpochLosses l;
  const auto jets = forward_jet_batch(network_of(pred), collocation.points);
  for (std::size_t i = 0; i < jets.size(); ++i) {
    const auto& p = collocation.points[i];
    const Jet2 pj = exact ? compose_exact(idw_jet(std::get<ExactPredictor>(pred).anchors, p.x, p.y),
                                          filter_phi_jet(p.x, p.y), jets[i])
                          : jets[i];
    const double r = pde_residual(pj, inst.a.jet(p.x, p.y), uses_rhs(variant) ? inst.f(p.x, p.y) : 0.0);
    l.pde += r * r;
  }
  l.pde /= static_cast<double>(jets.size());
  if (!exact) {
    const auto values = forward_batch(network_of(pred), boundary.points);
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double e = values[k] - boundary.labels[k];
      l.data += e * e;
    }
    l.data /= static_cast<double>(values.size());
  }
  l.total = l.data + alpha * l.pde;
  return l;
}

/// Loss and parameter gradient on a run's fixed training data.
inline LossGradient training_loss_gradient(BcKind kind, const MlpParams& net, const TrainingData& data,
                                           double alpha, EpochLosses* parts = nullptr) {
  detail::TotalLoss loss{kind, &data, alpha};
  const auto pts = detail::training_points(kind, data);
  LossGradient lg = loss_gradient(net, pts, std::ref(loss));
  if (parts) *parts = loss.losses();
  return lg;
}

struct EpochRecord {
  int epoch = 0;
  double l_data = 0.0;
  double l_pde = 0.0;
  double l_total = 0.0;
  double lr = 0.0;
  double seconds = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;

  double average_epoch_seconds() const {
    if (epochs.empty()) return 0.0;
    double s = 0.0;
    for (const auto& e : epochs) s += e.seconds;
    return s / static_cast<double>(epochs.size());
  }
};

class TrainingFailure : public Error {
 public:
  TrainingFailure(const std::string& what, TrainLog log)
      : Error(ErrorKind::training_failure, what), log_(std::move(log)) {}
  const TrainLog& log() const { return log_; }

 private:
  TrainLog log_;
};

struct TrainResult {
  Predictor predictor;
  TrainLog log;
  TrainingData data;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Full-batch training on a fixed collocation set. Each epoch evaluates the
/// losses and gradient at the current parameters, takes one Adam step, then
/// feeds L_Total to the plateau scheduler. Stops after max_epochs or once the
/// learning rate falls below lr_floor.
inline TrainResult train_model(BcKind kind, const DatasetInstance& inst, EquationVariant variant,
                               const TrainConfig& cfg, const EpochCallback& on_epoch = {}) {
  cfg.validate();
  TrainResult res{SoftPredictor{}, {}, prepare_training_data(kind, inst, variant, cfg)};
  MlpParams net = init_params(cfg.widths, cfg.seed);
  AdamState adam = AdamState::for_params(net);
  PlateauState sched{cfg.lr0, std::numeric_limits<double>::infinity(), 0, cfg.plateau_factor, cfg.patience,
                     cfg.min_delta};
  const AdamHyper hp{cfg.beta1, cfg.beta2, cfg.adam_eps};

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochLosses parts;
    LossGradient lg;
    try {
      lg = training_loss_gradient(kind, net, res.data, cfg.alpha, &parts);
      if (!std::isfinite(parts.total)) throw Error(ErrorKind::evaluation_failure, "non-finite loss");
      adam_step(net, lg.grads, adam, sched.lr, hp);
    } catch (const Error& e) {
      throw TrainingFailure("training diverged at epoch " + std::to_string(epoch) + ": " + e.what(),
                            std::move(res.log));
    }
    const double lr_used = sched.lr;
    plateau_update(sched, parts.total);
    const double secs =
        cfg.record_timing ? std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() : 0.0;
    res.log.epochs.push_back({epoch, parts.data, parts.pde, parts.total, lr_used, secs});
    if (on_epoch) on_epoch(res.log.epochs.back());
    if (sched.lr < cfg.lr_floor) break;
  }
  if (kind == BcKind::soft) {
    res.predictor = SoftPredictor{std::move(net)};
  } else {
    res.predictor = ExactPredictor{std::move(net), res.data.anchors};
  }
  return res;
}

}  // namespace pinnbc

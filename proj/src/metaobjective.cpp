#include "xent/metaobjective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "xent/errors.hpp"

namespace xent::meta {

namespace {

double horner(const std::vector<double>& c, double t) {
  double v = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * t + *it;
  return v;
}

}  // namespace

double Rational::operator()(double t) const {
  const double den_v = horner(den, t);
  if (den_v == 0.0 || !std::isfinite(den_v)) throw DomainError("schedule denominator vanishes");
  return horner(num, t) / den_v;
}

std::string to_string(Schedule s) { return s == Schedule::Constant ? "constant" : "time_scaled"; }

Schedule schedule_from_string(const std::string& s) {
  if (s == "constant") return Schedule::Constant;
  if (s == "time_scaled") return Schedule::TimeScaled;
  throw ConfigError("schedule must be 'constant' or 'time_scaled'");
}

double Evaluation::operator()(const Arena& arena, const lab::CheckpointPtr& ckpt, const lab::EvalPlan& plan) const {
  switch (kind) {
    case Kind::None: return 0.0;
    case Kind::HeldoutGame: return lab::score(arena, ckpt, *game, plan);
    case Kind::Callback: {
      const double v = callback(*ckpt);
      if (!std::isfinite(v)) throw EstimationError("external evaluation returned a non-finite value");
      return v;
    }
  }
  return 0.0;
}

void MetaConfig::validate() const {
  if (!(delta >= 0.0 && delta <= 1.0)) throw ConfigError("delta must lie in [0, 1]");
  if (!(pressure >= 0.0) || !std::isfinite(pressure)) throw ConfigError("pressure must be non-negative");
  if (!(epsilon_floor > 0.0)) throw ConfigError("epsilon_floor must be positive");
  if (delta_scale.num.empty() || delta_scale.den.empty() || pressure_scale.num.empty() || pressure_scale.den.empty())
    throw ConfigError("schedule polynomials need at least one coefficient");
  if (external.kind == Evaluation::Kind::HeldoutGame && !external.game)
    throw ConfigError("held-out evaluation needs a game");
  if (external.kind == Evaluation::Kind::Callback && !external.callback)
    throw ConfigError("callback evaluation needs a scorer");
}

double MetaConfig::effective_delta(double t) const {
  if (schedule == Schedule::Constant) return delta;
  return std::clamp(delta * delta_scale(t), 0.0, 1.0);
}

double MetaConfig::effective_pressure(double t) const {
  if (schedule == Schedule::Constant) return pressure;
  return std::max(pressure * pressure_scale(t), 0.0);
}

double quality_from(double sum, double delta, std::size_t k) {
  if (k == 0) return 1.0;
  if (sum < 0.0) throw DomainError("negative new-to-old transfer sum");
  return std::pow(sum, 1.0 - delta);
}

double diversity_from(double self_transfer, double denominator, double delta, double eps, std::size_t k,
                      lab::GateMode mode, bool* floored) {
  if (floored) *floored = false;
  double num = self_transfer;
  if (num < 0.0) {
    if (mode == lab::GateMode::Strict) throw DomainError("H does not teach itself");
    num = 0.0;
  }
  if (k == 0) return std::pow(num, delta);
  double den = mode == lab::GateMode::Clipped ? std::max(denominator, 0.0) : denominator;
  if (den < eps) {
    den = eps;
    if (floored) *floored = true;
  }
  return std::pow(num / den, delta);
}

double curriculum_time(const lab::History& hist) {
  double t = 0.0;
  for (const sxgl::Program& g : hist.games()) t += static_cast<double>(sxgl::code_length(g));
  return t;
}

double quality(const Arena& arena, const lab::History& hist, const sxgl::Program& h, const lab::EvalPlan& plan,
               const lab::PhiConfig& phi, double delta, lab::GateMode mode) {
  const lab::Baseline base = lab::make_baseline(arena, hist, plan);
  const lab::Measurement m = lab::measure(arena, hist, base, h, plan, phi);
  return quality_from(lab::gate(hist, m, mode).new_to_old_sum, delta, hist.k());
}

double diversity(const Arena& arena, const lab::History& hist, const sxgl::Program& h, const lab::EvalPlan& plan,
                 const lab::PhiConfig& phi, double delta, double eps, lab::GateMode mode) {
  const lab::Measurement m = lab::measure(arena, hist, lab::make_baseline(arena, hist, plan), h, plan, phi);
  return diversity_from(m.self_transfer, m.old_to_new_sum, delta, eps, hist.k(), mode);
}

double benchmark_term(const Arena& arena, const lab::CheckpointPtr& ckpt, const sxgl::Program& h,
                      const Evaluation& e, const lab::EvalPlan& plan, const lab::PhiConfig& phi) {
  if (e.kind == Evaluation::Kind::None) return 0.0;
  const lab::PhiResult trained = lab::train_phi(arena, ckpt, h, phi);
  if (trained.ckpt == ckpt) return 0.0;
  return e(arena, trained.ckpt, plan) - e(arena, ckpt, plan);
}

OBreakdown assemble(const lab::History& hist, const sxgl::Program& h, const lab::Measurement& m, double b,
                    const MetaConfig& cfg) {
  OBreakdown o;
  const double t = curriculum_time(hist);
  o.delta = cfg.effective_delta(t);
  o.pressure = cfg.effective_pressure(t);
  o.gate = lab::gate(hist, m, cfg.gate);
  o.bootstrap = hist.k() == 0;
  o.new_to_old_sum = o.gate.new_to_old_sum;
  o.old_to_new_sum = m.old_to_new_sum;
  o.self_transfer = m.self_transfer;
  o.score = m.score_latest;
  o.l = static_cast<double>(sxgl::code_length(h));
  o.b = b;
  o.q = quality_from(o.new_to_old_sum, o.delta, hist.k());
  o.d = diversity_from(o.self_transfer, o.old_to_new_sum, o.delta, cfg.epsilon_floor, hist.k(), cfg.gate,
                       &o.denominator_floored);
  o.qd = o.q * o.d;
  o.O = (o.qd + o.b * o.pressure) / o.l;
  return o;
}

OBreakdown evaluate(const Arena& arena, const lab::History& hist, const lab::Baseline& base, const sxgl::Program& h,
                    const MetaConfig& cfg, const lab::EvalPlan& plan, const lab::PhiConfig& phi,
                    lab::PhiResult* trained) {
  cfg.validate();
  try {
    const lab::Measurement m = lab::measure(arena, hist, base, h, plan, phi);
    if (trained) *trained = m.trained;
    double b = 0.0;
    if (cfg.external.kind != Evaluation::Kind::None && m.trained.ckpt != hist.latest())
      b = cfg.external(arena, m.trained.ckpt, plan) - cfg.external(arena, hist.latest(), plan);
    return assemble(hist, h, m, b, cfg);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    OBreakdown o;
    o.l = static_cast<double>(sxgl::code_length(h));
    o.O = -std::numeric_limits<double>::infinity();
    o.error = e.tag();
    o.gate.accepted = false;
    return o;
  }
}

OBreakdown evaluate(const Arena& arena, const lab::History& hist, const sxgl::Program& h, const MetaConfig& cfg,
                    const lab::EvalPlan& plan, const lab::PhiConfig& phi) {
  return evaluate(arena, hist, lab::make_baseline(arena, hist, plan), h, cfg, plan, phi);
}

}  // namespace xent::meta

#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "xent/transferlab.hpp"

namespace xent::meta {

// Polynomial ratio num(T) / den(T) with coefficients in increasing degree.
struct Rational {
  std::vector<double> num{1.0};
  std::vector<double> den{1.0};
  double operator()(double t) const;
};

enum class Schedule { Constant, TimeScaled };
std::string to_string(Schedule s);
Schedule schedule_from_string(const std::string& s);

// External benchmark E, evaluable on any checkpoint.
struct Evaluation {
  enum class Kind { None, HeldoutGame, Callback };
  Kind kind = Kind::None;
  std::optional<sxgl::Program> game;
  std::string id;
  std::function<double(const Checkpoint&)> callback;

  double operator()(const Arena& arena, const lab::CheckpointPtr& ckpt, const lab::EvalPlan& plan) const;
};

struct MetaConfig {
  double delta = 0.5;
  double pressure = 0.0;
  Schedule schedule = Schedule::Constant;
  Rational delta_scale;
  Rational pressure_scale;
  double epsilon_floor = 1e-9;
  lab::GateMode gate = lab::GateMode::Clipped;
  Evaluation external;

  void validate() const;
  // Hyper-parameters in force after a curriculum of total code length t.
  double effective_delta(double t) const;
  double effective_pressure(double t) const;
};

struct OBreakdown {
  double q = 0.0;
  double d = 0.0;
  double b = 0.0;
  double l = 0.0;
  double qd = 0.0;
  double O = 0.0;
  double new_to_old_sum = 0.0;
  double old_to_new_sum = 0.0;
  double self_transfer = 0.0;
  double score = 0.0;     // S_{M_k}(H)
  double delta = 0.0;     // in force
  double pressure = 0.0;  // in force
  bool bootstrap = false;
  bool denominator_floored = false;
  std::optional<std::string> error;  // O is -inf when set
  lab::GateResult gate;
};

// q = sum^(1 - delta); 1 on an empty history. A negative sum is a
// DomainError.
double quality_from(double sum, double delta, std::size_t k);
// d = (T_H(H) / denominator)^delta with the denominator floored at eps;
// k = 0 gives T_H(H)^delta. Clipped mode clips both parts at 0; strict
// mode rejects a negative T_H(H) with DomainError.
double diversity_from(double self_transfer, double denominator, double delta, double eps, std::size_t k,
                      lab::GateMode mode, bool* floored = nullptr);

double quality(const Arena& arena, const lab::History& hist, const sxgl::Program& h, const lab::EvalPlan& plan,
               const lab::PhiConfig& phi, double delta, lab::GateMode mode = lab::GateMode::Clipped);
double diversity(const Arena& arena, const lab::History& hist, const sxgl::Program& h, const lab::EvalPlan& plan,
                 const lab::PhiConfig& phi, double delta, double eps = 1e-9,
                 lab::GateMode mode = lab::GateMode::Clipped);
// E(Phi_H ckpt) - E(ckpt), with paired seeds when E is a game.
double benchmark_term(const Arena& arena, const lab::CheckpointPtr& ckpt, const sxgl::Program& h,
                      const Evaluation& e, const lab::EvalPlan& plan, const lab::PhiConfig& phi);

// Total code length of the curriculum so far.
double curriculum_time(const lab::History& hist);

OBreakdown assemble(const lab::History& hist, const sxgl::Program& h, const lab::Measurement& m, double b,
                    const MetaConfig& cfg);

// Full breakdown for one candidate. Measurement failures yield O = -inf
// with the error tag recorded. `trained` receives Phi_H(M_k) when given.
OBreakdown evaluate(const Arena& arena, const lab::History& hist, const lab::Baseline& base, const sxgl::Program& h,
                    const MetaConfig& cfg, const lab::EvalPlan& plan, const lab::PhiConfig& phi,
                    lab::PhiResult* trained = nullptr);
OBreakdown evaluate(const Arena& arena, const lab::History& hist, const sxgl::Program& h, const MetaConfig& cfg,
                    const lab::EvalPlan& plan, const lab::PhiConfig& phi);

}  // namespace xent::meta

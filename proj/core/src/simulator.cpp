#include "platoon/simulator.hpp"

#include "platoon/apf.hpp"
#include "platoon/sigma.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace platoon {

namespace {

constexpr double kAlphaCrossCheckHalfWidth = 25.0;
constexpr int kAlphaCrossCheckSamples = 20000;

int first_nonfinite_agent(const Vec& x, int dim) {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) return static_cast<int>(i) / dim;
  }
  return -1;
}

// Control pass and closed-loop derivative on flat [y; v] storage. One
// instance is reused across a whole run; no per-stage heap traffic.
class Stepper {
 public:
  explicit Stepper(const Scenario& sc)
      : sc_(sc),
        n_(sc.n),
        d_(sc.dim),
        m_((sc.n + 1) * sc.dim),
        u_(m_),
        du_(m_),
        k1y_(m_), k1v_(m_), k2y_(m_), k2v_(m_), k3y_(m_), k3v_(m_), k4y_(m_), k4v_(m_),
        ys_(m_), vs_(m_) {}

  // Synchronous control pass at time t; returns the largest per-agent
  // control norm of the pass. Writes into u.
  double controls(const Vec& y, const Vec& v, double t, Vec& u) const {
    const double tc = std::clamp(t, 0.0, sc_.T);
    u.segment(0, d_).setZero();
    u[0] = leader_profile_eval(sc_.profile, tc);
    double max_norm = u.segment(0, d_).norm();
    for (int k = 1; k <= n_; ++k) {
      const auto z = y.segment((k - 1) * d_, d_) - y.segment(k * d_, d_);
      const double q = z.squaredNorm();
      if (q == 0.0) {
        throw CollisionError("control pass: coincident pair", k);
      }
      const auto zv = v.segment((k - 1) * d_, d_) - v.segment(k * d_, d_);
      const ControllerConfig& cfg = sc_.controllers[k - 1];
      const double s = sigma_norm_from_squared(q, cfg.sigma());
      const double scale = -apf_deriv(s, cfg.apf()) / (cfg.sigma().sigma() * std::sqrt(1.0 + q));
      if (cfg.variant() == ControlVariant::Feedforward) {
        u.segment(k * d_, d_) = u.segment((k - 1) * d_, d_) + cfg.beta() * zv - scale * z;
      } else {
        u.segment(k * d_, d_) = cfg.beta() * zv - scale * z;
      }
      max_norm = std::max(max_norm, u.segment(k * d_, d_).norm());
    }
    return max_norm;
  }

  // One attempted RK4 step from (y, v, t) by dt into (y_out, v_out).
  // Returns the largest control norm seen across the four stages.
  double attempt(const Vec& y, const Vec& v, double t, double dt, Vec& y_out, Vec& v_out) {
    double max_u = deriv(y, v, t, k1y_, k1v_);
    ys_ = y + (0.5 * dt) * k1y_;
    vs_ = v + (0.5 * dt) * k1v_;
    max_u = std::max(max_u, deriv(ys_, vs_, t + 0.5 * dt, k2y_, k2v_));
    ys_ = y + (0.5 * dt) * k2y_;
    vs_ = v + (0.5 * dt) * k2v_;
    max_u = std::max(max_u, deriv(ys_, vs_, t + 0.5 * dt, k3y_, k3v_));
    ys_ = y + dt * k3y_;
    vs_ = v + dt * k3v_;
    max_u = std::max(max_u, deriv(ys_, vs_, t + dt, k4y_, k4v_));
    y_out = y + (dt / 6.0) * (k1y_ + 2.0 * k2y_ + 2.0 * k3y_ + k4y_);
    v_out = v + (dt / 6.0) * (k1v_ + 2.0 * k2v_ + 2.0 * k3v_ + k4v_);
    if (!y_out.allFinite() || !v_out.allFinite()) {
      const int agent = std::max(first_nonfinite_agent(y_out, d_), first_nonfinite_agent(v_out, d_));
      throw DivergenceError("rk4 step produced a non-finite state", agent);
    }
    return max_u;
  }

  double gap_measure(const Vec& y, int k) const {
    const auto z = y.segment((k - 1) * d_, d_) - y.segment(k * d_, d_);
    return d_ == 1 ? z[0] : z.norm();
  }

 private:
  double deriv(const Vec& y, const Vec& v, double t, Vec& dy, Vec& dv) {
    const double max_u = controls(y, v, t, u_);
    dy = v;
    if (const auto* lin = std::get_if<LinearDrag>(&sc_.model)) {
      dv = -lin->c1 * v + u_;
    } else if (const auto* quad = std::get_if<SignedQuadraticDrag>(&sc_.model)) {
      for (int k = 0; k <= n_; ++k) {
        const auto vk = v.segment(k * d_, d_);
        dv.segment(k * d_, d_) = -(quad->c1 + quad->c2 * vk.norm()) * vk + u_.segment(k * d_, d_);
      }
    } else {
      const auto& custom = std::get<CustomModel>(sc_.model);
      for (int k = 0; k <= n_; ++k) {
        dv.segment(k * d_, d_) = custom.f(v.segment(k * d_, d_)) + u_.segment(k * d_, d_);
      }
    }
    if (!dv.allFinite()) {
      throw DivergenceError("closed-loop derivative is non-finite",
                            first_nonfinite_agent(dv, d_));
    }
    return max_u;
  }

  const Scenario& sc_;
  int n_, d_, m_;
  mutable Vec u_;
  Vec du_;
  Vec k1y_, k1v_, k2y_, k2v_, k3y_, k3v_, k4y_, k4v_;
  Vec ys_, vs_;
};

void flatten(const std::vector<AgentState>& states, int dim, Vec& y, Vec& v) {
  const int m = static_cast<int>(states.size()) * dim;
  y.resize(m);
  v.resize(m);
  for (std::size_t k = 0; k < states.size(); ++k) {
    if (states[k].position.size() != dim || states[k].velocity.size() != dim) {
      throw std::invalid_argument("state dimension does not match the scenario");
    }
    y.segment(k * dim, dim) = states[k].position;
    v.segment(k * dim, dim) = states[k].velocity;
  }
}

std::vector<AgentState> unflatten(const Vec& y, const Vec& v, int dim) {
  std::vector<AgentState> states(y.size() / dim);
  for (std::size_t k = 0; k < states.size(); ++k) {
    states[k].position = y.segment(k * dim, dim);
    states[k].velocity = v.segment(k * dim, dim);
  }
  return states;
}

// Attempt dt, halving while the stage controls breach the ceiling.
double guarded_advance(Stepper& stepper, const Scenario& sc, const Vec& y, const Vec& v, double t,
                       double dt, Vec& y_out, Vec& v_out, int& halvings) {
  double dt_try = dt;
  halvings = 0;
  for (;;) {
    const double max_u = stepper.attempt(y, v, t, dt_try, y_out, v_out);
    if (max_u <= sc.guard.control_ceiling) {
      return dt_try;
    }
    if (halvings >= sc.guard.max_halvings) {
      // Report the tightest pair; that is where the barrier is working.
      int worst = 1;
      double worst_gap = std::numeric_limits<double>::infinity();
      for (int k = 1; k <= sc.n; ++k) {
        const double g = std::abs(stepper.gap_measure(y, k));
        if (g < worst_gap) {
          worst_gap = g;
          worst = k;
        }
      }
      throw StiffnessError("step-halving guard exhausted near the barrier", worst, worst_gap);
    }
    dt_try *= 0.5;
    ++halvings;
  }
}

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t len) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t hash_double(std::uint64_t h, double x) {
  std::uint64_t bits;
  std::memcpy(&bits, &x, sizeof(bits));
  return fnv1a(h, &bits, sizeof(bits));
}

std::uint64_t hash_int(std::uint64_t h, long long x) { return fnv1a(h, &x, sizeof(x)); }

std::uint64_t scenario_digest(const Scenario& sc) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  h = hash_int(h, sc.n);
  h = hash_int(h, sc.dim);
  h = hash_int(h, static_cast<long long>(sc.model.index()));
  if (const auto* lin = std::get_if<LinearDrag>(&sc.model)) {
    h = hash_double(h, lin->c1);
  } else if (const auto* quad = std::get_if<SignedQuadraticDrag>(&sc.model)) {
    h = hash_double(h, quad->c1);
    h = hash_double(h, quad->c2);
  } else {
    h = hash_double(h, std::get<CustomModel>(sc.model).alpha_hint);
  }
  for (double l : sc.spacings) h = hash_double(h, l);
  for (const auto& cfg : sc.controllers) {
    h = hash_double(h, cfg.beta());
    h = hash_double(h, cfg.apf().amplitude());
    h = hash_double(h, cfg.apf().delta_sigma());
    h = hash_double(h, cfg.sigma().sigma());
    h = hash_int(h, cfg.variant() == ControlVariant::Feedforward ? 0 : 1);
  }
  h = hash_int(h, static_cast<long long>(sc.profile.index()));
  std::visit(
      [&h](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ConstantInput>) {
          h = hash_double(h, p.u0);
        } else if constexpr (std::is_same_v<T, PiecewiseLinearInput>) {
          for (const auto& [t, val] : p.points) {
            h = hash_double(h, t);
            h = hash_double(h, val);
          }
        } else if constexpr (std::is_same_v<T, SinusoidInput>) {
          h = hash_double(h, p.amplitude);
          h = hash_double(h, p.frequency_hz);
          h = hash_double(h, p.phase);
        } else {
          h = hash_double(h, p.accel);
          h = hash_double(h, p.accel_duration);
          h = hash_double(h, p.cruise_duration);
          h = hash_double(h, p.decel);
          h = hash_double(h, p.decel_duration);
        }
      },
      sc.profile);
  h = hash_double(h, sc.T);
  h = hash_double(h, sc.dt);
  h = hash_double(h, sc.collision_epsilon);
  h = hash_int(h, sc.stride);
  h = hash_double(h, sc.guard.control_ceiling);
  h = hash_int(h, sc.guard.max_halvings);
  h = hash_int(h, sc.certify.enabled ? 1 : 0);
  h = hash_double(h, sc.certify.tol_inv);
  h = hash_double(h, sc.certify.tol_match);
  return h;
}

Frame make_frame(const Stepper& stepper, const Scenario& sc, const Vec& y, const Vec& v,
                 double t) {
  Frame f;
  const int d = sc.dim;
  f.t = t;
  f.y = y;
  f.v = v;
  f.u.resize(y.size());
  try {
    stepper.controls(y, v, t, f.u);
  } catch (const CollisionError&) {
    // Terminal frame of a run that ended in exact coincidence.
    f.u.setConstant(std::numeric_limits<double>::quiet_NaN());
  }
  f.z.resize(sc.n * d);
  f.zv.resize(sc.n * d);
  f.L.resize(sc.n);
  for (int k = 1; k <= sc.n; ++k) {
    f.z.segment((k - 1) * d, d) = y.segment((k - 1) * d, d) - y.segment(k * d, d);
    f.zv.segment((k - 1) * d, d) = v.segment((k - 1) * d, d) - v.segment(k * d, d);
    const auto z = f.z.segment((k - 1) * d, d);
    const auto zv = f.zv.segment((k - 1) * d, d);
    const ControllerConfig& cfg = sc.controllers[k - 1];
    const double q = z.squaredNorm();
    if (q == 0.0) {
      f.L[k - 1] = std::numeric_limits<double>::infinity();
    } else {
      f.L[k - 1] =
          apf_value(sigma_norm_from_squared(q, cfg.sigma()), cfg.apf()) + 0.5 * zv.squaredNorm();
    }
  }
  return f;
}

}  // namespace

void Scenario::validate() const {
  if (n < 1) throw ConfigError("scenario: n must be at least 1");
  if (dim < 1) throw ConfigError("scenario: dim must be at least 1");
  if (!std::isfinite(T) || T <= 0.0) throw ConfigError("scenario: T must be positive");
  if (!std::isfinite(dt) || dt <= 0.0 || dt > T) throw ConfigError("scenario: need 0 < dt <= T");
  if (stride < 1) throw ConfigError("scenario: stride must be at least 1");
  if (spacings.size() != static_cast<std::size_t>(n) + 1) {
    throw ConfigError("scenario: need exactly n + 1 spacing entries");
  }
  (void)InitialSpacing(spacings);  // positivity/finiteness
  if (!std::isfinite(collision_epsilon) || collision_epsilon <= 0.0 ||
      collision_epsilon >= min_follower_spacing()) {
    throw ConfigError("scenario: collision_epsilon must be positive and below the smallest gap");
  }
  if (controllers.size() != static_cast<std::size_t>(n)) {
    throw ConfigError("scenario: need one controller config per follower");
  }
  for (std::size_t k = 1; k < controllers.size(); ++k) {
    if (controllers[k].variant() != controllers[0].variant()) {
      throw ConfigError("scenario: mixed controller variants are not supported");
    }
  }
  validate_model(model);
  validate_profile(profile);
  if (guard.max_halvings < 0 || std::isnan(guard.control_ceiling)) {
    throw ConfigError("scenario: invalid guard settings");
  }
  if (!std::isfinite(certify.tol_inv) || certify.tol_inv <= 0.0 ||
      !std::isfinite(certify.tol_match) || certify.tol_match <= 0.0) {
    throw ConfigError("scenario: certification tolerances must be positive");
  }
  for (const auto& cfg : controllers) {
    const ApfSelfTest apf_check = run_apf_self_test(RationalBarrierApf(cfg.apf()));
    if (!apf_check.pass()) {
      throw ConfigError("scenario: potential family failed its axiom self-test");
    }
  }
  if (certify.enabled) {
    const double alpha = alpha_bound(model);
    for (std::size_t k = 0; k < controllers.size(); ++k) {
      if (!(controllers[k].beta() > alpha)) {
        throw ConfigError("scenario: certified runs require beta > alpha (one-sided Lipschitz "
                          "bound of the vehicle model); violated for follower " +
                          std::to_string(k + 1));
      }
    }
    if (std::holds_alternative<CustomModel>(model)) {
      VelocityBox box{Vec::Constant(dim, -kAlphaCrossCheckHalfWidth),
                      Vec::Constant(dim, kAlphaCrossCheckHalfWidth)};
      const double sampled = alpha_estimate(model, box, kAlphaCrossCheckSamples);
      if (sampled > alpha + 1e-9) {
        throw ConfigError("scenario: sampled alpha exceeds the custom model's alpha_hint");
      }
    }
  }
}

bool Scenario::feedforward() const {
  return controllers.empty() || controllers[0].variant() == ControlVariant::Feedforward;
}

double Scenario::min_follower_spacing() const {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < spacings.size(); ++k) m = std::min(m, spacings[k]);
  return m;
}

const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Completed: return "completed";
    case RunStatus::Collision: return "collision";
    case RunStatus::Diverged: return "diverged";
  }
  return "unknown";
}

std::vector<AgentState> rk4_step(const std::vector<AgentState>& states, double t, double dt,
                                 const Scenario& scenario) {
  Stepper stepper(scenario);
  Vec y, v;
  flatten(states, scenario.dim, y, v);
  Vec y_out(y.size()), v_out(v.size());
  stepper.attempt(y, v, t, dt, y_out, v_out);
  return unflatten(y_out, v_out, scenario.dim);
}

GuardedStep guard_step(const std::vector<AgentState>& states, double t, double dt,
                       const Scenario& scenario) {
  Stepper stepper(scenario);
  Vec y, v;
  flatten(states, scenario.dim, y, v);
  GuardedStep result;
  Vec y_out(y.size()), v_out(v.size());
  result.dt_used = guarded_advance(stepper, scenario, y, v, t, dt, y_out, v_out, result.halvings);
  result.states = unflatten(y_out, v_out, scenario.dim);
  return result;
}

TrajectoryLog run(const Scenario& scenario) {
  scenario.validate();

  TrajectoryLog log;
  log.n = scenario.n;
  log.dim = scenario.dim;
  log.dt = scenario.dt;
  log.stride = scenario.stride;
  log.scenario_hash = scenario_digest(scenario);

  Stepper stepper(scenario);
  Vec y, v;
  flatten(initial_platoon(InitialSpacing(scenario.spacings), scenario.dim), scenario.dim, y, v);
  Vec y_next(y.size()), v_next(v.size());

  const auto update_min_gap = [&](const Vec& yy) {
    for (int k = 1; k <= scenario.n; ++k) {
      log.min_gap = std::min(log.min_gap, stepper.gap_measure(yy, k));
    }
  };

  double t = 0.0;
  update_min_gap(y);
  log.frames.push_back(make_frame(stepper, scenario, y, v, t));

  const double t_end = scenario.T;
  const double t_slack = 1e-12 * std::max(1.0, t_end);  // absorbs accumulation roundoff
  std::size_t step_index = 0;
  while (t_end - t > t_slack) {
    const double dt_step = std::min(scenario.dt, t_end - t);
    bool frame_due = false;
    try {
      int halvings = 0;
      const double dt_used =
          guarded_advance(stepper, scenario, y, v, t, dt_step, y_next, v_next, halvings);
      y.swap(y_next);
      v.swap(v_next);
      t += dt_used;
      ++step_index;
      ++log.total_steps;
      frame_due = (step_index % static_cast<std::size_t>(scenario.stride) == 0) ||
                  t_end - t <= t_slack;
    } catch (const DivergenceError& e) {
      log.status = RunStatus::Diverged;
      log.fault_agent = e.agent_index();
      return log;
    } catch (const CollisionError& e) {
      log.status = RunStatus::Collision;
      log.fault_agent = e.follower_index();
      return log;
    }

    update_min_gap(y);
    int collided = -1;
    for (int k = 1; k <= scenario.n; ++k) {
      if (stepper.gap_measure(y, k) <= scenario.collision_epsilon) {
        collided = k;
        break;
      }
    }
    if (collided >= 0) {
      log.frames.push_back(make_frame(stepper, scenario, y, v, t));
      log.status = RunStatus::Collision;
      log.fault_agent = collided;
      return log;
    }
    if (frame_due) {
      log.frames.push_back(make_frame(stepper, scenario, y, v, t));
    }
  }
  log.status = RunStatus::Completed;
  return log;
}

}  // namespace platoon

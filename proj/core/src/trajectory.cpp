#include "inloop/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <random>
#include <sstream>
#include <string>
#include <thread>

#include "inloop/errors.hpp"

namespace inloop {

namespace {

constexpr Complex kI{0.0, 1.0};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::size_t stride_of(const TrajectoryConfig& c) {
  return static_cast<std::size_t>(std::llround(c.sample_interval / c.dt));
}

std::size_t steps_of(const TrajectoryConfig& c) {
  return static_cast<std::size_t>(std::llround(c.duration / c.dt));
}

struct TrajectoryBuffers {
  double* x;
  double* y;
  double* z;
};

// Runs one trajectory; returns the largest |s|^2 seen.
double run_trajectory(const TrajectoryConfig& cfg, std::size_t index, TrajectoryBuffers out,
                      CurrentRecord* record) {
  const LoopConfig& loop = cfg.loop;
  std::mt19937_64 rng(trajectory_seed(cfg.seed, index));
  std::normal_distribution<double> normal(0.0, std::sqrt(cfg.dt));
  DiscreteFilter line(loop.filter, cfg.dt);

  const double drive_gain = loop.g / std::sqrt(loop.eps);
  const std::size_t steps = steps_of(cfg);
  const std::size_t stride = stride_of(cfg);
  AtomState s = cfg.initial;
  double max_r2 = s.radius_squared();

  for (std::size_t k = 0; k <= steps; ++k) {
    if (k % stride == 0) {
      const std::size_t j = k / stride;
      out.x[j] = s.x;
      out.y[j] = s.y;
      out.z[j] = s.z;
    }
    if (k == steps) break;
    const double drive = drive_gain * line.output();
    if (!(std::abs(drive) <= cfg.phi_guard)) {
      std::ostringstream msg;
      msg << "feedback drive |Phi| = " << std::abs(drive) << " exceeded guard " << cfg.phi_guard
          << " at t = " << static_cast<double>(k) * cfg.dt << " in trajectory " << index;
      throw InstabilityError(msg.str());
    }
    const double dW = normal(rng);
    const double current = mean_current(s, drive, loop.eta, loop.eps) + dW / cfg.dt;
    if (record != nullptr) {
      record->current.push_back(current);
      record->drive.push_back(drive);
    }
    s = step_conditioned(s, drive, dW, cfg.dt, loop.eta, loop.eps);
    max_r2 = std::max(max_r2, s.radius_squared());
    line.push(current);
  }
  return max_r2;
}

void mean_and_error(const std::vector<double>& samples, std::size_t n_traj, std::size_t n_t,
                    std::vector<double>& mean, std::vector<double>& se) {
  mean.assign(n_t, 0.0);
  se.assign(n_t, 0.0);
  std::vector<double> column(n_traj);
  const auto n = static_cast<double>(n_traj);
  for (std::size_t j = 0; j < n_t; ++j) {
    for (std::size_t i = 0; i < n_traj; ++i) column[i] = samples[i * n_t + j];
    const double m = pairwise_sum(column) / n;
    for (double& v : column) v = (v - m) * (v - m);
    mean[j] = m;
    se[j] = n_traj > 1 ? std::sqrt(pairwise_sum(column) / (n - 1.0) / n) : 0.0;
  }
}

double component_at(const EnsembleResult& r, BlochComponent c, std::size_t traj, std::size_t j) {
  const std::size_t n_t = r.t.size();
  switch (c) {
    case BlochComponent::x: return r.samples_x[traj * n_t + j];
    case BlochComponent::y: return r.samples_y[traj * n_t + j];
    case BlochComponent::z: return r.samples_z[traj * n_t + j];
  }
  return 0.0;
}

// Least-squares slope of log(values) against times.
double log_slope(const std::vector<double>& times, const std::vector<double>& values) {
  double st = 0.0, sv = 0.0;
  const auto n = static_cast<double>(times.size());
  std::vector<double> logs(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0.0)) {
      throw ParameterError("decay fit: ensemble mean is not positive inside the fit window");
    }
    logs[i] = std::log(values[i]);
    st += times[i];
    sv += logs[i];
  }
  st /= n;
  sv /= n;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    num += (times[i] - st) * (logs[i] - sv);
    den += (times[i] - st) * (times[i] - st);
  }
  return num / den;
}

}  // namespace

std::uint64_t trajectory_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) + index);
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double acc = 0.0;
    for (double v : values) acc += v;
    return acc;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

void TrajectoryConfig::validate() const {
  require_valid(loop);
  if (!(dt > 0.0) || dt > 1e-2) {
    throw ParameterError("dt must lie in (0, 1e-2]");
  }
  if (dt > loop.filter.tau() / 10.0 * (1.0 + 1e-12)) {
    throw ParameterError("dt must resolve the loop filter: dt <= tau/10");
  }
  if (!(duration > 0.0)) {
    throw ParameterError("duration must be positive");
  }
  if (n_traj == 0) {
    throw ParameterError("n_traj must be at least 1");
  }
  if (!(sample_interval >= dt)) {
    throw ParameterError("sample_interval must be at least dt");
  }
  const double ratio = sample_interval / dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-6 * ratio) {
    throw ParameterError("sample_interval must be an integer multiple of dt");
  }
  if (!initial.within_bloch_ball(kExactTolerance)) {
    throw ParameterError("initial state lies outside the Bloch ball");
  }
  if (!(phi_guard > 0.0)) {
    throw ParameterError("phi_guard must be positive");
  }
  if (!discrete_loop_stable(DiscreteFilter(loop.filter, dt), loop.g)) {
    throw InstabilityError("sampled feedback loop is unstable at this dt");
  }
}

double mean_current(const AtomState& s, double drive, double eta, double eps) {
  return std::sqrt(eta * eps) * s.x + std::sqrt(eps) * drive;
}

BlochTangent conditioned_increment(const AtomState& s, double drive, double dW, double dt,
                                   double eta, double eps) {
  const AtomOperator sigma = AtomOperator::lowering();
  const AtomOperator h_fb = Complex(0.5 * std::sqrt(eta) * drive) * AtomOperator::sigma_y();
  return dt * dissipator(sigma, s) + (std::sqrt(eta * eps) * dW) * measurement_superop(sigma, s) +
         dt * hamiltonian_flow(h_fb, s);
}

AtomState step_conditioned(const AtomState& s, double drive, double dW, double dt, double eta,
                           double eps) {
  const double efficiency = eta * eps;
  const double k = std::sqrt(efficiency);
  const double dY = k * s.x * dt + dW;

  // rho = [[p_e, c], [conj(c), p_g]] in the (e, g) basis.
  const double pe = 0.5 * (1.0 + s.z);
  const double pg = 0.5 * (1.0 - s.z);
  const Complex coh(0.5 * s.x, -0.5 * s.y);
  Matrix2c rho;
  rho << pe, coh, std::conj(coh), pg;

  const double angle = 0.5 * std::sqrt(eta) * drive * dt;
  const double ca = std::cos(angle);
  const double sa = std::sin(angle);
  // exp(-i angle sigma_y) = cos(angle) I - i sin(angle) sigma_y
  Matrix2c rotation;
  rotation << ca, -sa, sa, ca;

  // I - sigma^+ sigma dt/2 + k dY sigma; sigma^+ sigma = |e><e|, sigma = |g><e|
  Matrix2c kraus;
  kraus << 1.0 - 0.5 * dt, 0.0, k * dY, 1.0;
  const Matrix2c m = kraus * rotation;

  Matrix2c next = m * rho * m.adjoint();
  // sigma rho sigma^+ = p_e |g><g|
  next(1, 1) += (1.0 - efficiency) * dt * pe;
  const double trace = (next(0, 0) + next(1, 1)).real();
  next /= trace;

  AtomState out = matrix_to_bloch(next);
  const double r2 = out.radius_squared();
  if (r2 > 1.0) {
    if (r2 > 1.0 + kStochasticTolerance) {
      throw StepSizeError("conditioned step left the Bloch ball: |s|^2 = " + std::to_string(r2));
    }
    const double scale = 1.0 / std::sqrt(r2);
    out = {out.x * scale, out.y * scale, out.z * scale};
  }
  return out;
}

double feedback_drive(std::span<const double> history, const LoopFilter& filter, double dt,
                      double g, double eps, std::size_t k) {
  if (k > history.size()) {
    throw ParameterError("feedback_drive: insufficient current history");
  }
  const auto warmup = static_cast<std::size_t>(std::ceil(filter.tau() / dt - 1e-9));
  if (k < std::max<std::size_t>(warmup, 1)) return 0.0;
  const std::size_t reach = filter.finite_support() ? warmup : k;
  double acc = 0.0;
  for (std::size_t j = 1; j <= reach; ++j) {
    const double w = filter.cumulative(static_cast<double>(j) * dt) -
                     filter.cumulative(static_cast<double>(j - 1) * dt);
    acc += w * history[k - j];
  }
  return g / std::sqrt(eps) * acc;
}

EnsembleResult run_ensemble(const TrajectoryConfig& config) {
  config.validate();
  const std::size_t stride = stride_of(config);
  const std::size_t n_t = steps_of(config) / stride + 1;
  const std::size_t n = config.n_traj;

  EnsembleResult result;
  result.n_traj = n;
  result.t.resize(n_t);
  for (std::size_t j = 0; j < n_t; ++j) {
    result.t[j] = static_cast<double>(j * stride) * config.dt;
  }
  result.samples_x.assign(n * n_t, 0.0);
  result.samples_y.assign(n * n_t, 0.0);
  result.samples_z.assign(n * n_t, 0.0);
  if (config.record_current) {
    result.current.emplace();
    result.current->dt = config.dt;
  }

  std::vector<double> max_r2(n, 0.0);
  const unsigned workers = std::max(1u, std::min<unsigned>(config.threads, static_cast<unsigned>(n)));
  std::vector<std::exception_ptr> errors(workers);
  auto work = [&](unsigned w) {
    try {
      for (std::size_t i = w; i < n; i += workers) {
        TrajectoryBuffers buf{&result.samples_x[i * n_t], &result.samples_y[i * n_t],
                              &result.samples_z[i * n_t]};
        CurrentRecord* rec = (i == 0 && result.current) ? &*result.current : nullptr;
        max_r2[i] = run_trajectory(config, i, buf, rec);
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  result.max_radius_squared = *std::max_element(max_r2.begin(), max_r2.end());
  mean_and_error(result.samples_x, n, n_t, result.mean_x, result.se_x);
  mean_and_error(result.samples_y, n, n_t, result.mean_y, result.se_y);
  mean_and_error(result.samples_z, n, n_t, result.mean_z, result.se_z);
  return result;
}

DecayFit fit_decay_rate(const EnsembleResult& result, BlochComponent component, double t_lo,
                        double t_hi, std::size_t resamples, std::uint64_t seed) {
  std::vector<std::size_t> window;
  std::vector<double> times;
  for (std::size_t j = 0; j < result.t.size(); ++j) {
    if (result.t[j] >= t_lo - 1e-12 && result.t[j] <= t_hi + 1e-12) {
      window.push_back(j);
      times.push_back(result.t[j]);
    }
  }
  if (window.size() < 3) {
    throw ParameterError("decay fit window holds fewer than three samples");
  }

  const std::size_t n = result.n_traj;
  std::vector<double> column(n);
  auto mean_curve = [&](const std::vector<std::size_t>& members) {
    std::vector<double> curve;
    curve.reserve(window.size());
    for (std::size_t j : window) {
      for (std::size_t i = 0; i < n; ++i) column[i] = component_at(result, component, members[i], j);
      curve.push_back(pairwise_sum(column) / static_cast<double>(n));
    }
    return curve;
  };

  std::vector<std::size_t> members(n);
  for (std::size_t i = 0; i < n; ++i) members[i] = i;
  DecayFit fit;
  fit.rate = -log_slope(times, mean_curve(members));

  if (resamples > 1) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<double> rates;
    rates.reserve(resamples);
    for (std::size_t b = 0; b < resamples; ++b) {
      for (auto& m : members) m = pick(rng);
      rates.push_back(-log_slope(times, mean_curve(members)));
    }
    const double mean = pairwise_sum(rates) / static_cast<double>(resamples);
    double var = 0.0;
    for (double r : rates) var += (r - mean) * (r - mean);
    fit.std_error = std::sqrt(var / static_cast<double>(resamples - 1));
  }
  return fit;
}

}  // namespace inloop

#include "cobalt/loop.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "cobalt/acquisition.hpp"
#include "cobalt/rng.hpp"
#include "cobalt/saa.hpp"

namespace cobalt {

namespace {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// derived child-stream ids; spaced so per-iteration streams never collide
// inequality-residual backoff for enrichment queries; see run_model_based
constexpr double kQueryBackoff = 1e-5;

constexpr std::uint64_t kStreamLhs = 1;
constexpr std::uint64_t kStreamGp = 1000;
constexpr std::uint64_t kStreamXi = 2000;
constexpr std::uint64_t kStreamScale = 3000;
constexpr std::uint64_t kStreamSolve = 4000;
constexpr std::uint64_t kStreamRetry = 5000;
constexpr std::uint64_t kStreamBaseline = 6000;

struct RunState {
  const GreyBoxProblem& problem;
  const RunConfig& config;
  double true_min;
  SplitMix64 root;
  ObservationSet observations;
  RunRecord record;

  RunState(const GreyBoxProblem& p, const RunConfig& c, double tmin)
      : problem(p), config(c), true_min(tmin), root(c.seed) {
    record.problem = p.name;
    record.config = c;
  }

  // Evaluates x (retrying once at a perturbed point on simulator failure),
  // appends to the dataset, and pushes a populated iteration record.
  // Returns false when the run must abort.
  bool evaluate_and_record(const Vec& x, const Vec& tau, double scale,
                           std::vector<double> t_gp, double t_opt) {
    IterationRecord ir;
    ir.tau = tau;
    ir.scale = scale;
    ir.t_gp = std::move(t_gp);
    ir.t_opt = t_opt;
    Vec query = x;
    for (int attempt = 0; attempt < 2; ++attempt) {
      auto t0 = Clock::now();
      try {
        Evaluation e = evaluate(problem, query);
        ir.t_eval = seconds_since(t0);
        ir.x = e.x;
        ir.y = e.y;
        ir.objective = e.objective;
        ir.constraint_values = e.constraint_values;
        ir.feasible = e.feasible;
        observations.append(e);
        ir.incumbent = observations.incumbent();
        if (!std::isnan(true_min)) {
          ir.log10_regret = log10_regret(ir.incumbent, true_min);
        }
        record.iterations.push_back(std::move(ir));
        return true;
      } catch (const SimulatorError& err) {
        if (attempt == 1) {
          record.aborted = true;
          record.abort_reason = err.what();
          return false;
        }
        SplitMix64 prng = root.fork(kStreamRetry + observations.size());
        for (int k = 0; k < query.size(); ++k) {
          query(k) += 1e-6 * (problem.upper(k) - problem.lower(k)) *
                      prng.next_normal();
        }
        query = query.cwiseMax(problem.lower).cwiseMin(problem.upper);
      }
    }
    return false;
  }

  bool run_initial_design(int count) {
    Mat design = lhs_init(problem.lower, problem.upper, count,
                          root.fork(kStreamLhs).next_u64());
    for (int i = 0; i < design.rows(); ++i) {
      if (!evaluate_and_record(design.row(i).transpose(), Vec(), 0.0, {},
                               0.0)) {
        return false;
      }
    }
    return true;
  }

  const Vec& best_observed() const {
    const auto& entries = observations.entries();
    int best = 0;
    bool best_feas = entries[0].feasible;
    for (int i = 1; i < static_cast<int>(entries.size()); ++i) {
      bool feas = entries[i].feasible;
      bool better =
          (feas && !best_feas) ||
          (feas == best_feas && entries[i].objective < entries[best].objective);
      if (better) {
        best = i;
        best_feas = feas;
      }
    }
    return entries[best].x;
  }
};

RunRecord run_model_based(const GreyBoxProblem& problem,
                          const RunConfig& config, double true_min) {
  RunState st(problem, config, true_min);
  const int n_init = config.resolved_init(problem.dim_z);
  const int n_opt = config.budget - n_init;
  if (!st.run_initial_design(n_init)) return st.record;

  TrustSchedule trust;
  trust.initial = config.tau0;
  trust.horizon = std::max(1, n_opt);

  Vec z_lower = problem.selection * problem.lower;
  Vec z_upper = problem.selection * problem.upper;

  for (int k = 0; k < n_opt; ++k) {
    // retrain the per-output surrogates from scratch
    std::vector<GPModel> models;
    std::vector<double> t_gp;
    SplitMix64 gp_rng = st.root.fork(kStreamGp + k);
    for (int j = 0; j < problem.dim_y; ++j) {
      TrainOptions topt;
      topt.kind = config.kernel;
      topt.seed = gp_rng.next_u64();
      topt.input_lower = z_lower;
      topt.input_upper = z_upper;
      auto t0 = Clock::now();
      models.push_back(
          train_gp(st.observations.inputs(), st.observations.targets(j), topt));
      t_gp.push_back(seconds_since(t0));
    }

    Vec tau(problem.num_g);
    for (int i = 0; i < problem.num_g; ++i) tau(i) = trust.level(i, k);

    AcquisitionContext ctx;
    ctx.problem = &problem;
    ctx.models = &models;
    ctx.incumbent = st.observations.incumbent();
    ctx.beta = config.beta;
    ctx.xi = XiSample::generate(config.m_samples, problem.dim_y,
                                st.root.fork(kStreamXi + k).next_u64());

    auto t_opt0 = Clock::now();
    std::vector<Vec> candidates;
    for (const auto& e : st.observations.entries()) candidates.push_back(e.x);
    SplitMix64 cand_rng = st.root.fork(kStreamScale + k);
    Mat cloud = shifted_halton(problem.lower, problem.upper,
                               100 * problem.dim_x, cand_rng);
    for (int i = 0; i < cloud.rows(); ++i) {
      candidates.push_back(cloud.row(i).transpose());
    }
    if (config.variant == Variant::mWB2CF) {
      ctx.scale = compute_scale(ctx, candidates);
    }

    SAAProblem sub = assemble_saa(problem, models, ctx, tau);
    if (config.variant == Variant::EICF && std::isfinite(ctx.incumbent)) {
      // pure expected-improvement variant; with no feasible point yet the
      // default (scale 0) objective minimizes the predicted mean instead
      sub.objective = [ctx](const Vec& x) { return ei_cf_with_grad(ctx, x); };
    }

    // The exact subproblem optimum sits on the residual boundary whenever a
    // constraint is active, so the evaluated point lands at g ~ |tau|*sigma
    // outside the true region and can never pass the evaluation feasibility
    // check. Back the inequality residuals off by a small constant so that,
    // once the posterior spread shrinks below it, queries land strictly
    // inside. Equalities are left alone: a backoff there would empty the set.
    if (problem.num_g > 0) {
      auto raw = sub.residuals;
      const int n_g = problem.num_g;
      sub.residuals = [raw, n_g](const Vec& x, bool with_grads) {
        ResidualSet r = raw(x, with_grads);
        r.values.head(n_g).array() += kQueryBackoff;
        return r;
      };
    }
    std::vector<Vec> extra = {st.best_observed(),
                              st.observations.entries().back().x};
    SolveReport report = solve_multistart(
        sub, config.n_starts, st.root.fork(kStreamSolve + k).next_u64(), extra);
    double t_opt = seconds_since(t_opt0);

    if (!st.evaluate_and_record(report.best, tau, ctx.scale, std::move(t_gp),
                                t_opt)) {
      return st.record;
    }
  }
  return st.record;
}

RunRecord run_random(const GreyBoxProblem& problem, const RunConfig& config,
                     double true_min) {
  RunState st(problem, config, true_min);
  const int n_init = config.resolved_init(problem.dim_z);
  if (!st.run_initial_design(n_init)) return st.record;
  SplitMix64 rng = st.root.fork(kStreamBaseline);
  for (int k = n_init; k < config.budget; ++k) {
    Vec x(problem.dim_x);
    for (int i = 0; i < problem.dim_x; ++i) {
      x(i) = rng.next_uniform(problem.lower(i), problem.upper(i));
    }
    if (!st.evaluate_and_record(x, Vec(), 0.0, {}, 0.0)) return st.record;
  }
  return st.record;
}

RunRecord run_black_box(const GreyBoxProblem& problem, const RunConfig& config,
                        double true_min) {
  RunState st(problem, config, true_min);
  const int n_init = config.resolved_init(problem.dim_z);
  const int n_opt = config.budget - n_init;
  if (!st.run_initial_design(n_init)) return st.record;

  // constraints that depend on the opaque output need their own surrogate;
  // the rest are evaluated directly (they ignore y)
  std::vector<int> unknown, known;
  for (int i = 0; i < problem.num_g; ++i) {
    bool uses_y = i < static_cast<int>(problem.constraint_uses_y.size()) &&
                  problem.constraint_uses_y[i];
    (uses_y ? unknown : known).push_back(i);
  }
  const Vec y_dummy = Vec::Zero(problem.dim_y);

  for (int k = 0; k < n_opt; ++k) {
    // training matrix over the full decision space
    const auto& entries = st.observations.entries();
    const int n = static_cast<int>(entries.size());
    Mat X(n, problem.dim_x);
    Vec L(n);
    Mat G(n, static_cast<int>(unknown.size()));
    for (int i = 0; i < n; ++i) {
      X.row(i) = entries[i].x.transpose();
      L(i) = entries[i].objective;
      for (int u = 0; u < static_cast<int>(unknown.size()); ++u) {
        G(i, u) = entries[i].constraint_values(unknown[u]);
      }
    }

    SplitMix64 gp_rng = st.root.fork(kStreamGp + k);
    std::vector<double> t_gp;
    TrainOptions topt;
    topt.kind = config.kernel;
    topt.input_lower = problem.lower;
    topt.input_upper = problem.upper;
    auto t0 = Clock::now();
    topt.seed = gp_rng.next_u64();
    GPModel obj_gp = train_gp(X, L, topt);
    t_gp.push_back(seconds_since(t0));
    std::vector<GPModel> con_gps;
    for (int u = 0; u < static_cast<int>(unknown.size()); ++u) {
      t0 = Clock::now();
      topt.seed = gp_rng.next_u64();
      con_gps.push_back(train_gp(X, G.col(u), topt));
      t_gp.push_back(seconds_since(t0));
    }

    const double incumbent = st.observations.incumbent();

    auto t_opt0 = Clock::now();
    SplitMix64 cand_rng = st.root.fork(kStreamScale + k);
    Mat cloud = shifted_halton(problem.lower, problem.upper,
                               500 * problem.dim_x, cand_rng);
    // local refinement cloud around the best observed point
    const Vec& center = st.best_observed();
    Vec range = problem.upper - problem.lower;
    std::vector<Vec> candidates;
    candidates.reserve(cloud.rows() + 100);
    for (int i = 0; i < cloud.rows(); ++i) {
      candidates.push_back(cloud.row(i).transpose());
    }
    for (double radius : {0.05, 0.01}) {
      for (int i = 0; i < 50; ++i) {
        Vec x = center;
        for (int d = 0; d < problem.dim_x; ++d) {
          x(d) += radius * range(d) * cand_rng.next_normal();
        }
        candidates.push_back(x.cwiseMax(problem.lower).cwiseMin(problem.upper));
      }
    }

    double best_score = -std::numeric_limits<double>::infinity();
    Vec best_x = candidates.front();
    for (const auto& x : candidates) {
      bool known_ok = true;
      if (!known.empty()) {
        Vec g = problem.constraints(x, y_dummy);
        for (int i : known) {
          if (g(i) > 0.0) {
            known_ok = false;
            break;
          }
        }
      }
      if (!known_ok) continue;
      double pof = 1.0;
      for (const auto& gp : con_gps) {
        double mu, var;
        gp.predict(x, mu, var);
        double sd = std::sqrt(std::max(var, 0.0));
        pof *= sd > 0.0 ? normal_cdf(-mu / sd) : (mu <= 0.0 ? 1.0 : 0.0);
      }
      double score;
      if (!std::isfinite(incumbent)) {
        // no feasible point yet: chase feasibility alone
        score = pof;
      } else {
        double mu, var;
        obj_gp.predict(x, mu, var);
        double sd = std::sqrt(std::max(var, 0.0));
        double acq = config.variant == Variant::BlackBoxPI
                         ? pi_analytic(mu, sd, incumbent)
                         : ei_analytic(mu, sd, incumbent);
        score = acq * pof;
      }
      if (score > best_score) {
        best_score = score;
        best_x = x;
      }
    }
    double t_opt = seconds_since(t_opt0);

    if (!st.evaluate_and_record(best_x, Vec(), 0.0, std::move(t_gp), t_opt)) {
      return st.record;
    }
  }
  return st.record;
}

}  // namespace

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::mWB2CF: return "mwb2cf";
    case Variant::EICF: return "eicf";
    case Variant::BlackBoxEI: return "blackbox-ei";
    case Variant::BlackBoxPI: return "blackbox-pi";
    case Variant::Random: return "random";
  }
  throw std::logic_error("unreachable");
}

Variant variant_from_name(const std::string& name) {
  if (name == "mwb2cf") return Variant::mWB2CF;
  if (name == "eicf") return Variant::EICF;
  if (name == "blackbox-ei") return Variant::BlackBoxEI;
  if (name == "blackbox-pi") return Variant::BlackBoxPI;
  if (name == "random") return Variant::Random;
  throw std::invalid_argument("unknown variant: " + name);
}

int RunConfig::resolved_init(int dim_z) const {
  return init_count > 0 ? init_count : std::max(3, dim_z + 1);
}

void RunConfig::validate(int dim_z) const {
  // budget == init is the degenerate design-only run
  if (budget < resolved_init(dim_z)) {
    throw std::invalid_argument(
        "budget must cover at least the initial design");
  }
  if (m_samples < 1 || n_starts < 1 || beta <= 0.0) {
    throw std::invalid_argument("invalid run configuration");
  }
}

double RunRecord::final_incumbent() const {
  if (iterations.empty()) {
    return std::numeric_limits<double>::infinity();
  }
  return iterations.back().incumbent;
}

double log10_regret(double incumbent, double true_min) {
  if (!std::isfinite(incumbent)) {
    return std::numeric_limits<double>::infinity();
  }
  if (incumbent < true_min - 1e-9) {
    throw OracleInconsistency("incumbent undercuts the reference optimum");
  }
  return std::log10(std::max(incumbent - true_min, 1e-12));
}

Eigen::MatrixXd lhs_init(const Eigen::VectorXd& lower,
                         const Eigen::VectorXd& upper, int count,
                         std::uint64_t seed) {
  SplitMix64 rng(seed);
  return latin_hypercube(lower, upper, count, rng);
}

RunRecord run_experiment(const GreyBoxProblem& problem, const RunConfig& config,
                         double true_min) {
  config.validate(problem.dim_z);
  switch (config.variant) {
    case Variant::mWB2CF:
    case Variant::EICF:
      return run_model_based(problem, config, true_min);
    case Variant::Random:
      return run_random(problem, config, true_min);
    case Variant::BlackBoxEI:
    case Variant::BlackBoxPI:
      return run_black_box(problem, config, true_min);
  }
  throw std::logic_error("unreachable");
}

}  // namespace cobalt

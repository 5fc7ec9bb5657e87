#include "cobalt/gp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cobalt/rng.hpp"

namespace cobalt {

namespace {

Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const Eigen::MatrixXd& Z) {
  const int n = static_cast<int>(Z.rows());
  Eigen::MatrixXd K(n, n);
  for (int i = 0; i < n; ++i) {
    K(i, i) = spec.signal_var;
    for (int j = 0; j < i; ++j) {
      double k = kernel_of_r(spec, scaled_distance(spec, Z.row(i), Z.row(j)));
      K(i, j) = k;
      K(j, i) = k;
    }
  }
  return K;
}

// Lower Cholesky factor of K + (noise + jitter) I; throws if it cannot be
// factorized. With escalate set, jitter grows by 10x up to 1e-2 * zeta^2.
Eigen::MatrixXd chol_factor(const Eigen::MatrixXd& K, double noise_var,
                            double signal_var, bool escalate,
                            double& jitter_used) {
  auto attempt = [&](double jitter, Eigen::MatrixXd& L) -> bool {
    Eigen::MatrixXd S = K;
    S.diagonal().array() += noise_var + jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(S);
    if (llt.info() != Eigen::Success) return false;
    L = llt.matrixL();
    return L.diagonal().minCoeff() > 1e-150;
  };
  Eigen::MatrixXd L;
  if (attempt(0.0, L)) {
    jitter_used = 0.0;
    return L;
  }
  if (escalate) {
    for (double jitter = 1e-10 * signal_var; jitter <= 1e-2 * signal_var;
         jitter *= 10.0) {
      if (attempt(jitter, L)) {
        jitter_used = jitter;
        return L;
      }
    }
  }
  throw IllConditionedKernel("kernel matrix is not positive definite");
}

KernelSpec spec_from_theta(KernelKind kind, const Eigen::VectorXd& theta,
                           int dim) {
  KernelSpec spec;
  spec.kind = kind;
  spec.lengthscales = theta.head(dim).array().exp();
  spec.signal_var = std::exp(theta(dim));
  return spec;
}

struct Standardizer {
  double mean, scale;
};

Standardizer standardize_stats(const Eigen::VectorXd& T) {
  Standardizer s;
  s.mean = T.mean();
  double var = (T.array() - s.mean).square().sum() / std::max<int>(1, T.size());
  double sd = std::sqrt(var);
  s.scale = sd < 1e-12 ? 1.0 : sd;  // constant-target data
  return s;
}

}  // namespace

LogMarginalLikelihood log_marginal_likelihood(const Eigen::MatrixXd& Z,
                                              const Eigen::VectorXd& T,
                                              KernelKind kind,
                                              const Eigen::VectorXd& theta,
                                              NoiseMode mode, bool with_grad) {
  const int n = static_cast<int>(Z.rows());
  const int d = static_cast<int>(Z.cols());
  if (n < 1 || T.size() != n) {
    throw std::invalid_argument("log_marginal_likelihood: bad data shapes");
  }
  const bool estimate_noise = mode == NoiseMode::Estimate;
  const int n_theta = d + 1 + (estimate_noise ? 1 : 0);
  if (theta.size() != n_theta) {
    throw std::invalid_argument("log_marginal_likelihood: bad theta length");
  }
  KernelSpec spec = spec_from_theta(kind, theta, d);
  double noise_var = estimate_noise ? std::exp(theta(d + 1)) : 1e-8;

  Eigen::MatrixXd K = kernel_matrix(spec, Z);
  double jitter = 0.0;
  Eigen::MatrixXd L = chol_factor(K, noise_var, spec.signal_var,
                                  /*escalate=*/false, jitter);

  Eigen::VectorXd alpha =
      L.transpose().triangularView<Eigen::Upper>().solve(
          L.triangularView<Eigen::Lower>().solve(T));
  double logdet = 2.0 * L.diagonal().array().log().sum();
  LogMarginalLikelihood out;
  out.value = -0.5 * T.dot(alpha) - 0.5 * logdet -
              0.5 * n * std::log(2.0 * std::numbers::pi);
  if (!with_grad) return out;

  // A = alpha alpha^T - K^{-1}; dL/dtheta_k = 0.5 tr(A dK/dtheta_k)
  Eigen::MatrixXd Kinv = L.transpose().triangularView<Eigen::Upper>().solve(
      L.triangularView<Eigen::Lower>().solve(
          Eigen::MatrixXd::Identity(n, n)));
  Eigen::MatrixXd A = alpha * alpha.transpose() - Kinv;

  out.grad = Eigen::VectorXd::Zero(n_theta);
  // dK/d(log zeta^2) = K (noise excluded)
  out.grad(d) = 0.5 * (A.array() * K.array()).sum();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < i; ++j) {
      double r = scaled_distance(spec, Z.row(i), Z.row(j));
      double w = kernel_w(spec, r);
      for (int k = 0; k < d; ++k) {
        double delta = Z(i, k) - Z(j, k);
        double lam = spec.lengthscales(k);
        // dK_ij/d(log lambda_k) = -w(r) delta^2 / lambda^2
        double dk = -w * delta * delta / (lam * lam);
        // each unordered pair appears twice in the trace; the x2 cancels
        // the leading 0.5 (diagonal terms have dK = 0)
        out.grad(k) += A(i, j) * dk;
      }
    }
  }
  if (estimate_noise) {
    out.grad(d + 1) = 0.5 * noise_var * A.diagonal().sum();
  }
  return out;
}

Eigen::VectorXd GPModel::normalize(const Eigen::VectorXd& z) const {
  return (z - input_lo).cwiseQuotient(input_range);
}

double GPModel::predict_mean(const Eigen::VectorXd& z) const {
  const int n = size();
  Eigen::VectorXd zh = normalize(z);
  double mean_std = 0.0;
  for (int j = 0; j < n; ++j) {
    mean_std += alpha(j) *
                kernel_of_r(kernel, scaled_distance(kernel, zh,
                                                    train_inputs.row(j)));
  }
  return output_mean + output_scale * mean_std;
}

void GPModel::predict(const Eigen::VectorXd& z, double& mean,
                      double& var) const {
  const int n = size();
  Eigen::VectorXd zh = normalize(z);
  Eigen::VectorXd k_vec(n);
  for (int j = 0; j < n; ++j) {
    k_vec(j) = kernel_of_r(kernel,
                           scaled_distance(kernel, zh, train_inputs.row(j)));
  }
  double mean_std = k_vec.dot(alpha);
  Eigen::VectorXd v = chol.triangularView<Eigen::Lower>().solve(k_vec);
  double var_std = std::max(0.0, kernel.signal_var - v.squaredNorm());
  mean = output_mean + output_scale * mean_std;
  var = output_scale * output_scale * var_std;
}

void GPModel::predict_with_grad(const Eigen::VectorXd& z, double& mean,
                                double& var, Eigen::VectorXd& dmean,
                                Eigen::VectorXd& dvar) const {
  const int n = size();
  const int d = static_cast<int>(train_inputs.cols());
  Eigen::VectorXd zh = normalize(z);
  Eigen::VectorXd k_vec(n);
  Eigen::MatrixXd G(n, d);  // G(j,:) = dk(zh, z_j)/dzh
  for (int j = 0; j < n; ++j) {
    double r = scaled_distance(kernel, zh, train_inputs.row(j));
    k_vec(j) = kernel_of_r(kernel, r);
    double w = kernel_w(kernel, r);
    for (int i = 0; i < d; ++i) {
      double lam = kernel.lengthscales(i);
      G(j, i) = w * (zh(i) - train_inputs(j, i)) / (lam * lam);
    }
  }
  double mean_std = k_vec.dot(alpha);
  Eigen::VectorXd beta = chol.transpose().triangularView<Eigen::Upper>().solve(
      chol.triangularView<Eigen::Lower>().solve(k_vec));
  double var_std = std::max(0.0, kernel.signal_var - k_vec.dot(beta));
  Eigen::VectorXd dmean_std = G.transpose() * alpha;
  Eigen::VectorXd dvar_std = -2.0 * (G.transpose() * beta);

  mean = output_mean + output_scale * mean_std;
  var = output_scale * output_scale * var_std;
  dmean = (output_scale * dmean_std.array() / input_range.array()).matrix();
  dvar = (output_scale * output_scale * dvar_std.array() /
          input_range.array())
             .matrix();
}

namespace {

GPModel assemble_model(const Eigen::MatrixXd& Zn, const Eigen::VectorXd& Tn,
                       const KernelSpec& spec, double noise_var,
                       const Eigen::VectorXd& lo, const Eigen::VectorXd& range,
                       double out_mean, double out_scale) {
  GPModel m;
  m.kernel = spec;
  m.noise_var = noise_var;
  m.train_inputs = Zn;
  m.train_targets = Tn;
  m.input_lo = lo;
  m.input_range = range;
  m.output_mean = out_mean;
  m.output_scale = out_scale;
  Eigen::MatrixXd K = kernel_matrix(spec, Zn);
  m.chol = chol_factor(K, noise_var, spec.signal_var, /*escalate=*/true,
                       m.jitter);
  m.alpha = m.chol.transpose().triangularView<Eigen::Upper>().solve(
      m.chol.triangularView<Eigen::Lower>().solve(Tn));
  return m;
}

void normalization_box(const Eigen::MatrixXd& Z, const TrainOptions& opts,
                       Eigen::VectorXd& lo, Eigen::VectorXd& range) {
  const int d = static_cast<int>(Z.cols());
  if (opts.input_lower && opts.input_upper) {
    lo = *opts.input_lower;
    range = *opts.input_upper - *opts.input_lower;
  } else {
    lo = Z.colwise().minCoeff();
    range = (Z.colwise().maxCoeff().transpose() - lo).eval();
  }
  for (int i = 0; i < d; ++i) {
    if (range(i) < 1e-12) range(i) = 1.0;
  }
}

}  // namespace

GPModel fit_gp_fixed(const Eigen::MatrixXd& Z, const Eigen::VectorXd& T,
                     const KernelSpec& spec, double noise_var,
                     const std::optional<Eigen::VectorXd>& input_lower,
                     const std::optional<Eigen::VectorXd>& input_upper) {
  TrainOptions opts;
  opts.input_lower = input_lower;
  opts.input_upper = input_upper;
  Eigen::VectorXd lo, range;
  normalization_box(Z, opts, lo, range);
  Eigen::MatrixXd Zn = (Z.rowwise() - lo.transpose()).array().rowwise() /
                       range.transpose().array();
  Standardizer st = standardize_stats(T);
  Eigen::VectorXd Tn = (T.array() - st.mean) / st.scale;
  return assemble_model(Zn, Tn, spec, noise_var, lo, range, st.mean, st.scale);
}

GPModel train_gp(const Eigen::MatrixXd& Z, const Eigen::VectorXd& T,
                 const TrainOptions& opts) {
  const int n = static_cast<int>(Z.rows());
  const int d = static_cast<int>(Z.cols());
  if (n < 1 || T.size() != n) {
    throw std::invalid_argument("train_gp: bad data shapes");
  }
  Eigen::VectorXd lo, range;
  normalization_box(Z, opts, lo, range);
  Eigen::MatrixXd Zn = (Z.rowwise() - lo.transpose()).array().rowwise() /
                       range.transpose().array();
  Standardizer st = standardize_stats(T);
  Eigen::VectorXd Tn = (T.array() - st.mean) / st.scale;

  const bool estimate_noise = opts.noise == NoiseMode::Estimate;
  const int n_theta = d + 1 + (estimate_noise ? 1 : 0);
  Eigen::VectorXd blo(n_theta), bhi(n_theta);
  blo.head(d).setConstant(std::log(0.01));
  bhi.head(d).setConstant(std::log(10.0));
  blo(d) = std::log(0.01);
  bhi(d) = std::log(100.0);
  if (estimate_noise) {
    blo(d + 1) = std::log(1e-8);
    bhi(d + 1) = std::log(1.0);
  }

  auto objective = [&](const Eigen::VectorXd& theta, bool with_grad) {
    return log_marginal_likelihood(Zn, Tn, opts.kind, theta,
                                   opts.noise, with_grad);
  };

  // coarse global phase: quasi-random samples in the log box, plus the
  // unit-hyperparameter default
  SplitMix64 rng(opts.seed ^ 0xC0BA17ULL);
  Eigen::MatrixXd samples = shifted_halton(blo, bhi, opts.global_samples, rng);
  std::vector<Eigen::VectorXd> starts;
  starts.push_back(Eigen::VectorXd::Zero(n_theta));  // lambda = 1, zeta^2 = 1
  if (estimate_noise) starts.back()(d + 1) = std::log(1e-6);
  for (int i = 0; i < samples.rows(); ++i) {
    starts.push_back(samples.row(i).transpose());
  }
  struct Scored {
    double value;
    Eigen::VectorXd theta;
  };
  std::vector<Scored> scored;
  for (auto& theta : starts) {
    try {
      scored.push_back({objective(theta, false).value, theta});
    } catch (const IllConditionedKernel&) {
      // skip starts whose kernel matrix cannot be factorized
    }
  }
  if (scored.empty()) {
    throw IllConditionedKernel("train_gp: every initialization failed");
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const Scored& a, const Scored& b) {
                     return a.value > b.value;
                   });

  // local phase: projected gradient ascent with backtracking on the best few
  double best_value = scored.front().value;
  Eigen::VectorXd best_theta = scored.front().theta;
  const int n_refine = std::min<int>(opts.refine_top,
                                     static_cast<int>(scored.size()));
  for (int s = 0; s < n_refine; ++s) {
    Eigen::VectorXd theta = scored[s].theta;
    double value = scored[s].value;
    Eigen::VectorXd grad;
    try {
      grad = objective(theta, true).grad;
    } catch (const IllConditionedKernel&) {
      continue;
    }
    for (int iter = 0; iter < opts.max_ascent_iters; ++iter) {
      // projected gradient stationarity
      Eigen::VectorXd proj =
          (theta + grad).cwiseMax(blo).cwiseMin(bhi) - theta;
      if (proj.lpNorm<Eigen::Infinity>() < 1e-7) break;
      double step = 1.0 / std::max(1.0, grad.lpNorm<Eigen::Infinity>());
      bool moved = false;
      for (int bt = 0; bt < 30; ++bt) {
        Eigen::VectorXd cand =
            (theta + step * grad).cwiseMax(blo).cwiseMin(bhi);
        try {
          LogMarginalLikelihood lml = objective(cand, true);
          double ascent = grad.dot(cand - theta);
          if (lml.value > value + 1e-4 * ascent) {
            theta = cand;
            value = lml.value;
            grad = lml.grad;
            moved = true;
            break;
          }
        } catch (const IllConditionedKernel&) {
          // shrink and retry
        }
        step *= 0.5;
      }
      if (!moved) break;
    }
    if (value > best_value) {
      best_value = value;
      best_theta = theta;
    }
  }

  KernelSpec spec = spec_from_theta(opts.kind, best_theta, d);
  double noise_var = estimate_noise ? std::exp(best_theta(d + 1)) : 1e-8;
  return assemble_model(Zn, Tn, spec, noise_var, lo, range, st.mean, st.scale);
}

MOGPosterior mogp_posterior(const std::vector<GPModel>& models,
                            const Eigen::VectorXd& z, bool with_gradients) {
  const int n_y = static_cast<int>(models.size());
  if (n_y == 0) throw std::invalid_argument("mogp_posterior: no models");
  const int n = models.front().size();
  const int d = static_cast<int>(models.front().train_inputs.cols());
  for (const auto& m : models) {
    if (m.size() != n || m.train_inputs.cols() != d) {
      throw std::invalid_argument(
          "mogp_posterior: models trained on inconsistent datasets");
    }
  }
  MOGPosterior post;
  post.mean.resize(n_y);
  post.var.resize(n_y);
  post.sd.resize(n_y);
  post.has_gradients = with_gradients;
  if (with_gradients) {
    post.mean_jac.resize(n_y, d);
    post.var_jac.resize(n_y, d);
    post.sd_jac.resize(n_y, d);
  }
  for (int j = 0; j < n_y; ++j) {
    if (with_gradients) {
      Eigen::VectorXd dmean, dvar;
      models[j].predict_with_grad(z, post.mean(j), post.var(j), dmean, dvar);
      post.mean_jac.row(j) = dmean.transpose();
      post.var_jac.row(j) = dvar.transpose();
      double denom = 2.0 * std::max(std::sqrt(post.var(j)), 1e-10);
      post.sd_jac.row(j) = dvar.transpose() / denom;
    } else {
      models[j].predict(z, post.mean(j), post.var(j));
    }
    post.sd(j) = std::sqrt(std::max(0.0, post.var(j)));
  }
  return post;
}

}  // namespace cobalt

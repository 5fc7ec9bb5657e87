// Grey-box problem abstraction: known differentiable white-box objective and
// constraints composed with an opaque, expensive black-box vector function,
//
//   min f(x, y)  s.t.  g(x, y) <= 0,  h(x, y) = 0,  y = d(A x),  xL <= x <= xU,
//
// together with the append-only dataset of evaluations consumed by the
// surrogate and loop modules.

#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cobalt {

inline constexpr double kFeasibilityTol = 1e-8;

// thrown when the black-box simulator fails; carries the query point
class SimulatorError : public std::runtime_error {
 public:
  SimulatorError(const std::string& what, Eigen::VectorXd x)
      : std::runtime_error(what), x_(std::move(x)) {}
  const Eigen::VectorXd& query() const { return x_; }

 private:
  Eigen::VectorXd x_;
};

struct GreyBoxProblem {
  using Vec = Eigen::VectorXd;
  using Mat = Eigen::MatrixXd;

  std::string name;
  int dim_x = 0;
  int dim_y = 0;
  int dim_z = 0;
  int num_g = 0;
  int num_h = 0;

  // n_z x n_x, each row selects exactly one component of x
  Mat selection;
  Vec lower, upper;

  std::function<double(const Vec&, const Vec&)> objective;
  // gradients of f with respect to x and y
  std::function<void(const Vec&, const Vec&, Vec&, Vec&)> objective_grad;

  // g(x,y) -> n_g vector; Jacobians are n_g x n_x and n_g x n_y
  std::function<Vec(const Vec&, const Vec&)> constraints;
  std::function<void(const Vec&, const Vec&, Mat&, Mat&)> constraints_grad;
  // flags which inequality constraints actually depend on y (used by the
  // black-box baselines to decide what needs its own surrogate)
  std::vector<bool> constraint_uses_y;

  // equality constraints h(x,y) -> n_h vector, optional
  std::function<Vec(const Vec&, const Vec&)> equalities;
  std::function<void(const Vec&, const Vec&, Mat&, Mat&)> equalities_grad;

  std::function<Vec(const Vec&)> black_box;

  // budget accounting is kept here so it is independent of caller discipline
  mutable long black_box_calls = 0;

  Vec select_inputs(const Vec& x) const;
  Vec call_black_box(const Vec& z) const;

  void validate() const;
};

struct Evaluation {
  Eigen::VectorXd x, z, y;
  double objective = 0.0;
  Eigen::VectorXd constraint_values;  // n_g
  Eigen::VectorXd equality_values;    // n_h
  bool feasible = false;
};

Evaluation evaluate(const GreyBoxProblem& problem, const Eigen::VectorXd& x,
                    double tol_feas = kFeasibilityTol);

// Append-only dataset D_n; keeps per-output training matrices in sync.
class ObservationSet {
 public:
  void append(const Evaluation& e);

  int size() const { return static_cast<int>(entries_.size()); }
  const std::vector<Evaluation>& entries() const { return entries_; }

  // n x n_z matrix of black-box inputs
  const Eigen::MatrixXd& inputs() const { return inputs_; }
  // n-vector of output j across all entries
  Eigen::VectorXd targets(int output) const;
  // n-vector of overall objective values
  Eigen::VectorXd objectives() const;

  // best feasible objective, +inf if none
  double incumbent() const;

 private:
  std::vector<Evaluation> entries_;
  Eigen::MatrixXd inputs_;
  Eigen::MatrixXd outputs_;  // n x n_y
};

}  // namespace cobalt

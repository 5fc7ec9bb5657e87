#include "cobalt/greybox.hpp"

#include <limits>

namespace cobalt {

Eigen::VectorXd GreyBoxProblem::select_inputs(const Eigen::VectorXd& x) const {
  if (x.size() != dim_x) {
    throw std::invalid_argument("select_inputs: x has length " +
                                std::to_string(x.size()) + ", expected " +
                                std::to_string(dim_x));
  }
  // pure selection: copy components rather than multiply, so z = A x holds
  // bit-identically
  Eigen::VectorXd z(dim_z);
  for (int r = 0; r < dim_z; ++r) {
    int col = -1;
    for (int c = 0; c < dim_x; ++c) {
      if (selection(r, c) != 0.0) {
        col = c;
        break;
      }
    }
    z(r) = x(col);
  }
  return z;
}

Eigen::VectorXd GreyBoxProblem::call_black_box(const Eigen::VectorXd& z) const {
  ++black_box_calls;
  return black_box(z);
}

void GreyBoxProblem::validate() const {
  if (selection.rows() != dim_z || selection.cols() != dim_x) {
    throw std::invalid_argument("selection matrix must be n_z x n_x");
  }
  if (dim_z > dim_x) {
    throw std::invalid_argument("n_z must not exceed n_x");
  }
  for (int r = 0; r < dim_z; ++r) {
    int ones = 0;
    for (int c = 0; c < dim_x; ++c) {
      double v = selection(r, c);
      if (v == 1.0) {
        ++ones;
      } else if (v != 0.0) {
        throw std::invalid_argument("selection matrix must be binary");
      }
    }
    if (ones != 1) {
      throw std::invalid_argument(
          "each selection row must have exactly one 1 entry");
    }
  }
  if (lower.size() != dim_x || upper.size() != dim_x ||
      !(lower.array() < upper.array()).all()) {
    throw std::invalid_argument("bounds must satisfy lower < upper");
  }
}

Evaluation evaluate(const GreyBoxProblem& problem, const Eigen::VectorXd& x,
                    double tol_feas) {
  Evaluation e;
  e.x = x;
  e.z = problem.select_inputs(x);
  try {
    e.y = problem.call_black_box(e.z);
  } catch (const SimulatorError&) {
    throw;
  } catch (const std::exception& ex) {
    throw SimulatorError(std::string("black box failed: ") + ex.what(), x);
  }
  e.objective = problem.objective(x, e.y);
  e.constraint_values = problem.num_g > 0 ? problem.constraints(x, e.y)
                                          : Eigen::VectorXd(0);
  e.equality_values = problem.num_h > 0 ? problem.equalities(x, e.y)
                                        : Eigen::VectorXd(0);
  e.feasible = (e.constraint_values.size() == 0 ||
                e.constraint_values.maxCoeff() <= tol_feas) &&
               (e.equality_values.size() == 0 ||
                e.equality_values.cwiseAbs().maxCoeff() <= tol_feas);
  return e;
}

void ObservationSet::append(const Evaluation& e) {
  const int n = size();
  if (n == 0) {
    inputs_.resize(0, e.z.size());
    outputs_.resize(0, e.y.size());
  }
  inputs_.conservativeResize(n + 1, Eigen::NoChange);
  outputs_.conservativeResize(n + 1, Eigen::NoChange);
  inputs_.row(n) = e.z.transpose();
  outputs_.row(n) = e.y.transpose();
  entries_.push_back(e);
}

Eigen::VectorXd ObservationSet::targets(int output) const {
  return outputs_.col(output);
}

Eigen::VectorXd ObservationSet::objectives() const {
  Eigen::VectorXd obj(size());
  for (int i = 0; i < size(); ++i) obj(i) = entries_[i].objective;
  return obj;
}

double ObservationSet::incumbent() const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& e : entries_) {
    if (e.feasible && e.objective < best) best = e.objective;
  }
  return best;
}

}  // namespace cobalt

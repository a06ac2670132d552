#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace mflab {

// d x d matrix M of the drift M grad g * mu; admissible when the symmetric part is negative semidefinite.
class FlowMatrix {
 public:
  FlowMatrix() : FlowMatrix(gradient(3)) {}
  explicit FlowMatrix(Eigen::MatrixXd m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols() || m_.rows() < 1) throw std::invalid_argument("flow matrix must be square");
  }

  static FlowMatrix gradient(int d) { return FlowMatrix(-Eigen::MatrixXd::Identity(d, d)); }
  static FlowMatrix zero(int d) { return FlowMatrix(Eigen::MatrixXd::Zero(d, d)); }
  // Rotation generator in the (x1, x2) plane; divergence-free drift.
  static FlowMatrix conservative(int d) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, d);
    m(0, 1) = -1.0;
    m(1, 0) = 1.0;
    return FlowMatrix(m);
  }
  static FlowMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    const auto d = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd m(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
      if (static_cast<Eigen::Index>(rows[i].size()) != d) throw std::invalid_argument("flow matrix rows must be length d");
      for (Eigen::Index j = 0; j < d; ++j) m(i, j) = rows[i][j];
    }
    return FlowMatrix(m);
  }

  int dim() const { return static_cast<int>(m_.rows()); }
  double operator()(int i, int j) const { return m_(i, j); }
  const Eigen::MatrixXd& matrix() const { return m_; }

  bool is_zero() const { return m_.isZero(0.0); }
  bool is_antisymmetric() const { return (m_ + m_.transpose()).isZero(0.0); }

  // Largest eigenvalue of (M + M^T)/2 and its eigenvector.
  std::pair<double, Eigen::VectorXd> max_symmetric_eigen() const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m_ + m_.transpose()));
    const auto& ev = es.eigenvalues();
    Eigen::Index k = ev.size() - 1;
    return {ev(k), es.eigenvectors().col(k)};
  }

  // M : H for symmetric H, summed so that antisymmetric M gives exactly 0.
  double frobenius_with_symmetric(const std::vector<double>& h) const {
    const int d = dim();
    double acc = 0.0;
    for (int i = 0; i < d; ++i) acc += m_(i, i) * h[i * d + i];
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j) acc += (m_(i, j) + m_(j, i)) * h[i * d + j];
    return acc;
  }

  void validate(double tol = 1e-12) const {
    const auto [lam, vec] = max_symmetric_eigen();
    if (lam > tol)
      throw std::invalid_argument("flow matrix violates M xi . xi <= 0: symmetric part has eigenvalue " +
                                  std::to_string(lam));
  }

  std::vector<std::vector<double>> rows() const {
    std::vector<std::vector<double>> out(dim(), std::vector<double>(dim()));
    for (int i = 0; i < dim(); ++i)
      for (int j = 0; j < dim(); ++j) out[i][j] = m_(i, j);
    return out;
  }

 private:
  Eigen::MatrixXd m_;
};

}  // namespace mflab

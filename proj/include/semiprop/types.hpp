#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace semiprop {

using Complex = std::complex<double>;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

inline constexpr double kPi = 3.14159265358979323846;

/// A point z = (q, p) in 2d-dimensional phase space.
struct PhasePoint {
  Vec q;
  Vec p;

  PhasePoint() = default;
  PhasePoint(Vec q_, Vec p_) : q(std::move(q_)), p(std::move(p_)) {
    if (q.size() != p.size() || q.size() < 1)
      throw std::invalid_argument("PhasePoint: q and p must have equal length d >= 1");
    if (!q.allFinite() || !p.allFinite())
      throw std::invalid_argument("PhasePoint: entries must be finite");
  }

  int dim() const { return static_cast<int>(q.size()); }
};

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace semiprop

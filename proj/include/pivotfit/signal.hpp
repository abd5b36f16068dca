#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace pivotfit {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Paired displacement/load history. Used for raw, reduced and resampled records alike.
template <typename Scalar>
struct BasicSignalPair {
  Vector<Scalar> displacement;
  Vector<Scalar> load;

  Eigen::Index size() const { return displacement.size(); }

  bool operator==(const BasicSignalPair& other) const {
    return displacement.size() == other.displacement.size() && load.size() == other.load.size() &&
           displacement == other.displacement && load == other.load;
  }
};

using SignalPair = BasicSignalPair<double>;

inline SignalPair make_signal(const std::vector<double>& displacement, const std::vector<double>& load) {
  SignalPair pair;
  pair.displacement = Eigen::Map<const Eigen::VectorXd>(displacement.data(), static_cast<Eigen::Index>(displacement.size()));
  pair.load = Eigen::Map<const Eigen::VectorXd>(load.data(), static_cast<Eigen::Index>(load.size()));
  return pair;
}

// Error hierarchy. The CLI maps each kind onto its own exit status.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> issues);
  ValidationError(const std::string& what, std::vector<std::string> issues);

  const std::vector<std::string>& issues() const { return issues_; }

 private:
  std::vector<std::string> issues_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class OptimizationError : public Error {
 public:
  using Error::Error;
};

}  // namespace pivotfit

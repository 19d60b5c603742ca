#pragma once

#include <stdexcept>
#include <string>

namespace dppmle {

// Base for every failure raised by the library.
class DppError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotSymmetric : public DppError {
 public:
  using DppError::DppError;
};

class EigenvalueOutOfRange : public DppError {
 public:
  EigenvalueOutOfRange(const std::string& what, double eigenvalue)
      : DppError(what), eigenvalue_(eigenvalue) {}
  double eigenvalue() const { return eigenvalue_; }

 private:
  double eigenvalue_;
};

class GroundSetTooLarge : public DppError {
 public:
  using DppError::DppError;
};

class SupportMismatch : public DppError {
 public:
  using DppError::DppError;
};

class InvalidArgument : public DppError {
 public:
  using DppError::DppError;
};

class EigendecompositionFailure : public DppError {
 public:
  using DppError::DppError;
};

class EmptyBatch : public DppError {
 public:
  using DppError::DppError;
};

class SingularPrincipalMinor : public DppError {
 public:
  SingularPrincipalMinor(const std::string& what, unsigned long long subset)
      : DppError(what), subset_(subset) {}
  unsigned long long subset() const { return subset_; }

 private:
  unsigned long long subset_;
};

class SingularHessian : public DppError {
 public:
  using DppError::DppError;
};

class DegenerateTable : public DppError {
 public:
  DegenerateTable(const std::string& what, int block = -1)
      : DppError(what), block_(block) {}
  // Index of the offending block for block estimators, -1 otherwise.
  int block() const { return block_; }

 private:
  int block_;
};

class ReducibleKernel : public DppError {
 public:
  using DppError::DppError;
};

class ZeroB : public DppError {
 public:
  using DppError::DppError;
};

class ParseError : public DppError {
 public:
  using DppError::DppError;
};

}  // namespace dppmle

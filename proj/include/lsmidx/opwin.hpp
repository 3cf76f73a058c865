#pragma once

// Finite-window operator algebra for qudit chains.
//
// Conventions:
//   * A LocalOperator on window [lo, hi] is a dense d^(hi-lo+1) square matrix.
//   * Tensor ordering: the leftmost lattice site is the most significant factor.
//     Within a site, register 0 is the most significant factor.
//   * The scalar algebra lives on the empty window as a 1x1 matrix.

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lsmidx/error.hpp"

namespace lsmidx {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Index = Eigen::Index;

/// Tolerance hierarchy shared by all modules.
namespace tol {
inline constexpr double algebraic = 1e-12;
inline constexpr double automorphism = 1e-9;
inline constexpr double phase = 1e-6;
}  // namespace tol

/// Register dimensions of the on-site Hilbert space; d is their product.
class SiteSpec {
 public:
  explicit SiteSpec(std::vector<int> registers);

  const std::vector<int>& registers() const { return registers_; }
  int num_registers() const { return static_cast<int>(registers_.size()); }
  int register_dim(int r) const { return registers_.at(static_cast<std::size_t>(r)); }
  int dim() const { return dim_; }

  /// Registers of `*this` followed by those of `other`.
  SiteSpec stacked(const SiteSpec& other) const;

  bool operator==(const SiteSpec& other) const { return registers_ == other.registers_; }

 private:
  std::vector<int> registers_;
  int dim_ = 1;
};

/// Closed integer interval of sites, or the empty window.
struct Window {
  long lo = 0;
  long hi = -1;

  static Window empty() { return {0, -1}; }
  static Window of(long lo, long hi);
  static Window site(long j) { return {j, j}; }

  bool is_empty() const { return hi < lo; }
  long length() const { return is_empty() ? 0 : hi - lo + 1; }
  bool contains(long j) const { return !is_empty() && lo <= j && j <= hi; }
  bool contains(const Window& other) const;
  /// Smallest interval containing both.
  Window hull(const Window& other) const;
  Window intersect(const Window& other) const;
  Window shifted(long k) const { return is_empty() ? *this : Window{lo + k, hi + k}; }
  Window fattened(long r) const { return is_empty() ? *this : Window{lo - r, hi + r}; }

  bool operator==(const Window& other) const;
  std::string str() const;
};

std::ostream& operator<<(std::ostream& os, const Window& w);

/// Largest operator dimension that may be materialized. Defaults to 2^12,
/// i.e. twelve qubits.
std::size_t operator_dim_cap();
void set_operator_dim_cap(std::size_t cap);
/// Convenience: cap expressed as a number of qubit sites.
void set_window_cap_sites(int sites);

/// d^length, throwing WindowCapExceeded when above the cap.
Index checked_dim(int site_dim, long length);

class LocalOperator {
 public:
  LocalOperator(int site_dim, Window window, Matrix matrix);

  static LocalOperator identity(int site_dim, Window window);
  static LocalOperator scalar(int site_dim, cplx value);
  static LocalOperator on_site(int site_dim, long site, const Matrix& m);
  /// |a><b| on the window, a and b being basis indices of the window space.
  static LocalOperator matrix_unit(int site_dim, Window window, Index a, Index b);

  int site_dim() const { return site_dim_; }
  const Window& window() const { return window_; }
  const Matrix& matrix() const { return matrix_; }
  Index dim() const { return matrix_.rows(); }

 private:
  int site_dim_;
  Window window_;
  Matrix matrix_;
};

/// Tensor with the identity on target \ op.window.
LocalOperator embed(const LocalOperator& op, Window target);

LocalOperator product(const LocalOperator& a, const LocalOperator& b);
LocalOperator adjoint(const LocalOperator& a);
LocalOperator scaled(const LocalOperator& a, cplx c);
LocalOperator sum(const LocalOperator& a, const LocalOperator& b);
LocalOperator difference(const LocalOperator& a, const LocalOperator& b);

inline LocalOperator operator*(const LocalOperator& a, const LocalOperator& b) { return product(a, b); }
inline LocalOperator operator+(const LocalOperator& a, const LocalOperator& b) { return sum(a, b); }
inline LocalOperator operator-(const LocalOperator& a, const LocalOperator& b) { return difference(a, b); }

/// Normalized partial trace onto `keep` (the tracial conditional expectation).
LocalOperator conditional_expectation(const LocalOperator& op, Window keep);

/// Largest singular value.
double op_norm(const LocalOperator& a);
/// Operator norm of a - b after common embedding.
double op_distance(const LocalOperator& a, const LocalOperator& b);
/// Largest entry modulus of a - b after common embedding; cheap bound used in hot loops.
double max_entry_distance(const LocalOperator& a, const LocalOperator& b);

/// Shrinks the window by peeling boundary sites on which `op` is the identity.
LocalOperator trim(const LocalOperator& op, double tolerance = 1e-11);

/// U * op * U^dagger for a unitary `gate` supported on `gate_window`.
LocalOperator conjugate(const LocalOperator& op, const Matrix& gate, Window gate_window);

/// Normalized trace tr(op)/dim.
cplx normalized_trace(const LocalOperator& op);

bool is_unitary(const Matrix& m, double tolerance = tol::automorphism);

/// Nearest unitary in Frobenius norm (polar factor).
Matrix polar_unitary(const Matrix& m);

Matrix kron(const Matrix& a, const Matrix& b);

/// In-place (I_left (x) u (x) I_right) * m where m has left*u.rows()*right rows.
void left_multiply_block(Matrix& m, const Matrix& u, Index left, Index right);

/// In-place m * (I_left (x) u (x) I_right).
void right_multiply_block(Matrix& m, const Matrix& u, Index left, Index right);

/// In-place conjugation of a matrix on `window` by a gate on `gate_window` inside it.
void conjugate_in_place(Matrix& m, int site_dim, Window window, const Matrix& gate, Window gate_window);

/// Reorders tensor factors: output factor i is input factor perm[i].
Matrix permute_factors(const Matrix& m, std::span<const int> dims, std::span<const int> perm);

namespace pauli {
Matrix I();
Matrix X();
Matrix Y();
Matrix Z();
}  // namespace pauli

}  // namespace lsmidx

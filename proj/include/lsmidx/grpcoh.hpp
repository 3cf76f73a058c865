#pragma once

// Finite group cohomology with U(1) = Q/Z coefficients on inhomogeneous bar
// cochains. Tuples (g1, ..., gk) are indexed with g1 most significant.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lsmidx/error.hpp"

namespace lsmidx {

class FiniteGroup {
 public:
  /// Validates closure, associativity, identity 0 and inverses.
  explicit FiniteGroup(std::vector<std::vector<int>> table, std::string name = "");

  static FiniteGroup cyclic(int n);
  /// Element (a, b) carries label a * |b-group| + b.
  static FiniteGroup product(const FiniteGroup& a, const FiniteGroup& b);

  int order() const { return static_cast<int>(table_.size()); }
  int mul(int a, int b) const { return table_[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)]; }
  int inv(int a) const { return inverse_[static_cast<std::size_t>(a)]; }
  const std::vector<std::vector<int>>& table() const { return table_; }
  const std::string& name() const { return name_; }

  /// Same group with element x renamed perm[x]; perm must fix 0.
  FiniteGroup relabeled(const std::vector<int>& perm) const;

 private:
  std::vector<std::vector<int>> table_;
  std::vector<int> inverse_;
  std::string name_;
};

/// Exact element p/q of Q/Z, normalized to 0 <= p < q, gcd(p, q) = 1.
class Phase {
 public:
  Phase() = default;
  Phase(std::int64_t num, std::int64_t den);

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  bool is_zero() const { return num_ == 0; }
  double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }
  std::string str() const;

  Phase operator+(const Phase& o) const;
  Phase operator-(const Phase& o) const;
  Phase operator-() const;
  Phase& operator+=(const Phase& o) { return *this = *this + o; }
  Phase& operator-=(const Phase& o) { return *this = *this - o; }
  Phase times(std::int64_t k) const;
  bool operator==(const Phase& o) const { return num_ == o.num_ && den_ == o.den_; }
  bool operator!=(const Phase& o) const { return !(*this == o); }

  /// Parses "p/q" or an integer.
  static Phase parse(const std::string& text);

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

std::ostream& operator<<(std::ostream& os, const Phase& p);

class PhaseCochain {
 public:
  /// Empty placeholder with no group attached.
  PhaseCochain() = default;
  PhaseCochain(std::shared_ptr<const FiniteGroup> group, int degree);

  const FiniteGroup& group() const { return *group_; }
  std::shared_ptr<const FiniteGroup> group_ptr() const { return group_; }
  int degree() const { return degree_; }
  std::size_t size() const { return values_.size(); }

  std::size_t index(const std::vector<int>& args) const;
  std::vector<int> args(std::size_t index) const;

  const Phase& at(std::size_t i) const { return values_[i]; }
  Phase& at(std::size_t i) { return values_[i]; }
  const Phase& operator()(const std::vector<int>& a) const { return values_[index(a)]; }
  Phase& operator()(const std::vector<int>& a) { return values_[index(a)]; }

  bool is_zero() const;
  PhaseCochain operator+(const PhaseCochain& o) const;
  PhaseCochain operator-(const PhaseCochain& o) const;
  bool operator==(const PhaseCochain& o) const;

  /// Lines "g1,...,gk → p/q" in index order.
  std::string dump() const;

 private:
  std::shared_ptr<const FiniteGroup> group_;
  int degree_ = 0;
  std::vector<Phase> values_;
};

/// Highest cochain degree accepted by coboundary and cohomology (default 3).
int degree_cap();
void set_degree_cap(int cap);

PhaseCochain coboundary(const PhaseCochain& f);
bool is_cocycle(const PhaseCochain& f);

struct SnfData;

class CohomologyGroup {
 public:
  const FiniteGroup& group() const { return *group_; }
  int degree() const { return degree_; }
  /// Invariant factors, each >= 2, each dividing the next.
  const std::vector<std::int64_t>& factors() const { return factors_; }
  bool is_trivial() const { return factors_.empty(); }
  /// One normalized cocycle per invariant factor, representing the unit coordinate.
  const std::vector<PhaseCochain>& generators() const { return generators_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  /// "ℤ/f1 ⊕ ... ⊕ ℤ/fm", or "0".
  std::string str() const;

  const SnfData& snf() const { return *snf_; }

 private:
  friend CohomologyGroup cohomology(std::shared_ptr<const FiniteGroup> group, int degree);

  std::shared_ptr<const FiniteGroup> group_;
  int degree_ = 0;
  std::vector<std::int64_t> factors_;
  std::vector<PhaseCochain> generators_;
  std::vector<std::string> warnings_;
  std::shared_ptr<const SnfData> snf_;
};

/// Largest number of rows |G|^(n+1) of a coboundary matrix (default 16^4).
std::size_t cohomology_row_cap();
void set_cohomology_row_cap(std::size_t rows);

/// H^n(G, U(1)) computed as the torsion of coker(delta_n) = H^(n+1)(G, Z).
CohomologyGroup cohomology(std::shared_ptr<const FiniteGroup> group, int degree);

struct ClassCoords {
  std::vector<std::int64_t> residues;
  bool is_zero() const;
  bool operator==(const ClassCoords& o) const { return residues == o.residues; }
  std::string str() const;
};

ClassCoords class_of(const PhaseCochain& f, const CohomologyGroup& h);

/// Element (g, n) of G0 x Z.
struct ProductElement {
  int g = 0;
  long n = 0;
};

using ProductEvaluator =
    std::function<std::optional<Phase>(const ProductElement&, const ProductElement&, const ProductElement&)>;

/// Degree-2 cochain on G0: w(e1; g; g') + w(g; g'; e1) - w(g; e1; g'), with e1 = (identity, 1).
PhaseCochain slant_z(const ProductEvaluator& omega, std::shared_ptr<const FiniteGroup> g0);

}  // namespace lsmidx

#include "lsmidx/opwin.hpp"

#include <algorithm>
#include <atomic>
#include <ostream>
#include <sstream>

#include <Eigen/SVD>

namespace lsmidx {

namespace {

std::atomic<std::size_t> g_dim_cap{std::size_t{1} << 12};

Index ipow(int base, long exp) {
  Index r = 1;
  for (long i = 0; i < exp; ++i) r *= base;
  return r;
}

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace

SiteSpec::SiteSpec(std::vector<int> registers) : registers_(std::move(registers)) {
  if (registers_.empty()) fail(Errc::InvalidArgument, "site spec needs at least one register");
  dim_ = 1;
  for (int r : registers_) {
    if (r < 2) fail(Errc::InvalidArgument, "register dimension must be >= 2, got " + std::to_string(r));
    dim_ *= r;
  }
}

SiteSpec SiteSpec::stacked(const SiteSpec& other) const {
  std::vector<int> regs = registers_;
  regs.insert(regs.end(), other.registers_.begin(), other.registers_.end());
  return SiteSpec(std::move(regs));
}

Window Window::of(long lo, long hi) {
  if (hi < lo) fail(Errc::InvalidArgument, "window with hi < lo; use Window::empty()");
  return {lo, hi};
}

bool Window::contains(const Window& other) const {
  if (other.is_empty()) return true;
  if (is_empty()) return false;
  return lo <= other.lo && other.hi <= hi;
}

Window Window::hull(const Window& other) const {
  if (is_empty()) return other;
  if (other.is_empty()) return *this;
  return {std::min(lo, other.lo), std::max(hi, other.hi)};
}

Window Window::intersect(const Window& other) const {
  if (is_empty() || other.is_empty()) return empty();
  long l = std::max(lo, other.lo);
  long h = std::min(hi, other.hi);
  return h < l ? empty() : Window{l, h};
}

bool Window::operator==(const Window& other) const {
  if (is_empty() || other.is_empty()) return is_empty() == other.is_empty();
  return lo == other.lo && hi == other.hi;
}

std::string Window::str() const {
  if (is_empty()) return "[]";
  std::ostringstream os;
  os << "[" << lo << "," << hi << "]";
  return os.str();
}

std::ostream& operator<<(std::ostream& os, const Window& w) { return os << w.str(); }

std::size_t operator_dim_cap() { return g_dim_cap.load(); }
void set_operator_dim_cap(std::size_t cap) { g_dim_cap.store(std::max<std::size_t>(cap, 2)); }
void set_window_cap_sites(int sites) {
  if (sites < 1 || sites > 30) fail(Errc::InvalidArgument, "window cap must be in [1, 30] sites");
  set_operator_dim_cap(std::size_t{1} << sites);
}

Index checked_dim(int site_dim, long length) {
  const auto cap = static_cast<double>(operator_dim_cap());
  double est = 1.0;
  for (long i = 0; i < length; ++i) {
    est *= site_dim;
    if (est > cap)
      fail(Errc::WindowCapExceeded, "operator on " + std::to_string(length) + " sites of dimension " +
                                        std::to_string(site_dim) + " exceeds the dimension cap " +
                                        std::to_string(operator_dim_cap()));
  }
  return ipow(site_dim, length);
}

LocalOperator::LocalOperator(int site_dim, Window window, Matrix matrix)
    : site_dim_(site_dim), window_(window.is_empty() ? Window::empty() : window), matrix_(std::move(matrix)) {
  if (site_dim_ < 2) fail(Errc::InvalidArgument, "site dimension must be >= 2");
  const Index expect = checked_dim(site_dim_, window_.length());
  if (matrix_.rows() != expect || matrix_.cols() != expect)
    fail(Errc::InvalidArgument, "matrix is " + std::to_string(matrix_.rows()) + "x" +
                                    std::to_string(matrix_.cols()) + ", expected dimension " +
                                    std::to_string(expect) + " for window " + window_.str());
}

LocalOperator LocalOperator::identity(int site_dim, Window window) {
  const Index n = checked_dim(site_dim, window.length());
  return {site_dim, window, Matrix::Identity(n, n)};
}

LocalOperator LocalOperator::scalar(int site_dim, cplx value) {
  Matrix m(1, 1);
  m(0, 0) = value;
  return {site_dim, Window::empty(), std::move(m)};
}

LocalOperator LocalOperator::on_site(int site_dim, long site, const Matrix& m) {
  return {site_dim, Window::site(site), m};
}

LocalOperator LocalOperator::matrix_unit(int site_dim, Window window, Index a, Index b) {
  const Index n = checked_dim(site_dim, window.length());
  Matrix m = Matrix::Zero(n, n);
  m(a, b) = 1.0;
  return {site_dim, window, std::move(m)};
}

LocalOperator embed(const LocalOperator& op, Window target) {
  if (!target.contains(op.window()))
    fail(Errc::WindowMismatch, "cannot embed " + op.window().str() + " into " + target.str());
  if (op.window() == target) return op;
  const int d = op.site_dim();
  const Index n = checked_dim(d, target.length());
  const Matrix& m = op.matrix();
  if (op.window().is_empty()) return {d, target, m(0, 0) * Matrix::Identity(n, n)};
  const Index left = ipow(d, op.window().lo - target.lo);
  const Index right = ipow(d, target.hi - op.window().hi);
  const Index mid = m.rows();
  Matrix out = Matrix::Zero(n, n);
  for (Index l = 0; l < left; ++l)
    for (Index j = 0; j < mid; ++j)
      for (Index i = 0; i < mid; ++i) {
        const cplx v = m(i, j);
        if (v == cplx(0.0)) continue;
        const Index row0 = (l * mid + i) * right;
        const Index col0 = (l * mid + j) * right;
        for (Index r = 0; r < right; ++r) out(row0 + r, col0 + r) = v;
      }
  return {d, target, std::move(out)};
}

namespace {

void require_same_site(const LocalOperator& a, const LocalOperator& b) {
  if (a.site_dim() != b.site_dim())
    fail(Errc::InvalidArgument, "operators live on chains with different site dimensions");
}

}  // namespace

LocalOperator product(const LocalOperator& a, const LocalOperator& b) {
  require_same_site(a, b);
  const Window w = a.window().hull(b.window());
  return {a.site_dim(), w, embed(a, w).matrix() * embed(b, w).matrix()};
}

LocalOperator adjoint(const LocalOperator& a) { return {a.site_dim(), a.window(), a.matrix().adjoint()}; }

LocalOperator scaled(const LocalOperator& a, cplx c) { return {a.site_dim(), a.window(), c * a.matrix()}; }

LocalOperator sum(const LocalOperator& a, const LocalOperator& b) {
  require_same_site(a, b);
  const Window w = a.window().hull(b.window());
  return {a.site_dim(), w, embed(a, w).matrix() + embed(b, w).matrix()};
}

LocalOperator difference(const LocalOperator& a, const LocalOperator& b) {
  require_same_site(a, b);
  const Window w = a.window().hull(b.window());
  return {a.site_dim(), w, embed(a, w).matrix() - embed(b, w).matrix()};
}

LocalOperator conditional_expectation(const LocalOperator& op, Window keep) {
  if (!op.window().contains(keep))
    fail(Errc::WindowMismatch, "conditional expectation onto " + keep.str() + " of an operator on " +
                                   op.window().str());
  if (keep == op.window()) return op;
  const int d = op.site_dim();
  const Matrix& m = op.matrix();
  Index left = 0, right = 0;
  if (keep.is_empty()) {
    left = m.rows();
    right = 1;
  } else {
    left = ipow(d, keep.lo - op.window().lo);
    right = ipow(d, op.window().hi - keep.hi);
  }
  const Index mid = m.rows() / (left * right);
  Matrix out = Matrix::Zero(mid, mid);
  for (Index j = 0; j < mid; ++j)
    for (Index i = 0; i < mid; ++i) {
      cplx acc = 0.0;
      for (Index l = 0; l < left; ++l) {
        const Index row0 = (l * mid + i) * right;
        const Index col0 = (l * mid + j) * right;
        for (Index r = 0; r < right; ++r) acc += m(row0 + r, col0 + r);
      }
      out(i, j) = acc / static_cast<double>(left * right);
    }
  return {d, keep, std::move(out)};
}

double op_norm(const LocalOperator& a) {
  const Matrix& m = a.matrix();
  if (m.rows() == 1) return std::abs(m(0, 0));
  Eigen::BDCSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

double op_distance(const LocalOperator& a, const LocalOperator& b) { return op_norm(difference(a, b)); }

double max_entry_distance(const LocalOperator& a, const LocalOperator& b) {
  return max_abs(difference(a, b).matrix());
}

namespace {

/// If m = I_mid (x) rest on the middle factor, writes rest (ordered left, right) to out.
bool peel_factor(const Matrix& m, Index left, Index mid, Index right, double thr, Matrix& out) {
  const Index n = left * right;
  out.resize(n, n);
  for (Index l2 = 0; l2 < left; ++l2)
    for (Index r2 = 0; r2 < right; ++r2)
      for (Index l = 0; l < left; ++l)
        for (Index r = 0; r < right; ++r) {
          cplx avg = 0.0;
          for (Index a = 0; a < mid; ++a) avg += m((l * mid + a) * right + r, (l2 * mid + a) * right + r2);
          avg /= static_cast<double>(mid);
          for (Index a2 = 0; a2 < mid; ++a2)
            for (Index a = 0; a < mid; ++a) {
              const cplx expect = a == a2 ? avg : cplx(0.0);
              if (std::abs(m((l * mid + a) * right + r, (l2 * mid + a2) * right + r2) - expect) > thr) return false;
            }
          out(l * right + r, l2 * right + r2) = avg;
        }
  return true;
}

}  // namespace

LocalOperator trim(const LocalOperator& op, double tolerance) {
  const int d = op.site_dim();
  const double thr = tolerance * std::max(1.0, max_abs(op.matrix()));
  Window w = op.window();
  Matrix cur = op.matrix();
  Matrix reduced;
  while (!w.is_empty() && peel_factor(cur, 1, d, cur.rows() / d, thr, reduced)) {
    cur.swap(reduced);
    w = w.length() == 1 ? Window::empty() : Window{w.lo + 1, w.hi};
  }
  while (!w.is_empty() && peel_factor(cur, cur.rows() / d, d, 1, thr, reduced)) {
    cur.swap(reduced);
    w = w.length() == 1 ? Window::empty() : Window{w.lo, w.hi - 1};
  }
  if (w == op.window()) return op;
  return {d, w, std::move(cur)};
}

void left_multiply_block(Matrix& m, const Matrix& u, Index left, Index right) {
  const Index b = u.rows();
  const Index n = m.rows();
  const Index cols = m.cols();
  if (left * b * right != n) fail(Errc::InvalidArgument, "block layout does not match matrix size");
  // Rows (l, s, r) of each column, for fixed l, form a contiguous right x b block indexed by (r, s).
  const Matrix ut = u.transpose();
  Matrix tmp(right, b);
  for (Index c = 0; c < cols; ++c)
    for (Index l = 0; l < left; ++l) {
      Eigen::Map<Matrix> view(m.data() + c * n + l * b * right, right, b);
      tmp.noalias() = view * ut;
      view = tmp;
    }
}

void right_multiply_block(Matrix& m, const Matrix& u, Index left, Index right) {
  const Index b = u.rows();
  const Index rows = m.rows();
  if (left * b * right != m.cols()) fail(Errc::InvalidArgument, "block layout does not match matrix size");
  // Columns (l, s, r) for fixed l form a contiguous (rows*right) x b matrix indexed by ((r, row), s).
  Matrix tmp(rows * right, b);
  for (Index l = 0; l < left; ++l) {
    Eigen::Map<Matrix> view(m.data() + l * b * right * rows, rows * right, b);
    tmp.noalias() = view * u;
    view = tmp;
  }
}

void conjugate_in_place(Matrix& m, int site_dim, Window window, const Matrix& gate, Window gate_window) {
  if (!window.contains(gate_window))
    fail(Errc::WindowMismatch, "gate window " + gate_window.str() + " outside " + window.str());
  Index left = 1, right = 1;
  for (long i = window.lo; i < gate_window.lo; ++i) left *= site_dim;
  for (long i = gate_window.hi; i < window.hi; ++i) right *= site_dim;
  left_multiply_block(m, gate, left, right);
  right_multiply_block(m, gate.adjoint(), left, right);
}

LocalOperator conjugate(const LocalOperator& op, const Matrix& gate, Window gate_window) {
  const int d = op.site_dim();
  if (gate.rows() != checked_dim(d, gate_window.length()))
    fail(Errc::InvalidArgument, "gate dimension does not match its window " + gate_window.str());
  const Window target = op.window().hull(gate_window);
  Matrix m = embed(op, target).matrix();
  conjugate_in_place(m, d, target, gate, gate_window);
  return {d, target, std::move(m)};
}

cplx normalized_trace(const LocalOperator& op) {
  return op.matrix().trace() / static_cast<double>(op.matrix().rows());
}

bool is_unitary(const Matrix& m, double tolerance) {
  if (m.rows() != m.cols() || m.rows() == 0) return false;
  const Matrix err = m.adjoint() * m - Matrix::Identity(m.rows(), m.cols());
  return max_abs(err) <= tolerance;
}

Matrix polar_unitary(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Matrix permute_factors(const Matrix& m, std::span<const int> dims, std::span<const int> perm) {
  const std::size_t f = dims.size();
  if (perm.size() != f) fail(Errc::InvalidArgument, "permutation length mismatch");
  Index n = 1;
  for (int d : dims) n *= d;
  if (m.rows() != n || m.cols() != n) fail(Errc::InvalidArgument, "factor dimensions do not match matrix");

  // Output strides in output factor order; input factor k sits at output position pos[k].
  std::vector<int> pos(f, -1);
  for (std::size_t i = 0; i < f; ++i) {
    const int k = perm[i];
    if (k < 0 || static_cast<std::size_t>(k) >= f || pos[static_cast<std::size_t>(k)] != -1)
      fail(Errc::InvalidArgument, "not a permutation");
    pos[static_cast<std::size_t>(k)] = static_cast<int>(i);
  }
  std::vector<Index> out_stride(f, 1);
  for (std::size_t i = f; i-- > 1;) out_stride[i - 1] = out_stride[i] * dims[static_cast<std::size_t>(perm[i])];

  std::vector<Index> map(static_cast<std::size_t>(n));
  std::vector<int> digit(f, 0);
  for (Index x = 0; x < n; ++x) {
    Index y = 0;
    for (std::size_t k = 0; k < f; ++k) y += digit[k] * out_stride[static_cast<std::size_t>(pos[k])];
    map[static_cast<std::size_t>(x)] = y;
    for (std::size_t k = f; k-- > 0;) {
      if (++digit[k] < dims[k]) break;
      digit[k] = 0;
    }
  }
  Matrix out(n, n);
  for (Index c = 0; c < n; ++c)
    for (Index r = 0; r < n; ++r)
      out(map[static_cast<std::size_t>(r)], map[static_cast<std::size_t>(c)]) = m(r, c);
  return out;
}

namespace pauli {
Matrix I() { return Matrix::Identity(2, 2); }
Matrix X() {
  Matrix m(2, 2);
  m << 0.0, 1.0, 1.0, 0.0;
  return m;
}
Matrix Y() {
  Matrix m(2, 2);
  m << 0.0, cplx(0.0, -1.0), cplx(0.0, 1.0), 0.0;
  return m;
}
Matrix Z() {
  Matrix m(2, 2);
  m << 1.0, 0.0, 0.0, -1.0;
  return m;
}
}  // namespace pauli

}  // namespace lsmidx

#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <ostream>
#include <string>
#include <type_traits>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "gclosure/errors.hpp"
#include "gclosure/grid.hpp"
#include "gclosure/matrix.hpp"

namespace gclosure {

using Rational = boost::multiprecision::cpp_rational;
using RationalMatrix = BasicMatrix<Rational>;

namespace detail {

template <typename T>
double to_double(const T& x) {
  if constexpr (std::is_same_v<T, Rational>)
    return x.template convert_to<double>();
  else
    return static_cast<double>(x);
}

template <typename T>
bool is_zero(const T& x, double tol) {
  if constexpr (std::is_same_v<T, Rational>)
    return x == 0;
  else
    return std::fabs(x) <= tol;
}

template <typename T>
bool near(const BasicMatrix<T>& a, const BasicMatrix<T>& b, double tol) {
  for (int k = 0; k < 4; ++k)
    if (!is_zero(T(a[k] - b[k]), tol)) return false;
  return true;
}

}  // namespace detail

inline Matrix to_double(const RationalMatrix& a) {
  Matrix out(a.rows, a.cols);
  for (int k = 0; k < a.size(); ++k) out[k] = detail::to_double(a[k]);
  return out;
}

/// Finitely many atoms with nonnegative weights summing to one.
template <typename T>
struct DiscreteMeasure {
  struct Atom {
    BasicMatrix<T> matrix;
    T weight;
  };
  std::vector<Atom> atoms;

  /// Weights sum to one (exactly for rationals, within 1e-12 otherwise) and
  /// atoms are pairwise distinct.
  void validate() const {
    T total(0);
    for (const auto& a : atoms) {
      if (a.weight < T(0)) throw Error("negative atom weight");
      total += a.weight;
    }
    if (!detail::is_zero(T(total - T(1)), 1e-12)) throw Error("atom weights do not sum to one");
    for (std::size_t i = 0; i < atoms.size(); ++i)
      for (std::size_t k = i + 1; k < atoms.size(); ++k)
        if (atoms[i].matrix == atoms[k].matrix) throw Error("atoms are not distinct");
  }

  /// Adds weight to an existing atom or appends a new one.
  void accumulate(const BasicMatrix<T>& m, const T& w) {
    for (auto& a : atoms)
      if (a.matrix == m) {
        a.weight += w;
        return;
      }
    atoms.push_back({m, w});
  }

  T mass(const BasicMatrix<T>& m) const {
    for (const auto& a : atoms)
      if (a.matrix == m) return a.weight;
    return T(0);
  }
};

template <typename T>
BasicMatrix<T> barycenter(const DiscreteMeasure<T>& mu) {
  BasicMatrix<T> out = BasicMatrix<T>::zero();
  for (const auto& a : mu.atoms) out += a.matrix * a.weight;
  return out;
}

/// det(X - Y) = 0 (exactly for rationals, within 1e-12 otherwise) and X != Y.
template <typename T>
bool rank_one_connected(const BasicMatrix<T>& x, const BasicMatrix<T>& y) {
  if (x == y) return false;
  return detail::is_zero(det(BasicMatrix<T>(x - y)), 1e-12);
}

/// Binary tree of rank-one splits; node 0 is the root.
template <typename T>
class Laminate {
 public:
  struct Node {
    BasicMatrix<T> matrix;
    T weight;
    T lambda{0};
    int left = -1;
    int right = -1;
    std::string label;
    bool is_leaf() const { return left < 0; }
  };

  explicit Laminate(const BasicMatrix<T>& root, std::string label = {}) {
    nodes_.push_back({root, T(1), T(0), -1, -1, std::move(label)});
  }

  /// Splits leaf `node` into lambda * left + (1 - lambda) * right and returns
  /// the child indices.
  std::pair<int, int> split(int node, const T& lambda, const BasicMatrix<T>& left,
                            const BasicMatrix<T>& right, std::string left_label = {},
                            std::string right_label = {}) {
    if (node < 0 || node >= static_cast<int>(nodes_.size()) || !nodes_[node].is_leaf())
      throw Error("only existing leaves can be split");
    const T w = nodes_[node].weight;
    nodes_.push_back({left, w * lambda, T(0), -1, -1, std::move(left_label)});
    nodes_.push_back({right, w * (T(1) - lambda), T(0), -1, -1, std::move(right_label)});
    const int l = static_cast<int>(nodes_.size()) - 2;
    nodes_[node].lambda = lambda;
    nodes_[node].left = l;
    nodes_[node].right = l + 1;
    check_split(node);
    return {l, l + 1};
  }

  const std::vector<Node>& nodes() const { return nodes_; }
  const Node& root() const { return nodes_.front(); }

  /// Re-checks every split: barycentric, rank-one, lambda in (0, 1).
  void validate() const {
    if (!(nodes_.front().weight == T(1))) throw Error("root weight must be one");
    for (std::size_t k = 0; k < nodes_.size(); ++k)
      if (!nodes_[k].is_leaf()) check_split(static_cast<int>(k));
  }

  DiscreteMeasure<T> leaf_measure() const {
    DiscreteMeasure<T> mu;
    for (const auto& n : nodes_)
      if (n.is_leaf()) mu.accumulate(n.matrix, n.weight);
    return mu;
  }

  std::size_t depth() const { return depth_of(0); }

  void write(std::ostream& os) const { write_node(os, 0, 0); }

 private:
  void check_split(int k) const {
    const Node& n = nodes_[k];
    const Node& l = nodes_[n.left];
    const Node& r = nodes_[n.right];
    if (!(n.lambda > T(0) && n.lambda < T(1))) throw Error("split weight must lie in (0, 1)");
    const BasicMatrix<T> mix = l.matrix * n.lambda + r.matrix * (T(1) - n.lambda);
    if (!detail::near(mix, n.matrix, 1e-12)) throw Error("split does not preserve the barycenter");
    if (!rank_one_connected(l.matrix, r.matrix)) throw Error("split is not rank-one");
  }

  std::size_t depth_of(int k) const {
    const Node& n = nodes_[k];
    if (n.is_leaf()) return 0;
    return 1 + std::max(depth_of(n.left), depth_of(n.right));
  }

  void write_node(std::ostream& os, int k, int indent) const {
    const Node& n = nodes_[k];
    os << std::string(2 * indent, ' ') << (n.label.empty() ? "node" : n.label) << ' ' << n.matrix
       << " weight=" << n.weight;
    if (!n.is_leaf()) os << " lambda=" << n.lambda;
    os << '\n';
    if (!n.is_leaf()) {
      write_node(os, n.left, indent + 1);
      write_node(os, n.right, indent + 1);
    }
  }

  std::vector<Node> nodes_;
};

namespace tartar {

inline RationalMatrix A(int i) {
  switch (i) {
    case 1: return RationalMatrix::diag(-1, -3);
    case 2: return RationalMatrix::diag(-3, 1);
    case 3: return RationalMatrix::diag(1, 3);
    case 4: return RationalMatrix::diag(3, -1);
    default: throw Error("Tartar atoms are numbered 1..4");
  }
}

}  // namespace tartar

/// Atoms A1..A4 with weights (8, 4, 2, 1) / 15.
inline DiscreteMeasure<Rational> tartar_square() {
  DiscreteMeasure<Rational> mu;
  for (int i = 1; i <= 4; ++i) mu.atoms.push_back({tartar::A(i), Rational(1 << (4 - i), 15)});
  mu.validate();
  return mu;
}

/// d cycles of the staircase: the remainder point R is split in half into
/// the next atom A_i and the point 2R - A_i, starting and ending at -I.
inline Laminate<Rational> tartar_staircase(int depth) {
  if (depth < 1) throw Error("staircase depth must be at least 1");
  const Rational half(1, 2);
  Laminate<Rational> lam(RationalMatrix::diag(-1, -1), "R1");
  int leaf = 0;
  RationalMatrix rest = lam.root().matrix;
  for (int cycle = 0; cycle < depth; ++cycle)
    for (int i = 1; i <= 4; ++i) {
      const RationalMatrix next = rest * Rational(2) - tartar::A(i);
      const std::string label = "R" + std::to_string(i % 4 + 1);
      leaf = lam.split(leaf, half, tartar::A(i), next, "A" + std::to_string(i), label).second;
      rest = next;
    }
  return lam;
}

struct YoungEstimate {
  DiscreteMeasure<double> measure;
  /// Share of pixels within tol of each atom, before renormalization.
  std::vector<double> fractions;
  double off_support_fraction = 0.0;
  /// Plain average of the pixel matrices.
  Matrix barycenter;
};

/// Nearest-atom classification of the pixel matrices of g.
inline YoungEstimate estimate_young(const GradientField& g, const std::vector<Matrix>& atoms,
                                    double tol) {
  for (std::size_t i = 0; i < atoms.size(); ++i)
    for (std::size_t k = i + 1; k < atoms.size(); ++k)
      if (atoms[i] == atoms[k]) throw Error("atoms are not distinct");
  std::vector<std::size_t> counts(atoms.size(), 0);
  std::size_t off = 0;
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    const Matrix m = g.matrix(idx);
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t a = 0; a < atoms.size(); ++a) {
      const double d = norm(m - atoms[a]);
      if (d < best) {
        best = d;
        arg = a;
      }
    }
    if (best <= tol)
      ++counts[arg];
    else
      ++off;
  }
  YoungEstimate out;
  const double P = static_cast<double>(g.size());
  const std::size_t classified = g.size() - off;
  for (std::size_t a = 0; a < atoms.size(); ++a) {
    out.fractions.push_back(counts[a] / P);
    if (classified > 0)
      out.measure.atoms.push_back({atoms[a], static_cast<double>(counts[a]) / classified});
  }
  out.off_support_fraction = off / P;
  out.barycenter = cell_average(g);
  return out;
}

template <typename T>
void write_measure_csv(std::ostream& os, const DiscreteMeasure<T>& mu) {
  os << "a11,a12,a21,a22,weight\n";
  const auto old = os.precision(17);
  for (const auto& a : mu.atoms)
    os << detail::to_double(a.matrix[0]) << ',' << detail::to_double(a.matrix[1]) << ','
       << detail::to_double(a.matrix[2]) << ',' << detail::to_double(a.matrix[3]) << ','
       << detail::to_double(a.weight) << '\n';
  os.precision(old);
}

}  // namespace gclosure

#pragma once

#include <Eigen/Dense>

#include <limits>
#include <string>
#include <variant>
#include <vector>

namespace maqp {

using Index = Eigen::Index;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Partition of the primal vector into contiguous blocks.
class BlockStructure {
 public:
  BlockStructure() = default;
  /// Throws DimensionError when sizes is empty or contains a non-positive entry.
  explicit BlockStructure(std::vector<Index> sizes);

  Index count() const { return static_cast<Index>(sizes_.size()); }
  Index total() const { return total_; }
  Index size(Index j) const { return sizes_[static_cast<size_t>(j)]; }
  Index offset(Index j) const { return offsets_[static_cast<size_t>(j)]; }
  const std::vector<Index>& sizes() const { return sizes_; }
  const std::vector<Index>& offsets() const { return offsets_; }
  /// Block containing coordinate `coord`.
  Index block_of(Index coord) const;

  bool operator==(const BlockStructure& o) const { return sizes_ == o.sizes_; }

 private:
  std::vector<Index> sizes_;
  std::vector<Index> offsets_;
  Index total_ = 0;
};

struct SparseEntry {
  Index row;
  Index col;
  double value;
  bool operator==(const SparseEntry&) const = default;
};

/// Symmetric sparse matrix kept as its upper triangle.
///
/// Input triplets are read as upper-triangle storage: an entry (i, j) with
/// i > j is moved to (j, i) and entries landing on the same position are
/// summed. So (0,1,v) alone means C(0,1) = C(1,0) = v.
class SymmetricSparse {
 public:
  SymmetricSparse() = default;
  SymmetricSparse(Index dim, const std::vector<SparseEntry>& triplets);

  Index dim() const { return dim_; }
  /// Canonical entries: row <= col, sorted by (row, col), no duplicates, no zeros.
  const std::vector<SparseEntry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

  /// x^T C x for the full symmetric matrix.
  double quad(const Vec& x) const;
  /// y += alpha * C x.
  void mul_add(const Vec& x, double alpha, Vec& y) const;
  Mat to_dense() const;
  /// Spectral norm of the full symmetric matrix.
  double spectral_norm() const;

  bool operator==(const SymmetricSparse& o) const {
    return dim_ == o.dim_ && entries_ == o.entries_;
  }

 private:
  Index dim_ = 0;
  std::vector<SparseEntry> entries_;
};

/// One row of A: x^T C x / 2 + d^T x + e.
struct ConstraintRow {
  SymmetricSparse C;
  Vec d;
  double e = 0.0;
};

/// Multi-affine quadratic operator A(x) with per-block lookup tables.
class MultiAffineOperator {
 public:
  /// Coupling between coordinate `local` of a block and a coordinate outside it.
  struct Coupling {
    Index row;
    Index local;
    Index other;
    double value;
  };
  struct Linear {
    Index row;
    Index local;
    double value;
  };
  struct BlockIndex {
    std::vector<Coupling> couplings;
    std::vector<Linear> linear;
    std::vector<Index> active_rows;
    /// Rows whose C has a nonzero inside this block's diagonal block.
    std::vector<Index> diagonal_violations;
  };

  MultiAffineOperator() = default;
  /// Throws DimensionError if a row's C or d does not match blocks.total().
  MultiAffineOperator(BlockStructure blocks, std::vector<ConstraintRow> rows);

  Index rows_count() const { return static_cast<Index>(rows_.size()); }
  Index n_c() const { return rows_count(); }
  Index n_x() const { return blocks_.total(); }
  const BlockStructure& blocks() const { return blocks_; }
  const std::vector<ConstraintRow>& rows() const { return rows_; }
  const ConstraintRow& row(Index i) const { return rows_[static_cast<size_t>(i)]; }
  const BlockIndex& block_index(Index j) const { return index_[static_cast<size_t>(j)]; }
  /// Nonzeros of d_i as (coordinate, value).
  const std::vector<std::pair<Index, double>>& d_nonzeros(Index i) const {
    return d_sparse_[static_cast<size_t>(i)];
  }
  bool is_linear() const;

  bool operator==(const MultiAffineOperator& o) const;

 private:
  BlockStructure blocks_;
  std::vector<ConstraintRow> rows_;
  std::vector<std::vector<std::pair<Index, double>>> d_sparse_;
  std::vector<BlockIndex> index_;
};

/// 1/2 v^T P v + q^T v + r.
struct QuadraticObjective {
  Mat P;
  Vec q;
  double r = 0.0;

  double value(const Vec& v) const { return 0.5 * v.dot(P * v) + q.dot(v) + r; }
  Vec gradient(const Vec& v) const { return P * v + q; }
  Index dim() const { return q.size(); }
  /// Smallest eigenvalue of P.
  double mu() const;
  /// Largest eigenvalue of P.
  double lip() const;
  /// Unconstrained minimizer -P^{-1} q.
  Vec minimizer() const;

  bool operator==(const QuadraticObjective& o) const;
};

struct FreeSet {
  bool operator==(const FreeSet&) const = default;
};
/// Coordinatewise bounds; infinite entries mean unbounded.
struct BoxSet {
  Vec lower;
  Vec upper;
  bool operator==(const BoxSet& o) const;
};
/// {v : G v <= h}.
struct PolyhedronSet {
  Mat G;
  Vec h;
  bool operator==(const PolyhedronSet& o) const;
};
using IndicatorSet = std::variant<FreeSet, BoxSet, PolyhedronSet>;

/// Whether v lies in the set up to `tol`.
bool contains(const IndicatorSet& set, const Vec& v, double tol = 1e-9);
/// Set dimension, or -1 for Free.
Index set_dim(const IndicatorSet& set);

/// weight * sin^2(x_index). Present only on instances outside the quadratic theory.
struct SineSquaredTerm {
  Index index;
  double weight;
  bool operator==(const SineSquaredTerm&) const = default;
};

struct ProblemSpec {
  BlockStructure blocks;
  QuadraticObjective f;
  std::vector<IndicatorSet> indicators;
  MultiAffineOperator A;
  Mat Q;
  QuadraticObjective phi;
  /// Skip the full-row-rank requirement on Q.
  bool allow_rank_deficient = false;
  /// Instance knowingly violates the convergence assumptions.
  bool outside_theory = false;
  std::vector<SineSquaredTerm> nonconvex_terms;

  Index n_x() const { return blocks.total(); }
  Index n_c() const { return A.n_c(); }
  Index n_z() const { return Q.cols(); }

  /// f(x) including nonconvex terms.
  double f_value(const Vec& x) const;
  Vec f_gradient(const Vec& x) const;
  Mat f_hessian(const Vec& x) const;
  bool x_feasible(const Vec& x, double tol = 1e-9) const;

  bool operator==(const ProblemSpec& o) const;
};

struct ConstantSet {
  double mu_f = 0, lip_f = 0, mu_phi = 0, lip_phi = 0;
  double norm_C = 0, norm_d = 0, norm_e = 0;
  double lambda_min_plus_QtQ = 0;
  double lambda_min_QQt = 0;
  double lambda_min_plus_QQt = 0;
  /// ||(QQ^T)^{-1} Q||; infinite when QQ^T is singular.
  double norm_QQt_inv_Q = 0;
  Vec singular_values_Q;
  Index rank_Q = 0;
};

struct ValidationIssue {
  enum class Kind {
    Dimension,
    DiagonalBlock,
    RankDeficientQ,
    NotPositiveDefinite,
    EmptySet,
    OutsideTheory,
  };
  Kind kind;
  std::string message;
  Index row = -1;
  Index block = -1;
};

struct ValidationReport {
  std::vector<ValidationIssue> violations;
  /// Conditions that are tolerated because the spec opts in to them.
  std::vector<ValidationIssue> warnings;
  ConstantSet constants;
  bool constants_available = false;

  bool valid() const { return violations.empty(); }
  bool has(ValidationIssue::Kind k) const;
  std::string summary() const;
};

/// Never throws; every problem found goes into the report.
ValidationReport validate(const ProblemSpec& spec);

/// Throws DimensionError if the spec dimensions are inconsistent.
ConstantSet spectral_constants(const ProblemSpec& spec);

/// Throws DimensionError describing the first inconsistency, if any.
void check_dimensions(const ProblemSpec& spec);

inline constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace maqp

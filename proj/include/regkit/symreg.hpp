#pragma once

#include "regkit/dataset.hpp"
#include "regkit/random.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace regkit {

enum class Op { Add, Sub, Mul, Div, Sin, Cos, Exp, Var, Const };

int arity(Op op);
std::string op_symbol(Op op);

struct Node {
  Op op = Op::Const;
  double value = 0.0; // Const
  int var = 0;        // Var: input column
};

/// Expression tree stored in prefix order. Every subtree is a contiguous
/// range starting at its root. Division is protected: it yields 1 when
/// |denominator| < 1e-12.
class ExprTree {
public:
  ExprTree() = default;
  explicit ExprTree(std::vector<Node> nodes);

  static ExprTree constant(double v) { return ExprTree({{Op::Const, v, 0}}); }
  static ExprTree variable(int index = 0) { return ExprTree({{Op::Var, 0.0, index}}); }
  static ExprTree unary(Op op, const ExprTree& child);
  static ExprTree binary(Op op, const ExprTree& lhs, const ExprTree& rhs);

  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }

  /// One past the last node of the subtree rooted at `root`.
  std::size_t subtree_end(std::size_t root) const;
  ExprTree subtree(std::size_t root) const;
  /// Copy with the subtree at `root` replaced by `replacement`.
  ExprTree replace_subtree(std::size_t root, const ExprTree& replacement) const;
  /// Depth of each node (root = 0), in prefix order.
  std::vector<int> node_depths() const;

  bool operator==(const ExprTree& other) const;

private:
  std::vector<Node> nodes_;
};

inline constexpr double kProtectedDivThreshold = 1e-12;

Eigen::VectorXd eval_tree(const ExprTree& t, const Eigen::MatrixXd& x);
/// Root at depth 0; a lone terminal has depth 0.
int tree_depth(const ExprTree& t);
bool is_valid(const ExprTree& t, int max_depth, int input_dim);

/// Parenthesized prefix form, e.g. "(+ (* x0 x0) x0)".
std::string to_prefix(const ExprTree& t);
/// Fully parenthesized infix form, e.g. "((x0 * x0) + x0)".
std::string to_infix(const ExprTree& t);
ExprTree parse_prefix(const std::string& text);

struct PrimitiveSet {
  std::vector<Op> functions{Op::Add, Op::Mul};
  bool variables = true;
  bool constants = true;
  int input_dim = 1;
  double const_lo = -5.0;
  double const_hi = 5.0;
};

/// Parses a comma list such as "+,*,x,const" (also -, /, sin, cos, exp).
PrimitiveSet parse_primitives(const std::string& text, int input_dim);

/// Random tree of depth <= max_depth; `full` forces every branch to max_depth.
ExprTree grow_tree(const PrimitiveSet& prims, int max_depth, bool full, Engine& rng);

struct GpConfig {
  PrimitiveSet primitives;
  int population_size = 200;
  int generations = 50;
  double elitism_rate = 0.02;
  double replication_rate = 0.08;
  double crossover_rate = 0.7;
  double mutation_rate = 0.2;
  int max_depth = 6;
  int tournament_size = 5;
  int max_crossover_retries = 10;
  std::uint64_t seed = 42;

  void validate() const;
};

/// Swaps the subtrees rooted at i1 in t1 and i2 in t2.
std::pair<ExprTree, ExprTree> crossover_at(const ExprTree& t1, std::size_t i1, const ExprTree& t2,
                                           std::size_t i2);
/// Uniform subtree exchange; offspring deeper than max_depth are retried up to
/// max_retries times, after which the parents come back unchanged.
std::pair<ExprTree, ExprTree> crossover(const ExprTree& t1, const ExprTree& t2, int max_depth,
                                        Engine& rng, int max_retries = 10);
/// Uniform node replaced by a grown subtree that fits the depth budget.
ExprTree mutate(const ExprTree& t, const PrimitiveSet& prims, int max_depth, Engine& rng);

/// MSE against the first target column; +inf for non-finite predictions.
double fitness(const ExprTree& t, const Dataset& d);

struct GenerationStats {
  int generation = 0;
  double best_fitness = 0.0;      // best so far
  double mean_fitness = 0.0;      // over finite members of this generation
  std::size_t best_size = 0;
};

struct EvolveResult {
  ExprTree best;
  double best_fitness = 0.0;
  std::vector<GenerationStats> history; // generation 0 is the initial population
  std::vector<ExprTree> final_population;
};

EvolveResult evolve(const Dataset& d, const GpConfig& cfg);

} // namespace regkit

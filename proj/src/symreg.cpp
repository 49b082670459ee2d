#include "regkit/symreg.hpp"

#include "regkit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace regkit {

int arity(Op op) {
  switch (op) {
  case Op::Add: case Op::Sub: case Op::Mul: case Op::Div: return 2;
  case Op::Sin: case Op::Cos: case Op::Exp: return 1;
  case Op::Var: case Op::Const: return 0;
  }
  return 0;
}

std::string op_symbol(Op op) {
  switch (op) {
  case Op::Add: return "+";
  case Op::Sub: return "-";
  case Op::Mul: return "*";
  case Op::Div: return "/";
  case Op::Sin: return "sin";
  case Op::Cos: return "cos";
  case Op::Exp: return "exp";
  case Op::Var: return "x";
  case Op::Const: return "const";
  }
  return "?";
}

ExprTree::ExprTree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {
  require(!nodes_.empty(), "expression: empty tree");
  require(subtree_end(0) == nodes_.size(), "expression: node arities do not form a single tree");
  for (const auto& n : nodes_) {
    if (n.op == Op::Const) require(std::isfinite(n.value), "expression: non-finite constant");
    if (n.op == Op::Var) require(n.var >= 0, "expression: negative variable index");
  }
}

ExprTree ExprTree::unary(Op op, const ExprTree& child) {
  require(arity(op) == 1, "expression: " + op_symbol(op) + " is not unary");
  std::vector<Node> nodes{{op, 0.0, 0}};
  nodes.insert(nodes.end(), child.nodes_.begin(), child.nodes_.end());
  return ExprTree(std::move(nodes));
}

ExprTree ExprTree::binary(Op op, const ExprTree& lhs, const ExprTree& rhs) {
  require(arity(op) == 2, "expression: " + op_symbol(op) + " is not binary");
  std::vector<Node> nodes{{op, 0.0, 0}};
  nodes.insert(nodes.end(), lhs.nodes_.begin(), lhs.nodes_.end());
  nodes.insert(nodes.end(), rhs.nodes_.begin(), rhs.nodes_.end());
  return ExprTree(std::move(nodes));
}

std::size_t ExprTree::subtree_end(std::size_t root) const {
  require(root < nodes_.size(), "expression: node index out of range");
  std::size_t pending = 1, i = root;
  while (pending > 0) {
    require(i < nodes_.size(), "expression: truncated tree");
    pending += static_cast<std::size_t>(arity(nodes_[i].op));
    --pending;
    ++i;
  }
  return i;
}

ExprTree ExprTree::subtree(std::size_t root) const {
  const auto end = subtree_end(root);
  return ExprTree(std::vector<Node>(nodes_.begin() + static_cast<long>(root),
                                    nodes_.begin() + static_cast<long>(end)));
}

ExprTree ExprTree::replace_subtree(std::size_t root, const ExprTree& replacement) const {
  const auto end = subtree_end(root);
  std::vector<Node> nodes(nodes_.begin(), nodes_.begin() + static_cast<long>(root));
  nodes.insert(nodes.end(), replacement.nodes_.begin(), replacement.nodes_.end());
  nodes.insert(nodes.end(), nodes_.begin() + static_cast<long>(end), nodes_.end());
  return ExprTree(std::move(nodes));
}

std::vector<int> ExprTree::node_depths() const {
  std::vector<int> depths(nodes_.size(), 0);
  // stack of (depth, children still expected) for open parents
  std::vector<std::pair<int, int>> open;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    depths[i] = open.empty() ? 0 : open.back().first + 1;
    if (!open.empty() && --open.back().second == 0) open.pop_back();
    if (arity(nodes_[i].op) > 0) open.emplace_back(depths[i], arity(nodes_[i].op));
  }
  return depths;
}

bool ExprTree::operator==(const ExprTree& other) const {
  if (nodes_.size() != other.nodes_.size()) return false;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto &a = nodes_[i], &b = other.nodes_[i];
    if (a.op != b.op) return false;
    if (a.op == Op::Const && a.value != b.value) return false;
    if (a.op == Op::Var && a.var != b.var) return false;
  }
  return true;
}

namespace {

Eigen::ArrayXd eval_range(const std::vector<Node>& nodes, std::size_t& pos, const Eigen::MatrixXd& x) {
  const Node& n = nodes[pos++];
  switch (n.op) {
  case Op::Const: return Eigen::ArrayXd::Constant(x.rows(), n.value);
  case Op::Var: return x.col(n.var).array();
  case Op::Sin: return eval_range(nodes, pos, x).sin();
  case Op::Cos: return eval_range(nodes, pos, x).cos();
  case Op::Exp: return eval_range(nodes, pos, x).exp();
  default: break;
  }
  const Eigen::ArrayXd lhs = eval_range(nodes, pos, x);
  const Eigen::ArrayXd rhs = eval_range(nodes, pos, x);
  switch (n.op) {
  case Op::Add: return lhs + rhs;
  case Op::Sub: return lhs - rhs;
  case Op::Mul: return lhs * rhs;
  default: break;
  }
  return (rhs.abs() < kProtectedDivThreshold).select(Eigen::ArrayXd::Ones(lhs.size()), lhs / rhs);
}

} // namespace

Eigen::VectorXd eval_tree(const ExprTree& t, const Eigen::MatrixXd& x) {
  for (const auto& n : t.nodes())
    if (n.op == Op::Var)
      require(n.var < x.cols(), "expression: variable x" + std::to_string(n.var) +
                                    " but inputs have " + std::to_string(x.cols()) + " columns");
  std::size_t pos = 0;
  return eval_range(t.nodes(), pos, x).matrix();
}

int tree_depth(const ExprTree& t) {
  const auto d = t.node_depths();
  return d.empty() ? 0 : *std::max_element(d.begin(), d.end());
}

bool is_valid(const ExprTree& t, int max_depth, int input_dim) {
  if (t.size() == 0 || t.subtree_end(0) != t.size()) return false;
  for (const auto& n : t.nodes()) {
    if (n.op == Op::Var && (n.var < 0 || n.var >= input_dim)) return false;
    if (n.op == Op::Const && !std::isfinite(n.value)) return false;
  }
  return tree_depth(t) <= max_depth;
}

namespace {

std::string terminal_text(const Node& n) {
  if (n.op == Op::Var) return "x" + std::to_string(n.var);
  return format_double(n.value);
}

void prefix_text(const std::vector<Node>& nodes, std::size_t& pos, std::string& out) {
  const Node& n = nodes[pos++];
  if (arity(n.op) == 0) {
    out += terminal_text(n);
    return;
  }
  out += "(" + op_symbol(n.op);
  for (int k = 0; k < arity(n.op); ++k) {
    out += ' ';
    prefix_text(nodes, pos, out);
  }
  out += ')';
}

void infix_text(const std::vector<Node>& nodes, std::size_t& pos, std::string& out) {
  const Node& n = nodes[pos++];
  if (arity(n.op) == 0) {
    out += terminal_text(n);
  } else if (arity(n.op) == 1) {
    out += op_symbol(n.op) + "(";
    infix_text(nodes, pos, out);
    out += ')';
  } else {
    out += '(';
    infix_text(nodes, pos, out);
    out += " " + op_symbol(n.op) + " ";
    infix_text(nodes, pos, out);
    out += ')';
  }
}

} // namespace

std::string to_prefix(const ExprTree& t) {
  std::string out;
  std::size_t pos = 0;
  prefix_text(t.nodes(), pos, out);
  return out;
}

std::string to_infix(const ExprTree& t) {
  std::string out;
  std::size_t pos = 0;
  infix_text(t.nodes(), pos, out);
  return out;
}

ExprTree parse_prefix(const std::string& text) {
  std::string spaced;
  for (char ch : text) {
    if (ch == '(' || ch == ')') {
      spaced += ' ';
      spaced += ch;
      spaced += ' ';
    } else {
      spaced += ch;
    }
  }
  std::istringstream in(spaced);
  std::vector<Node> nodes;
  std::string tok;
  long open = 0;
  while (in >> tok) {
    if (tok == "(") {
      ++open;
      continue;
    }
    if (tok == ")") {
      require(--open >= 0, "expression: unbalanced parentheses");
      continue;
    }
    static const std::pair<const char*, Op> ops[] = {{"+", Op::Add}, {"-", Op::Sub}, {"*", Op::Mul},
                                                     {"/", Op::Div}, {"sin", Op::Sin}, {"cos", Op::Cos},
                                                     {"exp", Op::Exp}};
    bool matched = false;
    for (const auto& [sym, op] : ops)
      if (tok == sym) {
        nodes.push_back({op, 0.0, 0});
        matched = true;
      }
    if (matched) continue;
    if (tok.size() > 1 && tok[0] == 'x') {
      nodes.push_back({Op::Var, 0.0, std::stoi(tok.substr(1))});
      continue;
    }
    try {
      std::size_t used = 0;
      const double v = std::stod(tok, &used);
      require(used == tok.size(), "");
      nodes.push_back({Op::Const, v, 0});
    } catch (const std::exception&) {
      throw ValidationError("expression: unknown token '" + tok + "'");
    }
  }
  require(open == 0, "expression: unbalanced parentheses");
  return ExprTree(std::move(nodes));
}

PrimitiveSet parse_primitives(const std::string& text, int input_dim) {
  PrimitiveSet p;
  p.functions.clear();
  p.variables = p.constants = false;
  p.input_dim = input_dim;
  std::istringstream in(text);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    tok.erase(std::remove_if(tok.begin(), tok.end(), ::isspace), tok.end());
    if (tok == "+") p.functions.push_back(Op::Add);
    else if (tok == "-") p.functions.push_back(Op::Sub);
    else if (tok == "*") p.functions.push_back(Op::Mul);
    else if (tok == "/") p.functions.push_back(Op::Div);
    else if (tok == "sin") p.functions.push_back(Op::Sin);
    else if (tok == "cos") p.functions.push_back(Op::Cos);
    else if (tok == "exp") p.functions.push_back(Op::Exp);
    else if (tok == "x") p.variables = true;
    else if (tok == "const") p.constants = true;
    else throw ValidationError("primitives: unknown primitive '" + tok + "'");
  }
  require(!p.functions.empty(), "primitives: need at least one function");
  require(p.variables || p.constants, "primitives: need at least one terminal (x or const)");
  return p;
}

namespace {

Node random_terminal(const PrimitiveSet& prims, Engine& rng) {
  const bool use_var =
      prims.variables && (!prims.constants || std::bernoulli_distribution(0.5)(rng));
  if (use_var) {
    std::uniform_int_distribution<int> var(0, prims.input_dim - 1);
    return {Op::Var, 0.0, var(rng)};
  }
  std::uniform_real_distribution<double> value(prims.const_lo, prims.const_hi);
  return {Op::Const, value(rng), 0};
}

void grow_into(const PrimitiveSet& prims, int depth_left, bool full, Engine& rng,
               std::vector<Node>& out) {
  const std::size_t n_terms = (prims.variables ? 1 : 0) + (prims.constants ? 1 : 0);
  bool pick_function = depth_left > 0;
  if (pick_function && !full) {
    const double p_fn = static_cast<double>(prims.functions.size()) /
                        static_cast<double>(prims.functions.size() + n_terms);
    pick_function = std::bernoulli_distribution(p_fn)(rng);
  }
  if (!pick_function) {
    out.push_back(random_terminal(prims, rng));
    return;
  }
  std::uniform_int_distribution<std::size_t> which(0, prims.functions.size() - 1);
  const Op op = prims.functions[which(rng)];
  out.push_back({op, 0.0, 0});
  for (int k = 0; k < arity(op); ++k) grow_into(prims, depth_left - 1, full, rng, out);
}

} // namespace

ExprTree grow_tree(const PrimitiveSet& prims, int max_depth, bool full, Engine& rng) {
  require(max_depth >= 0, "grow: max depth must be >= 0");
  std::vector<Node> nodes;
  grow_into(prims, max_depth, full, rng, nodes);
  return ExprTree(std::move(nodes));
}

void GpConfig::validate() const {
  require(population_size >= 2, "gp: population must be >= 2");
  require(generations >= 0, "gp: generations must be >= 0");
  require(max_depth >= 1, "gp: max depth must be >= 1");
  require(tournament_size >= 1, "gp: tournament size must be >= 1");
  for (double r : {elitism_rate, replication_rate, crossover_rate, mutation_rate})
    require(r >= 0.0 && r <= 1.0, "gp: rates must lie in [0, 1]");
  require(std::abs(elitism_rate + replication_rate + crossover_rate + mutation_rate - 1.0) < 1e-9,
          "gp: elitism, replication, crossover and mutation rates must sum to 1");
  require(!primitives.functions.empty() && (primitives.variables || primitives.constants),
          "gp: primitive set needs a function and a terminal");
  require(primitives.input_dim >= 1, "gp: input dimension must be >= 1");
}

std::pair<ExprTree, ExprTree> crossover_at(const ExprTree& t1, std::size_t i1, const ExprTree& t2,
                                           std::size_t i2) {
  return {t1.replace_subtree(i1, t2.subtree(i2)), t2.replace_subtree(i2, t1.subtree(i1))};
}

std::pair<ExprTree, ExprTree> crossover(const ExprTree& t1, const ExprTree& t2, int max_depth,
                                        Engine& rng, int max_retries) {
  std::uniform_int_distribution<std::size_t> pick1(0, t1.size() - 1), pick2(0, t2.size() - 1);
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    auto children = crossover_at(t1, pick1(rng), t2, pick2(rng));
    if (tree_depth(children.first) <= max_depth && tree_depth(children.second) <= max_depth)
      return children;
  }
  return {t1, t2};
}

ExprTree mutate(const ExprTree& t, const PrimitiveSet& prims, int max_depth, Engine& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, t.size() - 1);
  const std::size_t at = pick(rng);
  const int budget = std::max(0, max_depth - t.node_depths()[at]);
  std::uniform_int_distribution<int> depth(0, budget);
  return t.replace_subtree(at, grow_tree(prims, depth(rng), false, rng));
}

double fitness(const ExprTree& t, const Dataset& d) {
  require(d.rows() >= 1 && d.output_dim() >= 1, "gp: dataset needs rows and a target column");
  const Eigen::VectorXd pred = eval_tree(t, d.inputs());
  if (!pred.allFinite()) return std::numeric_limits<double>::infinity();
  const double v = (pred - d.targets().col(0)).squaredNorm() / static_cast<double>(d.rows());
  return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

namespace {

// Fitness ties go to the smaller tree, then to the earlier position.
bool better(const std::vector<double>& fit, const std::vector<ExprTree>& pop, std::size_t a,
            std::size_t b) {
  if (fit[a] != fit[b]) return fit[a] < fit[b];
  if (pop[a].size() != pop[b].size()) return pop[a].size() < pop[b].size();
  return a < b;
}

std::vector<std::size_t> ranking(const std::vector<double>& fit, const std::vector<ExprTree>& pop) {
  std::vector<std::size_t> order(pop.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return better(fit, pop, a, b); });
  return order;
}

std::size_t tournament(const std::vector<double>& fit, const std::vector<ExprTree>& pop, int size,
                       Engine& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, pop.size() - 1);
  std::size_t winner = pick(rng);
  for (int k = 1; k < size; ++k) {
    const std::size_t c = pick(rng);
    if (better(fit, pop, c, winner)) winner = c;
  }
  return winner;
}

GenerationStats stats(int generation, const std::vector<double>& fit, double best_so_far,
                      std::size_t best_size) {
  double sum = 0.0;
  std::size_t finite = 0;
  for (double f : fit)
    if (std::isfinite(f)) {
      sum += f;
      ++finite;
    }
  const double mean = finite ? sum / static_cast<double>(finite)
                             : std::numeric_limits<double>::infinity();
  return {generation, best_so_far, mean, best_size};
}

} // namespace

EvolveResult evolve(const Dataset& d, const GpConfig& cfg) {
  cfg.validate();
  require(d.input_dim() == cfg.primitives.input_dim,
          "gp: dataset has " + std::to_string(d.input_dim()) + " inputs, primitives expect " +
              std::to_string(cfg.primitives.input_dim));
  Engine rng = make_engine(cfg.seed);
  const auto pop_size = static_cast<std::size_t>(cfg.population_size);

  // Ramped half-and-half over depths 1..max_depth.
  std::vector<ExprTree> pop;
  for (std::size_t i = 0; i < pop_size; ++i) {
    const int depth = 1 + static_cast<int>((i / 2) % static_cast<std::size_t>(cfg.max_depth));
    pop.push_back(grow_tree(cfg.primitives, depth, i % 2 == 0, rng));
  }
  auto score = [&](const std::vector<ExprTree>& p) {
    std::vector<double> f(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) f[i] = fitness(p[i], d);
    return f;
  };
  std::vector<double> fit = score(pop);
  auto order = ranking(fit, pop);

  EvolveResult result;
  result.best = pop[order[0]];
  result.best_fitness = fit[order[0]];
  result.history.push_back(stats(0, fit, result.best_fitness, result.best.size()));

  std::size_t n_elite = static_cast<std::size_t>(std::llround(cfg.elitism_rate * cfg.population_size));
  if (cfg.elitism_rate > 0.0) n_elite = std::max<std::size_t>(n_elite, 1);
  n_elite = std::min(n_elite, pop_size);
  const double variation = cfg.replication_rate + cfg.crossover_rate + cfg.mutation_rate;
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (int gen = 1; gen <= cfg.generations; ++gen) {
    std::vector<ExprTree> next;
    next.reserve(pop_size);
    for (std::size_t e = 0; e < n_elite; ++e) next.push_back(pop[order[e]]);
    while (next.size() < pop_size) {
      const double u = unit(rng) * variation;
      if (variation <= 0.0 || u < cfg.replication_rate) {
        next.push_back(pop[tournament(fit, pop, cfg.tournament_size, rng)]);
      } else if (u < cfg.replication_rate + cfg.crossover_rate) {
        const auto& a = pop[tournament(fit, pop, cfg.tournament_size, rng)];
        const auto& b = pop[tournament(fit, pop, cfg.tournament_size, rng)];
        auto [c1, c2] = crossover(a, b, cfg.max_depth, rng, cfg.max_crossover_retries);
        next.push_back(std::move(c1));
        if (next.size() < pop_size) next.push_back(std::move(c2));
      } else {
        next.push_back(mutate(pop[tournament(fit, pop, cfg.tournament_size, rng)], cfg.primitives,
                              cfg.max_depth, rng));
      }
    }
    pop = std::move(next);
    fit = score(pop);
    order = ranking(fit, pop);
    const auto& champion = pop[order[0]];
    const double f = fit[order[0]];
    if (f < result.best_fitness || (f == result.best_fitness && champion.size() < result.best.size())) {
      result.best = champion;
      result.best_fitness = f;
    }
    result.history.push_back(stats(gen, fit, result.best_fitness, result.best.size()));
  }
  result.final_population = std::move(pop);
  return result;
}

} // namespace regkit

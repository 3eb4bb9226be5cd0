#include "hyperclass/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "hyperclass/manifold_optim.hpp"
#include "hyperclass/rng.hpp"
#include "hyperclass/text_util.hpp"

namespace hyperclass {

HierarchyMode parse_hierarchy_mode(std::string_view s) {
  if (s == "expert") return HierarchyMode::Expert;
  if (s == "none") return HierarchyMode::None;
  if (s == "random") return HierarchyMode::Random;
  throw std::invalid_argument("unknown hierarchy mode: " + std::string(s));
}

std::string_view to_string(HierarchyMode mode) {
  switch (mode) {
    case HierarchyMode::Expert: return "expert";
    case HierarchyMode::None: return "none";
    case HierarchyMode::Random: return "random";
  }
  return "expert";
}

std::string_view TreeError::name() const noexcept {
  switch (kind_) {
    case Kind::Format: return "TaxonomyFormatError";
    case Kind::Io: return "TaxonomyIoError";
    case Kind::EmptyHierarchy: return "EmptyHierarchyError";
    case Kind::Cycle: return "CycleError";
    case Kind::MultipleParents: return "MultipleParentsError";
    case Kind::UnknownClassNode: return "UnknownClassNodeError";
    case Kind::DuplicateClassLeaf: return "DuplicateClassLeafError";
    case Kind::DuplicateClassLabel: return "DuplicateClassLabelError";
    case Kind::NoClasses: return "NoClassesError";
  }
  return "TreeError";
}

std::optional<NodeId> LabelTree::find(std::string_view name) const {
  auto it = std::find(nodes.begin(), nodes.end(), name);
  if (it == nodes.end()) return std::nullopt;
  return static_cast<NodeId>(it - nodes.begin());
}

NodeId LabelTree::index_of(std::string_view name) const {
  if (auto id = find(name)) return *id;
  throw TreeError(TreeError::Kind::UnknownClassNode, "unknown node: " + std::string(name));
}

std::vector<std::optional<NodeId>> LabelTree::parents() const {
  std::vector<std::optional<NodeId>> out(nodes.size());
  for (auto [p, c] : edges) out[c] = p;
  return out;
}

std::vector<std::vector<NodeId>> LabelTree::children() const {
  std::vector<std::vector<NodeId>> out(nodes.size());
  for (auto [p, c] : edges) out[p].push_back(c);
  return out;
}

std::vector<NodeId> LabelTree::roots() const {
  const auto par = parents();
  std::vector<NodeId> out;
  for (NodeId i = 0; i < par.size(); ++i)
    if (!par[i]) out.push_back(i);
  return out;
}

std::vector<NodeId> LabelTree::leaves() const {
  const auto ch = children();
  std::vector<NodeId> out;
  for (NodeId i = 0; i < ch.size(); ++i)
    if (ch[i].empty()) out.push_back(i);
  return out;
}

std::size_t LabelTree::depth() const {
  const auto ch = children();
  std::size_t best = 0;
  // Iterative DFS; the tree is validated acyclic on construction.
  std::vector<std::pair<NodeId, std::size_t>> stack;
  for (NodeId r : roots()) stack.emplace_back(r, 1);
  while (!stack.empty()) {
    auto [n, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    for (NodeId c : ch[n]) stack.emplace_back(c, d + 1);
  }
  return best;
}

bool is_valid_node_name(std::string_view name) {
  if (name.empty()) return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '_' || c == '-';
  });
}

namespace {

// Splits a two-column TSV line after comment stripping. Returns nullopt for
// blank lines.
std::optional<std::pair<std::string, std::string>> two_columns(std::string_view raw,
                                                               std::size_t line_no,
                                                               bool strip_comments,
                                                               const char* what) {
  std::string_view line = raw;
  if (strip_comments) {
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
  }
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  if (trim_ascii(line).empty()) return std::nullopt;
  const auto fields = split(line, '\t');
  if (fields.size() != 2) {
    throw TreeError(TreeError::Kind::Format, std::string(what) + " line " +
                                                 std::to_string(line_no) +
                                                 ": expected two tab-separated fields");
  }
  return std::pair{std::string(trim_ascii(fields[0])), std::string(trim_ascii(fields[1]))};
}

void require_node_name(const std::string& name, std::size_t line_no, const char* what) {
  if (!is_valid_node_name(name)) {
    throw TreeError(TreeError::Kind::Format, std::string(what) + " line " +
                                                 std::to_string(line_no) +
                                                 ": invalid node name '" + name + "'");
  }
}

bool has_cycle(std::size_t n, const std::vector<Edge>& edges) {
  std::vector<std::optional<NodeId>> parent(n);
  for (auto [p, c] : edges) parent[c] = p;
  // Walk up from each node; a walk longer than n steps revisits a node.
  for (NodeId start = 0; start < n; ++start) {
    NodeId cur = start;
    for (std::size_t steps = 0; parent[cur]; ++steps) {
      cur = *parent[cur];
      if (cur == start || steps > n) return true;
    }
  }
  return false;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw TreeError(TreeError::Kind::Io, "cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::vector<NamedEdge> parse_taxonomy(std::string_view text) {
  std::vector<NamedEdge> out;
  std::size_t line_no = 0;
  for (std::string_view line : split_lines(text)) {
    ++line_no;
    auto cols = two_columns(line, line_no, true, "taxonomy");
    if (!cols) continue;
    require_node_name(cols->first, line_no, "taxonomy");
    require_node_name(cols->second, line_no, "taxonomy");
    out.push_back({std::move(cols->first), std::move(cols->second)});
  }
  return out;
}

std::vector<ClassMapEntry> parse_class_map(std::string_view text) {
  std::vector<ClassMapEntry> out;
  std::size_t line_no = 0;
  for (std::string_view line : split_lines(text)) {
    ++line_no;
    auto cols = two_columns(line, line_no, false, "class map");
    if (!cols) continue;
    if (cols->first.empty()) {
      throw TreeError(TreeError::Kind::Format,
                      "class map line " + std::to_string(line_no) + ": empty label");
    }
    require_node_name(cols->second, line_no, "class map");
    out.push_back({std::move(cols->first), std::move(cols->second)});
  }
  return out;
}

LabelTree build_tree(const std::vector<NamedEdge>& named_edges,
                     const std::optional<std::vector<ClassMapEntry>>& class_map,
                     HierarchyMode mode, std::uint64_t seed) {
  LabelTree tree;
  tree.mode = mode;
  std::unordered_map<std::string, NodeId> index;
  auto intern = [&](const std::string& name) {
    auto [it, inserted] = index.emplace(name, tree.nodes.size());
    if (inserted) tree.nodes.push_back(name);
    return it->second;
  };

  std::vector<std::optional<NodeId>> parent;
  for (const auto& e : named_edges) {
    const NodeId p = intern(e.parent);
    const NodeId c = intern(e.child);
    parent.resize(tree.nodes.size());
    if (p == c) throw TreeError(TreeError::Kind::Cycle, "node '" + e.child + "' is its own parent");
    if (parent[c]) {
      throw TreeError(TreeError::Kind::MultipleParents,
                      "node '" + e.child + "' has two parents: '" + tree.nodes[*parent[c]] +
                          "' and '" + e.parent + "'");
    }
    parent[c] = p;
    tree.edges.emplace_back(p, c);
  }
  if (has_cycle(tree.nodes.size(), tree.edges)) {
    throw TreeError(TreeError::Kind::Cycle, "taxonomy contains a cycle");
  }
  if (mode == HierarchyMode::Expert && tree.edges.empty()) {
    throw TreeError(TreeError::Kind::EmptyHierarchy, "expert mode requires at least one edge");
  }

  if (class_map) {
    std::unordered_map<std::string, std::size_t> seen_labels;
    std::vector<bool> used(tree.nodes.size(), false);
    for (const auto& entry : *class_map) {
      auto it = index.find(entry.node);
      if (it == index.end()) {
        throw TreeError(TreeError::Kind::UnknownClassNode,
                        "class '" + entry.label + "' maps to unknown node '" + entry.node + "'");
      }
      if (used[it->second]) {
        throw TreeError(TreeError::Kind::DuplicateClassLeaf,
                        "node '" + entry.node + "' is assigned to more than one class");
      }
      if (!seen_labels.emplace(entry.label, tree.class_labels.size()).second) {
        throw TreeError(TreeError::Kind::DuplicateClassLabel,
                        "class label '" + entry.label + "' listed twice");
      }
      used[it->second] = true;
      tree.class_leaves.push_back(it->second);
      tree.class_labels.push_back(entry.label);
    }
  } else {
    for (NodeId leaf : tree.leaves()) {
      tree.class_leaves.push_back(leaf);
      tree.class_labels.push_back(tree.nodes[leaf]);
    }
  }
  if (tree.class_leaves.empty()) throw TreeError(TreeError::Kind::NoClasses, "no classes defined");

  if (mode == HierarchyMode::None) {
    tree.edges.clear();
  } else if (mode == HierarchyMode::Random && !tree.edges.empty()) {
    // Reassign children among the existing parent slots, keeping each
    // parent's out-degree; redraw until the result is acyclic.
    auto rng = make_rng(seed, RngStream::HierarchyShuffle);
    std::vector<NodeId> kids;
    for (auto [p, c] : tree.edges) kids.push_back(c);
    constexpr int kMaxAttempts = 100000;
    for (int attempt = 0;; ++attempt) {
      if (attempt == kMaxAttempts) {
        throw TreeError(TreeError::Kind::Cycle, "could not draw an acyclic random hierarchy");
      }
      std::shuffle(kids.begin(), kids.end(), rng);
      std::vector<Edge> shuffled;
      bool self_loop = false;
      for (std::size_t i = 0; i < kids.size(); ++i) {
        self_loop |= tree.edges[i].first == kids[i];
        shuffled.emplace_back(tree.edges[i].first, kids[i]);
      }
      if (!self_loop && !has_cycle(tree.nodes.size(), shuffled)) {
        tree.edges = std::move(shuffled);
        break;
      }
    }
  }
  return tree;
}

LabelTree load_tree(const std::filesystem::path& taxonomy,
                    const std::optional<std::filesystem::path>& class_map, HierarchyMode mode,
                    std::uint64_t seed) {
  const auto edges = parse_taxonomy(read_file(taxonomy));
  std::optional<std::vector<ClassMapEntry>> cm;
  if (class_map) cm = parse_class_map(read_file(*class_map));
  return build_tree(edges, cm, mode, seed);
}

const BallPoint& LabelEmbeddingSet::at(std::string_view name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw std::out_of_range("no embedding for node " + std::string(name));
  return points[static_cast<std::size_t>(it - names.begin())];
}

void write_embeddings_tsv(std::ostream& os, const LabelEmbeddingSet& emb) {
  os << "node";
  for (std::size_t d = 0; d < emb.dim; ++d) os << "\tdim" << d;
  os << '\n';
  const auto old_prec = os.precision(17);
  for (std::size_t i = 0; i < emb.size(); ++i) {
    os << emb.names[i];
    for (double c : emb.points[i].coords()) os << '\t' << c;
    os << '\n';
  }
  os.precision(old_prec);
}

LabelEmbeddingSet read_embeddings_tsv(std::istream& is) {
  LabelEmbeddingSet emb;
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("embedding TSV is empty");
  const auto header = split(line, '\t');
  if (header.empty() || header[0] != "node") throw std::runtime_error("bad embedding TSV header");
  emb.dim = header.size() - 1;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto fields = split(line, '\t');
    if (fields.size() != emb.dim + 1) throw std::runtime_error("bad embedding TSV row");
    Vec coords;
    for (std::size_t d = 1; d < fields.size(); ++d) coords.push_back(parse_double(fields[d]));
    emb.names.emplace_back(fields[0]);
    emb.points.emplace_back(std::move(coords));
  }
  return emb;
}

NegativeSampler::NegativeSampler(const LabelTree& tree) : candidates_(tree.size()) {
  const auto ch = tree.children();
  for (NodeId u = 0; u < tree.size(); ++u) {
    std::vector<bool> excluded(tree.size(), false);
    excluded[u] = true;
    for (NodeId c : ch[u]) excluded[c] = true;
    for (NodeId v = 0; v < tree.size(); ++v)
      if (!excluded[v]) candidates_[u].push_back(v);
  }
}

std::vector<NodeId> NegativeSampler::sample(NodeId u, std::size_t k, std::mt19937_64& rng) const {
  const auto& pool = candidates_.at(u);
  if (pool.empty()) {
    throw std::invalid_argument("node has no negative candidates");
  }
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  std::vector<NodeId> out(k);
  for (auto& n : out) n = pool[pick(rng)];
  return out;
}

std::vector<NodeId> negative_samples(const LabelTree& tree, NodeId u, std::size_t k,
                                     std::mt19937_64& rng) {
  return NegativeSampler(tree).sample(u, k, rng);
}

LabelLoss label_loss(const LabelEmbeddingSet& emb, NodeId u, NodeId v,
                     std::span<const NodeId> negatives) {
  const std::size_t n = negatives.size() + 1;
  std::vector<NodeId> others(n);
  others[0] = v;
  std::copy(negatives.begin(), negatives.end(), others.begin() + 1);

  std::vector<double> dist(n);
  for (std::size_t j = 0; j < n; ++j) dist[j] = distance(emb.points[u], emb.points[others[j]]);

  // loss = d_0 + logsumexp(-d)
  const double mx = -*std::min_element(dist.begin(), dist.end());
  double z = 0.0;
  for (double d : dist) z += std::exp(-d - mx);
  const double lse = mx + std::log(z);

  LabelLoss out;
  out.value = dist[0] + lse;

  std::map<NodeId, Vec> acc;
  auto add = [&](NodeId id, const Vec& g, double coef) {
    auto [it, inserted] = acc.try_emplace(id, Vec(emb.dim, 0.0));
    for (std::size_t i = 0; i < g.size(); ++i) it->second[i] += coef * g[i];
  };
  for (std::size_t j = 0; j < n; ++j) {
    const double p = std::exp(-dist[j] - lse);
    const double dl_dd = (j == 0 ? 1.0 : 0.0) - p;
    if (dl_dd == 0.0) continue;
    auto [gu, gv] = distance_grad(emb.points[u], emb.points[others[j]]);
    add(u, gu, dl_dd);
    add(others[j], gv, dl_dd);
  }
  acc.try_emplace(u, Vec(emb.dim, 0.0));
  out.grads.assign(std::make_move_iterator(acc.begin()), std::make_move_iterator(acc.end()));
  return out;
}

LabelTrainResult train_label_embeddings_verbose(const LabelTree& tree,
                                                const LabelTrainConfig& config) {
  if (config.dim == 0) throw std::invalid_argument("embedding dimension must be positive");
  auto rng = make_rng(config.seed, RngStream::LabelTraining);

  LabelTrainResult result;
  LabelEmbeddingSet& emb = result.embeddings;
  emb.dim = config.dim;
  emb.names = tree.nodes;
  emb.points.reserve(tree.size());
  for (std::size_t i = 0; i < tree.size(); ++i) {
    emb.points.emplace_back(uniform_in_ball(rng, config.dim, config.init_radius));
  }
  if (tree.edges.empty()) return result;

  const NegativeSampler sampler(tree);
  RiemannianAdamConfig adam;
  adam.learning_rate = config.lr;
  std::vector<RiemannianOptimState> states(tree.size(), RiemannianOptimState(config.dim, adam));

  std::vector<Edge> order = tree.edges;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = epoch < config.burn_in_epochs ? config.lr * config.burn_in_factor : config.lr;
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (auto [u, v] : order) {
      const auto negs = sampler.sample(u, config.negatives, rng);
      LabelLoss loss = label_loss(emb, u, v, negs);
      total += loss.value;
      for (auto& [node, grad] : loss.grads) {
        emb.points[node] = radam_step(states[node], emb.points[node], grad, lr);
      }
    }
    result.epoch_loss.push_back(total / static_cast<double>(order.size()));
  }
  return result;
}

LabelEmbeddingSet train_label_embeddings(const LabelTree& tree, const LabelTrainConfig& config) {
  return train_label_embeddings_verbose(tree, config).embeddings;
}

LabelEmbeddingSet uniform_label_layout(const LabelTree& tree, std::size_t dim, std::uint64_t seed) {
  if (dim == 0) throw std::invalid_argument("embedding dimension must be positive");
  auto rng = make_rng(seed, RngStream::LabelTraining);
  LabelEmbeddingSet emb;
  emb.dim = dim;
  emb.names = tree.nodes;
  for (std::size_t i = 0; i < tree.size(); ++i) {
    emb.points.emplace_back(uniform_in_ball(rng, dim, 1.0));
  }
  return emb;
}

double reconstruction_map(const LabelEmbeddingSet& emb, const LabelTree& tree) {
  if (emb.size() != tree.size()) throw std::invalid_argument("embedding/tree size mismatch");
  const auto ch = tree.children();
  double sum_ap = 0.0;
  std::size_t parents = 0;
  for (NodeId u = 0; u < tree.size(); ++u) {
    if (ch[u].empty()) continue;
    std::vector<bool> positive(tree.size(), false);
    for (NodeId c : ch[u]) positive[c] = true;
    std::vector<std::pair<double, NodeId>> ranked;
    for (NodeId v = 0; v < tree.size(); ++v)
      if (v != u) ranked.emplace_back(distance(emb.points[u], emb.points[v]), v);
    // Ties resolve against the positive (pessimistic ranking).
    std::sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      return positive[a.second] < positive[b.second];
    });
    double ap = 0.0;
    std::size_t hits = 0;
    for (std::size_t r = 0; r < ranked.size(); ++r) {
      if (positive[ranked[r].second]) {
        ++hits;
        ap += static_cast<double>(hits) / static_cast<double>(r + 1);
      }
    }
    sum_ap += ap / static_cast<double>(ch[u].size());
    ++parents;
  }
  if (parents == 0) return std::numeric_limits<double>::quiet_NaN();
  return sum_ap / static_cast<double>(parents);
}

}  // namespace hyperclass

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hyperclass/ball_geometry.hpp"

namespace hyperclass {

enum class HierarchyMode { Expert, None, Random };

HierarchyMode parse_hierarchy_mode(std::string_view s);
std::string_view to_string(HierarchyMode mode);

class TreeError : public std::runtime_error {
 public:
  enum class Kind {
    Format,             // malformed line or invalid node name
    Io,                 // file could not be read
    EmptyHierarchy,     // expert mode with no edges
    Cycle,              // parent/child relation loops back
    MultipleParents,    // node listed as child of two parents
    UnknownClassNode,   // class map names a node not in the taxonomy
    DuplicateClassLeaf, // two classes map onto the same node
    DuplicateClassLabel,
    NoClasses,
  };

  TreeError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  [[nodiscard]] Kind kind() const noexcept { return kind_; }
  [[nodiscard]] std::string_view name() const noexcept;

 private:
  Kind kind_;
};

using NodeId = std::size_t;
using Edge = std::pair<NodeId, NodeId>;  // (parent, child)

// Label taxonomy. Nodes are indexed in order of first appearance in the
// taxonomy file; class i of the classifier is node class_leaves[i] and is
// called class_labels[i] in datasets.
struct LabelTree {
  std::vector<std::string> nodes;
  std::vector<Edge> edges;
  std::vector<NodeId> class_leaves;
  std::vector<std::string> class_labels;
  HierarchyMode mode = HierarchyMode::Expert;

  [[nodiscard]] std::size_t size() const noexcept { return nodes.size(); }
  [[nodiscard]] std::size_t num_classes() const noexcept { return class_leaves.size(); }
  [[nodiscard]] std::optional<NodeId> find(std::string_view name) const;
  [[nodiscard]] NodeId index_of(std::string_view name) const;

  [[nodiscard]] std::vector<std::optional<NodeId>> parents() const;
  [[nodiscard]] std::vector<std::vector<NodeId>> children() const;
  [[nodiscard]] std::vector<NodeId> roots() const;
  [[nodiscard]] std::vector<NodeId> leaves() const;
  /// Number of levels on the longest root-to-leaf path (0 for an empty tree).
  [[nodiscard]] std::size_t depth() const;
};

struct NamedEdge {
  std::string parent;
  std::string child;
};

struct ClassMapEntry {
  std::string label;
  std::string node;
};

bool is_valid_node_name(std::string_view name);

/// Parses `parent<TAB>child` lines; `#` starts a comment.
std::vector<NamedEdge> parse_taxonomy(std::string_view text);
/// Parses `dataset_label<TAB>tree_node` lines.
std::vector<ClassMapEntry> parse_class_map(std::string_view text);

/// Validates the taxonomy and applies `mode`. Without a class map, every leaf
/// of the taxonomy becomes a class named after its node. `seed` drives the
/// child shuffle in random mode.
LabelTree build_tree(const std::vector<NamedEdge>& edges,
                     const std::optional<std::vector<ClassMapEntry>>& class_map,
                     HierarchyMode mode, std::uint64_t seed);

LabelTree load_tree(const std::filesystem::path& taxonomy,
                    const std::optional<std::filesystem::path>& class_map, HierarchyMode mode,
                    std::uint64_t seed);

struct LabelEmbeddingSet {
  std::vector<std::string> names;
  std::vector<BallPoint> points;
  std::size_t dim = 0;

  [[nodiscard]] const BallPoint& at(std::string_view name) const;
  [[nodiscard]] std::size_t size() const noexcept { return points.size(); }
};

void write_embeddings_tsv(std::ostream& os, const LabelEmbeddingSet& emb);
LabelEmbeddingSet read_embeddings_tsv(std::istream& is);

// Per-node candidate lists for N(u) = {v : (u,v) not in D, v != u}.
class NegativeSampler {
 public:
  explicit NegativeSampler(const LabelTree& tree);
  [[nodiscard]] const std::vector<NodeId>& candidates(NodeId u) const { return candidates_.at(u); }
  std::vector<NodeId> sample(NodeId u, std::size_t k, std::mt19937_64& rng) const;

 private:
  std::vector<std::vector<NodeId>> candidates_;
};

/// k nodes drawn uniformly with replacement from N(u).
std::vector<NodeId> negative_samples(const LabelTree& tree, NodeId u, std::size_t k,
                                     std::mt19937_64& rng);

struct LabelLoss {
  double value = 0.0;
  // Euclidean gradient per involved node, one entry per distinct node.
  std::vector<std::pair<NodeId, Vec>> grads;
};

/// -log(exp(-d(u,v)) / (exp(-d(u,v)) + sum_j exp(-d(u,n_j)))) and its gradients.
LabelLoss label_loss(const LabelEmbeddingSet& emb, NodeId u, NodeId v,
                     std::span<const NodeId> negatives);

struct LabelTrainConfig {
  std::size_t dim = 100;
  std::size_t epochs = 300;
  std::size_t negatives = 10;
  double lr = 0.01;
  std::size_t burn_in_epochs = 10;
  double burn_in_factor = 0.1;
  double init_radius = 1e-3;
  std::uint64_t seed = 42;
};

struct LabelTrainResult {
  LabelEmbeddingSet embeddings;
  std::vector<double> epoch_loss;  // mean loss per positive pair
};

LabelTrainResult train_label_embeddings_verbose(const LabelTree& tree,
                                                const LabelTrainConfig& config);
LabelEmbeddingSet train_label_embeddings(const LabelTree& tree, const LabelTrainConfig& config);

/// Every node drawn independently and uniformly from the ball, ignoring edges.
LabelEmbeddingSet uniform_label_layout(const LabelTree& tree, std::size_t dim, std::uint64_t seed);

/// Mean average precision of ranking each parent's children ahead of every
/// other node, by ascending hyperbolic distance. NaN for a tree without edges.
double reconstruction_map(const LabelEmbeddingSet& emb, const LabelTree& tree);

}  // namespace hyperclass

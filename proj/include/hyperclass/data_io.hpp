#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hyperclass/encoder.hpp"
#include "hyperclass/hierarchy.hpp"
#include "hyperclass/loss_head.hpp"
#include "json.hpp"

namespace hyperclass {

class DatasetError : public std::runtime_error {
 public:
  enum class Kind { Io, Malformed, UnknownLabel, Empty, InvalidText };

  DatasetError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  [[nodiscard]] Kind kind() const noexcept { return kind_; }
  [[nodiscard]] std::string_view name() const noexcept;

 private:
  Kind kind_;
};

enum class Split { Train, Dev, Test };
std::string_view to_string(Split s);

struct Sample {
  std::string text;
  std::size_t label = 0;

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct LabeledDataset {
  std::vector<Sample> samples;
  std::vector<std::string> label_names;
  Split split = Split::Train;

  [[nodiscard]] std::size_t size() const noexcept { return samples.size(); }
  [[nodiscard]] std::vector<std::string> texts() const;
  [[nodiscard]] std::vector<std::size_t> labels() const;
};

/// Parses `text<TAB>label` rows; labels are mapped to their position in `label_list`.
LabeledDataset parse_dataset(std::string_view content, const std::vector<std::string>& label_list,
                             Split split = Split::Train);
LabeledDataset load_dataset(const std::filesystem::path& path,
                            const std::vector<std::string>& label_list, Split split = Split::Train);
/// Distinct labels of a dataset file in order of first appearance.
std::vector<std::string> scan_labels(const std::filesystem::path& path);

std::string format_dataset(const LabeledDataset& ds);
void save_dataset(const std::filesystem::path& path, const LabeledDataset& ds);

/// Writes to a sibling temporary file and renames it into place.
void atomic_write(const std::filesystem::path& path, std::string_view bytes);
std::string read_binary_file(const std::filesystem::path& path);

// Synthetic confusable-label corpus. Each sample of class c mixes tokens from
// the pool shared by c's family (its parent node), from a pool owned by c, and
// from a global noise pool.
struct SynthSpec {
  LabelTree tree;
  std::size_t tokens_per_sample = 12;
  double family_fraction = 0.4;
  double leaf_fraction = 0.2;
  std::size_t noise_vocab = 200;
  std::size_t family_pool = 200;
  std::size_t leaf_pool = 200;
  std::size_t samples_per_class = 200;
  std::uint64_t seed = 42;
};

struct SyntheticSplits {
  LabeledDataset train;
  LabeledDataset dev;
  LabeledDataset test;
};

/// 70/15/15 split per class (train = floor(0.7 n), dev = floor(0.15 n)).
SyntheticSplits generate_synthetic(const SynthSpec& spec);

class CheckpointError : public std::runtime_error {
 public:
  enum class Kind { Io, Checksum, Version, Stage, Format };

  CheckpointError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  [[nodiscard]] Kind kind() const noexcept { return kind_; }
  [[nodiscard]] std::string_view name() const noexcept;

 private:
  Kind kind_;
};

enum class Stage { Labels, Classifier };
std::string_view to_string(Stage s);

struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  Stage stage = Stage::Labels;
  std::uint64_t seed = 0;
  nlohmann::json config = nlohmann::json::object();
  std::vector<std::string> class_labels;
  std::optional<LabelTree> tree;
  std::optional<LabelEmbeddingSet> label_embeddings;
  std::optional<Vocabulary> vocab;
  std::optional<EncoderModel> encoder;
  std::optional<ClassifierHead> head;
};

/// Binary layout: "HYPC", u32 version, u32 section count, then per section
/// u32 name length, name, u64 payload length, payload, u32 CRC32 of
/// name+payload. All integers and doubles little-endian.
std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(std::string_view bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);
/// Throws CheckpointError(Stage) unless ckpt.stage == expected.
void require_stage(const Checkpoint& ckpt, Stage expected);

}  // namespace hyperclass

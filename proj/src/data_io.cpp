#include "hyperclass/data_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <unordered_map>

#include "hyperclass/rng.hpp"
#include "hyperclass/text_util.hpp"

namespace hyperclass {

std::string_view DatasetError::name() const noexcept {
  switch (kind_) {
    case Kind::Io: return "DatasetIoError";
    case Kind::Malformed: return "MalformedRowError";
    case Kind::UnknownLabel: return "UnknownLabelError";
    case Kind::Empty: return "EmptyDatasetError";
    case Kind::InvalidText: return "InvalidTextError";
  }
  return "DatasetError";
}

std::string_view CheckpointError::name() const noexcept {
  switch (kind_) {
    case Kind::Io: return "CheckpointIoError";
    case Kind::Checksum: return "ChecksumError";
    case Kind::Version: return "UnknownVersionError";
    case Kind::Stage: return "StageMismatchError";
    case Kind::Format: return "CheckpointFormatError";
  }
  return "CheckpointError";
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Dev: return "dev";
    case Split::Test: return "test";
  }
  return "train";
}

std::string_view to_string(Stage s) { return s == Stage::Labels ? "labels" : "classifier"; }

std::vector<std::string> LabeledDataset::texts() const {
  std::vector<std::string> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.text);
  return out;
}

std::vector<std::size_t> LabeledDataset::labels() const {
  std::vector<std::size_t> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.label);
  return out;
}

// ---------------------------------------------------------------------------
// Dataset TSV

namespace {

struct Row {
  std::string_view text;
  std::string_view label;
};

std::optional<Row> parse_row(std::string_view line, std::size_t line_no) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  if (trim_ascii(line).empty()) return std::nullopt;
  const auto fields = split(line, '\t');
  if (fields.size() != 2) {
    throw DatasetError(DatasetError::Kind::Malformed,
                       "line " + std::to_string(line_no) + ": expected `text<TAB>label`, got " +
                           std::to_string(fields.size()) + " field(s)");
  }
  const std::string_view label = trim_ascii(fields[1]);
  if (label.empty()) {
    throw DatasetError(DatasetError::Kind::Malformed,
                       "line " + std::to_string(line_no) + ": empty label");
  }
  return Row{fields[0], label};
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError(DatasetError::Kind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

LabeledDataset parse_dataset(std::string_view content, const std::vector<std::string>& label_list,
                             Split split) {
  std::unordered_map<std::string_view, std::size_t> index;
  for (std::size_t i = 0; i < label_list.size(); ++i) index.emplace(label_list[i], i);

  LabeledDataset ds;
  ds.label_names = label_list;
  ds.split = split;
  std::size_t line_no = 0;
  for (std::string_view line : split_lines(content)) {
    ++line_no;
    const auto row = parse_row(line, line_no);
    if (!row) continue;
    auto it = index.find(row->label);
    if (it == index.end()) {
      throw DatasetError(DatasetError::Kind::UnknownLabel,
                         "line " + std::to_string(line_no) + ": unknown label '" +
                             std::string(row->label) + "'");
    }
    ds.samples.push_back({std::string(row->text), it->second});
  }
  if (ds.samples.empty()) throw DatasetError(DatasetError::Kind::Empty, "dataset has no rows");
  return ds;
}

LabeledDataset load_dataset(const std::filesystem::path& path,
                            const std::vector<std::string>& label_list, Split split) {
  try {
    return parse_dataset(read_text_file(path), label_list, split);
  } catch (const DatasetError& e) {
    if (e.kind() == DatasetError::Kind::Io) throw;
    throw DatasetError(e.kind(), path.string() + ": " + e.what());
  }
}

std::vector<std::string> scan_labels(const std::filesystem::path& path) {
  const std::string content = read_text_file(path);
  std::vector<std::string> labels;
  std::size_t line_no = 0;
  for (std::string_view line : split_lines(content)) {
    ++line_no;
    const auto row = parse_row(line, line_no);
    if (!row) continue;
    if (std::find(labels.begin(), labels.end(), row->label) == labels.end())
      labels.emplace_back(row->label);
  }
  if (labels.empty()) throw DatasetError(DatasetError::Kind::Empty, path.string() + ": dataset has no rows");
  return labels;
}

std::string format_dataset(const LabeledDataset& ds) {
  std::string out;
  for (const auto& s : ds.samples) {
    if (s.text.find_first_of("\t\n\r") != std::string::npos) {
      throw DatasetError(DatasetError::Kind::InvalidText,
                         "sample text contains a tab or newline: '" + s.text + "'");
    }
    if (s.label >= ds.label_names.size()) {
      throw DatasetError(DatasetError::Kind::UnknownLabel, "label index out of range");
    }
    out += s.text;
    out += '\t';
    out += ds.label_names[s.label];
    out += '\n';
  }
  return out;
}

void save_dataset(const std::filesystem::path& path, const LabeledDataset& ds) {
  atomic_write(path, format_dataset(ds));
}

void atomic_write(const std::filesystem::path& path, std::string_view bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot rename into " + path.string() + ": " + ec.message());
  }
}

std::string read_binary_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(CheckpointError::Kind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Synthetic data

SyntheticSplits generate_synthetic(const SynthSpec& spec) {
  const LabelTree& tree = spec.tree;
  if (tree.class_leaves.empty()) throw std::invalid_argument("synthetic spec: tree has no class leaves");
  if (spec.family_fraction < 0 || spec.leaf_fraction < 0 ||
      spec.family_fraction + spec.leaf_fraction > 1.0) {
    throw std::invalid_argument("synthetic spec: fractions must be nonnegative with p + q <= 1");
  }
  if (spec.tokens_per_sample == 0 || spec.noise_vocab == 0 || spec.family_pool == 0 ||
      spec.leaf_pool == 0 || spec.samples_per_class == 0) {
    throw std::invalid_argument("synthetic spec: counts must be positive");
  }

  const auto k = static_cast<double>(spec.tokens_per_sample);
  const auto n_family = static_cast<std::size_t>(std::floor(spec.family_fraction * k));
  const auto n_leaf = static_cast<std::size_t>(std::floor(spec.leaf_fraction * k));
  const std::size_t n_noise = spec.tokens_per_sample - n_family - n_leaf;

  // Family of a class = its parent node, or the class node itself for roots.
  const auto parents = tree.parents();
  std::map<NodeId, std::size_t> family_index;
  std::vector<std::size_t> family_of(tree.num_classes());
  for (std::size_t c = 0; c < tree.num_classes(); ++c) {
    const NodeId node = tree.class_leaves[c];
    const NodeId fam = parents[node].value_or(node);
    family_of[c] = family_index.emplace(fam, family_index.size()).first->second;
  }

  auto rng = make_rng(spec.seed, RngStream::Synthetic);
  std::uniform_int_distribution<std::size_t> pick_family(0, spec.family_pool - 1);
  std::uniform_int_distribution<std::size_t> pick_leaf(0, spec.leaf_pool - 1);
  std::uniform_int_distribution<std::size_t> pick_noise(0, spec.noise_vocab - 1);

  SyntheticSplits out;
  for (LabeledDataset* ds : {&out.train, &out.dev, &out.test}) ds->label_names = tree.class_labels;
  out.train.split = Split::Train;
  out.dev.split = Split::Dev;
  out.test.split = Split::Test;

  const std::size_t n = spec.samples_per_class;
  const std::size_t n_train = n * 70 / 100;
  const std::size_t n_dev = n * 15 / 100;

  std::vector<std::string> words;
  for (std::size_t c = 0; c < tree.num_classes(); ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      words.clear();
      for (std::size_t j = 0; j < n_family; ++j)
        words.push_back("fam" + std::to_string(family_of[c]) + "x" + std::to_string(pick_family(rng)));
      for (std::size_t j = 0; j < n_leaf; ++j)
        words.push_back("cls" + std::to_string(c) + "x" + std::to_string(pick_leaf(rng)));
      for (std::size_t j = 0; j < n_noise; ++j) words.push_back("noise" + std::to_string(pick_noise(rng)));
      std::shuffle(words.begin(), words.end(), rng);
      std::string text;
      for (const auto& w : words) {
        if (!text.empty()) text += ' ';
        text += w;
      }
      LabeledDataset& target = i < n_train ? out.train : (i < n_train + n_dev ? out.dev : out.test);
      target.samples.push_back({std::move(text), c});
    }
  }
  for (LabeledDataset* ds : {&out.train, &out.dev, &out.test})
    std::shuffle(ds->samples.begin(), ds->samples.end(), rng);
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

class ByteWriter {
 public:
  void u32(std::uint32_t v) { put_le(v, 4); }
  void u64(std::uint64_t v) { put_le(v, 8); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    buf_.append(s);
  }
  void raw(std::string_view s) { buf_.append(s); }
  void doubles(std::span<const double> v) {
    for (double d : v) f64(d);
  }
  [[nodiscard]] const std::string& bytes() const { return buf_; }
  std::string take() { return std::move(buf_); }

 private:
  void put_le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  std::string buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  std::uint32_t u32() { return static_cast<std::uint32_t>(get_le(4)); }
  std::uint64_t u64() { return get_le(8); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string_view raw(std::size_t n) {
    need(n);
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::string str() { return std::string(raw(u32())); }
  void doubles(std::span<double> out) {
    for (double& d : out) d = f64();
  }
  [[nodiscard]] bool done() const { return pos_ == data_.size(); }
  [[nodiscard]] std::size_t remaining() const { return data_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) {
      throw CheckpointError(CheckpointError::Kind::Checksum, "checkpoint is truncated");
    }
  }
  std::uint64_t get_le(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::string_view data_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32_of(std::string_view a, std::string_view b) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(a.data()), static_cast<uInt>(a.size()));
  crc = crc32(crc, reinterpret_cast<const Bytef*>(b.data()), static_cast<uInt>(b.size()));
  return static_cast<std::uint32_t>(crc);
}

nlohmann::json tree_to_json(const LabelTree& t) {
  nlohmann::json edges = nlohmann::json::array();
  for (auto [p, c] : t.edges) edges.push_back({p, c});
  return {{"nodes", t.nodes},
          {"edges", edges},
          {"class_leaves", t.class_leaves},
          {"class_labels", t.class_labels},
          {"mode", to_string(t.mode)}};
}

LabelTree tree_from_json(const nlohmann::json& j) {
  LabelTree t;
  t.nodes = j.at("nodes").get<std::vector<std::string>>();
  for (const auto& e : j.at("edges")) t.edges.emplace_back(e.at(0).get<NodeId>(), e.at(1).get<NodeId>());
  t.class_leaves = j.at("class_leaves").get<std::vector<NodeId>>();
  t.class_labels = j.at("class_labels").get<std::vector<std::string>>();
  t.mode = parse_hierarchy_mode(j.at("mode").get<std::string>());
  return t;
}

void write_matrix(ByteWriter& w, const Matrix& m) {
  w.u64(m.rows);
  w.u64(m.cols);
  w.doubles(m.data);
}

Matrix read_matrix(ByteReader& r) {
  const std::uint64_t rows = r.u64();
  const std::uint64_t cols = r.u64();
  if (cols != 0 && rows > r.remaining() / 8 / cols) {
    throw CheckpointError(CheckpointError::Kind::Format, "matrix shape exceeds section size");
  }
  Matrix m(rows, cols);
  r.doubles(m.data);
  return m;
}

Vec read_vec(ByteReader& r) {
  const std::uint64_t n = r.u64();
  if (n > r.remaining() / 8) throw CheckpointError(CheckpointError::Kind::Format, "vector length exceeds section size");
  Vec v(n);
  r.doubles(v);
  return v;
}

void write_vec(ByteWriter& w, std::span<const double> v) {
  w.u64(v.size());
  w.doubles(v);
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  std::vector<std::pair<std::string, std::string>> sections;

  nlohmann::json meta{{"stage", to_string(ckpt.stage)},
                      {"seed", ckpt.seed},
                      {"config", ckpt.config},
                      {"class_labels", ckpt.class_labels}};
  sections.emplace_back("meta", meta.dump());
  if (ckpt.tree) sections.emplace_back("tree", tree_to_json(*ckpt.tree).dump());
  if (ckpt.label_embeddings) {
    ByteWriter w;
    const auto& e = *ckpt.label_embeddings;
    w.u64(e.size());
    w.u64(e.dim);
    for (std::size_t i = 0; i < e.size(); ++i) {
      w.str(e.names[i]);
      w.doubles(e.points[i].coords());
    }
    sections.emplace_back("label_embeddings", w.take());
  }
  if (ckpt.vocab) {
    ByteWriter w;
    w.u64(ckpt.vocab->size());
    for (const auto& t : ckpt.vocab->tokens()) w.str(t);
    sections.emplace_back("vocab", w.take());
  }
  if (ckpt.encoder) {
    ByteWriter w;
    write_matrix(w, ckpt.encoder->embedding);
    write_matrix(w, ckpt.encoder->w1);
    write_vec(w, ckpt.encoder->b1);
    sections.emplace_back("encoder", w.take());
  }
  if (ckpt.head) {
    ByteWriter w;
    write_matrix(w, ckpt.head->wc);
    write_vec(w, ckpt.head->bc);
    write_matrix(w, ckpt.head->wp);
    write_vec(w, ckpt.head->bp);
    sections.emplace_back("head", w.take());
  }

  ByteWriter out;
  out.raw("HYPC");
  out.u32(Checkpoint::kVersion);
  out.u32(static_cast<std::uint32_t>(sections.size()));
  for (const auto& [name, payload] : sections) {
    out.str(name);
    out.u64(payload.size());
    out.raw(payload);
    out.u32(crc32_of(name, payload));
  }
  return out.take();
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
  if (bytes.size() >= 4 && bytes.substr(0, 4) != "HYPC") {
    throw CheckpointError(CheckpointError::Kind::Format, "not a checkpoint (bad magic)");
  }
  ByteReader r(bytes);
  r.raw(4);
  const std::uint32_t version = r.u32();
  if (version != Checkpoint::kVersion) {
    throw CheckpointError(CheckpointError::Kind::Version,
                          "unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint32_t count = r.u32();
  std::map<std::string, std::string_view> sections;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.str();
    const std::uint64_t len = r.u64();
    if (len > r.remaining()) throw CheckpointError(CheckpointError::Kind::Checksum, "checkpoint is truncated");
    const std::string_view payload = r.raw(static_cast<std::size_t>(len));
    const std::uint32_t crc = r.u32();
    if (crc != crc32_of(name, payload)) {
      throw CheckpointError(CheckpointError::Kind::Checksum, "checksum mismatch in section '" + name + "'");
    }
    sections.emplace(std::move(name), payload);
  }
  if (!r.done()) throw CheckpointError(CheckpointError::Kind::Format, "trailing bytes after last section");

  auto section = [&](const std::string& name) -> std::optional<std::string_view> {
    auto it = sections.find(name);
    if (it == sections.end()) return std::nullopt;
    return it->second;
  };

  Checkpoint ckpt;
  try {
    const auto meta_bytes = section("meta");
    if (!meta_bytes) throw CheckpointError(CheckpointError::Kind::Format, "missing meta section");
    const auto meta = nlohmann::json::parse(*meta_bytes);
    const auto stage = meta.at("stage").get<std::string>();
    if (stage == "labels") {
      ckpt.stage = Stage::Labels;
    } else if (stage == "classifier") {
      ckpt.stage = Stage::Classifier;
    } else {
      throw CheckpointError(CheckpointError::Kind::Format, "unknown stage '" + stage + "'");
    }
    ckpt.seed = meta.at("seed").get<std::uint64_t>();
    ckpt.config = meta.at("config");
    ckpt.class_labels = meta.at("class_labels").get<std::vector<std::string>>();
    if (auto t = section("tree")) ckpt.tree = tree_from_json(nlohmann::json::parse(*t));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(CheckpointError::Kind::Format, std::string("bad JSON section: ") + e.what());
  }

  if (auto s = section("label_embeddings")) {
    ByteReader br(*s);
    LabelEmbeddingSet e;
    const std::uint64_t n = br.u64();
    e.dim = br.u64();
    for (std::uint64_t i = 0; i < n; ++i) {
      e.names.push_back(br.str());
      if (e.dim > br.remaining() / 8) throw CheckpointError(CheckpointError::Kind::Format, "bad embedding section");
      Vec coords(e.dim);
      br.doubles(coords);
      e.points.emplace_back(std::move(coords));
    }
    ckpt.label_embeddings = std::move(e);
  }
  if (auto s = section("vocab")) {
    ByteReader br(*s);
    const std::uint64_t n = br.u64();
    std::vector<std::string> tokens;
    for (std::uint64_t i = 0; i < n; ++i) tokens.push_back(br.str());
    try {
      ckpt.vocab = Vocabulary::from_tokens(std::move(tokens));
    } catch (const std::invalid_argument& e) {
      throw CheckpointError(CheckpointError::Kind::Format, e.what());
    }
  }
  if (auto s = section("encoder")) {
    ByteReader br(*s);
    EncoderModel m;
    m.embedding = read_matrix(br);
    m.w1 = read_matrix(br);
    m.b1 = read_vec(br);
    ckpt.encoder = std::move(m);
  }
  if (auto s = section("head")) {
    ByteReader br(*s);
    ClassifierHead h;
    h.wc = read_matrix(br);
    h.bc = read_vec(br);
    h.wp = read_matrix(br);
    h.bp = read_vec(br);
    ckpt.head = std::move(h);
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  try {
    atomic_write(path, serialize_checkpoint(ckpt));
  } catch (const std::runtime_error& e) {
    throw CheckpointError(CheckpointError::Kind::Io, e.what());
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const std::string bytes = read_binary_file(path);
  try {
    return deserialize_checkpoint(bytes);
  } catch (const CheckpointError& e) {
    throw CheckpointError(e.kind(), path.string() + ": " + e.what());
  }
}

void require_stage(const Checkpoint& ckpt, Stage expected) {
  if (ckpt.stage != expected) {
    throw CheckpointError(CheckpointError::Kind::Stage,
                          "expected a stage=" + std::string(to_string(expected)) +
                              " checkpoint, got stage=" + std::string(to_string(ckpt.stage)));
  }
}

}  // namespace hyperclass

#include "sps/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace sps {

using nlohmann::json;

std::uint64_t fnv1a(std::string_view data, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t hash_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file for hashing: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return fnv1a(ss.str());
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// Cleaned corpus

namespace {

json template_to_json(const ConstituentVector& t) {
  return json{{"select_type", to_string(t.select_type)},
              {"agg", to_code(t.aggregator)},
              {"eq", t.count_eq},
              {"gt", t.count_gt},
              {"lt", t.count_lt}};
}

ConstituentVector template_from_json(const json& j) {
  ConstituentVector t;
  t.select_type = column_type_from_string(j.at("select_type").get<std::string>());
  t.aggregator = aggregator_from_code(j.at("agg").get<int>());
  t.count_eq = j.at("eq").get<int>();
  t.count_gt = j.at("gt").get<int>();
  t.count_lt = j.at("lt").get<int>();
  return t;
}

}  // namespace

void save_questions(const std::filesystem::path& path,
                    const std::vector<Question>& questions) {
  std::string out;
  for (const auto& q : questions) {
    json j{{"id", q.id},
           {"tokens", q.tokens},
           {"template", template_to_json(q.tmpl)},
           {"split", to_string(q.split)}};
    out += j.dump();
    out += '\n';
  }
  atomic_write(path, out);
}

std::vector<Question> load_questions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path.string());
  std::vector<Question> questions;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      json j = json::parse(line);
      Question q;
      q.id = j.at("id").get<std::string>();
      q.tokens = j.at("tokens").get<std::vector<std::string>>();
      q.tmpl = template_from_json(j.at("template"));
      q.split = split_from_string(j.at("split").get<std::string>());
      questions.push_back(std::move(q));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": malformed question record: " + e.what());
    }
  }
  return questions;
}

std::string cleaning_report_json(const CleaningReport& r) {
  json j{{"input_count", r.input_count},
         {"retained", r.retained},
         {"rejected", {{"too_short", r.rejected_too_short},
                       {"low_alphabetic", r.rejected_low_alphabetic}}},
         {"retyped", {{"to_number", r.retyped_to_number}, {"to_date", r.retyped_to_date}}},
         {"retained_per_split", {{"train", r.retained_per_split[0]},
                                 {"dev", r.retained_per_split[1]},
                                 {"test", r.retained_per_split[2]}}}};
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Binary container helpers (explicit little-endian encoding)

namespace {

class BinaryWriter {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u64(s.size());
    buf_.append(s);
  }
  void magic(std::string_view m) { buf_.append(m); }
  const std::string& data() const { return buf_; }

 private:
  std::string buf_;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::string data) : data_(std::move(data)) {}

  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(byte()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(byte()) << (8 * i);
    return v;
  }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const auto n = u64();
    if (pos_ + n > data_.size()) throw std::runtime_error("truncated model file");
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void expect_magic(std::string_view m) {
    if (data_.compare(pos_, m.size(), m) != 0) {
      throw std::runtime_error("bad model file magic");
    }
    pos_ += m.size();
  }

 private:
  unsigned char byte() {
    if (pos_ >= data_.size()) throw std::runtime_error("truncated model file");
    return static_cast<unsigned char>(data_[pos_++]);
  }
  std::string data_;
  std::size_t pos_ = 0;
};

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_matrix(BinaryWriter& w, const Eigen::MatrixXd& m) {
  w.u64(static_cast<std::uint64_t>(m.rows()));
  w.u64(static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) w.f64(m(r, c));
  }
}

Eigen::MatrixXd read_matrix(BinaryReader& r) {
  const auto rows = static_cast<Eigen::Index>(r.u64());
  const auto cols = static_cast<Eigen::Index>(r.u64());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index rr = 0; rr < rows; ++rr) m(rr, c) = r.f64();
  }
  return m;
}

void write_vector(BinaryWriter& w, const Eigen::VectorXd& v) {
  w.u64(static_cast<std::uint64_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) w.f64(v[i]);
}

Eigen::VectorXd read_vector(BinaryReader& r) {
  const auto n = static_cast<Eigen::Index>(r.u64());
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = r.f64();
  return v;
}

constexpr std::string_view kLexicalMagic = "SPSLEX";
constexpr std::string_view kCheckpointMagic = "SPSNET";
constexpr std::uint32_t kFormatVersion = 1;

}  // namespace

void save_lexical_model(const std::filesystem::path& path, const LexicalModelFile& m) {
  BinaryWriter w;
  w.magic(kLexicalMagic);
  w.u32(kFormatVersion);
  w.i64(m.config.alpha);
  w.i64(m.config.k);
  w.i64(m.config.max_iterations);
  w.f64(m.config.convergence_epsilon);
  w.u64(m.config.seed);

  w.u64(m.vocab.size());
  for (const auto& word : m.vocab.words()) w.str(word);

  w.i64(m.clusters.k);
  w.u64(m.clusters.dim);
  w.u64(m.clusters.iterations);
  w.f64(m.clusters.inertia);
  w.u64(m.clusters.centroids.size());
  for (const auto& c : m.clusters.centroids) {
    w.u64(c.size());
    for (double v : c) w.f64(v);
  }
  w.u64(m.clusters.members.size());
  for (const auto& ids : m.clusters.members) {
    w.u64(ids.size());
    for (const auto& id : ids) w.str(id);
  }
  atomic_write(path, w.data());
}

LexicalModelFile load_lexical_model(const std::filesystem::path& path) {
  BinaryReader r(slurp(path));
  r.expect_magic(kLexicalMagic);
  const auto version = r.u32();
  if (version != kFormatVersion) {
    throw std::runtime_error("unsupported lexical model version " + std::to_string(version));
  }
  LexicalModelFile m;
  m.config.alpha = static_cast<int>(r.i64());
  m.config.k = static_cast<int>(r.i64());
  m.config.max_iterations = static_cast<int>(r.i64());
  m.config.convergence_epsilon = r.f64();
  m.config.seed = r.u64();

  const auto vocab_size = r.u64();
  std::vector<std::string> words;
  words.reserve(vocab_size);
  for (std::uint64_t i = 0; i < vocab_size; ++i) words.push_back(r.str());
  m.vocab = Vocabulary(std::move(words));

  m.clusters.k = static_cast<int>(r.i64());
  m.clusters.dim = r.u64();
  m.clusters.iterations = r.u64();
  m.clusters.inertia = r.f64();
  const auto ncent = r.u64();
  m.clusters.centroids.resize(ncent);
  for (auto& c : m.clusters.centroids) {
    c.resize(r.u64());
    for (double& v : c) v = r.f64();
  }
  const auto nclusters = r.u64();
  m.clusters.members.resize(nclusters);
  for (std::uint64_t c = 0; c < nclusters; ++c) {
    const auto n = r.u64();
    auto& ids = m.clusters.members[c];
    ids.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
      ids.push_back(r.str());
      m.clusters.assignment[ids.back()] = static_cast<int>(c);
    }
  }
  return m;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  BinaryWriter w;
  w.magic(kCheckpointMagic);
  w.u32(kFormatVersion);
  w.i64(ckpt.config.epochs);
  w.i64(ckpt.config.batch_size);
  w.f64(ckpt.config.learning_rate);
  w.f64(ckpt.config.clip_norm);
  w.u64(ckpt.config.seed);
  w.i64(ckpt.config.max_sequence);
  w.u64(ckpt.config.pairs_per_epoch);
  w.i64(ckpt.config.hidden_size);
  w.f64(ckpt.config.adam_beta1);
  w.f64(ckpt.config.adam_beta2);
  w.f64(ckpt.config.adam_epsilon);

  w.u64(ckpt.config_hash);
  w.u64(ckpt.vocab_hash);
  w.u64(ckpt.embedding_hash);
  w.i64(ckpt.epochs_trained);
  w.f64(ckpt.final_loss);

  write_matrix(w, ckpt.lstm.w_input);
  write_matrix(w, ckpt.lstm.w_forget);
  write_matrix(w, ckpt.lstm.w_output);
  write_matrix(w, ckpt.lstm.w_cell);
  write_matrix(w, ckpt.lstm.u_input);
  write_matrix(w, ckpt.lstm.u_forget);
  write_matrix(w, ckpt.lstm.u_output);
  write_matrix(w, ckpt.lstm.u_cell);
  write_vector(w, ckpt.lstm.b_input);
  write_vector(w, ckpt.lstm.b_forget);
  write_vector(w, ckpt.lstm.b_output);
  write_vector(w, ckpt.lstm.b_cell);
  write_vector(w, ckpt.head.weight);
  w.f64(ckpt.head.bias);

  w.u64(ckpt.epoch_log.size());
  for (const auto& e : ckpt.epoch_log) {
    w.i64(e.epoch);
    w.f64(e.mean_loss);
  }
  atomic_write(path, w.data());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  BinaryReader r(slurp(path));
  r.expect_magic(kCheckpointMagic);
  const auto version = r.u32();
  if (version != kFormatVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.config.epochs = static_cast<int>(r.i64());
  ckpt.config.batch_size = static_cast<int>(r.i64());
  ckpt.config.learning_rate = r.f64();
  ckpt.config.clip_norm = r.f64();
  ckpt.config.seed = r.u64();
  ckpt.config.max_sequence = static_cast<int>(r.i64());
  ckpt.config.pairs_per_epoch = r.u64();
  ckpt.config.hidden_size = static_cast<int>(r.i64());
  ckpt.config.adam_beta1 = r.f64();
  ckpt.config.adam_beta2 = r.f64();
  ckpt.config.adam_epsilon = r.f64();

  ckpt.config_hash = r.u64();
  ckpt.vocab_hash = r.u64();
  ckpt.embedding_hash = r.u64();
  ckpt.epochs_trained = static_cast<int>(r.i64());
  ckpt.final_loss = r.f64();

  ckpt.lstm.w_input = read_matrix(r);
  ckpt.lstm.w_forget = read_matrix(r);
  ckpt.lstm.w_output = read_matrix(r);
  ckpt.lstm.w_cell = read_matrix(r);
  ckpt.lstm.u_input = read_matrix(r);
  ckpt.lstm.u_forget = read_matrix(r);
  ckpt.lstm.u_output = read_matrix(r);
  ckpt.lstm.u_cell = read_matrix(r);
  ckpt.lstm.b_input = read_vector(r);
  ckpt.lstm.b_forget = read_vector(r);
  ckpt.lstm.b_output = read_vector(r);
  ckpt.lstm.b_cell = read_vector(r);
  ckpt.head.weight = read_vector(r);
  ckpt.head.bias = r.f64();

  const auto nlog = r.u64();
  ckpt.epoch_log.resize(nlog);
  for (auto& e : ckpt.epoch_log) {
    e.epoch = static_cast<int>(r.i64());
    e.mean_loss = r.f64();
  }
  return ckpt;
}

SiameseModel to_model(const Checkpoint& ckpt,
                      std::shared_ptr<const EmbeddingTable> embeddings) {
  SiameseModel model;
  model.embeddings = std::move(embeddings);
  model.lstm = ckpt.lstm;
  model.head = ckpt.head;
  model.max_sequence = ckpt.config.max_sequence;
  model.config_hash = ckpt.config_hash;
  model.vocab_hash = ckpt.vocab_hash;
  model.epochs_trained = ckpt.epochs_trained;
  model.final_loss = ckpt.final_loss;
  return model;
}

}  // namespace sps

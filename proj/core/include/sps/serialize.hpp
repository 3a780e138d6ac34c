#ifndef SPS_SERIALIZE_HPP
#define SPS_SERIALIZE_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "sps/corpus.hpp"
#include "sps/encoder.hpp"
#include "sps/lexical.hpp"

namespace sps {

// FNV-1a 64-bit; the project-wide content hash for manifests and metadata.
std::uint64_t fnv1a(std::string_view data,
                    std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t hash_file(const std::filesystem::path& path);
std::string hash_hex(std::uint64_t h);

/// Writes via a temp file in the same directory and renames on success, so
/// interrupted runs never leave a partial artifact behind.
void atomic_write(const std::filesystem::path& path, const std::string& content);

// --- cleaned corpus (line-delimited JSON) ---

void save_questions(const std::filesystem::path& path,
                    const std::vector<Question>& questions);
std::vector<Question> load_questions(const std::filesystem::path& path);

std::string cleaning_report_json(const CleaningReport& report);

// --- lexical model file (versioned binary, little-endian f64 centroids) ---

struct LexicalModelFile {
  Vocabulary vocab;
  ClusterModel clusters;
  LexicalConfig config;
};

void save_lexical_model(const std::filesystem::path& path, const LexicalModelFile& m);
LexicalModelFile load_lexical_model(const std::filesystem::path& path);

// --- Siamese checkpoint (versioned binary, little-endian f64 parameters) ---

struct Checkpoint {
  LstmParams lstm;
  RegressionHead head;
  TrainConfig config;
  std::uint64_t config_hash = 0;
  std::uint64_t vocab_hash = 0;
  std::uint64_t embedding_hash = 0;
  int epochs_trained = 0;
  double final_loss = 0.0;
  std::vector<EpochLog> epoch_log;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Attaches an embedding table to checkpoint parameters for inference.
SiameseModel to_model(const Checkpoint& ckpt,
                      std::shared_ptr<const EmbeddingTable> embeddings);

}  // namespace sps

#endif

#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "respscreen/features.hpp"

namespace respscreen::embeddings {

inline constexpr std::size_t kFrameDim = 128;
inline constexpr std::size_t kPooledDim = 2 * kFrameDim;

/// Frame-level embeddings of one recording, one row per 0.96 s sub-sample.
struct EmbeddingFrames {
  std::string sample_id;
  Eigen::MatrixXd frames;  // [n_sub x 128]
};

/// Per-dimension mean (0..127) followed by population std (128..255).
struct PooledEmbedding {
  std::array<double, kPooledDim> values{};
  static const std::vector<std::string>& names();
};

enum class Variant { kA, kB, kC };

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view s);
std::size_t combined_dim(Variant v);

struct CombinedVector {
  Variant variant = Variant::kC;
  std::vector<double> values;
  std::vector<std::string> names;
};

using EmbeddingTable = std::map<std::string, EmbeddingFrames, std::less<>>;

/// Reads CSV with columns sample_id, frame_index, e0..e127. Rows are grouped by
/// sample_id and ordered by frame_index. Throws MalformedEmbeddingFile or
/// DimensionMismatch.
EmbeddingTable parse_embeddings(std::string_view csv_text);
EmbeddingTable load_embeddings(const std::filesystem::path& path);

std::string format_embeddings(const EmbeddingTable& table);

PooledEmbedding pool(const EmbeddingFrames& frames);

/// A: embedding + [duration, tempo, onsets, period] (260)
/// B: embedding + handcrafted without the delta blocks (447)
/// C: embedding + full handcrafted vector (733)
CombinedVector combine(const features::HandcraftedVector& hand, const PooledEmbedding& emb, Variant variant);

}  // namespace respscreen::embeddings

#include "respscreen/embeddings.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

#include "respscreen/errors.hpp"
#include "respscreen/io.hpp"

namespace respscreen::embeddings {

namespace {

double parse_number(const std::string& s, std::size_t row) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw MalformedEmbeddingFile("row " + std::to_string(row) + ": bad number '" + s + "'");
  }
  return v;
}

}  // namespace

const std::vector<std::string>& PooledEmbedding::names() {
  static const std::vector<std::string> kNames = [] {
    std::vector<std::string> n;
    for (const char* stat : {"mean", "std"}) {
      for (std::size_t i = 0; i < kFrameDim; ++i) n.push_back(std::string("vgg.") + stat + std::to_string(i));
    }
    return n;
  }();
  return kNames;
}

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::kA: return "A";
    case Variant::kB: return "B";
    case Variant::kC: return "C";
  }
  return "?";
}

Variant parse_variant(std::string_view s) {
  if (s == "A" || s == "a") return Variant::kA;
  if (s == "B" || s == "b") return Variant::kB;
  if (s == "C" || s == "c") return Variant::kC;
  throw std::invalid_argument("unknown combination variant '" + std::string(s) + "'");
}

std::size_t combined_dim(Variant v) {
  switch (v) {
    case Variant::kA: return kPooledDim + 4;
    case Variant::kB: return kPooledDim + features::HandcraftedVector::kStaticDim;
    case Variant::kC: return kPooledDim + features::HandcraftedVector::kDim;
  }
  return 0;
}

EmbeddingTable parse_embeddings(std::string_view csv_text) {
  CsvTable csv;
  try {
    csv = parse_csv(csv_text);
  } catch (const std::invalid_argument& e) {
    throw MalformedEmbeddingFile(e.what());
  }
  if (csv.header.size() < 2 || csv.header[0] != "sample_id" || csv.header[1] != "frame_index") {
    throw MalformedEmbeddingFile("header must start with sample_id,frame_index");
  }
  if (csv.header.size() != 2 + kFrameDim) {
    throw DimensionMismatch("expected " + std::to_string(kFrameDim) + " embedding columns, found " +
                            std::to_string(csv.header.size() - 2));
  }
  for (std::size_t i = 0; i < kFrameDim; ++i) {
    if (csv.header[2 + i] != "e" + std::to_string(i)) {
      throw DimensionMismatch("column " + std::to_string(2 + i) + " is '" + csv.header[2 + i] + "', expected e" +
                              std::to_string(i));
    }
  }

  struct Pending {
    std::vector<std::pair<long, std::size_t>> order;  // frame_index, row
  };
  std::map<std::string, Pending, std::less<>> grouped;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    if (row[0].empty()) throw MalformedEmbeddingFile("row " + std::to_string(r + 2) + ": empty sample_id");
    long idx = 0;
    const auto* end = row[1].data() + row[1].size();
    auto [ptr, ec] = std::from_chars(row[1].data(), end, idx);
    if (ec != std::errc() || ptr != end || idx < 0) {
      throw MalformedEmbeddingFile("row " + std::to_string(r + 2) + ": bad frame_index '" + row[1] + "'");
    }
    grouped[row[0]].order.emplace_back(idx, r);
  }

  EmbeddingTable table;
  for (auto& [id, pending] : grouped) {
    std::sort(pending.order.begin(), pending.order.end());
    for (std::size_t i = 1; i < pending.order.size(); ++i) {
      if (pending.order[i].first == pending.order[i - 1].first) {
        throw MalformedEmbeddingFile("sample " + id + " repeats frame_index " + std::to_string(pending.order[i].first));
      }
    }
    EmbeddingFrames ef;
    ef.sample_id = id;
    ef.frames.resize(static_cast<Eigen::Index>(pending.order.size()), static_cast<Eigen::Index>(kFrameDim));
    for (std::size_t i = 0; i < pending.order.size(); ++i) {
      const std::size_t r = pending.order[i].second;
      for (std::size_t d = 0; d < kFrameDim; ++d) {
        ef.frames(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = parse_number(csv.rows[r][2 + d], r + 2);
      }
    }
    table.emplace(id, std::move(ef));
  }
  return table;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
  return parse_embeddings(read_file_text(path));
}

std::string format_embeddings(const EmbeddingTable& table) {
  CsvRow header = {"sample_id", "frame_index"};
  for (std::size_t i = 0; i < kFrameDim; ++i) header.push_back("e" + std::to_string(i));
  std::string out = csv_line(header);
  for (const auto& [id, ef] : table) {
    for (Eigen::Index r = 0; r < ef.frames.rows(); ++r) {
      CsvRow row = {id, std::to_string(r)};
      for (Eigen::Index d = 0; d < ef.frames.cols(); ++d) row.push_back(format_double(ef.frames(r, d), 17));
      out += csv_line(row);
    }
  }
  return out;
}

PooledEmbedding pool(const EmbeddingFrames& frames) {
  const Eigen::Index n = frames.frames.rows();
  if (n < 1) throw std::invalid_argument("pool: sample " + frames.sample_id + " has no frames");
  if (frames.frames.cols() != static_cast<Eigen::Index>(kFrameDim)) {
    throw DimensionMismatch("pool: frames must have 128 columns");
  }
  PooledEmbedding out;
  for (Eigen::Index d = 0; d < frames.frames.cols(); ++d) {
    const auto col = frames.frames.col(d);
    const double mean = col.mean();
    const double var = (col.array() - mean).square().mean();
    out.values[static_cast<std::size_t>(d)] = mean;
    out.values[kFrameDim + static_cast<std::size_t>(d)] = std::sqrt(var);
  }
  return out;
}

CombinedVector combine(const features::HandcraftedVector& hand, const PooledEmbedding& emb, Variant variant) {
  CombinedVector out;
  out.variant = variant;
  out.values.assign(emb.values.begin(), emb.values.end());
  out.names = PooledEmbedding::names();

  const auto flat = hand.flat();
  const auto& hc_names = features::HandcraftedVector::names();
  auto take = [&](std::size_t i) {
    out.values.push_back(flat[i]);
    out.names.push_back("hc." + hc_names[i]);
  };

  switch (variant) {
    case Variant::kA:
      // duration, tempo, onsets, period
      for (std::size_t i : {0u, 2u, 1u, 3u}) take(i);
      break;
    case Variant::kB:
      for (std::size_t i = 0; i < features::HandcraftedVector::kStaticDim; ++i) take(i);
      break;
    case Variant::kC:
      for (std::size_t i = 0; i < features::HandcraftedVector::kDim; ++i) take(i);
      break;
  }
  return out;
}

}  // namespace respscreen::embeddings

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace qclar {

// Fixed-dimension real vector. Every query, candidate and document is one of these.
class Embedding {
 public:
  Embedding() = default;
  // Throws ValidationError on an empty vector or a non-finite component.
  explicit Embedding(std::vector<double> values);

  std::size_t dim() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  bool operator==(const Embedding&) const = default;

 private:
  std::vector<double> values_;
};

// Inner product. Throws ValidationError naming both dims on mismatch.
double dot(const Embedding& a, const Embedding& b);

// Unit-norm copy; the zero vector is rejected.
Embedding normalize(const Embedding& e);

// Rounds each component to the nearest 32-bit float, i.e. the on-disk precision.
Embedding round_to_f32(const Embedding& e);

struct ScoredDoc {
  std::string doc_id;
  double score = 0.0;

  bool operator==(const ScoredDoc&) const = default;
};

// Documents keyed by unique id, all with the same dimension.
// Built once then shared read-only between simulation workers.
class DocumentCollection {
 public:
  explicit DocumentCollection(std::size_t dim);

  // Throws ValidationError on a duplicate id or a dimension mismatch.
  void add(std::string doc_id, Embedding embedding);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  const std::string& id(std::size_t i) const { return ids_[i]; }
  const Embedding& embedding(std::size_t i) const { return embeddings_[i]; }
  std::optional<std::size_t> find(std::string_view doc_id) const;

 private:
  std::size_t dim_;
  std::vector<std::string> ids_;
  std::vector<Embedding> embeddings_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Exact top-k by descending dot product, ties by ascending doc id.
// Returns min(k, |coll|) entries; an empty collection yields an empty result.
std::vector<ScoredDoc> retrieve_top_k(const Embedding& query, const DocumentCollection& coll,
                                      std::size_t k);

// Binary "EMBV1\n" format or JSON lines ({"id": ..., "vec": [...]}), detected by magic bytes.
DocumentCollection load_collection(const std::filesystem::path& path);

// Always writes the binary format; values are narrowed to f32.
void save_collection(const DocumentCollection& coll, const std::filesystem::path& path);

inline constexpr std::string_view kEmbeddingMagic = "EMBV1\n";

}  // namespace qclar

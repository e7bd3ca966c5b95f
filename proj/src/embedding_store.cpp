#include "qclar/embedding_store.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "qclar/binary_io.hpp"
#include "qclar/errors.hpp"

namespace qclar {

Embedding::Embedding(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) {
    throw ValidationError("embedding must have a positive dimension");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw ValidationError("embedding component " + std::to_string(i) + " is not finite");
    }
  }
}

double dot(const Embedding& a, const Embedding& b) {
  if (a.dim() != b.dim()) {
    throw ValidationError("dimension mismatch: " + std::to_string(a.dim()) + " vs " +
                          std::to_string(b.dim()));
  }
  const auto av = a.values();
  const auto bv = b.values();
  return std::inner_product(av.begin(), av.end(), bv.begin(), 0.0);
}

Embedding normalize(const Embedding& e) {
  const double norm = std::sqrt(dot(e, e));
  if (norm == 0.0) {
    throw ValidationError("cannot normalize the zero vector");
  }
  std::vector<double> out(e.values().begin(), e.values().end());
  for (double& v : out) {
    v /= norm;
  }
  return Embedding(std::move(out));
}

Embedding round_to_f32(const Embedding& e) {
  std::vector<double> out(e.dim());
  std::transform(e.values().begin(), e.values().end(), out.begin(),
                 [](double v) { return static_cast<double>(static_cast<float>(v)); });
  return Embedding(std::move(out));
}

DocumentCollection::DocumentCollection(std::size_t dim) : dim_(dim) {
  if (dim_ == 0) {
    throw ValidationError("collection dimension must be positive");
  }
}

void DocumentCollection::add(std::string doc_id, Embedding embedding) {
  if (embedding.dim() != dim_) {
    throw ValidationError("document '" + doc_id + "' has dim " + std::to_string(embedding.dim()) +
                          ", collection dim is " + std::to_string(dim_));
  }
  if (index_.contains(doc_id)) {
    throw ValidationError("duplicate document id '" + doc_id + "'");
  }
  index_.emplace(doc_id, ids_.size());
  ids_.push_back(std::move(doc_id));
  embeddings_.push_back(std::move(embedding));
}

std::optional<std::size_t> DocumentCollection::find(std::string_view doc_id) const {
  const auto it = index_.find(std::string(doc_id));
  if (it == index_.end()) {
    return std::nullopt;
  }
  return it->second;
}

std::vector<ScoredDoc> retrieve_top_k(const Embedding& query, const DocumentCollection& coll,
                                      std::size_t k) {
  if (k == 0) {
    throw ValidationError("retrieve_top_k requires k >= 1");
  }
  if (coll.empty()) {
    return {};
  }
  if (query.dim() != coll.dim()) {
    throw ValidationError("query dim " + std::to_string(query.dim()) + " vs collection dim " +
                          std::to_string(coll.dim()));
  }
  std::vector<double> scores(coll.size());
  for (std::size_t i = 0; i < coll.size(); ++i) {
    scores[i] = dot(query, coll.embedding(i));
  }
  std::vector<std::size_t> order(coll.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t n = std::min(k, coll.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (scores[a] != scores[b]) {
                        return scores[a] > scores[b];
                      }
                      return coll.id(a) < coll.id(b);
                    });
  std::vector<ScoredDoc> out;
  out.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    out.push_back({coll.id(order[r]), scores[order[r]]});
  }
  return out;
}

namespace {

DocumentCollection load_binary(std::istream& in) {
  const std::uint32_t dim = binio::read_u32(in, "header dim");
  const std::uint64_t count = binio::read_u64(in, "header count");
  if (dim == 0) {
    throw ValidationError("malformed header: dim must be positive");
  }
  DocumentCollection coll(dim);
  for (std::uint64_t r = 0; r < count; ++r) {
    const std::string where = "record " + std::to_string(r);
    const std::uint16_t id_len = binio::read_u16(in, where + " id length");
    std::string id = binio::read_bytes(in, id_len, where + " id");
    std::vector<double> values(dim);
    for (auto& v : values) {
      v = binio::read_f32(in, where + " ('" + id + "') values");
    }
    try {
      coll.add(id, Embedding(std::move(values)));
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what());
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw ValidationError("trailing bytes after " + std::to_string(count) + " records");
  }
  return coll;
}

DocumentCollection load_jsonl(std::istream& in) {
  std::optional<DocumentCollection> coll;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    const std::string where = "line " + std::to_string(line_no);
    try {
      const auto j = nlohmann::json::parse(line);
      auto id = j.at("id").get<std::string>();
      auto vec = j.at("vec").get<std::vector<double>>();
      if (!coll) {
        coll.emplace(vec.size());
      }
      coll->add(std::move(id), Embedding(std::move(vec)));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(where + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what());
    }
  }
  if (!coll) {
    throw ValidationError("JSON-lines embedding file has no records, dimension unknown");
  }
  return std::move(*coll);
}

}  // namespace

DocumentCollection load_collection(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open embedding file " + path.string());
  }
  if (binio::read_magic(in, kEmbeddingMagic)) {
    return load_binary(in);
  }
  in.clear();
  in.seekg(0);
  return load_jsonl(in);
}

void save_collection(const DocumentCollection& coll, const std::filesystem::path& path) {
  std::ostringstream buf(std::ios::binary);
  binio::write_magic(buf, kEmbeddingMagic);
  binio::write_u32(buf, static_cast<std::uint32_t>(coll.dim()));
  binio::write_u64(buf, coll.size());
  for (std::size_t i = 0; i < coll.size(); ++i) {
    const std::string& id = coll.id(i);
    if (id.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw ValidationError("document id too long for the embedding format: " + id.substr(0, 32));
    }
    binio::write_u16(buf, static_cast<std::uint16_t>(id.size()));
    binio::write_bytes(buf, id);
    for (const double v : coll.embedding(i).values()) {
      binio::write_f32(buf, static_cast<float>(v));
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot write embedding file " + path.string());
  }
  const std::string bytes = buf.str();
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw IoError("write failed for " + path.string());
  }
}

}  // namespace qclar

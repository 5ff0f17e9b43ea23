#include "clara/vector_index.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>

#include <nlohmann/json.hpp>

#include "clara/util.hpp"

namespace clara {

const char* to_string(SnippetSource source) {
  switch (source) {
    case SnippetSource::Pubmed: return "pubmed";
    case SnippetSource::Textbook: return "textbook";
    case SnippetSource::Wikipedia: return "wikipedia";
    case SnippetSource::Other: return "other";
  }
  return "other";
}

std::optional<SnippetSource> parse_snippet_source(std::string_view name) {
  std::string lower = ascii_lower(name);
  if (lower == "pubmed") return SnippetSource::Pubmed;
  if (lower == "textbook" || lower == "textbooks") return SnippetSource::Textbook;
  if (lower == "wikipedia") return SnippetSource::Wikipedia;
  if (lower == "other" || lower == "web") return SnippetSource::Other;
  return std::nullopt;
}

VectorIndex::VectorIndex(std::size_t dimension) : dimension_(dimension) {
  if (dimension == 0) throw DimensionMismatchError("index dimension must be positive");
}

void VectorIndex::add(Snippet snippet) {
  if (snippet.vector.size() != dimension_) {
    throw DimensionMismatchError("snippet '" + snippet.snippet_id + "' has dimension " +
                                 std::to_string(snippet.vector.size()) + ", index expects " +
                                 std::to_string(dimension_));
  }
  if (!ids_.insert(snippet.snippet_id).second) {
    throw ClaraError("duplicate snippet_id '" + snippet.snippet_id + "'");
  }
  snippets_.push_back(std::move(snippet));
}

std::vector<ScoredHit> VectorIndex::top_k(std::span<const double> query, std::size_t k) const {
  if (snippets_.empty()) throw EmptyIndexError("top_k on an empty index");
  std::vector<ScoredHit> hits;
  hits.reserve(snippets_.size());
  for (std::size_t i = 0; i < snippets_.size(); ++i) {
    hits.push_back({i, cosine_sim(query, snippets_[i].vector)});
  }
  std::sort(hits.begin(), hits.end(), [this](const ScoredHit& a, const ScoredHit& b) {
    if (a.score != b.score) return a.score > b.score;
    return snippets_[a.index].snippet_id < snippets_[b.index].snippet_id;
  });
  if (hits.size() > k) hits.resize(k);
  return hits;
}

namespace {

constexpr char kIndexMagic[5] = {'C', 'L', 'I', 'X', '1'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const std::string& in, std::size_t off) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(in[off + i])) << (8 * i);
  return v;
}

std::uint64_t get_u64(const std::string& in, std::size_t off) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(in[off + i])) << (8 * i);
  return v;
}

}  // namespace

void VectorIndex::save(const std::filesystem::path& path) const {
  std::string blob;
  blob.reserve(17 + snippets_.size() * dimension_ * 8);
  blob.append(kIndexMagic, sizeof(kIndexMagic));
  put_u32(blob, static_cast<std::uint32_t>(dimension_));
  put_u64(blob, static_cast<std::uint64_t>(snippets_.size()));
  for (const auto& s : snippets_) {
    for (double x : s.vector) {
      std::uint64_t bits;
      std::memcpy(&bits, &x, sizeof(bits));
      put_u64(blob, bits);
    }
  }
  write_file(path, blob);

  nlohmann::json meta;
  meta["index_version"] = 1;
  meta["dimension"] = dimension_;
  auto arr = nlohmann::json::array();
  for (const auto& s : snippets_) {
    arr.push_back({{"snippet_id", s.snippet_id},
                   {"doc_id", s.doc_id},
                   {"source", to_string(s.source)},
                   {"text", s.text}});
  }
  meta["snippets"] = std::move(arr);
  std::filesystem::path meta_path = path;
  meta_path += ".meta.json";
  write_file(meta_path, meta.dump(2) + "\n");
}

VectorIndex VectorIndex::load(const std::filesystem::path& path) {
  std::string blob = read_file(path);
  if (blob.size() < 17 || std::memcmp(blob.data(), kIndexMagic, sizeof(kIndexMagic)) != 0) {
    throw IoError("not a CLIX1 index file: " + path.string());
  }
  std::size_t dimension = get_u32(blob, 5);
  std::size_t count = get_u64(blob, 9);
  if (dimension == 0) throw IoError("index header declares zero dimension");
  std::size_t expected = 17 + count * dimension * 8;
  if (blob.size() != expected) {
    throw IoError("index file is " + std::to_string(blob.size()) + " bytes, header implies " +
                  std::to_string(expected));
  }

  std::filesystem::path meta_path = path;
  meta_path += ".meta.json";
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_file(meta_path));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("unparseable index sidecar " + meta_path.string() + ": " + e.what());
  }
  if (meta.value("index_version", 0) != 1) {
    throw VersionMismatchError("index sidecar version " +
                               std::to_string(meta.value("index_version", 0)) +
                               " is not supported");
  }
  const auto& snippets_meta = meta.at("snippets");
  if (snippets_meta.size() != count) {
    throw IoError("index sidecar lists " + std::to_string(snippets_meta.size()) +
                  " snippets, binary has " + std::to_string(count));
  }

  VectorIndex index(dimension);
  std::size_t off = 17;
  for (std::size_t i = 0; i < count; ++i) {
    Snippet s;
    const auto& mj = snippets_meta.at(i);
    s.snippet_id = mj.at("snippet_id").get<std::string>();
    s.doc_id = mj.at("doc_id").get<std::string>();
    auto source = parse_snippet_source(mj.at("source").get<std::string>());
    s.source = source.value_or(SnippetSource::Other);
    s.text = mj.at("text").get<std::string>();
    s.vector.resize(dimension);
    for (std::size_t d = 0; d < dimension; ++d, off += 8) {
      std::uint64_t bits = get_u64(blob, off);
      std::memcpy(&s.vector[d], &bits, sizeof(double));
    }
    index.add(std::move(s));
  }
  return index;
}

std::vector<std::string> chunk_document(std::string_view doc_text, std::size_t snippet_length,
                                        std::size_t overlap) {
  if (snippet_length == 0 || overlap >= snippet_length) {
    throw ClaraError("chunk_document requires snippet_length > overlap >= 0");
  }
  std::vector<std::string_view> tokens;
  std::size_t pos = 0;
  while (pos < doc_text.size()) {
    while (pos < doc_text.size() && std::isspace(static_cast<unsigned char>(doc_text[pos]))) ++pos;
    if (pos >= doc_text.size()) break;
    std::size_t end = pos;
    while (end < doc_text.size() && !std::isspace(static_cast<unsigned char>(doc_text[end]))) ++end;
    tokens.push_back(doc_text.substr(pos, end - pos));
    pos = end;
  }
  std::vector<std::string> chunks;
  if (tokens.empty()) return chunks;

  const std::size_t stride = snippet_length - overlap;
  for (std::size_t start = 0;; start += stride) {
    std::size_t end = std::min(start + snippet_length, tokens.size());
    std::string chunk;
    for (std::size_t i = start; i < end; ++i) {
      if (i > start) chunk.push_back(' ');
      chunk.append(tokens[i]);
    }
    chunks.push_back(std::move(chunk));
    if (end == tokens.size()) break;
  }
  return chunks;
}

std::vector<CorpusDoc> load_corpus_jsonl(const std::filesystem::path& path) {
  std::string content = read_file(path);
  std::vector<CorpusDoc> docs;
  auto lines = split_lines(content);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string_view line = trim(lines[i]);
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw IoError(path.string() + ":" + std::to_string(i + 1) + ": " + e.what());
    }
    CorpusDoc doc;
    doc.doc_id = j.value("doc_id", "");
    if (doc.doc_id.empty()) {
      throw IoError(path.string() + ":" + std::to_string(i + 1) + ": missing doc_id");
    }
    auto source = parse_snippet_source(j.value("source", "other"));
    doc.source = source.value_or(SnippetSource::Other);
    doc.title = j.value("title", "");
    doc.text = j.value("text", "");
    docs.push_back(std::move(doc));
  }
  return docs;
}

VectorIndex build_index(std::span<const CorpusDoc> docs, const Embedder& embedder,
                        std::size_t snippet_length, std::size_t overlap, IngestStats* stats) {
  VectorIndex index(embedder.dimension());
  std::size_t total_snippets = 0;
  for (const auto& doc : docs) {
    auto chunks = chunk_document(doc.text, snippet_length, overlap);
    for (std::size_t ordinal = 0; ordinal < chunks.size(); ++ordinal) {
      Snippet s;
      s.snippet_id = doc.doc_id + "#" + std::to_string(ordinal);
      s.doc_id = doc.doc_id;
      s.source = doc.source;
      s.text = std::move(chunks[ordinal]);
      s.vector = embedder.embed(s.text);
      index.add(std::move(s));
      ++total_snippets;
    }
  }
  if (stats) {
    stats->docs = docs.size();
    stats->snippets = total_snippets;
    stats->dimension = embedder.dimension();
  }
  return index;
}

}  // namespace clara

#include "patent/embedding_cache.hpp"

#include <fcntl.h>
#include <openssl/evp.h>
#include <sys/stat.h>
#include <unistd.h>

#include <bit>
#include <cstring>
#include <mutex>
#include <vector>

#include <fmt/format.h>

#include "patent/error.hpp"

namespace patent {

namespace {

static_assert(std::endian::native == std::endian::little, "cache format assumes a little-endian host");

constexpr char kDataMagic[8] = {'P', 'E', 'M', 'B', '0', '0', '0', '1'};
constexpr char kIndexMagic[8] = {'P', 'I', 'D', 'X', '0', '0', '0', '1'};
constexpr std::size_t kDataHeader = 8 + 4;
constexpr std::size_t kRecordSize = 32 + kEmbeddingDim * sizeof(float);
constexpr std::size_t kIndexHeader = 8;
constexpr std::size_t kIndexRecord = 32 + 8;

std::filesystem::path data_path(const std::filesystem::path& dir) { return dir / "embeddings.bin"; }
std::filesystem::path index_path(const std::filesystem::path& dir) { return dir / "embeddings.idx"; }

void read_exact(int fd, void* buf, std::size_t n, std::uint64_t offset, const char* what) {
  auto* p = static_cast<char*>(buf);
  while (n > 0) {
    ssize_t got = ::pread(fd, p, n, static_cast<off_t>(offset));
    if (got <= 0) fail(ErrorKind::integrity, fmt::format("short read in embedding cache {}", what));
    p += got;
    n -= static_cast<std::size_t>(got);
    offset += static_cast<std::uint64_t>(got);
  }
}

void append_exact(int fd, const void* buf, std::size_t n) {
  auto* p = static_cast<const char*>(buf);
  while (n > 0) {
    ssize_t put = ::write(fd, p, n);
    if (put <= 0) fail(ErrorKind::io, "write to embedding cache failed");
    p += put;
    n -= static_cast<std::size_t>(put);
  }
}

std::uint64_t file_size(int fd) {
  struct stat st {};
  if (::fstat(fd, &st) != 0) fail(ErrorKind::io, "cannot stat embedding cache");
  return static_cast<std::uint64_t>(st.st_size);
}

int open_rw(const std::filesystem::path& path) {
  int fd = ::open(path.c_str(), O_RDWR | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) fail(ErrorKind::io, fmt::format("cannot open '{}'", path.string()));
  return fd;
}

void write_headers_if_new(int data_fd, int index_fd) {
  if (file_size(data_fd) == 0) {
    char header[kDataHeader];
    std::memcpy(header, kDataMagic, 8);
    std::uint32_t dim = kEmbeddingDim;
    std::memcpy(header + 8, &dim, 4);
    append_exact(data_fd, header, sizeof header);
  }
  if (file_size(index_fd) == 0) append_exact(index_fd, kIndexMagic, sizeof kIndexMagic);
}

}  // namespace

ContentHash content_hash(std::string_view text) {
  ContentHash out{};
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 || len != 32) {
    fail(ErrorKind::io, "SHA-256 computation failed");
  }
  return out;
}

std::string to_hex(const ContentHash& hash) {
  std::string s;
  for (auto b : hash) s += fmt::format("{:02x}", b);
  return s;
}

std::size_t ContentHashHasher::operator()(const ContentHash& h) const noexcept {
  std::size_t v;
  std::memcpy(&v, h.data(), sizeof v);
  return v;
}

EmbeddingCache::EmbeddingCache(std::filesystem::path directory) : directory_(std::move(directory)) {
  std::filesystem::create_directories(directory_);
  bool data_exists = std::filesystem::exists(data_path(directory_));
  bool index_exists = std::filesystem::exists(index_path(directory_));
  if (data_exists != index_exists) {
    fail(ErrorKind::integrity, fmt::format("embedding cache in '{}' has {} but no {}", directory_.string(),
                                           data_exists ? "data" : "index", data_exists ? "index" : "data"));
  }
  data_fd_ = open_rw(data_path(directory_));
  index_fd_ = open_rw(index_path(directory_));
  write_headers_if_new(data_fd_, index_fd_);
  load();
}

EmbeddingCache::~EmbeddingCache() {
  if (data_fd_ >= 0) ::close(data_fd_);
  if (index_fd_ >= 0) ::close(index_fd_);
}

void EmbeddingCache::load() {
  char magic[kDataHeader];
  read_exact(data_fd_, magic, kDataHeader, 0, "header");
  std::uint32_t dim = 0;
  std::memcpy(&dim, magic + 8, 4);
  if (std::memcmp(magic, kDataMagic, 8) != 0 || dim != kEmbeddingDim) {
    fail(ErrorKind::integrity, "embedding cache data file has a bad header");
  }
  std::uint64_t data_bytes = file_size(data_fd_) - kDataHeader;
  if (data_bytes % kRecordSize != 0) {
    fail(ErrorKind::integrity, fmt::format("embedding cache data length {} is not a whole number of {}-byte records",
                                           data_bytes, kRecordSize));
  }
  std::uint64_t records = data_bytes / kRecordSize;

  char imagic[kIndexHeader];
  read_exact(index_fd_, imagic, kIndexHeader, 0, "index header");
  if (std::memcmp(imagic, kIndexMagic, 8) != 0) fail(ErrorKind::integrity, "embedding cache index has a bad header");
  std::uint64_t index_bytes = file_size(index_fd_) - kIndexHeader;
  if (index_bytes % kIndexRecord != 0 || index_bytes / kIndexRecord != records) {
    fail(ErrorKind::integrity, fmt::format("embedding cache index ({} bytes) disagrees with {} data records",
                                           index_bytes, records));
  }
  std::vector<char> idx(index_bytes);
  if (!idx.empty()) read_exact(index_fd_, idx.data(), idx.size(), kIndexHeader, "index");
  index_.reserve(records);
  for (std::uint64_t i = 0; i < records; ++i) {
    ContentHash key{};
    std::uint64_t record = 0;
    std::memcpy(key.data(), idx.data() + i * kIndexRecord, 32);
    std::memcpy(&record, idx.data() + i * kIndexRecord + 32, 8);
    ContentHash stored{};
    if (record >= records) fail(ErrorKind::integrity, "embedding cache index points past the data file");
    read_exact(data_fd_, stored.data(), 32, kDataHeader + record * kRecordSize, "record key");
    if (stored != key) {
      fail(ErrorKind::integrity, fmt::format("embedding cache index entry {} does not match data record {}", i, record));
    }
    if (!index_.emplace(key, record).second) fail(ErrorKind::integrity, "embedding cache has a duplicate key");
  }
}

std::optional<Embedding> EmbeddingCache::find(const ContentHash& key) const {
  std::shared_lock lock(mutex_);
  auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  std::vector<float> values(kEmbeddingDim);
  read_exact(data_fd_, values.data(), kEmbeddingDim * sizeof(float),
             kDataHeader + it->second * kRecordSize + 32, "record values");
  try {
    return Embedding(std::move(values));
  } catch (const Error& e) {
    fail(ErrorKind::integrity, fmt::format("cached embedding {} is corrupt: {}", to_hex(key), e.what()));
  }
}

void EmbeddingCache::insert(const ContentHash& key, const Embedding& value) {
  std::unique_lock lock(mutex_);
  if (index_.contains(key)) return;
  std::uint64_t record = index_.size();
  std::vector<char> buf(kRecordSize);
  std::memcpy(buf.data(), key.data(), 32);
  std::memcpy(buf.data() + 32, value.values().data(), kEmbeddingDim * sizeof(float));
  append_exact(data_fd_, buf.data(), buf.size());
  char ibuf[kIndexRecord];
  std::memcpy(ibuf, key.data(), 32);
  std::memcpy(ibuf + 32, &record, 8);
  append_exact(index_fd_, ibuf, sizeof ibuf);
  index_.emplace(key, record);
}

std::size_t EmbeddingCache::size() const {
  std::shared_lock lock(mutex_);
  return index_.size();
}

void EmbeddingCache::rebuild_index(const std::filesystem::path& directory) {
  int data_fd = ::open(data_path(directory).c_str(), O_RDONLY | O_CLOEXEC);
  if (data_fd < 0) fail(ErrorKind::io, "cannot open embedding cache data file");
  std::uint64_t bytes = file_size(data_fd);
  std::uint64_t records = bytes < kDataHeader ? 0 : (bytes - kDataHeader) / kRecordSize;
  std::vector<char> out(kIndexMagic, kIndexMagic + 8);
  for (std::uint64_t r = 0; r < records; ++r) {
    char key[32];
    read_exact(data_fd, key, 32, kDataHeader + r * kRecordSize, "record key");
    out.insert(out.end(), key, key + 32);
    const char* rb = reinterpret_cast<const char*>(&r);
    out.insert(out.end(), rb, rb + 8);
  }
  ::close(data_fd);
  if (bytes > kDataHeader && (bytes - kDataHeader) % kRecordSize != 0) {
    std::filesystem::resize_file(data_path(directory), kDataHeader + records * kRecordSize);
  }
  int index_fd = ::open(index_path(directory).c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (index_fd < 0) fail(ErrorKind::io, "cannot write embedding cache index");
  append_exact(index_fd, out.data(), out.size());
  ::close(index_fd);
}

EmbedLookup get_or_embed(std::string_view text, EmbeddingCache& cache, EmbeddingProvider& provider) {
  ContentHash key = content_hash(text);
  if (auto hit = cache.find(key)) return {std::move(*hit), true};
  Embedding fresh = provider.embed(EmbedRequest(std::string(text)));
  cache.insert(key, fresh);
  return {std::move(fresh), false};
}

}  // namespace patent

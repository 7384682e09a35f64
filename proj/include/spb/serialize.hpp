#pragma once

// SPB1 container: "SPB1", u32 LE metadata length, UTF-8 JSON metadata,
// then the bit array as u64 LE words (bit 0 of word 0 = element 0).

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spb/intset.hpp"

namespace spb {

struct StoredSet {
  IntSet set;
  nlohmann::json metadata;
};

namespace detail {
inline void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
inline std::uint64_t get_le(const std::uint8_t* p, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= std::uint64_t{p[i]} << (8 * i);
  return v;
}
}  // namespace detail

/// `manifest` is embedded verbatim under "manifest"; keep it free of
/// timestamps so identical runs give identical bytes.
inline std::vector<std::uint8_t> serialize(const IntSet& A,
                                           const nlohmann::json& manifest = nlohmann::json::object()) {
  nlohmann::json meta = {{"capacity", A.capacity()}, {"count", A.size()}, {"manifest", manifest}};
  std::string text = meta.dump();
  std::vector<std::uint8_t> out;
  out.reserve(8 + text.size() + A.words().size() * 8);
  for (char ch : {'S', 'P', 'B', '1'}) out.push_back(static_cast<std::uint8_t>(ch));
  detail::put_le(out, text.size(), 4);
  out.insert(out.end(), text.begin(), text.end());
  for (auto w : A.words()) detail::put_le(out, w, 8);
  return out;
}

inline StoredSet deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), "SPB1", 4) != 0)
    throw format_error("SPB1: bad magic");
  std::uint64_t mlen = detail::get_le(bytes.data() + 4, 4);
  if (bytes.size() < 8 + mlen) throw format_error("SPB1: truncated metadata");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(mlen));
  } catch (const nlohmann::json::exception& e) {
    throw format_error(std::string("SPB1: bad metadata: ") + e.what());
  }
  if (!meta.contains("capacity") || !meta["capacity"].is_number_unsigned())
    throw format_error("SPB1: metadata lacks capacity");
  std::uint64_t capacity = meta["capacity"].get<std::uint64_t>();
  check_capacity(capacity);
  std::uint64_t nwords = bits::words_for(capacity);
  const std::uint8_t* p = bytes.data() + 8 + mlen;
  std::uint64_t rest = bytes.size() - 8 - mlen;
  if (rest != nwords * 8)
    throw format_error("SPB1: expected " + std::to_string(nwords * 8) + " payload bytes, got " +
                       std::to_string(rest));
  std::vector<std::uint64_t> words(nwords);
  for (std::uint64_t i = 0; i < nwords; ++i) words[i] = detail::get_le(p + 8 * i, 8);
  unsigned tail = static_cast<unsigned>((capacity & 63) + 1);
  if ((words.back() & ~bits::low_mask(tail)) != 0)
    throw format_error("SPB1: bits set beyond capacity");
  IntSet set(capacity, std::move(words));
  if (meta.contains("count") && meta["count"].get<std::uint64_t>() != set.size())
    throw format_error("SPB1: element count mismatch");
  return {std::move(set), std::move(meta)};
}

inline void write_set_file(const std::string& path, const IntSet& A,
                           const nlohmann::json& manifest = nlohmann::json::object()) {
  auto bytes = serialize(A, manifest);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw io_error("cannot open for writing: " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw io_error("write failed: " + path);
}

inline StoredSet read_set_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw io_error("cannot open for reading: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace spb

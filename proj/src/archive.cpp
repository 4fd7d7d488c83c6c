// Copyright 2026 The scholex Authors
// SPDX-License-Identifier: Apache-2.0

#include "scholex/archive.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstring>
#include <fstream>

#include "scholex/error.hpp"
#include "scholex/util.hpp"

namespace scholex::archive {
namespace {

[[noreturn]] void corrupt(const std::string& why) {
  throw Error(ErrorCode::CorruptArchive, why);
}

std::uint16_t le16(std::string_view b, std::size_t at) {
  if (at + 2 > b.size()) corrupt("read past end of archive");
  return static_cast<std::uint16_t>(static_cast<unsigned char>(b[at]) |
                                    (static_cast<unsigned char>(b[at + 1]) << 8));
}

std::uint32_t le32(std::string_view b, std::size_t at) {
  return static_cast<std::uint32_t>(le16(b, at)) |
         (static_cast<std::uint32_t>(le16(b, at + 2)) << 16);
}

std::uint64_t le64(std::string_view b, std::size_t at) {
  return static_cast<std::uint64_t>(le32(b, at)) |
         (static_cast<std::uint64_t>(le32(b, at + 4)) << 32);
}

struct Member {
  std::string path;
  std::string data;
};

void write_members(const std::vector<Member>& members,
                   const std::filesystem::path& dest) {
  for (const auto& m : members) {
    auto target = dest / m.path;
    std::filesystem::create_directories(target.parent_path());
    std::ofstream out(target, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + target.string());
    out.write(m.data.data(), static_cast<std::streamsize>(m.data.size()));
  }
}

std::string inflate_raw(std::string_view in, std::uint64_t expected) {
  z_stream zs{};
  if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) corrupt("inflateInit2 failed");
  std::string out;
  out.resize(static_cast<std::size_t>(expected));
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(in.data()));
  zs.avail_in = static_cast<uInt>(in.size());
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  int rc = inflate(&zs, Z_FINISH);
  std::uint64_t produced = zs.total_out;
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || produced != expected) corrupt("deflate stream damaged");
  return out;
}

struct ZipEntryInfo {
  std::string name;
  std::uint16_t method = 0;
  std::uint32_t crc = 0;
  std::uint64_t compressed = 0;
  std::uint64_t uncompressed = 0;
  std::uint64_t local_offset = 0;
  bool is_dir = false;
  bool is_link = false;
};

std::vector<ZipEntryInfo> read_central_directory(std::string_view b,
                                                 const Limits& limits) {
  if (b.size() < 22) corrupt("zip too short");
  std::size_t floor = b.size() > 65557 ? b.size() - 65557 : 0;
  std::size_t eocd = std::string_view::npos;
  for (std::size_t i = b.size() - 22 + 1; i-- > floor;) {
    if (le32(b, i) == 0x06054b50) {
      eocd = i;
      break;
    }
  }
  if (eocd == std::string_view::npos) corrupt("zip end-of-central-directory missing");

  std::uint64_t count = le16(b, eocd + 10);
  std::uint64_t cd_size = le32(b, eocd + 12);
  std::uint64_t cd_offset = le32(b, eocd + 16);
  if (eocd >= 20 && le32(b, eocd - 20) == 0x07064b50) {
    std::uint64_t z64 = le64(b, eocd - 20 + 8);
    if (z64 + 56 > b.size() || le32(b, z64) != 0x06064b50) corrupt("bad zip64 record");
    count = le64(b, z64 + 32);
    cd_size = le64(b, z64 + 40);
    cd_offset = le64(b, z64 + 48);
  }
  if (cd_offset + cd_size > b.size()) corrupt("central directory out of range");
  if (count > limits.max_entries) corrupt("too many zip entries");

  std::vector<ZipEntryInfo> entries;
  std::size_t p = cd_offset;
  for (std::uint64_t i = 0; i < count; ++i) {
    if (le32(b, p) != 0x02014b50) corrupt("bad central directory header");
    ZipEntryInfo e;
    std::uint16_t made_by = le16(b, p + 4);
    e.method = le16(b, p + 10);
    e.crc = le32(b, p + 16);
    e.compressed = le32(b, p + 20);
    e.uncompressed = le32(b, p + 24);
    std::uint16_t name_len = le16(b, p + 28);
    std::uint16_t extra_len = le16(b, p + 30);
    std::uint16_t comment_len = le16(b, p + 32);
    std::uint32_t external = le32(b, p + 38);
    e.local_offset = le32(b, p + 42);
    if (p + 46 + name_len + extra_len + comment_len > b.size()) corrupt("truncated entry");
    e.name.assign(b.substr(p + 46, name_len));
    // zip64 extended information
    std::size_t x = p + 46 + name_len;
    std::size_t x_end = x + extra_len;
    while (x + 4 <= x_end) {
      std::uint16_t id = le16(b, x);
      std::uint16_t len = le16(b, x + 2);
      if (id == 0x0001) {
        std::size_t q = x + 4;
        if (e.uncompressed == 0xFFFFFFFF) { e.uncompressed = le64(b, q); q += 8; }
        if (e.compressed == 0xFFFFFFFF) { e.compressed = le64(b, q); q += 8; }
        if (e.local_offset == 0xFFFFFFFF) { e.local_offset = le64(b, q); }
      }
      x += 4 + len;
    }
    e.is_dir = !e.name.empty() && e.name.back() == '/';
    if ((made_by >> 8) == 3) {  // unix attributes in the high half
      std::uint32_t mode = external >> 16;
      e.is_link = (mode & 0170000) == 0120000;
    }
    entries.push_back(std::move(e));
    p += 46 + name_len + extra_len + comment_len;
  }
  return entries;
}

std::vector<std::string> extract_zip(std::string_view b,
                                     const std::filesystem::path& dest,
                                     const Limits& limits) {
  auto entries = read_central_directory(b, limits);
  std::uint64_t total = 0;
  std::vector<std::pair<ZipEntryInfo, std::string>> plan;
  for (auto& e : entries) {
    auto safe = safe_relative_path(e.name);
    if (!safe) {
      throw Error(ErrorCode::UnsafeArchiveEntry, "unsafe archive entry: " + e.name);
    }
    if (e.is_dir || e.is_link || safe->empty()) continue;
    total += e.uncompressed;
    if (total > limits.max_total_bytes) corrupt("archive expands beyond size limit");
    plan.emplace_back(e, *safe);
  }

  std::vector<Member> members;
  for (auto& [e, path] : plan) {
    std::size_t lh = e.local_offset;
    if (le32(b, lh) != 0x04034b50) corrupt("bad local header for " + e.name);
    std::size_t data = lh + 30 + le16(b, lh + 26) + le16(b, lh + 28);
    if (data + e.compressed > b.size()) corrupt("truncated data for " + e.name);
    std::string_view raw = b.substr(data, e.compressed);
    std::string content;
    if (e.method == 0) {
      if (e.compressed != e.uncompressed) corrupt("stored size mismatch");
      content.assign(raw);
    } else if (e.method == 8) {
      content = inflate_raw(raw, e.uncompressed);
    } else {
      corrupt("unsupported zip compression method " + std::to_string(e.method));
    }
    auto crc = crc32(0L, reinterpret_cast<const Bytef*>(content.data()),
                     static_cast<uInt>(content.size()));
    if (crc != e.crc) corrupt("CRC mismatch for " + e.name);
    members.push_back({path, std::move(content)});
  }
  write_members(members, dest);
  std::vector<std::string> paths;
  for (auto& m : members) paths.push_back(m.path);
  return paths;
}

std::uint64_t tar_number(std::string_view field) {
  if (!field.empty() && (static_cast<unsigned char>(field[0]) & 0x80)) {
    std::uint64_t v = static_cast<unsigned char>(field[0]) & 0x7f;
    for (std::size_t i = 1; i < field.size(); ++i)
      v = (v << 8) | static_cast<unsigned char>(field[i]);
    return v;
  }
  std::uint64_t v = 0;
  for (char c : field) {
    if (c == '\0' || c == ' ') {
      if (v != 0) break;
      continue;
    }
    if (c < '0' || c > '7') corrupt("bad octal field in tar header");
    v = v * 8 + static_cast<std::uint64_t>(c - '0');
  }
  return v;
}

std::string tar_string(std::string_view field) {
  auto nul = field.find('\0');
  return std::string(field.substr(0, nul));
}

std::vector<std::string> extract_tar(std::string_view b,
                                     const std::filesystem::path& dest,
                                     const Limits& limits) {
  std::vector<Member> members;
  std::uint64_t total = 0;
  std::size_t p = 0;
  std::optional<std::string> long_name;
  bool saw_end = false;
  while (p + 512 <= b.size()) {
    std::string_view h = b.substr(p, 512);
    if (std::all_of(h.begin(), h.end(), [](char c) { return c == '\0'; })) {
      saw_end = true;
      break;
    }
    std::uint64_t stored_sum = tar_number(h.substr(148, 8));
    std::uint64_t sum = 0;
    for (std::size_t i = 0; i < 512; ++i) {
      sum += (i >= 148 && i < 156) ? 0x20 : static_cast<unsigned char>(h[i]);
    }
    if (sum != stored_sum) corrupt("tar header checksum mismatch");

    std::uint64_t size = tar_number(h.substr(124, 12));
    char type = h[156];
    std::string name = tar_string(h.substr(0, 100));
    if (h.substr(257, 5) == "ustar") {
      std::string prefix = tar_string(h.substr(345, 155));
      if (!prefix.empty()) name = prefix + "/" + name;
    }
    std::size_t data = p + 512;
    std::uint64_t padded = (size + 511) / 512 * 512;
    if (data + size > b.size()) corrupt("truncated tar member " + name);
    std::string_view content = b.substr(data, size);
    p = data + padded;

    if (type == 'L') {  // GNU long name for the next member
      long_name = tar_string(content);
      continue;
    }
    if (type == 'x') {  // pax extended header; only "path" is honored
      std::string_view records = content;
      while (!records.empty()) {
        auto space = records.find(' ');
        if (space == std::string_view::npos) break;
        std::size_t len = std::stoul(std::string(records.substr(0, space)));
        if (len == 0 || len > records.size()) corrupt("bad pax record");
        std::string_view kv = records.substr(space + 1, len - space - 2);
        if (kv.substr(0, 5) == "path=") long_name = std::string(kv.substr(5));
        records.remove_prefix(len);
      }
      continue;
    }
    if (type == 'g') continue;
    if (long_name) {
      name = *long_name;
      long_name.reset();
    }
    auto safe = safe_relative_path(name);
    if (!safe) throw Error(ErrorCode::UnsafeArchiveEntry, "unsafe archive entry: " + name);
    if (type != '0' && type != '\0' && type != '7') continue;  // dirs, links, devices
    if (safe->empty()) continue;
    total += size;
    if (total > limits.max_total_bytes) corrupt("archive expands beyond size limit");
    if (members.size() >= limits.max_entries) corrupt("too many tar entries");
    members.push_back({*safe, std::string(content)});
  }
  if (!saw_end && p < b.size()) corrupt("trailing garbage in tar stream");
  if (!saw_end && members.empty()) corrupt("empty or truncated tar stream");
  write_members(members, dest);
  std::vector<std::string> paths;
  for (auto& m : members) paths.push_back(m.path);
  return paths;
}

}  // namespace

std::optional<Format> detect(std::string_view filename, std::string_view bytes) {
  if (bytes.size() >= 4 && bytes.substr(0, 4) == std::string_view("PK\x03\x04", 4))
    return Format::Zip;
  if (bytes.size() >= 4 && bytes.substr(0, 4) == std::string_view("PK\x05\x06", 4))
    return Format::Zip;
  if (bytes.size() >= 2 && static_cast<unsigned char>(bytes[0]) == 0x1f &&
      static_cast<unsigned char>(bytes[1]) == 0x8b)
    return Format::TarGz;
  if (bytes.size() >= 262 && bytes.substr(257, 5) == "ustar") return Format::Tar;
  std::string lower = to_lower_ascii(filename);
  auto ends = [&](std::string_view s) {
    return lower.size() >= s.size() && lower.compare(lower.size() - s.size(), s.size(), s) == 0;
  };
  if (ends(".zip")) return Format::Zip;
  if (ends(".tar.gz") || ends(".tgz")) return Format::TarGz;
  if (ends(".tar")) return Format::Tar;
  return std::nullopt;
}

std::optional<std::string> safe_relative_path(std::string_view entry_name) {
  std::string name(entry_name);
  std::replace(name.begin(), name.end(), '\\', '/');
  if (name.empty()) return std::string{};
  if (name.front() == '/') return std::nullopt;
  if (name.size() >= 2 && name[1] == ':') return std::nullopt;
  std::string out;
  std::size_t start = 0;
  while (start <= name.size()) {
    auto slash = name.find('/', start);
    std::string part =
        name.substr(start, slash == std::string::npos ? std::string::npos : slash - start);
    if (part == "..") return std::nullopt;
    if (part.find('\0') != std::string::npos) return std::nullopt;
    if (!part.empty() && part != ".") {
      if (!out.empty()) out.push_back('/');
      out += part;
    }
    if (slash == std::string::npos) break;
    start = slash + 1;
  }
  return out;
}

std::string gunzip(std::string_view bytes, std::uint64_t max_bytes) {
  std::string out;
  z_stream zs{};
  if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) corrupt("inflateInit2 failed");
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(bytes.data()));
  zs.avail_in = static_cast<uInt>(bytes.size());
  char buffer[1 << 16];
  int rc = Z_OK;
  for (;;) {
    zs.next_out = reinterpret_cast<Bytef*>(buffer);
    zs.avail_out = sizeof buffer;
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) break;
    out.append(buffer, sizeof buffer - zs.avail_out);
    if (out.size() > max_bytes) {
      inflateEnd(&zs);
      corrupt("gzip stream expands beyond size limit");
    }
    if (rc == Z_STREAM_END) {
      if (zs.avail_in == 0) break;
      inflateReset(&zs);  // next gzip member
    }
  }
  inflateEnd(&zs);
  if (rc != Z_STREAM_END) corrupt("gzip stream truncated or damaged");
  return out;
}

std::vector<std::string> extract(std::string_view bytes, Format format,
                                 const std::filesystem::path& dest,
                                 const Limits& limits) {
  switch (format) {
    case Format::Zip:
      return extract_zip(bytes, dest, limits);
    case Format::TarGz: {
      std::string tar = gunzip(bytes, limits.max_total_bytes + (1u << 20));
      return extract_tar(tar, dest, limits);
    }
    case Format::Tar:
      return extract_tar(bytes, dest, limits);
  }
  corrupt("unknown archive format");
}

}  // namespace scholex::archive

#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include <zlib.h>

#include "edgeflow/errors.hpp"
#include "edgeflow/numfmt.hpp"
#include "edgeflow/workload.hpp"

namespace edgeflow {

// ---------------------------------------------------------------------------
// Batch encodings for sensor records. Six codecs: {json, binpack, delta},
// each with an optional raw-DEFLATE wrapper. All wire formats are
// little-endian and deterministic; decode(encode(b)) is field-exact,
// including float bit patterns.
// ---------------------------------------------------------------------------

struct Batch {
  std::string source_id;
  std::vector<Record> records;

  bool operator==(const Batch&) const = default;
};

enum class CodecBase : std::uint8_t { json = 0, binpack = 1, delta = 2 };

struct CodecId {
  CodecBase base = CodecBase::json;
  bool deflate = false;

  bool operator==(const CodecId&) const = default;
  // Tie-break order: json < json+deflate < binpack < ... < delta+deflate.
  int index() const { return static_cast<int>(base) * 2 + (deflate ? 1 : 0); }
  bool operator<(const CodecId& o) const { return index() < o.index(); }
};

inline std::vector<CodecId> all_codecs() {
  return {{CodecBase::json, false},    {CodecBase::json, true},
          {CodecBase::binpack, false}, {CodecBase::binpack, true},
          {CodecBase::delta, false},   {CodecBase::delta, true}};
}

inline std::string to_string(CodecId c) {
  std::string s;
  switch (c.base) {
    case CodecBase::json: s = "json"; break;
    case CodecBase::binpack: s = "binpack"; break;
    case CodecBase::delta: s = "delta"; break;
  }
  if (c.deflate) s += "+deflate";
  return s;
}

inline CodecId codec_from_string(const std::string& s) {
  for (CodecId c : all_codecs())
    if (to_string(c) == s) return c;
  throw ConfigError("unknown codec '" + s + "'");
}

struct EncodedBatch {
  CodecId codec;
  std::vector<std::uint8_t> payload;
  std::uint64_t record_count = 0;
  std::uint64_t raw_bytes = 0;  // canonical JSON size of the same batch
};

// Per-message CPU charge of the injected encoder components, by codec; the
// decoder side costs decoder_factor of the encoder. Defaults are placeholder
// calibration constants; a topology document may override them.
struct CodecCpuTable {
  double json = 0.00002;
  double binpack = 0.00005;
  double delta = 0.00012;
  double deflate_extra = 0.00030;
  double decoder_factor = 0.6;

  double encode_cost(CodecId c) const {
    double base = c.base == CodecBase::json      ? json
                  : c.base == CodecBase::binpack ? binpack
                                                 : delta;
    return base + (c.deflate ? deflate_extra : 0.0);
  }
  double decode_cost(CodecId c) const { return decoder_factor * encode_cost(c); }

  bool operator==(const CodecCpuTable&) const = default;
};

namespace wire {

// --- byte buffer helpers ---

inline void put_u16(std::vector<std::uint8_t>& b, std::uint16_t v) {
  b.push_back(v & 0xff);
  b.push_back((v >> 8) & 0xff);
}
inline void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back((v >> (8 * i)) & 0xff);
}
inline void put_u64(std::vector<std::uint8_t>& b, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) b.push_back((v >> (8 * i)) & 0xff);
}
inline void put_f64(std::vector<std::uint8_t>& b, double v) {
  put_u64(b, std::bit_cast<std::uint64_t>(v));
}
inline void put_varint(std::vector<std::uint8_t>& b, std::uint64_t v) {
  while (v >= 0x80) {
    b.push_back(static_cast<std::uint8_t>(v) | 0x80);
    v >>= 7;
  }
  b.push_back(static_cast<std::uint8_t>(v));
}
inline std::uint64_t zigzag(std::int64_t v) {
  return (static_cast<std::uint64_t>(v) << 1) ^ static_cast<std::uint64_t>(v >> 63);
}
inline std::int64_t unzigzag(std::uint64_t v) {
  return static_cast<std::int64_t>(v >> 1) ^ -static_cast<std::int64_t>(v & 1);
}

// Bounds-checked reader; every structural violation carries the offending
// byte offset.
class Reader {
 public:
  Reader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

  std::size_t offset() const { return pos_; }
  bool done() const { return pos_ == size_; }

  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>(data_[pos_]) |
                      static_cast<std::uint16_t>(data_[pos_ + 1]) << 8;
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::uint8_t u8() {
    need(1);
    return data_[pos_++];
  }
  std::uint64_t varint() {
    std::uint64_t v = 0;
    int shift = 0;
    while (true) {
      std::uint8_t byte = u8();
      if (shift >= 64) throw DecodeError("varint overflow", pos_);
      v |= static_cast<std::uint64_t>(byte & 0x7f) << shift;
      if (!(byte & 0x80)) return v;
      shift += 7;
    }
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
    pos_ += n;
    return s;
  }
  void expect_done() const {
    if (!done()) throw DecodeError("trailing bytes after payload", pos_);
  }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > size_) throw DecodeError("payload truncated", size_);
  }
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

// --- canonical JSON ---
// An array of {"t":...,"s":"...","v":...} objects in exactly that key order,
// no whitespace, t as a decimal integer, v in shortest round-trip form.
// NaN and infinities have no canonical JSON form and are an EncodeError.

inline void append_json_string(std::string& out, const std::string& s) {
  out += '"';
  for (unsigned char c : s) {
    if (c == '"') out += "\\\"";
    else if (c == '\\') out += "\\\\";
    else if (c < 0x20) {
      char buf[8];
      std::snprintf(buf, sizeof(buf), "\\u%04x", c);
      out += buf;
    } else {
      out += static_cast<char>(c);
    }
  }
  out += '"';
}

inline std::size_t json_string_size(const std::string& s) {
  std::size_t n = 2;
  for (unsigned char c : s) {
    if (c == '"' || c == '\\') n += 2;
    else if (c < 0x20) n += 6;
    else n += 1;
  }
  return n;
}

inline void append_json_record(std::string& out, const Record& r) {
  if (std::isnan(r.value) || std::isinf(r.value))
    throw EncodeError("canonical JSON cannot represent NaN or infinity");
  out += "{\"t\":";
  out += format_u64(r.timestamp_ms);
  out += ",\"s\":";
  append_json_string(out, r.sensor_id);
  out += ",\"v\":";
  out += format_double(r.value);
  out += '}';
}

inline std::string json_encode_batch(const Batch& batch) {
  std::string out = "[";
  for (std::size_t i = 0; i < batch.records.size(); ++i) {
    if (i) out += ',';
    append_json_record(out, batch.records[i]);
  }
  out += ']';
  return out;
}

// Size of json_encode_batch without materializing it.
inline std::uint64_t canonical_json_size(const Batch& batch) {
  std::uint64_t n = 2;  // brackets
  for (std::size_t i = 0; i < batch.records.size(); ++i) {
    const Record& r = batch.records[i];
    if (std::isnan(r.value) || std::isinf(r.value))
      throw EncodeError("canonical JSON cannot represent NaN or infinity");
    if (i) ++n;  // comma
    n += 5 + format_u64(r.timestamp_ms).size();   // {"t":...
    n += 5 + json_string_size(r.sensor_id);       // ,"s":"..."
    n += 5 + format_double(r.value).size();       // ,"v":...
    n += 1;                                       // }
  }
  return n;
}

inline std::uint64_t canonical_json_size(const Record& r) {
  if (std::isnan(r.value) || std::isinf(r.value))
    throw EncodeError("canonical JSON cannot represent NaN or infinity");
  return 16 + format_u64(r.timestamp_ms).size() + json_string_size(r.sensor_id) +
         format_double(r.value).size();
}

// Strict parser for the canonical form above. Payloads come from our own
// encoder, so anything outside the canonical subset is corruption.
class JsonParser {
 public:
  JsonParser(const std::uint8_t* data, std::size_t size)
      : text_(reinterpret_cast<const char*>(data)), size_(size) {}

  std::vector<Record> parse() {
    std::vector<Record> records;
    expect('[');
    if (peek() == ']') {
      ++pos_;
    } else {
      while (true) {
        records.push_back(parse_record());
        char c = take();
        if (c == ']') break;
        if (c != ',') fail("expected ',' or ']'");
      }
    }
    if (pos_ != size_) fail("trailing bytes");
    return records;
  }

 private:
  Record parse_record() {
    Record r;
    expect('{');
    expect_literal("\"t\":");
    r.timestamp_ms = parse_u64();
    expect_literal(",\"s\":");
    r.sensor_id = parse_string();
    expect_literal(",\"v\":");
    r.value = parse_double();
    expect('}');
    return r;
  }

  std::uint64_t parse_u64() {
    std::size_t start = pos_;
    while (pos_ < size_ && text_[pos_] >= '0' && text_[pos_] <= '9') ++pos_;
    std::uint64_t v;
    if (pos_ == start || !try_parse_u64({text_ + start, pos_ - start}, v))
      fail("bad integer");
    return v;
  }

  double parse_double() {
    std::size_t start = pos_;
    while (pos_ < size_) {
      char c = text_[pos_];
      if ((c >= '0' && c <= '9') || c == '-' || c == '+' || c == '.' || c == 'e' || c == 'E')
        ++pos_;
      else
        break;
    }
    double v;
    if (pos_ == start || !try_parse_double({text_ + start, pos_ - start}, v))
      fail("bad number");
    return v;
  }

  std::string parse_string() {
    expect('"');
    std::string out;
    while (true) {
      if (pos_ >= size_) fail("unterminated string");
      char c = text_[pos_++];
      if (c == '"') return out;
      if (c == '\\') {
        if (pos_ >= size_) fail("bad escape");
        char e = text_[pos_++];
        if (e == '"') out += '"';
        else if (e == '\\') out += '\\';
        else if (e == 'u') {
          if (pos_ + 4 > size_) fail("bad \\u escape");
          unsigned code = 0;
          for (int i = 0; i < 4; ++i) {
            char h = text_[pos_++];
            code <<= 4;
            if (h >= '0' && h <= '9') code += h - '0';
            else if (h >= 'a' && h <= 'f') code += h - 'a' + 10;
            else if (h >= 'A' && h <= 'F') code += h - 'A' + 10;
            else fail("bad \\u escape");
          }
          if (code > 0xff) fail("unexpected \\u escape range");
          out += static_cast<char>(code);
        } else {
          fail("unexpected escape");
        }
      } else {
        out += c;
      }
    }
  }

  char peek() {
    if (pos_ >= size_) fail("unexpected end");
    return text_[pos_];
  }
  char take() {
    if (pos_ >= size_) fail("unexpected end");
    return text_[pos_++];
  }
  void expect(char c) {
    if (take() != c) fail(std::string("expected '") + c + "'");
  }
  void expect_literal(const char* lit) {
    for (const char* p = lit; *p; ++p) expect(*p);
  }
  [[noreturn]] void fail(const std::string& msg) const { throw DecodeError(msg, pos_); }

  const char* text_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

// --- sensor-id dictionary (shared by binpack and delta) ---

struct Dictionary {
  std::vector<std::string> entries;           // first-appearance order
  std::vector<std::uint32_t> index_per_record;
};

inline Dictionary build_dictionary(const Batch& batch) {
  Dictionary d;
  for (const auto& r : batch.records) {
    std::uint32_t idx = 0;
    for (; idx < d.entries.size(); ++idx)
      if (d.entries[idx] == r.sensor_id) break;
    if (idx == d.entries.size()) d.entries.push_back(r.sensor_id);
    d.index_per_record.push_back(idx);
  }
  return d;
}

inline void put_header(std::vector<std::uint8_t>& out, const Batch& batch,
                       const Dictionary& dict) {
  put_u32(out, static_cast<std::uint32_t>(batch.records.size()));
  put_u16(out, static_cast<std::uint16_t>(dict.entries.size()));
  for (const auto& e : dict.entries) {
    put_u16(out, static_cast<std::uint16_t>(e.size()));
    out.insert(out.end(), e.begin(), e.end());
  }
}

struct Header {
  std::uint32_t count;
  std::vector<std::string> dict;
};

inline Header read_header(Reader& r) {
  Header h;
  h.count = r.u32();
  std::uint16_t dict_n = r.u16();
  for (std::uint16_t i = 0; i < dict_n; ++i) {
    std::uint16_t len = r.u16();
    h.dict.push_back(r.bytes(len));
  }
  return h;
}

// --- binpack ---
// Header, then count tuples of (timestamp u64, dict index u32, value bits f64).

inline std::vector<std::uint8_t> binpack_encode(const Batch& batch) {
  Dictionary dict = build_dictionary(batch);
  std::vector<std::uint8_t> out;
  put_header(out, batch, dict);
  for (std::size_t i = 0; i < batch.records.size(); ++i) {
    put_u64(out, batch.records[i].timestamp_ms);
    put_u32(out, dict.index_per_record[i]);
    put_f64(out, batch.records[i].value);
  }
  return out;
}

inline std::vector<Record> binpack_decode(const std::uint8_t* data, std::size_t size) {
  Reader r(data, size);
  Header h = read_header(r);
  std::vector<Record> records;
  records.reserve(h.count);
  for (std::uint32_t i = 0; i < h.count; ++i) {
    Record rec;
    rec.timestamp_ms = r.u64();
    std::uint32_t idx = r.u32();
    if (idx >= h.dict.size()) throw DecodeError("dictionary index out of range", r.offset());
    rec.sensor_id = h.dict[idx];
    rec.value = r.f64();
    records.push_back(std::move(rec));
  }
  r.expect_done();
  return records;
}

// --- delta ---
// Columnar: header, timestamp column (first value raw, then zigzag-varint
// deltas), run-length encoded dictionary indices, and XOR-compressed values
// (first raw, then per-record XOR of consecutive bit patterns stored as a
// nonzero-byte mask plus the surviving bytes).

inline std::vector<std::uint8_t> delta_encode(const Batch& batch) {
  Dictionary dict = build_dictionary(batch);
  std::vector<std::uint8_t> out;
  put_header(out, batch, dict);
  const auto& recs = batch.records;

  put_u64(out, recs[0].timestamp_ms);
  for (std::size_t i = 1; i < recs.size(); ++i) {
    std::int64_t d = static_cast<std::int64_t>(recs[i].timestamp_ms) -
                     static_cast<std::int64_t>(recs[i - 1].timestamp_ms);
    put_varint(out, zigzag(d));
  }

  std::vector<std::pair<std::uint32_t, std::uint32_t>> runs;
  for (std::uint32_t idx : dict.index_per_record) {
    if (!runs.empty() && runs.back().first == idx) ++runs.back().second;
    else runs.emplace_back(idx, 1);
  }
  put_u32(out, static_cast<std::uint32_t>(runs.size()));
  for (auto [idx, len] : runs) {
    put_u32(out, idx);
    put_u32(out, len);
  }

  put_f64(out, recs[0].value);
  std::uint64_t prev = std::bit_cast<std::uint64_t>(recs[0].value);
  for (std::size_t i = 1; i < recs.size(); ++i) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(recs[i].value);
    std::uint64_t x = bits ^ prev;
    prev = bits;
    std::uint8_t mask = 0;
    for (int b = 0; b < 8; ++b)
      if ((x >> (8 * b)) & 0xff) mask |= static_cast<std::uint8_t>(1u << b);
    out.push_back(mask);
    for (int b = 0; b < 8; ++b)
      if (mask & (1u << b)) out.push_back((x >> (8 * b)) & 0xff);
  }
  return out;
}

inline std::vector<Record> delta_decode(const std::uint8_t* data, std::size_t size) {
  Reader r(data, size);
  Header h = read_header(r);

  std::vector<std::uint64_t> timestamps;
  timestamps.reserve(h.count);
  if (h.count > 0) {
    timestamps.push_back(r.u64());
    for (std::uint32_t i = 1; i < h.count; ++i) {
      std::int64_t d = unzigzag(r.varint());
      timestamps.push_back(static_cast<std::uint64_t>(
          static_cast<std::int64_t>(timestamps.back()) + d));
    }
  }

  std::vector<std::uint32_t> indices;
  indices.reserve(h.count);
  std::uint32_t run_count = r.u32();
  for (std::uint32_t i = 0; i < run_count; ++i) {
    std::uint32_t idx = r.u32();
    std::uint32_t len = r.u32();
    if (idx >= h.dict.size()) throw DecodeError("dictionary index out of range", r.offset());
    for (std::uint32_t k = 0; k < len; ++k) indices.push_back(idx);
  }
  if (indices.size() != h.count) throw DecodeError("run lengths do not cover batch", r.offset());

  std::vector<Record> records;
  records.reserve(h.count);
  if (h.count > 0) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(r.f64());
    records.push_back({timestamps[0], h.dict[indices[0]], std::bit_cast<double>(bits)});
    for (std::uint32_t i = 1; i < h.count; ++i) {
      std::uint8_t mask = r.u8();
      std::uint64_t x = 0;
      for (int b = 0; b < 8; ++b)
        if (mask & (1u << b)) x |= static_cast<std::uint64_t>(r.u8()) << (8 * b);
      bits ^= x;
      records.push_back({timestamps[i], h.dict[indices[i]], std::bit_cast<double>(bits)});
    }
  }
  r.expect_done();
  return records;
}

// --- raw DEFLATE wrapper (RFC 1951) ---
// inflated-length u32, then the base payload as a raw deflate stream at a
// fixed level so byte output is stable run to run.

inline std::vector<std::uint8_t> deflate_wrap(const std::vector<std::uint8_t>& base) {
  std::vector<std::uint8_t> out;
  put_u32(out, static_cast<std::uint32_t>(base.size()));

  z_stream zs{};
  if (deflateInit2(&zs, 6, Z_DEFLATED, -15, 8, Z_DEFAULT_STRATEGY) != Z_OK)
    throw EncodeError("deflateInit2 failed");
  std::vector<std::uint8_t> buf(deflateBound(&zs, static_cast<uLong>(base.size())));
  zs.next_in = const_cast<Bytef*>(base.data());
  zs.avail_in = static_cast<uInt>(base.size());
  zs.next_out = buf.data();
  zs.avail_out = static_cast<uInt>(buf.size());
  int rc = deflate(&zs, Z_FINISH);
  if (rc != Z_STREAM_END) {
    deflateEnd(&zs);
    throw EncodeError("deflate failed");
  }
  buf.resize(zs.total_out);
  deflateEnd(&zs);
  out.insert(out.end(), buf.begin(), buf.end());
  return out;
}

inline std::vector<std::uint8_t> deflate_unwrap(const std::uint8_t* data, std::size_t size) {
  Reader r(data, size);
  std::uint32_t inflated_len = r.u32();
  std::vector<std::uint8_t> out(inflated_len);

  z_stream zs{};
  if (inflateInit2(&zs, -15) != Z_OK) throw DecodeError("inflateInit2 failed", 4);
  zs.next_in = const_cast<Bytef*>(data + 4);
  zs.avail_in = static_cast<uInt>(size - 4);
  zs.next_out = out.data();
  zs.avail_out = inflated_len;
  int rc = inflate(&zs, Z_FINISH);
  std::size_t consumed = 4 + zs.total_in;
  bool complete = rc == Z_STREAM_END && zs.total_out == inflated_len;
  inflateEnd(&zs);
  if (!complete) throw DecodeError("corrupt deflate stream", consumed);
  if (consumed != size) throw DecodeError("trailing bytes after deflate stream", consumed);
  return out;
}

}  // namespace wire

// --- public codec operations -------------------------------------------------

inline EncodedBatch encode(CodecId codec, const Batch& batch) {
  if (batch.records.empty()) throw EncodeError("cannot encode an empty batch");
  for (std::size_t i = 1; i < batch.records.size(); ++i)
    if (batch.records[i].timestamp_ms < batch.records[i - 1].timestamp_ms)
      throw EncodeError("batch timestamps must be nondecreasing");

  EncodedBatch out;
  out.codec = codec;
  out.record_count = batch.records.size();
  out.raw_bytes = wire::canonical_json_size(batch);

  std::vector<std::uint8_t> base;
  switch (codec.base) {
    case CodecBase::json: {
      std::string s = wire::json_encode_batch(batch);
      base.assign(s.begin(), s.end());
      break;
    }
    case CodecBase::binpack: base = wire::binpack_encode(batch); break;
    case CodecBase::delta: base = wire::delta_encode(batch); break;
  }
  out.payload = codec.deflate ? wire::deflate_wrap(base) : std::move(base);
  return out;
}

inline Batch decode(CodecId codec, const std::vector<std::uint8_t>& payload,
                    const std::string& source_id = "") {
  const std::uint8_t* data = payload.data();
  std::size_t size = payload.size();
  std::vector<std::uint8_t> inflated;
  if (codec.deflate) {
    inflated = wire::deflate_unwrap(data, size);
    data = inflated.data();
    size = inflated.size();
  }
  Batch batch;
  batch.source_id = source_id;
  switch (codec.base) {
    case CodecBase::json: batch.records = wire::JsonParser(data, size).parse(); break;
    case CodecBase::binpack: batch.records = wire::binpack_decode(data, size); break;
    case CodecBase::delta: batch.records = wire::delta_decode(data, size); break;
  }
  return batch;
}

// encoded size / canonical JSON size; the json codec is exactly 1.0 by
// definition.
inline double measure_ratio(CodecId codec, const Batch& batch) {
  EncodedBatch e = encode(codec, batch);
  return static_cast<double>(e.payload.size()) / static_cast<double>(e.raw_bytes);
}

}  // namespace edgeflow

#ifndef CHANADAPT_IO_HPP
#define CHANADAPT_IO_HPP

// File formats.
//
// EEGB signal (little-endian):
//   "EEGB" u16 version=1 u32 n_channels u32 n_samples f64 sfreq
//   n_channels x (u16 byte length, UTF-8 label)
//   n_channels x n_samples f32, channel-major
//
// EEGE epoch set (little-endian):
//   "EEGE" u16 version=1 u32 n_epochs
//   n_epochs x (u16 length + subject id, i32 class or -1, u32 byte length, EEGB record)
//
// Signal CSV: optional "# sfreq=<Hz>" line, header "label,s0,s1,...", one row per channel.
//
// Matrix CSV: '#'-prefixed header lines, then one row per target channel:
//   # chanadapt-matrix v1
//   # method=<name>
//   # source=<labels>
//   # target=<labels>
//   # bias=<values>           (learned projections only)
//   # meta.<key>=<value>      (sorted by key)
//   # hash=fnv1a64:<hex>      (over the shape and entries, see matrix_hash)
//
// Matrix binary: "CAMX" u16 version=1 u8 method u8 has_bias u32 rows u32 cols,
//   source and target labels (u32 count, u16 length + bytes each), metadata
//   (u32 count, u16 key length + key, u32 value length + value), rows*cols f64
//   row-major, rows f64 bias if present, u64 FNV-1a of every preceding byte.

#include <Eigen/Dense>

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "chanadapt/error.hpp"
#include "chanadapt/text.hpp"
#include "chanadapt/types.hpp"

namespace chanadapt {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace detail {

class ByteWriter {
 public:
  template <typename T>
  void put(T v) {
    char raw[sizeof(T)];
    std::memcpy(raw, &v, sizeof(T));
    buf_.append(raw, sizeof(T));
  }
  void put_bytes(std::string_view s) { buf_.append(s); }
  void put_str16(std::string_view s) {
    if (s.size() > 0xFFFF) fail(errc::format, "string too long for u16 length prefix");
    put<std::uint16_t>(static_cast<std::uint16_t>(s.size()));
    put_bytes(s);
  }
  void put_str32(std::string_view s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    put_bytes(s);
  }
  const std::string& bytes() const noexcept { return buf_; }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  ByteReader(std::string_view data, std::string what) : data_(data), what_(std::move(what)) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string_view get_bytes(std::size_t n) {
    need(n);
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::string get_str16() { return std::string(get_bytes(get<std::uint16_t>())); }
  std::string get_str32() { return std::string(get_bytes(get<std::uint32_t>())); }
  std::size_t position() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return data_.size() - pos_; }
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) fail(errc::format, what_ + ": truncated");
  }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
  std::string what_;
};

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace detail

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(errc::io, "cannot open '" + path + "'");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(errc::io, "cannot write '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(errc::io, "write to '" + path + "' failed");
}

// ---------------------------------------------------------------------------
// Signals

inline std::string encode_eegb(const Signal& x) {
  x.validate();
  detail::ByteWriter w;
  w.put_bytes("EEGB");
  w.put<std::uint16_t>(1);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(x.channels()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(x.samples()));
  w.put<double>(x.sfreq);
  for (const auto& l : x.labels) w.put_str16(l);
  for (Eigen::Index c = 0; c < x.channels(); ++c) {
    for (Eigen::Index t = 0; t < x.samples(); ++t) w.put<float>(static_cast<float>(x.data(c, t)));
  }
  return w.bytes();
}

inline Signal decode_eegb(detail::ByteReader& r) {
  if (r.get_bytes(4) != "EEGB") fail(errc::format, "not an EEGB signal (bad magic)");
  const auto version = r.get<std::uint16_t>();
  if (version != 1) fail(errc::format, "unsupported EEGB version " + std::to_string(version));
  const auto nc = r.get<std::uint32_t>();
  const auto ns = r.get<std::uint32_t>();
  Signal x;
  x.sfreq = r.get<double>();
  for (std::uint32_t c = 0; c < nc; ++c) x.labels.push_back(r.get_str16());
  r.need(static_cast<std::size_t>(nc) * ns * sizeof(float));
  x.data.resize(nc, ns);
  for (std::uint32_t c = 0; c < nc; ++c) {
    for (std::uint32_t t = 0; t < ns; ++t) x.data(c, t) = r.get<float>();
  }
  try {
    x.validate();
  } catch (const error& e) {
    throw error(errc::format, std::string("invalid EEGB content: ") + e.what());
  }
  return x;
}

inline Signal decode_eegb(std::string_view bytes) {
  detail::ByteReader r(bytes, "EEGB");
  auto x = decode_eegb(r);
  if (r.remaining() != 0) fail(errc::format, "EEGB: trailing bytes after payload");
  return x;
}

inline std::string encode_signal_csv(const Signal& x) {
  x.validate();
  std::ostringstream out;
  out << "# sfreq=" << text::format_double(x.sfreq) << "\nlabel";
  for (Eigen::Index t = 0; t < x.samples(); ++t) out << ",s" << t;
  out << '\n';
  for (Eigen::Index c = 0; c < x.channels(); ++c) {
    out << x.labels[static_cast<std::size_t>(c)];
    for (Eigen::Index t = 0; t < x.samples(); ++t) out << ',' << text::format_double(x.data(c, t));
    out << '\n';
  }
  return out.str();
}

/// `default_sfreq` applies when the file has no "# sfreq=" line.
inline Signal decode_signal_csv(std::string_view content, double default_sfreq = 0.0) {
  std::istringstream in{std::string(content)};
  std::string line;
  Signal x;
  x.sfreq = default_sfreq;
  bool header = false;
  std::vector<std::vector<double>> rows;
  std::size_t width = 0;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = text::trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      const auto body = text::trim(t.substr(1));
      if (text::starts_with(body, "sfreq=")) x.sfreq = text::parse_double(body.substr(6), "sfreq");
      continue;
    }
    const auto cols = text::split(t, ',');
    if (!header) {
      if (text::to_lower(text::trim(cols[0])) != "label") {
        fail(errc::parse, "signal CSV: expected header 'label,s0,s1,...'");
      }
      width = cols.size();
      header = true;
      continue;
    }
    if (cols.size() != width) {
      fail(errc::parse, "signal CSV line " + std::to_string(lineno) + ": expected " + std::to_string(width) +
                            " columns, got " + std::to_string(cols.size()));
    }
    x.labels.emplace_back(text::trim(cols[0]));
    std::vector<double> v;
    for (std::size_t i = 1; i < cols.size(); ++i) v.push_back(text::parse_double(cols[i], "sample"));
    rows.push_back(std::move(v));
  }
  if (!header) fail(errc::parse, "signal CSV: missing header");
  x.data.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width - 1));
  for (std::size_t c = 0; c < rows.size(); ++c) {
    for (std::size_t s = 0; s < rows[c].size(); ++s) x.data(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(s)) = rows[c][s];
  }
  x.validate();
  return x;
}

/// Binary when the file starts with the EEGB magic, CSV otherwise.
inline Signal load_signal(const std::string& path, double default_sfreq = 0.0) {
  const auto bytes = read_file(path);
  if (bytes.substr(0, 4) == "EEGB") return decode_eegb(bytes);
  return decode_signal_csv(bytes, default_sfreq);
}

enum class FileFormat { csv, binary };

inline FileFormat file_format_from_string(std::string_view s) {
  if (s == "csv") return FileFormat::csv;
  if (s == "binary") return FileFormat::binary;
  fail(errc::config, "unknown format '" + std::string(s) + "'");
}

inline void save_signal(const Signal& x, const std::string& path, FileFormat fmt) {
  write_file(path, fmt == FileFormat::binary ? encode_eegb(x) : encode_signal_csv(x));
}

// ---------------------------------------------------------------------------
// Epoch sets

inline std::string encode_epochs(const EpochSet& set) {
  set.validate();
  detail::ByteWriter w;
  w.put_bytes("EEGE");
  w.put<std::uint16_t>(1);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(set.size()));
  for (std::size_t i = 0; i < set.size(); ++i) {
    w.put_str16(set.subject_ids[i]);
    w.put<std::int32_t>(set.labeled() ? set.classes[i] : -1);
    const auto rec = encode_eegb(set.epochs[i]);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(rec.size()));
    w.put_bytes(rec);
  }
  return w.bytes();
}

inline EpochSet decode_epochs(std::string_view bytes) {
  detail::ByteReader r(bytes, "EEGE");
  if (r.get_bytes(4) != "EEGE") fail(errc::format, "not an EEGE epoch set (bad magic)");
  const auto version = r.get<std::uint16_t>();
  if (version != 1) fail(errc::format, "unsupported EEGE version " + std::to_string(version));
  const auto n = r.get<std::uint32_t>();
  EpochSet set;
  bool any_class = false;
  std::vector<int> classes;
  for (std::uint32_t i = 0; i < n; ++i) {
    set.subject_ids.push_back(r.get_str16());
    classes.push_back(r.get<std::int32_t>());
    any_class |= classes.back() >= 0;
    const auto len = r.get<std::uint32_t>();
    set.epochs.push_back(decode_eegb(r.get_bytes(len)));
  }
  if (r.remaining() != 0) fail(errc::format, "EEGE: trailing bytes after payload");
  if (any_class) set.classes = std::move(classes);
  set.validate();
  return set;
}

inline EpochSet load_epochs(const std::string& path) { return decode_epochs(read_file(path)); }

// ---------------------------------------------------------------------------
// Adaptation matrices

/// FNV-1a over u32 rows, u32 cols, the row-major f64 entries and the bias.
inline std::uint64_t matrix_hash(const AdaptationMatrix& m) {
  detail::ByteWriter w;
  w.put<std::uint32_t>(static_cast<std::uint32_t>(m.rows()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) w.put<double>(m.matrix(i, j));
  }
  if (m.bias) {
    for (Eigen::Index i = 0; i < m.bias->size(); ++i) w.put<double>((*m.bias)(i));
  }
  return fnv1a64(w.bytes());
}

inline std::string encode_matrix_csv(const AdaptationMatrix& m) {
  m.validate();
  std::ostringstream out;
  out << "# chanadapt-matrix v1\n";
  out << "# method=" << to_string(m.method) << '\n';
  out << "# source=" << text::join(m.source_labels, ",") << '\n';
  out << "# target=" << text::join(m.target_labels, ",") << '\n';
  if (m.bias) {
    std::vector<std::string> b;
    for (Eigen::Index i = 0; i < m.bias->size(); ++i) b.push_back(text::format_double((*m.bias)(i)));
    out << "# bias=" << text::join(b, ",") << '\n';
  }
  for (const auto& [k, v] : m.metadata) {
    if (k.find('=') != std::string::npos || k.find('\n') != std::string::npos || v.find('\n') != std::string::npos) {
      fail(errc::format, "metadata entry '" + k + "' cannot be written to CSV");
    }
    out << "# meta." << k << '=' << v << '\n';
  }
  out << "# hash=fnv1a64:" << detail::hex64(matrix_hash(m)) << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << text::format_double(m.matrix(i, j));
    }
    out << '\n';
  }
  return out.str();
}

inline AdaptationMatrix decode_matrix_csv(std::string_view content) {
  std::istringstream in{std::string(content)};
  std::string line;
  AdaptationMatrix m;
  bool magic = false, have_method = false, have_source = false, have_target = false;
  std::string hash;
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = text::trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      const auto body = text::trim(t.substr(1));
      if (body == "chanadapt-matrix v1") {
        magic = true;
        continue;
      }
      const auto eq = body.find('=');
      if (eq == std::string_view::npos) continue;
      const auto key = body.substr(0, eq);
      const auto value = body.substr(eq + 1);
      auto labels = [&] { return value.empty() ? std::vector<std::string>{} : text::split(value, ','); };
      if (key == "method") {
        m.method = method_from_string(value);
        have_method = true;
      } else if (key == "source") {
        m.source_labels = labels();
        have_source = true;
      } else if (key == "target") {
        m.target_labels = labels();
        have_target = true;
      } else if (key == "bias") {
        const auto parts = labels();
        Eigen::VectorXd b(static_cast<Eigen::Index>(parts.size()));
        for (std::size_t i = 0; i < parts.size(); ++i) b(static_cast<Eigen::Index>(i)) = text::parse_double(parts[i], "bias");
        m.bias = b;
      } else if (text::starts_with(key, "meta.")) {
        m.metadata[std::string(key.substr(5))] = std::string(value);
      } else if (key == "hash") {
        hash = std::string(value);
      }
      continue;
    }
    std::vector<double> row;
    for (const auto& c : text::split(t, ',')) row.push_back(text::parse_double(c, "matrix entry"));
    rows.push_back(std::move(row));
  }
  if (!magic || !have_method || !have_source || !have_target) {
    fail(errc::format, "matrix CSV: missing header lines");
  }
  if (hash.empty()) fail(errc::format, "matrix CSV: missing hash line");
  const auto nr = m.target_labels.size();
  const auto nc = m.source_labels.size();
  if (rows.size() != nr) {
    fail(errc::format, "matrix CSV: expected " + std::to_string(nr) + " rows, found " + std::to_string(rows.size()));
  }
  m.matrix.resize(static_cast<Eigen::Index>(nr), static_cast<Eigen::Index>(nc));
  for (std::size_t i = 0; i < nr; ++i) {
    if (rows[i].size() != nc) fail(errc::format, "matrix CSV: row " + std::to_string(i) + " has wrong width");
    for (std::size_t j = 0; j < nc; ++j) m.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  try {
    m.validate();
  } catch (const error& e) {
    throw error(errc::format, std::string("matrix CSV: ") + e.what());
  }
  if (hash != "fnv1a64:" + detail::hex64(matrix_hash(m))) fail(errc::format, "matrix CSV: checksum mismatch");
  return m;
}

inline std::string encode_matrix_binary(const AdaptationMatrix& m) {
  m.validate();
  detail::ByteWriter w;
  w.put_bytes("CAMX");
  w.put<std::uint16_t>(1);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(m.method));
  w.put<std::uint8_t>(m.bias ? 1 : 0);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(m.rows()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(m.cols()));
  for (const auto* labels : {&m.source_labels, &m.target_labels}) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(labels->size()));
    for (const auto& l : *labels) w.put_str16(l);
  }
  w.put<std::uint32_t>(static_cast<std::uint32_t>(m.metadata.size()));
  for (const auto& [k, v] : m.metadata) {
    w.put_str16(k);
    w.put_str32(v);
  }
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) w.put<double>(m.matrix(i, j));
  }
  if (m.bias) {
    for (Eigen::Index i = 0; i < m.bias->size(); ++i) w.put<double>((*m.bias)(i));
  }
  const auto checksum = fnv1a64(w.bytes());
  w.put<std::uint64_t>(checksum);
  return w.bytes();
}

inline AdaptationMatrix decode_matrix_binary(std::string_view bytes) {
  if (bytes.size() < 4 + 8) fail(errc::format, "matrix binary: truncated");
  const auto body = bytes.substr(0, bytes.size() - 8);
  std::uint64_t stored;
  std::memcpy(&stored, bytes.data() + body.size(), 8);
  detail::ByteReader r(body, "matrix binary");
  if (r.get_bytes(4) != "CAMX") fail(errc::format, "matrix binary: bad magic");
  if (stored != fnv1a64(body)) fail(errc::format, "matrix binary: checksum mismatch (corrupt or truncated)");
  const auto version = r.get<std::uint16_t>();
  if (version != 1) fail(errc::format, "matrix binary: unsupported version " + std::to_string(version));
  AdaptationMatrix m;
  const auto method = r.get<std::uint8_t>();
  if (method > static_cast<std::uint8_t>(Method::identity)) fail(errc::format, "matrix binary: bad method tag");
  m.method = static_cast<Method>(method);
  const bool has_bias = r.get<std::uint8_t>() != 0;
  const auto nr = r.get<std::uint32_t>();
  const auto nc = r.get<std::uint32_t>();
  for (auto* labels : {&m.source_labels, &m.target_labels}) {
    const auto n = r.get<std::uint32_t>();
    for (std::uint32_t i = 0; i < n; ++i) labels->push_back(r.get_str16());
  }
  const auto nmeta = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < nmeta; ++i) {
    auto k = r.get_str16();
    m.metadata[k] = r.get_str32();
  }
  r.need(static_cast<std::size_t>(nr) * nc * sizeof(double));
  m.matrix.resize(nr, nc);
  for (std::uint32_t i = 0; i < nr; ++i) {
    for (std::uint32_t j = 0; j < nc; ++j) m.matrix(i, j) = r.get<double>();
  }
  if (has_bias) {
    Eigen::VectorXd b(nr);
    for (std::uint32_t i = 0; i < nr; ++i) b(i) = r.get<double>();
    m.bias = b;
  }
  if (r.remaining() != 0) fail(errc::format, "matrix binary: trailing bytes");
  try {
    m.validate();
  } catch (const error& e) {
    throw error(errc::format, std::string("matrix binary: ") + e.what());
  }
  return m;
}

inline AdaptationMatrix decode_matrix(std::string_view bytes) {
  if (bytes.substr(0, 4) == "CAMX") return decode_matrix_binary(bytes);
  return decode_matrix_csv(bytes);
}

inline void save_matrix(const AdaptationMatrix& m, const std::string& path, FileFormat fmt = FileFormat::csv) {
  write_file(path, fmt == FileFormat::binary ? encode_matrix_binary(m) : encode_matrix_csv(m));
}

inline AdaptationMatrix load_matrix(const std::string& path) { return decode_matrix(read_file(path)); }

}  // namespace chanadapt

#endif  // CHANADAPT_IO_HPP

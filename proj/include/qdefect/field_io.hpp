#pragma once

// Snapshot files:
//   "QFLD" | u32 version = 1 | u32 N | N^3 x 5 f64 coefficients | N^3 u8 roles
//   optional trailer: "QCKP" | u64 length | JSON text (checkpoint state)
// All integers and floats little-endian. Exterior coefficients are zero.

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qdefect/field.hpp"

namespace qdefect {

static_assert(std::endian::native == std::endian::little, "snapshot I/O assumes a little-endian host");

inline constexpr std::uint32_t kSnapshotVersion = 1;

struct Snapshot {
  QField field;
  std::optional<nlohmann::json> checkpoint;
};

namespace detail {

template <class T>
void put(std::string& buf, T v) {
  char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  buf.append(b, sizeof(T));
}

template <class T>
T take(const std::string& buf, std::size_t& pos) {
  if (pos + sizeof(T) > buf.size()) throw Error(ErrorCode::CorruptSnapshot, "truncated snapshot");
  T v;
  std::memcpy(&v, buf.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace detail

inline std::string encode_snapshot(const QField& f, const std::optional<nlohmann::json>& checkpoint = std::nullopt) {
  std::string buf;
  buf.reserve(12 + f.size() * 41);
  buf.append("QFLD", 4);
  detail::put<std::uint32_t>(buf, kSnapshotVersion);
  detail::put<std::uint32_t>(buf, static_cast<std::uint32_t>(f.spec().N));
  for (std::size_t i = 0; i < f.size(); ++i) {
    const bool ext = f.role(i) == NodeRole::exterior;
    for (int a = 0; a < 5; ++a) detail::put<double>(buf, ext ? 0.0 : f[i][a]);
  }
  for (std::size_t i = 0; i < f.size(); ++i) detail::put<std::uint8_t>(buf, static_cast<std::uint8_t>(f.role(i)));
  if (checkpoint) {
    const std::string text = checkpoint->dump();
    buf.append("QCKP", 4);
    detail::put<std::uint64_t>(buf, text.size());
    buf += text;
  }
  return buf;
}

inline Snapshot decode_snapshot(const std::string& buf) {
  std::size_t pos = 0;
  if (buf.size() < 12 || buf.compare(0, 4, "QFLD") != 0) {
    throw Error(ErrorCode::CorruptSnapshot, "bad magic");
  }
  pos = 4;
  if (detail::take<std::uint32_t>(buf, pos) != kSnapshotVersion) {
    throw Error(ErrorCode::CorruptSnapshot, "unsupported version");
  }
  const auto n = detail::take<std::uint32_t>(buf, pos);
  if (n < 9 || n % 2 == 0 || n > 4097) throw Error(ErrorCode::CorruptSnapshot, "invalid grid size");
  Snapshot snap{QField(GridSpec(static_cast<int>(n))), std::nullopt};
  QField& f = snap.field;
  if (buf.size() < pos + f.size() * 41) throw Error(ErrorCode::CorruptSnapshot, "truncated snapshot");
  for (std::size_t i = 0; i < f.size(); ++i) {
    for (int a = 0; a < 5; ++a) f[i][a] = detail::take<double>(buf, pos);
  }
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (detail::take<std::uint8_t>(buf, pos) != static_cast<std::uint8_t>(f.role(i))) {
      throw Error(ErrorCode::CorruptSnapshot, "role tags do not match the grid mask");
    }
  }
  if (pos == buf.size()) return snap;
  if (buf.compare(pos, 4, "QCKP") != 0) throw Error(ErrorCode::CorruptSnapshot, "unexpected trailing data");
  pos += 4;
  const auto len = detail::take<std::uint64_t>(buf, pos);
  if (pos + len != buf.size()) throw Error(ErrorCode::CorruptSnapshot, "checkpoint length mismatch");
  try {
    snap.checkpoint = nlohmann::json::parse(buf.substr(pos));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptSnapshot, std::string("checkpoint JSON: ") + e.what());
  }
  return snap;
}

inline void write_file(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path + " for writing");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void save_snapshot(const QField& f, const std::string& path,
                          const std::optional<nlohmann::json>& checkpoint = std::nullopt) {
  write_file(path, encode_snapshot(f, checkpoint));
}

inline Snapshot load_snapshot(const std::string& path) { return decode_snapshot(read_file(path)); }

/// VTK legacy STRUCTURED_POINTS, ASCII; x varies fastest. Exterior nodes are 0.
inline void write_vtk(const ScalarField& s, const std::string& name, const std::string& path) {
  const GridSpec& g = s.spec;
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path + " for writing");
  out << "# vtk DataFile Version 3.0\n" << name << "\n" << "ASCII\nDATASET STRUCTURED_POINTS\n";
  out << "DIMENSIONS " << g.N << ' ' << g.N << ' ' << g.N << "\n";
  out << "ORIGIN -1 -1 -1\n" << std::setprecision(17) << "SPACING " << g.h() << ' ' << g.h() << ' ' << g.h() << "\n";
  out << "POINT_DATA " << g.size() << "\nSCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
  for (int k = 0; k < g.N; ++k)
    for (int j = 0; j < g.N; ++j)
      for (int i = 0; i < g.N; ++i) {
        const std::size_t idx = g.index(i, j, k);
        out << (s.roles[idx] == NodeRole::exterior ? 0.0 : s.values[idx]) << '\n';
      }
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path);
}

}  // namespace qdefect

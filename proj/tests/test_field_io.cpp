#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "oracles.hpp"

using namespace qdefect;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / "qdefect_io_test";
  fs::create_directories(d);
  return d / name;
}

ErrorCode code_of(const std::string& buf) {
  try {
    decode_snapshot(buf);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(Snapshot, RoundTripIsBitExact) {
  HedgehogInit init;
  init.rule = InitRule::random_tangent;
  const QField f = hedgehog_boundary(GridSpec(17), init);
  const Snapshot s = decode_snapshot(encode_snapshot(f));
  ASSERT_EQ(s.field.spec().N, 17);
  EXPECT_EQ(s.field.values(), f.values());
  EXPECT_FALSE(s.checkpoint.has_value());
}

TEST(Snapshot, CheckpointTrailer) {
  const QField f = uniform_field(GridSpec(9), Vec3::UnitX());
  const nlohmann::json ck{{"state", {{"iteration", 12}}}};
  const Snapshot s = decode_snapshot(encode_snapshot(f, std::optional<nlohmann::json>(ck)));
  ASSERT_TRUE(s.checkpoint.has_value());
  EXPECT_EQ(*s.checkpoint, ck);
}

TEST(Snapshot, CorruptionIsDetected) {
  const QField f = uniform_field(GridSpec(9), Vec3::UnitX());
  const std::string good = encode_snapshot(f);
  std::string bad = good;
  bad[0] = 'X';
  EXPECT_EQ(code_of(bad), ErrorCode::CorruptSnapshot);
  EXPECT_EQ(code_of(good.substr(0, good.size() - 3)), ErrorCode::CorruptSnapshot);
  EXPECT_EQ(code_of(good + "junk"), ErrorCode::CorruptSnapshot);
  bad = good;
  bad[bad.size() - 1] = 7;  // role tag of the last node
  EXPECT_EQ(code_of(bad), ErrorCode::CorruptSnapshot);
  bad = good;
  bad[4] = 2;  // version
  EXPECT_EQ(code_of(bad), ErrorCode::CorruptSnapshot);
  const std::string withck = encode_snapshot(f, std::optional<nlohmann::json>(nlohmann::json{{"a", 1}}));
  EXPECT_EQ(code_of(withck.substr(0, withck.size() - 1)), ErrorCode::CorruptSnapshot);
}

TEST(Snapshot, ExteriorStoredAsZero) {
  QField f = uniform_field(GridSpec(9), Vec3::UnitX());
  f[0] = make_uniaxial(Vec3::UnitZ(), Uniaxial::positive);  // a corner is exterior
  ASSERT_EQ(f.role(0), NodeRole::exterior);
  EXPECT_EQ(decode_snapshot(encode_snapshot(f)).field[0].norm(), 0.0);
}

TEST(Snapshot, FileIo) {
  const QField f = hedgehog_boundary(GridSpec(9));
  const std::string path = scratch("f.qfld").string();
  save_snapshot(f, path);
  EXPECT_EQ(load_snapshot(path).field.values(), f.values());
  try {
    load_snapshot(scratch("missing.qfld").string());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Io);
  }
}

TEST(Vtk, HeaderAndValueCount) {
  const GridSpec g(9);
  ScalarField s{g, std::vector<double>(g.size(), 0.5), QField(g).roles()};
  const std::string path = scratch("s.vtk").string();
  write_vtk(s, "beta", path);
  std::ifstream in(path);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 10 + g.size());
  EXPECT_EQ(lines[0], "# vtk DataFile Version 3.0");
  EXPECT_EQ(lines[3], "DATASET STRUCTURED_POINTS");
  EXPECT_EQ(lines[4], "DIMENSIONS 9 9 9");
  EXPECT_EQ(lines[7], "POINT_DATA 729");
  EXPECT_EQ(lines[10], "0");           // exterior corner
  EXPECT_EQ(lines[10 + 364], "0.5");   // centre node
}
